//! Bit-packed fitting matrix and the exhaustive reference evaluator.
//!
//! Entry `(p, b)` lives in word `p * stride + b / 64` at bit `b % 64`,
//! least-significant bit first. Padding bits past the last column are
//! always zero.
//!
//! On disk:
//!
//! ```text
//! "BOXF" | version: u32 = 1 | rows: u64 | cols: u64 | stride: u64 | rows * stride words
//! ```
//!
//! with every integer little-endian.

use std::io::{Read, Write};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binpack::FitOracle;
use crate::error::{Error, Result};
use crate::model::{BoxFormat, PackingUnit};

pub const MAGIC: &[u8; 4] = b"BOXF";
pub const VERSION: u32 = 1;
const HEADER_LEN: u64 = 4 + 4 + 8 + 8 + 8;

pub(crate) fn words_for(bits: usize) -> usize {
    bits.div_ceil(64)
}

/// A fixed-length bitset with the same word layout as one matrix row.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BitSet {
    len: usize,
    words: Vec<u64>,
}

impl BitSet {
    pub fn new(len: usize) -> Self {
        BitSet {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn from_indices(len: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut s = BitSet::new(len);
        for i in indices {
            s.insert(i);
        }
        s
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Panics when `i >= len`.
    pub fn contains(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn insert(&mut self, i: usize) {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn remove(&mut self, i: usize) {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        self.words[i / 64] &= !(1 << (i % 64));
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter_ones(&self) -> Ones<'_> {
        Ones::new(&self.words)
    }
}

/// Set bits of a word slice in increasing order.
pub struct Ones<'a> {
    words: &'a [u64],
    idx: usize,
    current: u64,
}

impl<'a> Ones<'a> {
    pub fn new(words: &'a [u64]) -> Self {
        Ones {
            words,
            idx: 0,
            current: words.first().copied().unwrap_or(0),
        }
    }
}

impl Iterator for Ones<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        while self.current == 0 {
            self.idx += 1;
            if self.idx >= self.words.len() {
                return None;
            }
            self.current = self.words[self.idx];
        }
        let bit = self.current.trailing_zeros() as usize;
        self.current &= self.current - 1;
        Some(self.idx * 64 + bit)
    }
}

/// Row-major bit matrix; rows are packing units, columns boxes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    words: Vec<u64>,
}

impl BitMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        BitMatrix {
            rows,
            cols,
            stride,
            words: vec![0; rows * stride],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Words per row.
    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Heap bytes held by the packed words.
    pub fn memory_bytes(&self) -> usize {
        self.words.len() * std::mem::size_of::<u64>()
    }

    fn check(&self, p: usize, b: usize) -> Result<()> {
        if p >= self.rows {
            return Err(Error::Index { index: p, bound: self.rows });
        }
        if b >= self.cols {
            return Err(Error::Index { index: b, bound: self.cols });
        }
        Ok(())
    }

    pub fn get(&self, p: usize, b: usize) -> Result<bool> {
        self.check(p, b)?;
        Ok(self.words[p * self.stride + b / 64] >> (b % 64) & 1 == 1)
    }

    pub fn set(&mut self, p: usize, b: usize, value: bool) -> Result<()> {
        self.check(p, b)?;
        let word = &mut self.words[p * self.stride + b / 64];
        if value {
            *word |= 1 << (b % 64);
        } else {
            *word &= !(1 << (b % 64));
        }
        Ok(())
    }

    pub fn row(&self, p: usize) -> &[u64] {
        &self.words[p * self.stride..(p + 1) * self.stride]
    }

    pub fn row_mut(&mut self, p: usize) -> &mut [u64] {
        &mut self.words[p * self.stride..(p + 1) * self.stride]
    }

    /// Columns set in row `p`, ascending.
    pub fn row_ones(&self, p: usize) -> Ones<'_> {
        Ones::new(self.row(p))
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Mutable rows for single-writer parallel filling.
    pub fn par_rows_mut(&mut self) -> rayon::slice::ChunksMut<'_, u64> {
        self.words.par_chunks_mut(self.stride.max(1))
    }

    pub fn serialize<W: Write>(&self, mut sink: W) -> Result<()> {
        sink.write_all(MAGIC)?;
        sink.write_all(&VERSION.to_le_bytes())?;
        sink.write_all(&(self.rows as u64).to_le_bytes())?;
        sink.write_all(&(self.cols as u64).to_le_bytes())?;
        sink.write_all(&(self.stride as u64).to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.stride * 8);
        for row in self.words.chunks(self.stride.max(1)) {
            buf.clear();
            for w in row {
                buf.extend_from_slice(&w.to_le_bytes());
            }
            sink.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn deserialize<R: Read>(mut source: R) -> Result<Self> {
        let mut header = [0u8; HEADER_LEN as usize];
        let got = read_full(&mut source, &mut header)?;
        if got < 4 {
            return Err(truncated(got as u64, "magic"));
        }
        if &header[..4] != MAGIC {
            return Err(Error::Format {
                offset: 0,
                message: "bad magic".into(),
            });
        }
        if got < HEADER_LEN as usize {
            return Err(truncated(got as u64, "header"));
        }
        let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(Error::Format {
                offset: 4,
                message: format!("unsupported version {version}"),
            });
        }
        let field = |at: usize| u64::from_le_bytes(header[at..at + 8].try_into().unwrap());
        let (rows, cols, stride) = (field(8), field(16), field(24));
        if stride != words_for(cols as usize) as u64 {
            return Err(Error::Format {
                offset: 24,
                message: format!("stride {stride} does not match {cols} columns"),
            });
        }
        let total = rows.checked_mul(stride).ok_or_else(|| Error::Format {
            offset: 8,
            message: "matrix size overflows".into(),
        })?;

        let mut m = BitMatrix::new(rows as usize, cols as usize);
        let tail_mask = if cols % 64 == 0 { u64::MAX } else { (1u64 << (cols % 64)) - 1 };
        let mut buf = vec![0u8; m.stride * 8];
        for p in 0..rows as usize {
            let offset = HEADER_LEN + p as u64 * stride * 8;
            let got = read_full(&mut source, &mut buf)?;
            if got < buf.len() {
                return Err(truncated(offset + got as u64, &format!("row {p}")));
            }
            let row = m.row_mut(p);
            for (w, chunk) in row.iter_mut().zip(buf.chunks_exact(8)) {
                *w = u64::from_le_bytes(chunk.try_into().unwrap());
            }
            if let Some(last) = row.last() {
                if last & !tail_mask != 0 {
                    return Err(Error::Format {
                        offset: offset + (stride - 1) * 8,
                        message: format!("nonzero padding bits in row {p}"),
                    });
                }
            }
        }
        debug_assert_eq!(m.words.len() as u64, total);
        Ok(m)
    }
}

fn truncated(offset: u64, what: &str) -> Error {
    Error::Format {
        offset,
        message: format!("truncated while reading {what}"),
    }
}

fn read_full<R: Read>(source: &mut R, buf: &mut [u8]) -> Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match source.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(filled)
}

/// Oracle-call accounting for a matrix evaluation.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalStats {
    pub oracle_calls: u64,
    pub exhausted_calls: u64,
    pub elapsed_ms: f64,
}

impl EvalStats {
    pub fn merge(&mut self, other: &EvalStats) {
        self.oracle_calls += other.oracle_calls;
        self.exhausted_calls += other.exhausted_calls;
    }
}

/// Calls the oracle on every (unit, box) pair.
pub fn evaluate_exhaustive(
    units: &[PackingUnit],
    boxes: &[BoxFormat],
    oracle: &dyn FitOracle,
) -> (BitMatrix, EvalStats) {
    let start = Instant::now();
    let mut m = BitMatrix::new(units.len(), boxes.len());
    let calls = AtomicU64::new(0);
    let exhausted = AtomicU64::new(0);
    m.par_rows_mut().zip(units.par_iter()).for_each(|(row, unit)| {
        let items = unit.item_dims();
        let mut local_exhausted = 0;
        for b in boxes {
            let v = oracle.check(&items, b.dims);
            local_exhausted += v.exhausted as u64;
            if v.fits {
                row[b.id / 64] |= 1 << (b.id % 64);
            }
        }
        calls.fetch_add(boxes.len() as u64, Ordering::Relaxed);
        exhausted.fetch_add(local_exhausted, Ordering::Relaxed);
    });
    let stats = EvalStats {
        oracle_calls: calls.into_inner(),
        exhausted_calls: exhausted.into_inner(),
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    (m, stats)
}
