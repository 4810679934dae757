//! Analytic Benders sub-problem.
//!
//! For a fixed box availability `y` each packing unit independently takes its
//! cheapest available fitting box. With boxes sorted by volume that box is
//! the first set bit of `F[p] & y`, and the dual values are
//!
//! ```text
//! pi_p    = V(best) - V(p)
//! mu_pb   = min(0, V(b) - V(best))   for F_pb = 1, else 0
//! ```
//!
//! Only boxes with a smaller index than `best` can have `mu_pb < 0`, so the
//! scan walks the row words downwards from `best` and visits set bits only.
//! `mu` is never stored; cuts only need the column sums `w_b = sum_p mu_pb`.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitmatrix::{BitMatrix, BitSet};
use crate::model::RelTable;

/// Box availability `y`, one bit per box.
pub type Availability = BitSet;

/// Carton selection `z`, one bit per carton.
pub type CartonSelection = BitSet;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualSolution {
    /// `sum_p pi_p + sum_pb y_b mu_pb`; equals `sum_p pi_p` at binary `y`.
    pub objective: i64,
    pub pi: Vec<i64>,
    /// `w_b = sum_p mu_pb`, never positive.
    pub box_weights: Vec<i64>,
}

/// `y_b = 1 - prod_{k related to b} (1 - z_k)`.
pub fn expand_cartons_to_boxes(z: &CartonSelection, rel: &RelTable) -> Availability {
    let mut y = BitSet::new(rel.box_count());
    for k in z.iter_ones() {
        for &b in rel.boxes_of(k) {
            y.insert(b);
        }
    }
    y
}

fn check_shapes(f: &BitMatrix, box_volumes: &[i64], unit_volumes: &[i64], y: &Availability) -> Result<()> {
    if f.cols() != box_volumes.len() || y.len() != f.cols() || f.rows() != unit_volumes.len() {
        return Err(Error::Config(format!(
            "shape mismatch: matrix {}x{}, {} unit volumes, {} box volumes, availability of {}",
            f.rows(),
            f.cols(),
            unit_volumes.len(),
            box_volumes.len(),
            y.len()
        )));
    }
    Ok(())
}

/// Smallest box id with `F_pb = 1` and `y_b = 1`.
#[inline]
fn best_box(row: &[u64], y: &[u64]) -> Option<usize> {
    row.iter()
        .zip(y)
        .position(|(f, a)| f & a != 0)
        .map(|wi| wi * 64 + (row[wi] & y[wi]).trailing_zeros() as usize)
}

/// Adds unit `p`'s contributions; returns `pi_p`.
#[inline]
fn dual_row(
    p: usize,
    row: &[u64],
    y: &[u64],
    box_volumes: &[i64],
    unit_volume: i64,
    weights: &mut [i64],
) -> Result<i64> {
    let best = best_box(row, y).ok_or(Error::Infeasible { unit: p })?;
    let best_volume = box_volumes[best];
    let mut wi = best / 64;
    let mut word = row[wi] & ((1u64 << (best % 64)) - 1);
    loop {
        while word != 0 {
            let b = wi * 64 + word.trailing_zeros() as usize;
            weights[b] += box_volumes[b] - best_volume;
            word &= word - 1;
        }
        if wi == 0 {
            break;
        }
        wi -= 1;
        word = row[wi];
    }
    Ok(best_volume - unit_volume)
}

/// Bit-scan dual over the packed fitting matrix, single-threaded.
///
/// Requires box ids in nondecreasing volume order.
pub fn fast_dual_serial(
    f: &BitMatrix,
    box_volumes: &[i64],
    unit_volumes: &[i64],
    y: &Availability,
) -> Result<DualSolution> {
    check_shapes(f, box_volumes, unit_volumes, y)?;
    let mut weights = vec![0i64; f.cols()];
    let mut pi = Vec::with_capacity(f.rows());
    for (p, &v) in unit_volumes.iter().enumerate() {
        pi.push(dual_row(p, f.row(p), y.words(), box_volumes, v, &mut weights)?);
    }
    Ok(DualSolution {
        objective: pi.iter().sum(),
        pi,
        box_weights: weights,
    })
}

const ROWS_PER_TASK: usize = 512;

/// Bit-scan dual, parallel over packing units. Workers keep private weight
/// vectors that are summed at the end.
pub fn fast_dual(
    f: &BitMatrix,
    box_volumes: &[i64],
    unit_volumes: &[i64],
    y: &Availability,
) -> Result<DualSolution> {
    check_shapes(f, box_volumes, unit_volumes, y)?;
    let cols = f.cols();
    let chunks: Vec<(Vec<i64>, Vec<i64>)> = unit_volumes
        .par_chunks(ROWS_PER_TASK)
        .enumerate()
        .map(|(chunk, vols)| {
            let mut weights = vec![0i64; cols];
            let mut pi = Vec::with_capacity(vols.len());
            for (i, &v) in vols.iter().enumerate() {
                let p = chunk * ROWS_PER_TASK + i;
                pi.push(dual_row(p, f.row(p), y.words(), box_volumes, v, &mut weights)?);
            }
            Ok((pi, weights))
        })
        .collect::<Result<_>>()?;

    let mut pi = Vec::with_capacity(f.rows());
    let mut weights = vec![0i64; cols];
    for (part, w) in chunks {
        pi.extend(part);
        for (acc, x) in weights.iter_mut().zip(w) {
            *acc += x;
        }
    }
    Ok(DualSolution {
        objective: pi.iter().sum(),
        pi,
        box_weights: weights,
    })
}

/// Dense evaluation of the analytic dual, bit by bit over every pair.
/// Reference for [`fast_dual`]; makes no use of the volume ordering.
pub fn naive_dual(
    f: &BitMatrix,
    box_volumes: &[i64],
    unit_volumes: &[i64],
    y: &Availability,
) -> Result<DualSolution> {
    check_shapes(f, box_volumes, unit_volumes, y)?;
    let (rows, cols) = (f.rows(), f.cols());
    let stride = f.stride();
    let words = f.words();
    let avail = y.words();
    let bit = |ws: &[u64], i: usize| ws[i / 64] >> (i % 64) & 1 == 1;

    let mut pi = vec![0i64; rows];
    let mut weights = vec![0i64; cols];
    for p in 0..rows {
        let row = &words[p * stride..(p + 1) * stride];
        let mut best: Option<i64> = None;
        for b in 0..cols {
            if bit(row, b) && bit(avail, b) {
                let cost = box_volumes[b] - unit_volumes[p];
                best = Some(best.map_or(cost, |c| c.min(cost)));
            }
        }
        pi[p] = best.ok_or(Error::Infeasible { unit: p })?;
        for b in 0..cols {
            if bit(row, b) {
                let cost = box_volumes[b] - unit_volumes[p];
                weights[b] += (cost - pi[p]).min(0);
            }
        }
    }
    let coupling: i64 = (0..cols).filter(|&b| bit(avail, b)).map(|b| weights[b]).sum();
    Ok(DualSolution {
        objective: pi.iter().sum::<i64>() + coupling,
        pi,
        box_weights: weights,
    })
}

/// Optimality cut `theta >= s + w'x` over cartons or boxes.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Cut {
    pub iteration: usize,
    pub intercept: i64,
    /// Dense coefficients, one per carton (or box); all `<= 0`.
    pub coefficients: Vec<i64>,
}

impl Cut {
    /// `s + w'x` at a binary point.
    pub fn evaluate(&self, x: &BitSet) -> i64 {
        self.intercept + x.iter_ones().map(|i| self.coefficients[i]).sum::<i64>()
    }
}

/// Post-transforms box duals into a carton cut with the Jacobian of
/// `y(z)`: `J_bk = 1` iff no other related carton of `b` is selected.
pub fn transform_cut(d: &DualSolution, z: &CartonSelection, rel: &RelTable) -> Cut {
    let k_count = rel.carton_count();
    let mut w = vec![0i64; k_count];
    for (k, wk) in w.iter_mut().enumerate() {
        for &b in rel.boxes_of(k) {
            let other_selected = rel.cartons_of(b).iter().any(|&l| l != k && z.contains(l));
            if !other_selected {
                *wk += d.box_weights[b];
            }
        }
    }
    let at_z: i64 = z.iter_ones().map(|k| w[k]).sum();
    Cut {
        iteration: 0,
        intercept: d.objective - at_z,
        coefficients: w,
    }
}

/// Cut over boxes: intercept `sum_p pi_p`, coefficients `w_b`.
pub fn make_box_cut(d: &DualSolution, _y: &Availability) -> Cut {
    Cut {
        iteration: 0,
        intercept: d.pi.iter().sum(),
        coefficients: d.box_weights.clone(),
    }
}

/// Accumulated optimality cuts without exact duplicates.
#[derive(Clone, Debug, Default)]
pub struct CutPool {
    cuts: Vec<Cut>,
    seen: HashSet<(i64, Vec<i64>)>,
}

#[derive(Serialize, Deserialize)]
struct CutRecord {
    iter: usize,
    s: i64,
    w: BTreeMap<usize, i64>,
}

impl CutPool {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns false when an identical cut is already present.
    pub fn add(&mut self, cut: Cut) -> bool {
        if !self.seen.insert((cut.intercept, cut.coefficients.clone())) {
            return false;
        }
        self.cuts.push(cut);
        true
    }

    pub fn cuts(&self) -> &[Cut] {
        &self.cuts
    }

    pub fn len(&self) -> usize {
        self.cuts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }

    /// `max_i (s_i + w_i'x)`, or `None` for an empty pool.
    pub fn bound(&self, x: &BitSet) -> Option<i64> {
        self.cuts.iter().map(|c| c.evaluate(x)).max()
    }

    /// JSON lines `{"iter":i,"s":s,"w":{"id":w,...}}`, zeros omitted.
    pub fn write_jsonl<W: Write>(&self, mut sink: W) -> Result<()> {
        for c in &self.cuts {
            let record = CutRecord {
                iter: c.iteration,
                s: c.intercept,
                w: c
                    .coefficients
                    .iter()
                    .enumerate()
                    .filter(|(_, &w)| w != 0)
                    .map(|(i, &w)| (i, w))
                    .collect(),
            };
            serde_json::to_writer(&mut sink, &record).map_err(|e| Error::Io(e.into()))?;
            sink.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(source: R, dimension: usize) -> Result<Self> {
        let mut pool = CutPool::new();
        for (idx, line) in source.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parse = |message: String| Error::Parse { line: idx + 1, message };
            let record: CutRecord = serde_json::from_str(&line).map_err(|e| parse(e.to_string()))?;
            let mut coefficients = vec![0; dimension];
            for (i, w) in record.w {
                *coefficients
                    .get_mut(i)
                    .ok_or_else(|| parse(format!("coefficient index {i} >= {dimension}")))? = w;
            }
            pool.add(Cut {
                iteration: record.iter,
                intercept: record.s,
                coefficients,
            });
        }
        Ok(pool)
    }
}
