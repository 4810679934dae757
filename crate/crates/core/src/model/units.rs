use std::collections::HashSet;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::{Dim3, Item, PackingUnit};
use crate::binpack::FitOracle;
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct ItemRecord {
    l: u32,
    w: u32,
    h: u32,
}

#[derive(Serialize, Deserialize)]
struct UnitRecord {
    id: String,
    items: Vec<ItemRecord>,
}

/// A unit refused at ingestion.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub external_id: String,
    pub line: usize,
    pub reason: String,
}

#[derive(Clone, Debug, Default)]
pub struct IngestOutcome {
    pub units: Vec<PackingUnit>,
    pub rejected: Vec<Rejection>,
}

/// Reads JSON-lines packing units. Units whose items cannot be packed into
/// `largest_box` go to the rejection report; accepted units get dense ids in
/// input order.
pub fn ingest_packing_units<R: BufRead>(
    source: R,
    largest_box: Dim3,
    oracle: &dyn FitOracle,
) -> Result<IngestOutcome> {
    let mut out = IngestOutcome::default();
    let mut seen = HashSet::new();
    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: UnitRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if !seen.insert(record.id.clone()) {
            return Err(Error::Parse {
                line: line_no,
                message: format!("duplicate unit id {:?}", record.id),
            });
        }
        if record.items.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("unit {:?} has no items", record.id),
            });
        }
        let mut dims = Vec::with_capacity(record.items.len());
        for it in &record.items {
            dims.push(Dim3::new(it.l, it.w, it.h).map_err(|e| Error::Parse {
                line: line_no,
                message: e.to_string(),
            })?);
        }

        let sorted_box = largest_box.sorted_desc();
        let too_big = dims.iter().any(|d| {
            let s = d.sorted_desc();
            (0..3).any(|k| s[k] > sorted_box[k])
        });
        let reason = if too_big {
            Some("exceeds largest box")
        } else {
            let v = oracle.check(&dims, largest_box);
            if v.exhausted {
                Some("search budget exhausted")
            } else if !v.fits {
                Some("does not fit largest box")
            } else {
                None
            }
        };
        match reason {
            Some(reason) => out.rejected.push(Rejection {
                external_id: record.id,
                line: line_no,
                reason: reason.to_string(),
            }),
            None => {
                let items = dims.into_iter().map(|dims| Item { dims }).collect();
                let unit = PackingUnit::new(out.units.len(), record.id, items)?;
                out.units.push(unit);
            }
        }
    }
    Ok(out)
}

/// Writes units in the canonical JSON-lines form read by
/// [`ingest_packing_units`].
pub fn write_packing_units<W: Write>(units: &[PackingUnit], mut sink: W) -> Result<()> {
    for u in units {
        let record = UnitRecord {
            id: u.external_id.clone(),
            items: u
                .items
                .iter()
                .map(|it| ItemRecord {
                    l: it.dims.l,
                    w: it.dims.w,
                    h: it.dims.h,
                })
                .collect(),
        };
        serde_json::to_writer(&mut sink, &record).map_err(|e| Error::Io(e.into()))?;
        sink.write_all(b"\n")?;
    }
    Ok(())
}

/// Parameters of the synthetic packing-unit generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    /// Mean item count per unit; the count is `1 + Poisson(mean - 1)`.
    pub mean_items: f64,
    pub max_items: usize,
    /// Item edges are uniform in `[min_edge, max_edge]` millimetres.
    pub min_edge: u32,
    pub max_edge: u32,
    pub largest_box: Dim3,
    /// Redraws of a unit's item dimensions before giving up.
    pub max_retries: u32,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            mean_items: 4.0,
            max_items: 16,
            min_edge: 20,
            max_edge: 300,
            largest_box: Dim3 { l: 995, w: 595, h: 595 },
            max_retries: 100,
        }
    }
}

impl SyntheticSpec {
    fn validate(&self) -> Result<()> {
        let box_sorted = self.largest_box.sorted_desc();
        if !(self.mean_items >= 1.0) || self.max_items == 0 {
            return Err(Error::Config(format!(
                "mean item count must be >= 1 (got {}) and max items positive",
                self.mean_items
            )));
        }
        if self.min_edge == 0 || self.min_edge > self.max_edge {
            return Err(Error::Config(format!(
                "bad item edge range {}..={}",
                self.min_edge, self.max_edge
            )));
        }
        if self.min_edge > box_sorted[2] || self.max_edge > box_sorted[0] {
            return Err(Error::Config(format!(
                "item edge range {}..={} exceeds largest box {}",
                self.min_edge, self.max_edge, self.largest_box
            )));
        }
        Ok(())
    }
}

/// Deterministic synthetic packing units; every unit fits `spec.largest_box`.
pub fn generate_synthetic_units(
    seed: u64,
    count: usize,
    spec: &SyntheticSpec,
    oracle: &dyn FitOracle,
) -> Result<Vec<PackingUnit>> {
    if count == 0 {
        return Err(Error::Config("unit count must be at least 1".into()));
    }
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let extra = if spec.mean_items > 1.0 {
        Some(Poisson::new(spec.mean_items - 1.0).map_err(|e| Error::Config(e.to_string()))?)
    } else {
        None
    };

    let mut units = Vec::with_capacity(count);
    for id in 0..count {
        let n_items = loop {
            let n = 1 + extra.as_ref().map_or(0, |p| p.sample(&mut rng) as usize);
            if n <= spec.max_items {
                break n;
            }
        };
        let mut accepted = None;
        for _ in 0..=spec.max_retries {
            let dims: Vec<Dim3> = (0..n_items)
                .map(|_| Dim3 {
                    l: rng.gen_range(spec.min_edge..=spec.max_edge),
                    w: rng.gen_range(spec.min_edge..=spec.max_edge),
                    h: rng.gen_range(spec.min_edge..=spec.max_edge),
                })
                .collect();
            if oracle.check(&dims, spec.largest_box).fits {
                accepted = Some(dims);
                break;
            }
        }
        let dims = accepted.ok_or_else(|| {
            Error::Config(format!(
                "no fitting unit with {n_items} items after {} retries",
                spec.max_retries
            ))
        })?;
        let items = dims.into_iter().map(|dims| Item { dims }).collect();
        units.push(PackingUnit::new(id, format!("syn-{seed}-{id}"), items)?);
    }
    Ok(units)
}
