//! Timing and oracle-count benchmarks. Every figure is a median over the
//! requested repetitions.

use std::io::Write;
use std::time::Instant;

use boxopt::binpack::FitVerdict;
use boxopt::fitmatrix::{BitMatrix, BitSet};
use boxopt::kdtree::{evaluate_unit, KdConfig};
use boxopt::master::{BendersConfig, MasterConfig, Mode};
use boxopt::model::{derive_cartons, unit_volumes, Dim3, GridSpec, QuarterCreaseRule, SyntheticSpec};
use boxopt::subproblem::{fast_dual, fast_dual_serial, naive_dual};
use boxopt::{binpack::BinPacker, model::generate_synthetic_units, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::pipeline::{compute_fit, optimize, FitMode, OptimizeInput};

/// A numeric table written as CSV or JSON.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table {
    pub suite: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(suite: &str, columns: &[&str]) -> Self {
        Table {
            suite: suite.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

pub fn median(mut xs: Vec<f64>) -> f64 {
    assert!(!xs.is_empty());
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

/// Median wall time of `f` in milliseconds.
pub fn time_ms<T>(repetitions: usize, mut f: impl FnMut() -> T) -> f64 {
    let samples = (0..repetitions.max(1))
        .map(|_| {
            let t = Instant::now();
            std::hint::black_box(f());
            t.elapsed().as_secs_f64() * 1e3
        })
        .collect();
    median(samples)
}

/// Random dual instance: bits with probability 1/8, the largest box fits
/// every unit, box volumes sorted, unit volumes below the smallest fitting box.
pub struct DualInstance {
    pub fit: BitMatrix,
    pub box_volumes: Vec<i64>,
    pub unit_volumes: Vec<i64>,
    pub available: BitSet,
}

pub fn random_dual_instance(seed: u64, units: usize, boxes: usize) -> DualInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fit = BitMatrix::new(units, boxes);
    let stride = fit.stride();
    for p in 0..units {
        let row = fit.row_mut(p);
        for (i, w) in row.iter_mut().enumerate() {
            *w = rng.gen::<u64>() & rng.gen::<u64>() & rng.gen::<u64>();
            if i == stride - 1 && boxes % 64 != 0 {
                *w &= (1u64 << (boxes % 64)) - 1;
            }
        }
        fit.set(p, boxes - 1, true).expect("in range");
    }
    let mut box_volumes: Vec<i64> = (0..boxes).map(|_| rng.gen_range(1_000..600_000_000)).collect();
    box_volumes.sort_unstable();
    let unit_volumes = (0..units)
        .map(|p| {
            let smallest = box_volumes[fit.row_ones(p).next().expect("largest box fits")];
            rng.gen_range(1..=smallest)
        })
        .collect();
    let mut available = BitSet::from_indices(boxes, (0..boxes).filter(|_| rng.gen_bool(0.01)));
    available.insert(boxes - 1);
    DualInstance {
        fit,
        box_volumes,
        unit_volumes,
        available,
    }
}

/// `(units, boxes)` pairs; naive timings are skipped when `with_naive` is false.
pub fn dual_suite(sizes: &[(usize, usize)], repetitions: usize, seed: u64, with_naive: bool) -> Result<Table> {
    let mut t = Table::new(
        "dual",
        &["units", "boxes", "density", "fast_ms", "fast_serial_ms", "naive_ms", "ratio_serial", "ratio_parallel"],
    );
    for &(p, b) in sizes {
        let d = random_dual_instance(seed, p, b);
        let args = (&d.fit, d.box_volumes.as_slice(), d.unit_volumes.as_slice(), &d.available);
        let expect = fast_dual_serial(args.0, args.1, args.2, args.3)?;
        if with_naive {
            assert_eq!(naive_dual(args.0, args.1, args.2, args.3)?, expect);
        }
        let fast = time_ms(repetitions, || fast_dual(args.0, args.1, args.2, args.3));
        let serial = time_ms(repetitions, || fast_dual_serial(args.0, args.1, args.2, args.3));
        let naive = if with_naive {
            time_ms(repetitions, || naive_dual(args.0, args.1, args.2, args.3))
        } else {
            f64::NAN
        };
        let density = d.fit.count_ones() as f64 / (p * b) as f64;
        t.rows.push(vec![p as f64, b as f64, density, fast, serial, naive, naive / serial, naive / fast]);
    }
    Ok(t)
}

/// Up-set whose boundary passes through the centre of an `n`-cube.
pub fn centred_oracle(n: u32) -> impl FnMut(Dim3) -> FitVerdict {
    move |d: Dim3| FitVerdict::decided(2 * (d.l + d.w + d.h) >= 3 * (n + 1))
}

/// KD-tree oracle calls against the `n^3` calls of exhaustive evaluation.
pub fn fit_suite(sizes: &[u32], leaf_threshold: u64) -> Result<Table> {
    let mut t = Table::new("fit", &["n", "grid_calls", "kd_calls", "ratio", "splits", "leaves"]);
    for &n in sizes {
        let grid = GridSpec::new(Dim3::new(1, 1, 1)?, Dim3::new(n, n, n)?, 1)?;
        let (_, stats) = evaluate_unit(&grid, centred_oracle(n), &KdConfig { leaf_threshold })?;
        let cells = (n as u64).pow(3);
        t.rows.push(vec![
            n as f64,
            cells as f64,
            stats.oracle_calls as f64,
            stats.oracle_calls as f64 / cells as f64,
            stats.splits as f64,
            stats.leaves as f64,
        ]);
    }
    Ok(t)
}

/// A small full pipeline per unit count: grid, cartons, units, fit matrix
/// (both modes), Benders with carton cuts.
pub fn end2end_suite(unit_counts: &[usize], repetitions: usize, seed: u64) -> Result<Table> {
    let mut t = Table::new(
        "end2end",
        &["units", "boxes", "cartons", "grid_fit_ms", "kd_fit_ms", "kd_call_ratio", "optimize_ms", "incumbent"],
    );
    let grid = GridSpec::new(Dim3::new(100, 100, 50)?, Dim3::new(300, 200, 200)?, 50)?;
    let boxes = grid.boxes();
    let (cartons, rel) = derive_cartons(&boxes, &QuarterCreaseRule::new(50, 50));
    let spec = SyntheticSpec {
        min_edge: 20,
        max_edge: 120,
        mean_items: 3.0,
        max_items: 8,
        largest_box: boxes.last().expect("nonempty grid").dims,
        ..SyntheticSpec::default()
    };
    let packer = BinPacker::default();
    for &count in unit_counts {
        let units = generate_synthetic_units(seed, count, &spec, &packer)?;
        let grid_ms = time_ms(repetitions, || compute_fit(&units, &boxes, FitMode::Grid, None, 30, 1_000_000));
        let kd_ms = time_ms(repetitions, || compute_fit(&units, &boxes, FitMode::Kdtree, Some(&grid), 30, 1_000_000));
        let (fit, kd_stats) = compute_fit(&units, &boxes, FitMode::Kdtree, Some(&grid), 30, 1_000_000)?;
        let vols = unit_volumes(&units);
        let input = OptimizeInput {
            fit: &fit,
            boxes: &boxes,
            unit_volumes: &vols,
            cartons: &cartons,
            rel: &rel,
        };
        let cfg = BendersConfig {
            master: MasterConfig {
                cartons: 3.min(cartons.len()),
                fixed_boxes: vec![boxes.len() - 1],
                ..MasterConfig::default()
            },
            ..BendersConfig::default()
        };
        let mut incumbent = 0;
        let opt_ms = time_ms(repetitions, || {
            if let Ok((r, _)) = optimize(&input, Mode::BendersXy, &cfg, "builtin") {
                incumbent = r.incumbent;
            }
        });
        t.rows.push(vec![
            count as f64,
            boxes.len() as f64,
            cartons.len() as f64,
            grid_ms,
            kd_ms,
            kd_stats.call_ratio,
            opt_ms,
            incumbent as f64,
        ]);
    }
    Ok(t)
}
