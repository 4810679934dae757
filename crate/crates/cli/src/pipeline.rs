//! Pipeline stages shared by the subcommands and the benchmarks.

use std::time::Instant;

use boxopt::binpack::BinPacker;
use boxopt::fitmatrix::{evaluate_exhaustive, BitMatrix};
use boxopt::kdtree::{evaluate_all, KdConfig, KdStats};
use boxopt::master::{
    benders_loop, build_master_x, build_master_xy, BendersConfig, Instance, IterationRecord, ModelStats, Mode,
    Termination,
};
use boxopt::model::{BoxFormat, Carton, GridSpec, PackingUnit, RelTable};
use boxopt::subproblem::CutPool;
use boxopt::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::report::{report, Score};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitMode {
    Grid,
    Kdtree,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitStats {
    pub mode: FitMode,
    pub units: usize,
    pub boxes: usize,
    pub oracle_calls: u64,
    pub exhausted_calls: u64,
    /// Calls an exhaustive evaluation of the same matrix makes, `P * B`.
    pub grid_calls: u64,
    pub call_ratio: f64,
    pub fitting_pairs: u64,
    pub density: f64,
    pub elapsed_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kd: Option<KdSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KdSummary {
    pub leaf_threshold: u64,
    pub lattice_points: u64,
    pub splits: u64,
    pub leaves: u64,
}

pub fn compute_fit(
    units: &[PackingUnit],
    boxes: &[BoxFormat],
    mode: FitMode,
    grid: Option<&GridSpec>,
    leaf_threshold: u64,
    node_budget: u64,
) -> Result<(BitMatrix, FitStats)> {
    let packer = BinPacker { node_budget };
    let (matrix, eval, kd) = match mode {
        FitMode::Grid => {
            let (m, s) = evaluate_exhaustive(units, boxes, &packer);
            (m, s, None)
        }
        FitMode::Kdtree => {
            let grid = grid.ok_or_else(|| Error::Config("kdtree mode needs the box grid".into()))?;
            let cfg = KdConfig { leaf_threshold };
            let (m, s, kd): (BitMatrix, _, KdStats) = evaluate_all(units, grid, boxes, &packer, &cfg)?;
            let summary = KdSummary {
                leaf_threshold,
                lattice_points: grid.point_count() as u64 * units.len() as u64,
                splits: kd.splits,
                leaves: kd.leaves,
            };
            (m, s, Some(summary))
        }
    };
    let grid_calls = units.len() as u64 * boxes.len() as u64;
    let ones = matrix.count_ones() as u64;
    let stats = FitStats {
        mode,
        units: units.len(),
        boxes: boxes.len(),
        oracle_calls: eval.oracle_calls,
        exhausted_calls: eval.exhausted_calls,
        grid_calls,
        call_ratio: if grid_calls == 0 { 0.0 } else { eval.oracle_calls as f64 / grid_calls as f64 },
        fitting_pairs: ones,
        density: if grid_calls == 0 { 0.0 } else { ones as f64 / grid_calls as f64 },
        elapsed_ms: eval.elapsed_ms,
        kd,
    };
    Ok((matrix, stats))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub units: usize,
    pub boxes: usize,
    pub cartons: usize,
    pub rel: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CartonOut {
    pub id: usize,
    pub l: u32,
    pub w: u32,
    pub heights: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxOut {
    pub id: usize,
    pub l: u32,
    pub w: u32,
    pub h: u32,
}

/// The result JSON of `optimize`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub mode: Mode,
    pub backend: String,
    pub counts: Counts,
    pub cartons_selected: usize,
    pub fixed_boxes: Vec<usize>,
    pub selected_cartons: Vec<CartonOut>,
    pub boxes: Vec<BoxOut>,
    pub incumbent: i64,
    pub theta: i64,
    pub gap: f64,
    pub score: Score,
    pub termination: Termination,
    pub cuts: usize,
    /// Size of the last master problem built.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub master: Option<ModelStats>,
    pub iterations: Vec<IterationRecord>,
    pub elapsed_ms: f64,
}

pub struct OptimizeInput<'a> {
    pub fit: &'a BitMatrix,
    pub boxes: &'a [BoxFormat],
    pub unit_volumes: &'a [i64],
    pub cartons: &'a [Carton],
    pub rel: &'a RelTable,
}

/// Runs the chosen formulation; returns the result and the final cut pool.
pub fn optimize(input: &OptimizeInput, mode: Mode, cfg: &BendersConfig, backend: &str) -> Result<(RunResult, CutPool)> {
    let start = Instant::now();
    if input.fit.cols() != input.boxes.len() || input.fit.rows() != input.unit_volumes.len() {
        return Err(Error::Config(format!(
            "fit matrix is {}x{} but there are {} units and {} boxes",
            input.fit.rows(),
            input.fit.cols(),
            input.unit_volumes.len(),
            input.boxes.len()
        )));
    }
    if input.rel.carton_count() != input.cartons.len() || input.rel.box_count() != input.boxes.len() {
        return Err(Error::Config("relation table does not match cartons and boxes".into()));
    }
    let box_volumes: Vec<i64> = input.boxes.iter().map(|b| b.volume).collect();
    let carton_volumes: Vec<i64> = input.cartons.iter().map(Carton::volume).collect();
    let inst = Instance {
        fit: input.fit,
        box_volumes: &box_volumes,
        unit_volumes: input.unit_volumes,
        carton_volumes: &carton_volumes,
        rel: input.rel,
    };
    let r = benders_loop(&inst, mode, cfg)?;
    let master = match mode {
        Mode::BendersXy => Some(build_master_xy(&r.cuts, input.rel, &cfg.master)?.stats()),
        Mode::BendersX => Some(build_master_x(&r.cuts, input.rel, &cfg.master)?.stats()),
        Mode::Direct => None,
    };
    let total: i64 = input.unit_volumes.iter().sum();
    let result = RunResult {
        mode,
        backend: backend.to_string(),
        counts: Counts {
            units: input.unit_volumes.len(),
            boxes: input.boxes.len(),
            cartons: input.cartons.len(),
            rel: input.rel.len(),
        },
        cartons_selected: cfg.master.cartons,
        fixed_boxes: cfg.master.fixed_boxes.clone(),
        selected_cartons: r
            .best_z
            .iter_ones()
            .map(|k| {
                let c = &input.cartons[k];
                CartonOut {
                    id: c.id,
                    l: c.dims.l,
                    w: c.dims.w,
                    heights: c.crease_heights.clone(),
                }
            })
            .collect(),
        boxes: r
            .best_y
            .iter_ones()
            .map(|b| {
                let d = input.boxes[b].dims;
                BoxOut {
                    id: input.boxes[b].id,
                    l: d.l,
                    w: d.w,
                    h: d.h,
                }
            })
            .collect(),
        incumbent: r.incumbent,
        theta: r.theta,
        gap: r.gap,
        score: report(r.incumbent, total)?,
        termination: r.termination,
        cuts: r.cuts.len(),
        master,
        iterations: r.iterations,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    Ok((result, r.cuts))
}
