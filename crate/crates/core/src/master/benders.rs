//! The Benders iteration.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitmatrix::{BitMatrix, BitSet};
use crate::model::RelTable;
use crate::subproblem::{
    expand_cartons_to_boxes, fast_dual, make_box_cut, transform_cut, Availability, CartonSelection, CutPool,
};

use super::model::{build_direct, build_master_x, build_master_xy, MipModel};
use super::{Backend, MasterConfig, MipSolution, Status};

/// Everything the master and sub-problem need.
#[derive(Clone, Copy, Debug)]
pub struct Instance<'a> {
    pub fit: &'a BitMatrix,
    pub box_volumes: &'a [i64],
    pub unit_volumes: &'a [i64],
    pub carton_volumes: &'a [i64],
    pub rel: &'a RelTable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Direct,
    BendersX,
    BendersXy,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Mode::Direct),
            "benders-x" => Ok(Mode::BendersX),
            "benders-xy" => Ok(Mode::BendersXy),
            _ => Err(Error::Config(format!("unknown mode {s:?}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BendersConfig {
    pub master: MasterConfig,
    /// Relative gap at which the loop stops.
    pub tol: f64,
    pub max_iter: usize,
    pub time_limit: Option<Duration>,
    pub backend: Backend,
}

impl Default for BendersConfig {
    fn default() -> Self {
        BendersConfig {
            master: MasterConfig::default(),
            tol: 1e-6,
            max_iter: 100,
            time_limit: None,
            backend: Backend::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    MaxIterations,
    TimeLimit,
    /// Direct model solved to optimality.
    Solved,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub theta: i64,
    pub objective: i64,
    pub incumbent: i64,
    pub gap: f64,
    pub elapsed_ms: f64,
}

#[derive(Clone, Debug)]
pub struct BendersResult {
    pub best_z: CartonSelection,
    pub best_y: Availability,
    pub incumbent: i64,
    pub theta: i64,
    pub gap: f64,
    pub iterations: Vec<IterationRecord>,
    pub termination: Termination,
    pub cuts: CutPool,
}

fn relative_gap(incumbent: i64, theta: i64) -> f64 {
    if incumbent <= 0 {
        0.0
    } else {
        ((incumbent - theta) as f64 / incumbent as f64).max(0.0)
    }
}

/// Covers the fixed boxes, then fills up with the largest cartons.
/// `None` when the cover alone needs more than `M` cartons.
pub fn greedy_selection(carton_volumes: &[i64], rel: &RelTable, cfg: &MasterConfig) -> Option<CartonSelection> {
    let k_count = rel.carton_count();
    let mut z = BitSet::new(k_count);
    let bigger = |a: usize, b: usize| (carton_volumes[a], std::cmp::Reverse(a)).cmp(&(carton_volumes[b], std::cmp::Reverse(b)));
    for &b in &cfg.fixed_boxes {
        let cartons = rel.cartons_of(b);
        if cartons.iter().any(|&k| z.contains(k)) {
            continue;
        }
        let k = *cartons.iter().max_by(|&&a, &&b| bigger(a, b))?;
        z.insert(k);
    }
    if z.count_ones() > cfg.cartons {
        return None;
    }
    let mut order: Vec<usize> = (0..k_count).collect();
    order.sort_by(|&a, &b| bigger(b, a));
    for k in order {
        if z.count_ones() == cfg.cartons {
            break;
        }
        z.insert(k);
    }
    Some(z)
}

fn solve(m: &MipModel, backend: &Backend, deadline: Option<Instant>) -> Result<MipSolution> {
    match (backend, deadline) {
        (Backend::Builtin(b), Some(d)) => {
            let mut b = b.clone();
            let left = d.saturating_duration_since(Instant::now());
            b.time_limit = Some(b.time_limit.map_or(left, |t| t.min(left)));
            b.solve(m)
        }
        _ => backend.solve(m),
    }
}

fn selection_of(m: &MipModel, sol: &MipSolution) -> CartonSelection {
    BitSet::from_indices(m.cartons, (0..m.cartons).filter(|&k| sol.values[m.carton_var(k)] == 1))
}

fn infeasible_master(mode: &str) -> Error {
    Error::Domain(format!("{mode} master problem is infeasible"))
}

/// Alternates master and sub-problem until the gap closes.
pub fn benders_loop(inst: &Instance, mode: Mode, cfg: &BendersConfig) -> Result<BendersResult> {
    if mode == Mode::Direct {
        return solve_direct(inst, cfg);
    }
    let start = Instant::now();
    let deadline = cfg.time_limit.map(|t| start + t);
    let rel = inst.rel;
    let evaluate = |z: &CartonSelection| -> Result<_> {
        let y = expand_cartons_to_boxes(z, rel);
        let d = fast_dual(inst.fit, inst.box_volumes, inst.unit_volumes, &y)?;
        let mut cut = match mode {
            Mode::BendersXy => transform_cut(&d, z, rel),
            _ => make_box_cut(&d, &y),
        };
        cut.iteration = 0;
        Ok((y, d.objective, cut))
    };

    let mut pool = CutPool::new();
    let mut iterations = Vec::new();
    let mut best: Option<(i64, CartonSelection, Availability)> = None;
    let mut theta = 0i64;

    if let Some(z0) = greedy_selection(inst.carton_volumes, rel, &cfg.master) {
        let (y0, f0, cut) = evaluate(&z0)?;
        pool.add(cut);
        iterations.push(IterationRecord {
            iteration: 0,
            theta: 0,
            objective: f0,
            incumbent: f0,
            gap: relative_gap(f0, 0),
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        best = Some((f0, z0, y0));
    }

    let mut termination = Termination::MaxIterations;
    for i in 1..=cfg.max_iter {
        let m = match mode {
            Mode::BendersXy => build_master_xy(&pool, rel, &cfg.master)?,
            _ => build_master_x(&pool, rel, &cfg.master)?,
        };
        let sol = solve(&m, &cfg.backend, deadline)?;
        match sol.status {
            Status::Infeasible => {
                return Err(infeasible_master(if mode == Mode::BendersXy { "benders-xy" } else { "benders-x" }))
            }
            Status::Limit if sol.objective.is_none() => {
                termination = Termination::TimeLimit;
                break;
            }
            _ => {}
        }
        let proven = sol.status == Status::Optimal;
        let z = selection_of(&m, &sol);
        if proven {
            theta = theta.max(sol.objective.unwrap_or(0));
        }
        let (y, f, mut cut) = evaluate(&z)?;
        cut.iteration = i;
        if best.as_ref().map_or(true, |(inc, _, _)| f < *inc) {
            best = Some((f, z, y));
        }
        let incumbent = best.as_ref().map(|b| b.0).unwrap_or(f);
        let gap = relative_gap(incumbent, theta);
        pool.add(cut);
        iterations.push(IterationRecord {
            iteration: i,
            theta,
            objective: f,
            incumbent,
            gap,
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        if proven && gap <= cfg.tol {
            termination = Termination::Converged;
            break;
        }
        if !proven || deadline.is_some_and(|d| Instant::now() >= d) {
            termination = Termination::TimeLimit;
            break;
        }
    }

    let (incumbent, best_z, best_y) =
        best.ok_or_else(|| Error::Domain("no feasible carton selection found".into()))?;
    Ok(BendersResult {
        best_z,
        best_y,
        incumbent,
        theta,
        gap: relative_gap(incumbent, theta),
        iterations,
        termination,
        cuts: pool,
    })
}

/// Solves the full model in one go.
pub fn solve_direct(inst: &Instance, cfg: &BendersConfig) -> Result<BendersResult> {
    let start = Instant::now();
    let m = build_direct(inst.fit, inst.box_volumes, inst.unit_volumes, inst.rel, &cfg.master)?;
    let sol = solve(&m, &cfg.backend, cfg.time_limit.map(|t| start + t))?;
    let objective = match (sol.status, sol.objective) {
        (Status::Infeasible, _) | (_, None) => return Err(infeasible_master("direct")),
        (_, Some(v)) => v,
    };
    let z = selection_of(&m, &sol);
    let y = expand_cartons_to_boxes(&z, inst.rel);
    let (theta, termination) = if sol.status == Status::Optimal {
        (objective, Termination::Solved)
    } else {
        (0, Termination::TimeLimit)
    };
    Ok(BendersResult {
        best_z: z,
        best_y: y,
        incumbent: objective,
        theta,
        gap: relative_gap(objective, theta),
        iterations: vec![IterationRecord {
            iteration: 0,
            theta,
            objective,
            incumbent: objective,
            gap: relative_gap(objective, theta),
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        }],
        termination,
        cuts: CutPool::new(),
    })
}
