//! Branch and bound over carton selections.
//!
//! Every master is determined by `z`: boxes follow as `y = expand(z)`,
//! `theta` is the largest cut value (at least 0) and in the direct model
//! each unit takes its cheapest available box. Nodes fix a prefix of `z`;
//! bounds treat undecided cartons optimistically.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::fitmatrix::BitSet;
use crate::subproblem::{expand_cartons_to_boxes, Cut};

use super::model::{MipModel, Shape, VarRole};
use super::{MipSolution, Status};

pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

#[derive(Clone, Debug)]
pub struct BuiltinSolver {
    /// Largest `C(K, M)` accepted.
    pub enumeration_cap: u64,
    pub time_limit: Option<Duration>,
}

impl Default for BuiltinSolver {
    fn default() -> Self {
        BuiltinSolver {
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            time_limit: None,
        }
    }
}

/// `C(n, k)`, saturating.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

struct Search<'a> {
    m: &'a MipModel,
    /// Per fixed box, its cartons.
    cover: Vec<&'a [usize]>,
    decided: Vec<Option<bool>>,
    selected: usize,
    best: Option<(i64, Vec<bool>)>,
    deadline: Option<Instant>,
    timed_out: bool,
    scratch: Vec<i64>,
}

impl Search<'_> {
    fn run(&mut self, k: usize) {
        if self.timed_out {
            return;
        }
        if let Some(d) = self.deadline {
            if Instant::now() >= d {
                self.timed_out = true;
                return;
            }
        }
        let remaining = self.m.cartons - k;
        if self.selected > self.m.limit || self.selected + remaining < self.m.limit {
            return;
        }
        if !self.coverable() {
            return;
        }
        let Some(bound) = self.bound() else { return };
        if matches!(&self.best, Some((b, _)) if bound >= *b) {
            return;
        }
        if k == self.m.cartons {
            let z = self.decided.iter().map(|d| d == &Some(true)).collect();
            self.best = Some((bound, z));
            return;
        }
        for choice in [true, false] {
            self.decided[k] = Some(choice);
            self.selected += choice as usize;
            self.run(k + 1);
            self.selected -= choice as usize;
        }
        self.decided[k] = None;
    }

    /// Can every fixed box still be covered.
    fn coverable(&self) -> bool {
        self.cover
            .iter()
            .all(|ks| ks.iter().any(|&k| self.decided[k] != Some(false)))
    }

    /// Optimistic boxes: those of selected or undecided cartons.
    fn open_boxes(&self) -> BitSet {
        let open = self
            .decided
            .iter()
            .enumerate()
            .filter(|(_, d)| **d != Some(false))
            .map(|(k, _)| k);
        expand_cartons_to_boxes(&BitSet::from_indices(self.m.cartons, open), &self.m.rel)
    }

    /// Lower bound on the objective below this node, `None` if infeasible.
    fn bound(&mut self) -> Option<i64> {
        match &self.m.shape {
            Shape::CartonCuts { cuts } => {
                let free = self.m.limit - self.selected;
                let mut best = 0i64;
                for cut in cuts {
                    self.scratch.clear();
                    let mut value = cut.intercept;
                    for (k, d) in self.decided.iter().enumerate() {
                        match d {
                            Some(true) => value += cut.coefficients[k],
                            None => self.scratch.push(cut.coefficients[k]),
                            Some(false) => {}
                        }
                    }
                    if free > 0 && free < self.scratch.len() {
                        self.scratch.select_nth_unstable(free - 1);
                    }
                    value += self.scratch.iter().take(free).sum::<i64>();
                    best = best.max(value);
                }
                Some(best)
            }
            Shape::BoxCuts { cuts } => {
                let open = self.open_boxes();
                Some(cuts.iter().map(|c| box_cut_value(c, &open)).fold(0, i64::max))
            }
            Shape::Direct { options } => {
                let open = self.open_boxes();
                options
                    .iter()
                    .map(|opts| {
                        opts.iter()
                            .filter(|(b, _)| open.contains(*b))
                            .map(|&(_, c)| c)
                            .min()
                    })
                    .sum()
            }
        }
    }
}

fn box_cut_value(cut: &Cut, y: &BitSet) -> i64 {
    cut.intercept + y.iter_ones().map(|b| cut.coefficients[b]).sum::<i64>()
}

/// Full variable assignment for a selection.
fn assignment(m: &MipModel, z: &[bool], objective: i64) -> Vec<i64> {
    let sel = BitSet::from_indices(m.cartons, (0..m.cartons).filter(|&k| z[k]));
    let y = expand_cartons_to_boxes(&sel, &m.rel);
    let mut chosen: Vec<Option<usize>> = Vec::new();
    if let Shape::Direct { options } = &m.shape {
        chosen = options
            .iter()
            .map(|opts| {
                opts.iter()
                    .filter(|(b, _)| y.contains(*b))
                    .min_by_key(|&&(b, c)| (c, b))
                    .map(|&(b, _)| b)
            })
            .collect();
    }
    m.variables
        .iter()
        .map(|v| match v.role {
            VarRole::Carton(k) => z[k] as i64,
            VarRole::Box(b) => y.contains(b) as i64,
            VarRole::Pack { unit, r#box } => (chosen[unit] == Some(r#box)) as i64,
            VarRole::Theta => objective,
        })
        .collect()
}

impl BuiltinSolver {
    pub fn solve(&self, m: &MipModel) -> Result<MipSolution> {
        let completions = binomial(m.cartons as u64, m.limit as u64);
        if completions > self.enumeration_cap {
            return Err(Error::Size(format!(
                "C({}, {}) = {completions} selections exceed the enumeration cap {}",
                m.cartons, m.limit, self.enumeration_cap
            )));
        }
        let mut search = Search {
            m,
            cover: m.fixed_boxes.iter().map(|&b| m.rel.cartons_of(b)).collect(),
            decided: vec![None; m.cartons],
            selected: 0,
            best: None,
            deadline: self.time_limit.map(|t| Instant::now() + t),
            timed_out: false,
            scratch: Vec::with_capacity(m.cartons),
        };
        search.run(0);
        let status = match (&search.best, search.timed_out) {
            (_, true) => Status::Limit,
            (Some(_), false) => Status::Optimal,
            (None, false) => Status::Infeasible,
        };
        Ok(match search.best {
            Some((objective, z)) => MipSolution {
                status,
                objective: Some(objective),
                values: assignment(m, &z, objective),
            },
            None => MipSolution {
                status,
                objective: None,
                values: Vec::new(),
            },
        })
    }
}
