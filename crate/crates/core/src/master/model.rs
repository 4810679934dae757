//! Linear models for the three master formulations.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitmatrix::BitMatrix;
use crate::model::RelTable;
use crate::subproblem::{Cut, CutPool};

use super::MasterConfig;

pub const TAG_SHIPPABLE: &str = "packing unit shippable";
pub const TAG_AVAILABLE: &str = "box available";
pub const TAG_CARTON_IMPLIES_BOXES: &str = "carton implies boxes";
pub const TAG_BOX_REQUIRES_CARTON: &str = "box requires carton";
pub const TAG_LIMITED_CARTONS: &str = "limited cartons";
pub const TAG_FIXED_BOXES: &str = "fixed boxes";
pub const TAG_OPTIMALITY_CUT: &str = "optimality cut";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum VarRole {
    Pack { unit: usize, r#box: usize },
    Box(usize),
    Carton(usize),
    Theta,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Variable {
    pub name: String,
    pub role: VarRole,
    /// Binary when true, otherwise continuous in `[0, inf)`.
    pub binary: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Constraint {
    pub name: String,
    pub tag: &'static str,
    pub terms: Vec<(usize, i64)>,
    pub sense: Sense,
    pub rhs: i64,
}

impl Constraint {
    pub fn satisfied(&self, values: &[i64]) -> bool {
        let lhs: i64 = self.terms.iter().map(|&(v, a)| a * values[v]).sum();
        match self.sense {
            Sense::Le => lhs <= self.rhs,
            Sense::Ge => lhs >= self.rhs,
            Sense::Eq => lhs == self.rhs,
        }
    }
}

/// Structured view of a master, used by the builtin solver.
#[derive(Clone, Debug)]
pub enum Shape {
    /// Per unit, the fitting boxes and their costs `V_b - V_p`.
    Direct { options: Vec<Vec<(usize, i64)>> },
    /// Cuts over cartons.
    CartonCuts { cuts: Vec<Cut> },
    /// Cuts over boxes.
    BoxCuts { cuts: Vec<Cut> },
}

/// Mixed binary linear program, minimised.
#[derive(Clone, Debug)]
pub struct MipModel {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: Vec<(usize, i64)>,
    pub shape: Shape,
    pub rel: RelTable,
    pub cartons: usize,
    pub fixed_boxes: Vec<usize>,
    pub limit: usize,
    carton_vars: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelStats {
    pub variables: usize,
    pub binaries: usize,
    pub constraints: usize,
    pub nonzeros: usize,
    pub constraints_by_tag: BTreeMap<String, usize>,
}

impl MipModel {
    fn new(shape: Shape, rel: &RelTable, cfg: &MasterConfig) -> Result<Self> {
        validate(rel, cfg)?;
        Ok(MipModel {
            variables: Vec::new(),
            constraints: Vec::new(),
            objective: Vec::new(),
            shape,
            rel: rel.clone(),
            cartons: rel.carton_count(),
            fixed_boxes: cfg.fixed_boxes.clone(),
            limit: cfg.cartons,
            carton_vars: Vec::new(),
        })
    }

    fn var(&mut self, name: String, role: VarRole, binary: bool) -> usize {
        self.variables.push(Variable { name, role, binary });
        self.variables.len() - 1
    }

    fn constrain(&mut self, tag: &'static str, terms: Vec<(usize, i64)>, sense: Sense, rhs: i64) {
        let name = format!("c{}", self.constraints.len());
        self.constraints.push(Constraint {
            name,
            tag,
            terms,
            sense,
            rhs,
        });
    }

    fn add_cartons(&mut self) {
        self.carton_vars = (0..self.cartons)
            .map(|k| self.var(format!("z{k}"), VarRole::Carton(k), true))
            .collect();
    }

    fn add_selection_constraints(&mut self) {
        let all = self.carton_vars.iter().map(|&v| (v, 1)).collect();
        self.constrain(TAG_LIMITED_CARTONS, all, Sense::Eq, self.limit as i64);
    }

    /// Index of the variable for carton `k`.
    pub fn carton_var(&self, k: usize) -> usize {
        self.carton_vars[k]
    }

    pub fn theta_var(&self) -> Option<usize> {
        self.variables.iter().position(|v| v.role == VarRole::Theta)
    }

    pub fn objective_value(&self, values: &[i64]) -> i64 {
        self.objective.iter().map(|&(v, c)| c * values[v]).sum()
    }

    /// Checks bounds and every constraint.
    pub fn is_feasible(&self, values: &[i64]) -> bool {
        values.len() == self.variables.len()
            && self
                .variables
                .iter()
                .zip(values)
                .all(|(v, &x)| x >= 0 && (!v.binary || x <= 1))
            && self.constraints.iter().all(|c| c.satisfied(values))
    }

    pub fn stats(&self) -> ModelStats {
        let mut by_tag = BTreeMap::new();
        for c in &self.constraints {
            *by_tag.entry(c.tag.to_string()).or_insert(0) += 1;
        }
        ModelStats {
            variables: self.variables.len(),
            binaries: self.variables.iter().filter(|v| v.binary).count(),
            constraints: self.constraints.len(),
            nonzeros: self.constraints.iter().map(|c| c.terms.len()).sum(),
            constraints_by_tag: by_tag,
        }
    }
}

fn validate(rel: &RelTable, cfg: &MasterConfig) -> Result<()> {
    if cfg.cartons > rel.carton_count() {
        return Err(Error::Config(format!(
            "cannot select {} of {} cartons",
            cfg.cartons,
            rel.carton_count()
        )));
    }
    for &b in &cfg.fixed_boxes {
        if b >= rel.box_count() {
            return Err(Error::Index {
                index: b,
                bound: rel.box_count(),
            });
        }
        if rel.cartons_of(b).is_empty() {
            return Err(Error::Config(format!("fixed box {b} is produced by no carton")));
        }
    }
    Ok(())
}

/// Box variables with the coupling constraints to cartons.
fn add_box_coupling(m: &mut MipModel) -> Vec<usize> {
    let boxes = m.rel.box_count();
    let box_vars: Vec<usize> = (0..boxes)
        .map(|b| m.var(format!("y{b}"), VarRole::Box(b), true))
        .collect();
    let pairs = m.rel.pairs().to_vec();
    for (k, b) in pairs {
        let zk = m.carton_vars[k];
        m.constrain(TAG_CARTON_IMPLIES_BOXES, vec![(zk, 1), (box_vars[b], -1)], Sense::Le, 0);
    }
    for (b, &yb) in box_vars.iter().enumerate() {
        let mut terms: Vec<(usize, i64)> =
            m.rel.cartons_of(b).iter().map(|&k| (m.carton_vars[k], 1)).collect();
        terms.push((yb, -1));
        m.constrain(TAG_BOX_REQUIRES_CARTON, terms, Sense::Ge, 0);
    }
    m.add_selection_constraints();
    for b in m.fixed_boxes.clone() {
        m.constrain(TAG_FIXED_BOXES, vec![(box_vars[b], 1)], Sense::Eq, 1);
    }
    box_vars
}

/// The full model with packing variables `x_pb` for every fitting pair.
pub fn build_direct(
    fit: &BitMatrix,
    box_volumes: &[i64],
    unit_volumes: &[i64],
    rel: &RelTable,
    cfg: &MasterConfig,
) -> Result<MipModel> {
    let cells = fit.rows() as u64 * fit.cols() as u64;
    if cells > cfg.direct_cap {
        return Err(Error::Size(format!(
            "direct model needs P*B = {cells} > {} cells; use a Benders mode",
            cfg.direct_cap
        )));
    }
    if fit.cols() != rel.box_count() || box_volumes.len() != fit.cols() || unit_volumes.len() != fit.rows() {
        return Err(Error::Config("fitting matrix does not match boxes and units".into()));
    }
    let options: Vec<Vec<(usize, i64)>> = (0..fit.rows())
        .map(|p| {
            fit.row_ones(p)
                .map(|b| (b, box_volumes[b] - unit_volumes[p]))
                .collect()
        })
        .collect();
    let mut m = MipModel::new(Shape::Direct { options: options.clone() }, rel, cfg)?;
    m.add_cartons();
    let box_vars = add_box_coupling(&mut m);
    for (p, opts) in options.iter().enumerate() {
        let mut ship = Vec::with_capacity(opts.len());
        for &(b, cost) in opts {
            let name = format!("x{}", m.variables.len());
            let x = m.var(name, VarRole::Pack { unit: p, r#box: b }, true);
            m.objective.push((x, cost));
            ship.push((x, 1));
            m.constrain(TAG_AVAILABLE, vec![(x, 1), (box_vars[b], -1)], Sense::Le, 0);
        }
        m.constrain(TAG_SHIPPABLE, ship, Sense::Eq, 1);
    }
    Ok(m)
}

fn check_cut_width(pool: &CutPool, width: usize) -> Result<()> {
    match pool.cuts().iter().find(|c| c.coefficients.len() != width) {
        Some(c) => Err(Error::Config(format!(
            "cut has {} coefficients, expected {width}",
            c.coefficients.len()
        ))),
        None => Ok(()),
    }
}

/// Master over cartons and `theta` only.
pub fn build_master_xy(pool: &CutPool, rel: &RelTable, cfg: &MasterConfig) -> Result<MipModel> {
    check_cut_width(pool, rel.carton_count())?;
    let mut m = MipModel::new(
        Shape::CartonCuts {
            cuts: pool.cuts().to_vec(),
        },
        rel,
        cfg,
    )?;
    m.add_cartons();
    let theta = m.var("theta".into(), VarRole::Theta, false);
    m.objective.push((theta, 1));
    for cut in pool.cuts() {
        let mut terms = vec![(theta, 1)];
        terms.extend(
            cut.coefficients
                .iter()
                .enumerate()
                .filter(|(_, &w)| w != 0)
                .map(|(k, &w)| (m.carton_vars[k], -w)),
        );
        m.constrain(TAG_OPTIMALITY_CUT, terms, Sense::Ge, cut.intercept);
    }
    m.add_selection_constraints();
    for b in m.fixed_boxes.clone() {
        let terms = m.rel.cartons_of(b).iter().map(|&k| (m.carton_vars[k], 1)).collect();
        m.constrain(TAG_FIXED_BOXES, terms, Sense::Ge, 1);
    }
    Ok(m)
}

/// Master over boxes, cartons and `theta`, keeping the coupling constraints.
pub fn build_master_x(pool: &CutPool, rel: &RelTable, cfg: &MasterConfig) -> Result<MipModel> {
    check_cut_width(pool, rel.box_count())?;
    let mut m = MipModel::new(
        Shape::BoxCuts {
            cuts: pool.cuts().to_vec(),
        },
        rel,
        cfg,
    )?;
    m.add_cartons();
    let theta = m.var("theta".into(), VarRole::Theta, false);
    m.objective.push((theta, 1));
    let box_vars = add_box_coupling(&mut m);
    for cut in pool.cuts() {
        let mut terms = vec![(theta, 1)];
        terms.extend(
            cut.coefficients
                .iter()
                .enumerate()
                .filter(|(_, &w)| w != 0)
                .map(|(b, &w)| (box_vars[b], -w)),
        );
        m.constrain(TAG_OPTIMALITY_CUT, terms, Sense::Ge, cut.intercept);
    }
    Ok(m)
}
