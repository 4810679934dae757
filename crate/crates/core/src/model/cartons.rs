use std::collections::{BTreeMap, HashMap};

use super::{BoxFormat, Carton, Dim3, GridSpec};
use crate::error::{Error, Result};

/// Decides which heights a carton folded to `dims` can be creased at.
pub trait CreaseRule {
    /// Candidate crease heights. Must contain `dims.h`.
    fn crease_heights(&self, dims: Dim3) -> Vec<u32>;
}

/// Crease lines at fixed fractions of the carton height, rounded down onto
/// the height lattice `min_height + i * step`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuarterCreaseRule {
    /// `(numerator, denominator)` pairs.
    pub fractions: Vec<(u32, u32)>,
    pub min_height: u32,
    pub step: u32,
}

impl QuarterCreaseRule {
    pub fn new(min_height: u32, step: u32) -> Self {
        QuarterCreaseRule {
            fractions: vec![(1, 1), (3, 4), (1, 2), (1, 4)],
            min_height,
            step: step.max(1),
        }
    }

    pub fn for_grid(grid: &GridSpec) -> Self {
        Self::new(grid.min.h, grid.step)
    }

    pub fn max_creases(&self) -> usize {
        self.fractions.len()
    }
}

impl CreaseRule for QuarterCreaseRule {
    fn crease_heights(&self, dims: Dim3) -> Vec<u32> {
        let mut heights = vec![dims.h];
        for &(num, den) in &self.fractions {
            let raw = (dims.h as u64 * num as u64 / den as u64) as u32;
            if raw < self.min_height {
                continue;
            }
            heights.push(self.min_height + (raw - self.min_height) / self.step * self.step);
        }
        heights.sort_unstable();
        heights.dedup();
        heights
    }
}

/// `a` is a strict subset of `b`; both sorted and deduplicated.
fn strict_subset(a: &[u32], b: &[u32]) -> bool {
    if a.len() >= b.len() {
        return false;
    }
    let mut j = 0;
    for &x in a {
        while j < b.len() && b[j] < x {
            j += 1;
        }
        if j == b.len() || b[j] != x {
            return false;
        }
        j += 1;
    }
    true
}

/// Derives one carton per box unless its crease set is covered by a bigger
/// carton of the same footprint, and the carton/box relation.
pub fn derive_cartons(boxes: &[BoxFormat], rule: &dyn CreaseRule) -> (Vec<Carton>, RelTable) {
    let by_dims: HashMap<Dim3, usize> = boxes.iter().map(|b| (b.dims, b.id)).collect();

    let candidates: Vec<(Dim3, Vec<u32>)> = boxes
        .iter()
        .map(|b| {
            let d = b.dims;
            let heights = rule
                .crease_heights(d)
                .into_iter()
                .filter(|&h| h == d.h || (h <= d.h && by_dims.contains_key(&Dim3 { h, ..d })))
                .collect::<Vec<_>>();
            (d, heights)
        })
        .collect();

    let mut footprints: BTreeMap<(u32, u32), Vec<usize>> = BTreeMap::new();
    for (i, (d, _)) in candidates.iter().enumerate() {
        footprints.entry((d.l, d.w)).or_default().push(i);
    }

    let mut covered = vec![false; candidates.len()];
    for members in footprints.values() {
        for &i in members {
            covered[i] = members
                .iter()
                .any(|&j| j != i && strict_subset(&candidates[i].1, &candidates[j].1));
        }
    }

    let mut cartons = Vec::new();
    let mut pairs = Vec::new();
    for (i, (dims, heights)) in candidates.into_iter().enumerate() {
        if covered[i] {
            continue;
        }
        let id = cartons.len();
        for &h in &heights {
            pairs.push((id, by_dims[&Dim3 { h, ..dims }]));
        }
        cartons.push(Carton {
            id,
            dims,
            crease_heights: heights,
        });
    }
    let rel = RelTable::new(pairs, cartons.len(), boxes.len())
        .expect("derived relation covers every box");
    (cartons, rel)
}

/// Which boxes each carton can be folded into.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelTable {
    pairs: Vec<(usize, usize)>,
    boxes_of: Vec<Vec<usize>>,
    cartons_of: Vec<Vec<usize>>,
}

impl RelTable {
    /// Builds the relation from `(carton, box)` pairs. Pairs are sorted;
    /// duplicates, out-of-range ids and uncovered boxes or cartons are
    /// rejected.
    pub fn new(mut pairs: Vec<(usize, usize)>, cartons: usize, boxes: usize) -> Result<Self> {
        pairs.sort_unstable();
        if let Some(w) = pairs.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!(
                "duplicate relation pair ({}, {})",
                w[0].0, w[0].1
            )));
        }
        let mut boxes_of = vec![Vec::new(); cartons];
        let mut cartons_of = vec![Vec::new(); boxes];
        for &(k, b) in &pairs {
            if k >= cartons {
                return Err(Error::Index { index: k, bound: cartons });
            }
            if b >= boxes {
                return Err(Error::Index { index: b, bound: boxes });
            }
            boxes_of[k].push(b);
            cartons_of[b].push(k);
        }
        if let Some(k) = boxes_of.iter().position(Vec::is_empty) {
            return Err(Error::Config(format!("carton {k} produces no box")));
        }
        if let Some(b) = cartons_of.iter().position(Vec::is_empty) {
            return Err(Error::Config(format!("box {b} is produced by no carton")));
        }
        Ok(RelTable {
            pairs,
            boxes_of,
            cartons_of,
        })
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn carton_count(&self) -> usize {
        self.boxes_of.len()
    }

    pub fn box_count(&self) -> usize {
        self.cartons_of.len()
    }

    pub fn boxes_of(&self, carton: usize) -> &[usize] {
        &self.boxes_of[carton]
    }

    pub fn cartons_of(&self, b: usize) -> &[usize] {
        &self.cartons_of[b]
    }
}
