//! Exact decision procedure for "do these items fit into this box".
//!
//! Depth-first search over placements. Items are placed in nonincreasing
//! volume order, each at one of the candidate corners generated by the items
//! already placed, in every distinct axis-aligned orientation.

use serde::{Deserialize, Serialize};

use crate::model::Dim3;

pub const DEFAULT_NODE_BUDGET: u64 = 1_000_000;

#[derive(Clone, Copy, Debug)]
pub struct FitQuery<'a> {
    pub items: &'a [Dim3],
    pub container: Dim3,
    pub node_budget: u64,
}

impl<'a> FitQuery<'a> {
    pub fn new(items: &'a [Dim3], container: Dim3) -> Self {
        FitQuery {
            items,
            container,
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }
}

/// Outcome of a fit query. `exhausted` implies `!fits`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitVerdict {
    pub fits: bool,
    pub exhausted: bool,
    /// Placements explored.
    pub nodes: u64,
}

impl FitVerdict {
    pub fn decided(fits: bool) -> Self {
        FitVerdict {
            fits,
            exhausted: false,
            nodes: 0,
        }
    }
}

/// Anything that can decide whether a set of items fits a box.
pub trait FitOracle: Sync {
    fn check(&self, items: &[Dim3], container: Dim3) -> FitVerdict;
}

impl<F> FitOracle for F
where
    F: Fn(&[Dim3], Dim3) -> FitVerdict + Sync,
{
    fn check(&self, items: &[Dim3], container: Dim3) -> FitVerdict {
        self(items, container)
    }
}

/// The search-based packer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BinPacker {
    pub node_budget: u64,
}

impl Default for BinPacker {
    fn default() -> Self {
        BinPacker {
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }
}

impl FitOracle for BinPacker {
    fn check(&self, items: &[Dim3], container: Dim3) -> FitVerdict {
        fits(&FitQuery {
            items,
            container,
            node_budget: self.node_budget,
        })
    }
}

/// Distinct orientations of a cuboid; items with equal edges get fewer.
fn orientations(d: Dim3) -> Vec<[u32; 3]> {
    let [a, b, c] = d.to_array();
    let mut out: Vec<[u32; 3]> = vec![
        [a, b, c],
        [a, c, b],
        [b, a, c],
        [b, c, a],
        [c, a, b],
        [c, b, a],
    ];
    out.sort_unstable();
    out.dedup();
    out
}

#[derive(Clone, Copy)]
struct Placed {
    pos: [u32; 3],
    size: [u32; 3],
}

impl Placed {
    fn end(&self, axis: usize) -> u32 {
        self.pos[axis] + self.size[axis]
    }

    fn overlaps(&self, pos: [u32; 3], size: [u32; 3]) -> bool {
        (0..3).all(|d| pos[d] < self.end(d) && self.pos[d] < pos[d] + size[d])
    }

    fn contains(&self, p: [u32; 3]) -> bool {
        (0..3).all(|d| self.pos[d] <= p[d] && p[d] < self.end(d))
    }
}

struct Search<'a> {
    container: [u32; 3],
    orients: &'a [Vec<[u32; 3]>],
    placed: Vec<Placed>,
    /// Sorted coordinate lists per axis: 0 and every placed item's end.
    coords: [Vec<u32>; 3],
    nodes: u64,
    budget: u64,
    exhausted: bool,
}

impl Search<'_> {
    fn candidates(&self) -> Vec<[u32; 3]> {
        let mut out = Vec::new();
        for &z in &self.coords[2] {
            for &y in &self.coords[1] {
                for &x in &self.coords[0] {
                    let p = [x, y, z];
                    if (0..3).any(|d| p[d] >= self.container[d]) {
                        continue;
                    }
                    if self.placed.iter().any(|q| q.contains(p)) {
                        continue;
                    }
                    out.push(p);
                }
            }
        }
        out
    }

    fn insert_coords(&mut self, item: &Placed) -> [bool; 3] {
        let mut added = [false; 3];
        for (d, slot) in added.iter_mut().enumerate() {
            let e = item.end(d);
            if let Err(at) = self.coords[d].binary_search(&e) {
                self.coords[d].insert(at, e);
                *slot = true;
            }
        }
        added
    }

    fn remove_coords(&mut self, item: &Placed, added: [bool; 3]) {
        for (d, &was_added) in added.iter().enumerate() {
            if was_added {
                let at = self.coords[d].binary_search(&item.end(d)).unwrap();
                self.coords[d].remove(at);
            }
        }
    }

    fn place(&mut self, idx: usize) -> bool {
        if idx == self.orients.len() {
            return true;
        }
        for pos in self.candidates() {
            for &size in &self.orients[idx] {
                if (0..3).any(|d| pos[d] + size[d] > self.container[d]) {
                    continue;
                }
                if self.placed.iter().any(|q| q.overlaps(pos, size)) {
                    continue;
                }
                if self.nodes >= self.budget {
                    self.exhausted = true;
                    return false;
                }
                self.nodes += 1;
                let item = Placed { pos, size };
                let added = self.insert_coords(&item);
                self.placed.push(item);
                if self.place(idx + 1) {
                    return true;
                }
                self.placed.pop();
                self.remove_coords(&item, added);
                if self.exhausted {
                    return false;
                }
            }
        }
        false
    }
}

/// Decides whether all items fit into the container without overlap.
pub fn fits(query: &FitQuery) -> FitVerdict {
    let container = query.container;
    if query.items.is_empty() {
        return FitVerdict::decided(true);
    }
    // Every item must be dominated by the box after sorting edges.
    let sorted_box = container.sorted_desc();
    for it in query.items {
        let s = it.sorted_desc();
        if (0..3).any(|d| s[d] > sorted_box[d]) {
            return FitVerdict::decided(false);
        }
    }
    let total: i64 = query.items.iter().map(Dim3::volume).sum();
    if total > container.volume() {
        return FitVerdict::decided(false);
    }

    let mut items: Vec<Dim3> = query.items.to_vec();
    items.sort_by(|a, b| {
        b.volume()
            .cmp(&a.volume())
            .then_with(|| b.sorted_desc().cmp(&a.sorted_desc()))
    });
    let orients: Vec<Vec<[u32; 3]>> = items.iter().map(|&d| orientations(d)).collect();

    let mut search = Search {
        container: container.to_array(),
        orients: &orients,
        placed: Vec::with_capacity(items.len()),
        coords: [vec![0], vec![0], vec![0]],
        nodes: 0,
        budget: query.node_budget.max(1),
        exhausted: false,
    };
    let ok = search.place(0);
    FitVerdict {
        fits: ok,
        exhausted: !ok && search.exhausted,
        nodes: search.nodes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(l: u32, w: u32, h: u32) -> Dim3 {
        Dim3::new(l, w, h).unwrap()
    }

    fn check(items: &[Dim3], container: Dim3) -> FitVerdict {
        fits(&FitQuery::new(items, container))
    }

    #[test]
    fn exact_fill() {
        assert!(check(&[d(100, 100, 100)], d(100, 100, 100)).fits);
    }

    #[test]
    fn too_long_in_every_rotation() {
        let v = check(&[d(101, 100, 100)], d(100, 100, 100));
        assert!(!v.fits && !v.exhausted);
    }

    #[test]
    fn two_bars() {
        assert!(check(&[d(2, 1, 1), d(2, 1, 1)], d(2, 2, 1)).fits);
        assert!(!check(&[d(2, 1, 1), d(2, 1, 1)], d(2, 1, 1)).fits);
    }

    #[test]
    fn volume_prune_explores_nothing() {
        // 9 unit cubes into a 2x2x2 box
        let items = vec![d(1, 1, 1); 9];
        let v = check(&items, d(2, 2, 2));
        assert!(!v.fits);
        assert_eq!(v.nodes, 0);
    }

    #[test]
    fn orientation_dedup() {
        assert_eq!(orientations(d(1, 1, 1)).len(), 1);
        assert_eq!(orientations(d(2, 1, 1)).len(), 3);
        assert_eq!(orientations(d(3, 2, 1)).len(), 6);
    }

    #[test]
    fn needs_rotation() {
        assert!(!check(&[d(3, 1, 1), d(1, 3, 1), d(2, 2, 1)], d(3, 3, 1)).fits);
        assert!(check(&[d(3, 1, 1), d(1, 3, 1), d(2, 1, 1)], d(3, 3, 1)).fits);
        assert!(check(&[d(3, 1, 1), d(3, 1, 1), d(3, 1, 1)], d(3, 3, 1)).fits);
        assert!(check(&[d(1, 3, 1), d(3, 1, 1), d(1, 1, 3)], d(3, 3, 3)).fits);
    }

    #[test]
    fn budget_exhaustion_is_conservative() {
        // 8 cubes of side 2 and one too many thin plates; tiny budget
        let mut items = vec![d(2, 2, 2); 7];
        items.push(d(1, 1, 1));
        let v = fits(&FitQuery {
            items: &items,
            container: d(4, 4, 4),
            node_budget: 2,
        });
        assert!(!v.fits);
        assert!(v.exhausted);
        assert_eq!(v.nodes, 2);
    }

    #[test]
    fn deterministic_node_counts() {
        let items = [d(3, 2, 2), d(2, 2, 1), d(4, 1, 1), d(1, 1, 1)];
        let a = check(&items, d(4, 4, 3));
        let b = check(&items, d(4, 4, 3));
        assert_eq!(a, b);
    }
}
