//! Random tiny instances and brute-force oracles shared by integration tests.
#![allow(dead_code)]

use boxopt::fitmatrix::BitMatrix;
use boxopt::model::RelTable;
use rand::Rng;

pub mod placement;

pub struct Tiny {
    pub fit: BitMatrix,
    pub box_volumes: Vec<i64>,
    pub unit_volumes: Vec<i64>,
    pub carton_volumes: Vec<i64>,
    pub rel: RelTable,
    pub m: usize,
    pub fixed: Vec<usize>,
}

/// Boxes in volume order; the largest box fits every unit and is fixed.
pub fn random_tiny<R: Rng>(rng: &mut R, max_b: usize, max_k: usize, max_p: usize, max_m: usize) -> Tiny {
    let b_count = rng.gen_range(2..=max_b);
    let k_count = rng.gen_range(2..=max_k);
    let p_count = rng.gen_range(1..=max_p);
    let mut box_volumes: Vec<i64> = (0..b_count).map(|_| rng.gen_range(10..1000)).collect();
    box_volumes.sort_unstable();

    let mut pairs = Vec::new();
    for b in 0..b_count {
        pairs.push((rng.gen_range(0..k_count), b));
        if rng.gen_bool(0.25) {
            pairs.push((rng.gen_range(0..k_count), b));
        }
    }
    for k in 0..k_count {
        pairs.push((k, rng.gen_range(0..b_count)));
    }
    pairs.sort_unstable();
    pairs.dedup();
    let rel = RelTable::new(pairs, k_count, b_count).unwrap();
    let carton_volumes = (0..k_count)
        .map(|k| rel.boxes_of(k).iter().map(|&b| box_volumes[b]).max().unwrap())
        .collect();

    let mut fit = BitMatrix::new(p_count, b_count);
    let mut unit_volumes = Vec::with_capacity(p_count);
    for p in 0..p_count {
        fit.set(p, b_count - 1, true).unwrap();
        for b in 0..b_count - 1 {
            if rng.gen_bool(0.35) {
                fit.set(p, b, true).unwrap();
            }
        }
        let smallest = fit.row_ones(p).map(|b| box_volumes[b]).min().unwrap();
        unit_volumes.push(rng.gen_range(1..=smallest));
    }
    Tiny {
        fit,
        box_volumes,
        unit_volumes,
        carton_volumes,
        rel,
        m: rng.gen_range(1..=max_m.min(k_count)),
        fixed: vec![b_count - 1],
    }
}

/// Each unit takes its cheapest available fitting box.
pub fn greedy_primal(t: &Tiny, available: &[bool]) -> Option<i64> {
    (0..t.fit.rows())
        .map(|p| {
            (0..t.fit.cols())
                .filter(|&b| available[b] && t.fit.get(p, b).unwrap())
                .map(|b| t.box_volumes[b] - t.unit_volumes[p])
                .min()
        })
        .sum()
}

pub fn boxes_of_selection(t: &Tiny, chosen: &[usize]) -> Vec<bool> {
    let mut y = vec![false; t.fit.cols()];
    for &(k, b) in t.rel.pairs() {
        if chosen.contains(&k) {
            y[b] = true;
        }
    }
    y
}

/// All `M` element subsets of `0..K`, lexicographic.
pub fn subsets(k: usize, m: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, k: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == m {
            out.push(cur.clone());
            return;
        }
        for i in start..k {
            cur.push(i);
            go(i + 1, k, m, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, k, m, &mut Vec::new(), &mut out);
    out
}

/// Optimum over all `C(K, M)` selections that produce the fixed boxes.
pub fn exhaustive_optimum(t: &Tiny) -> Option<i64> {
    subsets(t.rel.carton_count(), t.m)
        .iter()
        .filter_map(|s| {
            let y = boxes_of_selection(t, s);
            if t.fixed.iter().all(|&b| y[b]) {
                greedy_primal(t, &y)
            } else {
                None
            }
        })
        .min()
}
