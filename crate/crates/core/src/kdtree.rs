//! Adaptive KD-tree evaluation of one packing unit against a box grid.
//!
//! Relies on monotonicity: a unit that fits a box also fits every box that
//! is at least as large in all three dimensions. A region of the grid is
//! resolved at once when its smallest corner fits or its largest corner does
//! not. Otherwise a binary search along the region diagonal finds the first
//! fitting point `s`; everything above `s` fits, everything below `s - 1`
//! does not, and the six mixed octants are partitioned recursively.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binpack::{FitOracle, FitVerdict};
use crate::error::{Error, Result};
use crate::fitmatrix::{BitMatrix, BitSet, EvalStats};
use crate::model::{BoxFormat, Dim3, GridSpec, PackingUnit};

/// Inclusive lattice box `[lo, hi]` in grid-step units.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Region {
    pub lo: [u32; 3],
    pub hi: [u32; 3],
}

impl Region {
    pub fn new(lo: [u32; 3], hi: [u32; 3]) -> Result<Self> {
        if (0..3).any(|d| lo[d] > hi[d]) {
            return Err(Error::Domain(format!("region corners {lo:?} > {hi:?}")));
        }
        Ok(Region { lo, hi })
    }

    /// Whole lattice of a grid.
    pub fn of_grid(grid: &GridSpec) -> Self {
        let n = grid.shape();
        Region {
            lo: [0; 3],
            hi: [n[0] - 1, n[1] - 1, n[2] - 1],
        }
    }

    /// Diagonal length `max_d (hi_d - lo_d)`.
    pub fn span(&self) -> u32 {
        (0..3).map(|d| self.hi[d] - self.lo[d]).max().unwrap()
    }

    pub fn point_count(&self) -> u64 {
        (0..3).map(|d| (self.hi[d] - self.lo[d]) as u64 + 1).product()
    }

    pub fn contains(&self, p: [u32; 3]) -> bool {
        (0..3).all(|d| self.lo[d] <= p[d] && p[d] <= self.hi[d])
    }

    pub fn points(&self) -> impl Iterator<Item = [u32; 3]> + '_ {
        let r = *self;
        (r.lo[0]..=r.hi[0]).flat_map(move |i| {
            (r.lo[1]..=r.hi[1]).flat_map(move |j| (r.lo[2]..=r.hi[2]).map(move |k| [i, j, k]))
        })
    }
}

/// Point `t` of the discrete diagonal from `lo` (t = 0) to `hi` (t = span).
/// Component `d` is `lo_d + floor(t * (hi_d - lo_d) / span)`.
pub fn diag_point(r: &Region, t: u32) -> Result<[u32; 3]> {
    let n = r.span();
    if t > n {
        return Err(Error::Index {
            index: t as usize,
            bound: n as usize + 1,
        });
    }
    if n == 0 {
        return Ok(r.lo);
    }
    Ok([0, 1, 2].map(|d| {
        let extent = (r.hi[d] - r.lo[d]) as u64;
        r.lo[d] + (t as u64 * extent / n as u64) as u32
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KdConfig {
    /// Regions with at most this many points are evaluated point by point.
    pub leaf_threshold: u64,
}

impl Default for KdConfig {
    fn default() -> Self {
        KdConfig { leaf_threshold: 30 }
    }
}

/// Counters of one KD-tree evaluation.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KdStats {
    pub oracle_calls: u64,
    pub exhausted_calls: u64,
    pub splits: u64,
    pub leaves: u64,
}

impl KdStats {
    fn merge(&mut self, other: &KdStats) {
        self.oracle_calls += other.oracle_calls;
        self.exhausted_calls += other.exhausted_calls;
        self.splits += other.splits;
        self.leaves += other.leaves;
    }
}

const UNKNOWN: u8 = 0;
const FIT: u8 = 1;
const UNFIT: u8 = 2;

struct Evaluator<'a, F> {
    grid: &'a GridSpec,
    state: Vec<u8>,
    oracle: F,
    leaf_threshold: u64,
    stats: KdStats,
}

impl<F: FnMut(Dim3) -> FitVerdict> Evaluator<'_, F> {
    fn query(&mut self, p: [u32; 3]) -> bool {
        let idx = self.grid.linear(p);
        match self.state[idx] {
            FIT => true,
            UNFIT => false,
            _ => {
                let v = (self.oracle)(self.grid.dims_at(p));
                self.stats.oracle_calls += 1;
                self.stats.exhausted_calls += v.exhausted as u64;
                self.state[idx] = if v.fits { FIT } else { UNFIT };
                v.fits
            }
        }
    }

    /// Marks a region; a previously observed contradicting verdict is a
    /// monotonicity violation against `witness`.
    fn mark(&mut self, r: Region, fit: bool, witness: [u32; 3]) -> Result<()> {
        let (value, opposite) = if fit { (FIT, UNFIT) } else { (UNFIT, FIT) };
        for p in r.points() {
            let idx = self.grid.linear(p);
            if self.state[idx] == opposite {
                return Err(self.violation(if fit { (witness, p) } else { (p, witness) }));
            }
            self.state[idx] = value;
        }
        Ok(())
    }

    fn violation(&self, (fits, unfit): ([u32; 3], [u32; 3])) -> Error {
        Error::NonMonotone {
            fits: self.grid.dims_at(fits),
            unfit: self.grid.dims_at(unfit),
        }
    }

    fn leaf(&mut self, r: Region) -> Result<()> {
        self.stats.leaves += 1;
        let points: Vec<([u32; 3], bool)> = r.points().map(|p| (p, self.query(p))).collect();
        for &(a, fa) in &points {
            if !fa {
                continue;
            }
            for &(b, fb) in &points {
                if !fb && (0..3).all(|d| a[d] <= b[d]) {
                    return Err(self.violation((a, b)));
                }
            }
        }
        Ok(())
    }

    fn solve(&mut self, r: Region) -> Result<()> {
        if self.query(r.lo) {
            return self.mark(r, true, r.lo);
        }
        if !self.query(r.hi) {
            return self.mark(r, false, r.hi);
        }
        if r.point_count() <= self.leaf_threshold {
            return self.leaf(r);
        }
        self.stats.splits += 1;

        // lo does not fit, hi does: the first fitting diagonal point exists.
        let (mut below, mut above) = (0, r.span());
        while above - below > 1 {
            let mid = below + (above - below) / 2;
            if self.query(diag_point(&r, mid)?) {
                above = mid;
            } else {
                below = mid;
            }
        }
        let s = diag_point(&r, above)?;
        let s_prev = diag_point(&r, above - 1)?;

        self.mark(Region { lo: s, hi: r.hi }, true, s)?;
        if (0..3).all(|d| s[d] > r.lo[d]) {
            let below_s = Region {
                lo: r.lo,
                hi: [0, 1, 2].map(|d| s[d] - 1),
            };
            self.mark(below_s, false, s_prev)?;
        }

        // Octants mixing low and high halves; bit d set selects the high half.
        for mask in 1u8..7 {
            let mut lo = [0; 3];
            let mut hi = [0; 3];
            let mut empty = false;
            for d in 0..3 {
                if mask >> d & 1 == 1 {
                    lo[d] = s[d];
                    hi[d] = r.hi[d];
                } else if s[d] == r.lo[d] {
                    empty = true;
                } else {
                    lo[d] = r.lo[d];
                    hi[d] = s[d] - 1;
                }
            }
            if !empty {
                self.solve(Region { lo, hi })?;
            }
        }
        Ok(())
    }
}

/// Evaluates a monotone oracle on every point of `grid`. Bit `grid.linear(p)`
/// of the result is the verdict at lattice point `p`.
pub fn evaluate_unit<F>(grid: &GridSpec, oracle: F, cfg: &KdConfig) -> Result<(BitSet, KdStats)>
where
    F: FnMut(Dim3) -> FitVerdict,
{
    if cfg.leaf_threshold == 0 {
        return Err(Error::Config("leaf threshold must be at least 1".into()));
    }
    let mut ev = Evaluator {
        grid,
        state: vec![UNKNOWN; grid.point_count()],
        oracle,
        leaf_threshold: cfg.leaf_threshold,
        stats: KdStats::default(),
    };
    ev.solve(Region::of_grid(grid))?;
    debug_assert!(ev.state.iter().all(|&s| s != UNKNOWN));
    let bits = BitSet::from_indices(
        ev.state.len(),
        ev.state.iter().enumerate().filter(|(_, &s)| s == FIT).map(|(i, _)| i),
    );
    Ok((bits, ev.stats))
}

/// Fills the fitting matrix for all units by KD-tree evaluation over the
/// full rectangular grid, projected onto `boxes`. Units run in parallel.
pub fn evaluate_all(
    units: &[PackingUnit],
    grid: &GridSpec,
    boxes: &[BoxFormat],
    oracle: &dyn FitOracle,
    cfg: &KdConfig,
) -> Result<(BitMatrix, EvalStats, KdStats)> {
    let start = Instant::now();
    let lattice: Vec<usize> = boxes
        .iter()
        .map(|b| {
            grid.index_of(b.dims)
                .map(|idx| grid.linear(idx))
                .ok_or_else(|| Error::Config(format!("box {} ({}) is off the grid", b.id, b.dims)))
        })
        .collect::<Result<_>>()?;

    let mut m = BitMatrix::new(units.len(), boxes.len());
    let per_unit: Vec<KdStats> = m
        .par_rows_mut()
        .zip(units.par_iter())
        .map(|(row, unit)| {
            let items = unit.item_dims();
            let (bits, stats) = evaluate_unit(grid, |dims| oracle.check(&items, dims), cfg)?;
            for (b, &at) in lattice.iter().enumerate() {
                if bits.contains(at) {
                    row[b / 64] |= 1 << (b % 64);
                }
            }
            Ok(stats)
        })
        .collect::<Result<_>>()?;

    let mut kd = KdStats::default();
    for s in &per_unit {
        kd.merge(s);
    }
    let stats = EvalStats {
        oracle_calls: kd.oracle_calls,
        exhausted_calls: kd.exhausted_calls,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    Ok((m, stats, kd))
}

fn log2_exact(n: u64) -> Result<u32> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::Domain(format!("{n} is not a power of two")));
    }
    Ok(n.trailing_zeros())
}

/// Worst-case oracle evaluations on an `n`-sided cube when every split is
/// centred: `T(1) = 1`, `T(n) = log2(n) + 6 T(n / 2)`.
pub fn predicted_worst_case_evals(n: u64) -> Result<u64> {
    let k = log2_exact(n)?;
    let mut t = 1u64;
    for level in 1..=k {
        t = level as u64 + 6 * t;
    }
    Ok(t)
}

/// Closed form of [`predicted_worst_case_evals`]:
/// `31/25 n^log2(6) - log2(n)/5 - 6/25`, evaluated in exact integers as
/// `(31 * 6^k - 5k - 6) / 25` for `n = 2^k`.
pub fn closed_form_worst_case_evals(n: u64) -> Result<u64> {
    let k = log2_exact(n)? as u64;
    let numerator = 31 * 6u64.pow(k as u32) - 5 * k - 6;
    debug_assert_eq!(numerator % 25, 0);
    Ok(numerator / 25)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binpack::BinPacker;
    use crate::fitmatrix::evaluate_exhaustive;
    use crate::model::{generate_box_grid, Item};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cube_grid(n: u32) -> GridSpec {
        GridSpec::new(
            Dim3::new(1, 1, 1).unwrap(),
            Dim3::new(n, n, n).unwrap(),
            1,
        )
        .unwrap()
    }

    fn verdict(fits: bool) -> FitVerdict {
        FitVerdict::decided(fits)
    }

    #[test]
    fn diagonal_examples() {
        let cube = Region::new([0; 3], [8; 3]).unwrap();
        assert_eq!(diag_point(&cube, 4).unwrap(), [4, 4, 4]);
        let r = Region::new([0; 3], [8, 4, 2]).unwrap();
        assert_eq!(diag_point(&r, 8).unwrap(), [8, 4, 2]);
        assert_eq!(diag_point(&r, 0).unwrap(), [0, 0, 0]);
        assert_eq!(diag_point(&r, 3).unwrap(), [3, 1, 0]);
        assert!(matches!(diag_point(&r, 9), Err(Error::Index { .. })));
        let point = Region::new([2; 3], [2; 3]).unwrap();
        assert_eq!(diag_point(&point, 0).unwrap(), [2; 3]);
    }

    #[test]
    fn diagonal_steps_are_unit() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let lo = [0; 3].map(|_| rng.gen_range(0..20));
            let hi = [0, 1, 2].map(|d| lo[d] + rng.gen_range(0..30));
            let r = Region::new(lo, hi).unwrap();
            let mut prev = diag_point(&r, 0).unwrap();
            assert_eq!(prev, lo);
            for t in 1..=r.span() {
                let p = diag_point(&r, t).unwrap();
                for d in 0..3 {
                    assert!(p[d] - prev[d] <= 1 && p[d] >= prev[d]);
                }
                prev = p;
            }
            assert_eq!(prev, hi);
        }
    }

    #[test]
    fn constant_oracles() {
        let g = cube_grid(10);
        let (bits, stats) = evaluate_unit(&g, |_| verdict(true), &KdConfig::default()).unwrap();
        assert_eq!(stats.oracle_calls, 1);
        assert_eq!(bits.count_ones(), 1000);
        let (bits, stats) = evaluate_unit(&g, |_| verdict(false), &KdConfig::default()).unwrap();
        assert_eq!(stats.oracle_calls, 2);
        assert_eq!(bits.count_ones(), 0);
    }

    /// Fits iff the point dominates one of the generators.
    fn upset_oracle(gens: Vec<Dim3>) -> impl FnMut(Dim3) -> FitVerdict {
        move |d: Dim3| verdict(gens.iter().any(|g| g.le_all(&d)))
    }

    fn exhaustive_bits(grid: &GridSpec, mut f: impl FnMut(Dim3) -> FitVerdict) -> BitSet {
        let r = Region::of_grid(grid);
        BitSet::from_indices(
            grid.point_count(),
            r.points().filter(|&p| f(grid.dims_at(p)).fits).map(|p| grid.linear(p)),
        )
    }

    #[test]
    fn random_monotone_oracles_match_exhaustive() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..60 {
            let shape = [0; 3].map(|_| rng.gen_range(1..=25u32));
            let grid = GridSpec::new(
                Dim3::new(1, 1, 1).unwrap(),
                Dim3::from_array(shape),
                1,
            )
            .unwrap();
            let gens: Vec<Dim3> = (0..rng.gen_range(0..5))
                .map(|_| Dim3::from_array([0, 1, 2].map(|d| rng.gen_range(1..=shape[d] + 2))))
                .collect();
            let leaf = rng.gen_range(1..=40);
            let (bits, stats) =
                evaluate_unit(&grid, upset_oracle(gens.clone()), &KdConfig { leaf_threshold: leaf })
                    .unwrap();
            assert_eq!(bits, exhaustive_bits(&grid, upset_oracle(gens)));
            assert!(stats.oracle_calls as usize <= grid.point_count());
        }
    }

    #[test]
    fn fewer_calls_than_points_on_cubes() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for n in [4u32, 5, 8, 12] {
            let grid = cube_grid(n);
            for _ in 0..30 {
                let gens: Vec<Dim3> = (0..rng.gen_range(1..6))
                    .map(|_| Dim3::from_array([0; 3].map(|_| rng.gen_range(1..=n))))
                    .collect();
                let (_, stats) =
                    evaluate_unit(&grid, upset_oracle(gens), &KdConfig::default()).unwrap();
                assert!(stats.oracle_calls < (n as u64).pow(3), "n={n} calls={}", stats.oracle_calls);
            }
        }
    }

    #[test]
    fn non_monotone_oracle_is_reported() {
        let grid = cube_grid(3);
        // fits the middle and the top corner only
        let res = evaluate_unit(
            &grid,
            |d| verdict(d == Dim3::new(2, 2, 2).unwrap() || d == Dim3::new(3, 3, 3).unwrap()),
            &KdConfig::default(),
        );
        assert!(matches!(res, Err(Error::NonMonotone { .. })));
    }

    #[test]
    fn recurrence_and_closed_form() {
        assert_eq!(predicted_worst_case_evals(1).unwrap(), 1);
        assert_eq!(predicted_worst_case_evals(2).unwrap(), 7);
        assert_eq!(predicted_worst_case_evals(4).unwrap(), 44);
        for k in 0..15 {
            let n = 1u64 << k;
            assert_eq!(
                predicted_worst_case_evals(n).unwrap(),
                closed_form_worst_case_evals(n).unwrap()
            );
        }
        assert!(predicted_worst_case_evals(6).is_err());
        assert!(predicted_worst_case_evals(0).is_err());
    }

    #[test]
    fn all_units_match_exhaustive_with_packer() {
        let grid = GridSpec::new(
            Dim3::new(1, 1, 1).unwrap(),
            Dim3::new(8, 6, 5).unwrap(),
            1,
        )
        .unwrap();
        let boxes = generate_box_grid(grid.min, grid.max, grid.step).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let units: Vec<PackingUnit> = (0..12)
            .map(|id| {
                let items = (0..rng.gen_range(1..=3))
                    .map(|_| Item {
                        dims: Dim3::from_array([0; 3].map(|_| rng.gen_range(1..=4))),
                    })
                    .collect();
                PackingUnit::new(id, id.to_string(), items).unwrap()
            })
            .collect();
        let packer = BinPacker::default();
        let (kd, stats, _) = evaluate_all(&units, &grid, &boxes, &packer, &KdConfig::default()).unwrap();
        let (reference, ref_stats) = evaluate_exhaustive(&units, &boxes, &packer);
        assert_eq!(kd, reference);
        assert!(stats.oracle_calls > 0 && ref_stats.oracle_calls == (units.len() * boxes.len()) as u64);
    }

    #[test]
    fn tiny_grid_all_true() {
        let grid = cube_grid(2);
        let boxes = generate_box_grid(grid.min, grid.max, 1).unwrap();
        let unit = PackingUnit::new(0, "u", vec![Item { dims: Dim3::new(1, 1, 1).unwrap() }]).unwrap();
        let always = |_: &[Dim3], _: Dim3| FitVerdict::decided(true);
        let (m, stats, _) =
            evaluate_all(&[unit], &grid, &boxes, &always, &KdConfig::default()).unwrap();
        assert_eq!(m.row_ones(0).count(), boxes.len());
        assert!(stats.oracle_calls <= 8);
    }
}
