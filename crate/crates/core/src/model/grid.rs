use serde::{Deserialize, Serialize};

use super::{BoxFormat, Dim3};
use crate::error::{Error, Result};

/// An axis-aligned lattice of box dimensions `min + i * step`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min: Dim3,
    pub max: Dim3,
    pub step: u32,
}

impl GridSpec {
    pub fn new(min: Dim3, max: Dim3, step: u32) -> Result<Self> {
        if step == 0 {
            return Err(Error::Config("grid step must be positive".into()));
        }
        for (lo, hi) in min.to_array().into_iter().zip(max.to_array()) {
            if lo > hi {
                return Err(Error::Config(format!("grid min {min} exceeds max {max}")));
            }
            if (hi - lo) % step != 0 {
                return Err(Error::Config(format!(
                    "grid extent {min}..{max} is not divisible by step {step}"
                )));
            }
        }
        Ok(GridSpec { min, max, step })
    }

    /// Number of lattice points per axis.
    pub fn shape(&self) -> [u32; 3] {
        let lo = self.min.to_array();
        let hi = self.max.to_array();
        [0, 1, 2].map(|d| (hi[d] - lo[d]) / self.step + 1)
    }

    pub fn point_count(&self) -> usize {
        self.shape().iter().map(|&n| n as usize).product()
    }

    /// Millimetre dimensions of a lattice coordinate.
    pub fn dims_at(&self, idx: [u32; 3]) -> Dim3 {
        let lo = self.min.to_array();
        Dim3::from_array([0, 1, 2].map(|d| lo[d] + idx[d] * self.step))
    }

    /// Lattice coordinate of a millimetre dimension, if it lies on the grid.
    pub fn index_of(&self, dims: Dim3) -> Option<[u32; 3]> {
        let lo = self.min.to_array();
        let hi = self.max.to_array();
        let v = dims.to_array();
        let mut idx = [0u32; 3];
        for d in 0..3 {
            if v[d] < lo[d] || v[d] > hi[d] || (v[d] - lo[d]) % self.step != 0 {
                return None;
            }
            idx[d] = (v[d] - lo[d]) / self.step;
        }
        Some(idx)
    }

    /// Row-major linear index, `l` slowest.
    pub fn linear(&self, idx: [u32; 3]) -> usize {
        let n = self.shape();
        (idx[0] as usize * n[1] as usize + idx[1] as usize) * n[2] as usize + idx[2] as usize
    }

    pub fn boxes(&self) -> Vec<BoxFormat> {
        let n = self.shape();
        let mut dims = Vec::new();
        for i in 0..n[0] {
            for j in 0..n[1] {
                for k in 0..n[2] {
                    let d = self.dims_at([i, j, k]);
                    if d.l >= d.w && d.w >= d.h {
                        dims.push(d);
                    }
                }
            }
        }
        dims.sort_by_key(|d| (d.volume(), d.l, d.w, d.h));
        dims.into_iter()
            .enumerate()
            .map(|(id, dims)| BoxFormat {
                id,
                dims,
                volume: dims.volume(),
            })
            .collect()
    }

    /// The grid of the reference setup: 15.5 x 15.5 x 10.5 cm up to
    /// 99.5 x 59.5 x 59.5 cm in 1 cm steps.
    pub fn reference() -> Self {
        GridSpec {
            min: Dim3 { l: 155, w: 155, h: 105 },
            max: Dim3 { l: 995, w: 595, h: 595 },
            step: 10,
        }
    }
}

/// Every grid box with `l >= w >= h`, ids in nondecreasing volume order with
/// ties broken lexicographically by `(l, w, h)`.
pub fn generate_box_grid(min: Dim3, max: Dim3, step: u32) -> Result<Vec<BoxFormat>> {
    Ok(GridSpec::new(min, max, step)?.boxes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn d(l: u32, w: u32, h: u32) -> Dim3 {
        Dim3::new(l, w, h).unwrap()
    }

    #[test]
    fn reference_grid_count() {
        let g = GridSpec::reference();
        let boxes = generate_box_grid(g.min, g.max, g.step).unwrap();
        assert_eq!(boxes.len(), 71_790);
        assert_eq!(boxes.last().unwrap().dims, d(995, 595, 595));
    }

    #[test]
    fn degenerate_grid() {
        let boxes = generate_box_grid(d(200, 200, 100), d(200, 200, 100), 10).unwrap();
        assert_eq!(boxes.len(), 1);
        assert_eq!(boxes[0].volume, 4_000_000);
    }

    #[test]
    fn tiny_grid_enumeration() {
        let boxes = generate_box_grid(d(2, 2, 1), d(3, 3, 2), 1).unwrap();
        let got: Vec<Dim3> = boxes.iter().map(|b| b.dims).collect();
        // volumes 4, 6, 8, 9, 12, 18
        assert_eq!(
            got,
            vec![d(2, 2, 1), d(3, 2, 1), d(2, 2, 2), d(3, 3, 1), d(3, 2, 2), d(3, 3, 2)]
        );
    }

    #[test]
    fn invalid_bounds() {
        assert!(generate_box_grid(d(300, 100, 100), d(200, 100, 100), 10).is_err());
        assert!(generate_box_grid(d(100, 100, 100), d(205, 100, 100), 10).is_err());
        assert!(generate_box_grid(d(100, 100, 100), d(200, 100, 100), 0).is_err());
    }

    #[test]
    fn ties_break_lexicographically() {
        // 4x3x1 and 6x2x1 and 3x2x2 share volume 12
        let boxes = generate_box_grid(d(1, 1, 1), d(6, 6, 6), 1).unwrap();
        let twelve: Vec<Dim3> = boxes
            .iter()
            .filter(|b| b.volume == 12)
            .map(|b| b.dims)
            .collect();
        assert_eq!(twelve, vec![d(3, 2, 2), d(4, 3, 1), d(6, 2, 1)]);
    }

    #[test]
    fn random_grids_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let step = rng.gen_range(1..=5);
            let min = [0; 3].map(|_| rng.gen_range(1..=20u32));
            let n = [0; 3].map(|_| rng.gen_range(0..10u32));
            let max = [0, 1, 2].map(|i| min[i] + n[i] * step);
            let boxes =
                generate_box_grid(Dim3::from_array(min), Dim3::from_array(max), step).unwrap();

            let mut expected = 0;
            for l in (min[0]..=max[0]).step_by(step as usize) {
                for w in (min[1]..=max[1]).step_by(step as usize) {
                    for h in (min[2]..=max[2]).step_by(step as usize) {
                        if l >= w && w >= h {
                            expected += 1;
                        }
                    }
                }
            }
            assert_eq!(boxes.len(), expected);
            for (i, pair) in boxes.windows(2).enumerate() {
                assert!(pair[0].volume <= pair[1].volume);
                assert_eq!(pair[0].id, i);
            }
        }
    }

    #[test]
    fn index_round_trip() {
        let g = GridSpec::new(d(10, 20, 30), d(50, 40, 30), 10).unwrap();
        assert_eq!(g.shape(), [5, 3, 1]);
        let p = g.dims_at([3, 1, 0]);
        assert_eq!(p, d(40, 30, 30));
        assert_eq!(g.index_of(p), Some([3, 1, 0]));
        assert_eq!(g.index_of(d(41, 30, 30)), None);
        assert_eq!(g.linear([4, 2, 0]), g.point_count() - 1);
    }
}
