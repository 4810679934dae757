mod common;

use boxopt::binpack::{fits, FitQuery};
use boxopt::model::Dim3;
use common::placement::brute;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn agrees_with_exhaustive_placement() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut positives = 0;
    for _ in 0..3000 {
        let c = [0; 3].map(|_| rng.gen_range(1..=4u32));
        let n = rng.gen_range(1..=3);
        let items: Vec<[u32; 3]> = (0..n)
            .map(|_| [0; 3].map(|_| rng.gen_range(1..=3u32)))
            .collect();
        let dims: Vec<Dim3> = items.iter().map(|&a| Dim3::from_array(a)).collect();
        let expect = brute(&items, c, 0);
        let got = fits(&FitQuery::new(&dims, Dim3::from_array(c)));
        assert!(!got.exhausted);
        assert_eq!(got.fits, expect, "items {items:?} container {c:?}");
        positives += expect as usize;
    }
    assert!(positives > 300, "too few fitting cases: {positives}");
}

#[test]
fn agrees_on_tight_four_item_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..800 {
        let c = [0; 3].map(|_| rng.gen_range(2..=4u32));
        let items: Vec<[u32; 3]> = (0..4)
            .map(|_| [0; 3].map(|_| rng.gen_range(1..=3u32)))
            .collect();
        let volume: u32 = items.iter().map(|a| a.iter().product::<u32>()).sum();
        if volume > c.iter().product() {
            continue;
        }
        let dims: Vec<Dim3> = items.iter().map(|&a| Dim3::from_array(a)).collect();
        let got = fits(&FitQuery::new(&dims, Dim3::from_array(c)));
        assert_eq!(got.fits, brute(&items, c, 0), "items {items:?} container {c:?}");
    }
}
