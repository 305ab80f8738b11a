#![allow(dead_code)]

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use ultradiff::{BallAddress, Base, MeasureTree, PiecewiseFunction, RateProfile, Window};

#[derive(Clone, Debug)]
pub struct Case {
    pub tree: MeasureTree,
    pub kernel: RateProfile,
    pub alpha: f64,
}

pub fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

pub fn random_density(rng: &mut impl Rng, n: usize, zero_fraction: f64) -> Vec<BigRational> {
    let mut density: Vec<BigRational> = (0..n)
        .map(|_| {
            if rng.random_bool(zero_fraction) {
                q(0, 1)
            } else {
                q(rng.random_range(1..=9), rng.random_range(1..=6))
            }
        })
        .collect();
    if density.iter().all(|d| d == &q(0, 1)) {
        let i = rng.random_range(0..n);
        density[i] = q(1, 1);
    }
    density
}

/// Fifty trees: `p` cycling through 2, 3, 5, depths up to 5 (up to 4 for
/// `p = 5`), about a fifth of the leaves empty, `alpha` cycling through
/// 0.5, 1, 2.
pub fn corpus() -> Vec<Case> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(0x5eed_0001);
    (0..50)
        .map(|i| {
            let p = [2u32, 3, 5][i % 3];
            let alpha = [0.5, 1.0, 2.0][(i / 3) % 3];
            let max_depth = if p == 5 { 4 } else { 5 };
            let depth = rng.random_range(2..=max_depth);
            let gamma_max = rng.random_range(-1..=1);
            let base = Base::new(p).unwrap();
            let window = Window::new(gamma_max - depth, gamma_max).unwrap();
            let n = (p as usize).pow(depth as u32);
            let tree =
                MeasureTree::from_leaf_densities(base, window, random_density(&mut rng, n, 0.2))
                    .unwrap();
            let kernel = RateProfile::vladimirov(alpha, window, base).unwrap();
            Case {
                tree,
                kernel,
                alpha,
            }
        })
        .collect()
}

pub fn random_function(rng: &mut impl Rng, tree: &MeasureTree) -> PiecewiseFunction {
    let values = (0..tree.leaf_count())
        .map(|_| rng.random_range(-2.0..2.0))
        .collect();
    PiecewiseFunction::<f64>::zeros_like(tree).with_values(values)
}

/// Every ball of the window, coarse to fine.
pub fn all_balls(tree: &MeasureTree) -> Vec<BallAddress> {
    let w = tree.window();
    let p = tree.base().get() as usize;
    (w.gamma_min()..=w.gamma_max())
        .rev()
        .flat_map(|level| {
            let count = p.pow((w.gamma_max() - level) as u32);
            (0..count).map(move |i| BallAddress::from_index(tree.base(), w, level, i).unwrap())
        })
        .collect()
}

pub fn z2_indicator(depth: i32) -> (MeasureTree, RateProfile) {
    let base = Base::new(2).unwrap();
    let window = Window::new(-depth, 0).unwrap();
    let tree = MeasureTree::uniform_ball(&BallAddress::root(base, window), q(1, 1)).unwrap();
    (tree, RateProfile::vladimirov(1.0, window, base).unwrap())
}

/// Random trees for property tests: p in {2, 3, 5}, small depth, rational
/// densities with zeros, and a Vladimirov kernel.
pub fn case_strategy() -> impl proptest::strategy::Strategy<Value = Case> {
    use proptest::prelude::*;
    (0usize..3, 1i32..=3, -1i32..=1, 0usize..3)
        .prop_flat_map(|(pi, depth, gamma_max, ai)| {
            let p = [2u32, 3, 5][pi];
            let depth = if p == 5 { depth.min(2) } else { depth };
            let n = (p as usize).pow(depth as u32);
            (
                Just((p, depth, gamma_max, [0.5, 1.0, 2.0][ai])),
                proptest::collection::vec((0i64..6, 1i64..5), n),
            )
        })
        .prop_filter("needs mass", |(_, d)| d.iter().any(|(n, _)| *n > 0))
        .prop_map(|((p, depth, gamma_max, alpha), d)| {
            let base = Base::new(p).unwrap();
            let window = Window::new(gamma_max - depth, gamma_max).unwrap();
            // about a sixth of the leaves are empty
            let density = d.into_iter().map(|(n, den)| q(n, den)).collect();
            Case {
                tree: MeasureTree::from_leaf_densities(base, window, density).unwrap(),
                kernel: RateProfile::vladimirov(alpha, window, base).unwrap(),
                alpha,
            }
        })
}
