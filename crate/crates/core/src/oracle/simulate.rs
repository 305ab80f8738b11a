use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_distr::Exp1;
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::Serialize;

use super::{build_generator, Propagator};
use crate::error::{Error, Result};
use crate::function::PiecewiseFunction;
use crate::kernel::RateProfile;
use crate::measure::MeasureTree;
use crate::padic::{lca_level, BallAddress, Base, Window};

#[derive(Clone, Debug, PartialEq)]
pub struct JumpProcessConfig {
    pub initial_leaf: BallAddress,
    pub horizon: f64,
    pub paths: usize,
    pub seed: u64,
}

/// Where the simulated paths sit at the horizon, per leaf of the window.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OccupancyHistogram {
    #[serde(skip)]
    pub base: Base,
    #[serde(skip)]
    pub window: Window,
    pub probabilities: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub paths: usize,
    pub seed: u64,
    /// Some path reached a leaf with no outgoing rate.
    pub absorbing: bool,
}

// Index of the slot hit by `u · Σ weights`, never a zero-weight slot.
fn pick(weights: &[f64], u: f64) -> usize {
    let total: f64 = weights.iter().sum();
    let target = u * total;
    let mut cum = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        cum += w;
        last = i;
        if target < cum {
            return i;
        }
    }
    last
}

struct Walker<'a> {
    tree: &'a MeasureTree,
    kernel: &'a RateProfile,
    p: usize,
    gmin: i32,
    depth: usize,
}

impl Walker<'_> {
    // Rate of jumping to a leaf whose lowest common ancestor with x sits at
    // level gmin + k + 1, for each k.
    fn shell_rates(&self, x: usize) -> Vec<f64> {
        let mut idx = x;
        (0..self.depth)
            .map(|k| {
                let level = self.gmin + k as i32 + 1;
                let parent = idx / self.p;
                let mass = self.tree.measure_at_f64(level, parent)
                    - self.tree.measure_at_f64(level - 1, idx);
                idx = parent;
                self.kernel.w(level) * mass.max(0.0)
            })
            .collect()
    }

    fn jump(&self, x: usize, shells: &[f64], rng: &mut Xoshiro256PlusPlus) -> usize {
        let k = pick(shells, rng.random());
        let level = self.gmin + k as i32 + 1;
        let own = (x / self.p.pow(k as u32)) % self.p;
        let parent = x / self.p.pow(k as u32 + 1);
        let siblings: Vec<f64> = (0..self.p)
            .map(|c| {
                if c == own {
                    0.0
                } else {
                    self.tree.measure_at_f64(level - 1, parent * self.p + c)
                }
            })
            .collect();
        let mut node = parent * self.p + pick(&siblings, rng.random());
        for l in (self.gmin..level - 1).rev() {
            let children: Vec<f64> = (0..self.p)
                .map(|c| self.tree.measure_at_f64(l, node * self.p + c))
                .collect();
            node = node * self.p + pick(&children, rng.random());
        }
        node
    }

    // Final leaf and whether an absorbing leaf was met.
    fn run(&self, start: usize, horizon: f64, rng: &mut Xoshiro256PlusPlus) -> (usize, bool) {
        let mut x = start;
        let mut t = 0.0;
        loop {
            let shells = self.shell_rates(x);
            let rate: f64 = shells.iter().sum();
            if rate <= 0.0 {
                return (x, true);
            }
            let hold: f64 = rng.sample(Exp1);
            t += hold / rate;
            if t > horizon {
                return (x, false);
            }
            x = self.jump(x, &shells, rng);
        }
    }
}

/// Exact (Gillespie) simulation of the jump process on the support of `m`
/// with rates `rate(x → y) = W(|x - y|_p) ∫_y m`.
///
/// Path `i` draws from the master generator advanced by `i` jumps of
/// `2^128` steps, so results do not depend on thread scheduling.
pub fn simulate(
    cfg: &JumpProcessConfig,
    tree: &MeasureTree,
    kernel: &RateProfile,
) -> Result<OccupancyHistogram> {
    kernel.check_compatible(tree.base(), tree.window())?;
    tree.check_ball(&cfg.initial_leaf)?;
    if !cfg.initial_leaf.is_leaf() {
        return Err(Error::InvalidPath(cfg.initial_leaf.path_string()));
    }
    let start = cfg.initial_leaf.index();
    if !tree.is_supported(start) {
        return Err(Error::ZeroMeasure(cfg.initial_leaf.path_string()));
    }
    if !cfg.horizon.is_finite() || cfg.horizon < 0.0 {
        return Err(Error::InvalidTime(cfg.horizon));
    }
    if cfg.paths == 0 {
        return Err(Error::Parse("path count must be positive".into()));
    }
    let walker = Walker {
        tree,
        kernel,
        p: tree.base().get() as usize,
        gmin: tree.window().gamma_min(),
        depth: tree.window().depth(),
    };
    let mut master = Xoshiro256PlusPlus::seed_from_u64(cfg.seed);
    let streams: Vec<Xoshiro256PlusPlus> = (0..cfg.paths)
        .map(|_| {
            let s = master.clone();
            master.jump();
            s
        })
        .collect();
    let ends: Vec<(usize, bool)> = streams
        .into_par_iter()
        .map(|mut rng| walker.run(start, cfg.horizon, &mut rng))
        .collect();

    let mut counts = vec![0u64; tree.leaf_count()];
    let mut absorbing = false;
    for (leaf, absorbed) in ends {
        counts[leaf] += 1;
        absorbing |= absorbed;
    }
    let n = cfg.paths as f64;
    let probabilities: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
    let standard_errors = probabilities
        .iter()
        .map(|q| (q * (1.0 - q) / n).sqrt())
        .collect();
    Ok(OccupancyHistogram {
        base: tree.base(),
        window: tree.window(),
        probabilities,
        standard_errors,
        paths: cfg.paths,
        seed: cfg.seed,
        absorbing,
    })
}

/// `rate(from → y)` for every leaf `y` (zero for `from` itself).
pub fn jump_rates(
    tree: &MeasureTree,
    kernel: &RateProfile,
    from: &BallAddress,
) -> Result<Vec<f64>> {
    kernel.check_compatible(tree.base(), tree.window())?;
    tree.check_ball(from)?;
    if !from.is_leaf() {
        return Err(Error::InvalidPath(from.path_string()));
    }
    let x = from.index();
    let gmin = tree.window().gamma_min();
    Ok(tree
        .leaf_weights_f64()
        .iter()
        .enumerate()
        .map(|(y, w)| {
            if y == x {
                0.0
            } else {
                kernel.w(lca_level(tree.base(), gmin, x, y)) * w
            }
        })
        .collect())
}

/// Checks `density(x) rate(x → y) = density(y) rate(y → x)` in exact
/// rational arithmetic (each `W` value is taken as the rational it stores).
pub fn detailed_balance_holds(tree: &MeasureTree, kernel: &RateProfile) -> Result<bool> {
    kernel.check_compatible(tree.base(), tree.window())?;
    let gmin = tree.window().gamma_min();
    let w = tree.leaf_weights();
    let support = tree.support_indices();
    let rate = |x: usize, y: usize| -> Result<BigRational> {
        let level = lca_level(tree.base(), gmin, x, y);
        let k = BigRational::from_float(kernel.w(level)).ok_or(Error::NonFinite("rate profile"))?;
        Ok(&w[y] * k)
    };
    for (i, &x) in support.iter().enumerate() {
        for &y in &support[i + 1..] {
            if tree.density(x) * rate(x, y)? != tree.density(y) * rate(y, x)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Law of the process at `horizon` started from `initial`, from the matrix
/// exponential: `P(x0 → y) = w_y (exp(G t) e_{x0})_y / w_{x0}` by detailed
/// balance.
pub fn occupancy_distribution(
    tree: &MeasureTree,
    kernel: &RateProfile,
    initial: &BallAddress,
    horizon: f64,
) -> Result<Vec<f64>> {
    tree.check_ball(initial)?;
    let x0 = initial.index();
    if !initial.is_leaf() || !tree.is_supported(x0) {
        return Err(Error::ZeroMeasure(initial.path_string()));
    }
    let generator = build_generator(tree, kernel)?;
    let propagator = Propagator::new(&generator)?;
    let mut delta = PiecewiseFunction::zeros_like(tree);
    delta.values_mut()[x0] = 1.0;
    let column = propagator.apply(&delta, horizon)?;
    let w = tree.leaf_weights_f64();
    Ok(column
        .values()
        .iter()
        .zip(w)
        .map(|(c, wy)| (wy * c / w[x0]).max(0.0))
        .collect())
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// `½ Σ_y sqrt(p_y (1 - p_y) / N)`, the scale of the total-variation
/// distance between `p` and an `N`-sample histogram.
pub fn tv_standard_error_bound(p: &[f64], paths: usize) -> f64 {
    let n = paths as f64;
    0.5 * p.iter().map(|q| (q * (1.0 - q) / n).sqrt()).sum::<f64>()
}
