//! The measure `m(x) d_p x` as a complete p-ary tree over a window.
//!
//! Densities are constant on leaves and exact rationals; every internal node
//! caches the measure of its ball, so `V_i(x)` is a lookup. Under the
//! compact-support convention the measure lives inside the root ball and
//! `V_i` saturates at the total mass for `i >= gamma_max`.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::padic::{ball_of, BallAddress, Base, PAdicApprox, Window};
use crate::rational::{format_rational, parse_rational, to_f64};

/// Largest number of leaves a tree may have.
pub const MAX_LEAVES: usize = 1 << 22;

#[derive(Clone, Debug)]
pub struct MeasureTree {
    base: Base,
    window: Window,
    density: Vec<BigRational>,
    // levels[j]: ball measures at level gamma_min + j, lexicographic order
    levels: Vec<Vec<BigRational>>,
    levels_f64: Vec<Vec<f64>>,
}

impl MeasureTree {
    /// Builds the tree from per-leaf densities in lexicographic leaf order.
    pub fn from_leaf_densities(
        base: Base,
        window: Window,
        density: Vec<BigRational>,
    ) -> Result<Self> {
        let count = leaf_count(base, window)?;
        if density.len() != count {
            return Err(Error::Parse(format!(
                "expected {count} leaf densities, got {}",
                density.len()
            )));
        }
        if let Some(i) = density.iter().position(|d| d.is_negative()) {
            return Err(Error::NegativeValue {
                leaf: BallAddress::from_index(base, window, window.gamma_min(), i)?.path_string(),
                value: format_rational(&density[i]),
            });
        }
        let volume = base.pow(window.gamma_min() as i64);
        let p = base.get() as usize;
        let mut levels = Vec::with_capacity(window.depth() + 1);
        levels.push(density.iter().map(|d| d * &volume).collect::<Vec<_>>());
        for _ in 0..window.depth() {
            let below = levels.last().expect("nonempty");
            let above = below
                .chunks(p)
                .map(|c| c.iter().fold(BigRational::zero(), |acc, v| acc + v))
                .collect();
            levels.push(above);
        }
        let levels_f64 = levels
            .iter()
            .map(|l| l.iter().map(to_f64).collect())
            .collect();
        Ok(MeasureTree {
            base,
            window,
            density,
            levels,
            levels_f64,
        })
    }

    pub fn zero(base: Base, window: Window) -> Result<Self> {
        let n = leaf_count(base, window)?;
        Self::from_leaf_densities(base, window, vec![BigRational::zero(); n])
    }

    /// Density `value` on every leaf of `ball`, zero elsewhere.
    pub fn uniform_ball(ball: &BallAddress, value: BigRational) -> Result<Self> {
        let n = leaf_count(ball.base(), ball.window())?;
        let range = ball.leaf_range();
        let density = (0..n)
            .map(|i| {
                if range.contains(&i) {
                    value.clone()
                } else {
                    BigRational::zero()
                }
            })
            .collect();
        Self::from_leaf_densities(ball.base(), ball.window(), density)
    }

    /// Densities keyed by leaf address; missing leaves get density 0.
    pub fn from_leaf_map(
        base: Base,
        window: Window,
        leaves: &BTreeMap<BallAddress, BigRational>,
    ) -> Result<Self> {
        let n = leaf_count(base, window)?;
        let mut density = vec![BigRational::zero(); n];
        for (leaf, value) in leaves {
            if leaf.base() != base || leaf.window() != window {
                return Err(Error::WindowMismatch);
            }
            if !leaf.is_leaf() {
                return Err(Error::InvalidPath(format!(
                    "{} is not a leaf path (needs {} digits)",
                    leaf.path_string(),
                    window.depth()
                )));
            }
            density[leaf.index()] = value.clone();
        }
        Self::from_leaf_densities(base, window, density)
    }

    #[inline]
    pub fn base(&self) -> Base {
        self.base
    }

    #[inline]
    pub fn window(&self) -> Window {
        self.window
    }

    #[inline]
    pub fn leaf_count(&self) -> usize {
        self.density.len()
    }

    pub fn leaf(&self, index: usize) -> BallAddress {
        BallAddress::from_index(self.base, self.window, self.window.gamma_min(), index)
            .expect("leaf index in range")
    }

    pub fn leaves(&self) -> impl Iterator<Item = BallAddress> + '_ {
        (0..self.leaf_count()).map(|i| self.leaf(i))
    }

    pub fn densities(&self) -> &[BigRational] {
        &self.density
    }

    pub fn density(&self, leaf: usize) -> &BigRational {
        &self.density[leaf]
    }

    /// Haar volume of one leaf, `p^gamma_min`.
    pub fn leaf_volume(&self) -> BigRational {
        self.base.pow(self.window.gamma_min() as i64)
    }

    /// `density * volume` per leaf.
    pub fn leaf_weights(&self) -> &[BigRational] {
        &self.levels[0]
    }

    pub fn leaf_weights_f64(&self) -> &[f64] {
        &self.levels_f64[0]
    }

    pub fn is_supported(&self, leaf: usize) -> bool {
        !self.density[leaf].is_zero()
    }

    pub fn total_measure(&self) -> &BigRational {
        &self.levels[self.window.depth()][0]
    }

    pub fn total_measure_f64(&self) -> f64 {
        self.levels_f64[self.window.depth()][0]
    }

    pub fn support_leaves(&self) -> Vec<BallAddress> {
        (0..self.leaf_count())
            .filter(|&i| self.is_supported(i))
            .map(|i| self.leaf(i))
            .collect()
    }

    pub(crate) fn support_indices(&self) -> Vec<usize> {
        (0..self.leaf_count())
            .filter(|&i| self.is_supported(i))
            .collect()
    }

    /// Measure of the ball at `level` with lexicographic position `index`.
    #[inline]
    pub(crate) fn measure_at(&self, level: i32, index: usize) -> &BigRational {
        &self.levels[(level - self.window.gamma_min()) as usize][index]
    }

    #[inline]
    pub(crate) fn measure_at_f64(&self, level: i32, index: usize) -> f64 {
        self.levels_f64[(level - self.window.gamma_min()) as usize][index]
    }

    pub(crate) fn check_ball(&self, ball: &BallAddress) -> Result<()> {
        if ball.base() != self.base {
            return Err(Error::BaseMismatch {
                left: self.base.get(),
                right: ball.base().get(),
            });
        }
        if ball.window() != self.window {
            return Err(Error::WindowMismatch);
        }
        Ok(())
    }

    pub fn node_measure(&self, ball: &BallAddress) -> Result<&BigRational> {
        self.check_ball(ball)?;
        Ok(self.measure_at(ball.level(), ball.index()))
    }

    pub fn node_measure_f64(&self, ball: &BallAddress) -> Result<f64> {
        self.check_ball(ball)?;
        Ok(self.measure_at_f64(ball.level(), ball.index()))
    }

    /// `V_i(x)`: measure of the radius-`p^i` ball containing the ball `x`.
    /// Saturates at the total measure above the window.
    pub fn v_ball(&self, x: &BallAddress, i: i32) -> Result<BigRational> {
        self.check_ball(x)?;
        if i >= self.window.gamma_max() {
            return Ok(self.total_measure().clone());
        }
        if i < x.level() {
            return Err(Error::LevelOutOfWindow {
                level: i,
                gamma_min: x.level(),
                gamma_max: self.window.gamma_max(),
            });
        }
        let anc = x.ancestor(i)?;
        Ok(self.measure_at(i, anc.index()).clone())
    }

    /// `V_i(x)` for a point of the root ball.
    pub fn v_point(&self, x: &PAdicApprox, i: i32) -> Result<BigRational> {
        if i >= self.window.gamma_max() {
            // still reject points outside the window
            ball_of(x, self.window.gamma_max(), self.window)?;
            return Ok(self.total_measure().clone());
        }
        let ball = ball_of(x, i, self.window)?;
        Ok(self.measure_at(i, ball.index()).clone())
    }

    /// Same window and base, each leaf density multiplied by `factor[leaf]`.
    pub fn reweighted(&self, factor: &[BigRational]) -> Result<Self> {
        if factor.len() != self.leaf_count() {
            return Err(Error::WindowMismatch);
        }
        let density = self
            .density
            .iter()
            .zip(factor)
            .map(|(d, f)| d * f)
            .collect();
        Self::from_leaf_densities(self.base, self.window, density)
    }

    pub fn scaled(&self, factor: &BigRational) -> Result<Self> {
        let density = self.density.iter().map(|d| d * factor).collect();
        Self::from_leaf_densities(self.base, self.window, density)
    }

    pub fn to_file(&self) -> MeasureFile {
        let leaves = (0..self.leaf_count())
            .filter(|&i| self.is_supported(i))
            .map(|i| {
                (
                    self.leaf(i).path_string(),
                    format_rational(&self.density[i]),
                )
            })
            .collect();
        MeasureFile {
            p: self.base.get(),
            gamma_min: self.window.gamma_min(),
            gamma_max: self.window.gamma_max(),
            leaves,
        }
    }

    pub fn from_file(file: &MeasureFile) -> Result<Self> {
        let base = Base::new(file.p)?;
        let window = Window::new(file.gamma_min, file.gamma_max)?;
        let leaves = parse_leaf_table(base, window, &file.leaves)?;
        Self::from_leaf_map(base, window, &leaves)
    }
}

fn leaf_count(base: Base, window: Window) -> Result<usize> {
    let depth = window.depth() as u32;
    match (base.get() as usize).checked_pow(depth) {
        Some(n) if n <= MAX_LEAVES => Ok(n),
        n => Err(Error::ScaleGuard {
            what: "measure tree",
            size: n.unwrap_or(usize::MAX),
            limit: MAX_LEAVES,
        }),
    }
}

pub(crate) fn parse_leaf_table(
    base: Base,
    window: Window,
    table: &BTreeMap<String, String>,
) -> Result<BTreeMap<BallAddress, BigRational>> {
    table
        .iter()
        .map(|(path, value)| {
            let leaf = BallAddress::parse(base, window, path)?;
            if !leaf.is_leaf() {
                return Err(Error::InvalidPath(path.clone()));
            }
            Ok((leaf, parse_rational(value)?))
        })
        .collect()
}

/// On-disk leaf table:
/// `{ "p": 2, "gamma_min": -3, "gamma_max": 0, "leaves": { "010": "1/2" } }`.
/// Potential files use the key `"U"` instead of `"leaves"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureFile {
    pub p: u32,
    pub gamma_min: i32,
    pub gamma_max: i32,
    #[serde(alias = "U")]
    pub leaves: BTreeMap<String, String>,
}

/// Declared behaviour of `V_i` beyond the window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TailModel {
    /// Compact support: `V_i = total`.
    Constant { total: f64 },
    /// `V_i = scale * growth^i` (`growth = p` is full Haar growth).
    Exponential { scale: f64, growth: f64 },
    /// `V_i = scale * i^degree`.
    Polynomial { scale: f64, degree: f64 },
}

impl TailModel {
    pub fn compact(tree: &MeasureTree) -> Self {
        TailModel::Constant {
            total: tree.total_measure_f64(),
        }
    }

    fn ln_value(&self, i: i64) -> f64 {
        match *self {
            TailModel::Constant { total } => total.ln(),
            TailModel::Exponential { scale, growth } => scale.ln() + i as f64 * growth.ln(),
            TailModel::Polynomial { scale, degree } => scale.ln() + degree * (i as f64).ln(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GrowthVerdict {
    Satisfied,
    Violated,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthReport {
    pub verdict: GrowthVerdict,
    pub beta: f64,
    /// `(i, i^beta / V_i)` for `i = 1..=horizon`.
    pub samples: Vec<(i64, f64)>,
    /// Log-log slope of the ratio over the second half of the horizon.
    pub tail_slope: f64,
}

const SLOPE_MARGIN: f64 = 0.05;

/// Samples `i^beta / V_i` along the declared tail and classifies its limit
/// by the log-log slope over the last half of the horizon: clearly negative
/// means the ratio tends to zero, clearly positive means it diverges.
pub fn check_growth_condition(tail: &TailModel, beta: f64, horizon: i64) -> GrowthReport {
    let ln_ratio = |i: i64| beta * (i as f64).ln() - tail.ln_value(i);
    let samples: Vec<(i64, f64)> = (1..=horizon.max(0))
        .map(|i| (i, ln_ratio(i).exp()))
        .collect();
    if horizon < 4 || beta.is_nan() || beta <= 1.0 {
        return GrowthReport {
            verdict: GrowthVerdict::Inconclusive,
            beta,
            samples,
            tail_slope: f64::NAN,
        };
    }
    let start = horizon / 2;
    let pts: Vec<(f64, f64)> = (start..=horizon)
        .map(|i| ((i as f64).ln(), ln_ratio(i)))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let verdict = if !slope.is_finite() {
        GrowthVerdict::Inconclusive
    } else if slope < -SLOPE_MARGIN {
        GrowthVerdict::Satisfied
    } else if slope > SLOPE_MARGIN {
        GrowthVerdict::Violated
    } else {
        GrowthVerdict::Inconclusive
    };
    GrowthReport {
        verdict,
        beta,
        samples,
        tail_slope: slope,
    }
}
