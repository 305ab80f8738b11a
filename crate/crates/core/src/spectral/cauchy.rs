use rayon::prelude::*;

use super::eigen::eigenvalue_at;
use super::{enumerate_basis, BasisElement, Sign};
use crate::error::{Error, Result};
use crate::function::{weighted_dot, PiecewiseFunction};
use crate::kernel::RateProfile;
use crate::kolmogorov::{evolve_complement, split};
use crate::measure::MeasureTree;
use crate::padic::{Base, Window};

/// One term `c · e^{λ t} · φ` of a spectral solution. `element == None` is
/// the constant mode `1 / sqrt(V_total)`, with `λ = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mode {
    pub element: Option<BasisElement>,
    pub lambda: f64,
    pub coefficient: f64,
}

/// `f0` restricted to the support of `m`, expanded in the orthonormal basis.
#[derive(Clone, Debug)]
pub struct SpectralEvolution {
    base: Base,
    window: Window,
    constant: f64,
    support: Vec<bool>,
    modes: Vec<Mode>,
}

impl SpectralEvolution {
    pub fn project(
        tree: &MeasureTree,
        kernel: &RateProfile,
        f0: &PiecewiseFunction,
        sign: Sign,
    ) -> Result<Self> {
        f0.check_tree(tree)?;
        kernel.check_compatible(tree.base(), tree.window())?;
        if f0.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("initial condition"));
        }
        let basis = enumerate_basis(tree, sign, true)?;
        let w = tree.leaf_weights_f64();
        let f = f0.values();
        let mut modes: Vec<Mode> = basis
            .elements
            .into_par_iter()
            .map(|e| {
                let range = e.support();
                let coefficient = weighted_dot(&e.support_values(), &f[range.clone()], &w[range]);
                let lambda = eigenvalue_at(tree, kernel, e.parent().level(), e.parent().index());
                Mode {
                    element: Some(e),
                    lambda,
                    coefficient,
                }
            })
            .collect();
        let constant = basis.constant.unwrap_or(0.0);
        if basis.constant.is_some() {
            let mass: f64 = f.iter().zip(w).map(|(f, w)| f * w).sum();
            modes.push(Mode {
                element: None,
                lambda: 0.0,
                coefficient: constant * mass,
            });
        }
        Ok(SpectralEvolution {
            base: tree.base(),
            window: tree.window(),
            constant,
            support: (0..tree.leaf_count())
                .map(|i| tree.is_supported(i))
                .collect(),
            modes,
        })
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    /// Value of the constant basis function on the support.
    pub fn constant_value(&self) -> f64 {
        self.constant
    }

    /// The solution at time `t` on the support, zero elsewhere.
    pub fn evaluate(&self, t: f64) -> PiecewiseFunction {
        let mut out = PiecewiseFunction::zeros(self.base, self.window);
        let values = out.values_mut();
        for mode in &self.modes {
            let c = mode.coefficient * (mode.lambda * t).exp();
            match &mode.element {
                Some(e) => {
                    let range = e.support();
                    for (v, phi) in values[range.clone()].iter_mut().zip(e.support_values()) {
                        *v += c * phi;
                    }
                }
                None => values.iter_mut().for_each(|v| *v += c * self.constant),
            }
        }
        for (v, &s) in values.iter_mut().zip(&self.support) {
            if !s {
                *v = 0.0;
            }
        }
        out
    }
}

pub(crate) fn check_times(times: &[f64]) -> Result<()> {
    match times.iter().find(|t| !t.is_finite() || **t < 0.0) {
        Some(&t) => Err(Error::InvalidTime(t)),
        None => Ok(()),
    }
}

/// Solves `∂f/∂t = W_m f`, `f(·, 0) = f0` on every leaf of the window.
///
/// On the support of `m` the solution is the spectral sum
/// `Σ c_k e^{λ_k t} φ_k`; off the support each leaf follows the scalar
/// equation driven by the support values, integrated in closed form.
pub fn solve_cauchy(
    tree: &MeasureTree,
    kernel: &RateProfile,
    f0: &PiecewiseFunction,
    times: &[f64],
) -> Result<Vec<PiecewiseFunction>> {
    solve_cauchy_with_sign(tree, kernel, f0, times, Sign::Plus)
}

pub fn solve_cauchy_with_sign(
    tree: &MeasureTree,
    kernel: &RateProfile,
    f0: &PiecewiseFunction,
    times: &[f64],
    sign: Sign,
) -> Result<Vec<PiecewiseFunction>> {
    check_times(times)?;
    let evolution = SpectralEvolution::project(tree, kernel, f0, sign)?;
    let parts = split(tree, f0)?;
    let outside = evolve_complement(tree, kernel, &parts.off_support, &evolution, times)?;
    Ok(times
        .iter()
        .zip(outside)
        .map(|(&t, off)| {
            let mut f = evolution.evaluate(t);
            f.axpy(1.0, &off);
            f
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use num_rational::BigRational;

    use super::*;
    use crate::padic::BallAddress;

    fn z2() -> (MeasureTree, RateProfile) {
        let base = Base::new(2).unwrap();
        let window = Window::new(-3, 0).unwrap();
        let tree = MeasureTree::uniform_ball(
            &BallAddress::root(base, window),
            BigRational::from_integer(1.into()),
        )
        .unwrap();
        (tree, RateProfile::vladimirov(1.0, window, base).unwrap())
    }

    #[test]
    fn worked_solution() {
        let (tree, kernel) = z2();
        let half = BallAddress::parse(tree.base(), tree.window(), "0").unwrap();
        let mut f0 = PiecewiseFunction::indicator(&half);
        f0.scale(2.0);
        let sol = solve_cauchy(&tree, &kernel, &f0, &[0.0, 1.0]).unwrap();
        assert!(sol[0].max_abs_diff(&f0) < 1e-14);
        let expected = 1.0 + (-1.0f64).exp();
        for leaf in half.leaf_range() {
            assert!((sol[1].values()[leaf] - expected).abs() < 1e-14);
        }
        for leaf in 4..8 {
            assert!((sol[1].values()[leaf] - (1.0 - (-1.0f64).exp())).abs() < 1e-14);
        }
    }

    #[test]
    fn equilibrates_to_mean() {
        let base = Base::new(3).unwrap();
        let window = Window::new(-2, 0).unwrap();
        let density = (0..9i64)
            .map(|i| BigRational::new((1 + i % 3).into(), 2.into()))
            .collect();
        let tree = MeasureTree::from_leaf_densities(base, window, density).unwrap();
        let kernel = RateProfile::vladimirov(1.0, window, base).unwrap();
        let f0 = PiecewiseFunction::<f64>::zeros_like(&tree)
            .with_values((0..9).map(|i| i as f64).collect());
        let sol = solve_cauchy(&tree, &kernel, &f0, &[0.0, 0.5, 400.0]).unwrap();
        let mass0 = f0.integral(&tree).unwrap();
        for f in &sol {
            assert!((f.integral(&tree).unwrap() - mass0).abs() < 1e-12);
        }
        let mean = mass0 / tree.total_measure_f64();
        assert!(sol[2].values().iter().all(|v| (v - mean).abs() < 1e-10));
    }

    #[test]
    fn rejects_negative_time() {
        let (tree, kernel) = z2();
        let f0 = PiecewiseFunction::zeros_like(&tree);
        assert!(matches!(
            solve_cauchy(&tree, &kernel, &f0, &[-1.0]),
            Err(Error::InvalidTime(_))
        ));
    }
}
