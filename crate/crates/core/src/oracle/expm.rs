use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::DenseGenerator;
use crate::error::{Error, Result};
use crate::function::PiecewiseFunction;
use crate::numerics::exp_divided_difference;
use crate::spectral::check_times;

/// `exp(G t)` through the eigendecomposition of `D^{1/2} G D^{-1/2}` on the
/// positive-weight leaves, `D = diag(weights)`. Zero-weight leaves have zero
/// columns, so each of them follows a scalar equation driven by the rest and
/// is integrated in closed form.
#[derive(Clone, Debug)]
pub struct Propagator {
    n: usize,
    support: Vec<usize>,
    complement: Vec<usize>,
    sqrt_w: Vec<f64>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    // G[complement, support] · D^{-1/2} · Q
    coupling: DMatrix<f64>,
    decay: Vec<f64>,
    template: PiecewiseFunction,
}

const ASYMMETRY_TOLERANCE: f64 = 1e-12;

impl Propagator {
    pub fn new(generator: &DenseGenerator) -> Result<Self> {
        let g = generator.matrix();
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("generator"));
        }
        let n = generator.len();
        let w = generator.weights();
        let support: Vec<usize> = (0..n).filter(|&i| w[i] > 0.0).collect();
        let complement: Vec<usize> = (0..n).filter(|&i| w[i] <= 0.0).collect();
        for &y in &complement {
            if let Some(x) = (0..n).find(|&x| x != y && g[(x, y)] != 0.0) {
                return Err(Error::GeneratorStructure(format!(
                    "entry ({x}, {y}) is nonzero but leaf {y} has no weight"
                )));
            }
        }
        let sqrt_w: Vec<f64> = support.iter().map(|&i| w[i].sqrt()).collect();
        let m = support.len();
        let scale = g.amax().max(1.0);
        let mut sym = DMatrix::from_fn(m, m, |i, j| {
            sqrt_w[i] * g[(support[i], support[j])] / sqrt_w[j]
        });
        let asym = (&sym - sym.transpose()).amax();
        if asym > ASYMMETRY_TOLERANCE * scale {
            return Err(Error::GeneratorStructure(format!(
                "weighted matrix is not symmetric (defect {asym:e})"
            )));
        }
        sym = (&sym + sym.transpose()) * 0.5;
        let eigen = SymmetricEigen::new(sym);
        let coupling = DMatrix::from_fn(complement.len(), m, |r, k| {
            (0..m)
                .map(|j| g[(complement[r], support[j])] / sqrt_w[j] * eigen.eigenvectors[(j, k)])
                .sum()
        });
        let decay = complement.iter().map(|&x| g[(x, x)]).collect();
        Ok(Propagator {
            n,
            support,
            complement,
            sqrt_w,
            eigenvalues: eigen.eigenvalues,
            eigenvectors: eigen.eigenvectors,
            coupling,
            decay,
            template: PiecewiseFunction::zeros(generator.base(), generator.window()),
        })
    }

    /// Eigenvalues of the generator on the positive-weight leaves, ascending.
    pub fn spectrum(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.eigenvalues.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn apply(&self, f0: &PiecewiseFunction, t: f64) -> Result<PiecewiseFunction> {
        check_times(&[t])?;
        if f0.len() != self.n
            || f0.base() != self.template.base()
            || f0.window() != self.template.window()
        {
            return Err(Error::WindowMismatch);
        }
        let f = f0.values();
        // α = Qᵀ D^{1/2} f_S
        let scaled = DVector::from_iterator(
            self.support.len(),
            self.support
                .iter()
                .zip(&self.sqrt_w)
                .map(|(&i, s)| s * f[i]),
        );
        let alpha = self.eigenvectors.tr_mul(&scaled);
        let evolved = DVector::from_iterator(
            alpha.len(),
            alpha
                .iter()
                .zip(self.eigenvalues.iter())
                .map(|(a, l)| a * (l * t).exp()),
        );
        let on_support = &self.eigenvectors * evolved;
        let mut out = vec![0.0; self.n];
        for ((&i, s), v) in self.support.iter().zip(&self.sqrt_w).zip(on_support.iter()) {
            out[i] = v / s;
        }
        for (r, &x) in self.complement.iter().enumerate() {
            let d = self.decay[r];
            let mut v = (d * t).exp() * f[x];
            for k in 0..alpha.len() {
                v += self.coupling[(r, k)]
                    * alpha[k]
                    * exp_divided_difference(self.eigenvalues[k], d, t);
            }
            out[x] = v;
        }
        Ok(f0.with_values(out))
    }
}

/// `exp(G t) f0` for each requested time.
pub fn expm_apply(
    generator: &DenseGenerator,
    f0: &PiecewiseFunction,
    times: &[f64],
) -> Result<Vec<PiecewiseFunction>> {
    check_times(times)?;
    let propagator = Propagator::new(generator)?;
    times.iter().map(|&t| propagator.apply(f0, t)).collect()
}

#[cfg(test)]
mod tests {
    use num_rational::BigRational;

    use super::*;
    use crate::kernel::RateProfile;
    use crate::measure::MeasureTree;
    use crate::oracle::build_generator;
    use crate::padic::{BallAddress, Base, Window};

    #[test]
    fn worked_fixture() {
        let base = Base::new(2).unwrap();
        let window = Window::new(-3, 0).unwrap();
        let root = BallAddress::root(base, window);
        let tree = MeasureTree::uniform_ball(&root, BigRational::from_integer(1.into())).unwrap();
        let kernel = RateProfile::vladimirov(1.0, window, base).unwrap();
        let g = build_generator(&tree, &kernel).unwrap();
        let half = BallAddress::parse(base, window, "0").unwrap();
        let mut f0 = PiecewiseFunction::indicator(&half);
        f0.scale(2.0);
        let out = expm_apply(&g, &f0, &[0.0, 1.0]).unwrap();
        assert!(out[0].max_abs_diff(&f0) < 1e-13);
        for leaf in half.leaf_range() {
            assert!((out[1].values()[leaf] - 1.0 - (-1.0f64).exp()).abs() < 1e-12);
        }
        let spectrum = Propagator::new(&g).unwrap().spectrum();
        assert!(spectrum.last().unwrap().abs() < 1e-12);
    }

    #[test]
    fn constants_are_stationary() {
        let base = Base::new(3).unwrap();
        let window = Window::new(-2, 0).unwrap();
        let density = (0..9i64)
            .map(|i| BigRational::new((i % 4).into(), 5.into()))
            .collect();
        let tree = MeasureTree::from_leaf_densities(base, window, density).unwrap();
        let kernel = RateProfile::vladimirov(0.5, window, base).unwrap();
        let g = build_generator(&tree, &kernel).unwrap();
        let c = PiecewiseFunction::constant(base, window, -1.25);
        for f in expm_apply(&g, &c, &[0.3, 5.0]).unwrap() {
            assert!(f.max_abs_diff(&c) < 1e-12);
        }
    }
}
