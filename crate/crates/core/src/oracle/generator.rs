use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::Signed;

use crate::error::{Error, Result};
use crate::function::PiecewiseFunction;
use crate::kernel::RateProfile;
use crate::measure::MeasureTree;
use crate::padic::{lca_level, Base, Window};
use crate::rational::{format_rational, to_f64};

pub const MAX_DENSE_LEAVES: usize = 10_000;

/// `G[x][y] = W(p^{lca(x, y)}) · weight(y)` off the diagonal; rows sum to
/// the diagonal entries added through [`DenseGenerator::with_diagonal`].
#[derive(Clone, Debug)]
pub struct DenseGenerator {
    base: Base,
    window: Window,
    matrix: DMatrix<f64>,
    weights: Vec<f64>,
}

impl DenseGenerator {
    pub fn base(&self) -> Base {
        self.base
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// The column weights `∫_leaf m`, which make the matrix self-adjoint.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `G + diag(v)`.
    pub fn with_diagonal(&self, v: &PiecewiseFunction) -> Result<DenseGenerator> {
        if v.base() != self.base || v.window() != self.window {
            return Err(Error::WindowMismatch);
        }
        let mut out = self.clone();
        for (i, d) in v.values().iter().enumerate() {
            out.matrix[(i, i)] += d;
        }
        Ok(out)
    }

    pub fn apply(&self, f: &PiecewiseFunction) -> Result<PiecewiseFunction> {
        if f.base() != self.base || f.window() != self.window {
            return Err(Error::WindowMismatch);
        }
        let v = nalgebra::DVector::from_column_slice(f.values());
        Ok(f.with_values((&self.matrix * v).as_slice().to_vec()))
    }
}

fn guard(tree: &MeasureTree) -> Result<()> {
    if tree.leaf_count() > MAX_DENSE_LEAVES {
        return Err(Error::ScaleGuard {
            what: "dense generator",
            size: tree.leaf_count(),
            limit: MAX_DENSE_LEAVES,
        });
    }
    Ok(())
}

// Off-diagonal entries `W(p^{lca}) · weights[y]`, zero diagonal.
fn off_diagonal(tree: &MeasureTree, kernel: &RateProfile, weights: &[f64]) -> DMatrix<f64> {
    let n = tree.leaf_count();
    let base = tree.base();
    let gmin = tree.window().gamma_min();
    DMatrix::from_fn(n, n, |x, y| {
        if x == y {
            0.0
        } else {
            kernel.w(lca_level(base, gmin, x, y)) * weights[y]
        }
    })
}

/// The matrix of `W_m` acting on leaf-constant functions.
pub fn build_generator(tree: &MeasureTree, kernel: &RateProfile) -> Result<DenseGenerator> {
    guard(tree)?;
    kernel.check_compatible(tree.base(), tree.window())?;
    let weights = tree.leaf_weights_f64().to_vec();
    let mut matrix = off_diagonal(tree, kernel, &weights);
    for x in 0..matrix.nrows() {
        matrix[(x, x)] = -matrix.row(x).sum();
    }
    Ok(DenseGenerator {
        base: tree.base(),
        window: tree.window(),
        matrix,
        weights,
    })
}

/// The matrix of `f ↦ ∫ m(y) W(|x - y|_p) (U(y) f(y) - U(x) f(x)) d_p y`,
/// assembled directly from its definition.
pub fn build_potential_generator(
    tree: &MeasureTree,
    kernel: &RateProfile,
    u: &PiecewiseFunction<BigRational>,
) -> Result<DenseGenerator> {
    guard(tree)?;
    kernel.check_compatible(tree.base(), tree.window())?;
    u.check_tree(tree)?;
    if let Some(i) = u.values().iter().position(|v| v.is_negative()) {
        return Err(Error::NegativeValue {
            leaf: tree.leaf(i).path_string(),
            value: format_rational(&u.values()[i]),
        });
    }
    let uf: Vec<f64> = u.values().iter().map(to_f64).collect();
    let weights: Vec<f64> = uf
        .iter()
        .zip(tree.leaf_weights_f64())
        .map(|(u, w)| u * w)
        .collect();
    let mut matrix = off_diagonal(tree, kernel, &weights);
    let plain = off_diagonal(tree, kernel, tree.leaf_weights_f64());
    for x in 0..matrix.nrows() {
        matrix[(x, x)] = -uf[x] * plain.row(x).sum();
    }
    Ok(DenseGenerator {
        base: tree.base(),
        window: tree.window(),
        matrix,
        weights,
    })
}
