//! Functions constant on the leaves of a window.

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::measure::MeasureTree;
use crate::padic::{BallAddress, Base, Window};
use crate::rational::to_f64;

/// One value per leaf, leaves in lexicographic path order.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseFunction<T = f64> {
    base: Base,
    window: Window,
    values: Vec<T>,
}

impl<T: Clone + Zero> PiecewiseFunction<T> {
    pub fn zeros(base: Base, window: Window) -> Self {
        let n = (base.get() as usize).pow(window.depth() as u32);
        PiecewiseFunction {
            base,
            window,
            values: vec![T::zero(); n],
        }
    }

    pub fn zeros_like(tree: &MeasureTree) -> Self {
        Self::zeros(tree.base(), tree.window())
    }

    pub fn from_values(base: Base, window: Window, values: Vec<T>) -> Result<Self> {
        let n = (base.get() as usize).pow(window.depth() as u32);
        if values.len() != n {
            return Err(Error::Parse(format!(
                "expected {n} leaf values, got {}",
                values.len()
            )));
        }
        Ok(PiecewiseFunction {
            base,
            window,
            values,
        })
    }

    /// 0/1 indicator of a ball.
    pub fn indicator(ball: &BallAddress) -> Self
    where
        T: One,
    {
        let mut f = Self::zeros(ball.base(), ball.window());
        for v in &mut f.values[ball.leaf_range()] {
            *v = T::one();
        }
        f
    }

    #[inline]
    pub fn base(&self) -> Base {
        self.base
    }

    #[inline]
    pub fn window(&self) -> Window {
        self.window
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn at(&self, leaf: &BallAddress) -> Result<&T> {
        if leaf.base() != self.base || leaf.window() != self.window || !leaf.is_leaf() {
            return Err(Error::WindowMismatch);
        }
        Ok(&self.values[leaf.index()])
    }

    pub fn with_values<U>(&self, values: Vec<U>) -> PiecewiseFunction<U> {
        assert_eq!(values.len(), self.values.len());
        PiecewiseFunction {
            base: self.base,
            window: self.window,
            values,
        }
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> PiecewiseFunction<U> {
        self.with_values(self.values.iter().map(f).collect())
    }

    pub(crate) fn check_tree(&self, tree: &MeasureTree) -> Result<()> {
        if self.base != tree.base() || self.window != tree.window() {
            return Err(Error::WindowMismatch);
        }
        Ok(())
    }
}

impl PiecewiseFunction<f64> {
    pub fn constant(base: Base, window: Window, c: f64) -> Self {
        let mut f = Self::zeros(base, window);
        f.values.fill(c);
        f
    }

    /// `∫ m f g d_p x`.
    pub fn inner(&self, other: &Self, tree: &MeasureTree) -> Result<f64> {
        self.check_tree(tree)?;
        other.check_tree(tree)?;
        Ok(weighted_dot(
            &self.values,
            &other.values,
            tree.leaf_weights_f64(),
        ))
    }

    pub fn l2_norm(&self, tree: &MeasureTree) -> Result<f64> {
        Ok(self.inner(self, tree)?.sqrt())
    }

    /// `∫ m f d_p x`.
    pub fn integral(&self, tree: &MeasureTree) -> Result<f64> {
        self.check_tree(tree)?;
        Ok(self
            .values
            .iter()
            .zip(tree.leaf_weights_f64())
            .map(|(f, w)| f * w)
            .sum())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &Self) {
        for (s, o) in self.values.iter_mut().zip(&other.values) {
            *s += a * o;
        }
    }

    pub fn scale(&mut self, a: f64) {
        for v in &mut self.values {
            *v *= a;
        }
    }
}

impl PiecewiseFunction<BigRational> {
    pub fn to_f64(&self) -> PiecewiseFunction<f64> {
        self.map(to_f64)
    }
}

pub(crate) fn weighted_dot(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    a.iter().zip(b).zip(w).map(|((x, y), w)| x * y * w).sum()
}
