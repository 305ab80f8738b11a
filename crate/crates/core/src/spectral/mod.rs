//! Spectrum, eigenfunctions and orthonormal eigenbasis of `W_m`.
//!
//! For a ball `P` of radius `p^gamma` with sub-balls `P_0, …, P_{p-1}`, the
//! functions
//!
//! ```text
//! f_{gamma,P,a} = 1_{P_a} - V(P_a) / V(P) · 1_P
//! ```
//!
//! are eigenfunctions of `W_m` whenever `V(P_a) > 0`, all sharing the
//! eigenvalue
//!
//! ```text
//! λ_{gamma,P} = -Σ_{i >= gamma} (W(p^i) - W(p^(i+1))) V_i(P).
//! ```
//!
//! With compactly supported `m` the series is a finite sum plus the tail
//! `-W(p^gamma_max) · V_total`.

mod basis;
mod cauchy;
mod eigen;
mod expansion;
mod operator;

pub use basis::{
    basis_element, enumerate_basis, gram_matrix, gram_residual, Basis, BasisElement, Sign,
};
pub(crate) use cauchy::check_times;
pub use cauchy::{solve_cauchy, solve_cauchy_with_sign, Mode, SpectralEvolution};
pub use eigen::{
    eigenfunction_f, eigenfunction_f_exact, eigenpairs, eigenvalue, inner_product_f,
    inner_product_f_exact, intermediate_g, intermediate_g_exact,
};
pub use expansion::{expand_indicator, IndicatorExpansion};
pub use operator::{apply_operator, kernel_integral};

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::measure::MeasureTree;
use crate::padic::BallAddress;

/// Names `f_{gamma,n,a}`: the parent ball (radius `p^gamma`, encodes `n`)
/// and the sub-ball digit `a`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EigenfunctionIndex {
    parent: BallAddress,
    a: u8,
}

impl EigenfunctionIndex {
    /// Requires a non-leaf parent whose sub-ball `a` carries measure.
    pub fn new(tree: &MeasureTree, parent: BallAddress, a: u8) -> Result<Self> {
        tree.check_ball(&parent)?;
        let sub = parent.child(a)?;
        if tree.node_measure(&sub)?.is_zero() {
            return Err(Error::ZeroMeasure(sub.path_string()));
        }
        Ok(EigenfunctionIndex { parent, a })
    }

    pub fn gamma(&self) -> i32 {
        self.parent.level()
    }

    pub fn parent(&self) -> &BallAddress {
        &self.parent
    }

    pub fn a(&self) -> u8 {
        self.a
    }

    pub fn sub_ball(&self) -> BallAddress {
        self.parent
            .child(self.a)
            .expect("validated at construction")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Eigenpair {
    pub index: EigenfunctionIndex,
    pub lambda: f64,
}

/// Digits of the sub-balls of `(level, index)` that carry measure.
pub(crate) fn nonempty_children(tree: &MeasureTree, level: i32, index: usize) -> Vec<u8> {
    let p = tree.base().get() as usize;
    (0..p)
        .filter(|&c| !tree.measure_at(level - 1, index * p + c).is_zero())
        .map(|c| c as u8)
        .collect()
}

/// Internal nodes, coarse to fine, lexicographic within a level.
pub(crate) fn internal_nodes(tree: &MeasureTree) -> impl Iterator<Item = (i32, usize)> + '_ {
    let w = tree.window();
    let p = tree.base().get() as usize;
    (w.gamma_min() + 1..=w.gamma_max())
        .rev()
        .flat_map(move |level| (0..p.pow((w.gamma_max() - level) as u32)).map(move |i| (level, i)))
}
