//! Reductions between the equation on `Q_p` and the process on the support.
//!
//! Writing the solution `f` of `∂f/∂t = W_m f` as `φ + ϕ`, with `φ` living on
//! the support `M` of `m` and `ϕ` on its complement, `φ` obeys a closed
//! equation on `M` (the master equation of the jump process) while each
//! complement leaf follows
//!
//! ```text
//! dϕ/dt = ∫_M W(|x - y|_p) φ(y, t) m(y) d_p y - R(x) ϕ,
//! R(x) = ∫_M W(|x - y|_p) m(y) d_p y.
//! ```

use std::collections::HashMap;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::function::PiecewiseFunction;
use crate::kernel::RateProfile;
use crate::measure::MeasureTree;
use crate::numerics::exp_divided_difference;
use crate::rational::{format_rational, to_f64};
use crate::spectral::{kernel_integral, SpectralEvolution};

/// `f = on_support + off_support` with disjoint supports.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitSolution {
    pub on_support: PiecewiseFunction,
    pub off_support: PiecewiseFunction,
}

/// Zeroes `f` on the leaves where `m` vanishes.
pub fn restrict_to_support(tree: &MeasureTree, f: &PiecewiseFunction) -> Result<PiecewiseFunction> {
    f.check_tree(tree)?;
    Ok(f.with_values(
        f.values()
            .iter()
            .enumerate()
            .map(|(i, &v)| if tree.is_supported(i) { v } else { 0.0 })
            .collect(),
    ))
}

pub fn split(tree: &MeasureTree, f: &PiecewiseFunction) -> Result<SplitSolution> {
    let on_support = restrict_to_support(tree, f)?;
    let mut off_support = f.clone();
    off_support.axpy(-1.0, &on_support);
    Ok(SplitSolution {
        on_support,
        off_support,
    })
}

/// `R(x)`, the total jump rate from each leaf into the support.
pub fn escape_rates(tree: &MeasureTree, kernel: &RateProfile) -> Result<PiecewiseFunction> {
    kernel_integral(tree, kernel)
}

/// Integrates the complement equation exactly, with the support solution
/// given as a sum of exponentials. Support leaves of the result are zero.
///
/// For a mode `c e^{λ t} φ` the source at `x` is `c e^{λ t} s(x)` with
/// `s(x) = ∫_M W(|x - y|_p) φ(y) m(y) d_p y`, which only involves the
/// modes whose node contains `x`.
pub fn evolve_complement(
    tree: &MeasureTree,
    kernel: &RateProfile,
    phi0: &PiecewiseFunction,
    evolution: &SpectralEvolution,
    times: &[f64],
) -> Result<Vec<PiecewiseFunction>> {
    phi0.check_tree(tree)?;
    kernel.check_compatible(tree.base(), tree.window())?;
    crate::spectral::check_times(times)?;
    let p = tree.base().get() as usize;
    let gmin = tree.window().gamma_min();
    let depth = tree.window().depth();

    let mut by_node: HashMap<(i32, usize), Vec<usize>> = HashMap::new();
    let mut constant_modes = Vec::new();
    for (k, mode) in evolution.modes().iter().enumerate() {
        match &mode.element {
            Some(e) => by_node
                .entry((e.parent().level(), e.parent().index()))
                .or_default()
                .push(k),
            None => constant_modes.push(k),
        }
    }

    let columns: Vec<Vec<f64>> = (0..tree.leaf_count())
        .into_par_iter()
        .map(|x| {
            let mut out = vec![0.0; times.len()];
            if tree.is_supported(x) {
                return out;
            }
            // (mode, source strength) pairs for this leaf
            let mut sources = Vec::new();
            // inner[k]: ∫ over the level-(gmin + k) ball around x of m W
            let mut inner = 0.0;
            let mut idx = x;
            for k in 0..depth {
                let level = gmin + k as i32 + 1;
                let own = idx % p;
                let parent = idx / p;
                if let Some(list) = by_node.get(&(level, parent)) {
                    for &m in list {
                        let e = evolution.modes()[m].element.as_ref().expect("element mode");
                        let mut s = e.value_on_child(own as u8) * inner;
                        for c in 0..p {
                            if c != own {
                                let v = tree.measure_at_f64(level - 1, parent * p + c);
                                s += kernel.w(level) * e.value_on_child(c as u8) * v;
                            }
                        }
                        sources.push((m, s));
                    }
                }
                let shell =
                    tree.measure_at_f64(level, parent) - tree.measure_at_f64(level - 1, idx);
                inner += kernel.w(level) * shell;
                idx = parent;
            }
            let rate = inner;
            for &m in &constant_modes {
                sources.push((m, evolution.constant_value() * rate));
            }
            let start = phi0.values()[x];
            for (o, &t) in out.iter_mut().zip(times) {
                let mut v = (-rate * t).exp() * start;
                for &(m, s) in &sources {
                    let mode = &evolution.modes()[m];
                    v += mode.coefficient * s * exp_divided_difference(mode.lambda, -rate, t);
                }
                *o = v;
            }
            out
        })
        .collect();

    Ok((0..times.len())
        .map(|j| phi0.with_values(columns.iter().map(|c| c[j]).collect()))
        .collect())
}

/// `∂f/∂t = ∫ W(|x - y|_p) (f(y) - f(x)) U(y) d_p y` rewritten as a
/// measure-weighted operator plus a reaction term:
/// `W_{U m} f + V f`.
#[derive(Clone, Debug)]
pub struct PotentialReduction {
    pub weighted_measure: MeasureTree,
    pub reaction: PiecewiseFunction,
}

/// `V(x) = ∫ m(y) W(|x - y|_p) (U(y) - U(x)) d_p y`, each shell summed in
/// exact rational arithmetic so that a constant `U` yields exactly zero.
pub fn reduce_potential(
    tree: &MeasureTree,
    kernel: &RateProfile,
    u: &PiecewiseFunction<BigRational>,
) -> Result<PotentialReduction> {
    u.check_tree(tree)?;
    kernel.check_compatible(tree.base(), tree.window())?;
    if let Some(i) = u.values().iter().position(|v| v.is_negative()) {
        return Err(Error::NegativeValue {
            leaf: tree.leaf(i).path_string(),
            value: format_rational(&u.values()[i]),
        });
    }
    let weighted_measure = tree.reweighted(u.values())?;
    let p = tree.base().get() as usize;
    let gmin = tree.window().gamma_min();
    let depth = tree.window().depth();

    // ∫_B m U, per level, finest first
    let mut sums: Vec<Vec<BigRational>> = vec![u
        .values()
        .iter()
        .zip(tree.leaf_weights())
        .map(|(u, w)| u * w)
        .collect()];
    for _ in 0..depth {
        let next = sums
            .last()
            .expect("nonempty")
            .chunks(p)
            .map(|c| c.iter().fold(BigRational::zero(), |acc, v| acc + v))
            .collect();
        sums.push(next);
    }

    let values = (0..tree.leaf_count())
        .into_par_iter()
        .map(|x| {
            let ux = &u.values()[x];
            let mut acc = 0.0;
            let mut idx = x;
            for k in 0..depth {
                let level = gmin + k as i32;
                let parent = idx / p;
                let shell = &sums[k + 1][parent]
                    - &sums[k][idx]
                    - ux * (tree.measure_at(level + 1, parent) - tree.measure_at(level, idx));
                if !shell.is_zero() {
                    acc += kernel.w(level + 1) * to_f64(&shell);
                }
                idx = parent;
            }
            acc
        })
        .collect();
    Ok(PotentialReduction {
        weighted_measure,
        reaction: PiecewiseFunction::<f64>::zeros_like(tree).with_values(values),
    })
}
