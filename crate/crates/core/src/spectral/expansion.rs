use num_rational::BigRational;
use num_traits::Zero;

use super::{eigenfunction_f, eigenfunction_f_exact, EigenfunctionIndex};
use crate::error::{Error, Result};
use crate::function::PiecewiseFunction;
use crate::measure::MeasureTree;
use crate::padic::BallAddress;
use crate::rational::to_f64;

/// `Ω_B = Σ_i c_i f_i + c_0 · 1` on the support of `m`.
#[derive(Clone, Debug, PartialEq)]
pub struct IndicatorExpansion {
    pub ball: BallAddress,
    /// Finest term first.
    pub terms: Vec<(EigenfunctionIndex, BigRational)>,
    pub constant: BigRational,
}

impl IndicatorExpansion {
    pub fn evaluate_exact(&self, tree: &MeasureTree) -> Result<PiecewiseFunction<BigRational>> {
        let mut out = PiecewiseFunction::zeros_like(tree);
        out.values_mut().fill(self.constant.clone());
        for (index, c) in &self.terms {
            let f = eigenfunction_f_exact(tree, index)?;
            for (o, v) in out.values_mut()[index.parent().leaf_range()]
                .iter_mut()
                .zip(&f.values()[index.parent().leaf_range()])
            {
                *o += c * v;
            }
        }
        Ok(out)
    }

    /// Floating-point evaluation, term by term.
    pub fn evaluate(&self, tree: &MeasureTree) -> Result<PiecewiseFunction> {
        let mut out =
            PiecewiseFunction::constant(tree.base(), tree.window(), to_f64(&self.constant));
        for (index, c) in self.coefficients_f64() {
            out.axpy(c, &eigenfunction_f(tree, index)?);
        }
        Ok(out)
    }

    pub fn coefficients_f64(&self) -> impl Iterator<Item = (&EigenfunctionIndex, f64)> {
        self.terms.iter().map(|(i, c)| (i, to_f64(c)))
    }
}

/// Expands the indicator of `ball` along its ancestor chain:
/// each ancestor step `S ⊂ parent(S)` contributes `V(B) / V(S) · f_{parent(S), digit(S)}`
/// and the chain closes with the constant `V(B) / V_total`.
pub fn expand_indicator(tree: &MeasureTree, ball: &BallAddress) -> Result<IndicatorExpansion> {
    let v_ball = tree.node_measure(ball)?.clone();
    if v_ball.is_zero() {
        return Err(Error::ZeroMeasure(ball.path_string()));
    }
    let mut terms = Vec::new();
    let mut sub = ball.clone();
    while !sub.is_root() {
        let parent = sub.parent()?;
        let digit = sub.last_digit().expect("non-root ball");
        let coefficient = &v_ball / tree.node_measure(&sub)?;
        terms.push((
            EigenfunctionIndex::new(tree, parent.clone(), digit)?,
            coefficient,
        ));
        sub = parent;
    }
    Ok(IndicatorExpansion {
        ball: ball.clone(),
        terms,
        constant: v_ball / tree.total_measure(),
    })
}
