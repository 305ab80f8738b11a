use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use rayon::prelude::*;

use super::{internal_nodes, nonempty_children};
use crate::error::{Error, Result};
use crate::function::{weighted_dot, PiecewiseFunction};
use crate::measure::MeasureTree;
use crate::padic::BallAddress;

/// Which root `k = -1 ± sqrt(V(parent) / V(reference))` to use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Sign {
    #[default]
    Plus,
    Minus,
}

impl Sign {
    fn apply(self, x: f64) -> f64 {
        match self {
            Sign::Plus => x,
            Sign::Minus => -x,
        }
    }
}

impl FromStr for Sign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "+" | "plus" => Ok(Sign::Plus),
            "-" | "minus" => Ok(Sign::Minus),
            other => Err(Error::Parse(format!("sign must be + or -, got {other:?}"))),
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

/// One orthonormal basis function
///
/// ```text
/// φ = (1/k) · sqrt(V_b) / V_r · (f_{P,r} + k V_r / V_b · f_{P,b})
/// ```
///
/// where `r` is the reference sub-ball of the node `P` (the nonempty child
/// with the smallest digit) and `b` another nonempty child. The function is
/// constant on each child of `P` and vanishes outside `P`, so only three
/// values are stored.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisElement {
    parent: BallAddress,
    reference: u8,
    b: u8,
    k: f64,
    on_reference: f64,
    on_b: f64,
    on_rest: f64,
}

impl BasisElement {
    pub fn parent(&self) -> &BallAddress {
        &self.parent
    }

    pub fn gamma(&self) -> i32 {
        self.parent.level()
    }

    pub fn reference(&self) -> u8 {
        self.reference
    }

    pub fn b(&self) -> u8 {
        self.b
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// Leaves where the element may be nonzero.
    pub fn support(&self) -> std::ops::Range<usize> {
        self.parent.leaf_range()
    }

    /// Value on the child of the parent with digit `d`.
    pub fn value_on_child(&self, d: u8) -> f64 {
        if d == self.reference {
            self.on_reference
        } else if d == self.b {
            self.on_b
        } else {
            self.on_rest
        }
    }

    /// Value at a leaf given by its lexicographic index.
    pub fn value_at(&self, leaf: usize) -> f64 {
        let range = self.support();
        if !range.contains(&leaf) {
            return 0.0;
        }
        let child_span = range.len() / self.parent.base().get() as usize;
        self.value_on_child(((leaf - range.start) / child_span) as u8)
    }

    /// Values on the support leaves, in order.
    pub(crate) fn support_values(&self) -> Vec<f64> {
        self.support().map(|i| self.value_at(i)).collect()
    }

    pub fn to_function(&self) -> PiecewiseFunction {
        let mut f = PiecewiseFunction::zeros(self.parent.base(), self.parent.window());
        let range = self.support();
        let values = self.support_values();
        f.values_mut()[range].copy_from_slice(&values);
        f
    }
}

/// The orthonormal system on the support of `m`, node by node from the
/// root down, plus the optional constant `1 / sqrt(V_total)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Basis {
    pub elements: Vec<BasisElement>,
    pub constant: Option<f64>,
}

impl Basis {
    /// Number of functions including the constant.
    pub fn len(&self) -> usize {
        self.elements.len() + usize::from(self.constant.is_some())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn element_at(
    tree: &MeasureTree,
    parent: &BallAddress,
    reference: u8,
    b: u8,
    sign: Sign,
) -> BasisElement {
    let p = tree.base().get() as usize;
    let first = parent.index() * p;
    let child = |d: u8| tree.measure_at_f64(parent.level() - 1, first + d as usize);
    let (a, vb) = (child(reference), child(b));
    let t = tree.measure_at_f64(parent.level(), parent.index());
    let k = -1.0 + sign.apply((t / a).sqrt());
    let scale = vb.sqrt() / (k * a);
    let c = k * a / vb;
    BasisElement {
        parent: parent.clone(),
        reference,
        b,
        k,
        on_reference: scale * (1.0 - a / t - c * vb / t),
        on_b: scale * (c * (1.0 - vb / t) - a / t),
        on_rest: scale * (-a / t - c * vb / t),
    }
}

/// `φ_{gamma,n,b}` at the node `parent`.
pub fn basis_element(
    tree: &MeasureTree,
    parent: &BallAddress,
    b: u8,
    sign: Sign,
) -> Result<BasisElement> {
    tree.check_ball(parent)?;
    let sub = parent.child(b)?;
    let kids = nonempty_children(tree, parent.level(), parent.index());
    if kids.len() < 2 {
        return Err(Error::NoBasisElement(parent.path_string()));
    }
    if !kids.contains(&b) {
        return Err(Error::ZeroMeasure(sub.path_string()));
    }
    if kids[0] == b {
        return Err(Error::ReferenceDigit(b));
    }
    Ok(element_at(tree, parent, kids[0], b, sign))
}

/// All basis elements: `c - 1` per node with `c >= 2` nonempty children.
pub fn enumerate_basis(tree: &MeasureTree, sign: Sign, include_constant: bool) -> Result<Basis> {
    let nodes: Vec<_> = internal_nodes(tree).collect();
    let per_node: Vec<Vec<BasisElement>> = nodes
        .par_iter()
        .map(|&(level, index)| {
            let kids = nonempty_children(tree, level, index);
            if kids.len() < 2 {
                return Ok(Vec::new());
            }
            let parent = BallAddress::from_index(tree.base(), tree.window(), level, index)?;
            Ok(kids[1..]
                .iter()
                .map(|&b| element_at(tree, &parent, kids[0], b, sign))
                .collect())
        })
        .collect::<Result<_>>()?;
    let total = tree.total_measure();
    let constant =
        (include_constant && !total.is_zero()).then(|| 1.0 / tree.total_measure_f64().sqrt());
    Ok(Basis {
        elements: per_node.into_iter().flatten().collect(),
        constant,
    })
}

// Dense leaf values of each basis function restricted to its support range.
fn sparse_rows(basis: &Basis, tree: &MeasureTree) -> Vec<(std::ops::Range<usize>, Vec<f64>)> {
    let mut rows: Vec<_> = basis
        .elements
        .iter()
        .map(|e| (e.support(), e.support_values()))
        .collect();
    if let Some(c) = basis.constant {
        rows.push((0..tree.leaf_count(), vec![c; tree.leaf_count()]));
    }
    rows
}

fn gram_entry(
    a: &(std::ops::Range<usize>, Vec<f64>),
    b: &(std::ops::Range<usize>, Vec<f64>),
    w: &[f64],
) -> f64 {
    let lo = a.0.start.max(b.0.start);
    let hi = a.0.end.min(b.0.end);
    if lo >= hi {
        return 0.0;
    }
    weighted_dot(
        &a.1[lo - a.0.start..hi - a.0.start],
        &b.1[lo - b.0.start..hi - b.0.start],
        &w[lo..hi],
    )
}

/// `G[i][j] = ∫ m φ_i φ_j d_p x` by leaf quadrature; the constant, when
/// present, is the last row.
pub fn gram_matrix(basis: &Basis, tree: &MeasureTree) -> Vec<Vec<f64>> {
    let rows = sparse_rows(basis, tree);
    let w = tree.leaf_weights_f64();
    rows.par_iter()
        .map(|a| rows.iter().map(|b| gram_entry(a, b, w)).collect())
        .collect()
}

/// `max |G - I|` over all entries, without storing `G`.
pub fn gram_residual(basis: &Basis, tree: &MeasureTree) -> f64 {
    let rows = sparse_rows(basis, tree);
    let w = tree.leaf_weights_f64();
    rows.par_iter()
        .enumerate()
        .map(|(i, a)| {
            rows.iter()
                .enumerate()
                .map(|(j, b)| {
                    let target = if i == j { 1.0 } else { 0.0 };
                    (gram_entry(a, b, w) - target).abs()
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}
