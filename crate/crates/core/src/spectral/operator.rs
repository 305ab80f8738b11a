use rayon::prelude::*;

use crate::error::Result;
use crate::function::PiecewiseFunction;
use crate::kernel::RateProfile;
use crate::measure::MeasureTree;

#[derive(Clone, Copy, Debug, PartialEq)]
enum Shape {
    Empty,
    Uniform(f64),
    Mixed,
}

impl Shape {
    fn merge(self, other: Shape) -> Shape {
        match (self, other) {
            (Shape::Empty, s) | (s, Shape::Empty) => s,
            (Shape::Uniform(a), Shape::Uniform(b)) if a == b => Shape::Uniform(a),
            _ => Shape::Mixed,
        }
    }
}

// Per level (finest first): `∫_B m f` and whether f is constant on supp m ∩ B.
struct Aggregates {
    sums: Vec<Vec<f64>>,
    shapes: Vec<Vec<Shape>>,
}

fn aggregate(tree: &MeasureTree, f: &[f64]) -> Aggregates {
    let p = tree.base().get() as usize;
    let w = tree.leaf_weights_f64();
    let mut sums = vec![f.iter().zip(w).map(|(f, w)| f * w).collect::<Vec<_>>()];
    let mut shapes = vec![f
        .iter()
        .zip(w)
        .map(|(&f, &w)| {
            if w == 0.0 {
                Shape::Empty
            } else {
                Shape::Uniform(f)
            }
        })
        .collect::<Vec<_>>()];
    for _ in 0..tree.window().depth() {
        let (s, h) = (sums.last().unwrap(), shapes.last().unwrap());
        let next_s = s.chunks(p).map(|c| c.iter().sum()).collect();
        let next_h = h
            .chunks(p)
            .map(|c| c.iter().fold(Shape::Empty, |acc, &x| acc.merge(x)))
            .collect();
        sums.push(next_s);
        shapes.push(next_h);
    }
    Aggregates { sums, shapes }
}

/// `(W_m f)(x) = ∫ m(y) W(|x - y|_p) (f(y) - f(x)) d_p y` at every leaf.
///
/// Leaves `y` are grouped by the level of their lowest common ancestor with
/// `x`; each group is a union of sibling balls whose integrals are
/// precomputed, so the cost is `O(leaves · depth · p)`.
pub fn apply_operator(
    tree: &MeasureTree,
    kernel: &RateProfile,
    f: &PiecewiseFunction,
) -> Result<PiecewiseFunction> {
    f.check_tree(tree)?;
    kernel.check_compatible(tree.base(), tree.window())?;
    let agg = aggregate(tree, f.values());
    let p = tree.base().get() as usize;
    let gmin = tree.window().gamma_min();
    let depth = tree.window().depth();
    let fv = f.values();
    let out = (0..fv.len())
        .into_par_iter()
        .map(|x| {
            let fx = fv[x];
            let mut acc = 0.0;
            let mut idx = x;
            for k in 0..depth {
                let own = idx % p;
                let first = idx - own;
                let mut shell = 0.0;
                for c in 0..p {
                    if c == own {
                        continue;
                    }
                    let j = first + c;
                    shell += match agg.shapes[k][j] {
                        Shape::Empty => 0.0,
                        Shape::Uniform(v) if v == fx => 0.0,
                        Shape::Uniform(v) => tree.measure_at_f64(gmin + k as i32, j) * (v - fx),
                        Shape::Mixed => {
                            agg.sums[k][j] - fx * tree.measure_at_f64(gmin + k as i32, j)
                        }
                    };
                }
                acc += kernel.w(gmin + k as i32 + 1) * shell;
                idx /= p;
            }
            acc
        })
        .collect();
    Ok(f.with_values(out))
}

/// `R(x) = ∫ m(y) W(|x - y|_p) d_p y` over the leaves `y` other than the one
/// holding `x`: the total jump rate out of `x`.
pub fn kernel_integral(tree: &MeasureTree, kernel: &RateProfile) -> Result<PiecewiseFunction> {
    kernel.check_compatible(tree.base(), tree.window())?;
    let p = tree.base().get() as usize;
    let gmin = tree.window().gamma_min();
    let depth = tree.window().depth();
    let out = (0..tree.leaf_count())
        .into_par_iter()
        .map(|x| {
            let mut acc = 0.0;
            let mut idx = x;
            for k in 0..depth {
                let level = gmin + k as i32;
                let shell =
                    tree.measure_at_f64(level + 1, idx / p) - tree.measure_at_f64(level, idx);
                acc += kernel.w(level + 1) * shell;
                idx /= p;
            }
            acc
        })
        .collect();
    Ok(PiecewiseFunction::<f64>::zeros_like(tree).with_values(out))
}

#[cfg(test)]
mod tests {
    use num_rational::BigRational;

    use super::*;
    use crate::padic::{BallAddress, Base, Window};
    use crate::spectral::{eigenfunction_f, eigenvalue, EigenfunctionIndex};

    fn fixture() -> (MeasureTree, RateProfile) {
        let base = Base::new(3).unwrap();
        let window = Window::new(-3, 0).unwrap();
        let density = (0..27)
            .map(|i: i64| BigRational::new((i * 7 % 5).into(), (1 + i % 4).into()))
            .collect();
        let tree = MeasureTree::from_leaf_densities(base, window, density).unwrap();
        let kernel = RateProfile::vladimirov(0.5, window, base).unwrap();
        (tree, kernel)
    }

    fn naive(tree: &MeasureTree, kernel: &RateProfile, f: &[f64]) -> Vec<f64> {
        let base = tree.base();
        let gmin = tree.window().gamma_min();
        let w = tree.leaf_weights_f64();
        (0..f.len())
            .map(|x| {
                (0..f.len())
                    .filter(|&y| y != x)
                    .map(|y| {
                        let level = crate::padic::lca_level(base, gmin, x, y);
                        kernel.w(level) * w[y] * (f[y] - f[x])
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn constant_maps_to_exact_zero() {
        let (tree, kernel) = fixture();
        let f = PiecewiseFunction::constant(tree.base(), tree.window(), 0.3);
        let out = apply_operator(&tree, &kernel, &f).unwrap();
        assert!(out.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn matches_pairwise_sum() {
        let (tree, kernel) = fixture();
        let values: Vec<f64> = (0..27).map(|i| ((i * 13) % 11) as f64 - 4.5).collect();
        let f = PiecewiseFunction::<f64>::zeros_like(&tree).with_values(values.clone());
        let out = apply_operator(&tree, &kernel, &f).unwrap();
        for (a, b) in out.values().iter().zip(naive(&tree, &kernel, &values)) {
            assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn worked_eigenfunction() {
        let base = Base::new(2).unwrap();
        let window = Window::new(-3, 0).unwrap();
        let root = BallAddress::root(base, window);
        let tree = MeasureTree::uniform_ball(&root, BigRational::from_integer(1.into())).unwrap();
        let kernel = RateProfile::vladimirov(1.0, window, base).unwrap();
        let idx = EigenfunctionIndex::new(&tree, root.clone(), 0).unwrap();
        let f = eigenfunction_f(&tree, &idx).unwrap();
        let out = apply_operator(&tree, &kernel, &f).unwrap();
        assert_eq!(eigenvalue(&tree, &kernel, &root).unwrap(), -1.0);
        for (a, b) in out.values().iter().zip(f.values()) {
            assert!((a + b).abs() < 1e-15);
        }
    }

    #[test]
    fn kernel_integral_is_operator_on_indicator_complement() {
        // (W_m 1_{x})(x) = -R(x) · 1 when the leaf x carries no mass
        let (tree, kernel) = fixture();
        let r = kernel_integral(&tree, &kernel).unwrap();
        for x in 0..tree.leaf_count() {
            if tree.is_supported(x) {
                continue;
            }
            let mut delta = PiecewiseFunction::zeros_like(&tree);
            delta.values_mut()[x] = 1.0;
            let out = apply_operator(&tree, &kernel, &delta).unwrap();
            assert!((out.values()[x] + r.values()[x]).abs() < 1e-13);
        }
    }
}
