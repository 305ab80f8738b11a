use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{internal_nodes, nonempty_children, EigenfunctionIndex, Eigenpair};
use crate::error::{Error, Result};
use crate::function::PiecewiseFunction;
use crate::kernel::RateProfile;
use crate::measure::MeasureTree;
use crate::padic::BallAddress;
use crate::rational::to_f64;

/// `λ_{gamma,n}` for the ball `parent` (its level is `gamma`).
pub fn eigenvalue(tree: &MeasureTree, kernel: &RateProfile, parent: &BallAddress) -> Result<f64> {
    tree.check_ball(parent)?;
    kernel.check_compatible(tree.base(), tree.window())?;
    if tree.measure_at(parent.level(), parent.index()).is_zero() {
        return Err(Error::ZeroMeasure(parent.path_string()));
    }
    Ok(eigenvalue_at(tree, kernel, parent.level(), parent.index()))
}

pub(crate) fn eigenvalue_at(
    tree: &MeasureTree,
    kernel: &RateProfile,
    level: i32,
    index: usize,
) -> f64 {
    let p = tree.base().get() as usize;
    let top = tree.window().gamma_max();
    let mut idx = index;
    let mut sum = 0.0;
    for i in level..top {
        sum += (kernel.w(i) - kernel.w(i + 1)) * tree.measure_at_f64(i, idx);
        idx /= p;
    }
    -(sum + kernel.tail_total() * tree.total_measure_f64())
}

/// Every admissible `(gamma, n, a)` with its eigenvalue.
pub fn eigenpairs(tree: &MeasureTree, kernel: &RateProfile) -> Result<Vec<Eigenpair>> {
    kernel.check_compatible(tree.base(), tree.window())?;
    let mut out = Vec::new();
    for (level, index) in internal_nodes(tree) {
        let kids = nonempty_children(tree, level, index);
        if kids.is_empty() {
            continue;
        }
        let lambda = eigenvalue_at(tree, kernel, level, index);
        let parent = BallAddress::from_index(tree.base(), tree.window(), level, index)?;
        for a in kids {
            out.push(Eigenpair {
                index: EigenfunctionIndex {
                    parent: parent.clone(),
                    a,
                },
                lambda,
            });
        }
    }
    Ok(out)
}

// (value inside sub-ball a, value elsewhere in the parent)
fn f_levels(tree: &MeasureTree, index: &EigenfunctionIndex) -> Result<(BigRational, BigRational)> {
    tree.check_ball(index.parent())?;
    let sub = index.sub_ball();
    let v_sub = tree.node_measure(&sub)?;
    if v_sub.is_zero() {
        return Err(Error::ZeroMeasure(sub.path_string()));
    }
    let ratio = v_sub / tree.node_measure(index.parent())?;
    Ok((BigRational::one() - &ratio, -ratio))
}

fn fill<T: Clone + Zero>(
    tree: &MeasureTree,
    index: &EigenfunctionIndex,
    inside: T,
    rest: T,
) -> PiecewiseFunction<T> {
    let mut f = PiecewiseFunction::zeros_like(tree);
    let values = f.values_mut();
    for v in &mut values[index.parent().leaf_range()] {
        *v = rest.clone();
    }
    for v in &mut values[index.sub_ball().leaf_range()] {
        *v = inside.clone();
    }
    f
}

/// `f_{gamma,n,a} = Ω_{sub-ball a} - V_{gamma-1}(a) / V_gamma(n) · Ω_{parent}`
/// with exact rational leaf values.
pub fn eigenfunction_f_exact(
    tree: &MeasureTree,
    index: &EigenfunctionIndex,
) -> Result<PiecewiseFunction<BigRational>> {
    let (inside, rest) = f_levels(tree, index)?;
    Ok(fill(tree, index, inside, rest))
}

pub fn eigenfunction_f(
    tree: &MeasureTree,
    index: &EigenfunctionIndex,
) -> Result<PiecewiseFunction> {
    let (inside, rest) = f_levels(tree, index)?;
    Ok(fill(tree, index, to_f64(&inside), to_f64(&rest)))
}

/// `g_{gamma,n,a,b} = V_{gamma-1}(b) Ω_a - V_{gamma-1}(a) Ω_b`; zero when
/// `a == b`.
pub fn intermediate_g_exact(
    tree: &MeasureTree,
    parent: &BallAddress,
    a: u8,
    b: u8,
) -> Result<PiecewiseFunction<BigRational>> {
    tree.check_ball(parent)?;
    let ball_a = parent.child(a)?;
    let ball_b = parent.child(b)?;
    let mut g = PiecewiseFunction::zeros_like(tree);
    if a == b {
        return Ok(g);
    }
    let va = tree.node_measure(&ball_a)?.clone();
    let vb = tree.node_measure(&ball_b)?.clone();
    let values = g.values_mut();
    for v in &mut values[ball_a.leaf_range()] {
        *v = vb.clone();
    }
    for v in &mut values[ball_b.leaf_range()] {
        *v = -va.clone();
    }
    Ok(g)
}

pub fn intermediate_g(
    tree: &MeasureTree,
    parent: &BallAddress,
    a: u8,
    b: u8,
) -> Result<PiecewiseFunction> {
    Ok(intermediate_g_exact(tree, parent, a, b)?.to_f64())
}

/// Closed form of `∫ m f_{i} f_{j} d_p x`:
/// `δ_{γγ'} δ_{nn'} (δ_{aa'} V(a) - V(a) V(a') / V(n))`.
pub fn inner_product_f_exact(
    tree: &MeasureTree,
    first: &EigenfunctionIndex,
    second: &EigenfunctionIndex,
) -> Result<BigRational> {
    tree.check_ball(first.parent())?;
    tree.check_ball(second.parent())?;
    if first.parent() != second.parent() {
        return Ok(BigRational::zero());
    }
    let va = tree.node_measure(&first.sub_ball())?;
    let vb = tree.node_measure(&second.sub_ball())?;
    let vp = tree.node_measure(first.parent())?;
    let cross = va * vb / vp;
    Ok(if first.a() == second.a() {
        va - cross
    } else {
        -cross
    })
}

pub fn inner_product_f(
    tree: &MeasureTree,
    first: &EigenfunctionIndex,
    second: &EigenfunctionIndex,
) -> Result<f64> {
    Ok(to_f64(&inner_product_f_exact(tree, first, second)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::{Base, Window};

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn z2(depth: i32) -> (MeasureTree, RateProfile) {
        let base = Base::new(2).unwrap();
        let window = Window::new(-depth, 0).unwrap();
        let tree = MeasureTree::uniform_ball(&BallAddress::root(base, window), q(1, 1)).unwrap();
        let kernel = RateProfile::vladimirov(1.0, window, base).unwrap();
        (tree, kernel)
    }

    fn ball(tree: &MeasureTree, path: &str) -> BallAddress {
        BallAddress::parse(tree.base(), tree.window(), path).unwrap()
    }

    #[test]
    fn worked_eigenvalues() {
        let (tree, kernel) = z2(3);
        let root = ball(&tree, "");
        assert_eq!(eigenvalue(&tree, &kernel, &root).unwrap(), -1.0);
        // -[(4 - 1) * 1/2 + 1 * 1]
        let half = ball(&tree, "0");
        assert_eq!(eigenvalue(&tree, &kernel, &half).unwrap(), -2.5);
    }

    #[test]
    fn constant_kernel_keeps_only_the_tail() {
        let base = Base::new(3).unwrap();
        let window = Window::new(-2, 1).unwrap();
        let density = (0..27).map(|i| q(i % 4, 3)).collect();
        let tree = MeasureTree::from_leaf_densities(base, window, density).unwrap();
        let values = (-2..=1).map(|i| (i, 0.75)).collect();
        let kernel = RateProfile::table(&values, window, base).unwrap();
        let expected = -0.75 * tree.total_measure_f64();
        for pair in eigenpairs(&tree, &kernel).unwrap() {
            assert!((pair.lambda - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn empty_parent_is_rejected() {
        let base = Base::new(2).unwrap();
        let window = Window::new(-2, 0).unwrap();
        let tree =
            MeasureTree::uniform_ball(&BallAddress::parse(base, window, "1").unwrap(), q(1, 1))
                .unwrap();
        let kernel = RateProfile::vladimirov(1.0, window, base).unwrap();
        let empty = BallAddress::parse(base, window, "0").unwrap();
        assert!(matches!(
            eigenvalue(&tree, &kernel, &empty),
            Err(Error::ZeroMeasure(_))
        ));
        assert!(EigenfunctionIndex::new(&tree, BallAddress::root(base, window), 0).is_err());
        assert!(EigenfunctionIndex::new(&tree, BallAddress::root(base, window), 1).is_ok());
    }

    #[test]
    fn worked_eigenfunction() {
        let (tree, _) = z2(3);
        let idx = EigenfunctionIndex::new(&tree, ball(&tree, ""), 0).unwrap();
        let f = eigenfunction_f_exact(&tree, &idx).unwrap();
        for (i, v) in f.values().iter().enumerate() {
            let expected = if i < 4 { q(1, 2) } else { q(-1, 2) };
            assert_eq!(v, &expected);
        }
        let mean: BigRational = f
            .values()
            .iter()
            .zip(tree.leaf_weights())
            .map(|(v, w)| v * w)
            .sum();
        assert!(mean.is_zero());
    }

    #[test]
    fn g_identities() {
        let base = Base::new(3).unwrap();
        let window = Window::new(-2, 0).unwrap();
        let density = (0..9).map(|i| q(1 + i % 2, 1 + i % 3)).collect();
        let tree = MeasureTree::from_leaf_densities(base, window, density).unwrap();
        let parent = BallAddress::root(base, window);
        assert!(intermediate_g_exact(&tree, &parent, 1, 1)
            .unwrap()
            .values()
            .iter()
            .all(Zero::is_zero));
        let g12 = intermediate_g_exact(&tree, &parent, 1, 2).unwrap();
        let g21 = intermediate_g_exact(&tree, &parent, 2, 1).unwrap();
        assert_eq!(g12, g21.map(|v| -v));

        let vp = tree.node_measure(&parent).unwrap().clone();
        for a in 0..3u8 {
            let mut sum = PiecewiseFunction::<BigRational>::zeros_like(&tree);
            for b in 0..3u8 {
                let g = intermediate_g_exact(&tree, &parent, a, b).unwrap();
                for (s, v) in sum.values_mut().iter_mut().zip(g.values()) {
                    *s += v;
                }
            }
            let idx = EigenfunctionIndex::new(&tree, parent.clone(), a).unwrap();
            let f = eigenfunction_f_exact(&tree, &idx).unwrap();
            assert_eq!(sum.map(|v| v / &vp), f);
        }
    }

    #[test]
    fn worked_inner_products() {
        let (tree, _) = z2(2);
        let root = ball(&tree, "");
        let i0 = EigenfunctionIndex::new(&tree, root.clone(), 0).unwrap();
        let i1 = EigenfunctionIndex::new(&tree, root, 1).unwrap();
        assert_eq!(inner_product_f_exact(&tree, &i0, &i0).unwrap(), q(1, 4));
        assert_eq!(inner_product_f_exact(&tree, &i0, &i1).unwrap(), q(-1, 4));
        let fine = EigenfunctionIndex::new(&tree, ball(&tree, "0"), 0).unwrap();
        assert!(inner_product_f_exact(&tree, &i0, &fine).unwrap().is_zero());

        // quadrature
        let f0 = eigenfunction_f(&tree, &i0).unwrap();
        let f1 = eigenfunction_f(&tree, &i1).unwrap();
        assert!((f0.inner(&f0, &tree).unwrap() - 0.25).abs() < 1e-15);
        assert!((f0.inner(&f1, &tree).unwrap() + 0.25).abs() < 1e-15);
    }
}
