mod common;

use num_traits::Zero;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

use common::{all_balls, case_strategy, q, random_function, Case};
use ultradiff::spectral::{
    apply_operator, eigenfunction_f, eigenpairs, eigenvalue, enumerate_basis, expand_indicator,
    gram_matrix, gram_residual, solve_cauchy, solve_cauchy_with_sign, Sign,
};
use ultradiff::{BallAddress, Base, MeasureTree, PiecewiseFunction, RateProfile, Window};

fn seeded_function(case: &Case, seed: u64) -> PiecewiseFunction {
    random_function(&mut Xoshiro256PlusPlus::seed_from_u64(seed), &case.tree)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigenfunctions_satisfy_the_eigen_relation(case in case_strategy()) {
        for pair in eigenpairs(&case.tree, &case.kernel).unwrap() {
            prop_assert!(pair.lambda <= 0.0);
            let f = eigenfunction_f(&case.tree, &pair.index).unwrap();
            let mut residual = apply_operator(&case.tree, &case.kernel, &f).unwrap();
            residual.axpy(-pair.lambda, &f);
            prop_assert!(residual.max_abs() <= 1e-10 * pair.lambda.abs().max(1.0));
        }
    }

    #[test]
    fn basis_is_orthonormal_for_both_roots(case in case_strategy()) {
        for sign in [Sign::Plus, Sign::Minus] {
            let basis = enumerate_basis(&case.tree, sign, true).unwrap();
            prop_assert_eq!(basis.len(), case.tree.support_leaves().len());
            prop_assert!(gram_residual(&basis, &case.tree) <= 1e-10);
        }
    }

    #[test]
    fn spectrum_is_monotone_along_nested_balls(case in case_strategy()) {
        let tree = &case.tree;
        for ball in all_balls(tree) {
            if ball.is_root() || tree.node_measure(&ball).unwrap().is_zero() {
                continue;
            }
            let inner = eigenvalue(tree, &case.kernel, &ball).unwrap();
            let outer = eigenvalue(tree, &case.kernel, &ball.parent().unwrap()).unwrap();
            prop_assert!(inner <= outer);
        }
    }

    #[test]
    fn operator_is_linear(case in case_strategy(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let f = seeded_function(&case, 1);
        let g = seeded_function(&case, 2);
        let mut combo = f.clone();
        combo.scale(a);
        combo.axpy(b, &g);
        let lhs = apply_operator(&case.tree, &case.kernel, &combo).unwrap();
        let mut rhs = apply_operator(&case.tree, &case.kernel, &f).unwrap();
        rhs.scale(a);
        rhs.axpy(b, &apply_operator(&case.tree, &case.kernel, &g).unwrap());
        let scale = lhs.max_abs().max(1.0);
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12 * scale);
    }

    #[test]
    fn solutions_conserve_mass(case in case_strategy()) {
        let f0 = seeded_function(&case, 3);
        let mass = f0.integral(&case.tree).unwrap();
        let times = [0.0, 0.2, 3.0];
        for sign in [Sign::Plus, Sign::Minus] {
            let sol = solve_cauchy_with_sign(&case.tree, &case.kernel, &f0, &times, sign).unwrap();
            let on_support = |f: &PiecewiseFunction| {
                f.values().iter().enumerate().filter(|(i, _)| case.tree.is_supported(*i)).map(|(_, v)| *v).collect::<Vec<_>>()
            };
            prop_assert!(on_support(&sol[0]).iter().zip(on_support(&f0)).all(|(a, b)| (a - b).abs() < 1e-10));
            for f in &sol {
                prop_assert!((f.integral(&case.tree).unwrap() - mass).abs() <= 1e-10 * mass.abs().max(1.0));
            }
        }
    }

    #[test]
    fn indicators_expand_exactly_on_the_support(case in case_strategy()) {
        let tree = &case.tree;
        for ball in all_balls(tree) {
            if tree.node_measure(&ball).unwrap().is_zero() {
                continue;
            }
            let e = expand_indicator(tree, &ball).unwrap();
            let exact = e.evaluate_exact(tree).unwrap();
            let indicator = PiecewiseFunction::<num_rational::BigRational>::indicator(&ball);
            for i in (0..tree.leaf_count()).filter(|&i| tree.is_supported(i)) {
                prop_assert_eq!(&exact.values()[i], &indicator.values()[i]);
            }
        }
    }
}

#[test]
fn gram_matrix_has_constant_last() {
    let base = Base::new(3).unwrap();
    let window = Window::new(-2, 0).unwrap();
    let density = (0..9i64).map(|i| q(i % 3, 2)).collect();
    let tree = MeasureTree::from_leaf_densities(base, window, density).unwrap();
    let basis = enumerate_basis(&tree, Sign::Plus, true).unwrap();
    let g = gram_matrix(&basis, &tree);
    assert_eq!(g.len(), 6);
    for (i, row) in g.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
        }
    }
}

/// `Ω(|x|_p)` expands along the chain of balls around 0 with coefficients
/// `V_0(0) / V_i(0)`; each term decays with the eigenvalue of its node.
#[test]
fn unit_ball_indicator_follows_its_chain() {
    let base = Base::new(3).unwrap();
    let window = Window::new(-2, 2).unwrap();
    let density = (0..81i64).map(|i| q((i * 7) % 5, 1 + i % 3)).collect();
    let tree = MeasureTree::from_leaf_densities(base, window, density).unwrap();
    let kernel = RateProfile::vladimirov(1.0, window, base).unwrap();
    let unit = BallAddress::parse(base, window, "00").unwrap();
    let v = |level: i32| tree.v_ball(&unit, level).unwrap();
    assert!(!tree.node_measure(&unit).unwrap().is_zero());

    let f0 = PiecewiseFunction::indicator(&unit);
    let times = [0.0, 0.05, 0.5, 4.0];
    let spectral = solve_cauchy(&tree, &kernel, &f0, &times).unwrap();
    for (k, &t) in times.iter().enumerate() {
        // constant closes the chain under compact support
        let mut chain = PiecewiseFunction::constant(base, window, to_f64(&(v(0) / v(2))));
        for i in 0..2 {
            let node = unit.ancestor(i + 1).unwrap();
            let index =
                ultradiff::spectral::EigenfunctionIndex::new(&tree, node.clone(), 0).unwrap();
            let lambda = eigenvalue(&tree, &kernel, &node).unwrap();
            let coefficient = to_f64(&(v(0) / v(i)));
            chain.axpy(
                coefficient * (lambda * t).exp(),
                &eigenfunction_f(&tree, &index).unwrap(),
            );
        }
        for x in (0..tree.leaf_count()).filter(|&x| tree.is_supported(x)) {
            assert!(
                (chain.values()[x] - spectral[k].values()[x]).abs() < 1e-12,
                "t={t} leaf {x}"
            );
        }
    }
}

fn to_f64(x: &num_rational::BigRational) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap()
}

#[test]
fn worked_eigenpair_on_z2() {
    let (tree, kernel) = common::z2_indicator(3);
    let root = BallAddress::root(tree.base(), tree.window());
    let index = ultradiff::spectral::EigenfunctionIndex::new(&tree, root, 0).unwrap();
    let f = eigenfunction_f(&tree, &index).unwrap();
    let out = apply_operator(&tree, &kernel, &f).unwrap();
    let mut expected = f.clone();
    expected.scale(-1.0);
    assert!(out.max_abs_diff(&expected) < 1e-15);
    let basis = enumerate_basis(&tree, Sign::Plus, true).unwrap();
    assert_eq!(basis.elements.len(), 7);
    assert_eq!(basis.len(), 8);
}

#[test]
fn long_times_relax_to_the_mean() {
    let cases = common::corpus();
    let case = &cases[4];
    let f0 = seeded_function(case, 9);
    let mean = f0.integral(&case.tree).unwrap() / case.tree.total_measure_f64();
    let late = &solve_cauchy(&case.tree, &case.kernel, &f0, &[1e4]).unwrap()[0];
    for x in (0..case.tree.leaf_count()).filter(|&x| case.tree.is_supported(x)) {
        assert!((late.values()[x] - mean).abs() < 1e-9);
    }
}
