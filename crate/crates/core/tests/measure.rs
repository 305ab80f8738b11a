mod common;

use num_traits::Zero;
use proptest::prelude::*;

use common::{all_balls, case_strategy, q};
use ultradiff::measure::{check_growth_condition, GrowthVerdict, MeasureFile, TailModel};
use ultradiff::{BallAddress, Base, MeasureTree, Window};

proptest! {
    #[test]
    fn ball_measures_add_up(case in case_strategy()) {
        let tree = &case.tree;
        for ball in all_balls(tree).into_iter().filter(|b| !b.is_leaf()) {
            let sum = ball.children().unwrap().iter().fold(num_rational::BigRational::zero(), |acc, c| {
                acc + tree.node_measure(c).unwrap()
            });
            prop_assert_eq!(&sum, tree.node_measure(&ball).unwrap());
        }
    }

    #[test]
    fn v_is_monotone_and_saturates(case in case_strategy()) {
        let tree = &case.tree;
        let w = tree.window();
        for leaf in tree.leaves() {
            let values: Vec<_> = (w.gamma_min()..=w.gamma_max() + 2).map(|i| tree.v_ball(&leaf, i).unwrap()).collect();
            prop_assert!(values.windows(2).all(|p| p[0] <= p[1]));
            prop_assert_eq!(&values[0], &(tree.density(leaf.index()) * tree.leaf_volume()));
            prop_assert_eq!(values.last().unwrap(), tree.total_measure());
        }
    }

    #[test]
    fn file_form_round_trips(case in case_strategy()) {
        let file = case.tree.to_file();
        let json = serde_json::to_string(&file).unwrap();
        let back: MeasureFile = serde_json::from_str(&json).unwrap();
        let tree = MeasureTree::from_file(&back).unwrap();
        prop_assert_eq!(tree.densities(), case.tree.densities());
    }
}

#[test]
fn z2_volumes() {
    let base = Base::new(2).unwrap();
    let window = Window::new(-3, 0).unwrap();
    let root = BallAddress::root(base, window);
    let tree = MeasureTree::uniform_ball(&root, q(1, 1)).unwrap();
    let zero_leaf = tree.leaf(0);
    assert_eq!(tree.v_ball(&zero_leaf, -1).unwrap(), q(1, 2));
    assert_eq!(tree.v_ball(&zero_leaf, 0).unwrap(), q(1, 1));
    let doubled = tree.scaled(&q(2, 1)).unwrap();
    assert_eq!(doubled.v_ball(&zero_leaf, -1).unwrap(), q(1, 1));
    let empty = MeasureTree::zero(base, window).unwrap();
    assert!(empty.total_measure().is_zero());
    assert!(empty.support_leaves().is_empty());
}

#[test]
fn growth_diagnostics() {
    let haar = TailModel::Exponential {
        scale: 1.0,
        growth: 2.0,
    };
    assert_eq!(
        check_growth_condition(&haar, 2.0, 40).verdict,
        GrowthVerdict::Satisfied
    );
    let compact = TailModel::Constant { total: 3.0 };
    assert_eq!(
        check_growth_condition(&compact, 2.0, 40).verdict,
        GrowthVerdict::Violated
    );
    let cubic = TailModel::Polynomial {
        scale: 1.0,
        degree: 3.0,
    };
    assert_eq!(
        check_growth_condition(&cubic, 2.0, 40).verdict,
        GrowthVerdict::Satisfied
    );
}
