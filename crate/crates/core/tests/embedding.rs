use num_rational::BigRational;
use proptest::prelude::*;
use ultradiff::embedding::{embed, validate_ultrametric, Dendrogram, FiniteUltrametricSpace};
use ultradiff::{Base, Window};

fn q(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

// Random dendrogram with at most `branch` children per cluster.
fn dendrogram(branch: usize) -> impl Strategy<Value = Dendrogram> {
    let leaf = Just(()).prop_map(|_| Dendrogram::Leaf(String::new()));
    leaf.prop_recursive(4, 24, branch as u32, move |inner| {
        proptest::collection::vec(inner, 2..=branch).prop_map(|children| {
            let height = children.iter().map(Dendrogram::height).max().unwrap() + q(1);
            Dendrogram::Node { height, children }
        })
    })
}

fn relabel(d: &Dendrogram, next: &mut usize) -> Dendrogram {
    match d {
        Dendrogram::Leaf(_) => {
            *next += 1;
            Dendrogram::Leaf(format!("u{next}"))
        }
        Dendrogram::Node { height, children } => Dendrogram::Node {
            height: height.clone(),
            children: children.iter().map(|c| relabel(c, next)).collect(),
        },
    }
}

proptest! {
    #[test]
    fn embeddings_are_isometric(d in dendrogram(3), p in 3u32..6) {
        let d = relabel(&d, &mut 0);
        let space = d.to_space().unwrap();
        prop_assert!(validate_ultrametric(&space).is_empty());
        let e = embed(&space, Base::new(p).unwrap()).unwrap();
        prop_assert!(e.is_isometric_to(&space).unwrap());
        let leaves: std::collections::BTreeSet<_> = e.assignment().iter().map(|(_, b)| b.clone()).collect();
        prop_assert_eq!(leaves.len(), space.len());
    }

    #[test]
    fn dendrogram_is_recovered(d in dendrogram(3)) {
        let d = relabel(&d, &mut 0);
        let space = d.to_space().unwrap();
        let rebuilt = Dendrogram::from_space(&space).unwrap();
        prop_assert_eq!(rebuilt.clusters(), d.clusters());
        // embedded points induce the same clusters
        let e = embed(&space, Base::new(3).unwrap()).unwrap();
        let distances: Vec<Vec<BigRational>> = e.assignment().iter().map(|(_, a)| {
            e.assignment().iter().map(|(_, b)| a.center().distance(&b.center()).unwrap()).collect()
        }).collect();
        let labels = e.assignment().iter().map(|(l, _)| l.clone()).collect();
        let image = FiniteUltrametricSpace::new(labels, distances).unwrap();
        let image_clusters: Vec<Vec<String>> = Dendrogram::from_space(&image).unwrap().clusters().into_iter().map(|c| c.1).collect();
        let clusters: Vec<Vec<String>> = d.clusters().into_iter().map(|c| c.1).collect();
        let (mut a, mut b) = (image_clusters, clusters);
        a.sort();
        b.sort();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn three_point_measure() {
    let d = Dendrogram::parse("((u1,u2):1,u3):2").unwrap();
    let e = embed(&d.to_space().unwrap(), Base::new(2).unwrap()).unwrap();
    let tree = e.to_measure_tree(Window::new(0, 2).unwrap(), q(1)).unwrap();
    assert_eq!(tree.total_measure(), &q(3));
    let basis =
        ultradiff::spectral::enumerate_basis(&tree, ultradiff::spectral::Sign::Plus, true).unwrap();
    assert_eq!(basis.elements.len(), 2);
    assert_eq!(basis.len(), 3);
}

#[test]
fn non_ultrametric_is_rejected() {
    let space = FiniteUltrametricSpace::from_csv("a,b,c\n0,1,2\n1,0,4\n2,4,0\n").unwrap();
    assert_eq!(validate_ultrametric(&space).len(), 1);
    assert!(matches!(
        embed(&space, Base::new(2).unwrap()),
        Err(ultradiff::Error::NotUltrametric(_))
    ));
}
