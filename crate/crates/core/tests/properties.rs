use std::collections::BTreeMap;
use std::sync::OnceLock;

use feyncat::graph::{canonical_form, compose, find_isomorphism, FlagId, Graph, GraphMorphism, RawGraph, VertexId};
use feyncat::hopf::trees::{forests, CkAlgebra, Forest, TreeMode};
use feyncat::hopf::{coassociativity_defect, compatibility_defect, counit_defects};
use feyncat::linear::{format_coeff, parse_coeff, FormalSum, Q};
use feyncat::morphism_calculus::{decompose, enumerate_pure_morphisms};
use feyncat::odd_complex::{normalize, OrientedClass};
use feyncat::sweep::aggregates;
use num_rational::Ratio;
use proptest::prelude::*;

fn coeff() -> impl Strategy<Value = Q> {
    (-6i64..7, 1i64..5).prop_map(|(n, d)| Ratio::new(n, d))
}

fn sum() -> impl Strategy<Value = FormalSum<u8>> {
    prop::collection::vec((0u8..5, coeff()), 0..5).prop_map(|ts| {
        let mut s = FormalSum::zero();
        for (k, c) in ts {
            s.add_term(k, c);
        }
        s
    })
}

/// A random graph on up to four vertices with up to three flags each; a
/// random pairing of flags gives the edges.
fn graph() -> impl Strategy<Value = Graph> {
    prop::collection::vec(0usize..4, 1..5)
        .prop_flat_map(|arities| {
            let n: usize = arities.iter().sum();
            (Just(arities), Just((0..n).collect::<Vec<_>>()).prop_shuffle(), prop::collection::vec(any::<bool>(), n / 2))
        })
        .prop_map(|(arities, order, pair)| {
            let mut raw = RawGraph::default();
            for (i, a) in arities.iter().enumerate() {
                let v = VertexId::new(format!("v{i}"));
                raw.vertices.push(v.clone());
                for j in 0..*a {
                    let f = FlagId::new(format!("v{i}f{j}"));
                    raw.flags.push(f.clone());
                    raw.incidence.insert(f, v.clone());
                }
            }
            let flags: Vec<FlagId> = order.iter().map(|&i| raw.flags[i].clone()).collect();
            for (k, p) in pair.iter().enumerate() {
                if *p {
                    raw.involution.insert(flags[2 * k].clone(), flags[2 * k + 1].clone());
                }
            }
            Graph::validate(&raw).expect("generated graph is valid")
        })
}

fn permutation() -> impl Strategy<Value = Vec<usize>> {
    Just((0..12).collect::<Vec<usize>>()).prop_shuffle()
}

/// Renames flags by `perm` and reverses the vertex names.
fn relabel(g: &Graph, perm: &[usize]) -> Graph {
    let flags: BTreeMap<FlagId, FlagId> = g.flags().enumerate().map(|(i, f)| (f.clone(), FlagId::new(format!("x{:02}", perm[i])))).collect();
    let n = g.vertex_count();
    let vertices: BTreeMap<VertexId, VertexId> =
        g.vertices().iter().enumerate().map(|(i, v)| (v.clone(), VertexId::new(format!("w{}", n - i)))).collect();
    g.renamed(&|f| flags[f].clone(), &|v| vertices[v].clone())
}

fn pure_morphisms() -> &'static Vec<GraphMorphism> {
    static CELL: OnceLock<Vec<GraphMorphism>> = OnceLock::new();
    CELL.get_or_init(|| aggregates(3, 4).iter().flat_map(enumerate_pure_morphisms).collect())
}

fn small_forests() -> &'static Vec<Forest> {
    static CELL: OnceLock<Vec<Forest>> = OnceLock::new();
    CELL.get_or_init(|| (0..=4).flat_map(|n| forests(n, TreeMode::Planar)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn formal_sums_form_a_vector_space(a in sum(), b in sum(), c in sum(), x in coeff()) {
        prop_assert_eq!(a.add(&b), b.add(&a));
        prop_assert_eq!(a.add(&b).add(&c), a.add(&b.add(&c)));
        prop_assert!(a.sub(&a).is_zero());
        prop_assert_eq!(a.add(&b).scale(x), a.scale(x).add(&b.scale(x)));
        prop_assert_eq!(a.neg().neg(), a.clone());
    }

    #[test]
    fn coefficients_round_trip(x in coeff()) {
        prop_assert_eq!(parse_coeff(&format_coeff(&x)), Some(x));
    }

    #[test]
    fn canonical_form_ignores_names(g in graph(), perm in permutation()) {
        let h = relabel(&g, &perm);
        prop_assert_eq!(canonical_form(&g), canonical_form(&h));
        let w = find_isomorphism(&g, &h);
        prop_assert!(w.is_some_and(|w| w.is_valid(&g, &h)));
    }

    #[test]
    fn betti_number_is_euler_defect(g in graph()) {
        let b = g.edge_count() + g.components().len() - g.vertex_count();
        prop_assert_eq!(g.first_betti(), b);
    }

    #[test]
    fn oriented_sign_ignores_names(g in graph(), perm in permutation()) {
        let h = relabel(&g, &perm);
        let a: OrientedClass = normalize(&g, &g.edges()).unwrap();
        let iso = find_isomorphism(&g, &h).unwrap();
        let moved: Vec<(FlagId, FlagId)> = g.edges().iter().map(|(x, y)| (iso.flags[x].clone(), iso.flags[y].clone())).collect();
        let b = normalize(&h, &moved).unwrap();
        prop_assert_eq!(a.sign, b.sign);
        prop_assert_eq!(canonical_form(&a.ghost), canonical_form(&b.ghost));
    }

    #[test]
    fn decomposition_recomposes(i in 0usize..10_000) {
        let ms = pure_morphisms();
        let phi = &ms[i % ms.len()];
        let d = decompose(phi).unwrap();
        prop_assert_eq!(&d.recompose().unwrap(), phi);
        prop_assert_eq!(d.contraction.degree(), phi.degree());
    }

    #[test]
    fn composition_is_associative_and_unital(i in 0usize..10_000, j in 0usize..10_000, k in 0usize..10_000) {
        let ms = pure_morphisms();
        let a = &ms[i % ms.len()];
        prop_assert_eq!(&compose(&GraphMorphism::identity(a.source()), a).unwrap(), a);
        prop_assert_eq!(&compose(a, &GraphMorphism::identity(a.target())).unwrap(), a);
        let bs = enumerate_pure_morphisms(a.target());
        let b = &bs[j % bs.len()];
        let cs = enumerate_pure_morphisms(b.target());
        let c = &cs[k % cs.len()];
        let left = compose(&compose(a, b).unwrap(), c).unwrap();
        let right = compose(a, &compose(b, c).unwrap()).unwrap();
        prop_assert_eq!(left.degree(), a.degree() + b.degree() + c.degree());
        prop_assert_eq!(left, right);
    }

    #[test]
    fn ck_bialgebra_axioms(i in 0usize..1000, j in 0usize..1000) {
        let fs = small_forests();
        let alg = CkAlgebra { mode: TreeMode::Planar, bound: 8 };
        let (a, b) = (&fs[i % fs.len()], &fs[j % fs.len()]);
        prop_assert!(coassociativity_defect(&alg, a).unwrap().is_zero());
        let (l, r) = counit_defects(&alg, a).unwrap();
        prop_assert!(l.is_zero() && r.is_zero());
        prop_assert!(compatibility_defect(&alg, a, b).unwrap().is_zero());
    }
}
