//! Orientations by edge orderings, the signed edge-contraction differential
//! and sign checks for the odd relations.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{all_isomorphisms, canonical_labeling, FlagId, Graph, GraphError, RawGraph, VertexId};
use crate::linear::{q, FormalSum};
use crate::morphism_calculus::{apply_word, classify_pair, CalcError, GeneratorTag, OrderedComposite, RelationInstance, RelationKind, Step};

/// Sign of reordering graded items: `order[k] = (original position,
/// degree)` lists the items in their new order.
pub fn graded_sign(order: &[(usize, i64)]) -> i64 {
    let mut odd = 0i64;
    for i in 0..order.len() {
        for j in i + 1..order.len() {
            if order[i].0 > order[j].0 {
                odd += order[i].1 * order[j].1;
            }
        }
    }
    if odd.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

/// Sign of a permutation given as `perm[i] = image of i`.
pub fn permutation_sign(perm: &[usize]) -> i64 {
    graded_sign(&perm.iter().map(|&p| (p, 1)).collect::<Vec<_>>())
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OddError {
    #[error("edge order is not a permutation of the edges")]
    NotAPermutation,
    #[error("edge {0}-{1} not found")]
    EdgeNotFound(FlagId, FlagId),
    #[error("generators not composable")]
    GeneratorsNotComposable,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

type Edge = (FlagId, FlagId);

fn sorted(a: &FlagId, b: &FlagId) -> Edge {
    if a <= b {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    }
}

/// A ghost in canonical identifiers with its edges in canonical order; `sign`
/// is the coefficient relative to that order, `0` when an automorphism
/// reverses the orientation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrientedClass {
    pub ghost: Graph,
    pub edge_order: Vec<Edge>,
    pub sign: i64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OrientedJson {
    pub ghost: RawGraph,
    pub edge_order: Vec<(FlagId, FlagId)>,
}

fn edge_permutation(from: &[Edge], to: &[Edge]) -> Option<Vec<usize>> {
    let index: BTreeMap<&Edge, usize> = to.iter().enumerate().map(|(i, e)| (e, i)).collect();
    let perm: Vec<usize> = from.iter().map(|e| index.get(e).copied()).collect::<Option<_>>()?;
    let distinct: BTreeSet<usize> = perm.iter().copied().collect();
    (distinct.len() == to.len() && from.len() == to.len()).then_some(perm)
}

fn has_odd_automorphism(g: &Graph) -> bool {
    let edges = g.edges();
    all_isomorphisms(g, g).iter().any(|a| {
        let moved: Vec<Edge> = edges.iter().map(|(x, y)| sorted(&a.flags[x], &a.flags[y])).collect();
        permutation_sign(&edge_permutation(&moved, &edges).expect("automorphism permutes edges")) < 0
    })
}

/// Canonical representative of `(ghost, order)` with the accumulated sign.
pub fn normalize(ghost: &Graph, order: &[Edge]) -> Result<OrientedClass, OddError> {
    let edges = ghost.edges();
    let given: Vec<Edge> = order.iter().map(|(a, b)| sorted(a, b)).collect();
    edge_permutation(&given, &edges).ok_or(OddError::NotAPermutation)?;
    let lab = canonical_labeling(ghost);
    let canon_edges = lab.graph.edges();
    let mapped: Vec<Edge> = given.iter().map(|(a, b)| sorted(&lab.iso.flags[a], &lab.iso.flags[b])).collect();
    let perm = edge_permutation(&mapped, &canon_edges).expect("isomorphism maps edges");
    let sign = if has_odd_automorphism(&lab.graph) { 0 } else { permutation_sign(&perm) };
    Ok(OrientedClass { ghost: lab.graph, edge_order: canon_edges, sign })
}

impl OrientedClass {
    pub fn from_json(j: &OrientedJson) -> Result<OrientedClass, OddError> {
        normalize(&Graph::validate(&j.ghost)?, &j.edge_order)
    }

    pub fn to_json(&self) -> OrientedJson {
        OrientedJson { ghost: self.ghost.to_raw(), edge_order: self.edge_order.clone() }
    }
}

/// Contracts the edge `a`–`b`: endpoints fused to the smaller name, both
/// flags removed.
pub fn contract_edge(g: &Graph, a: &FlagId, b: &FlagId) -> Result<Graph, OddError> {
    if !g.has_flag(a) || g.partner(a) != b || a == b {
        return Err(OddError::EdgeNotFound(a.clone(), b.clone()));
    }
    let (va, vb) = (g.vertex_of(a).unwrap().clone(), g.vertex_of(b).unwrap().clone());
    let (keep, gone): (VertexId, VertexId) = if va <= vb { (va, vb) } else { (vb, va) };
    let mut raw = g.to_raw();
    raw.flags.retain(|f| f != a && f != b);
    raw.incidence.remove(a);
    raw.incidence.remove(b);
    for v in raw.incidence.values_mut() {
        if *v == gone {
            *v = keep.clone();
        }
    }
    if keep != gone {
        raw.vertices.retain(|v| *v != gone);
    }
    raw.involution.retain(|x, y| x != a && x != b && y != a && y != b);
    raw.labels.flags.retain(|f, _| f != a && f != b);
    raw.labels.vertices.remove(&gone);
    raw.labels.orders.clear();
    Ok(Graph::validate(&raw)?)
}

/// Contracts `e` in an oriented class: the sign picks up `(−1)^(k−1)` for
/// `e` in position `k`, the remaining order is inherited and renormalized.
pub fn contract_edge_signed(x: &OrientedClass, e: &Edge) -> Result<OrientedClass, OddError> {
    let e = sorted(&e.0, &e.1);
    let k = x.edge_order.iter().position(|f| *f == e).ok_or_else(|| OddError::EdgeNotFound(e.0.clone(), e.1.clone()))?;
    let g = contract_edge(&x.ghost, &e.0, &e.1)?;
    let rest: Vec<Edge> = x.edge_order.iter().filter(|f| **f != e).cloned().collect();
    let mut out = normalize(&g, &rest)?;
    out.sign *= x.sign * if k % 2 == 0 { 1 } else { -1 };
    Ok(out)
}

/// Linear combinations of canonical ghosts, each in its canonical order.
pub type SignedSum = FormalSum<Graph>;

pub fn class_to_sum(x: &OrientedClass) -> SignedSum {
    SignedSum::term(x.ghost.clone(), q(x.sign))
}

/// `d(x) = Σ_e contract_edge_signed(x, e)`.
pub fn differential(x: &SignedSum) -> SignedSum {
    let mut out = SignedSum::zero();
    for (g, c) in x.iter() {
        let class = OrientedClass { ghost: g.clone(), edge_order: g.edges(), sign: 1 };
        for e in g.edges() {
            let y = contract_edge_signed(&class, &e).expect("edge of the ghost");
            if y.sign != 0 {
                out.add_term(y.ghost, *c * q(y.sign));
            }
        }
    }
    out
}

/// Connected graphs without tails on at most `max_vertices` vertices and
/// `max_edges` edges (loops and multiple edges allowed), one per iso class.
pub fn connected_graphs(max_vertices: usize, max_edges: usize) -> Vec<Graph> {
    let mut seen = BTreeSet::new();
    for n in 1..=max_vertices {
        let mut slots = Vec::new();
        for i in 0..n {
            for j in i..n {
                slots.push((i, j));
            }
        }
        let mut chosen = Vec::new();
        multisets(&slots, 0, max_edges, &mut chosen, &mut |edges| {
            let g = build(n, edges);
            if g.is_connected() {
                seen.insert(canonical_labeling(&g).graph);
            }
        });
    }
    seen.into_iter().collect()
}

fn multisets(
    slots: &[(usize, usize)],
    from: usize,
    left: usize,
    chosen: &mut Vec<(usize, usize)>,
    f: &mut dyn FnMut(&[(usize, usize)]),
) {
    f(chosen);
    if left == 0 {
        return;
    }
    for k in from..slots.len() {
        chosen.push(slots[k]);
        multisets(slots, k, left - 1, chosen, f);
        chosen.pop();
    }
}

fn build(n: usize, edges: &[(usize, usize)]) -> Graph {
    let mut raw = RawGraph {
        vertices: (0..n).map(|i| VertexId::new(format!("v{i}"))).collect(),
        ..RawGraph::default()
    };
    for (k, (i, j)) in edges.iter().enumerate() {
        let (a, b) = (FlagId::new(format!("h{k}a")), FlagId::new(format!("h{k}b")));
        raw.incidence.insert(a.clone(), VertexId::new(format!("v{i}")));
        raw.incidence.insert(b.clone(), VertexId::new(format!("v{j}")));
        raw.flags.push(a.clone());
        raw.flags.push(b.clone());
        raw.involution.insert(a, b);
    }
    Graph::validate(&raw).expect("well formed")
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DSquareReport {
    pub graphs: usize,
    pub nonzero_classes: usize,
    pub failures: usize,
}

/// `d(d(x))` on every nonzero oriented class of connected graphs within
/// the bounds.
pub fn d_squared_sweep(max_vertices: usize, max_edges: usize) -> DSquareReport {
    let mut r = DSquareReport::default();
    for g in connected_graphs(max_vertices, max_edges) {
        r.graphs += 1;
        let x = normalize(&g, &g.edges()).expect("canonical order");
        if x.sign == 0 {
            continue;
        }
        r.nonzero_classes += 1;
        if !differential(&differential(&class_to_sum(&x))).is_zero() {
            r.failures += 1;
        }
    }
    r
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SignVerdict {
    pub kind: RelationKind,
    pub morphisms_equal: bool,
    pub computed_sign: i64,
    pub expected_sign: i64,
}

impl SignVerdict {
    pub fn holds(&self) -> bool {
        self.morphisms_equal && self.computed_sign == self.expected_sign
    }
}

/// Relative orientation of two composites with the same ghost: the sign of
/// the permutation between their edge orders, `0` if the ghosts differ.
pub fn relative_sign(lhs: &OrderedComposite, rhs: &OrderedComposite) -> Result<i64, OddError> {
    if lhs.morphism.ghost_graph() != rhs.morphism.ghost_graph() {
        return Ok(0);
    }
    let a: Vec<Edge> = lhs.edge_order.iter().map(|(x, y)| sorted(x, y)).collect();
    let b: Vec<Edge> = rhs.edge_order.iter().map(|(x, y)| sorted(x, y)).collect();
    Ok(permutation_sign(&edge_permutation(&a, &b).ok_or(OddError::NotAPermutation)?))
}

pub fn check_instance(r: &RelationInstance) -> Result<SignVerdict, OddError> {
    Ok(SignVerdict {
        kind: r.kind,
        morphisms_equal: r.holds(),
        computed_sign: relative_sign(&r.lhs, &r.rhs)?,
        expected_sign: r.kind.odd_sign(),
    })
}

fn step(tag: &GeneratorTag) -> Result<Step, OddError> {
    match tag {
        GeneratorTag::Edge { s, t } | GeneratorTag::Loop { s, t } => Ok(Step::Contract(s.clone(), t.clone())),
        GeneratorTag::Merger { v, w } => Ok(Step::Merge(v.clone(), w.clone())),
        GeneratorTag::Iso { .. } => Err(OddError::GeneratorsNotComposable),
    }
}

/// The relation dictated by a pair of generators on `source` (both named on
/// the source), checked with its odd sign.
pub fn signed_relation_check(source: &Graph, gens: (&GeneratorTag, &GeneratorTag)) -> Result<SignVerdict, OddError> {
    let (a, b) = (step(gens.0)?, step(gens.1)?);
    let word = |w: &[Step]| apply_word(source, w).map_err(|_: CalcError| OddError::GeneratorsNotComposable);
    let (kind, lhs, rhs) = match (&a, &b) {
        (Step::Contract(s, t), Step::Contract(u, v)) => {
            if [s, t].iter().any(|f| *f == u || *f == v) {
                return Err(OddError::GeneratorsNotComposable);
            }
            let kind = classify_pair(source, &sorted(s, t), &sorted(u, v));
            (kind, vec![a.clone(), b.clone()], vec![b.clone(), a.clone()])
        }
        (Step::Merge(..), Step::Merge(..)) => (RelationKind::CommutingMergers, vec![a.clone(), b.clone()], vec![b.clone(), a.clone()]),
        (Step::Contract(s, t), Step::Merge(v, w)) | (Step::Merge(v, w), Step::Contract(s, t)) => {
            let ends: BTreeSet<&VertexId> = [s, t].iter().filter_map(|f| source.vertex_of(f)).collect();
            let mv: BTreeSet<&VertexId> = [v, w].into_iter().collect();
            let c = Step::Contract(s.clone(), t.clone());
            let m = Step::Merge(v.clone(), w.clone());
            if ends == mv {
                (RelationKind::Triangle, vec![c.clone()], vec![m, c])
            } else {
                (RelationKind::MergerContraction, vec![m.clone(), c.clone()], vec![c, m])
            }
        }
    };
    let inst = RelationInstance { kind, source: source.clone(), lhs: word(&lhs)?, rhs: word(&rhs)? };
    check_instance(&inst)
}
