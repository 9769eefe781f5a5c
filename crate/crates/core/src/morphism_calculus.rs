//! Generators of the aggregate category, the `σ ∘ φ_m ∘ φ_c` decomposition,
//! orderings of contractions, factorizations and the relations.
//!
//! Intermediate objects are always *pure*: a fused vertex is named after its
//! least constituent and surviving flags keep their names. This makes
//! composites of generators comparable by plain equality.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{compose, FlagId, Graph, GraphMorphism, Isomorphism, MorphismError, VertexId};

/// Default bound on the degree for enumerations.
pub const DEFAULT_DEGREE_BOUND: usize = 7;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GeneratorTag {
    Edge { s: FlagId, t: FlagId },
    Loop { s: FlagId, t: FlagId },
    Merger { v: VertexId, w: VertexId },
    Iso {
        vertices: BTreeMap<VertexId, VertexId>,
        flags: BTreeMap<FlagId, FlagId>,
    },
}

impl GeneratorTag {
    /// 1 for contractions, 0 otherwise.
    pub fn degree(&self) -> usize {
        match self {
            GeneratorTag::Edge { .. } | GeneratorTag::Loop { .. } => 1,
            _ => 0,
        }
    }

    pub fn contracted_pair(&self) -> Option<(FlagId, FlagId)> {
        match self {
            GeneratorTag::Edge { s, t } | GeneratorTag::Loop { s, t } => Some((s.clone(), t.clone())),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum CalcError {
    #[error("flag {0} not found")]
    FlagNotFound(FlagId),
    #[error("vertex {0} not found")]
    VertexNotFound(VertexId),
    #[error("edge contraction needs flags on distinct vertices ({0}, {1})")]
    SameVertexForEdgeContraction(FlagId, FlagId),
    #[error("loop contraction needs two distinct flags on one vertex ({0}, {1})")]
    DistinctVertexForLoopContraction(FlagId, FlagId),
    #[error("merger needs two distinct vertices")]
    SameVertexForMerger(VertexId),
    #[error("source is not an aggregate")]
    NotAnAggregate,
    #[error("isomorphism witness is not a bijection preserving incidence")]
    InvalidWitness,
    #[error("degree {degree} exceeds bound {bound}")]
    BoundExceeded { degree: usize, bound: usize },
    #[error("generators are not composable")]
    GeneratorsNotComposable,
    #[error(transparent)]
    Morphism(#[from] MorphismError),
}

/// The generator with the given tag on an aggregate.
pub fn make_generator(source: &Graph, tag: &GeneratorTag) -> Result<GraphMorphism, CalcError> {
    if !source.is_aggregate() {
        return Err(CalcError::NotAnAggregate);
    }
    let vertex_of = |f: &FlagId| source.vertex_of(f).cloned().ok_or_else(|| CalcError::FlagNotFound(f.clone()));
    match tag {
        GeneratorTag::Edge { s, t } => {
            let (vs, vt) = (vertex_of(s)?, vertex_of(t)?);
            if vs == vt || s == t {
                return Err(CalcError::SameVertexForEdgeContraction(s.clone(), t.clone()));
            }
            let blocks = partition_with_merge(source, &vs, &vt);
            Ok(pure_morphism(source, &[(s.clone(), t.clone())], &blocks)?)
        }
        GeneratorTag::Loop { s, t } => {
            let (vs, vt) = (vertex_of(s)?, vertex_of(t)?);
            if vs != vt || s == t {
                return Err(CalcError::DistinctVertexForLoopContraction(s.clone(), t.clone()));
            }
            let blocks = discrete(source);
            Ok(pure_morphism(source, &[(s.clone(), t.clone())], &blocks)?)
        }
        GeneratorTag::Merger { v, w } => {
            for x in [v, w] {
                if !source.vertices().contains(x) {
                    return Err(CalcError::VertexNotFound(x.clone()));
                }
            }
            if v == w {
                return Err(CalcError::SameVertexForMerger(v.clone()));
            }
            let blocks = partition_with_merge(source, v, w);
            Ok(pure_morphism(source, &[], &blocks)?)
        }
        GeneratorTag::Iso { vertices, flags } => {
            let witness = Isomorphism {
                vertices: vertices.clone(),
                flags: flags.clone(),
            };
            let target = relabel(source, &witness).ok_or(CalcError::InvalidWitness)?;
            if !witness.is_valid(source, &target) {
                return Err(CalcError::InvalidWitness);
            }
            Ok(GraphMorphism::from_isomorphism(source, &target, &witness)?)
        }
    }
}

/// Applies a witness (total bijection on identifiers) to a graph.
pub fn relabel(g: &Graph, w: &Isomorphism) -> Option<Graph> {
    if w.vertices.len() != g.vertex_count() || w.flags.len() != g.flag_count() {
        return None;
    }
    if g.vertices().iter().any(|v| !w.vertices.contains_key(v)) || g.flags().any(|f| !w.flags.contains_key(f)) {
        return None;
    }
    let vimg: BTreeSet<_> = w.vertices.values().collect();
    let fimg: BTreeSet<_> = w.flags.values().collect();
    if vimg.len() != w.vertices.len() || fimg.len() != w.flags.len() {
        return None;
    }
    Some(g.renamed(&|f| w.flags[f].clone(), &|v| w.vertices[v].clone()))
}

fn discrete(g: &Graph) -> Vec<BTreeSet<VertexId>> {
    g.vertices().iter().map(|v| BTreeSet::from([v.clone()])).collect()
}

fn partition_with_merge(g: &Graph, a: &VertexId, b: &VertexId) -> Vec<BTreeSet<VertexId>> {
    let mut blocks: Vec<BTreeSet<VertexId>> = g
        .vertices()
        .iter()
        .filter(|v| *v != a && *v != b)
        .map(|v| BTreeSet::from([v.clone()]))
        .collect();
    blocks.push(BTreeSet::from([a.clone(), b.clone()]));
    blocks
}

/// The pure morphism out of an aggregate contracting `ghost` and fusing each
/// block of `blocks` into a vertex named after its least member.
pub fn pure_morphism(
    source: &Graph,
    ghost: &[(FlagId, FlagId)],
    blocks: &[BTreeSet<VertexId>],
) -> Result<GraphMorphism, MorphismError> {
    let mut vertex_map = BTreeMap::new();
    for b in blocks {
        let name = b.iter().next().expect("nonempty block").clone();
        for v in b {
            vertex_map.insert(v.clone(), name.clone());
        }
    }
    let gone: BTreeSet<&FlagId> = ghost.iter().flat_map(|(a, b)| [a, b]).collect();
    let mut incidence = BTreeMap::new();
    for (f, v) in source.incidence() {
        if !gone.contains(f) {
            let w = vertex_map.get(v).ok_or_else(|| MorphismError::VertexMapNotTotal(v.clone()))?;
            incidence.insert(f.clone(), w.clone());
        }
    }
    let vertices: BTreeSet<VertexId> = vertex_map.values().cloned().collect();
    let mut labels = source.labels.clone();
    labels.flags.retain(|f, _| !gone.contains(f));
    // A fused vertex gets no label; decorations recompute it.
    let singletons: BTreeSet<&VertexId> = blocks.iter().filter(|b| b.len() == 1).flatten().collect();
    labels.vertices.retain(|v, _| singletons.contains(v));
    labels.orders.clear();
    // Source edges not contracted stay edges.
    let involution = source
        .involution_pairs()
        .iter()
        .filter(|(a, _)| !gone.contains(a))
        .map(|(a, b)| (a.clone(), b.clone()))
        .collect();
    let target = Graph::from_parts(vertices, incidence, involution, labels);
    let flag_map = target.flags().map(|f| (f.clone(), f.clone())).collect();
    let ghost_map = ghost.iter().map(|(a, b)| (a.clone(), b.clone())).collect();
    GraphMorphism::new(source.clone(), target, vertex_map, flag_map, ghost_map)
}

/// Tag of the contraction of the pair `{s, t}` in `g`: edge or loop
/// depending on the current incidence.
pub fn contraction_tag(g: &Graph, s: &FlagId, t: &FlagId) -> Result<GeneratorTag, CalcError> {
    let vs = g.vertex_of(s).ok_or_else(|| CalcError::FlagNotFound(s.clone()))?;
    let vt = g.vertex_of(t).ok_or_else(|| CalcError::FlagNotFound(t.clone()))?;
    Ok(if vs == vt {
        GeneratorTag::Loop { s: s.clone(), t: t.clone() }
    } else {
        GeneratorTag::Edge { s: s.clone(), t: t.clone() }
    })
}

/// A composite of generators with the order in which edges were contracted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrderedComposite {
    pub morphism: GraphMorphism,
    pub tags: Vec<GeneratorTag>,
    /// Contracted pairs, in order, named by source flags.
    pub edge_order: Vec<(FlagId, FlagId)>,
}

/// One step of a word in the generators, named in terms of the *source*
/// of the whole word. Vertex names are resolved through the running vertex
/// map, and contraction kinds are decided at application time.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Step {
    Contract(FlagId, FlagId),
    Merge(VertexId, VertexId),
}

/// Applies a word of steps to an aggregate.
pub fn apply_word(source: &Graph, word: &[Step]) -> Result<OrderedComposite, CalcError> {
    let mut current = GraphMorphism::identity(source);
    let mut tags = Vec::new();
    let mut edge_order = Vec::new();
    for step in word {
        let here = current.target().clone();
        let tag = match step {
            Step::Contract(s, t) => {
                edge_order.push((s.min(t).clone(), s.max(t).clone()));
                contraction_tag(&here, s, t)?
            }
            Step::Merge(v, w) => {
                let (cv, cw) = (&current.vertex_map()[v], &current.vertex_map()[w]);
                if cv == cw {
                    return Err(CalcError::SameVertexForMerger(cv.clone()));
                }
                GeneratorTag::Merger { v: cv.clone(), w: cw.clone() }
            }
        };
        let g = make_generator(&here, &tag)?;
        current = compose(&current, &g)?;
        tags.push(tag);
    }
    Ok(OrderedComposite {
        morphism: current,
        tags,
        edge_order,
    })
}

/// Applies concrete tags in sequence, each to the previous target.
pub fn apply_tags(source: &Graph, tags: &[GeneratorTag]) -> Result<GraphMorphism, CalcError> {
    let mut current = GraphMorphism::identity(source);
    for tag in tags {
        let g = make_generator(current.target(), tag)?;
        current = compose(&current, &g)?;
    }
    Ok(current)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    pub iso: GraphMorphism,
    pub merger: GraphMorphism,
    pub contraction: GraphMorphism,
    pub contraction_factors: Vec<GeneratorTag>,
    pub merger_factors: Vec<GeneratorTag>,
}

impl Decomposition {
    /// `iso ∘ merger ∘ contraction`.
    pub fn recompose(&self) -> Result<GraphMorphism, MorphismError> {
        compose(&compose(&self.contraction, &self.merger)?, &self.iso)
    }
}

fn aggregate_check(phi: &GraphMorphism) -> Result<(), CalcError> {
    if phi.source().is_aggregate() && phi.target().is_aggregate() {
        Ok(())
    } else {
        Err(CalcError::NotAnAggregate)
    }
}

/// `φ = σ ∘ φ_m ∘ φ_c` with pure `φ_c`, `φ_m`.
pub fn decompose(phi: &GraphMorphism) -> Result<Decomposition, CalcError> {
    aggregate_check(phi)?;
    let x = phi.source();
    let ghost = phi.ghost_edges();
    let components = phi.ghost_graph().components();
    let contraction = pure_morphism(x, &ghost, &components)?;
    let xc = contraction.target().clone();
    // Fibers of φ expressed in the names of xc.
    let mut fibers: BTreeMap<&VertexId, BTreeSet<VertexId>> = BTreeMap::new();
    for (v, w) in phi.vertex_map() {
        fibers.entry(w).or_default().insert(contraction.vertex_map()[v].clone());
    }
    let blocks: Vec<_> = fibers.values().cloned().collect();
    let merger = pure_morphism(&xc, &[], &blocks)?;
    let xm = merger.target();
    let mut vm = BTreeMap::new();
    for (w, b) in &fibers {
        vm.insert(b.iter().next().unwrap().clone(), (*w).clone());
    }
    let iso = GraphMorphism::new(xm.clone(), phi.target().clone(), vm, phi.flag_map().clone(), BTreeMap::new())?;

    let mut contraction_factors = Vec::new();
    let mut cur = GraphMorphism::identity(x);
    for (s, t) in &ghost {
        let tag = contraction_tag(cur.target(), s, t)?;
        cur = compose(&cur, &make_generator(cur.target(), &tag)?)?;
        contraction_factors.push(tag);
    }
    debug_assert_eq!(cur, contraction);
    let mut merger_factors = Vec::new();
    let mut cur = GraphMorphism::identity(&xc);
    for b in &blocks {
        let mut it = b.iter();
        let first = it.next().unwrap();
        for other in it {
            let (cv, cw) = (cur.vertex_map()[first].clone(), cur.vertex_map()[other].clone());
            let tag = GeneratorTag::Merger { v: cv, w: cw };
            cur = compose(&cur, &make_generator(cur.target(), &tag)?)?;
            merger_factors.push(tag);
        }
    }
    debug_assert_eq!(cur, merger);
    Ok(Decomposition {
        iso,
        merger,
        contraction,
        contraction_factors,
        merger_factors,
    })
}

pub fn degree(phi: &GraphMorphism) -> usize {
    phi.degree()
}

fn permutations<T: Clone>(items: &[T]) -> Vec<Vec<T>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x.clone());
            out.push(p);
        }
    }
    out
}

/// All orderings of the contractions of `φ_c` as generator words whose
/// partial composites are accepted by `admissible`. Each word composes to
/// `φ_c` exactly.
pub fn enumerate_orderings(
    phi: &GraphMorphism,
    bound: usize,
    admissible: &dyn Fn(&GraphMorphism) -> bool,
) -> Result<Vec<Vec<GeneratorTag>>, CalcError> {
    aggregate_check(phi)?;
    let n = phi.degree();
    if n > bound {
        return Err(CalcError::BoundExceeded { degree: n, bound });
    }
    let mut out = Vec::new();
    'perm: for order in permutations(&phi.ghost_edges()) {
        let mut cur = GraphMorphism::identity(phi.source());
        let mut tags = Vec::new();
        for (s, t) in &order {
            let tag = contraction_tag(cur.target(), s, t)?;
            cur = compose(&cur, &make_generator(cur.target(), &tag)?)?;
            if !admissible(&cur) {
                continue 'perm;
            }
            tags.push(tag);
        }
        out.push(tags);
    }
    Ok(out)
}

/// All set partitions of `items`, blocks in order of first element.
pub fn set_partitions<T: Clone>(items: &[T]) -> Vec<Vec<Vec<T>>> {
    fn go<T: Clone>(items: &[T], i: usize, cur: &mut Vec<Vec<T>>, out: &mut Vec<Vec<Vec<T>>>) {
        if i == items.len() {
            out.push(cur.clone());
            return;
        }
        for b in 0..cur.len() {
            cur[b].push(items[i].clone());
            go(items, i + 1, cur, out);
            cur[b].pop();
        }
        cur.push(vec![items[i].clone()]);
        go(items, i + 1, cur, out);
        cur.pop();
    }
    let mut out = Vec::new();
    go(items, 0, &mut Vec::new(), &mut out);
    out
}

/// Partitions of the source vertices that coarsen the components of the
/// graph on `x` with edges `g0` and refine the fibers of `phi`.
fn intermediate_partitions(phi: &GraphMorphism, g0: &[(FlagId, FlagId)]) -> Vec<Vec<BTreeSet<VertexId>>> {
    let x = phi.source();
    let mut with_g0 = x.underlying_aggregate();
    for (a, b) in g0 {
        with_g0 = with_g0.with_edge(a.as_str(), b.as_str());
    }
    let comps = with_g0.components();
    let mut per_fiber: BTreeMap<&VertexId, Vec<BTreeSet<VertexId>>> = BTreeMap::new();
    for c in &comps {
        let w = &phi.vertex_map()[c.iter().next().unwrap()];
        per_fiber.entry(w).or_default().push(c.clone());
    }
    let mut result: Vec<Vec<BTreeSet<VertexId>>> = vec![Vec::new()];
    for cs in per_fiber.values() {
        let parts = set_partitions(cs);
        let mut next = Vec::new();
        for r in &result {
            for p in &parts {
                let mut r2 = r.clone();
                for block in p {
                    r2.push(block.iter().flatten().cloned().collect());
                }
                next.push(r2);
            }
        }
        result = next;
    }
    for r in &mut result {
        r.sort();
    }
    result
}

/// The factorization `φ = φ₁ ∘ φ₀` determined by the ghost edges `g0` of
/// `φ₀` and its fibers. `φ₀` is pure.
pub fn factorization_through(
    phi: &GraphMorphism,
    g0: &[(FlagId, FlagId)],
    blocks: &[BTreeSet<VertexId>],
) -> Result<(GraphMorphism, GraphMorphism), MorphismError> {
    let phi0 = pure_morphism(phi.source(), g0, blocks)?;
    let y = phi0.target().clone();
    let vm = blocks
        .iter()
        .map(|b| {
            let rep = b.iter().next().unwrap();
            (rep.clone(), phi.vertex_map()[rep].clone())
        })
        .collect();
    let g0set: BTreeSet<&(FlagId, FlagId)> = g0.iter().collect();
    let rest: BTreeMap<FlagId, FlagId> = phi
        .ghost_edges()
        .into_iter()
        .filter(|e| !g0set.contains(e))
        .collect();
    let phi1 = GraphMorphism::new(y, phi.target().clone(), vm, phi.flag_map().clone(), rest)?;
    Ok((phi0, phi1))
}

/// One representative `(φ₀, φ₁)` per class of factorizations up to
/// isomorphism of the middle object, restricted to factors accepted by
/// `admissible`.
///
/// Classes are in bijection with pairs (subset `G₀` of the ghost edges,
/// partition of the source vertices refining the fibers and containing each
/// `G₀` edge in a block); `φ₀` is taken pure.
pub fn enumerate_factorizations(
    phi: &GraphMorphism,
    bound: usize,
    admissible: &dyn Fn(&GraphMorphism) -> bool,
) -> Result<Vec<(GraphMorphism, GraphMorphism)>, CalcError> {
    aggregate_check(phi)?;
    let edges = phi.ghost_edges();
    if edges.len() > bound {
        return Err(CalcError::BoundExceeded { degree: edges.len(), bound });
    }
    let mut out = Vec::new();
    for mask in 0u32..(1 << edges.len()) {
        let g0: Vec<_> = edges
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, e)| e.clone())
            .collect();
        for blocks in intermediate_partitions(phi, &g0) {
            let (p0, p1) = factorization_through(phi, &g0, &blocks)?;
            if admissible(&p0) && admissible(&p1) {
                out.push((p0, p1));
            }
        }
    }
    Ok(out)
}

/// All pure morphisms out of an aggregate: a partial perfect matching of the
/// flags as ghost edges, then a coarsening of the components of the
/// resulting ghost graph.
pub fn enumerate_pure_morphisms(source: &Graph) -> Vec<GraphMorphism> {
    let flags: Vec<FlagId> = source.flags().cloned().collect();
    let mut out = Vec::new();
    for matching in partial_matchings(&flags) {
        let mut gg = source.underlying_aggregate();
        for (a, b) in &matching {
            gg = gg.with_edge(a.as_str(), b.as_str());
        }
        let comps = gg.components();
        for p in set_partitions(&comps) {
            let blocks: Vec<BTreeSet<VertexId>> = p.iter().map(|b| b.iter().flatten().cloned().collect()).collect();
            out.push(pure_morphism(source, &matching, &blocks).expect("pure morphism"));
        }
    }
    out
}

/// All sets of disjoint pairs of elements, pairs `(a, b)` with `a < b`.
pub fn partial_matchings<T: Clone + Ord>(items: &[T]) -> Vec<Vec<(T, T)>> {
    fn go<T: Clone + Ord>(items: &[T], cur: &mut Vec<(T, T)>, out: &mut Vec<Vec<(T, T)>>) {
        let Some((first, rest)) = items.split_first() else {
            out.push(cur.clone());
            return;
        };
        go(rest, cur, out);
        for i in 0..rest.len() {
            let mut others = rest.to_vec();
            let partner = others.remove(i);
            let pair = if *first < partner { (first.clone(), partner) } else { (partner, first.clone()) };
            cur.push(pair);
            go(&others, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(items, &mut Vec::new(), &mut out);
    out
}

// ---------------------------------------------------------------------------
// Relations

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelationKind {
    /// Two edge contractions on edges not forming a cycle.
    CommutingEdges,
    /// Edge contraction and loop contraction.
    EdgeLoop,
    /// Two loop contractions.
    CommutingLoops,
    /// Two edges between the same pair of vertices.
    Cycle,
    CommutingMergers,
    /// Contraction and merger with `{∂s, ∂t} ≠ {v, w}`.
    MergerContraction,
    /// `∘ˢₜ = ∘_{st} ⊡_{v,w}`.
    Triangle,
    /// `φ ∘ σ = σ' ∘ φ'`.
    Isomorphism,
}

impl RelationKind {
    /// Sign of the relation in the odd version.
    pub fn odd_sign(self) -> i64 {
        match self {
            RelationKind::CommutingEdges
            | RelationKind::EdgeLoop
            | RelationKind::CommutingLoops
            | RelationKind::Cycle => -1,
            _ => 1,
        }
    }
}

/// An instance of a relation: two words in the generators from the same
/// source that must agree.
#[derive(Clone, Debug)]
pub struct RelationInstance {
    pub kind: RelationKind,
    pub source: Graph,
    pub lhs: OrderedComposite,
    pub rhs: OrderedComposite,
}

impl RelationInstance {
    pub fn holds(&self) -> bool {
        self.lhs.morphism == self.rhs.morphism
    }
}

pub(crate) fn classify_pair(x: &Graph, a: &(FlagId, FlagId), b: &(FlagId, FlagId)) -> RelationKind {
    let ends = |(s, t): &(FlagId, FlagId)| {
        let (u, v) = (x.vertex_of(s).unwrap().clone(), x.vertex_of(t).unwrap().clone());
        if u <= v { (u, v) } else { (v, u) }
    };
    let (ea, eb) = (ends(a), ends(b));
    let la = ea.0 == ea.1;
    let lb = eb.0 == eb.1;
    match (la, lb) {
        (true, true) => RelationKind::CommutingLoops,
        (true, false) | (false, true) => RelationKind::EdgeLoop,
        (false, false) if ea == eb => RelationKind::Cycle,
        _ => RelationKind::CommutingEdges,
    }
}

/// Every relation instance on an aggregate source.
pub fn relation_instances(x: &Graph) -> Result<Vec<RelationInstance>, CalcError> {
    if !x.is_aggregate() {
        return Err(CalcError::NotAnAggregate);
    }
    let flags: Vec<FlagId> = x.flags().cloned().collect();
    let mut pairs = Vec::new();
    for i in 0..flags.len() {
        for j in i + 1..flags.len() {
            pairs.push((flags[i].clone(), flags[j].clone()));
        }
    }
    let verts: Vec<VertexId> = x.vertices().iter().cloned().collect();
    let mut vpairs = Vec::new();
    for i in 0..verts.len() {
        for j in i + 1..verts.len() {
            vpairs.push((verts[i].clone(), verts[j].clone()));
        }
    }
    let mut out = Vec::new();
    let push = |kind, lhs: Vec<Step>, rhs: Vec<Step>, out: &mut Vec<RelationInstance>| -> Result<(), CalcError> {
        out.push(RelationInstance {
            kind,
            source: x.clone(),
            lhs: apply_word(x, &lhs)?,
            rhs: apply_word(x, &rhs)?,
        });
        Ok(())
    };
    // Quadratic contraction relations.
    for (i, a) in pairs.iter().enumerate() {
        for b in &pairs[i + 1..] {
            if a.0 == b.0 || a.0 == b.1 || a.1 == b.0 || a.1 == b.1 {
                continue;
            }
            let kind = classify_pair(x, a, b);
            let ca = Step::Contract(a.0.clone(), a.1.clone());
            let cb = Step::Contract(b.0.clone(), b.1.clone());
            push(kind, vec![ca.clone(), cb.clone()], vec![cb, ca], &mut out)?;
        }
    }
    // Mergers commute.
    for (i, a) in vpairs.iter().enumerate() {
        for b in &vpairs[i + 1..] {
            let ma = Step::Merge(a.0.clone(), a.1.clone());
            let mb = Step::Merge(b.0.clone(), b.1.clone());
            push(RelationKind::CommutingMergers, vec![ma.clone(), mb.clone()], vec![mb, ma], &mut out)?;
        }
    }
    // Contractions against mergers, and the triangle.
    for (s, t) in &pairs {
        let (vs, vt) = (x.vertex_of(s).unwrap(), x.vertex_of(t).unwrap());
        let ends: BTreeSet<&VertexId> = [vs, vt].into_iter().collect();
        let c = Step::Contract(s.clone(), t.clone());
        for (v, w) in &vpairs {
            let m = Step::Merge(v.clone(), w.clone());
            let mv: BTreeSet<&VertexId> = [v, w].into_iter().collect();
            if ends == mv {
                push(RelationKind::Triangle, vec![c.clone()], vec![m, c.clone()], &mut out)?;
            } else {
                // After a contraction the merged vertices may already coincide.
                let after = apply_word(x, std::slice::from_ref(&c))?;
                if after.morphism.vertex_map()[v] == after.morphism.vertex_map()[w] {
                    continue;
                }
                push(RelationKind::MergerContraction, vec![m.clone(), c.clone()], vec![c.clone(), m], &mut out)?;
            }
        }
    }
    Ok(out)
}

/// The isomorphism relation: for `σ: X → X'` and a generator `φ` on `X'`,
/// returns `(φ ∘ σ, σ' ∘ φ')` where `φ'` is the transported generator on
/// `X`, together with a check that the ghost graphs of `φ ∘ σ` and `φ'`
/// coincide.
pub fn iso_relation(
    x: &Graph,
    witness: &Isomorphism,
    tag_on_target: &GeneratorTag,
) -> Result<(GraphMorphism, GraphMorphism, bool), CalcError> {
    let xp = relabel(x, witness).ok_or(CalcError::InvalidWitness)?;
    let sigma = GraphMorphism::from_isomorphism(x, &xp, witness)?;
    let phi = make_generator(&xp, tag_on_target)?;
    let lhs = compose(&sigma, &phi)?;
    let inv = witness.inverse();
    let back_tag = match tag_on_target {
        GeneratorTag::Edge { s, t } => GeneratorTag::Edge { s: inv.flags[s].clone(), t: inv.flags[t].clone() },
        GeneratorTag::Loop { s, t } => GeneratorTag::Loop { s: inv.flags[s].clone(), t: inv.flags[t].clone() },
        GeneratorTag::Merger { v, w } => GeneratorTag::Merger { v: inv.vertices[v].clone(), w: inv.vertices[w].clone() },
        GeneratorTag::Iso { .. } => return Err(CalcError::GeneratorsNotComposable),
    };
    let phi_p = make_generator(x, &back_tag)?;
    // σ': target(φ') → target(φ) is read off from the left-hand side.
    let yp = phi_p.target();
    let vm: BTreeMap<VertexId, VertexId> = phi_p
        .vertex_map()
        .iter()
        .map(|(v, y)| (y.clone(), lhs.vertex_map()[v].clone()))
        .collect();
    let fm: BTreeMap<FlagId, FlagId> = lhs
        .flag_map()
        .iter()
        .map(|(z, f)| (z.clone(), phi_p.flag_map().iter().find(|(_, g)| *g == f).map(|(y, _)| y.clone()).unwrap()))
        .collect();
    let sigma_p = GraphMorphism::new(yp.clone(), lhs.target().clone(), vm, fm, BTreeMap::new())?;
    let rhs = compose(&phi_p, &sigma_p)?;
    let same_ghost = lhs.ghost_graph() == phi_p.ghost_graph();
    Ok((lhs, rhs, same_ghost))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(s: &str) -> FlagId {
        FlagId::new(s)
    }
    fn v(s: &str) -> VertexId {
        VertexId::new(s)
    }

    fn two() -> Graph {
        Graph::aggregate(&[("v", &["s", "a"][..]), ("w", &["t", "b"][..])])
    }

    #[test]
    fn generator_targets() {
        let x = two();
        let e = make_generator(&x, &GeneratorTag::Edge { s: f("s"), t: f("t") }).unwrap();
        assert_eq!(*e.target(), Graph::corolla("v", &["a", "b"]));
        assert_eq!(e.degree(), 1);
        let gg = e.ghost_graph();
        assert_eq!(gg.edges(), vec![(f("s"), f("t"))]);
        let m = make_generator(&x, &GeneratorTag::Merger { v: v("v"), w: v("w") }).unwrap();
        assert_eq!(*m.target(), Graph::corolla("v", &["a", "b", "s", "t"]));
        assert_eq!(m.ghost_graph(), x);
        let c = Graph::corolla("v", &["a", "b", "c"]);
        let l = make_generator(&c, &GeneratorTag::Loop { s: f("a"), t: f("b") }).unwrap();
        assert_eq!(*l.target(), Graph::corolla("v", &["c"]));
        assert_eq!(
            make_generator(&c, &GeneratorTag::Edge { s: f("a"), t: f("b") }).unwrap_err(),
            CalcError::SameVertexForEdgeContraction(f("a"), f("b"))
        );
        assert_eq!(
            make_generator(&x, &GeneratorTag::Loop { s: f("a"), t: f("b") }).unwrap_err(),
            CalcError::DistinctVertexForLoopContraction(f("a"), f("b"))
        );
        assert_eq!(
            make_generator(&x, &GeneratorTag::Loop { s: f("a"), t: f("zz") }).unwrap_err(),
            CalcError::FlagNotFound(f("zz"))
        );
    }

    #[test]
    fn decompose_examples() {
        let x = two();
        let id = GraphMorphism::identity(&x);
        let d = decompose(&id).unwrap();
        assert!(d.iso.is_identity() && d.merger.is_identity() && d.contraction.is_identity());
        assert!(d.contraction_factors.is_empty());
        let e = make_generator(&x, &GeneratorTag::Edge { s: f("s"), t: f("t") }).unwrap();
        let d = decompose(&e).unwrap();
        assert_eq!(d.contraction_factors, vec![GeneratorTag::Edge { s: f("s"), t: f("t") }]);
        assert!(d.merger.is_identity() && d.iso.is_identity());
        assert_eq!(d.recompose().unwrap(), e);
    }

    #[test]
    fn decompose_two_contractions_and_a_merger() {
        let x = Graph::aggregate(&[
            ("a", &["a1", "a2"][..]),
            ("b", &["b1"][..]),
            ("c", &["c1", "c2"][..]),
            ("d", &["d1"][..]),
        ]);
        let phi = apply_word(
            &x,
            &[
                Step::Contract(f("a1"), f("b1")),
                Step::Contract(f("c1"), f("d1")),
                Step::Merge(v("a"), v("c")),
            ],
        )
        .unwrap()
        .morphism;
        let d = decompose(&phi).unwrap();
        assert_eq!(d.contraction_factors.len(), 2);
        assert_eq!(d.merger_factors.len(), 1);
        assert_eq!(d.recompose().unwrap(), phi);
        assert_eq!(degree(&phi), 2);
    }

    #[test]
    fn orderings_count() {
        let chain = Graph::aggregate(&[("a", &["x1"][..]), ("b", &["y1", "x2"][..]), ("c", &["y2"][..])]);
        let phi = apply_word(&chain, &[Step::Contract(f("x1"), f("y1")), Step::Contract(f("x2"), f("y2"))]).unwrap();
        let os = enumerate_orderings(&phi.morphism, 7, &|_| true).unwrap();
        assert_eq!(os.len(), 2);
        for o in &os {
            assert_eq!(apply_tags(&chain, o).unwrap(), phi.morphism);
        }
        let id = GraphMorphism::identity(&chain);
        assert_eq!(enumerate_orderings(&id, 7, &|_| true).unwrap(), vec![Vec::<GeneratorTag>::new()]);
        assert!(matches!(
            enumerate_orderings(&phi.morphism, 1, &|_| true),
            Err(CalcError::BoundExceeded { degree: 2, bound: 1 })
        ));
    }

    #[test]
    fn factorization_counts() {
        let no_merge = |m: &GraphMorphism| {
            // accepted iff every fiber's ghost graph is connected
            m.target().vertices().iter().all(|w| m.fiber_ghost_graph(w).is_connected())
        };
        let x = two();
        let e = make_generator(&x, &GeneratorTag::Edge { s: f("s"), t: f("t") }).unwrap();
        assert_eq!(enumerate_factorizations(&e, 7, &no_merge).unwrap().len(), 2);
        // with mergers the triangle adds a third class
        assert_eq!(enumerate_factorizations(&e, 7, &|_| true).unwrap().len(), 3);
        let c = Graph::corolla("v", &["a"]);
        assert_eq!(enumerate_factorizations(&GraphMorphism::identity(&c), 7, &|_| true).unwrap().len(), 1);
        let chain = Graph::aggregate(&[("a", &["x1"][..]), ("b", &["y1", "x2"][..]), ("c", &["y2"][..])]);
        let phi = apply_word(&chain, &[Step::Contract(f("x1"), f("y1")), Step::Contract(f("x2"), f("y2"))]).unwrap();
        let fs = enumerate_factorizations(&phi.morphism, 7, &no_merge).unwrap();
        assert_eq!(fs.len(), 4);
        for (p0, p1) in &fs {
            assert_eq!(compose(p0, p1).unwrap(), phi.morphism);
        }
    }

    #[test]
    fn relations_hold_on_small_aggregates() {
        let x = Graph::aggregate(&[("u", &["a", "b", "c"][..]), ("v", &["d", "e"][..]), ("w", &["g"][..])]);
        let rels = relation_instances(&x).unwrap();
        assert!(!rels.is_empty());
        let kinds: BTreeSet<_> = rels.iter().map(|r| r.kind).collect();
        for k in [
            RelationKind::CommutingEdges,
            RelationKind::EdgeLoop,
            RelationKind::Cycle,
            RelationKind::CommutingMergers,
            RelationKind::MergerContraction,
            RelationKind::Triangle,
        ] {
            assert!(kinds.contains(&k), "{k:?}");
        }
        for r in &rels {
            assert!(r.holds(), "{:?}", r.kind);
        }
    }

    #[test]
    fn isomorphism_relation() {
        let x = two();
        let w = Isomorphism {
            vertices: [(v("v"), v("p")), (v("w"), v("q"))].into_iter().collect(),
            flags: [(f("s"), f("1")), (f("a"), f("2")), (f("t"), f("3")), (f("b"), f("4"))].into_iter().collect(),
        };
        let (lhs, rhs, same) = iso_relation(&x, &w, &GeneratorTag::Edge { s: f("1"), t: f("3") }).unwrap();
        assert_eq!(lhs, rhs);
        assert!(same);
    }

    #[test]
    fn pure_morphism_count_small() {
        // one corolla with two flags: no matching or the loop; one partition
        assert_eq!(enumerate_pure_morphisms(&Graph::corolla("v", &["a", "b"])).len(), 2);
        assert_eq!(partial_matchings(&[1, 2, 3, 4]).len(), 10);
        assert_eq!(set_partitions(&[1, 2, 3, 4]).len(), 15);
    }
}
