//! Borisov–Manin graphs: flags, vertices, incidence and an involution.
//!
//! Identifiers are opaque ordered strings. All maps are explicit `BTreeMap`s,
//! so every derived structure (edge lists, canonical forms, reports) is
//! deterministic.

mod canon;
mod morphism;

pub use canon::{
    all_isomorphisms, automorphism_count, canonical_form, canonical_labeling, find_isomorphism,
    CanonicalLabeling, Isomorphism,
};
pub use morphism::{compose, GraphMorphism, MorphismError, RawMorphism};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A half-edge identifier.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FlagId(pub String);

/// A vertex identifier.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub String);

impl FlagId {
    pub fn new(s: impl Into<String>) -> Self {
        FlagId(s.into())
    }
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl VertexId {
    pub fn new(s: impl Into<String>) -> Self {
        VertexId(s.into())
    }
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for FlagId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
impl fmt::Display for FlagId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
impl fmt::Debug for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Decoration labels carried by a graph.
///
/// `orders` holds a per-vertex sequence of incident flags (planar structure);
/// everything else is an opaque string interpreted by [`crate::decorations`].
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Labels {
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub flags: BTreeMap<FlagId, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub vertices: BTreeMap<VertexId, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub orders: BTreeMap<VertexId, Vec<FlagId>>,
}

impl Labels {
    pub fn is_empty(&self) -> bool {
        self.flags.is_empty() && self.vertices.is_empty() && self.orders.is_empty()
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("involution is not self-inverse at flag {0}")]
    InvolutionNotSelfInverse(FlagId),
    #[error("flag {0} has no incident vertex")]
    DanglingFlag(FlagId),
    #[error("flag {0} is incident to unknown vertex {1}")]
    UnknownVertex(FlagId, VertexId),
    #[error("duplicate identifier {0}")]
    DuplicateIdentifier(String),
    #[error("{0} is not a vertex")]
    NotAVertex(VertexId),
    #[error("matching between inner tails and flags at the vertex is not bijective")]
    MatchingNotBijective,
    #[error("label refers to unknown identifier {0}")]
    UnknownLabelTarget(String),
}

/// Wire format: `{"flags":[..],"vertices":[..],"incidence":{f:v},"involution":{f:f}}`.
///
/// The involution lists non-fixed flags only; one direction per edge is
/// enough, both directions are accepted.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawGraph {
    pub flags: Vec<FlagId>,
    pub vertices: Vec<VertexId>,
    #[serde(default)]
    pub incidence: BTreeMap<FlagId, VertexId>,
    #[serde(default)]
    pub involution: BTreeMap<FlagId, FlagId>,
    #[serde(default, skip_serializing_if = "Labels::is_empty")]
    pub labels: Labels,
}

/// A validated graph. Construct with [`Graph::validate`] or the builders.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Graph {
    incidence: BTreeMap<FlagId, VertexId>,
    vertices: BTreeSet<VertexId>,
    /// Non-fixed part of the involution, stored in both directions.
    involution: BTreeMap<FlagId, FlagId>,
    pub labels: Labels,
}

impl Graph {
    /// The empty graph, unit of disjoint union.
    pub fn empty() -> Self {
        Graph {
            incidence: BTreeMap::new(),
            vertices: BTreeSet::new(),
            involution: BTreeMap::new(),
            labels: Labels::default(),
        }
    }

    pub fn validate(raw: &RawGraph) -> Result<Graph, GraphError> {
        let mut vertices = BTreeSet::new();
        for v in &raw.vertices {
            if !vertices.insert(v.clone()) {
                return Err(GraphError::DuplicateIdentifier(v.0.clone()));
            }
        }
        let mut flags = BTreeSet::new();
        for f in &raw.flags {
            if !flags.insert(f.clone()) {
                return Err(GraphError::DuplicateIdentifier(f.0.clone()));
            }
        }
        let mut incidence = BTreeMap::new();
        for f in &flags {
            let v = raw
                .incidence
                .get(f)
                .ok_or_else(|| GraphError::DanglingFlag(f.clone()))?;
            if !vertices.contains(v) {
                return Err(GraphError::UnknownVertex(f.clone(), v.clone()));
            }
            incidence.insert(f.clone(), v.clone());
        }
        for f in raw.incidence.keys() {
            if !flags.contains(f) {
                return Err(GraphError::DanglingFlag(f.clone()));
            }
        }
        let mut involution = BTreeMap::new();
        for (a, b) in &raw.involution {
            if !flags.contains(a) {
                return Err(GraphError::DanglingFlag(a.clone()));
            }
            if !flags.contains(b) {
                return Err(GraphError::DanglingFlag(b.clone()));
            }
            if a == b {
                continue;
            }
            // A listed image must either be listed back to us or not be listed at all.
            if let Some(back) = raw.involution.get(b) {
                if back != a {
                    return Err(GraphError::InvolutionNotSelfInverse(b.clone()));
                }
            }
            for (x, y) in [(a, b), (b, a)] {
                if let Some(prev) = involution.insert(x.clone(), y.clone()) {
                    if &prev != y {
                        return Err(GraphError::InvolutionNotSelfInverse(x.clone()));
                    }
                }
            }
        }
        let g = Graph {
            incidence,
            vertices,
            involution,
            labels: raw.labels.clone(),
        };
        g.check_labels()?;
        Ok(g)
    }

    fn check_labels(&self) -> Result<(), GraphError> {
        for f in self.labels.flags.keys() {
            if !self.incidence.contains_key(f) {
                return Err(GraphError::UnknownLabelTarget(f.0.clone()));
            }
        }
        for v in self.labels.vertices.keys().chain(self.labels.orders.keys()) {
            if !self.vertices.contains(v) {
                return Err(GraphError::UnknownLabelTarget(v.0.clone()));
            }
        }
        for fs in self.labels.orders.values() {
            for f in fs {
                if !self.incidence.contains_key(f) {
                    return Err(GraphError::UnknownLabelTarget(f.0.clone()));
                }
            }
        }
        Ok(())
    }

    pub fn to_raw(&self) -> RawGraph {
        let mut involution = BTreeMap::new();
        for (a, b) in &self.involution {
            if a < b {
                involution.insert(a.clone(), b.clone());
            }
        }
        RawGraph {
            flags: self.incidence.keys().cloned().collect(),
            vertices: self.vertices.iter().cloned().collect(),
            incidence: self.incidence.clone(),
            involution,
            labels: self.labels.clone(),
        }
    }

    /// The corolla `*_S` with vertex `v`.
    pub fn corolla<S: AsRef<str>>(v: &str, flags: &[S]) -> Graph {
        let mut g = Graph::empty();
        g.push_corolla(v, flags);
        g
    }

    /// Aggregate of corollas, given as `(vertex, flags)` pairs.
    pub fn aggregate<S: AsRef<str>>(corollas: &[(&str, &[S])]) -> Graph {
        let mut g = Graph::empty();
        for (v, fs) in corollas {
            g.push_corolla(v, fs);
        }
        g
    }

    fn push_corolla<S: AsRef<str>>(&mut self, v: &str, flags: &[S]) {
        let v = VertexId::new(v);
        self.vertices.insert(v.clone());
        for f in flags {
            self.incidence.insert(FlagId::new(f.as_ref()), v.clone());
        }
    }

    /// Builder used by internal constructions; identifiers must be fresh.
    pub(crate) fn from_parts(
        vertices: BTreeSet<VertexId>,
        incidence: BTreeMap<FlagId, VertexId>,
        involution: BTreeMap<FlagId, FlagId>,
        labels: Labels,
    ) -> Graph {
        debug_assert!(incidence.values().all(|v| vertices.contains(v)));
        debug_assert!(involution
            .iter()
            .all(|(a, b)| a != b && involution.get(b) == Some(a)));
        Graph {
            incidence,
            vertices,
            involution,
            labels,
        }
    }

    /// Adds a pair `{a, b}` to the involution (builder helper).
    pub fn with_edge(mut self, a: &str, b: &str) -> Graph {
        let (a, b) = (FlagId::new(a), FlagId::new(b));
        assert!(self.incidence.contains_key(&a) && self.incidence.contains_key(&b) && a != b);
        self.involution.insert(a.clone(), b.clone());
        self.involution.insert(b, a);
        self
    }

    pub fn with_labels(mut self, labels: Labels) -> Graph {
        self.labels = labels;
        self
    }

    pub fn flags(&self) -> impl Iterator<Item = &FlagId> + '_ {
        self.incidence.keys()
    }

    pub fn flag_count(&self) -> usize {
        self.incidence.len()
    }

    pub fn vertices(&self) -> &BTreeSet<VertexId> {
        &self.vertices
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn incidence(&self) -> &BTreeMap<FlagId, VertexId> {
        &self.incidence
    }

    pub fn has_flag(&self, f: &FlagId) -> bool {
        self.incidence.contains_key(f)
    }

    pub fn vertex_of(&self, f: &FlagId) -> Option<&VertexId> {
        self.incidence.get(f)
    }

    /// Image of `f` under the involution (itself for tails).
    pub fn partner<'a>(&'a self, f: &'a FlagId) -> &'a FlagId {
        self.involution.get(f).unwrap_or(f)
    }

    pub fn involution_pairs(&self) -> &BTreeMap<FlagId, FlagId> {
        &self.involution
    }

    pub fn is_tail(&self, f: &FlagId) -> bool {
        !self.involution.contains_key(f)
    }

    /// Edges as ordered pairs `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(FlagId, FlagId)> {
        self.involution
            .iter()
            .filter(|(a, b)| a < b)
            .map(|(a, b)| (a.clone(), b.clone()))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.involution.len() / 2
    }

    pub fn tails(&self) -> Vec<FlagId> {
        self.incidence
            .keys()
            .filter(|f| self.is_tail(f))
            .cloned()
            .collect()
    }

    pub fn flags_at(&self, v: &VertexId) -> Vec<FlagId> {
        self.incidence
            .iter()
            .filter(|(_, w)| *w == v)
            .map(|(f, _)| f.clone())
            .collect()
    }

    /// True when there are no edges.
    pub fn is_aggregate(&self) -> bool {
        self.involution.is_empty()
    }

    pub fn is_corolla(&self) -> bool {
        self.is_aggregate() && self.vertices.len() == 1
    }

    /// Connected components, each a sorted vertex set; components are sorted
    /// by their least vertex.
    pub fn components(&self) -> Vec<BTreeSet<VertexId>> {
        let mut parent: BTreeMap<&VertexId, &VertexId> =
            self.vertices.iter().map(|v| (v, v)).collect();
        fn find<'a>(p: &mut BTreeMap<&'a VertexId, &'a VertexId>, v: &'a VertexId) -> &'a VertexId {
            let mut r = v;
            while p[r] != r {
                r = p[r];
            }
            let mut c = v;
            while p[c] != r {
                let n = p[c];
                p.insert(c, r);
                c = n;
            }
            r
        }
        for (a, b) in &self.involution {
            let (va, vb) = (&self.incidence[a], &self.incidence[b]);
            let (ra, rb) = (find(&mut parent, va), find(&mut parent, vb));
            if ra != rb {
                let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
                parent.insert(hi, lo);
            }
        }
        let mut groups: BTreeMap<&VertexId, BTreeSet<VertexId>> = BTreeMap::new();
        for v in &self.vertices {
            let r = find(&mut parent, v);
            groups.entry(r).or_default().insert(v.clone());
        }
        let mut out: Vec<_> = groups.into_values().collect();
        out.sort();
        out
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }

    /// `|E| - |V| + #components`.
    pub fn first_betti(&self) -> usize {
        let c = self.components().len();
        self.edge_count() + c - self.vertex_count()
    }

    /// Full subgraph on a vertex subset: all flags incident to the subset,
    /// edges with both ends inside, labels restricted.
    pub fn restrict(&self, keep: &BTreeSet<VertexId>) -> Graph {
        let incidence: BTreeMap<_, _> = self
            .incidence
            .iter()
            .filter(|(_, v)| keep.contains(*v))
            .map(|(f, v)| (f.clone(), v.clone()))
            .collect();
        let involution = self
            .involution
            .iter()
            .filter(|(a, b)| incidence.contains_key(*a) && incidence.contains_key(*b))
            .map(|(a, b)| (a.clone(), b.clone()))
            .collect();
        let labels = self.labels_restricted(&incidence, keep);
        Graph::from_parts(keep.clone(), incidence, involution, labels)
    }

    fn labels_restricted(
        &self,
        incidence: &BTreeMap<FlagId, VertexId>,
        keep: &BTreeSet<VertexId>,
    ) -> Labels {
        Labels {
            flags: self
                .labels
                .flags
                .iter()
                .filter(|(f, _)| incidence.contains_key(*f))
                .map(|(f, l)| (f.clone(), l.clone()))
                .collect(),
            vertices: self
                .labels
                .vertices
                .iter()
                .filter(|(v, _)| keep.contains(*v))
                .map(|(v, l)| (v.clone(), l.clone()))
                .collect(),
            orders: self
                .labels
                .orders
                .iter()
                .filter(|(v, _)| keep.contains(*v))
                .map(|(v, l)| (v.clone(), l.clone()))
                .collect(),
        }
    }

    /// Same graph with the involution replaced by the identity.
    pub fn underlying_aggregate(&self) -> Graph {
        Graph::from_parts(
            self.vertices.clone(),
            self.incidence.clone(),
            BTreeMap::new(),
            self.labels.clone(),
        )
    }

    /// Renames every identifier by prefixing it.
    pub fn prefixed(&self, prefix: &str) -> Graph {
        let fv = |v: &VertexId| VertexId(format!("{prefix}{}", v.0));
        let ff = |f: &FlagId| FlagId(format!("{prefix}{}", f.0));
        self.renamed(&ff, &fv)
    }

    pub fn renamed(&self, ff: &dyn Fn(&FlagId) -> FlagId, fv: &dyn Fn(&VertexId) -> VertexId) -> Graph {
        Graph {
            incidence: self.incidence.iter().map(|(f, v)| (ff(f), fv(v))).collect(),
            vertices: self.vertices.iter().map(fv).collect(),
            involution: self.involution.iter().map(|(a, b)| (ff(a), ff(b))).collect(),
            labels: Labels {
                flags: self.labels.flags.iter().map(|(f, l)| (ff(f), l.clone())).collect(),
                vertices: self
                    .labels
                    .vertices
                    .iter()
                    .map(|(v, l)| (fv(v), l.clone()))
                    .collect(),
                orders: self
                    .labels
                    .orders
                    .iter()
                    .map(|(v, o)| (fv(v), o.iter().map(ff).collect()))
                    .collect(),
            },
        }
    }

    /// Disjoint union; identifiers must not clash.
    pub fn disjoint_union(&self, other: &Graph) -> Result<Graph, GraphError> {
        let mut g = self.clone();
        for v in &other.vertices {
            if !g.vertices.insert(v.clone()) {
                return Err(GraphError::DuplicateIdentifier(v.0.clone()));
            }
        }
        for (f, v) in &other.incidence {
            if g.incidence.insert(f.clone(), v.clone()).is_some() {
                return Err(GraphError::DuplicateIdentifier(f.0.clone()));
            }
        }
        g.involution.extend(other.involution.clone());
        g.labels.flags.extend(other.labels.flags.clone());
        g.labels.vertices.extend(other.labels.vertices.clone());
        g.labels.orders.extend(other.labels.orders.clone());
        Ok(g)
    }

    /// Inserts `inner` into vertex `v`, identifying the tails of `inner` with
    /// the flags at `v` via `matching` (inner tail ↦ outer flag).
    ///
    /// The inner tails disappear; the outer flags formerly at `v` become
    /// incident to the inner vertex carrying the matched tail.
    pub fn insert(
        &self,
        v: &VertexId,
        inner: &Graph,
        matching: &BTreeMap<FlagId, FlagId>,
    ) -> Result<Graph, GraphError> {
        if !self.vertices.contains(v) {
            return Err(GraphError::NotAVertex(v.clone()));
        }
        let at_v: BTreeSet<FlagId> = self.flags_at(v).into_iter().collect();
        let tails: BTreeSet<FlagId> = inner.tails().into_iter().collect();
        let keys: BTreeSet<FlagId> = matching.keys().cloned().collect();
        let values: BTreeSet<FlagId> = matching.values().cloned().collect();
        if keys != tails || values != at_v || values.len() != matching.len() {
            return Err(GraphError::MatchingNotBijective);
        }
        let mut vertices = self.vertices.clone();
        vertices.remove(v);
        for w in &inner.vertices {
            if !vertices.insert(w.clone()) {
                return Err(GraphError::DuplicateIdentifier(w.0.clone()));
            }
        }
        let mut incidence = self.incidence.clone();
        for (tail, outer) in matching {
            incidence.insert(outer.clone(), inner.incidence[tail].clone());
        }
        for (f, w) in &inner.incidence {
            if tails.contains(f) {
                continue;
            }
            if incidence.insert(f.clone(), w.clone()).is_some() {
                return Err(GraphError::DuplicateIdentifier(f.0.clone()));
            }
        }
        let mut involution = self.involution.clone();
        involution.extend(inner.involution.clone());
        let mut labels = self.labels.clone();
        labels.vertices.remove(v);
        labels.orders.remove(v);
        labels.vertices.extend(inner.labels.vertices.clone());
        for (f, l) in &inner.labels.flags {
            if !tails.contains(f) {
                labels.flags.insert(f.clone(), l.clone());
            }
        }
        Ok(Graph::from_parts(vertices, incidence, involution, labels))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(flags: &[&str], verts: &[&str], inc: &[(&str, &str)], inv: &[(&str, &str)]) -> RawGraph {
        RawGraph {
            flags: flags.iter().map(|s| FlagId::new(*s)).collect(),
            vertices: verts.iter().map(|s| VertexId::new(*s)).collect(),
            incidence: inc
                .iter()
                .map(|(f, v)| (FlagId::new(*f), VertexId::new(*v)))
                .collect(),
            involution: inv
                .iter()
                .map(|(a, b)| (FlagId::new(*a), FlagId::new(*b)))
                .collect(),
            labels: Labels::default(),
        }
    }

    #[test]
    fn corolla_validates() {
        let g = Graph::validate(&raw(
            &["a", "b", "c"],
            &["x"],
            &[("a", "x"), ("b", "x"), ("c", "x")],
            &[],
        ))
        .unwrap();
        assert!(g.is_corolla());
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.tails().len(), 3);
    }

    #[test]
    fn simple_loop() {
        let g = Graph::validate(&raw(&["s", "t"], &["x"], &[("s", "x"), ("t", "x")], &[("s", "t")]))
            .unwrap();
        assert_eq!(g.edge_count(), 1);
        assert!(g.tails().is_empty());
        assert_eq!(g.first_betti(), 1);
    }

    #[test]
    fn involution_must_square_to_identity() {
        let err = Graph::validate(&raw(
            &["s", "t", "u"],
            &["x"],
            &[("s", "x"), ("t", "x"), ("u", "x")],
            &[("s", "t"), ("t", "u")],
        ))
        .unwrap_err();
        assert!(matches!(err, GraphError::InvolutionNotSelfInverse(_)));
    }

    #[test]
    fn dangling_and_duplicate() {
        let err = Graph::validate(&raw(&["a"], &["x"], &[], &[])).unwrap_err();
        assert_eq!(err, GraphError::DanglingFlag(FlagId::new("a")));
        let err = Graph::validate(&raw(&["a", "a"], &["x"], &[("a", "x")], &[])).unwrap_err();
        assert_eq!(err, GraphError::DuplicateIdentifier("a".into()));
    }

    #[test]
    fn betti_numbers() {
        assert_eq!(Graph::corolla("v", &["a", "b"]).first_betti(), 0);
        let two_parallel =
            Graph::aggregate(&[("v", &["a", "b"][..]), ("w", &["c", "d"][..])])
                .with_edge("a", "c")
                .with_edge("b", "d");
        assert_eq!(two_parallel.first_betti(), 1);
        assert_eq!(Graph::empty().first_betti(), 0);
    }

    #[test]
    fn insert_corolla_into_corolla() {
        let outer = Graph::corolla("v", &["a", "b"]);
        let inner = Graph::corolla("w", &["x", "y"]);
        let m: BTreeMap<_, _> = [("x", "a"), ("y", "b")]
            .iter()
            .map(|(i, o)| (FlagId::new(*i), FlagId::new(*o)))
            .collect();
        let g = outer.insert(&VertexId::new("v"), &inner, &m).unwrap();
        assert!(g.is_corolla());
        assert_eq!(g.flags_at(&VertexId::new("w")).len(), 2);
        assert!(find_isomorphism(&g, &outer).is_some());
    }

    #[test]
    fn insert_edge_into_edge_gives_path() {
        let outer = Graph::aggregate(&[("u", &["a"][..]), ("v", &["b", "c"][..])]).with_edge("a", "b");
        let inner = Graph::aggregate(&[("p", &["x", "y"][..]), ("q", &["z"][..])]).with_edge("y", "z");
        // inner tails x (at p) and ... q has only z, which is in the edge
        let m: BTreeMap<_, _> = [("x", "b")]
            .iter()
            .map(|(i, o)| (FlagId::new(*i), FlagId::new(*o)))
            .collect();
        // v has flags b, c: a one-tail inner does not match
        assert_eq!(
            outer.insert(&VertexId::new("v"), &inner, &m).unwrap_err(),
            GraphError::MatchingNotBijective
        );
        let inner = Graph::aggregate(&[("p", &["x", "y"][..]), ("q", &["z", "w"][..])]).with_edge("y", "z");
        let m: BTreeMap<_, _> = [("x", "b"), ("w", "c")]
            .iter()
            .map(|(i, o)| (FlagId::new(*i), FlagId::new(*o)))
            .collect();
        let g = outer.insert(&VertexId::new("v"), &inner, &m).unwrap();
        assert_eq!(g.vertex_count(), 3);
        assert_eq!(g.edge_count(), 2);
        assert!(g.is_connected());
        assert_eq!(g.first_betti(), 0);
        assert_eq!(
            outer.insert(&VertexId::new("zz"), &inner, &m).unwrap_err(),
            GraphError::NotAVertex(VertexId::new("zz"))
        );
    }
}
