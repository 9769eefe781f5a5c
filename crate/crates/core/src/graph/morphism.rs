//! Graph morphisms `(φ_V, φ^F, ι_φ)` and their composition.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{FlagId, Graph, GraphError, Isomorphism, RawGraph, VertexId};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum MorphismError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("target of the first morphism is not the source of the second")]
    SourceTargetMismatch,
    #[error("vertex map is not a total map into the target at {0}")]
    VertexMapNotTotal(VertexId),
    #[error("vertex map misses target vertex {0}")]
    VertexMapNotSurjective(VertexId),
    #[error("flag map is not a total map into the source at {0}")]
    FlagMapNotTotal(FlagId),
    #[error("flag map is not injective at {0}")]
    FlagMapNotInjective(FlagId),
    #[error("ghost pairing is not a fixed-point-free involution on the unmapped flags at {0}")]
    GhostPairingInvalid(FlagId),
    #[error("incidence not preserved at target flag {0}")]
    IncidenceNotPreserved(FlagId),
    #[error("ghost edge at {0} is not contracted")]
    GhostEdgeNotContracted(FlagId),
    #[error("flag map does not intertwine the involutions at {0}")]
    InvolutionNotIntertwined(FlagId),
}

/// Wire format of a morphism.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RawMorphism {
    pub source: RawGraph,
    pub target: RawGraph,
    pub vertex_map: BTreeMap<VertexId, VertexId>,
    /// Target flag ↦ source flag.
    pub flag_map: BTreeMap<FlagId, FlagId>,
    /// Either direction per ghost edge is enough.
    #[serde(default)]
    pub ghost_pairing: BTreeMap<FlagId, FlagId>,
}

/// A validated morphism of graphs.
///
/// `flag_map` goes contravariantly from target flags to source flags. The
/// ghost pairing is stored in both directions.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GraphMorphism {
    source: Graph,
    target: Graph,
    vertex_map: BTreeMap<VertexId, VertexId>,
    flag_map: BTreeMap<FlagId, FlagId>,
    ghost: BTreeMap<FlagId, FlagId>,
}

impl GraphMorphism {
    /// Validates all the conditions on a morphism.
    ///
    /// Besides incidence and contraction of ghost edges, the flag map must
    /// intertwine the involutions: a source edge is either kept (both flags
    /// in the image, and their preimages form a target edge) or contracted
    /// (both flags ghost-paired to each other); a target edge comes from a
    /// source edge or from two source tails glued together.
    pub fn new(
        source: Graph,
        target: Graph,
        vertex_map: BTreeMap<VertexId, VertexId>,
        flag_map: BTreeMap<FlagId, FlagId>,
        ghost_pairing: BTreeMap<FlagId, FlagId>,
    ) -> Result<GraphMorphism, MorphismError> {
        for v in source.vertices() {
            match vertex_map.get(v) {
                Some(w) if target.vertices().contains(w) => {}
                _ => return Err(MorphismError::VertexMapNotTotal(v.clone())),
            }
        }
        if let Some(v) = vertex_map.keys().find(|v| !source.vertices().contains(*v)) {
            return Err(MorphismError::VertexMapNotTotal(v.clone()));
        }
        let hit: BTreeSet<&VertexId> = vertex_map.values().collect();
        if let Some(w) = target.vertices().iter().find(|w| !hit.contains(w)) {
            return Err(MorphismError::VertexMapNotSurjective(w.clone()));
        }
        let mut image = BTreeSet::new();
        for f in target.flags() {
            match flag_map.get(f) {
                Some(g) if source.has_flag(g) => {
                    if !image.insert(g.clone()) {
                        return Err(MorphismError::FlagMapNotInjective(f.clone()));
                    }
                }
                _ => return Err(MorphismError::FlagMapNotTotal(f.clone())),
            }
        }
        if let Some(f) = flag_map.keys().find(|f| !target.has_flag(f)) {
            return Err(MorphismError::FlagMapNotTotal(f.clone()));
        }
        let mut ghost = BTreeMap::new();
        for (a, b) in &ghost_pairing {
            if a == b || image.contains(a) || image.contains(b) || !source.has_flag(a) || !source.has_flag(b) {
                return Err(MorphismError::GhostPairingInvalid(a.clone()));
            }
            for (x, y) in [(a, b), (b, a)] {
                if let Some(prev) = ghost.insert(x.clone(), y.clone()) {
                    if &prev != y {
                        return Err(MorphismError::GhostPairingInvalid(x.clone()));
                    }
                }
            }
        }
        if let Some(f) = source.flags().find(|f| !image.contains(*f) && !ghost.contains_key(*f)) {
            return Err(MorphismError::GhostPairingInvalid(f.clone()));
        }
        for (f, g) in &flag_map {
            if vertex_map[&source.incidence()[g]] != target.incidence()[f] {
                return Err(MorphismError::IncidenceNotPreserved(f.clone()));
            }
        }
        for (a, b) in &ghost {
            if vertex_map[&source.incidence()[a]] != vertex_map[&source.incidence()[b]] {
                return Err(MorphismError::GhostEdgeNotContracted(a.clone()));
            }
        }
        let preimage: BTreeMap<&FlagId, &FlagId> = flag_map.iter().map(|(t, s)| (s, t)).collect();
        for (a, b) in source.involution_pairs() {
            match (preimage.get(a), preimage.get(b)) {
                (Some(ta), Some(tb)) => {
                    if target.partner(ta) != *tb {
                        return Err(MorphismError::InvolutionNotIntertwined(a.clone()));
                    }
                }
                (None, None) => {
                    if ghost.get(a) != Some(b) {
                        return Err(MorphismError::InvolutionNotIntertwined(a.clone()));
                    }
                }
                _ => return Err(MorphismError::InvolutionNotIntertwined(a.clone())),
            }
        }
        for (f, g) in target.involution_pairs() {
            let (sf, sg) = (&flag_map[f], &flag_map[g]);
            let kept = source.partner(sf) == sg;
            let glued = source.is_tail(sf) && source.is_tail(sg);
            if !kept && !glued {
                return Err(MorphismError::InvolutionNotIntertwined(f.clone()));
            }
        }
        Ok(GraphMorphism {
            source,
            target,
            vertex_map,
            flag_map,
            ghost,
        })
    }

    pub fn from_raw(raw: &RawMorphism) -> Result<GraphMorphism, MorphismError> {
        let s = Graph::validate(&raw.source)?;
        let t = Graph::validate(&raw.target)?;
        GraphMorphism::new(s, t, raw.vertex_map.clone(), raw.flag_map.clone(), raw.ghost_pairing.clone())
    }

    pub fn to_raw(&self) -> RawMorphism {
        RawMorphism {
            source: self.source.to_raw(),
            target: self.target.to_raw(),
            vertex_map: self.vertex_map.clone(),
            flag_map: self.flag_map.clone(),
            ghost_pairing: self
                .ghost
                .iter()
                .filter(|(a, b)| a < b)
                .map(|(a, b)| (a.clone(), b.clone()))
                .collect(),
        }
    }

    pub fn identity(g: &Graph) -> GraphMorphism {
        GraphMorphism {
            source: g.clone(),
            target: g.clone(),
            vertex_map: g.vertices().iter().map(|v| (v.clone(), v.clone())).collect(),
            flag_map: g.flags().map(|f| (f.clone(), f.clone())).collect(),
            ghost: BTreeMap::new(),
        }
    }

    /// The isomorphism morphism `source -> target` given by a witness
    /// `source -> target`.
    pub fn from_isomorphism(source: &Graph, target: &Graph, iso: &Isomorphism) -> Result<GraphMorphism, MorphismError> {
        let flag_map = iso.flags.iter().map(|(a, b)| (b.clone(), a.clone())).collect();
        GraphMorphism::new(source.clone(), target.clone(), iso.vertices.clone(), flag_map, BTreeMap::new())
    }

    pub fn source(&self) -> &Graph {
        &self.source
    }

    pub fn target(&self) -> &Graph {
        &self.target
    }

    pub fn vertex_map(&self) -> &BTreeMap<VertexId, VertexId> {
        &self.vertex_map
    }

    pub fn flag_map(&self) -> &BTreeMap<FlagId, FlagId> {
        &self.flag_map
    }

    /// Ghost pairing in both directions.
    pub fn ghost_pairing(&self) -> &BTreeMap<FlagId, FlagId> {
        &self.ghost
    }

    /// Ghost edges as pairs `(a, b)` with `a < b`.
    pub fn ghost_edges(&self) -> Vec<(FlagId, FlagId)> {
        self.ghost
            .iter()
            .filter(|(a, b)| a < b)
            .map(|(a, b)| (a.clone(), b.clone()))
            .collect()
    }

    /// Number of ghost edges.
    pub fn degree(&self) -> usize {
        self.ghost.len() / 2
    }

    pub fn is_identity(&self) -> bool {
        self.source == self.target
            && self.ghost.is_empty()
            && self.vertex_map.iter().all(|(a, b)| a == b)
            && self.flag_map.iter().all(|(a, b)| a == b)
    }

    /// Vertex and flag maps are bijections and nothing is contracted.
    pub fn is_isomorphism(&self) -> bool {
        self.ghost.is_empty()
            && self.source.vertex_count() == self.target.vertex_count()
            && self.source.flag_count() == self.target.flag_count()
            && self.source.edge_count() == self.target.edge_count()
    }

    /// Source flags in the image of the flag map (surviving flags).
    pub fn image_flags(&self) -> BTreeSet<FlagId> {
        self.flag_map.values().cloned().collect()
    }

    /// The ghost graph: source vertices and flags, involution = ghost pairing.
    pub fn ghost_graph(&self) -> Graph {
        Graph::from_parts(
            self.source.vertices().clone(),
            self.source.incidence().clone(),
            self.ghost.clone(),
            self.source.labels.clone(),
        )
    }

    pub fn fiber(&self, w: &VertexId) -> BTreeSet<VertexId> {
        self.vertex_map
            .iter()
            .filter(|(_, t)| *t == w)
            .map(|(s, _)| s.clone())
            .collect()
    }

    /// Ghost graph of the one-comma component over a target vertex.
    pub fn fiber_ghost_graph(&self, w: &VertexId) -> Graph {
        self.ghost_graph().restrict(&self.fiber(w))
    }

    /// `second ∘ self`; requires `self.target == second.source` exactly.
    pub fn then(&self, second: &GraphMorphism) -> Result<GraphMorphism, MorphismError> {
        compose(self, second)
    }

    /// Same morphism with the target relabelled along an isomorphism witness
    /// `target -> new_target`.
    pub fn post_iso(&self, new_target: &Graph, iso: &Isomorphism) -> Result<GraphMorphism, MorphismError> {
        let sigma = GraphMorphism::from_isomorphism(&self.target, new_target, iso)?;
        compose(self, &sigma)
    }

    /// Disjoint union of morphisms with disjoint identifiers.
    pub fn disjoint_union(&self, other: &GraphMorphism) -> Result<GraphMorphism, MorphismError> {
        let source = self.source.disjoint_union(&other.source)?;
        let target = self.target.disjoint_union(&other.target)?;
        let mut vm = self.vertex_map.clone();
        vm.extend(other.vertex_map.clone());
        let mut fm = self.flag_map.clone();
        fm.extend(other.flag_map.clone());
        let mut gh = self.ghost.clone();
        gh.extend(other.ghost.clone());
        GraphMorphism::new(source, target, vm, fm, gh)
    }

    /// Every identifier of source and target prefixed.
    pub fn prefixed(&self, prefix: &str) -> GraphMorphism {
        let fv = |v: &VertexId| VertexId(format!("{prefix}{}", v.0));
        let ff = |f: &FlagId| FlagId(format!("{prefix}{}", f.0));
        GraphMorphism {
            source: self.source.prefixed(prefix),
            target: self.target.prefixed(prefix),
            vertex_map: self.vertex_map.iter().map(|(a, b)| (fv(a), fv(b))).collect(),
            flag_map: self.flag_map.iter().map(|(a, b)| (ff(a), ff(b))).collect(),
            ghost: self.ghost.iter().map(|(a, b)| (ff(a), ff(b))).collect(),
        }
    }

    /// The part of the morphism over a set of target vertices.
    pub fn restrict_to_targets(&self, keep: &BTreeSet<VertexId>) -> Result<GraphMorphism, MorphismError> {
        let src: BTreeSet<VertexId> =
            self.vertex_map.iter().filter(|(_, w)| keep.contains(*w)).map(|(v, _)| v.clone()).collect();
        let source = self.source.restrict(&src);
        let target = self.target.restrict(keep);
        let vertex_map = self.vertex_map.iter().filter(|(v, _)| src.contains(*v)).map(|(a, b)| (a.clone(), b.clone())).collect();
        let flag_map = self.flag_map.iter().filter(|(z, _)| target.has_flag(z)).map(|(a, b)| (a.clone(), b.clone())).collect();
        let ghost = self.ghost.iter().filter(|(a, _)| source.has_flag(a)).map(|(a, b)| (a.clone(), b.clone())).collect();
        GraphMorphism::new(source, target, vertex_map, flag_map, ghost)
    }

    /// Builder for internal constructions known to be valid; validated in
    /// debug builds.
    pub(crate) fn from_parts_unchecked(
        source: Graph,
        target: Graph,
        vertex_map: BTreeMap<VertexId, VertexId>,
        flag_map: BTreeMap<FlagId, FlagId>,
        ghost: BTreeMap<FlagId, FlagId>,
    ) -> GraphMorphism {
        if cfg!(debug_assertions) {
            return GraphMorphism::new(source, target, vertex_map, flag_map, ghost).expect("valid by construction");
        }
        GraphMorphism {
            source,
            target,
            vertex_map,
            flag_map,
            ghost,
        }
    }
}

/// Composite `second ∘ first`.
pub fn compose(first: &GraphMorphism, second: &GraphMorphism) -> Result<GraphMorphism, MorphismError> {
    if first.target != second.source {
        return Err(MorphismError::SourceTargetMismatch);
    }
    let vertex_map = first
        .vertex_map
        .iter()
        .map(|(v, w)| (v.clone(), second.vertex_map[w].clone()))
        .collect();
    let flag_map = second
        .flag_map
        .iter()
        .map(|(z, y)| (z.clone(), first.flag_map[y].clone()))
        .collect();
    let mut ghost = first.ghost.clone();
    for (a, b) in &second.ghost {
        ghost.insert(first.flag_map[a].clone(), first.flag_map[b].clone());
    }
    Ok(GraphMorphism::from_parts_unchecked(
        first.source.clone(),
        second.target.clone(),
        vertex_map,
        flag_map,
        ghost,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{canonical_form, find_isomorphism};

    fn fl(pairs: &[(&str, &str)]) -> BTreeMap<FlagId, FlagId> {
        pairs.iter().map(|(a, b)| (FlagId::new(*a), FlagId::new(*b))).collect()
    }
    fn vm(pairs: &[(&str, &str)]) -> BTreeMap<VertexId, VertexId> {
        pairs.iter().map(|(a, b)| (VertexId::new(*a), VertexId::new(*b))).collect()
    }

    /// Two corollas, glue s–t into an edge, then contract it.
    fn glue_then_contract() -> (GraphMorphism, GraphMorphism) {
        let x = Graph::aggregate(&[("v", &["s", "a"][..]), ("w", &["t", "b"][..])]);
        let y = x.clone().with_edge("s", "t");
        let glue = GraphMorphism::new(
            x.clone(),
            y.clone(),
            vm(&[("v", "v"), ("w", "w")]),
            fl(&[("s", "s"), ("t", "t"), ("a", "a"), ("b", "b")]),
            BTreeMap::new(),
        )
        .unwrap();
        let z = Graph::corolla("v", &["a", "b"]);
        let contract = GraphMorphism::new(
            y,
            z,
            vm(&[("v", "v"), ("w", "v")]),
            fl(&[("a", "a"), ("b", "b")]),
            fl(&[("s", "t")]),
        )
        .unwrap();
        (glue, contract)
    }

    #[test]
    fn glue_then_contract_composite() {
        let (g, c) = glue_then_contract();
        let comp = compose(&g, &c).unwrap();
        assert_eq!(comp.degree(), 1);
        let gg = comp.ghost_graph();
        assert_eq!(gg.edge_count(), 1);
        assert_eq!(gg.vertex_count(), 2);
        assert_eq!(g.ghost_graph().edge_count(), 0);
    }

    #[test]
    fn identity_laws() {
        let (g, c) = glue_then_contract();
        let comp = compose(&g, &c).unwrap();
        assert_eq!(compose(&comp, &GraphMorphism::identity(comp.target())).unwrap(), comp);
        assert_eq!(compose(&GraphMorphism::identity(comp.source()), &comp).unwrap(), comp);
        assert!(GraphMorphism::identity(comp.source()).is_identity());
        let id = GraphMorphism::identity(g.source());
        assert_eq!(id.ghost_graph(), *g.source());
    }

    #[test]
    fn mismatch_is_rejected() {
        let (g, c) = glue_then_contract();
        assert_eq!(compose(&c, &g).unwrap_err(), MorphismError::SourceTargetMismatch);
    }

    #[test]
    fn invalid_morphisms() {
        let x = Graph::aggregate(&[("v", &["s", "a"][..]), ("w", &["t", "b"][..])]);
        let z = Graph::corolla("v", &["a", "b"]);
        // ghost edge between different target vertices
        let y = Graph::aggregate(&[("v", &["a"][..]), ("w", &["b"][..])]);
        assert!(matches!(
            GraphMorphism::new(x.clone(), y, vm(&[("v", "v"), ("w", "w")]), fl(&[("a", "a"), ("b", "b")]), fl(&[("s", "t")])),
            Err(MorphismError::GhostEdgeNotContracted(_))
        ));
        // lost flag without ghost partner
        assert!(matches!(
            GraphMorphism::new(x.clone(), z.clone(), vm(&[("v", "v"), ("w", "v")]), fl(&[("a", "a"), ("b", "b")]), BTreeMap::new()),
            Err(MorphismError::GhostPairingInvalid(_))
        ));
        // incidence
        let z2 = Graph::aggregate(&[("p", &["a"][..]), ("q", &["b"][..])]);
        assert!(matches!(
            GraphMorphism::new(x.clone(), z2, vm(&[("v", "q"), ("w", "p")]), fl(&[("a", "a"), ("b", "b")]), fl(&[("s", "t")])),
            Err(MorphismError::GhostEdgeNotContracted(_)) | Err(MorphismError::IncidenceNotPreserved(_))
        ));
        // not surjective
        let z3 = Graph::aggregate(&[("v", &["a", "b"][..]), ("u", &[][..] as &[&str])]);
        assert!(matches!(
            GraphMorphism::new(x, z3, vm(&[("v", "v"), ("w", "v")]), fl(&[("a", "a"), ("b", "b")]), fl(&[("s", "t")])),
            Err(MorphismError::VertexMapNotSurjective(_))
        ));
    }

    #[test]
    fn two_contractions_on_chain_both_orders() {
        // chain a - b - c of corollas, contract x1y1 then x2y2 and the reverse
        let x = Graph::aggregate(&[("a", &["x1"][..]), ("b", &["y1", "x2"][..]), ("c", &["y2"][..])]);
        let mid1 = Graph::aggregate(&[("a", &["x2"][..]), ("c", &["y2"][..])]);
        let mid2 = Graph::aggregate(&[("a", &["x1"][..]), ("b", &["y1"][..])]);
        let end = Graph::aggregate(&[("a", &[][..] as &[&str])]);
        let f1 = GraphMorphism::new(x.clone(), mid1.clone(), vm(&[("a", "a"), ("b", "a"), ("c", "c")]), fl(&[("x2", "x2"), ("y2", "y2")]), fl(&[("x1", "y1")])).unwrap();
        let g1 = GraphMorphism::new(mid1, end.clone(), vm(&[("a", "a"), ("c", "a")]), BTreeMap::new(), fl(&[("x2", "y2")])).unwrap();
        let f2 = GraphMorphism::new(x, mid2.clone(), vm(&[("a", "a"), ("b", "b"), ("c", "b")]), fl(&[("x1", "x1"), ("y1", "y1")]), fl(&[("x2", "y2")])).unwrap();
        let g2 = GraphMorphism::new(mid2, end, vm(&[("a", "a"), ("b", "a")]), BTreeMap::new(), fl(&[("x1", "y1")])).unwrap();
        let c1 = compose(&f1, &g1).unwrap();
        let c2 = compose(&f2, &g2).unwrap();
        assert_eq!(c1, c2);
        let gg = c1.ghost_graph();
        assert_eq!(gg.edge_count(), 2);
        assert!(gg.is_connected());
        assert_eq!(canonical_form(&gg), canonical_form(&c2.ghost_graph()));
        assert!(find_isomorphism(&gg, &c2.ghost_graph()).is_some());
    }

    #[test]
    fn raw_round_trip() {
        let (g, c) = glue_then_contract();
        let comp = compose(&g, &c).unwrap();
        let back = GraphMorphism::from_raw(&comp.to_raw()).unwrap();
        assert_eq!(back, comp);
    }
}
