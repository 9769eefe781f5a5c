//! Decorations (directions, roots, genus, colours, planar orders) and the
//! restrictions on ghost graphs that cut out the classical Feynman
//! categories from the category of aggregates.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{FlagId, Graph, GraphMorphism, Labels, MorphismError, VertexId};

pub const IN: &str = "in";
pub const OUT: &str = "out";

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DecorationSpec {
    Directed,
    /// Directed with exactly one `out` flag per vertex.
    Rooted,
    Genus,
    Colored { colors: BTreeSet<String> },
    Planar,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum DecorationError {
    #[error("flag {0} carries no label")]
    UnlabeledFlag(FlagId),
    #[error("vertex {0} carries no label")]
    UnlabeledVertex(VertexId),
    #[error("vertex label {1} at {0} is not a genus")]
    BadGenus(VertexId, String),
    #[error("planar structure after a loop contraction is not defined")]
    PlanarLoopContraction,
    #[error("planar structure is only induced along tree ghost graphs")]
    PlanarNotATree,
    #[error("vertex {0} has no planar order")]
    MissingOrder(VertexId),
    #[error(transparent)]
    Morphism(#[from] MorphismError),
}

/// Outcome of a check, naming the first offence in canonical order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub ok: bool,
    pub violations: Vec<String>,
}

impl Verdict {
    fn pass() -> Verdict {
        Verdict { ok: true, violations: Vec::new() }
    }
    fn fail(&mut self, msg: String) {
        self.ok = false;
        self.violations.push(msg);
    }
    fn absorb(&mut self, other: Verdict) {
        if !other.ok {
            self.ok = false;
        }
        self.violations.extend(other.violations);
    }
}

fn flag_label<'a>(g: &'a Graph, f: &FlagId) -> Result<&'a str, DecorationError> {
    g.labels
        .flags
        .get(f)
        .map(|s| s.as_str())
        .ok_or_else(|| DecorationError::UnlabeledFlag(f.clone()))
}

pub fn genus_of(g: &Graph, v: &VertexId) -> Result<u64, DecorationError> {
    let l = g
        .labels
        .vertices
        .get(v)
        .ok_or_else(|| DecorationError::UnlabeledVertex(v.clone()))?;
    l.parse().map_err(|_| DecorationError::BadGenus(v.clone(), l.clone()))
}

/// Checks the decoration invariants on a single graph.
pub fn check_graph(g: &Graph, spec: &DecorationSpec) -> Result<Verdict, DecorationError> {
    let mut out = Verdict::pass();
    match spec {
        DecorationSpec::Directed | DecorationSpec::Rooted => {
            for f in g.flags() {
                let l = flag_label(g, f)?;
                if l != IN && l != OUT {
                    out.fail(format!("flag {f} has label {l}, expected in/out"));
                }
            }
            for (a, b) in g.edges() {
                if flag_label(g, &a)? == flag_label(g, &b)? {
                    out.fail(format!("edge {a}-{b} does not join in and out"));
                }
            }
            if *spec == DecorationSpec::Rooted {
                for v in g.vertices() {
                    let outs = g.flags_at(v).iter().filter(|f| g.labels.flags.get(*f).map(|s| s.as_str()) == Some(OUT)).count();
                    if outs != 1 {
                        out.fail(format!("vertex {v} has {outs} out flags"));
                    }
                }
            }
        }
        DecorationSpec::Genus => {
            for v in g.vertices() {
                genus_of(g, v)?;
            }
        }
        DecorationSpec::Colored { colors } => {
            for f in g.flags() {
                let l = flag_label(g, f)?;
                if !colors.contains(l) {
                    out.fail(format!("flag {f} has colour {l} outside the colour set"));
                }
            }
            for (a, b) in g.edges() {
                if flag_label(g, &a)? != flag_label(g, &b)? {
                    out.fail(format!("edge {a}-{b} joins different colours"));
                }
            }
        }
        DecorationSpec::Planar => {
            for v in g.vertices() {
                let Some(o) = g.labels.orders.get(v) else {
                    return Err(DecorationError::MissingOrder(v.clone()));
                };
                let at: BTreeSet<FlagId> = g.flags_at(v).into_iter().collect();
                let listed: BTreeSet<FlagId> = o.iter().cloned().collect();
                if listed != at || listed.len() != o.len() {
                    out.fail(format!("order at {v} is not a total order on its flags"));
                }
            }
        }
    }
    Ok(out)
}

/// Genus of each target vertex: genera of the fiber plus the first Betti
/// number of the fiber's ghost graph.
pub fn genus_target(
    phi: &GraphMorphism,
    source_genera: &BTreeMap<VertexId, u64>,
) -> Result<BTreeMap<VertexId, u64>, DecorationError> {
    let mut out = BTreeMap::new();
    for w in phi.target().vertices() {
        let mut g = 0;
        for v in phi.fiber(w) {
            g += source_genera
                .get(&v)
                .copied()
                .ok_or_else(|| DecorationError::UnlabeledVertex(v.clone()))?;
        }
        g += phi.fiber_ghost_graph(w).first_betti() as u64;
        out.insert(w.clone(), g);
    }
    Ok(out)
}

pub fn genera(g: &Graph) -> Result<BTreeMap<VertexId, u64>, DecorationError> {
    g.vertices().iter().map(|v| Ok((v.clone(), genus_of(g, v)?))).collect()
}

/// Cyclic sequence of tails around a planar tree, starting at the first
/// flag of the least vertex.
pub fn boundary_traversal(tree: &Graph) -> Result<Vec<FlagId>, DecorationError> {
    if tree.edges().iter().any(|(a, b)| tree.vertex_of(a) == tree.vertex_of(b)) {
        return Err(DecorationError::PlanarLoopContraction);
    }
    if !tree.is_connected() || tree.first_betti() != 0 {
        return Err(DecorationError::PlanarNotATree);
    }
    let Some(start_v) = tree.vertices().iter().next() else {
        return Ok(Vec::new());
    };
    let order = |v: &VertexId| tree.labels.orders.get(v).ok_or_else(|| DecorationError::MissingOrder(v.clone()));
    let pos: BTreeMap<&FlagId, usize> = tree
        .labels
        .orders
        .values()
        .flat_map(|o| o.iter().enumerate().map(|(i, f)| (f, i)))
        .collect();
    let start_order = order(start_v)?;
    if start_order.is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    let (mut v, mut i) = (start_v.clone(), 0usize);
    // Each step visits one flag; every flag is visited exactly once.
    for _ in 0..tree.flag_count() {
        let o = order(&v)?;
        let f = &o[i % o.len()];
        if tree.is_tail(f) {
            out.push(f.clone());
            i = (i + 1) % o.len();
        } else {
            let g = tree.partner(f);
            v = tree.vertex_of(g).unwrap().clone();
            i = (pos[g] + 1) % order(&v)?.len();
        }
    }
    Ok(out)
}

fn is_rotation(a: &[FlagId], b: &[FlagId]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    if a.is_empty() {
        return true;
    }
    (0..a.len()).any(|r| (0..a.len()).all(|k| a[(k + r) % a.len()] == b[k]))
}

/// Planar order induced on each target vertex: boundary traversal of the
/// fiber's ghost tree, transported to target flag names.
pub fn induced_orders(phi: &GraphMorphism) -> Result<BTreeMap<VertexId, Vec<FlagId>>, DecorationError> {
    let back: BTreeMap<&FlagId, &FlagId> = phi.flag_map().iter().map(|(t, s)| (s, t)).collect();
    let mut out = BTreeMap::new();
    for w in phi.target().vertices() {
        let fiber = phi.fiber_ghost_graph(w);
        let tails = boundary_traversal(&fiber)?;
        out.insert(w.clone(), tails.iter().map(|f| back[f].clone()).collect());
    }
    Ok(out)
}

/// Does the morphism respect the decoration?
pub fn check_decorated(phi: &GraphMorphism, spec: &DecorationSpec) -> Result<Verdict, DecorationError> {
    let mut out = Verdict::pass();
    out.absorb(check_graph(phi.source(), spec)?);
    out.absorb(check_graph(phi.target(), spec)?);
    let (s, t) = (phi.source(), phi.target());
    match spec {
        DecorationSpec::Directed | DecorationSpec::Rooted | DecorationSpec::Colored { .. } => {
            for (tf, sf) in phi.flag_map() {
                if flag_label(t, tf)? != flag_label(s, sf)? {
                    out.fail(format!("flag map changes the label of {tf}"));
                }
            }
            let complementary = !matches!(spec, DecorationSpec::Colored { .. });
            for (a, b) in phi.ghost_edges() {
                let same = flag_label(s, &a)? == flag_label(s, &b)?;
                if complementary == same {
                    out.fail(format!("ghost edge {a}-{b} joins incompatible labels"));
                }
            }
        }
        DecorationSpec::Genus => {
            let expected = genus_target(phi, &genera(s)?)?;
            for (w, g) in expected {
                let have = genus_of(t, &w)?;
                if have != g {
                    out.fail(format!("target vertex {w} has genus {have}, expected {g}"));
                }
            }
        }
        DecorationSpec::Planar => {
            for (a, b) in phi.ghost_edges() {
                if s.vertex_of(&a) == s.vertex_of(&b) {
                    return Err(DecorationError::PlanarLoopContraction);
                }
            }
            let induced = induced_orders(phi)?;
            for (w, o) in induced {
                let have = &t.labels.orders[&w];
                if !is_rotation(have, &o) {
                    out.fail(format!("order at {w} is not the induced planar order"));
                }
            }
        }
    }
    Ok(out)
}

/// The same morphism with target labels induced from the source: flag
/// labels along the flag map, genera by `genus_target`, planar orders by
/// boundary traversal.
pub fn with_induced_target(phi: &GraphMorphism, spec: Option<&DecorationSpec>) -> Result<GraphMorphism, DecorationError> {
    let s = phi.source();
    let mut labels = Labels::default();
    for (tf, sf) in phi.flag_map() {
        if let Some(l) = s.labels.flags.get(sf) {
            labels.flags.insert(tf.clone(), l.clone());
        }
    }
    match spec {
        Some(DecorationSpec::Genus) => {
            for (w, g) in genus_target(phi, &genera(s)?)? {
                labels.vertices.insert(w, g.to_string());
            }
        }
        Some(DecorationSpec::Planar) => {
            labels.orders = induced_orders(phi)?;
        }
        _ => {}
    }
    let target = phi.target().clone().with_labels(labels);
    Ok(GraphMorphism::new(
        s.clone(),
        target,
        phi.vertex_map().clone(),
        phi.flag_map().clone(),
        phi.ghost_pairing().clone(),
    )?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Connectivity {
    Any,
    Connected,
    OneParticleIrreducible,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Shape {
    Any,
    Tree,
    RootedTree,
    DirectedAcyclic,
}

/// Restriction on the ghost graphs of the one-comma components.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CategoryProfile {
    pub name: String,
    pub connectivity: Connectivity,
    pub ghost_graph_shape: Shape,
    /// Whether a ghost edge may have both flags on one vertex.
    pub loops_allowed: bool,
    pub mergers_allowed: bool,
    pub parallel_edges_allowed: bool,
    pub decoration: Option<DecorationSpec>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ProfileName {
    Operad,
    Cyclic,
    Modular,
    Prop,
    Dioperad,
    Properad,
    WheeledProperad,
    OnePi,
    Graphs,
}

impl ProfileName {
    pub const ALL: [ProfileName; 9] = [
        ProfileName::Operad,
        ProfileName::Cyclic,
        ProfileName::Modular,
        ProfileName::Prop,
        ProfileName::Dioperad,
        ProfileName::Properad,
        ProfileName::WheeledProperad,
        ProfileName::OnePi,
        ProfileName::Graphs,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProfileName::Operad => "operad",
            ProfileName::Cyclic => "cyclic",
            ProfileName::Modular => "modular",
            ProfileName::Prop => "prop",
            ProfileName::Dioperad => "dioperad",
            ProfileName::Properad => "properad",
            ProfileName::WheeledProperad => "wheeled-properad",
            ProfileName::OnePi => "1pi",
            ProfileName::Graphs => "graphs",
        }
    }

    pub fn profile(self) -> CategoryProfile {
        use Connectivity as C;
        use Shape as S;
        let p = |connectivity, shape, loops, mergers, parallel, decoration| CategoryProfile {
            name: self.as_str().to_string(),
            connectivity,
            ghost_graph_shape: shape,
            loops_allowed: loops,
            mergers_allowed: mergers,
            parallel_edges_allowed: parallel,
            decoration,
        };
        match self {
            ProfileName::Operad => p(C::Connected, S::RootedTree, false, false, false, Some(DecorationSpec::Rooted)),
            ProfileName::Cyclic => p(C::Connected, S::Tree, false, false, false, None),
            ProfileName::Modular => p(C::Connected, S::Any, true, false, true, Some(DecorationSpec::Genus)),
            ProfileName::Prop => p(C::Any, S::DirectedAcyclic, false, true, true, Some(DecorationSpec::Directed)),
            ProfileName::Dioperad => p(C::Connected, S::DirectedAcyclic, false, false, false, Some(DecorationSpec::Directed)),
            ProfileName::Properad => p(C::Connected, S::DirectedAcyclic, false, false, true, Some(DecorationSpec::Directed)),
            ProfileName::WheeledProperad => p(C::Connected, S::Any, true, false, true, Some(DecorationSpec::Directed)),
            ProfileName::OnePi => p(C::OneParticleIrreducible, S::Any, true, false, true, None),
            ProfileName::Graphs => p(C::Any, S::Any, true, true, true, None),
        }
    }
}

impl fmt::Display for ProfileName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProfileName {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        ProfileName::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown profile {s}"))
    }
}

/// Does the ghost graph have a bridge?
pub fn has_bridge(g: &Graph) -> bool {
    let comps = g.components().len();
    g.edges().iter().any(|(a, b)| {
        let mut pairs = g.involution_pairs().clone();
        pairs.remove(a);
        pairs.remove(b);
        let cut = Graph::from_parts(g.vertices().clone(), g.incidence().clone(), pairs, Labels::default());
        cut.components().len() > comps
    })
}

/// Directed cycle in a graph whose edges join an `out` flag to an `in` flag.
pub fn has_directed_cycle(g: &Graph) -> Result<bool, DecorationError> {
    let mut succ: BTreeMap<&VertexId, Vec<&VertexId>> = BTreeMap::new();
    for (a, b) in g.edges() {
        let (from, to) = if flag_label(g, &a)? == OUT { (&a, &b) } else { (&b, &a) };
        let (fv, tv) = (g.vertex_of(from).unwrap(), g.vertex_of(to).unwrap());
        succ.entry(fv).or_default().push(tv);
    }
    // 0 = unseen, 1 = on stack, 2 = done
    let mut state: BTreeMap<&VertexId, u8> = BTreeMap::new();
    fn visit<'a>(v: &'a VertexId, succ: &BTreeMap<&'a VertexId, Vec<&'a VertexId>>, state: &mut BTreeMap<&'a VertexId, u8>) -> bool {
        state.insert(v, 1);
        for w in succ.get(v).into_iter().flatten() {
            match state.get(w).copied().unwrap_or(0) {
                1 => return true,
                0
                    if visit(w, succ, state) => {
                        return true;
                    }
                _ => {}
            }
        }
        state.insert(v, 2);
        false
    }
    for v in g.vertices() {
        if state.get(v).copied().unwrap_or(0) == 0 && visit(v, &succ, &mut state) {
            return Ok(true);
        }
    }
    Ok(false)
}

fn has_parallel_edges(g: &Graph) -> bool {
    let mut seen = BTreeSet::new();
    for (a, b) in g.edges() {
        let (u, v) = (g.vertex_of(&a).unwrap(), g.vertex_of(&b).unwrap());
        let key = if u <= v { (u, v) } else { (v, u) };
        if !seen.insert(key) {
            return true;
        }
    }
    false
}

/// Checks the restriction on every one-comma component and the decoration.
pub fn check_profile(phi: &GraphMorphism, profile: &CategoryProfile) -> Result<Verdict, DecorationError> {
    let mut out = Verdict::pass();
    for w in phi.target().vertices() {
        let gv = phi.fiber_ghost_graph(w);
        let connected = gv.is_connected();
        if !connected && (!profile.mergers_allowed || profile.connectivity != Connectivity::Any) {
            out.fail(format!("ghost graph over {w} is not connected"));
        }
        if profile.connectivity == Connectivity::OneParticleIrreducible && has_bridge(&gv) {
            out.fail(format!("ghost graph over {w} has a bridge"));
        }
        let self_loop = gv.edges().iter().any(|(a, b)| gv.vertex_of(a) == gv.vertex_of(b));
        if self_loop && !profile.loops_allowed {
            out.fail(format!("ghost graph over {w} has a loop"));
        }
        if !profile.parallel_edges_allowed && has_parallel_edges(&gv) {
            out.fail(format!("ghost graph over {w} has parallel edges"));
        }
        match profile.ghost_graph_shape {
            Shape::Any => {}
            Shape::Tree | Shape::RootedTree => {
                if gv.first_betti() != 0 {
                    out.fail(format!("ghost graph over {w} is not a forest"));
                }
            }
            Shape::DirectedAcyclic => {
                if has_directed_cycle(&gv)? {
                    out.fail(format!("ghost graph over {w} has a directed cycle"));
                }
            }
        }
    }
    if let Some(spec) = &profile.decoration {
        out.absorb(check_decorated(phi, spec)?);
    }
    Ok(out)
}

/// Convenience predicate; decoration errors count as failure.
pub fn passes(phi: &GraphMorphism, profile: &CategoryProfile) -> bool {
    check_profile(phi, profile).map(|v| v.ok).unwrap_or(false)
}
