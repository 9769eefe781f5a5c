//! The bialgebra of morphism classes under disjoint union and the
//! factorization coproduct, its coinvariants and its Hopf quotient.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use super::{Bialgebra, HopfError};
use crate::decorations::{passes, CategoryProfile};
use crate::graph::{all_isomorphisms, automorphism_count, canonical_form, canonical_labeling, FlagId, Graph, GraphMorphism, RawGraph, VertexId};
use crate::linear::{q, FormalSum, Tensor2, Q};
use crate::morphism_calculus::enumerate_factorizations;

/// An isomorphism class of morphisms `φ ∼ σ′∘φ∘σ`, keyed by a canonical
/// form; `rep` is one representative.
#[derive(Clone)]
pub struct MorphismClass {
    pub key: Vec<u8>,
    pub rep: GraphMorphism,
}

impl PartialEq for MorphismClass {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}

impl Eq for MorphismClass {}

impl PartialOrd for MorphismClass {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MorphismClass {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.cmp(&other.key)
    }
}

impl fmt::Debug for MorphismClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ghost: Vec<String> = self.rep.ghost_edges().iter().map(|(a, b)| format!("{a}-{b}")).collect();
        write!(
            f,
            "[{}v→{}v ghost {{{}}}]",
            self.rep.source().vertex_count(),
            self.rep.target().vertex_count(),
            ghost.join(",")
        )
    }
}

/// One graph encoding a morphism: source vertices joined to their target
/// vertex by marked links, flags marked by their role.
fn encode(phi: &GraphMorphism) -> Graph {
    let x = phi.source();
    let y = phi.target();
    let sv = |v: &VertexId| VertexId(format!("s:{}", v.0));
    let tv = |w: &VertexId| VertexId(format!("t:{}", w.0));
    let sf = |f: &FlagId| FlagId(format!("f:{}", f.0));
    let mut raw = RawGraph::default();
    raw.vertices.extend(x.vertices().iter().map(sv));
    raw.vertices.extend(y.vertices().iter().map(tv));
    for v in x.vertices() {
        raw.labels.vertices.insert(sv(v), format!("src|{}", x.labels.vertices.get(v).cloned().unwrap_or_default()));
    }
    for w in y.vertices() {
        raw.labels.vertices.insert(tv(w), format!("tgt|{}", y.labels.vertices.get(w).cloned().unwrap_or_default()));
    }
    let preimage: std::collections::BTreeMap<&FlagId, &FlagId> = phi.flag_map().iter().map(|(t, s)| (s, t)).collect();
    for f in x.flags() {
        raw.flags.push(sf(f));
        raw.incidence.insert(sf(f), sv(x.vertex_of(f).unwrap()));
        let role = match (phi.ghost_pairing().get(f), x.is_tail(f), preimage.get(f)) {
            (Some(_), false, _) => "contracted",
            (Some(_), true, _) => "ghost",
            (None, false, _) => "kept",
            (None, true, Some(z)) if !y.is_tail(z) => "glued",
            _ => "tail",
        };
        let lab = x.labels.flags.get(f).cloned().unwrap_or_default();
        raw.labels.flags.insert(sf(f), format!("{role}|{lab}"));
        if let Some(g) = phi.ghost_pairing().get(f) {
            raw.involution.insert(sf(f), sf(g));
        } else if !x.is_tail(f) {
            raw.involution.insert(sf(f), sf(x.partner(f)));
        } else if let Some(z) = preimage.get(f) {
            if !y.is_tail(z) {
                raw.involution.insert(sf(f), sf(&phi.flag_map()[y.partner(z)]));
            }
        }
    }
    for (v, w) in phi.vertex_map() {
        let (a, b) = (FlagId(format!("l:{}", v.0)), FlagId(format!("m:{}", v.0)));
        raw.flags.push(a.clone());
        raw.flags.push(b.clone());
        raw.incidence.insert(a.clone(), sv(v));
        raw.incidence.insert(b.clone(), tv(w));
        raw.labels.flags.insert(a.clone(), "link-s".into());
        raw.labels.flags.insert(b.clone(), "link-t".into());
        raw.involution.insert(a, b);
    }
    for (v, o) in &x.labels.orders {
        raw.labels.orders.insert(sv(v), o.iter().map(sf).collect());
    }
    Graph::validate(&raw).expect("encoding is a graph")
}

pub fn class_of(phi: &GraphMorphism) -> MorphismClass {
    MorphismClass { key: canonical_form(&encode(phi)), rep: phi.clone() }
}

/// Identifiers `l.`/`r.` keep the two factors of a product disjoint.
pub fn union(a: &GraphMorphism, b: &GraphMorphism) -> GraphMorphism {
    a.prefixed("l.").disjoint_union(&b.prefixed("r.")).expect("prefixes are disjoint")
}

fn is_identity_class(phi: &GraphMorphism) -> bool {
    phi.is_isomorphism()
}

/// The coinvariant bialgebra `B^iso` on classes of morphisms between
/// aggregates, optionally restricted to a profile.
#[derive(Clone, Debug)]
pub struct MorphismAlgebra {
    pub profile: Option<CategoryProfile>,
    pub bound: usize,
}

impl MorphismAlgebra {
    fn admissible(&self, m: &GraphMorphism) -> bool {
        self.profile.as_ref().is_none_or(|p| passes(m, p))
    }

    /// Factorization classes with the multiplicity `|Aut(middle)|` of
    /// concrete factorizations through a fixed middle object.
    pub fn delta_class(&self, k: &MorphismClass) -> Result<Tensor2<MorphismClass>, HopfError> {
        let mut out = Tensor2::zero();
        for (p0, p1) in enumerate_factorizations(&k.rep, self.bound, &|m| self.admissible(m))? {
            let aut = automorphism_count(p0.target()) as i64;
            out.add_term((class_of(&p0), class_of(&p1)), q(aut));
        }
        Ok(out)
    }
}

impl Bialgebra for MorphismAlgebra {
    type Key = MorphismClass;

    fn unit(&self) -> MorphismClass {
        class_of(&GraphMorphism::identity(&Graph::empty()))
    }

    fn degree(&self, k: &MorphismClass) -> usize {
        k.rep.degree()
    }

    fn mul(&self, a: &MorphismClass, b: &MorphismClass) -> FormalSum<MorphismClass> {
        FormalSum::basis(class_of(&union(&a.rep, &b.rep)))
    }

    fn delta(&self, k: &MorphismClass) -> Result<Tensor2<MorphismClass>, HopfError> {
        self.delta_class(k)
    }

    /// Rescaled by `1/|Aut(X)|` on the class of `id_X`.
    fn epsilon(&self, k: &MorphismClass) -> Q {
        if is_identity_class(&k.rep) {
            Q::new(1, automorphism_count(k.rep.source()) as i64)
        } else {
            q(0)
        }
    }
}

/// Concrete factorizations through canonically labeled middle objects:
/// `|Aut(Y)|` pairs per class.
pub fn skeletal_factorizations(
    phi: &GraphMorphism,
    bound: usize,
    admissible: &dyn Fn(&GraphMorphism) -> bool,
) -> Result<Vec<(GraphMorphism, GraphMorphism)>, HopfError> {
    let mut out = Vec::new();
    for (p0, p1) in enumerate_factorizations(phi, bound, admissible)? {
        let lab = canonical_labeling(p0.target());
        let p0c = p0.post_iso(&lab.graph, &lab.iso).map_err(crate::morphism_calculus::CalcError::from)?;
        let back = GraphMorphism::from_isomorphism(&lab.graph, p0.target(), &lab.iso.inverse())
            .map_err(crate::morphism_calculus::CalcError::from)?;
        let p1c = back.then(&p1).map_err(crate::morphism_calculus::CalcError::from)?;
        for a in all_isomorphisms(&lab.graph, &lab.graph) {
            let sigma = GraphMorphism::from_isomorphism(&lab.graph, &lab.graph, &a).map_err(crate::morphism_calculus::CalcError::from)?;
            let inv = GraphMorphism::from_isomorphism(&lab.graph, &lab.graph, &a.inverse())
                .map_err(crate::morphism_calculus::CalcError::from)?;
            let left = p0c.then(&sigma).map_err(crate::morphism_calculus::CalcError::from)?;
            let right = inv.then(&p1c).map_err(crate::morphism_calculus::CalcError::from)?;
            out.push((left, right));
        }
    }
    Ok(out)
}

/// The coproduct on concrete morphisms with skeletal middle objects.
pub fn concrete_coproduct(
    phi: &GraphMorphism,
    bound: usize,
    admissible: &dyn Fn(&GraphMorphism) -> bool,
) -> Result<Tensor2<GraphMorphism>, HopfError> {
    Ok(skeletal_factorizations(phi, bound, admissible)?.into_iter().map(|p| (p, q(1))).collect())
}

/// Passage from concrete morphisms to their classes.
pub fn symmetric_coinvariants(x: &FormalSum<GraphMorphism>) -> FormalSum<MorphismClass> {
    x.map_keys(class_of)
}

pub fn coinvariants2(x: &Tensor2<GraphMorphism>) -> Tensor2<MorphismClass> {
    x.map_keys(|(a, b)| (class_of(a), class_of(b)))
}

/// `[φ] = [φ′ ⊔ id_X] ↦ [φ′] / |Aut(X)|`, with `φ′` the part of `φ` away from
/// the one-vertex fibers on which it is an isomorphism.
pub fn quotient_class(k: &MorphismClass) -> FormalSum<MorphismClass> {
    let phi = &k.rep;
    let mut id_sources = BTreeSet::new();
    let mut keep = BTreeSet::new();
    for w in phi.target().vertices() {
        let fib = phi.fiber(w);
        if fib.len() == 1 && phi.fiber_ghost_graph(w).edge_count() == 0 {
            id_sources.extend(fib);
        } else {
            keep.insert(w.clone());
        }
    }
    let aut = automorphism_count(&phi.source().restrict(&id_sources)) as i64;
    let rest = phi.restrict_to_targets(&keep).expect("restriction of a valid morphism");
    FormalSum::term(class_of(&rest), Q::new(1, aut))
}

pub fn hopf_quotient(x: &FormalSum<MorphismClass>) -> FormalSum<MorphismClass> {
    x.map_linear(quotient_class)
}

/// The Hopf quotient `H` of `B^iso`: all rescaled identity classes become
/// the unit.
#[derive(Clone, Debug)]
pub struct HopfQuotient {
    pub inner: MorphismAlgebra,
}

impl Bialgebra for HopfQuotient {
    type Key = MorphismClass;

    fn unit(&self) -> MorphismClass {
        self.inner.unit()
    }

    fn degree(&self, k: &MorphismClass) -> usize {
        k.rep.degree()
    }

    fn mul(&self, a: &MorphismClass, b: &MorphismClass) -> FormalSum<MorphismClass> {
        hopf_quotient(&self.inner.mul(a, b))
    }

    fn delta(&self, k: &MorphismClass) -> Result<Tensor2<MorphismClass>, HopfError> {
        let mut out = Tensor2::zero();
        for ((a, b), c) in self.inner.delta(k)?.iter() {
            let qa = quotient_class(a);
            let qb = quotient_class(b);
            for (x, cx) in qa.iter() {
                for (y, cy) in qb.iter() {
                    out.add_term((x.clone(), y.clone()), *c * *cx * *cy);
                }
            }
        }
        Ok(out)
    }

    fn epsilon(&self, k: &MorphismClass) -> Q {
        q(i64::from(*k == self.unit()))
    }
}
