//! Isomorphism search and canonical forms.
//!
//! `find_isomorphism` is a plain backtracking search over vertex bijections
//! and then flag bijections. `canonical_form` is computed independently: the
//! lexicographic minimum of a per-vertex serialization over all vertex
//! orderings compatible with a colour refinement, with prefix pruning.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{FlagId, Graph, VertexId};

/// A pair of bijections `g1 -> g2` commuting with incidence, involution
/// and labels.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Isomorphism {
    pub vertices: BTreeMap<VertexId, VertexId>,
    pub flags: BTreeMap<FlagId, FlagId>,
}

impl Isomorphism {
    pub fn inverse(&self) -> Isomorphism {
        Isomorphism {
            vertices: self.vertices.iter().map(|(a, b)| (b.clone(), a.clone())).collect(),
            flags: self.flags.iter().map(|(a, b)| (b.clone(), a.clone())).collect(),
        }
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &Isomorphism) -> Isomorphism {
        Isomorphism {
            vertices: self
                .vertices
                .iter()
                .map(|(a, b)| (a.clone(), other.vertices[b].clone()))
                .collect(),
            flags: self
                .flags
                .iter()
                .map(|(a, b)| (a.clone(), other.flags[b].clone()))
                .collect(),
        }
    }

    /// Checks the witness against both graphs.
    pub fn is_valid(&self, g1: &Graph, g2: &Graph) -> bool {
        if self.vertices.len() != g1.vertex_count() || self.flags.len() != g1.flag_count() {
            return false;
        }
        let vimg: BTreeSet<_> = self.vertices.values().collect();
        let fimg: BTreeSet<_> = self.flags.values().collect();
        if vimg.len() != g2.vertex_count() || fimg.len() != g2.flag_count() {
            return false;
        }
        if !g1.vertices().iter().all(|v| self.vertices.get(v).is_some_and(|w| g2.vertices().contains(w))) {
            return false;
        }
        for f in g1.flags() {
            let Some(f2) = self.flags.get(f) else { return false };
            if g2.vertex_of(f2) != Some(&self.vertices[&g1.incidence()[f]]) {
                return false;
            }
            if &self.flags[g1.partner(f)] != g2.partner(f2) {
                return false;
            }
            if g1.labels.flags.get(f) != g2.labels.flags.get(f2) {
                return false;
            }
        }
        for v in g1.vertices() {
            let w = &self.vertices[v];
            if g1.labels.vertices.get(v) != g2.labels.vertices.get(w) {
                return false;
            }
            let o1 = g1.labels.orders.get(v).map(|o| o.iter().map(|f| self.flags[f].clone()).collect::<Vec<_>>());
            if o1.as_ref() != g2.labels.orders.get(w) {
                return false;
            }
        }
        true
    }
}

/// Index-based view of a graph used by both algorithms.
struct Indexed {
    vnames: Vec<VertexId>,
    fnames: Vec<FlagId>,
    vlabel: Vec<Option<String>>,
    flabel: Vec<Option<String>>,
    fvert: Vec<usize>,
    partner: Vec<Option<usize>>,
    /// Sequence of flags at a vertex if the vertex carries an order.
    order: Vec<Option<Vec<usize>>>,
    order_pos: Vec<Option<usize>>,
    at: Vec<Vec<usize>>,
}

impl Indexed {
    fn new(g: &Graph) -> Indexed {
        let vnames: Vec<VertexId> = g.vertices().iter().cloned().collect();
        let fnames: Vec<FlagId> = g.flags().cloned().collect();
        let vidx: BTreeMap<&VertexId, usize> = vnames.iter().enumerate().map(|(i, v)| (v, i)).collect();
        let fidx: BTreeMap<&FlagId, usize> = fnames.iter().enumerate().map(|(i, f)| (f, i)).collect();
        let fvert: Vec<usize> = fnames.iter().map(|f| vidx[&g.incidence()[f]]).collect();
        let partner = fnames
            .iter()
            .map(|f| {
                let p = g.partner(f);
                (p != f).then(|| fidx[p])
            })
            .collect();
        let mut order = vec![None; vnames.len()];
        let mut order_pos = vec![None; fnames.len()];
        for (v, o) in &g.labels.orders {
            let seq: Vec<usize> = o.iter().map(|f| fidx[f]).collect();
            for (k, &f) in seq.iter().enumerate() {
                order_pos[f] = Some(k);
            }
            order[vidx[v]] = Some(seq);
        }
        let mut at = vec![Vec::new(); vnames.len()];
        for (f, &v) in fvert.iter().enumerate() {
            at[v].push(f);
        }
        Indexed {
            vlabel: vnames.iter().map(|v| g.labels.vertices.get(v).cloned()).collect(),
            flabel: fnames.iter().map(|f| g.labels.flags.get(f).cloned()).collect(),
            vnames,
            fnames,
            fvert,
            partner,
            order,
            order_pos,
            at,
        }
    }

    fn degree_signature(&self, v: usize) -> (Option<String>, usize, usize, usize, Option<usize>) {
        let tails = self.at[v].iter().filter(|&&f| self.partner[f].is_none()).count();
        let loops = self.at[v]
            .iter()
            .filter(|&&f| self.partner[f].is_some_and(|p| self.fvert[p] == v))
            .count();
        (
            self.vlabel[v].clone(),
            self.at[v].len(),
            tails,
            loops,
            self.order[v].as_ref().map(|o| o.len()),
        )
    }
}

// ---------------------------------------------------------------------------
// Backtracking isomorphism search

struct IsoSearch<'a> {
    a: &'a Indexed,
    b: &'a Indexed,
    vmap: Vec<Option<usize>>,
    vused: Vec<bool>,
    fmap: Vec<Option<usize>>,
    fused: Vec<bool>,
    all: bool,
    found: Vec<(Vec<usize>, Vec<usize>)>,
}

impl<'a> IsoSearch<'a> {
    fn vertices(&mut self, i: usize) -> bool {
        if i == self.a.vnames.len() {
            return self.flags(0);
        }
        let sig = self.a.degree_signature(i);
        for w in 0..self.b.vnames.len() {
            if self.vused[w] || self.b.degree_signature(w) != sig {
                continue;
            }
            self.vmap[i] = Some(w);
            self.vused[w] = true;
            let stop = self.vertices(i + 1);
            self.vused[w] = false;
            self.vmap[i] = None;
            if stop {
                return true;
            }
        }
        false
    }

    fn compatible(&self, f: usize, g: usize) -> bool {
        !self.fused[g]
            && self.b.fvert[g] == self.vmap[self.a.fvert[f]].unwrap()
            && self.a.flabel[f] == self.b.flabel[g]
            && self.a.partner[f].is_some() == self.b.partner[g].is_some()
            && self.a.order_pos[f] == self.b.order_pos[g]
    }

    fn flags(&mut self, f: usize) -> bool {
        if f == self.a.fnames.len() {
            let vm = self.vmap.iter().map(|x| x.unwrap()).collect();
            let fm = self.fmap.iter().map(|x| x.unwrap()).collect();
            self.found.push((vm, fm));
            return !self.all;
        }
        if self.fmap[f].is_some() {
            return self.flags(f + 1);
        }
        for g in 0..self.b.fnames.len() {
            if !self.compatible(f, g) {
                continue;
            }
            match (self.a.partner[f], self.b.partner[g]) {
                (None, None) => {
                    self.fmap[f] = Some(g);
                    self.fused[g] = true;
                    let stop = self.flags(f + 1);
                    self.fused[g] = false;
                    self.fmap[f] = None;
                    if stop {
                        return true;
                    }
                }
                (Some(p), Some(q)) => {
                    // p > f is unassigned since flags are assigned in pairs.
                    self.fmap[f] = Some(g);
                    self.fused[g] = true;
                    if self.compatible(p, q) {
                        self.fmap[p] = Some(q);
                        self.fused[q] = true;
                        let stop = self.flags(f + 1);
                        self.fused[q] = false;
                        self.fmap[p] = None;
                        if stop {
                            self.fused[g] = false;
                            self.fmap[f] = None;
                            return true;
                        }
                    }
                    self.fused[g] = false;
                    self.fmap[f] = None;
                }
                _ => {}
            }
        }
        false
    }
}

fn search(g1: &Graph, g2: &Graph, all: bool) -> Vec<Isomorphism> {
    if g1.vertex_count() != g2.vertex_count()
        || g1.flag_count() != g2.flag_count()
        || g1.edge_count() != g2.edge_count()
    {
        return Vec::new();
    }
    let a = Indexed::new(g1);
    let b = Indexed::new(g2);
    let mut s = IsoSearch {
        a: &a,
        b: &b,
        vmap: vec![None; a.vnames.len()],
        vused: vec![false; b.vnames.len()],
        fmap: vec![None; a.fnames.len()],
        fused: vec![false; b.fnames.len()],
        all,
        found: Vec::new(),
    };
    s.vertices(0);
    let found = std::mem::take(&mut s.found);
    found
        .into_iter()
        .map(|(vm, fm)| Isomorphism {
            vertices: vm
                .iter()
                .enumerate()
                .map(|(i, &w)| (a.vnames[i].clone(), b.vnames[w].clone()))
                .collect(),
            flags: fm
                .iter()
                .enumerate()
                .map(|(i, &w)| (a.fnames[i].clone(), b.fnames[w].clone()))
                .collect(),
        })
        .collect()
}

/// Some isomorphism `g1 -> g2` preserving all labels, or `None`.
pub fn find_isomorphism(g1: &Graph, g2: &Graph) -> Option<Isomorphism> {
    search(g1, g2, false).pop()
}

/// Every isomorphism `g1 -> g2`, sorted.
pub fn all_isomorphisms(g1: &Graph, g2: &Graph) -> Vec<Isomorphism> {
    let mut v = search(g1, g2, true);
    v.sort();
    v
}

pub fn automorphism_count(g: &Graph) -> usize {
    search(g, g, true).len()
}

// ---------------------------------------------------------------------------
// Canonical form

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
enum Kind {
    Tail,
    /// Partner sits at an already placed position (or the same vertex).
    Back {
        pos: usize,
        label: Option<String>,
        order_pos: Option<usize>,
    },
    /// Partner sits at a vertex placed later.
    Fwd {
        label: Option<String>,
        order_pos: Option<usize>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
struct Desc {
    label: Option<String>,
    kind: Kind,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
struct Entry {
    label: Option<String>,
    ordered: Option<Vec<Desc>>,
    rest: Vec<Desc>,
}

impl Indexed {
    fn desc(&self, f: usize, here: usize, pos: &[Option<usize>]) -> Desc {
        let kind = match self.partner[f] {
            None => Kind::Tail,
            Some(p) => {
                let label = self.flabel[p].clone();
                let order_pos = self.order_pos[p];
                match pos[self.fvert[p]] {
                    Some(k) if k <= here => Kind::Back { pos: k, label, order_pos },
                    _ => Kind::Fwd { label, order_pos },
                }
            }
        };
        Desc {
            label: self.flabel[f].clone(),
            kind,
        }
    }

    fn entry(&self, v: usize, here: usize, pos: &[Option<usize>]) -> Entry {
        let ordered = self.order[v]
            .as_ref()
            .map(|o| o.iter().map(|&f| self.desc(f, here, pos)).collect());
        let mut rest: Vec<Desc> = self.at[v]
            .iter()
            .filter(|&&f| self.order_pos[f].is_none())
            .map(|&f| self.desc(f, here, pos))
            .collect();
        rest.sort();
        Entry {
            label: self.vlabel[v].clone(),
            ordered,
            rest,
        }
    }

    /// Stable colour refinement; returns a colour rank per vertex.
    fn refine(&self) -> Vec<usize> {
        let n = self.vnames.len();
        let initial: Vec<_> = (0..n)
            .map(|v| {
                let mut fl: Vec<_> = self.at[v]
                    .iter()
                    .map(|&f| {
                        (
                            self.flabel[f].clone(),
                            self.order_pos[f],
                            self.partner[f].map(|p| (self.flabel[p].clone(), self.fvert[p] == v)),
                        )
                    })
                    .collect();
                fl.sort();
                (self.vlabel[v].clone(), self.order[v].is_some(), fl)
            })
            .collect();
        let mut colors = ranks(&initial);
        loop {
            let sigs: Vec<_> = (0..n)
                .map(|v| {
                    let mut nb: Vec<_> = self.at[v]
                        .iter()
                        .filter_map(|&f| {
                            self.partner[f].map(|p| {
                                (self.flabel[f].clone(), self.order_pos[f], self.flabel[p].clone(), colors[self.fvert[p]])
                            })
                        })
                        .collect();
                    nb.sort();
                    (colors[v], nb)
                })
                .collect();
            let next = ranks(&sigs);
            let count = |c: &[usize]| c.iter().collect::<BTreeSet<_>>().len();
            if count(&next) == count(&colors) {
                return next;
            }
            colors = next;
        }
    }

    fn isolated(&self, v: usize) -> bool {
        self.at[v].iter().all(|&f| self.partner[f].is_none())
    }
}

fn ranks<T: Ord + Clone>(xs: &[T]) -> Vec<usize> {
    let sorted: BTreeSet<T> = xs.iter().cloned().collect();
    let index: BTreeMap<T, usize> = sorted.into_iter().enumerate().map(|(i, x)| (x, i)).collect();
    xs.iter().map(|x| index[x]).collect()
}

struct CanonSearch<'a> {
    g: &'a Indexed,
    colors: Vec<usize>,
    slots: Vec<usize>,
    pos: Vec<Option<usize>>,
    placed: Vec<usize>,
    cur: Vec<Entry>,
    best: Option<(Vec<Entry>, Vec<usize>)>,
}

impl<'a> CanonSearch<'a> {
    fn run(&mut self, depth: usize) {
        let n = self.g.vnames.len();
        if depth == n {
            let better = match &self.best {
                None => true,
                Some((b, _)) => self.cur < *b,
            };
            if better {
                self.best = Some((self.cur.clone(), self.placed.clone()));
            }
            return;
        }
        let prefix_cmp = match &self.best {
            None => Ordering::Less,
            Some((b, _)) => self.cur[..].cmp(&b[..depth]),
        };
        if prefix_cmp == Ordering::Greater {
            return;
        }
        let mut tried_isolated: Vec<Entry> = Vec::new();
        for v in 0..n {
            if self.pos[v].is_some() || self.colors[v] != self.slots[depth] {
                continue;
            }
            self.pos[v] = Some(depth);
            let e = self.g.entry(v, depth, &self.pos);
            if self.g.isolated(v) {
                if tried_isolated.contains(&e) {
                    self.pos[v] = None;
                    continue;
                }
                tried_isolated.push(e.clone());
            }
            let prune = prefix_cmp == Ordering::Equal
                && self.best.as_ref().is_some_and(|(b, _)| e > b[depth]);
            if !prune {
                self.placed.push(v);
                self.cur.push(e);
                self.run(depth + 1);
                self.cur.pop();
                self.placed.pop();
            }
            self.pos[v] = None;
        }
    }
}

/// Canonical relabelling of a graph together with the witness.
#[derive(Clone, Debug)]
pub struct CanonicalLabeling {
    pub form: Vec<u8>,
    /// The graph with canonical identifiers `v000…` / `h000…`.
    pub graph: Graph,
    /// Witness from the input graph to `graph`.
    pub iso: Isomorphism,
}

fn best_ordering(ix: &Indexed) -> (Vec<Entry>, Vec<usize>) {
    let colors = ix.refine();
    let mut slots = colors.clone();
    slots.sort();
    let mut s = CanonSearch {
        g: ix,
        colors,
        slots,
        pos: vec![None; ix.vnames.len()],
        placed: Vec::new(),
        cur: Vec::new(),
        best: None,
    };
    s.run(0);
    s.best.unwrap_or_default()
}

fn encode(entries: &[Entry]) -> Vec<u8> {
    // An empty graph serializes to `[]`.
    serde_json::to_vec(entries).expect("serializable")
}

/// Byte string equal for two graphs iff they are isomorphic (labels included).
pub fn canonical_form(g: &Graph) -> Vec<u8> {
    let ix = Indexed::new(g);
    encode(&best_ordering(&ix).0)
}

/// Canonical form plus a concrete relabelling onto canonical identifiers.
pub fn canonical_labeling(g: &Graph) -> CanonicalLabeling {
    let ix = Indexed::new(g);
    let (entries, order) = best_ordering(&ix);
    let n = order.len();
    let mut pos = vec![None; n];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = Some(i);
    }
    let mut fname: Vec<Option<usize>> = vec![None; ix.fnames.len()];
    let mut next = 0usize;
    for (i, &v) in order.iter().enumerate() {
        let mut assign = |f: usize, fname: &mut Vec<Option<usize>>| {
            fname[f] = Some(next);
            next += 1;
        };
        if let Some(o) = &ix.order[v] {
            for &f in o {
                assign(f, &mut fname);
            }
        }
        let free: Vec<usize> = ix.at[v].iter().copied().filter(|&f| ix.order_pos[f].is_none()).collect();
        // Loops at this vertex between unordered flags are named pairwise.
        let mut loops: Vec<(Desc, Desc, usize, usize)> = Vec::new();
        let mut others: Vec<(Desc, usize, usize)> = Vec::new();
        for &f in &free {
            match ix.partner[f] {
                Some(p) if ix.fvert[p] == v && ix.order_pos[p].is_none() => {
                    if f < p {
                        let (df, dp) = (ix.desc(f, i, &pos), ix.desc(p, i, &pos));
                        if df <= dp {
                            loops.push((df, dp, f, p));
                        } else {
                            loops.push((dp, df, p, f));
                        }
                    }
                }
                Some(p) => {
                    let pn = fname[p].unwrap_or(usize::MAX);
                    others.push((ix.desc(f, i, &pos), pn, f));
                }
                None => others.push((ix.desc(f, i, &pos), usize::MAX, f)),
            }
        }
        others.sort();
        for (_, _, f) in others {
            assign(f, &mut fname);
        }
        loops.sort();
        for (_, _, a, b) in loops {
            assign(a, &mut fname);
            assign(b, &mut fname);
        }
    }
    let vid = |i: usize| VertexId(format!("v{i:03}"));
    let fid = |k: usize| FlagId(format!("h{k:03}"));
    let iso = Isomorphism {
        vertices: (0..n).map(|v| (ix.vnames[v].clone(), vid(pos[v].unwrap()))).collect(),
        flags: (0..ix.fnames.len())
            .map(|f| (ix.fnames[f].clone(), fid(fname[f].unwrap())))
            .collect(),
    };
    let graph = g.renamed(&|f| iso.flags[f].clone(), &|v| iso.vertices[v].clone());
    CanonicalLabeling {
        form: encode(&entries),
        graph,
        iso,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Labels;

    fn path3() -> Graph {
        Graph::aggregate(&[("a", &["1"][..]), ("b", &["2", "3"][..]), ("c", &["4"][..])])
            .with_edge("1", "2")
            .with_edge("3", "4")
    }

    fn tree(edges: &[(usize, usize)], n: usize) -> Graph {
        let mut fl: Vec<Vec<String>> = vec![Vec::new(); n];
        for (k, &(a, b)) in edges.iter().enumerate() {
            fl[a].push(format!("e{k}a"));
            fl[b].push(format!("e{k}b"));
        }
        let names: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
        let cs: Vec<(&str, &[String])> = names.iter().zip(fl.iter()).map(|(n, f)| (n.as_str(), &f[..])).collect();
        let mut g = Graph::aggregate(&cs);
        for k in 0..edges.len() {
            g = g.with_edge(&format!("e{k}a"), &format!("e{k}b"));
        }
        g
    }

    #[test]
    fn corollas_are_isomorphic() {
        let a = Graph::corolla("v", &["a", "b", "c"]);
        let b = Graph::corolla("w", &["x", "y", "z"]);
        let iso = find_isomorphism(&a, &b).unwrap();
        assert!(iso.is_valid(&a, &b));
        assert_eq!(all_isomorphisms(&a, &b).len(), 6);
        assert_eq!(canonical_form(&a), canonical_form(&b));
    }

    #[test]
    fn edge_versus_loop() {
        let e = Graph::aggregate(&[("u", &["a"][..]), ("v", &["b"][..])]).with_edge("a", "b");
        let l = Graph::corolla("u", &["a", "b"]).with_edge("a", "b");
        assert!(find_isomorphism(&e, &l).is_none());
        assert_ne!(canonical_form(&e), canonical_form(&l));
    }

    #[test]
    fn path_versus_star() {
        let p = tree(&[(0, 1), (1, 2), (2, 3)], 4);
        let s = tree(&[(0, 1), (0, 2), (0, 3)], 4);
        assert!(find_isomorphism(&p, &s).is_none());
        assert_ne!(canonical_form(&p), canonical_form(&s));
        let p2 = tree(&[(3, 1), (1, 0), (0, 2)], 4);
        assert!(find_isomorphism(&p, &p2).is_some());
        assert_eq!(canonical_form(&p), canonical_form(&p2));
    }

    #[test]
    fn empty_graph_encoding() {
        assert_eq!(canonical_form(&Graph::empty()), b"[]".to_vec());
    }

    #[test]
    fn labels_distinguish() {
        let mut l1 = Labels::default();
        l1.flags.insert(FlagId::new("a"), "in".into());
        let mut l2 = Labels::default();
        l2.flags.insert(FlagId::new("b"), "in".into());
        let g = Graph::corolla("v", &["a", "b"]);
        let g1 = g.clone().with_labels(l1.clone());
        let g2 = g.clone().with_labels(l2);
        assert_eq!(canonical_form(&g1), canonical_form(&g2));
        assert_ne!(canonical_form(&g1), canonical_form(&g));
        assert_eq!(automorphism_count(&g), 2);
        assert_eq!(automorphism_count(&g1), 1);
    }

    #[test]
    fn planar_orders_respected() {
        let g = Graph::corolla("v", &["a", "b", "c"]);
        let mut l = Labels::default();
        l.orders.insert(VertexId::new("v"), vec![FlagId::new("a"), FlagId::new("b"), FlagId::new("c")]);
        let ordered = g.clone().with_labels(l);
        assert_eq!(automorphism_count(&ordered), 1);
        assert_eq!(automorphism_count(&g), 6);
    }

    #[test]
    fn canonical_labeling_is_canonical() {
        let g = path3();
        let h = g.prefixed("z_");
        let cg = canonical_labeling(&g);
        let ch = canonical_labeling(&h);
        assert_eq!(cg.graph, ch.graph);
        assert!(cg.iso.is_valid(&g, &cg.graph));
    }

    #[test]
    fn parallel_edges_and_loops_canonical_graph() {
        let g1 = Graph::aggregate(&[("u", &["a", "b", "l1", "l2"][..]), ("v", &["c", "d"][..])])
            .with_edge("a", "c")
            .with_edge("b", "d")
            .with_edge("l1", "l2");
        // same underlying graph under a different naming of the pairs
        let g2 = Graph::aggregate(&[("u", &["a", "b", "l1", "l2"][..]), ("v", &["c", "d"][..])])
            .with_edge("a", "d")
            .with_edge("b", "l1")
            .with_edge("c", "l2");
        assert_eq!(canonical_labeling(&g1).graph, canonical_labeling(&g2).graph);
        let g4 = Graph::aggregate(&[("u", &["a", "b"][..]), ("v", &["c", "d", "l1", "l2"][..])])
            .with_edge("a", "c")
            .with_edge("b", "d")
            .with_edge("l1", "l2");
        assert_eq!(canonical_form(&g1), canonical_form(&g4));
        let k1 = canonical_labeling(&g1);
        let g3 = g1.renamed(
            &|f| FlagId::new(match f.as_str() { "a" => "b", "b" => "a", "l1" => "l2", "l2" => "l1", x => x }),
            &|v| v.clone(),
        );
        assert_eq!(k1.graph, canonical_labeling(&g3).graph);
        assert_eq!(automorphism_count(&g1), 4);
    }

    #[test]
    fn many_identical_corollas_fast() {
        let names: Vec<String> = (0..9).map(|i| format!("c{i}")).collect();
        let flags: Vec<Vec<String>> = (0..9).map(|i| vec![format!("f{i}"), format!("g{i}")]).collect();
        let cs: Vec<(&str, &[String])> = names.iter().zip(flags.iter()).map(|(n, f)| (n.as_str(), &f[..])).collect();
        let g = Graph::aggregate(&cs);
        let h = g.prefixed("q");
        assert_eq!(canonical_form(&g), canonical_form(&h));
    }
}
