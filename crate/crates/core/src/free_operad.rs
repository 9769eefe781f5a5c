//! Free operads on a signature at bounded size: tree bases, grafting,
//! the insertion operations and the universal pre-Lie and Lie operations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::linear::{format_coeff, parse_coeff, q, FormalSum, Q};
use crate::odd_complex::graded_sign;

pub const MAX_ARITY: usize = 8;
pub const MAX_SIZE: usize = 8;
/// Cap on the number of labeled trees visited by one basis enumeration.
pub const MAX_VISITED: usize = 2_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FreeOperadError {
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("unknown generator {0}")]
    UnknownGenerator(String),
    #[error("duplicate generator {0}")]
    DuplicateGenerator(String),
    #[error("invalid action table for {0}")]
    InvalidAction(String),
    #[error("arity mismatch: expected {expected}, found {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("index {i} out of range for arity {arity}")]
    IndexOutOfRange { i: usize, arity: usize },
    #[error("leaves are not numbered 1..{0}")]
    BadLeafNumbering(usize),
    #[error("bound exceeded: {0}")]
    BoundExceeded(String),
    #[error("differential image of {0} has the wrong degree or arity")]
    DifferentialDegree(String),
    #[error("differential does not square to zero on {0}")]
    DifferentialNotSquareZero(String),
    #[error("element is not homogeneous of odd degree")]
    NotOddDegree,
}

/// A generator-labeled rooted tree; leaves carry their labels.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TreeTerm {
    Leaf(usize),
    Node { gen: String, children: Vec<TreeTerm> },
}

impl TreeTerm {
    pub fn unit() -> TreeTerm {
        TreeTerm::Leaf(1)
    }

    pub fn node(gen: &str, children: Vec<TreeTerm>) -> TreeTerm {
        TreeTerm::Node { gen: gen.to_string(), children }
    }

    pub fn corolla(gen: &str, arity: usize) -> TreeTerm {
        TreeTerm::node(gen, (1..=arity).map(TreeTerm::Leaf).collect())
    }

    /// Leaf labels in depth-first order.
    pub fn leaves(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.walk_leaves(&mut |l| out.push(l));
        out
    }

    fn walk_leaves(&self, f: &mut impl FnMut(usize)) {
        match self {
            TreeTerm::Leaf(l) => f(*l),
            TreeTerm::Node { children, .. } => children.iter().for_each(|c| c.walk_leaves(f)),
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            TreeTerm::Leaf(_) => 1,
            TreeTerm::Node { children, .. } => children.iter().map(|c| c.arity()).sum(),
        }
    }

    pub fn vertex_count(&self) -> usize {
        match self {
            TreeTerm::Leaf(_) => 0,
            TreeTerm::Node { children, .. } => 1 + children.iter().map(|c| c.vertex_count()).sum::<usize>(),
        }
    }

    /// Generator names in preorder.
    pub fn generators(&self) -> Vec<&str> {
        let mut out = Vec::new();
        fn go<'a>(t: &'a TreeTerm, out: &mut Vec<&'a str>) {
            if let TreeTerm::Node { gen, children } = t {
                out.push(gen);
                children.iter().for_each(|c| go(c, out));
            }
        }
        go(self, &mut out);
        out
    }

    pub fn map_leaves(&self, f: &dyn Fn(usize) -> usize) -> TreeTerm {
        match self {
            TreeTerm::Leaf(l) => TreeTerm::Leaf(f(*l)),
            TreeTerm::Node { gen, children } => TreeTerm::Node {
                gen: gen.clone(),
                children: children.iter().map(|c| c.map_leaves(f)).collect(),
            },
        }
    }

    /// Replaces leaf `j` by `subs[j-1]`; labels are not renumbered.
    pub fn replace_leaves(&self, subs: &[TreeTerm]) -> TreeTerm {
        match self {
            TreeTerm::Leaf(l) => subs[*l - 1].clone(),
            TreeTerm::Node { gen, children } => TreeTerm::Node {
                gen: gen.clone(),
                children: children.iter().map(|c| c.replace_leaves(subs)).collect(),
            },
        }
    }

    /// Leaves renumbered 1..n in depth-first order.
    pub fn renumber_dfs(&self) -> TreeTerm {
        fn go(t: &TreeTerm, next: &mut usize) -> TreeTerm {
            match t {
                TreeTerm::Leaf(_) => {
                    *next += 1;
                    TreeTerm::Leaf(*next)
                }
                TreeTerm::Node { gen, children } => TreeTerm::Node {
                    gen: gen.clone(),
                    children: children.iter().map(|c| go(c, next)).collect(),
                },
            }
        }
        go(self, &mut 0)
    }
}

impl fmt::Display for TreeTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeTerm::Leaf(l) => write!(f, "{l}"),
            TreeTerm::Node { gen, children } if children.is_empty() => write!(f, "{gen}"),
            TreeTerm::Node { gen, children } => {
                write!(f, "{gen}(")?;
                for (k, c) in children.iter().enumerate() {
                    if k > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, ")")
            }
        }
    }
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> FreeOperadError {
        FreeOperadError::Parse { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn term(&mut self) -> Result<TreeTerm, FreeOperadError> {
        self.skip_ws();
        let start = self.pos;
        match self.s.get(self.pos) {
            Some(c) if c.is_ascii_digit() => {
                while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let text = std::str::from_utf8(&self.s[start..self.pos]).unwrap();
                text.parse().map(TreeTerm::Leaf).map_err(|_| self.err("bad leaf label"))
            }
            Some(c) if c.is_ascii_alphabetic() || *c == b'_' => {
                while self.pos < self.s.len() && (self.s[self.pos].is_ascii_alphanumeric() || self.s[self.pos] == b'_') {
                    self.pos += 1;
                }
                let gen = std::str::from_utf8(&self.s[start..self.pos]).unwrap().to_string();
                self.skip_ws();
                let mut children = Vec::new();
                if self.s.get(self.pos) == Some(&b'(') {
                    self.pos += 1;
                    loop {
                        children.push(self.term()?);
                        self.skip_ws();
                        match self.s.get(self.pos) {
                            Some(b',') => self.pos += 1,
                            Some(b')') => {
                                self.pos += 1;
                                break;
                            }
                            _ => return Err(self.err("expected ',' or ')'")),
                        }
                    }
                }
                Ok(TreeTerm::Node { gen, children })
            }
            _ => Err(self.err("expected leaf label or generator name")),
        }
    }
}

impl FromStr for TreeTerm {
    type Err = FreeOperadError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = Parser { s: s.as_bytes(), pos: 0 };
        let t = p.term()?;
        p.skip_ws();
        if p.pos != p.s.len() {
            return Err(p.err("trailing input"));
        }
        Ok(t)
    }
}

impl Serialize for TreeTerm {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for TreeTerm {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub name: String,
    pub arity: usize,
    #[serde(default)]
    pub degree: i64,
    /// Permutations (one-based images) fixing the generator; the group they
    /// generate is used. Absent means every permutation fixes it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetry: Option<Vec<Vec<usize>>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Signature {
    pub generators: Vec<GeneratorSpec>,
}

impl Signature {
    pub fn single(name: &str, arity: usize, degree: i64) -> Signature {
        Signature {
            generators: vec![GeneratorSpec { name: name.to_string(), arity, degree, symmetry: None }],
        }
    }

    pub fn with(mut self, name: &str, arity: usize, degree: i64) -> Signature {
        self.generators.push(GeneratorSpec { name: name.to_string(), arity, degree, symmetry: None });
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Planar,
    Symmetric,
    Coinvariant,
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "planar" => Ok(Mode::Planar),
            "symmetric" => Ok(Mode::Symmetric),
            "coinvariant" => Ok(Mode::Coinvariant),
            _ => Err(format!("unknown mode {s}")),
        }
    }
}

pub type OperadElement = FormalSum<TreeTerm>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermJson {
    pub tree: TreeTerm,
    pub coeff: String,
}

pub fn element_to_json(e: &OperadElement) -> Vec<TermJson> {
    e.iter().map(|(t, c)| TermJson { tree: t.clone(), coeff: format_coeff(c) }).collect()
}

pub fn element_from_json(terms: &[TermJson]) -> Result<OperadElement, FreeOperadError> {
    let mut out = OperadElement::zero();
    for t in terms {
        let c = parse_coeff(&t.coeff).ok_or_else(|| FreeOperadError::Parse { pos: 0, msg: format!("bad coefficient {}", t.coeff) })?;
        out.add_term(t.tree.clone(), c);
    }
    Ok(out)
}

#[derive(Clone, Debug)]
struct GenData {
    arity: usize,
    degree: i64,
    /// `p[new] = old` child positions.
    group: Vec<Vec<usize>>,
}

fn generate_group(k: usize, gens: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let id: Vec<usize> = (0..k).collect();
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::from([id.clone()]);
    let mut frontier = vec![id];
    while let Some(p) = frontier.pop() {
        for g in gens {
            let r: Vec<usize> = (0..k).map(|i| p[g[i]]).collect();
            if seen.insert(r.clone()) {
                frontier.push(r);
            }
        }
    }
    seen.into_iter().collect()
}

/// The free operad on a signature in a fixed mode.
#[derive(Clone, Debug)]
pub struct FreeOperad {
    sig: Signature,
    mode: Mode,
    gens: BTreeMap<String, GenData>,
}

/// Images of the generators under a degree −1 derivation.
#[derive(Clone, Debug, Default)]
pub struct Differential {
    images: BTreeMap<String, OperadElement>,
}

impl Differential {
    pub fn zero() -> Differential {
        Differential::default()
    }

    pub fn image(&self, gen: &str) -> Option<&OperadElement> {
        self.images.get(gen)
    }
}

impl FreeOperad {
    pub fn new(sig: Signature, mode: Mode) -> Result<FreeOperad, FreeOperadError> {
        let mut gens = BTreeMap::new();
        for g in &sig.generators {
            let group = match &g.symmetry {
                None => (0..g.arity).permutations(g.arity).collect(),
                Some(perms) => {
                    let mut zero_based = Vec::new();
                    for p in perms {
                        let set: BTreeSet<usize> = p.iter().copied().collect();
                        if p.len() != g.arity || set.len() != g.arity || set.iter().any(|&x| x == 0 || x > g.arity) {
                            return Err(FreeOperadError::InvalidAction(g.name.clone()));
                        }
                        zero_based.push(p.iter().map(|x| x - 1).collect());
                    }
                    generate_group(g.arity, &zero_based)
                }
            };
            let data = GenData { arity: g.arity, degree: g.degree, group };
            if gens.insert(g.name.clone(), data).is_some() {
                return Err(FreeOperadError::DuplicateGenerator(g.name.clone()));
            }
        }
        Ok(FreeOperad { sig, mode, gens })
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn with_mode(&self, mode: Mode) -> FreeOperad {
        FreeOperad { mode, ..self.clone() }
    }

    fn data(&self, gen: &str) -> Result<&GenData, FreeOperadError> {
        self.gens.get(gen).ok_or_else(|| FreeOperadError::UnknownGenerator(gen.to_string()))
    }

    pub fn tree_degree(&self, t: &TreeTerm) -> i64 {
        t.generators().iter().map(|g| self.gens.get(*g).map_or(0, |d| d.degree)).sum()
    }

    /// Checks generator arities and the leaf numbering (depth-first order in
    /// planar mode, any bijection otherwise).
    pub fn check(&self, t: &TreeTerm) -> Result<(), FreeOperadError> {
        fn go(op: &FreeOperad, t: &TreeTerm) -> Result<(), FreeOperadError> {
            if let TreeTerm::Node { gen, children } = t {
                let d = op.data(gen)?;
                if d.arity != children.len() {
                    return Err(FreeOperadError::ArityMismatch { expected: d.arity, found: children.len() });
                }
                children.iter().try_for_each(|c| go(op, c))?;
            }
            Ok(())
        }
        go(self, t)?;
        let leaves = t.leaves();
        let n = leaves.len();
        let ok = match self.mode {
            Mode::Planar => leaves.iter().enumerate().all(|(i, &l)| l == i + 1),
            _ => {
                let set: BTreeSet<usize> = leaves.iter().copied().collect();
                set.len() == n && set.iter().all(|&l| l >= 1 && l <= n)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(FreeOperadError::BadLeafNumbering(n))
        }
    }

    /// Canonical representative and sign; `None` when the tree equals its
    /// own negative.
    pub fn normalize_tree(&self, t: &TreeTerm) -> Option<(TreeTerm, i64)> {
        match self.mode {
            Mode::Planar => Some((t.clone(), 1)),
            Mode::Symmetric => self.canon(t),
            Mode::Coinvariant => {
                let (c, s) = self.canon(&t.map_leaves(&|_| 0))?;
                Some((c.renumber_dfs(), s))
            }
        }
    }

    fn canon(&self, t: &TreeTerm) -> Option<(TreeTerm, i64)> {
        let TreeTerm::Node { gen, children } = t else {
            return Some((t.clone(), 1));
        };
        let mut sign = 1;
        let mut kids = Vec::with_capacity(children.len());
        for c in children {
            let (c2, s) = self.canon(c)?;
            sign *= s;
            kids.push(c2);
        }
        let degs: Vec<i64> = kids.iter().map(|k| self.tree_degree(k)).collect();
        let group = match self.gens.get(gen) {
            Some(d) if d.group.first().is_none_or(|p| p.len() == kids.len()) => &d.group,
            _ => return Some((TreeTerm::Node { gen: gen.clone(), children: kids }, sign)),
        };
        let mut best: Option<(Vec<TreeTerm>, i64)> = None;
        let mut conflict = false;
        for p in group {
            let tuple: Vec<TreeTerm> = p.iter().map(|&o| kids[o].clone()).collect();
            let s = graded_sign(&p.iter().map(|&o| (o, degs[o])).collect::<Vec<_>>());
            match &best {
                Some((b, bs)) if *b == tuple => conflict |= *bs != s,
                Some((b, _)) if *b < tuple => {}
                _ => {
                    best = Some((tuple, s));
                    conflict = false;
                }
            }
        }
        if group.is_empty() {
            best = Some((kids, 1));
        }
        if conflict {
            return None;
        }
        let (tuple, s) = best?;
        Some((TreeTerm::Node { gen: gen.clone(), children: tuple }, sign * s))
    }

    pub fn normalize(&self, e: &OperadElement) -> OperadElement {
        let mut out = OperadElement::zero();
        for (t, c) in e.iter() {
            if let Some((t2, s)) = self.normalize_tree(t) {
                out.add_term(t2, *c * q(s));
            }
        }
        out
    }

    /// The normalized element of one tree.
    pub fn element(&self, t: &TreeTerm) -> Result<OperadElement, FreeOperadError> {
        self.check(t)?;
        Ok(self.normalize(&OperadElement::basis(t.clone())))
    }

    /// Iso classes of trees with `n` leaves and at most `size_bound`
    /// vertices, sorted.
    pub fn free_basis(&self, n: usize, size_bound: usize) -> Result<Vec<TreeTerm>, FreeOperadError> {
        if n > MAX_ARITY || size_bound > MAX_SIZE {
            return Err(FreeOperadError::BoundExceeded(format!(
                "arity {n} / size {size_bound} beyond {MAX_ARITY} / {MAX_SIZE}"
            )));
        }
        let mut memo = BTreeMap::new();
        let shapes = self.shapes(n, size_bound, &mut memo);
        let mut out = BTreeSet::new();
        match self.mode {
            Mode::Planar => out.extend(shapes.iter().map(|s| s.renumber_dfs())),
            Mode::Coinvariant => out.extend(shapes.iter().filter_map(|s| self.normalize_tree(s)).map(|(t, _)| t)),
            Mode::Symmetric => {
                let fact: usize = (1..=n).product();
                if shapes.len().saturating_mul(fact) > MAX_VISITED {
                    return Err(FreeOperadError::BoundExceeded(format!("{} labeled trees", shapes.len() * fact)));
                }
                for s in &shapes {
                    let base = s.renumber_dfs();
                    for perm in (1..=n).permutations(n) {
                        let t = base.map_leaves(&|l| perm[l - 1]);
                        if let Some((c, _)) = self.normalize_tree(&t) {
                            out.insert(c);
                        }
                    }
                }
            }
        }
        Ok(out.into_iter().collect())
    }

    /// Planar trees with `n` leaves (all labeled 0) and at most `s` vertices.
    fn shapes(&self, n: usize, s: usize, memo: &mut BTreeMap<(usize, usize), Vec<TreeTerm>>) -> Vec<TreeTerm> {
        if let Some(v) = memo.get(&(n, s)) {
            return v.clone();
        }
        let mut out = Vec::new();
        if n == 1 {
            out.push(TreeTerm::Leaf(0));
        }
        if s > 0 {
            for (name, d) in &self.gens {
                for kids in self.forests(d.arity, n, s - 1, memo) {
                    out.push(TreeTerm::Node { gen: name.clone(), children: kids });
                }
            }
        }
        memo.insert((n, s), out.clone());
        out
    }

    fn forests(
        &self,
        k: usize,
        n: usize,
        s: usize,
        memo: &mut BTreeMap<(usize, usize), Vec<TreeTerm>>,
    ) -> Vec<Vec<TreeTerm>> {
        if k == 0 {
            return if n == 0 { vec![vec![]] } else { vec![] };
        }
        let mut out = Vec::new();
        for n1 in 0..=n {
            for t in self.shapes(n1, s, memo) {
                let used = t.vertex_count();
                for mut rest in self.forests(k - 1, n - n1, s - used, memo) {
                    rest.insert(0, t.clone());
                    out.push(rest);
                }
            }
        }
        out
    }

    /// `subs[j-1]` grafted at leaf `j` of `outer` without renumbering, with
    /// the Koszul sign of moving the inserted vertices into preorder.
    fn graft_raw(&self, outer: &TreeTerm, subs: &[TreeTerm]) -> (TreeTerm, i64) {
        let mut bases = Vec::with_capacity(subs.len());
        let mut acc = outer.vertex_count();
        for s in subs {
            bases.push(acc);
            acc += s.vertex_count();
        }
        let mut order = Vec::with_capacity(acc);
        let mut outer_idx = 0;
        fn emit(op: &FreeOperad, t: &TreeTerm, base: usize, k: &mut usize, order: &mut Vec<(usize, i64)>) {
            if let TreeTerm::Node { gen, children } = t {
                order.push((base + *k, op.gens.get(gen).map_or(0, |d| d.degree)));
                *k += 1;
                children.iter().for_each(|c| emit(op, c, base, k, order));
            }
        }
        fn walk(
            op: &FreeOperad,
            t: &TreeTerm,
            subs: &[TreeTerm],
            bases: &[usize],
            outer_idx: &mut usize,
            order: &mut Vec<(usize, i64)>,
        ) {
            match t {
                TreeTerm::Leaf(l) => emit(op, &subs[*l - 1], bases[*l - 1], &mut 0, order),
                TreeTerm::Node { gen, children } => {
                    order.push((*outer_idx, op.gens.get(gen).map_or(0, |d| d.degree)));
                    *outer_idx += 1;
                    children.iter().for_each(|c| walk(op, c, subs, bases, outer_idx, order));
                }
            }
        }
        walk(self, outer, subs, &bases, &mut outer_idx, &mut order);
        (outer.replace_leaves(subs), graded_sign(&order))
    }

    /// Grafts `assignments[j-1]` at the leaf labeled `j`, shifting its leaves
    /// past the blocks of smaller labels.
    pub fn graft(&self, outer: &TreeTerm, assignments: &[TreeTerm]) -> Result<(TreeTerm, i64), FreeOperadError> {
        let n = outer.arity();
        if assignments.len() != n {
            return Err(FreeOperadError::ArityMismatch { expected: n, found: assignments.len() });
        }
        let mut shifted = Vec::with_capacity(n);
        let mut off = 0;
        for a in assignments {
            let o = off;
            shifted.push(a.map_leaves(&|l| l + o));
            off += a.arity();
        }
        Ok(self.graft_raw(outer, &shifted))
    }

    /// Monad multiplication on one tree with a tree per leaf.
    pub fn substitute(&self, outer: &TreeTerm, assignments: &[TreeTerm]) -> Result<OperadElement, FreeOperadError> {
        self.check(outer)?;
        assignments.iter().try_for_each(|a| self.check(a))?;
        let (t, s) = self.graft(outer, assignments)?;
        Ok(self.normalize(&OperadElement::term(t, q(s))))
    }

    /// The cooperad decomposition dual to grafting in planar mode: every
    /// `(outer, inners)` with `graft(outer, inners) = t`, outer containing
    /// the root, leaves of each piece numbered in order.
    pub fn cosubstitutions(&self, t: &TreeTerm) -> Vec<(TreeTerm, Vec<TreeTerm>)> {
        fn go(t: &TreeTerm) -> Vec<(TreeTerm, Vec<TreeTerm>)> {
            let mut out = vec![(TreeTerm::Leaf(0), vec![t.clone()])];
            match t {
                TreeTerm::Node { children, .. } if children.is_empty() => out.push((t.clone(), vec![])),
                TreeTerm::Node { gen, children } => {
                let per_child: Vec<Vec<(TreeTerm, Vec<TreeTerm>)>> = children.iter().map(go).collect();
                for choice in per_child.iter().multi_cartesian_product() {
                    let outer = TreeTerm::Node { gen: gen.clone(), children: choice.iter().map(|(o, _)| o.clone()).collect() };
                    let inners = choice.iter().flat_map(|(_, i)| i.iter().cloned()).collect();
                    out.push((outer, inners));
                }
                }
                TreeTerm::Leaf(_) => {}
            }
            out
        }
        go(t)
            .into_iter()
            .map(|(o, inners)| (o.renumber_dfs(), inners.iter().map(|i| i.renumber_dfs()).collect()))
            .collect()
    }

    pub fn circ_tree(&self, a: &TreeTerm, i: usize, b: &TreeTerm) -> Result<(TreeTerm, i64), FreeOperadError> {
        let m = a.arity();
        if i == 0 || i > m {
            return Err(FreeOperadError::IndexOutOfRange { i, arity: m });
        }
        let assignments: Vec<TreeTerm> = (1..=m).map(|j| if j == i { b.clone() } else { TreeTerm::unit() }).collect();
        self.graft(a, &assignments)
    }

    pub fn circ_i(&self, a: &OperadElement, i: usize, b: &OperadElement) -> Result<OperadElement, FreeOperadError> {
        let mut out = OperadElement::zero();
        for (ta, ca) in a.iter() {
            for (tb, cb) in b.iter() {
                let (t, s) = self.circ_tree(ta, i, tb)?;
                out.add_term(t, *ca * *cb * q(s));
            }
        }
        Ok(self.normalize(&out))
    }

    fn insertion_terms(&self, ta: &TreeTerm, tb: &TreeTerm, c: Q, out: &mut OperadElement) {
        for i in 1..=ta.arity() {
            let (t, s) = self.circ_tree(ta, i, tb).expect("index in range");
            out.add_term(t, c * q(s));
        }
    }

    /// `a∘b = Σᵢ a∘ᵢb`.
    pub fn insertion_product(&self, a: &OperadElement, b: &OperadElement) -> OperadElement {
        let mut out = OperadElement::zero();
        for (ta, ca) in a.iter() {
            for (tb, cb) in b.iter() {
                self.insertion_terms(ta, tb, *ca * *cb, &mut out);
            }
        }
        self.normalize(&out)
    }

    /// Graded commutator `a∘b − (−1)^{|a||b|} b∘a`.
    pub fn bracket(&self, a: &OperadElement, b: &OperadElement) -> OperadElement {
        let mut out = OperadElement::zero();
        for (ta, ca) in a.iter() {
            for (tb, cb) in b.iter() {
                let c = *ca * *cb;
                let sign = koszul(self.tree_degree(ta), self.tree_degree(tb));
                self.insertion_terms(ta, tb, c, &mut out);
                self.insertion_terms(tb, ta, -c * q(sign), &mut out);
            }
        }
        self.normalize(&out)
    }

    /// `(a∘b)∘c − a∘(b∘c) − (a∘c)∘b + a∘(c∘b)`.
    pub fn prelie_residual(&self, a: &OperadElement, b: &OperadElement, c: &OperadElement) -> OperadElement {
        let ab_c = self.insertion_product(&self.insertion_product(a, b), c);
        let a_bc = self.insertion_product(a, &self.insertion_product(b, c));
        let ac_b = self.insertion_product(&self.insertion_product(a, c), b);
        let a_cb = self.insertion_product(a, &self.insertion_product(c, b));
        ab_c.sub(&a_bc).sub(&ac_b).add(&a_cb)
    }

    /// The graded pre-Lie associator difference, with `(−1)^{|b||c|}` on the
    /// swapped half.
    pub fn graded_prelie_residual(&self, a: &OperadElement, b: &OperadElement, c: &OperadElement) -> OperadElement {
        let mut out = OperadElement::zero();
        for (tb, cb) in b.iter() {
            for (tc, cc) in c.iter() {
                let b1 = OperadElement::term(tb.clone(), *cb);
                let c1 = OperadElement::term(tc.clone(), *cc);
                let s = q(koszul(self.tree_degree(tb), self.tree_degree(tc)));
                let left = self
                    .insertion_product(&self.insertion_product(a, &b1), &c1)
                    .sub(&self.insertion_product(a, &self.insertion_product(&b1, &c1)));
                let right = self
                    .insertion_product(&self.insertion_product(a, &c1), &b1)
                    .sub(&self.insertion_product(a, &self.insertion_product(&c1, &b1)));
                out.add_assign(&left.sub(&right.scale(s)));
            }
        }
        out
    }

    /// Graded Jacobi defect `[a,[b,c]] − [[a,b],c] − (−1)^{|a||b|}[b,[a,c]]`.
    pub fn jacobi_residual(&self, a: &OperadElement, b: &OperadElement, c: &OperadElement) -> OperadElement {
        let mut out = OperadElement::zero();
        for (ta, ca) in a.iter() {
            for (tb, cb) in b.iter() {
                let a1 = OperadElement::term(ta.clone(), *ca);
                let b1 = OperadElement::term(tb.clone(), *cb);
                let s = q(koszul(self.tree_degree(ta), self.tree_degree(tb)));
                let x = self.bracket(&a1, &self.bracket(&b1, c));
                let y = self.bracket(&self.bracket(&a1, &b1), c);
                let z = self.bracket(&b1, &self.bracket(&a1, c));
                out.add_assign(&x.sub(&y).sub(&z.scale(s)));
            }
        }
        out
    }

    /// First triple of planar basis classes with at most `max_vertices`
    /// vertices whose (unsigned) pre-Lie residual is nonzero.
    pub fn prelie_counterexample(
        &self,
        max_vertices: usize,
    ) -> Result<Option<([TreeTerm; 3], OperadElement)>, FreeOperadError> {
        let mut pool = Vec::new();
        for n in 1..=max_vertices + 1 {
            pool.extend(self.free_basis(n, max_vertices)?);
        }
        for a in &pool {
            for b in &pool {
                for c in &pool {
                    let r = self.prelie_residual(
                        &OperadElement::basis(a.clone()),
                        &OperadElement::basis(b.clone()),
                        &OperadElement::basis(c.clone()),
                    );
                    if !r.is_zero() {
                        return Ok(Some(([a.clone(), b.clone(), c.clone()], r)));
                    }
                }
            }
        }
        Ok(None)
    }

    /// Validates a differential table: images of degree `|g|−1` and arity of
    /// `g`, and `d²` vanishing on every generator.
    pub fn differential(&self, images: BTreeMap<String, OperadElement>) -> Result<Differential, FreeOperadError> {
        for (g, img) in &images {
            let d = self.data(g)?;
            for (t, _) in img.iter() {
                self.check(t)?;
                if t.arity() != d.arity || self.tree_degree(t) != d.degree - 1 {
                    return Err(FreeOperadError::DifferentialDegree(g.clone()));
                }
            }
        }
        let images = images.into_iter().map(|(g, e)| (g, self.normalize(&e))).collect();
        let diff = Differential { images };
        for (name, d) in &self.gens {
            let c = OperadElement::basis(TreeTerm::corolla(name, d.arity));
            if !self.apply_differential(&diff, &self.apply_differential(&diff, &c)).is_zero() {
                return Err(FreeOperadError::DifferentialNotSquareZero(name.clone()));
            }
        }
        Ok(diff)
    }

    /// Extension of `d` as a derivation: at each vertex in preorder, with the
    /// sign of the degrees preceding it.
    pub fn apply_differential(&self, d: &Differential, x: &OperadElement) -> OperadElement {
        let mut out = OperadElement::zero();
        for (t, c) in x.iter() {
            for (t2, c2) in self.d_tree(d, t, 0) {
                out.add_term(t2, *c * c2);
            }
        }
        self.normalize(&out)
    }

    fn d_tree(&self, d: &Differential, t: &TreeTerm, prefix: i64) -> Vec<(TreeTerm, Q)> {
        let TreeTerm::Node { gen, children } = t else {
            return vec![];
        };
        let mut out = Vec::new();
        let outer_sign = if prefix % 2 == 0 { 1 } else { -1 };
        if let Some(img) = d.images.get(gen) {
            for (s, c) in img.iter() {
                let (t2, sg) = self.graft_raw(s, children);
                out.push((t2, *c * q(outer_sign * sg)));
            }
        }
        let mut acc = prefix + self.gens.get(gen).map_or(0, |g| g.degree);
        for (k, child) in children.iter().enumerate() {
            for (c2, coeff) in self.d_tree(d, child, acc) {
                let mut kids = children.clone();
                kids[k] = c2;
                out.push((TreeTerm::Node { gen: gen.clone(), children: kids }, coeff));
            }
            acc += self.tree_degree(child);
        }
        out
    }

    /// `d(α) + α∘α` for `α` homogeneous of odd degree.
    pub fn master_equation_residual(&self, alpha: &OperadElement, d: &Differential) -> Result<OperadElement, FreeOperadError> {
        if alpha.keys().any(|t| self.tree_degree(t).rem_euclid(2) != 1) {
            return Err(FreeOperadError::NotOddDegree);
        }
        let degs: BTreeSet<i64> = alpha.keys().map(|t| self.tree_degree(t)).collect();
        if degs.len() > 1 {
            return Err(FreeOperadError::NotOddDegree);
        }
        Ok(self.apply_differential(d, alpha).add(&self.insertion_product(alpha, alpha)))
    }
}

fn koszul(a: i64, b: i64) -> i64 {
    if (a * b).rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary(mode: Mode) -> FreeOperad {
        FreeOperad::new(Signature::single("m", 2, 0), mode).unwrap()
    }

    fn t(s: &str) -> TreeTerm {
        s.parse().unwrap()
    }

    fn e(s: &str) -> OperadElement {
        OperadElement::basis(t(s))
    }

    fn catalan_oracle(n: usize) -> usize {
        let mut c = vec![1usize; n + 1];
        for k in 1..=n {
            c[k] = (0..k).map(|i| c[i] * c[k - 1 - i]).sum();
        }
        c[n]
    }

    #[test]
    fn parse_roundtrip() {
        for s in ["1", "m(1,2)", "m(1,m(2,3))", "u", "f(u,m(2,1))"] {
            assert_eq!(t(s).to_string(), s);
        }
        assert!("m(1,".parse::<TreeTerm>().is_err());
        assert!(matches!("m(1,2))".parse::<TreeTerm>(), Err(FreeOperadError::Parse { pos: 6, .. })));
    }

    #[test]
    fn catalan_counts() {
        let op = binary(Mode::Planar);
        for n in 1..=7 {
            assert_eq!(op.free_basis(n, MAX_SIZE).unwrap().len(), catalan_oracle(n - 1), "n={n}");
        }
    }

    #[test]
    fn unit_is_only_arity_one_tree() {
        assert_eq!(binary(Mode::Symmetric).free_basis(1, 5).unwrap(), vec![TreeTerm::unit()]);
    }

    // Labeled trees with unordered children: recursion over the root
    // generator and set partitions of the leaf labels.
    fn labeled_count(n: usize, arities: &[usize]) -> u64 {
        fn partitions_into(n: usize, k: usize, f: &dyn Fn(usize) -> u64) -> u64 {
            // sum over unordered partitions of an n-set into k nonempty blocks
            // of the product of f(block size); fix the block of the first element
            if k == 0 {
                return u64::from(n == 0);
            }
            if n == 0 {
                return 0;
            }
            let mut total = 0;
            for s in 1..=n {
                let rest = partitions_into(n - s, k - 1, f);
                if rest > 0 {
                    total += binom(n - 1, s - 1) * f(s) * rest;
                }
            }
            total
        }
        fn binom(n: usize, k: usize) -> u64 {
            (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
        }
        fn count(n: usize, arities: &[usize]) -> u64 {
            let mut total = u64::from(n == 1);
            for &k in arities {
                total += partitions_into(n, k, &|s| count(s, arities));
            }
            total
        }
        count(n, arities)
    }

    #[test]
    fn symmetric_binary_ternary_matches_recursion() {
        let op = FreeOperad::new(Signature::single("m", 2, 0).with("t", 3, 0), Mode::Symmetric).unwrap();
        for n in 1..=5 {
            assert_eq!(op.free_basis(n, MAX_SIZE).unwrap().len() as u64, labeled_count(n, &[2, 3]), "n={n}");
        }
        assert_eq!(labeled_count(4, &[2, 3]), 15 + 10);
    }

    #[test]
    fn regular_action_doubles_binary() {
        let sig = Signature {
            generators: vec![GeneratorSpec { name: "m".into(), arity: 2, degree: 0, symmetry: Some(vec![]) }],
        };
        let op = FreeOperad::new(sig, Mode::Symmetric).unwrap();
        assert_eq!(op.free_basis(2, 3).unwrap().len(), 2);
        assert_eq!(op.free_basis(3, 3).unwrap().len(), 12);
        let bad = Signature {
            generators: vec![GeneratorSpec { name: "m".into(), arity: 2, degree: 0, symmetry: Some(vec![vec![1, 1]]) }],
        };
        assert!(matches!(FreeOperad::new(bad, Mode::Symmetric), Err(FreeOperadError::InvalidAction(_))));
    }

    #[test]
    fn bound_exceeded() {
        assert!(matches!(binary(Mode::Planar).free_basis(12, 3), Err(FreeOperadError::BoundExceeded(_))));
    }

    #[test]
    fn circ_examples() {
        let op = binary(Mode::Planar);
        let m = e("m(1,2)");
        assert_eq!(op.circ_i(&m, 1, &e("1")).unwrap(), m);
        assert_eq!(op.circ_i(&m, 1, &m).unwrap(), e("m(m(1,2),3)"));
        assert_eq!(op.circ_i(&m, 2, &m).unwrap(), e("m(1,m(2,3))"));
        assert!(matches!(op.circ_i(&m, 3, &m), Err(FreeOperadError::IndexOutOfRange { i: 3, arity: 2 })));
        assert_eq!(op.insertion_product(&m, &m), e("m(m(1,2),3)").add(&e("m(1,m(2,3))")));
        assert_eq!(op.insertion_product(&e("1"), &m), m);
    }

    #[test]
    fn arity_one_bracket_vanishes() {
        let op = FreeOperad::new(Signature::single("x", 1, 0), Mode::Planar).unwrap();
        let x = e("x(1)");
        assert_eq!(op.insertion_product(&x, &x), e("x(x(1))"));
        assert!(op.bracket(&x, &x).is_zero());
    }

    #[test]
    fn substitution_arity_mismatch() {
        let op = binary(Mode::Planar);
        assert!(matches!(
            op.substitute(&t("m(1,2)"), &[t("1")]),
            Err(FreeOperadError::ArityMismatch { expected: 2, found: 1 })
        ));
        assert_eq!(op.substitute(&t("m(1,2)"), &[t("1"), t("m(1,2)")]).unwrap(), e("m(1,m(2,3))"));
    }

    #[test]
    fn symmetric_grafting_keeps_label_blocks() {
        let op = binary(Mode::Symmetric);
        let r = op.substitute(&t("m(2,1)"), &[t("m(1,2)"), t("1")]).unwrap();
        assert_eq!(r, op.element(&t("m(3,m(1,2))")).unwrap());
    }

    #[test]
    fn sequential_and_parallel_composition() {
        let op = FreeOperad::new(Signature::single("m", 2, 1).with("t", 3, 0), Mode::Planar).unwrap();
        let pool: Vec<TreeTerm> = (1..=3).flat_map(|n| op.free_basis(n, 1).unwrap()).collect();
        for a in &pool {
            for b in &pool {
                for c in &pool {
                    let (ea, eb, ec) = (
                        OperadElement::basis(a.clone()),
                        OperadElement::basis(b.clone()),
                        OperadElement::basis(c.clone()),
                    );
                    for i in 1..=a.arity() {
                        for j in 1..=b.arity() {
                            let lhs = op.circ_i(&op.circ_i(&ea, i, &eb).unwrap(), i + j - 1, &ec).unwrap();
                            let rhs = op.circ_i(&ea, i, &op.circ_i(&eb, j, &ec).unwrap()).unwrap();
                            assert_eq!(lhs, rhs);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn odd_generator_signs() {
        let op = FreeOperad::new(Signature::single("m", 2, 1), Mode::Planar).unwrap();
        let m = e("m(1,2)");
        let mm = op.insertion_product(&m, &m);
        assert_eq!(mm.coeff(&t("m(m(1,2),3)")), q(1));
        assert_eq!(mm.coeff(&t("m(1,m(2,3))")), q(1));
        let sym = op.with_mode(Mode::Coinvariant);
        // two odd copies under a symmetric vertex cancel
        assert!(sym.element(&t("m(m(1,2),m(3,4))")).unwrap().is_zero());
    }

    #[test]
    fn prelie_even_vanishes_both_modes() {
        for mode in [Mode::Planar, Mode::Symmetric, Mode::Coinvariant] {
            let op = binary(mode);
            let pool: Vec<TreeTerm> = (1..=3).flat_map(|n| op.free_basis(n, 2).unwrap()).collect();
            for a in &pool {
                for b in &pool {
                    for c in &pool {
                        let r = op.prelie_residual(
                            &OperadElement::basis(a.clone()),
                            &OperadElement::basis(b.clone()),
                            &OperadElement::basis(c.clone()),
                        );
                        assert!(r.is_zero(), "{mode:?} {a} {b} {c}");
                    }
                }
            }
        }
    }

    #[test]
    fn odd_planar_counterexample_and_graded_identity() {
        let op = FreeOperad::new(Signature::single("m", 2, 1), Mode::Planar).unwrap();
        let (triple, r) = op.prelie_counterexample(3).unwrap().expect("counterexample");
        assert!(!r.is_zero());
        let [a, b, c] = triple.map(OperadElement::basis);
        assert!(op.graded_prelie_residual(&a, &b, &c).is_zero());
        assert!(op.prelie_residual(&a, &b, &b).is_zero());
    }

    #[test]
    fn jacobi_small_triples() {
        let op = binary(Mode::Symmetric);
        let pool: Vec<TreeTerm> = (1..=3).flat_map(|n| op.free_basis(n, 2).unwrap()).collect();
        for a in &pool {
            for b in &pool {
                for c in &pool {
                    let [x, y, z] = [a, b, c].map(|t| OperadElement::basis(t.clone()));
                    assert!(op.jacobi_residual(&x, &y, &z).is_zero());
                }
            }
        }
    }

    #[test]
    fn master_equation_examples() {
        let op = FreeOperad::new(Signature::single("m", 2, 1).with("u", 0, 1), Mode::Planar).unwrap();
        let d = Differential::zero();
        assert!(op.master_equation_residual(&OperadElement::zero(), &d).unwrap().is_zero());
        assert!(op.master_equation_residual(&e("u"), &d).unwrap().is_zero());
        let r = op.master_equation_residual(&e("m(1,2)"), &d).unwrap();
        assert_eq!(r.len(), 2);
        assert!(matches!(
            op.master_equation_residual(&e("m(m(1,2),3)"), &d),
            Err(FreeOperadError::NotOddDegree)
        ));
    }

    #[test]
    fn differential_square_zero_check() {
        let sig = Signature::single("a", 1, 2).with("b", 1, 1).with("c", 1, 0);
        let op = FreeOperad::new(sig, Mode::Planar).unwrap();
        let ok = BTreeMap::from([("a".to_string(), e("b(1)")), ("b".to_string(), OperadElement::zero())]);
        let d = op.differential(ok).unwrap();
        assert_eq!(op.apply_differential(&d, &e("a(1)")), e("b(1)"));
        let bad = BTreeMap::from([("a".to_string(), e("b(1)")), ("b".to_string(), e("c(1)"))]);
        assert!(matches!(op.differential(bad), Err(FreeOperadError::DifferentialNotSquareZero(_))));
        let wrong = BTreeMap::from([("a".to_string(), e("c(1)"))]);
        assert!(matches!(op.differential(wrong), Err(FreeOperadError::DifferentialDegree(_))));
    }

    #[test]
    fn derivation_squares_to_zero_on_composites() {
        // d(a) = b∘b with |a| = 3, |b| = 1 odd: d² = 0 since d(b) = 0
        let sig = Signature::single("a", 3, 3).with("b", 2, 1);
        let op = FreeOperad::new(sig, Mode::Planar).unwrap();
        let d = op
            .differential(BTreeMap::from([("a".to_string(), e("b(b(1,2),3)").sub(&e("b(1,b(2,3))")))]))
            .unwrap();
        let x = e("a(a(1,2,3),b(4,5),6)");
        assert!(op.apply_differential(&d, &op.apply_differential(&d, &x)).is_zero());
    }

    #[test]
    fn monad_laws_small_trees() {
        for mode in [Mode::Planar, Mode::Symmetric] {
            let op = binary(mode);
            let pool: Vec<TreeTerm> = (1..=3).flat_map(|n| op.free_basis(n, 2).unwrap()).collect();
            for x in &pool {
                let units = vec![TreeTerm::unit(); x.arity()];
                assert_eq!(op.substitute(x, &units).unwrap(), op.element(x).unwrap());
                assert_eq!(op.substitute(&TreeTerm::unit(), std::slice::from_ref(x)).unwrap(), op.element(x).unwrap());
            }
            for outer in pool.iter().filter(|x| x.vertex_count() <= 1) {
                for mid in pool.iter().filter(|y| y.vertex_count() <= 1).combinations_with_replacement(outer.arity()) {
                    let mids: Vec<TreeTerm> = mid.into_iter().cloned().collect();
                    let inner_arity: usize = mids.iter().map(|m| m.arity()).sum();
                    if outer.vertex_count() + mids.iter().map(|m| m.vertex_count()).sum::<usize>() > 3 {
                        continue;
                    }
                    let inner: Vec<TreeTerm> = (0..inner_arity)
                        .map(|k| if k % 2 == 0 { TreeTerm::corolla("m", 2) } else { TreeTerm::unit() })
                        .take(inner_arity)
                        .collect();
                    let (two, s2) = op.graft(outer, &mids).unwrap();
                    let lhs = op.normalize(&op.substitute(&two, &inner).unwrap().scale(q(s2)));
                    let mut blocks = Vec::new();
                    let mut sign = 1;
                    let mut k = 0;
                    for m in &mids {
                        let (b, s) = op.graft(m, &inner[k..k + m.arity()]).unwrap();
                        k += m.arity();
                        sign *= s;
                        blocks.push(b);
                    }
                    let (one, s1) = op.graft(outer, &blocks).unwrap();
                    let rhs = op.normalize(&OperadElement::term(one, q(sign * s1)));
                    assert_eq!(lhs, rhs, "{outer} {mids:?}");
                }
            }
        }
    }
}
