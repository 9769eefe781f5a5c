//! Rooted forests and the Connes–Kreimer coproduct, computed from the
//! cooperad decomposition of free-operad trees and checked against direct
//! enumeration of admissible cuts.

use std::collections::BTreeSet;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Bialgebra, HopfError};
use crate::free_operad::{FreeOperad, Mode, OperadElement, Signature, TreeTerm};
use crate::linear::{q, Tensor2, Q};

/// A rooted tree as the list of its root's subtrees.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RTree {
    pub children: Vec<RTree>,
}

pub type Forest = Vec<RTree>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeMode {
    Planar,
    Abstract,
}

impl FromStr for TreeMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "planar" => Ok(TreeMode::Planar),
            "abstract" => Ok(TreeMode::Abstract),
            _ => Err(format!("unknown tree mode {s}")),
        }
    }
}

impl RTree {
    pub fn point() -> RTree {
        RTree::default()
    }

    pub fn new(children: Vec<RTree>) -> RTree {
        RTree { children }
    }

    /// The chain with `n` vertices.
    pub fn ladder(n: usize) -> RTree {
        (1..n).fold(RTree::point(), |t, _| RTree::new(vec![t]))
    }

    /// A root with `n − 1` leaf children.
    pub fn corolla(n: usize) -> RTree {
        RTree::new(vec![RTree::point(); n.saturating_sub(1)])
    }

    pub fn vertex_count(&self) -> usize {
        1 + self.children.iter().map(|c| c.vertex_count()).sum::<usize>()
    }

    pub fn max_outdegree(&self) -> usize {
        self.children.iter().map(|c| c.max_outdegree()).max().unwrap_or(0).max(self.children.len())
    }

    /// Children sorted recursively.
    pub fn canonical(&self) -> RTree {
        let mut kids: Vec<RTree> = self.children.iter().map(|c| c.canonical()).collect();
        kids.sort();
        RTree::new(kids)
    }
}

pub fn forest_size(f: &Forest) -> usize {
    f.iter().map(|t| t.vertex_count()).sum()
}

pub fn normalize_forest(f: &Forest, mode: TreeMode) -> Forest {
    match mode {
        TreeMode::Planar => f.clone(),
        TreeMode::Abstract => {
            let mut v: Forest = f.iter().map(|t| t.canonical()).collect();
            v.sort();
            v
        }
    }
}

/// Planar rooted trees with `n` vertices.
pub fn planar_trees(n: usize) -> Vec<RTree> {
    if n == 0 {
        return vec![];
    }
    planar_forests(n - 1).into_iter().map(RTree::new).collect()
}

/// Planar forests with `n` vertices in total.
pub fn planar_forests(n: usize) -> Vec<Forest> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for k in 1..=n {
        for t in planar_trees(k) {
            for mut rest in planar_forests(n - k) {
                rest.insert(0, t.clone());
                out.push(rest);
            }
        }
    }
    out
}

pub fn trees(n: usize, mode: TreeMode) -> Vec<RTree> {
    let all = planar_trees(n);
    match mode {
        TreeMode::Planar => all,
        TreeMode::Abstract => all.iter().map(|t| t.canonical()).collect::<BTreeSet<_>>().into_iter().collect(),
    }
}

pub fn forests(n: usize, mode: TreeMode) -> Vec<Forest> {
    let all = planar_forests(n);
    match mode {
        TreeMode::Planar => all,
        TreeMode::Abstract => all.iter().map(|f| normalize_forest(f, mode)).collect::<BTreeSet<_>>().into_iter().collect(),
    }
}

fn generator(k: usize) -> String {
    format!("c{k}")
}

/// The free operad with one generator `c_k` of arity `k` per outdegree.
pub fn ck_operad(max_outdegree: usize) -> FreeOperad {
    let sig = (1..=max_outdegree).fold(Signature::single(&generator(0), 0, 0), |s, k| s.with(&generator(k), k, 0));
    FreeOperad::new(sig, Mode::Planar).expect("distinct generators")
}

/// A rooted tree as an arity-0 tree term, `c_k` at a vertex with `k` children.
pub fn tree_to_term(t: &RTree) -> TreeTerm {
    TreeTerm::node(&generator(t.children.len()), t.children.iter().map(tree_to_term).collect())
}

/// Amputation: a tree term back to a rooted tree with its leaves forgotten;
/// `None` for the unit tree.
pub fn term_to_tree(t: &TreeTerm) -> Option<RTree> {
    match t {
        TreeTerm::Leaf(_) => None,
        TreeTerm::Node { children, .. } => Some(RTree::new(children.iter().filter_map(term_to_tree).collect())),
    }
}

fn check_bound(n: usize, bound: usize) -> Result<(), HopfError> {
    if n > bound {
        Err(HopfError::BoundExceeded { degree: n, bound })
    } else {
        Ok(())
    }
}

/// `Δ(t) = Σ (pruned forest) ⊗ (trunk)` read off the cosubstitutions
/// `t = γ(trunk; pieces)`.
pub fn ck_tree_coproduct(t: &RTree, mode: TreeMode, bound: usize) -> Result<Tensor2<Forest>, HopfError> {
    check_bound(t.vertex_count(), bound)?;
    let op = ck_operad(t.max_outdegree());
    let mut out = Tensor2::zero();
    for (outer, inners) in op.cosubstitutions(&tree_to_term(t)) {
        let trunk: Forest = term_to_tree(&outer).into_iter().collect();
        let pruned: Forest = inners.iter().filter_map(term_to_tree).collect();
        out.add_term((normalize_forest(&pruned, mode), normalize_forest(&trunk, mode)), q(1));
    }
    Ok(out)
}

fn concat(a: &Forest, b: &Forest, mode: TreeMode) -> Forest {
    normalize_forest(&a.iter().chain(b).cloned().collect(), mode)
}

/// Multiplicative extension of [`ck_tree_coproduct`] to forests.
pub fn ck_coproduct(f: &Forest, mode: TreeMode, bound: usize) -> Result<Tensor2<Forest>, HopfError> {
    check_bound(forest_size(f), bound)?;
    let mut acc: Tensor2<Forest> = Tensor2::basis((vec![], vec![]));
    for t in f {
        let d = ck_tree_coproduct(t, mode, bound)?;
        acc = acc.bilinear(&d, |(a, b), (c, e)| Tensor2::basis((concat(a, c, mode), concat(b, e, mode))));
    }
    Ok(acc)
}

/// Independent oracle: subsets of edges with no two on a root path, plus
/// the cut above the root.
pub fn admissible_cuts_oracle(t: &RTree, mode: TreeMode, bound: usize) -> Result<Tensor2<Forest>, HopfError> {
    let n = t.vertex_count();
    check_bound(n, bound)?;
    // preorder flattening: parent of each vertex and subtree end
    let mut parent = vec![usize::MAX; n];
    let mut end = vec![0; n];
    fn flatten(t: &RTree, me: usize, next: &mut usize, parent: &mut [usize], end: &mut [usize]) {
        for c in &t.children {
            let id = *next;
            *next += 1;
            parent[id] = me;
            flatten(c, id, next, parent, end);
        }
        end[me] = *next;
    }
    let mut next = 1;
    flatten(t, 0, &mut next, &mut parent, &mut end);
    let is_ancestor = |a: usize, b: usize| a < b && b < end[a];
    fn rebuild(t: &RTree, next: &mut usize, removed: &[bool]) -> RTree {
        let mut kids = Vec::new();
        for c in &t.children {
            let id = *next;
            *next += 1;
            let sub = rebuild(c, next, removed);
            if !removed[id] {
                kids.push(sub);
            }
        }
        RTree::new(kids)
    }
    fn subtree_at(t: &RTree, target: usize, next: &mut usize) -> Option<RTree> {
        for c in &t.children {
            let id = *next;
            *next += 1;
            if id == target {
                return Some(c.clone());
            }
            if let Some(s) = subtree_at(c, target, next) {
                return Some(s);
            }
        }
        None
    }
    let mut out = Tensor2::zero();
    out.add_term((normalize_forest(&vec![t.clone()], mode), vec![]), q(1));
    for mask in 0u64..(1 << (n - 1)) {
        let cut: Vec<usize> = (1..n).filter(|i| mask & (1 << (i - 1)) != 0).collect();
        if cut.iter().any(|&a| cut.iter().any(|&b| is_ancestor(a, b))) {
            continue;
        }
        let mut removed = vec![false; n];
        cut.iter().for_each(|&i| removed[i] = true);
        let pruned: Forest = cut.iter().map(|&i| subtree_at(t, i, &mut 1).expect("vertex exists")).collect();
        let trunk = rebuild(t, &mut 1, &removed);
        out.add_term((normalize_forest(&pruned, mode), normalize_forest(&vec![trunk], mode)), q(1));
    }
    Ok(out)
}

/// `(𝕀⊗μ)γ̌` on tree terms over the `c_k` generators: the trunk on the left,
/// the product of the pieces on the right.
pub fn cooperad_mult_coproduct(x: &OperadElement, bound: usize) -> Result<Tensor2<Forest>, HopfError> {
    let mut out = Tensor2::zero();
    for (t, c) in x.iter() {
        check_bound(t.vertex_count(), bound)?;
        let width = term_to_tree(t).map_or(0, |r| r.max_outdegree());
        for (outer, inners) in ck_operad(width).cosubstitutions(t) {
            let trunk: Forest = term_to_tree(&outer).into_iter().collect();
            let pieces: Forest = inners.iter().filter_map(term_to_tree).collect();
            out.add_term((trunk, pieces), *c);
        }
    }
    Ok(out)
}

/// The Connes–Kreimer bialgebra on forests.
#[derive(Clone, Copy, Debug)]
pub struct CkAlgebra {
    pub mode: TreeMode,
    pub bound: usize,
}

impl Bialgebra for CkAlgebra {
    type Key = Forest;

    fn unit(&self) -> Forest {
        vec![]
    }

    fn degree(&self, k: &Forest) -> usize {
        forest_size(k)
    }

    fn mul(&self, a: &Forest, b: &Forest) -> crate::linear::FormalSum<Forest> {
        crate::linear::FormalSum::basis(concat(a, b, self.mode))
    }

    fn delta(&self, k: &Forest) -> Result<Tensor2<Forest>, HopfError> {
        ck_coproduct(k, self.mode, self.bound)
    }

    fn epsilon(&self, k: &Forest) -> Q {
        q(i64::from(k.is_empty()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hopf::{coassociativity_defect, compatibility_defect, counit_defects, tensor_product, Antipode};
    use crate::linear::FormalSum;

    fn pt() -> RTree {
        RTree::point()
    }

    fn pair(a: Forest, b: Forest) -> (Forest, Forest) {
        (a, b)
    }

    // rooted unlabeled trees, A000081, by the Euler transform recursion
    fn abstract_tree_counts(n: usize) -> Vec<u64> {
        let mut a = vec![0u64; n + 1];
        if n >= 1 {
            a[1] = 1;
        }
        for m in 1..n {
            let mut s = 0u64;
            for k in 1..=m {
                let dk: u64 = (1..=k).filter(|d| k % d == 0).map(|d| d as u64 * a[d]).sum();
                s += dk * a[m - k + 1];
            }
            a[m + 1] = s / m as u64;
        }
        a
    }

    #[test]
    fn tree_counts() {
        let a = abstract_tree_counts(6);
        for n in 1..=6 {
            assert_eq!(trees(n, TreeMode::Abstract).len() as u64, a[n]);
        }
        let planar: Vec<usize> = (1..=6).map(|n| planar_trees(n).len()).collect();
        assert_eq!(planar, vec![1, 1, 2, 5, 14, 42]);
    }

    #[test]
    fn examples() {
        let d = ck_coproduct(&vec![pt()], TreeMode::Planar, 5).unwrap();
        assert_eq!(d, Tensor2::basis(pair(vec![pt()], vec![])).add(&Tensor2::basis(pair(vec![], vec![pt()]))));
        let l2 = RTree::ladder(2);
        let d = ck_coproduct(&vec![l2.clone()], TreeMode::Planar, 5).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.coeff(&pair(vec![pt()], vec![pt()])), q(1));
        let c3 = RTree::corolla(3);
        let d = ck_coproduct(&vec![c3.clone()], TreeMode::Abstract, 5).unwrap();
        assert_eq!(d.coeff(&pair(vec![pt()], vec![l2.clone()])), q(2));
        assert_eq!(d.coeff(&pair(vec![pt(), pt()], vec![pt()])), q(1));
        assert_eq!(d.coeff(&pair(vec![c3.clone()], vec![])), q(1));
        assert_eq!(d.coeff(&pair(vec![], vec![c3])), q(1));
        assert_eq!(d.len(), 4);
        assert!(matches!(ck_coproduct(&vec![RTree::ladder(6)], TreeMode::Planar, 5), Err(HopfError::BoundExceeded { .. })));
    }

    #[test]
    fn oracle_agrees() {
        for mode in [TreeMode::Planar, TreeMode::Abstract] {
            for n in 1..=5 {
                for t in trees(n, mode) {
                    assert_eq!(
                        ck_coproduct(&vec![t.clone()], mode, 5).unwrap(),
                        admissible_cuts_oracle(&t, mode, 5).unwrap(),
                        "{t:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn cooperad_version_is_flipped() {
        for t in trees(4, TreeMode::Planar) {
            let x = OperadElement::basis(tree_to_term(&t));
            let d = cooperad_mult_coproduct(&x, 5).unwrap();
            assert_eq!(crate::linear::flip(&d), ck_coproduct(&vec![t], TreeMode::Planar, 5).unwrap());
        }
        let alg = CkAlgebra { mode: TreeMode::Planar, bound: 5 };
        let prod = ck_coproduct(&vec![pt(), pt()], TreeMode::Planar, 5).unwrap();
        let d1 = alg.delta(&vec![pt()]).unwrap();
        assert_eq!(prod, tensor_product(&alg, &d1, &d1));
    }

    #[test]
    fn planar_axioms_small() {
        let alg = CkAlgebra { mode: TreeMode::Planar, bound: 4 };
        let basis: Vec<Forest> = (0..=3).flat_map(|n| forests(n, TreeMode::Planar)).collect();
        for f in &basis {
            assert!(coassociativity_defect(&alg, f).unwrap().is_zero());
            let (l, r) = counit_defects(&alg, f).unwrap();
            assert!(l.is_zero() && r.is_zero());
        }
        for a in &basis {
            for b in &basis {
                if forest_size(a) + forest_size(b) <= 3 {
                    assert!(compatibility_defect(&alg, a, b).unwrap().is_zero());
                }
            }
        }
        let s = Antipode::new(&alg, 4);
        assert_eq!(s.basis(&vec![pt()]).unwrap(), FormalSum::term(vec![pt()], q(-1)));
        for f in &basis {
            let (l, r) = s.convolution_defects(f).unwrap();
            assert!(l.is_zero() && r.is_zero());
        }
        assert_ne!(alg.mul(&vec![pt()], &vec![RTree::ladder(2)]), alg.mul(&vec![RTree::ladder(2)], &vec![pt()]));
    }

    #[test]
    fn forest_json() {
        let f: Forest = serde_json::from_str("[[], [[]]]").unwrap();
        assert_eq!(f, vec![pt(), RTree::ladder(2)]);
        assert_eq!(serde_json::to_string(&vec![RTree::corolla(3)]).unwrap(), "[[[],[]]]");
    }
}
