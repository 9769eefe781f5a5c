//! Bialgebras of factorizations: a common interface, the generic checks of
//! the axioms and the antipode by degree recursion.

pub mod morphisms;
pub mod trees;

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;
use thiserror::Error;

use crate::linear::{q, FormalSum, Tensor2, Q};
use crate::morphism_calculus::CalcError;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HopfError {
    #[error("degree {degree} exceeds bound {bound}")]
    BoundExceeded { degree: usize, bound: usize },
    #[error("not connected: {0}")]
    NotConnected(String),
    #[error(transparent)]
    Calc(#[from] CalcError),
}

pub type Tensor3<K> = FormalSum<(K, K, K)>;

/// A graded bialgebra given on a basis.
pub trait Bialgebra {
    type Key: Ord + Clone + fmt::Debug;

    fn unit(&self) -> Self::Key;
    fn degree(&self, k: &Self::Key) -> usize;
    fn mul(&self, a: &Self::Key, b: &Self::Key) -> FormalSum<Self::Key>;
    fn delta(&self, k: &Self::Key) -> Result<Tensor2<Self::Key>, HopfError>;
    fn epsilon(&self, k: &Self::Key) -> Q;
}

pub fn product<A: Bialgebra>(alg: &A, x: &FormalSum<A::Key>, y: &FormalSum<A::Key>) -> FormalSum<A::Key> {
    x.bilinear(y, |a, b| alg.mul(a, b))
}

pub fn coproduct<A: Bialgebra>(alg: &A, x: &FormalSum<A::Key>) -> Result<Tensor2<A::Key>, HopfError> {
    let mut out = Tensor2::zero();
    for (k, c) in x.iter() {
        out.add_assign(&alg.delta(k)?.scale(*c));
    }
    Ok(out)
}

pub fn counit<A: Bialgebra>(alg: &A, x: &FormalSum<A::Key>) -> Q {
    x.iter().fold(Q::zero(), |acc, (k, c)| acc + *c * alg.epsilon(k))
}

/// Componentwise product `(a⊗b)(c⊗d) = ac⊗bd`.
pub fn tensor_product<A: Bialgebra>(alg: &A, x: &Tensor2<A::Key>, y: &Tensor2<A::Key>) -> Tensor2<A::Key> {
    x.bilinear(y, |(a, b), (c, d)| {
        let left = alg.mul(a, c);
        let right = alg.mul(b, d);
        left.bilinear(&right, |l, r| Tensor2::basis((l.clone(), r.clone())))
    })
}

/// `(Δ⊗id)Δ(k) − (id⊗Δ)Δ(k)`.
pub fn coassociativity_defect<A: Bialgebra>(alg: &A, k: &A::Key) -> Result<Tensor3<A::Key>, HopfError> {
    let d = alg.delta(k)?;
    let mut out = Tensor3::zero();
    for ((a, b), c) in d.iter() {
        for ((x, y), e) in alg.delta(a)?.iter() {
            out.add_term((x.clone(), y.clone(), b.clone()), *c * *e);
        }
        for ((x, y), e) in alg.delta(b)?.iter() {
            out.add_term((a.clone(), x.clone(), y.clone()), -*c * *e);
        }
    }
    Ok(out)
}

/// Left and right defects of a two-sided identity.
pub type Defects<K> = (FormalSum<K>, FormalSum<K>);

/// `((ε⊗id)Δ(k) − k, (id⊗ε)Δ(k) − k)`.
pub fn counit_defects<A: Bialgebra>(alg: &A, k: &A::Key) -> Result<Defects<A::Key>, HopfError> {
    let d = alg.delta(k)?;
    let mut left = FormalSum::term(k.clone(), q(-1));
    let mut right = left.clone();
    for ((a, b), c) in d.iter() {
        left.add_term(b.clone(), *c * alg.epsilon(a));
        right.add_term(a.clone(), *c * alg.epsilon(b));
    }
    Ok((left, right))
}

/// `Δ(ab) − Δ(a)Δ(b)`.
pub fn compatibility_defect<A: Bialgebra>(alg: &A, a: &A::Key, b: &A::Key) -> Result<Tensor2<A::Key>, HopfError> {
    let lhs = coproduct(alg, &alg.mul(a, b))?;
    let rhs = tensor_product(alg, &alg.delta(a)?, &alg.delta(b)?);
    Ok(lhs.sub(&rhs))
}

/// Every summand `x⊗y` of `Δ(k)` has `deg x + deg y = deg k`.
pub fn respects_grading<A: Bialgebra>(alg: &A, k: &A::Key) -> Result<bool, HopfError> {
    let n = alg.degree(k);
    Ok(alg.delta(k)?.keys().all(|(a, b)| alg.degree(a) + alg.degree(b) == n))
}

/// The antipode of a connected graded bialgebra, memoized per basis key.
pub struct Antipode<'a, A: Bialgebra> {
    alg: &'a A,
    bound: usize,
    memo: RefCell<BTreeMap<A::Key, FormalSum<A::Key>>>,
}

impl<'a, A: Bialgebra> Antipode<'a, A> {
    pub fn new(alg: &'a A, bound: usize) -> Self {
        Antipode { alg, bound, memo: RefCell::new(BTreeMap::new()) }
    }

    /// `S(k) = (ε(k)·1 − Σ′ S(k′)k″) / c`, the sum over all summands except
    /// `c·k⊗1`, each of lower degree on the left.
    pub fn basis(&self, k: &A::Key) -> Result<FormalSum<A::Key>, HopfError> {
        if let Some(s) = self.memo.borrow().get(k) {
            return Ok(s.clone());
        }
        let unit = self.alg.unit();
        let n = self.alg.degree(k);
        if n > self.bound {
            return Err(HopfError::BoundExceeded { degree: n, bound: self.bound });
        }
        let s = if *k == unit {
            FormalSum::basis(unit)
        } else {
            if n == 0 {
                return Err(HopfError::NotConnected(format!("degree-0 class {k:?} besides the unit")));
            }
            let d = self.alg.delta(k)?;
            let lead = d.coeff(&(k.clone(), unit.clone()));
            if lead.is_zero() {
                return Err(HopfError::NotConnected(format!("{k:?}⊗1 missing from the coproduct")));
            }
            let mut acc = FormalSum::term(unit.clone(), self.alg.epsilon(k));
            for ((a, b), c) in d.iter() {
                if a == k && *b == unit {
                    continue;
                }
                if self.alg.degree(a) >= n {
                    return Err(HopfError::NotConnected(format!("{a:?} of degree ≥ {n} in Δ({k:?})")));
                }
                let sa = self.basis(a)?;
                acc = acc.sub(&product(self.alg, &sa, &FormalSum::basis(b.clone())).scale(*c));
            }
            acc.scale(Q::from_integer(1) / lead)
        };
        self.memo.borrow_mut().insert(k.clone(), s.clone());
        Ok(s)
    }

    pub fn apply(&self, x: &FormalSum<A::Key>) -> Result<FormalSum<A::Key>, HopfError> {
        let mut out = FormalSum::zero();
        for (k, c) in x.iter() {
            out.add_assign(&self.basis(k)?.scale(*c));
        }
        Ok(out)
    }

    /// `(m(S⊗id)Δ(k) − ηε(k), m(id⊗S)Δ(k) − ηε(k))`.
    pub fn convolution_defects(&self, k: &A::Key) -> Result<Defects<A::Key>, HopfError> {
        let d = self.alg.delta(k)?;
        let eta = FormalSum::term(self.alg.unit(), self.alg.epsilon(k));
        let mut left = eta.neg();
        let mut right = eta.neg();
        for ((a, b), c) in d.iter() {
            let sa = self.basis(a)?;
            let sb = self.basis(b)?;
            left.add_assign(&product(self.alg, &sa, &FormalSum::basis(b.clone())).scale(*c));
            right.add_assign(&product(self.alg, &FormalSum::basis(a.clone()), &sb).scale(*c));
        }
        Ok((left, right))
    }
}
