//! Exact rational coefficients and finite formal linear combinations.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Ratio;
use num_traits::{One, Signed, Zero};

/// Exact rational coefficient.
pub type Q = Ratio<i64>;

/// Integer literal as a coefficient.
pub fn q(n: i64) -> Q {
    Q::from_integer(n)
}

/// Renders a coefficient as `p/q` (always with an explicit denominator).
pub fn format_coeff(c: &Q) -> String {
    format!("{}/{}", c.numer(), c.denom())
}

/// Parses `p`, `-p` or `p/q`.
pub fn parse_coeff(s: &str) -> Option<Q> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: i64 = n.trim().parse().ok()?;
            let d: i64 = d.trim().parse().ok()?;
            if d == 0 {
                None
            } else {
                Some(Q::new(n, d))
            }
        }
        None => s.parse::<i64>().ok().map(q),
    }
}

/// A finite linear combination of basis keys with rational coefficients.
///
/// Keys are kept in a `BTreeMap`, so iteration order is the key order and
/// independent of insertion order. Zero coefficients are never stored.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FormalSum<K: Ord> {
    terms: BTreeMap<K, Q>,
}

impl<K: Ord> Default for FormalSum<K> {
    fn default() -> Self {
        Self {
            terms: BTreeMap::new(),
        }
    }
}

impl<K: Ord + fmt::Debug> fmt::Debug for FormalSum<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({}){:?}", c, k)?;
        }
        Ok(())
    }
}

impl<K: Ord + Clone> FormalSum<K> {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn basis(k: K) -> Self {
        Self::term(k, Q::one())
    }

    pub fn term(k: K, c: Q) -> Self {
        let mut s = Self::zero();
        s.add_term(k, c);
        s
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, k: &K) -> Q {
        self.terms.get(k).copied().unwrap_or_else(Q::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &Q)> {
        self.terms.iter()
    }

    pub fn keys(&self) -> impl Iterator<Item = &K> {
        self.terms.keys()
    }

    pub fn add_term(&mut self, k: K, c: Q) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(k) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (k, c) in &other.terms {
            self.add_term(k.clone(), *c);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut s = self.clone();
        s.add_assign(other);
        s
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-Q::one()))
    }

    pub fn scale(&self, c: Q) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(k, v)| (k.clone(), *v * c)).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        self.scale(-Q::one())
    }

    /// Applies a linear map given on basis keys.
    pub fn map_linear<L: Ord + Clone>(&self, mut f: impl FnMut(&K) -> FormalSum<L>) -> FormalSum<L> {
        let mut out = FormalSum::zero();
        for (k, c) in &self.terms {
            out.add_assign(&f(k).scale(*c));
        }
        out
    }

    /// Re-indexes keys, summing coefficients of keys that collide.
    pub fn map_keys<L: Ord + Clone>(&self, mut f: impl FnMut(&K) -> L) -> FormalSum<L> {
        let mut out = FormalSum::zero();
        for (k, c) in &self.terms {
            out.add_term(f(k), *c);
        }
        out
    }

    /// Bilinear extension of a product given on basis keys.
    pub fn bilinear<R: Ord + Clone, L: Ord + Clone>(
        &self,
        other: &FormalSum<R>,
        mut f: impl FnMut(&K, &R) -> FormalSum<L>,
    ) -> FormalSum<L> {
        let mut out = FormalSum::zero();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                out.add_assign(&f(a, b).scale(*ca * *cb));
            }
        }
        out
    }

    /// Largest absolute coefficient; zero for the empty sum.
    pub fn max_abs_coeff(&self) -> Q {
        self.terms
            .values()
            .map(|c| c.abs())
            .max()
            .unwrap_or_else(Q::zero)
    }
}

impl<K: Ord + Clone> FromIterator<(K, Q)> for FormalSum<K> {
    fn from_iter<I: IntoIterator<Item = (K, Q)>>(iter: I) -> Self {
        let mut s = Self::zero();
        for (k, c) in iter {
            s.add_term(k, c);
        }
        s
    }
}

/// Elements of a tensor square, keyed by ordered pairs.
pub type Tensor2<K> = FormalSum<(K, K)>;

/// Swaps the two tensor factors.
pub fn flip<K: Ord + Clone>(t: &Tensor2<K>) -> Tensor2<K> {
    t.map_keys(|(a, b)| (b.clone(), a.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cancellation_removes_keys() {
        let mut s = FormalSum::basis("a");
        s.add_term("b", q(2));
        s.add_term("a", q(-1));
        assert_eq!(s.len(), 1);
        assert_eq!(s.coeff(&"b"), q(2));
        assert_eq!(s.coeff(&"a"), q(0));
    }

    #[test]
    fn coefficient_strings() {
        assert_eq!(format_coeff(&Q::new(-3, 6)), "-1/2");
        assert_eq!(format_coeff(&q(4)), "4/1");
        assert_eq!(parse_coeff("-1/2"), Some(Q::new(-1, 2)));
        assert_eq!(parse_coeff("7"), Some(q(7)));
        assert_eq!(parse_coeff("1/0"), None);
    }

    #[test]
    fn bilinear_distributes() {
        let x = FormalSum::basis(1).add(&FormalSum::term(2, q(3)));
        let y = FormalSum::term(10, Q::new(1, 2));
        let p = x.bilinear(&y, |a, b| FormalSum::basis(a + b));
        assert_eq!(p.coeff(&11), Q::new(1, 2));
        assert_eq!(p.coeff(&12), Q::new(3, 2));
    }
}
