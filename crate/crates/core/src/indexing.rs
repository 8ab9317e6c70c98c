//! Multi-indices over Z₊^m and the integer combinatorics of Leibniz sums.

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IndexError {
    #[error("dimension mismatch: {0} vs {1}")]
    Dimension(usize, usize),
    #[error("{sub} is not dominated by {sup}")]
    NotDominated { sub: MultiIndex, sup: MultiIndex },
    #[error("coordinate {coord} out of range for m = {m}")]
    Coordinate { coord: usize, m: usize },
}

/// An element of Z₊^m.
///
/// Ordering is graded-lexicographic: by total degree first, then larger
/// leading entries first, so `(0,0) < (1,0) < (0,1) < (2,0)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        Self(entries)
    }

    pub fn zero(m: usize) -> Self {
        Self(vec![0; m])
    }

    /// Unit index e_i, with `i` zero-based.
    pub fn unit(m: usize, i: usize) -> Self {
        let mut v = vec![0; m];
        v[i] = 1;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn get(&self, i: usize) -> u32 {
        self.0[i]
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }

    /// |I| = i₁ + ⋯ + i_m.
    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// I! = i₁!⋯i_m!
    pub fn factorial(&self) -> u128 {
        self.0.iter().map(|&k| factorial(k)).product()
    }

    /// Entrywise I ≤ J.
    pub fn le(&self, other: &Self) -> bool {
        self.dim() == other.dim() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim(), "multi-index dimension mismatch");
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, IndexError> {
        if self.dim() != other.dim() {
            return Err(IndexError::Dimension(self.dim(), other.dim()));
        }
        if !other.le(self) {
            return Err(IndexError::NotDominated {
                sub: other.clone(),
                sup: self.clone(),
            });
        }
        Ok(Self(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()))
    }

    pub fn with_added(&self, i: usize, k: u32) -> Self {
        let mut v = self.0.clone();
        v[i] += k;
        Self(v)
    }

    /// Decrement coordinate `i`, if positive.
    pub fn lowered(&self, i: usize) -> Option<Self> {
        if self.0[i] == 0 {
            return None;
        }
        let mut v = self.0.clone();
        v[i] -= 1;
        Some(Self(v))
    }

    /// All K with 0 ≤ K ≤ self, in graded-lex order.
    pub fn dominated(&self) -> Vec<MultiIndex> {
        let mut out = vec![];
        let mut cur = vec![0u32; self.dim()];
        loop {
            out.push(Self(cur.clone()));
            let mut i = 0;
            loop {
                if i == cur.len() {
                    out.sort();
                    return out;
                }
                if cur[i] < self.0[i] {
                    cur[i] += 1;
                    break;
                }
                cur[i] = 0;
                i += 1;
            }
        }
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total_degree().cmp(&other.total_degree()).then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, x) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        Self(v)
    }
}

impl<const N: usize> From<[u32; N]> for MultiIndex {
    fn from(v: [u32; N]) -> Self {
        Self(v.to_vec())
    }
}

// ----------------------------------------------------------------------------
// Combinatorics

pub fn factorial(k: u32) -> u128 {
    (1..=k as u128).product()
}

pub fn binomial(n: u32, k: u32) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// |I|.
pub fn total_degree(i: &MultiIndex) -> u32 {
    i.total_degree()
}

/// I! / (I₁! (I − I₁)!), exact.
pub fn multinomial(i: &MultiIndex, i1: &MultiIndex) -> Result<u128, IndexError> {
    i.checked_sub(i1)?;
    Ok(i.0.iter().zip(&i1.0).map(|(&a, &b)| binomial(a, b)).product())
}

/// Bound for [`enumerate_upto`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Bound {
    /// |I| ≤ cap.
    Total(u32),
    /// I ≤ bound entrywise.
    Entrywise(MultiIndex),
}

/// Every multi-index within `bound`, graded-lex ordered.
pub fn enumerate_upto(m: usize, bound: &Bound) -> Vec<MultiIndex> {
    assert!(m >= 1, "dimension must be positive");
    match bound {
        Bound::Total(cap) => {
            let mut out = vec![];
            for d in 0..=*cap {
                out.extend(of_degree(m, d));
            }
            out
        }
        Bound::Entrywise(b) => {
            assert_eq!(b.dim(), m, "bound dimension mismatch");
            b.dominated()
        }
    }
}

/// Multi-indices with |I| = d, graded-lex ordered.
pub fn of_degree(m: usize, d: u32) -> Vec<MultiIndex> {
    fn rec(m: usize, pos: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if pos == m - 1 {
            cur[pos] = left;
            out.push(MultiIndex(cur.clone()));
            return;
        }
        for k in (0..=left).rev() {
            cur[pos] = k;
            rec(m, pos + 1, left - k, cur, out);
        }
        cur[pos] = 0;
    }
    let mut out = vec![];
    rec(m, 0, d, &mut vec![0; m], &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    #[test]
    fn degrees() {
        assert_eq!(total_degree(&mi(&[0, 0])), 0);
        assert_eq!(total_degree(&mi(&[1, 2, 0])), 3);
        assert_eq!(total_degree(&MultiIndex::unit(4, 2)), 1);
    }

    #[test]
    fn multinomials() {
        assert_eq!(multinomial(&mi(&[2, 1]), &mi(&[1, 0])).unwrap(), 2);
        assert_eq!(multinomial(&mi(&[4, 7]), &mi(&[0, 0])).unwrap(), 1);
        assert_eq!(multinomial(&mi(&[3]), &mi(&[1])).unwrap(), 3);
        assert!(multinomial(&mi(&[1, 0]), &mi(&[0, 1])).is_err());
    }

    #[test]
    fn enumeration_examples() {
        assert_eq!(enumerate_upto(2, &Bound::Total(1)), vec![mi(&[0, 0]), mi(&[1, 0]), mi(&[0, 1])]);
        assert_eq!(enumerate_upto(1, &Bound::Total(2)), vec![mi(&[0]), mi(&[1]), mi(&[2])]);
        assert_eq!(
            enumerate_upto(2, &Bound::Entrywise(mi(&[1, 1]))),
            vec![mi(&[0, 0]), mi(&[1, 0]), mi(&[0, 1]), mi(&[1, 1])]
        );
    }

    #[test]
    fn counts_match_stars_and_bars() {
        // #{I in Z₊^m : |I| ≤ N} = C(N+m, m)
        for m in 1..4 {
            for n in 0..7 {
                let got = enumerate_upto(m, &Bound::Total(n)).len() as u128;
                assert_eq!(got, binomial(n + m as u32, m as u32));
            }
        }
    }

    fn index(m: usize, max: u32) -> impl Strategy<Value = MultiIndex> {
        prop::collection::vec(0..=max, m).prop_map(MultiIndex::new)
    }

    proptest! {
        #[test]
        fn pascal_identity(j in index(3, 4), l in 0usize..3) {
            let jl = j.with_added(l, 1);
            for k in jl.dominated() {
                if k.get(l) == 0 {
                    continue;
                }
                let lhs = multinomial(&jl, &k).unwrap();
                let left = multinomial(&j, &k.lowered(l).unwrap()).unwrap_or(0);
                let right = multinomial(&j, &k).unwrap_or(0);
                prop_assert_eq!(lhs, left + right);
            }
        }

        #[test]
        fn enumeration_strictly_ordered(m in 1usize..4, cap in 0u32..6) {
            let v = enumerate_upto(m, &Bound::Total(cap));
            for w in v.windows(2) {
                prop_assert!(w[0] < w[1]);
            }
        }

        #[test]
        fn entrywise_enumeration_ordered(b in index(3, 3)) {
            let v = enumerate_upto(3, &Bound::Entrywise(b.clone()));
            prop_assert_eq!(v.len() as u32, b.entries().iter().map(|x| x + 1).product::<u32>());
            for w in v.windows(2) {
                prop_assert!(w[0] < w[1]);
            }
        }

        #[test]
        fn multinomial_symmetric(i in index(3, 5)) {
            for k in i.dominated() {
                let c = i.checked_sub(&k).unwrap();
                prop_assert_eq!(multinomial(&i, &k).unwrap(), multinomial(&i, &c).unwrap());
            }
        }
    }
}
