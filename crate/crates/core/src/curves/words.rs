//! Symbolic words in the derivatives of 𝓘 with integer coefficients.
//!
//! A word is a product of factors 𝓘, D^I𝓘 and D̄^J𝓘. Differentiating a word
//! uses the product rule; a mixed derivative of a single factor is rewritten
//! through the commutator identities
//!
//! D̄_k D^I𝓘 = D^I𝓘·D̄_k𝓘 − D̄_k𝓘·D^I𝓘 − Σ_{0<I₁<I} C(I,I₁) D^{I−I₁}𝓘·D̄_k𝓘·D^{I₁}𝓘
//!
//! and its mirror for D_l D̄^J𝓘. Words are then reduced with the exact
//! relations D^I𝓘·D^{I′}𝓘 = 0, D̄^J𝓘·D̄^{J′}𝓘 = 0, 𝓘·D^I𝓘 = 0, D^I𝓘·𝓘 = D^I𝓘,
//! 𝓘·D̄^J𝓘 = D̄^J𝓘, D̄^J𝓘·𝓘 = 0 (I, J ≠ 0) and 𝓘² = 𝓘.

use std::collections::BTreeMap;

use crate::indexing::{multinomial, MultiIndex};
use crate::scalar::{re, CMat, Real, C};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Factor {
    Id,
    Hol(MultiIndex),
    Anti(MultiIndex),
}

pub type Word = Vec<Factor>;

/// Which index set the mixed-derivative rewrite sums over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MixedRule {
    /// Every I₁ with 0 < I₁ < I, once.
    Strict,
    /// ⋃_p {I₁ : e_p ≤ I₁ ≤ I − e_p}, counted once per p. Agrees with
    /// `Strict` when m = 1 and differs for m ≥ 2.
    PerCoordinate,
}

fn inner_indices(i: &MultiIndex, rule: MixedRule) -> Vec<MultiIndex> {
    let m = i.dim();
    match rule {
        MixedRule::Strict => i.dominated().into_iter().filter(|k| !k.is_zero() && k != i).collect(),
        MixedRule::PerCoordinate => {
            let mut out = vec![];
            for p in 0..m {
                let Some(upper) = i.lowered(p) else { continue };
                let unit = MultiIndex::unit(m, p);
                out.extend(upper.dominated().into_iter().filter(|k| unit.le(k)));
            }
            out
        }
    }
}

/// Integer combination of words.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Expansion {
    pub terms: BTreeMap<Word, i64>,
}

impl Expansion {
    pub fn single(word: Word) -> Self {
        let mut e = Self::default();
        e.add(word, 1);
        e
    }

    /// 𝓘 itself.
    pub fn identity() -> Self {
        Self::single(vec![Factor::Id])
    }

    /// 𝒦(𝓘) = Σ_{k,l} D̄_k𝓘·D_l𝓘.
    pub fn curvature(m: usize) -> Self {
        let mut e = Self::default();
        for k in 0..m {
            for l in 0..m {
                e.add(vec![Factor::Anti(MultiIndex::unit(m, k)), Factor::Hol(MultiIndex::unit(m, l))], 1);
            }
        }
        e
    }

    pub fn add(&mut self, word: Word, c: i64) {
        let Some(word) = reduce(word) else { return };
        let e = self.terms.entry(word.clone()).or_insert(0);
        *e += c;
        if *e == 0 {
            self.terms.remove(&word);
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// D_l of the expansion (zero-based coordinate).
    pub fn d_hol(&self, l: usize, m: usize, rule: MixedRule) -> Self {
        self.differentiate(|f| d_hol_factor(f, l, m, rule))
    }

    /// D̄_k of the expansion.
    pub fn d_anti(&self, k: usize, m: usize, rule: MixedRule) -> Self {
        self.differentiate(|f| d_anti_factor(f, k, m, rule))
    }

    fn differentiate(&self, rule: impl Fn(&Factor) -> Vec<(Word, i64)>) -> Self {
        let mut out = Self::default();
        for (word, c) in &self.terms {
            for (pos, f) in word.iter().enumerate() {
                for (piece, k) in rule(f) {
                    let mut w = word[..pos].to_vec();
                    w.extend(piece);
                    w.extend_from_slice(&word[pos + 1..]);
                    out.add(w, c * k);
                }
            }
        }
        out
    }

    /// 𝓘·X.
    pub fn prepend_id(&self) -> Self {
        self.map_words(|w| {
            let mut v = vec![Factor::Id];
            v.extend(w.iter().cloned());
            v
        })
    }

    /// X·𝓘.
    pub fn append_id(&self) -> Self {
        self.map_words(|w| {
            let mut v = w.clone();
            v.push(Factor::Id);
            v
        })
    }

    fn map_words(&self, f: impl Fn(&Word) -> Word) -> Self {
        let mut out = Self::default();
        for (w, c) in &self.terms {
            out.add(f(w), *c);
        }
        out
    }

    /// Numerical value, given the matrix of each factor.
    pub fn evaluate<T: Real>(&self, value: &dyn Fn(&Factor) -> CMat<T>, dim: usize) -> CMat<T> {
        let mut acc = CMat::<T>::zeros(dim, dim);
        for (w, c) in &self.terms {
            let mut prod = value(&w[0]);
            for f in &w[1..] {
                prod *= value(f);
            }
            acc += prod * C::new(re::<T>(*c as f64), T::zero());
        }
        acc
    }
}

fn d_hol_factor(f: &Factor, l: usize, m: usize, rule: MixedRule) -> Vec<(Word, i64)> {
    let el = MultiIndex::unit(m, l);
    match f {
        Factor::Id => vec![(vec![Factor::Hol(el)], 1)],
        Factor::Hol(i) => vec![(vec![Factor::Hol(i.add(&el))], 1)],
        Factor::Anti(j) => {
            let mut out = vec![
                (vec![Factor::Hol(el.clone()), Factor::Anti(j.clone())], 1),
                (vec![Factor::Anti(j.clone()), Factor::Hol(el.clone())], -1),
            ];
            for j1 in inner_indices(j, rule) {
                let c = multinomial(j, &j1).unwrap() as i64;
                let rest = j.checked_sub(&j1).unwrap();
                out.push((vec![Factor::Anti(rest), Factor::Hol(el.clone()), Factor::Anti(j1)], -c));
            }
            out
        }
    }
}

fn d_anti_factor(f: &Factor, k: usize, m: usize, rule: MixedRule) -> Vec<(Word, i64)> {
    let ek = MultiIndex::unit(m, k);
    match f {
        Factor::Id => vec![(vec![Factor::Anti(ek)], 1)],
        Factor::Anti(j) => vec![(vec![Factor::Anti(j.add(&ek))], 1)],
        Factor::Hol(i) => {
            let mut out = vec![
                (vec![Factor::Hol(i.clone()), Factor::Anti(ek.clone())], 1),
                (vec![Factor::Anti(ek.clone()), Factor::Hol(i.clone())], -1),
            ];
            for i1 in inner_indices(i, rule) {
                let c = multinomial(i, &i1).unwrap() as i64;
                let rest = i.checked_sub(&i1).unwrap();
                out.push((vec![Factor::Hol(rest), Factor::Anti(ek.clone()), Factor::Hol(i1)], -c));
            }
            out
        }
    }
}

/// Reduce a word with the product relations; `None` when it vanishes.
pub fn reduce(word: Word) -> Option<Word> {
    let mut stack: Vec<Factor> = Vec::with_capacity(word.len());
    for f in word {
        let mut cur = f;
        loop {
            let Some(top) = stack.last() else { break };
            let merged = match (top, &cur) {
                (Factor::Hol(_), Factor::Hol(_)) | (Factor::Anti(_), Factor::Anti(_)) => return None,
                (Factor::Id, Factor::Hol(_)) | (Factor::Anti(_), Factor::Id) => return None,
                (Factor::Hol(_), Factor::Id) => Some(stack.pop().unwrap()),
                (Factor::Id, Factor::Anti(_)) => {
                    stack.pop();
                    Some(cur.clone())
                }
                (Factor::Id, Factor::Id) => Some(stack.pop().unwrap()),
                _ => None,
            };
            match merged {
                Some(m) => cur = m,
                None => break,
            }
        }
        stack.push(cur);
    }
    Some(stack)
}

/// Σ of the Hol and Anti factor orders of a word.
pub fn degrees(word: &Word) -> (u32, u32) {
    let mut out = (0, 0);
    for f in word {
        match f {
            Factor::Hol(i) => out.0 += i.total_degree(),
            Factor::Anti(j) => out.1 += j.total_degree(),
            Factor::Id => {}
        }
    }
    out
}

/// Whether a word alternates Hol and Anti factors with no 𝓘 factor (or is 𝓘).
pub fn alternates(word: &Word) -> bool {
    if word == &vec![Factor::Id] {
        return true;
    }
    word.iter().all(|f| !matches!(f, Factor::Id))
        && word.windows(2).all(|w| {
            matches!(
                (&w[0], &w[1]),
                (Factor::Hol(_), Factor::Anti(_)) | (Factor::Anti(_), Factor::Hol(_))
            )
        })
}
