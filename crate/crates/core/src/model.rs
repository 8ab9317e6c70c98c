//! Truncated kernel models: diagonal kernels, polynomial sections and frames,
//! jet-bundle and OFB_n frames, and the FB₂ operator data.

use std::collections::BTreeMap;

use nalgebra::ComplexField;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::indexing::{binomial, enumerate_upto, Bound, MultiIndex};
use crate::jets::WirtingerJet;
use crate::scalar::{re, to_f64, CMat, Point, Real, C};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("weight a_{index} = {value} is not positive")]
    Weight { index: MultiIndex, value: f64 },
    #[error("preset {0} requires m = 1")]
    NeedsOneVariable(&'static str),
    #[error("expected {expected} weights, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("dimension mismatch: {0} vs {1}")]
    Dimension(usize, usize),
    #[error("sections are dependent at {point}: smallest singular value {sigma:e}")]
    Dependent { point: String, sigma: f64 },
    #[error("derivative order {order} exceeds section degree {degree}")]
    Degenerate { order: u32, degree: u32 },
    #[error("φ₀₀ vanishes at {0}")]
    VanishingMultiplier(String),
    #[error("coupling scale must be non-zero")]
    ZeroCoupling,
}

/// Smallest singular value accepted for a frame at a sample point.
pub const INDEPENDENCE_FLOOR: f64 = 1e-10;

// ----------------------------------------------------------------------------
// Polynomials

/// Polynomial in λ ∈ ℂ^m with complex coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial<T: Real> {
    m: usize,
    terms: BTreeMap<MultiIndex, C<T>>,
}

impl<T: Real> Polynomial<T> {
    pub fn zero(m: usize) -> Self {
        Self { m, terms: BTreeMap::new() }
    }

    pub fn constant(m: usize, c: C<T>) -> Self {
        Self::monomial(MultiIndex::zero(m), c)
    }

    pub fn monomial(exp: MultiIndex, c: C<T>) -> Self {
        let mut p = Self::zero(exp.dim());
        p.add_term(exp, c);
        p
    }

    /// Univariate polynomial from coefficients c₀ + c₁λ + ⋯
    pub fn univariate(coeffs: &[C<T>]) -> Self {
        let mut p = Self::zero(1);
        for (k, c) in coeffs.iter().enumerate() {
            p.add_term(MultiIndex::new(vec![k as u32]), *c);
        }
        p
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &C<T>)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|k| k.total_degree()).max().unwrap_or(0)
    }

    pub fn add_term(&mut self, exp: MultiIndex, c: C<T>) {
        assert_eq!(exp.dim(), self.m, "monomial dimension mismatch");
        if c == C::new(T::zero(), T::zero()) {
            return;
        }
        let e = self.terms.entry(exp.clone()).or_insert(C::new(T::zero(), T::zero()));
        *e += c;
        if *e == C::new(T::zero(), T::zero()) {
            self.terms.remove(&exp);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(k.clone(), *c);
        }
        out
    }

    pub fn scale(&self, s: C<T>) -> Self {
        let mut out = Self::zero(self.m);
        for (k, c) in &self.terms {
            out.add_term(k.clone(), *c * s);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.m);
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                out.add_term(ka.add(kb), *ca * *cb);
            }
        }
        out
    }

    /// ∂/∂λ_i, zero-based.
    pub fn derivative(&self, i: usize) -> Self {
        let mut out = Self::zero(self.m);
        for (k, c) in &self.terms {
            if let Some(low) = k.lowered(i) {
                out.add_term(low, *c * C::new(re::<T>(k.get(i) as f64), T::zero()));
            }
        }
        out
    }

    /// D^I, applied coordinate-wise.
    pub fn derivative_multi(&self, idx: &MultiIndex) -> Self {
        let mut out = self.clone();
        for i in 0..idx.dim() {
            for _ in 0..idx.get(i) {
                out = out.derivative(i);
            }
        }
        out
    }

    pub fn eval(&self, at: &[C<T>]) -> C<T> {
        let mut acc = C::new(T::zero(), T::zero());
        for (k, c) in &self.terms {
            let mut t = *c;
            for (i, &e) in k.entries().iter().enumerate() {
                t *= at[i].powu(e);
            }
            acc += t;
        }
        acc
    }

    /// Taylor coefficients D^I p(base)/I! for every listed I:
    /// Σ_K c_K Π_i C(K_i, I_i) base_i^{K_i − I_i}.
    pub fn taylor(&self, base: &[C<T>], indices: &[MultiIndex]) -> Vec<C<T>> {
        let maxdeg = self.degree() as usize;
        let powers: Vec<Vec<C<T>>> = base
            .iter()
            .map(|b| {
                let mut v = vec![C::new(T::one(), T::zero()); maxdeg + 1];
                for k in 1..=maxdeg {
                    v[k] = v[k - 1] * *b;
                }
                v
            })
            .collect();
        indices
            .iter()
            .map(|idx| {
                let mut acc = C::new(T::zero(), T::zero());
                for (k, c) in &self.terms {
                    if !idx.le(k) {
                        continue;
                    }
                    let mut t = *c;
                    for i in 0..self.m {
                        let (ki, ii) = (k.get(i), idx.get(i));
                        t *= powers[i][(ki - ii) as usize] * C::new(re::<T>(binomial(ki, ii) as f64), T::zero());
                    }
                    acc += t;
                }
                acc
            })
            .collect()
    }
}

// ----------------------------------------------------------------------------
// Sections and frames

/// Holomorphic map Ω → ℂ^D with polynomial entries.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialSection<T: Real> {
    pub entries: Vec<Polynomial<T>>,
}

impl<T: Real> PolynomialSection<T> {
    pub fn new(entries: Vec<Polynomial<T>>) -> Self {
        Self { entries }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn m(&self) -> usize {
        self.entries.first().map(|p| p.m()).unwrap_or(1)
    }

    pub fn degree(&self) -> u32 {
        self.entries.iter().map(|p| p.degree()).max().unwrap_or(0)
    }

    pub fn eval(&self, at: &[C<T>]) -> Vec<C<T>> {
        self.entries.iter().map(|p| p.eval(at)).collect()
    }

    pub fn derivative(&self, i: usize) -> Self {
        Self::new(self.entries.iter().map(|p| p.derivative(i)).collect())
    }

    pub fn derivative_multi(&self, idx: &MultiIndex) -> Self {
        Self::new(self.entries.iter().map(|p| p.derivative_multi(idx)).collect())
    }

    pub fn scale(&self, s: C<T>) -> Self {
        Self::new(self.entries.iter().map(|p| p.scale(s)).collect())
    }

    pub fn mul_poly(&self, f: &Polynomial<T>) -> Self {
        Self::new(self.entries.iter().map(|p| p.mul(f)).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim(), "section dimension mismatch");
        Self::new(self.entries.iter().zip(&other.entries).map(|(a, b)| a.add(b)).collect())
    }

    pub fn zero(dim: usize, m: usize) -> Self {
        Self::new(vec![Polynomial::zero(m); dim])
    }

    /// U·s for a constant matrix U.
    pub fn apply(&self, u: &CMat<T>) -> Self {
        assert_eq!(u.ncols(), self.dim(), "matrix/section dimension mismatch");
        let m = self.m();
        let entries = (0..u.nrows())
            .map(|r| {
                let mut acc = Polynomial::zero(m);
                for (c, p) in self.entries.iter().enumerate() {
                    if u[(r, c)] != C::new(T::zero(), T::zero()) {
                        acc = acc.add(&p.scale(u[(r, c)]));
                    }
                }
                acc
            })
            .collect();
        Self::new(entries)
    }

    /// Embed into a larger space at entry offset `offset`.
    pub fn embed(&self, total: usize, offset: usize) -> Self {
        let m = self.m();
        let mut entries = vec![Polynomial::zero(m); total];
        for (k, p) in self.entries.iter().enumerate() {
            entries[offset + k] = p.clone();
        }
        Self::new(entries)
    }
}

/// Ordered tuple of sections sharing the ambient dimension D.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame<T: Real> {
    pub sections: Vec<PolynomialSection<T>>,
}

impl<T: Real> Frame<T> {
    pub fn new(sections: Vec<PolynomialSection<T>>) -> Result<Self, ModelError> {
        if let Some(first) = sections.first() {
            for s in &sections {
                if s.dim() != first.dim() {
                    return Err(ModelError::Dimension(first.dim(), s.dim()));
                }
            }
        }
        Ok(Self { sections })
    }

    pub fn rank(&self) -> usize {
        self.sections.len()
    }

    pub fn dim(&self) -> usize {
        self.sections.first().map(|s| s.dim()).unwrap_or(0)
    }

    pub fn m(&self) -> usize {
        self.sections.first().map(|s| s.m()).unwrap_or(1)
    }

    pub fn degree(&self) -> u32 {
        self.sections.iter().map(|s| s.degree()).max().unwrap_or(0)
    }

    /// The D×n matrix of evaluated sections.
    pub fn eval(&self, at: &[C<T>]) -> CMat<T> {
        let mut out = CMat::zeros(self.dim(), self.rank());
        for (c, s) in self.sections.iter().enumerate() {
            for (r, v) in s.eval(at).into_iter().enumerate() {
                out[(r, c)] = v;
            }
        }
        out
    }

    pub fn smallest_singular_value(&self, at: &[C<T>]) -> f64 {
        self.eval(at)
            .singular_values()
            .iter()
            .map(|x| to_f64(*x))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn check_independent(&self, points: &[Point<T>]) -> Result<(), ModelError> {
        for p in points {
            let sigma = self.smallest_singular_value(p);
            if !(sigma > INDEPENDENCE_FLOOR) {
                return Err(ModelError::Dependent {
                    point: fmt_point(p),
                    sigma,
                });
            }
        }
        Ok(())
    }

    pub fn apply(&self, u: &CMat<T>) -> Self {
        Self {
            sections: self.sections.iter().map(|s| s.apply(u)).collect(),
        }
    }

    pub fn mul_poly(&self, f: &Polynomial<T>) -> Self {
        Self {
            sections: self.sections.iter().map(|s| s.mul_poly(f)).collect(),
        }
    }

    /// Right multiplication by a polynomial matrix: (Fφ)_j = Σ_i F_i φ_{ij}.
    pub fn times(&self, phi: &[Vec<Polynomial<T>>]) -> Self {
        let n = self.rank();
        let (d, m) = (self.dim(), self.m());
        let sections = (0..phi[0].len())
            .map(|j| {
                let mut acc = PolynomialSection::zero(d, m);
                for i in 0..n {
                    if !phi[i][j].is_zero() {
                        acc = acc.add(&self.sections[i].mul_poly(&phi[i][j]));
                    }
                }
                acc
            })
            .collect();
        Self { sections }
    }
}

/// Jet of λ ↦ F(λ) (D×n). Every antiholomorphic coefficient is zero.
pub fn frame_eval_jet<T: Real>(f: &Frame<T>, base: &Point<T>, caps: (u32, u32)) -> WirtingerJet<T> {
    let mut jet = WirtingerJet::zeros(base.clone(), caps, f.dim(), f.rank());
    let hol = jet.layout().hol.clone();
    let zero = MultiIndex::zero(base.len());
    let mut mats = vec![CMat::<T>::zeros(f.dim(), f.rank()); hol.len()];
    for (c, s) in f.sections.iter().enumerate() {
        for (r, p) in s.entries.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            for (k, v) in p.taylor(base, &hol).into_iter().enumerate() {
                mats[k][(r, c)] = v;
            }
        }
    }
    for (idx, mat) in hol.iter().zip(mats) {
        if mat.iter().any(|z| *z != C::new(T::zero(), T::zero())) {
            jet.set_coeff(idx, &zero, mat).expect("within caps");
        }
    }
    jet
}

pub fn fmt_point<T: Real>(p: &[C<T>]) -> String {
    let parts: Vec<String> = p.iter().map(|z| format!("{}{:+}i", to_f64(z.re), to_f64(z.im))).collect();
    format!("({})", parts.join(", "))
}

// ----------------------------------------------------------------------------
// Diagonal kernels

/// K(ω, λ) = Σ_{|I|≤N} a_I² ω^I λ̄^I with positive weights.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalKernelSpec<T: Real> {
    pub m: usize,
    pub truncation: u32,
    /// Weights in graded-lex order of the basis.
    pub weights: Vec<(MultiIndex, T)>,
}

impl<T: Real> DiagonalKernelSpec<T> {
    fn from_fn(m: usize, n: u32, f: impl Fn(&MultiIndex) -> f64) -> Self {
        let weights = enumerate_upto(m, &Bound::Total(n)).into_iter().map(|i| {
            let w = f(&i);
            (i, re::<T>(w))
        });
        Self {
            m,
            truncation: n,
            weights: weights.collect(),
        }
    }

    /// a_I ≡ 1 (Hardy space of the disk, or of the polydisk for m > 1).
    pub fn hardy(m: usize, n: u32) -> Self {
        Self::from_fn(m, n, |_| 1.0)
    }

    /// a_j = √(j+1), m = 1.
    pub fn bergman(n: u32) -> Self {
        Self::from_fn(1, n, |i| (i.get(0) as f64 + 1.0).sqrt())
    }

    /// a_I² = |I|!/I!.
    pub fn drury_arveson(m: usize, n: u32) -> Self {
        Self::from_fn(m, n, |i| {
            // |I|!/I! as a product of binomials C(i₁+⋯+i_k, i_k).
            let mut r = 1.0f64;
            let mut acc = 0u32;
            for k in 0..i.dim() {
                acc += i.get(k);
                r *= binomial(acc, i.get(k)) as f64;
            }
            r.sqrt()
        })
    }

    /// Weights listed in graded-lex order, one per basis index with |I| ≤ N.
    pub fn explicit(m: usize, n: u32, weights: &[f64]) -> Result<Self, ModelError> {
        let basis = enumerate_upto(m, &Bound::Total(n));
        if basis.len() != weights.len() {
            return Err(ModelError::WeightCount {
                expected: basis.len(),
                got: weights.len(),
            });
        }
        let spec = Self {
            m,
            truncation: n,
            weights: basis.into_iter().zip(weights).map(|(i, w)| (i, re::<T>(*w))).collect(),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Weights from a closure evaluated on the basis.
    pub fn from_weights(m: usize, n: u32, f: impl Fn(&MultiIndex) -> f64) -> Result<Self, ModelError> {
        let spec = Self::from_fn(m, n, f);
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (i, w) in &self.weights {
            if !(to_f64(*w) > 0.0) {
                return Err(ModelError::Weight {
                    index: i.clone(),
                    value: to_f64(*w),
                });
            }
        }
        Ok(())
    }

    /// D = #{I : |I| ≤ N}.
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weight(&self, i: &MultiIndex) -> Option<T> {
        self.weights.iter().find(|(k, _)| k == i).map(|(_, w)| *w)
    }

    /// Σ_{|I|≤N} a_I² |λ^I|², the truncated kernel diagonal.
    pub fn diagonal(&self, at: &[C<T>]) -> T {
        let mut acc = T::zero();
        for (i, w) in &self.weights {
            let mut t = *w * *w;
            for (k, &e) in i.entries().iter().enumerate() {
                t *= at[k].norm_sqr().powi(e as i32);
            }
            acc += t;
        }
        acc
    }
}

/// The eigen-section λ ↦ Σ a_I λ^I e_I.
pub fn section_from_kernel<T: Real>(spec: &DiagonalKernelSpec<T>) -> PolynomialSection<T> {
    PolynomialSection::new(
        spec.weights
            .iter()
            .map(|(i, w)| Polynomial::monomial(i.clone(), C::new(*w, T::zero())))
            .collect(),
    )
}

/// {t, t′, …, t^{(k)}}, m = 1.
pub fn jet_frame<T: Real>(t: &PolynomialSection<T>, k: u32) -> Result<Frame<T>, ModelError> {
    if t.m() != 1 {
        return Err(ModelError::NeedsOneVariable("jet_frame"));
    }
    if k > t.degree() {
        return Err(ModelError::Degenerate {
            order: k,
            degree: t.degree(),
        });
    }
    let mut sections = vec![t.clone()];
    for _ in 0..k {
        let next = sections.last().unwrap().derivative(0);
        sections.push(next);
    }
    Frame::new(sections)
}

/// First `rank` derivatives D^I t in graded-lex order of I; equals
/// [`jet_frame`] when m = 1.
pub fn derivative_frame<T: Real>(t: &PolynomialSection<T>, rank: usize) -> Result<Frame<T>, ModelError> {
    let m = t.m();
    let mut sections = vec![];
    let mut d = 0;
    while sections.len() < rank {
        for i in crate::indexing::of_degree(m, d) {
            if sections.len() == rank {
                break;
            }
            if d > t.degree() {
                return Err(ModelError::Degenerate {
                    order: d,
                    degree: t.degree(),
                });
            }
            sections.push(t.derivative_multi(&i));
        }
        d += 1;
    }
    Frame::new(sections)
}

/// γ_k = Σ_{i≤k} i!·C(k,i)·t_i^{(k−i)} on ℂ^{D₀ ⊕ ⋯ ⊕ D_{n−1}}, m = 1.
pub fn ofb_frame<T: Real>(t: &[PolynomialSection<T>], n: usize) -> Result<Frame<T>, ModelError> {
    if t.len() < n {
        return Err(ModelError::Dimension(n, t.len()));
    }
    if t.iter().any(|s| s.m() != 1) {
        return Err(ModelError::NeedsOneVariable("ofb_frame"));
    }
    let offsets: Vec<usize> = t[..n]
        .iter()
        .scan(0, |acc, s| {
            let o = *acc;
            *acc += s.dim();
            Some(o)
        })
        .collect();
    let total: usize = t[..n].iter().map(|s| s.dim()).sum();
    let sections = (0..n)
        .map(|k| {
            let mut acc = PolynomialSection::zero(total, 1);
            for i in 0..=k {
                let coeff = crate::indexing::factorial(i as u32) * binomial(k as u32, i as u32);
                let d = t[i].derivative_multi(&MultiIndex::new(vec![(k - i) as u32]));
                acc = acc.add(&d.scale(C::new(re::<T>(coeff as f64), T::zero())).embed(total, offsets[i]));
            }
            acc
        })
        .collect();
    Frame::new(sections)
}

// ----------------------------------------------------------------------------
// FB₂ models

/// Sign placed on t₁ in the second frame vector γ₁ = t₀′ ± t₁.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignConvention {
    /// γ₁ = t₀′ + t₁, the kernel vector of the upper-triangular model when t₀ = −S t₁.
    Plus,
    /// γ₁ = t₀′ − t₁.
    Minus,
}

/// Upper-triangular FB₂ model T = [[T₀, S], [0, T₁]] held through its sections.
///
/// t₁ is the kernel1 eigen-section and t₀ = s·(kernel0 eigen-section); the
/// intertwiner S is the implicit operator with S t₁ = −t₀, so
/// ‖S t₁‖²/‖t₁‖² = h₀/h₁. An optional block unitary (U₀, U₁) rotates both
/// sections, producing a unitarily equivalent model.
#[derive(Clone, Debug, PartialEq)]
pub struct Fb2Model<T: Real> {
    pub kernel0: DiagonalKernelSpec<T>,
    pub kernel1: DiagonalKernelSpec<T>,
    pub coupling_scale: C<T>,
    pub rotation: Option<(CMat<T>, CMat<T>)>,
}

impl<T: Real> Fb2Model<T> {
    pub fn new(kernel0: DiagonalKernelSpec<T>, kernel1: DiagonalKernelSpec<T>, s: C<T>) -> Result<Self, ModelError> {
        if kernel0.m != 1 || kernel1.m != 1 {
            return Err(ModelError::NeedsOneVariable("Fb2Model"));
        }
        if s.norm_sqr() == T::zero() {
            return Err(ModelError::ZeroCoupling);
        }
        kernel0.validate()?;
        kernel1.validate()?;
        Ok(Self {
            kernel0,
            kernel1,
            coupling_scale: s,
            rotation: None,
        })
    }

    /// The model conjugated by diag(U₀, U₁).
    pub fn rotated(&self, u0: CMat<T>, u1: CMat<T>) -> Self {
        let rotation = match &self.rotation {
            Some((a, b)) => (u0 * a, u1 * b),
            None => (u0, u1),
        };
        Self {
            rotation: Some(rotation),
            ..self.clone()
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.kernel0.dim(), self.kernel1.dim())
    }

    pub fn t0(&self) -> PolynomialSection<T> {
        let t = section_from_kernel(&self.kernel0).scale(self.coupling_scale);
        match &self.rotation {
            Some((u0, _)) => t.apply(u0),
            None => t,
        }
    }

    pub fn t1(&self) -> PolynomialSection<T> {
        let t = section_from_kernel(&self.kernel1);
        match &self.rotation {
            Some((_, u1)) => t.apply(u1),
            None => t,
        }
    }
}

/// {γ₀, γ₁} = {t₀ ⊕ 0, t₀′ ⊕ (±t₁)} on ℂ^{D₀+D₁}.
pub fn fb2_frame<T: Real>(model: &Fb2Model<T>, sign: SignConvention) -> Frame<T> {
    let (d0, d1) = model.dims();
    let total = d0 + d1;
    let t0 = model.t0();
    let t1 = model.t1();
    let s = match sign {
        SignConvention::Plus => C::new(T::one(), T::zero()),
        SignConvention::Minus => C::new(-T::one(), T::zero()),
    };
    let g0 = t0.embed(total, 0);
    let g1 = t0.derivative(0).embed(total, 0).add(&t1.scale(s).embed(total, d0));
    Frame { sections: vec![g0, g1] }
}

// ----------------------------------------------------------------------------
// Utilities

/// Haar-distributed unitary from a seeded Gaussian QR.
pub fn random_unitary<T: Real>(d: usize, seed: u64) -> CMat<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = CMat::<T>::from_fn(d, d, |_, _| {
        let a: f64 = StandardNormal.sample(&mut rng);
        let b: f64 = StandardNormal.sample(&mut rng);
        C::new(re(a), re(b))
    });
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for k in 0..d {
        let dk = r[(k, k)];
        let n = dk.modulus();
        if n > T::zero() {
            let phase = dk / C::new(n, T::zero());
            let mut col = q.column_mut(k);
            col *= phase;
        }
    }
    q
}

/// `count` deterministic points in the disk |λ| ≤ radius (m = 1): the center
/// plus rings at evenly spaced radii, 8·k points on ring k.
pub fn disk_samples<T: Real>(radius: f64, count: usize) -> Vec<Point<T>> {
    let mut out = vec![vec![C::new(T::zero(), T::zero())]];
    let mut rings = 0;
    while 1 + 4 * rings * (rings + 1) < count {
        rings += 1;
    }
    for k in 1..=rings {
        let r = radius * k as f64 / rings as f64;
        let n = 8 * k;
        for j in 0..n {
            if out.len() == count {
                break;
            }
            let a = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
            out.push(vec![C::new(re(r * a.cos()), re(r * a.sin()))]);
        }
    }
    out
}
