//! Classical bundle geometry: Gram jets, connection, curvature, ordered
//! covariant derivatives and frame changes.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::indexing::{binomial, MultiIndex};
use crate::jets::{JetError, WirtingerJet};
use crate::model::{frame_eval_jet, Frame, ModelError, Polynomial};
use crate::scalar::{re, residual, CMat, Point, Real, C};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("plan step {step} uses coordinate outside 1..={m}")]
    Coordinate { step: Step, m: usize },
    #[error("frames differ: {0}")]
    Incompatible(String),
    #[error("order {order} exceeds the expansion cap {cap}")]
    OrderCap { order: u32, cap: u32 },
}

// ----------------------------------------------------------------------------
// Plans

/// One elementary covariant-derivative step; coordinates are 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Step {
    Hol(usize),
    AntiHol(usize),
}

impl Step {
    pub fn is_hol(&self) -> bool {
        matches!(self, Step::Hol(_))
    }

    pub fn coord(&self) -> usize {
        match *self {
            Step::Hol(i) | Step::AntiHol(i) => i,
        }
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Step::Hol(i) => write!(f, "Hol({i})"),
            Step::AntiHol(j) => write!(f, "AntiHol({j})"),
        }
    }
}

/// Ordered sequence of steps, applied left to right to the curvature.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DerivPlan {
    pub steps: Vec<Step>,
}

impl DerivPlan {
    pub fn new(steps: Vec<Step>) -> Self {
        Self { steps }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// Canonical plan for (I, J): AntiHol steps first, coordinate-ascending,
    /// then Hol steps.
    pub fn anti_first(i: &MultiIndex, j: &MultiIndex) -> Self {
        let mut steps = expand(j, Step::AntiHol);
        steps.extend(expand(i, Step::Hol));
        Self { steps }
    }

    /// Hol steps first, then AntiHol steps.
    pub fn hol_first(i: &MultiIndex, j: &MultiIndex) -> Self {
        let mut steps = expand(i, Step::Hol);
        steps.extend(expand(j, Step::AntiHol));
        Self { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// (#Hol, #AntiHol).
    pub fn counts(&self) -> (u32, u32) {
        let h = self.steps.iter().filter(|s| s.is_hol()).count() as u32;
        (h, self.steps.len() as u32 - h)
    }

    /// The multi-indices (I, J) this plan realizes.
    pub fn realized(&self, m: usize) -> (MultiIndex, MultiIndex) {
        let (mut i, mut j) = (MultiIndex::zero(m), MultiIndex::zero(m));
        for s in &self.steps {
            match *s {
                Step::Hol(c) => i = i.with_added(c - 1, 1),
                Step::AntiHol(c) => j = j.with_added(c - 1, 1),
            }
        }
        (i, j)
    }

    pub fn validate(&self, m: usize) -> Result<(), GeometryError> {
        for s in &self.steps {
            if s.coord() == 0 || s.coord() > m {
                return Err(GeometryError::Coordinate { step: *s, m });
            }
        }
        Ok(())
    }

    /// Jet caps an input jet needs so the plan's value is available: every
    /// plan step consumes one order, the curvature one of each.
    pub fn demand(&self) -> (u32, u32) {
        let (h, a) = self.counts();
        (h + 1, a + 1)
    }

    /// Order-preserving sub-plan of the steps accepted by `keep`.
    pub fn filtered(&self, keep: impl Fn(&Step) -> bool) -> Self {
        Self {
            steps: self.steps.iter().copied().filter(|s| keep(s)).collect(),
        }
    }

    /// Every plan of length ≤ `max_len` over m coordinates with at most
    /// `max_hol` Hol and `max_anti` AntiHol steps, shortest first.
    pub fn enumerate(m: usize, max_len: usize, max_hol: u32, max_anti: u32) -> Vec<DerivPlan> {
        let mut out = vec![DerivPlan::empty()];
        let mut frontier = vec![DerivPlan::empty()];
        for _ in 0..max_len {
            let mut next = vec![];
            for p in &frontier {
                for s in (1..=m).map(Step::AntiHol).chain((1..=m).map(Step::Hol)) {
                    let mut q = p.clone();
                    q.steps.push(s);
                    let (h, a) = q.counts();
                    if h <= max_hol && a <= max_anti {
                        next.push(q);
                    }
                }
            }
            out.extend(next.iter().cloned());
            frontier = next;
        }
        out
    }
}

impl fmt::Display for DerivPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.steps.iter().map(|s| s.to_string()).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

fn expand(idx: &MultiIndex, make: fn(usize) -> Step) -> Vec<Step> {
    let mut out = vec![];
    for c in 0..idx.dim() {
        out.extend(std::iter::repeat_n(make(c + 1), idx.get(c) as usize));
    }
    out
}

// ----------------------------------------------------------------------------
// Covariant derivative engines

/// A curvature jet together with its two elementary derivative steps.
///
/// Both the classical and the extended curve geometry implement this, so plan
/// evaluation and the split recursion are shared.
pub trait Covariant<T: Real> {
    fn m(&self) -> usize;
    fn curvature(&self) -> &WirtingerJet<T>;
    fn hol_step(&self, l: usize, x: &WirtingerJet<T>) -> Result<WirtingerJet<T>, GeometryError>;
    fn anti_step(&self, k: usize, x: &WirtingerJet<T>) -> Result<WirtingerJet<T>, GeometryError>;

    fn step(&self, s: Step, x: &WirtingerJet<T>) -> Result<WirtingerJet<T>, GeometryError> {
        match s {
            Step::Hol(l) => self.hol_step(l, x),
            Step::AntiHol(k) => self.anti_step(k, x),
        }
    }

    /// Compose the plan's steps left to right on the curvature.
    ///
    /// Agrees with [`Covariant::evaluate_recursive`] when the plan uses at most
    /// one Hol coordinate and one AntiHol coordinate.
    fn evaluate(&self, plan: &DerivPlan) -> Result<WirtingerJet<T>, GeometryError> {
        plan.validate(self.m())?;
        let mut x = self.curvature().clone();
        for s in &plan.steps {
            x = self.step(*s, &x)?;
        }
        Ok(x)
    }

    /// The covariant derivative along `plan`, defined by splitting on the last
    /// step: Hol(l) gives X_{I−i_l e_l, J} + 𝓓_l X_{i_l e_l, J} (first term
    /// dropped when I has no other coordinate), and symmetrically for AntiHol(k).
    fn evaluate_recursive(&self, plan: &DerivPlan) -> Result<WirtingerJet<T>, GeometryError> {
        plan.validate(self.m())?;
        recursive(self, &plan.steps, &mut HashMap::new())
    }

    /// [`Covariant::evaluate_recursive`] for many plans with a shared memo.
    fn evaluate_many_recursive(&self, plans: &[DerivPlan]) -> Result<Vec<WirtingerJet<T>>, GeometryError> {
        let mut memo = HashMap::new();
        plans
            .iter()
            .map(|p| {
                p.validate(self.m())?;
                recursive(self, &p.steps, &mut memo)
            })
            .collect()
    }

    /// Sum over elementary pairs (p, q) of the order-preserving sub-plans
    /// made of the Hol(p) and AntiHol(q) steps.
    fn evaluate_pairs(&self, plan: &DerivPlan) -> Result<WirtingerJet<T>, GeometryError> {
        plan.validate(self.m())?;
        let mut hol: Vec<usize> = plan.steps.iter().filter(|s| s.is_hol()).map(|s| s.coord()).collect();
        let mut anti: Vec<usize> = plan.steps.iter().filter(|s| !s.is_hol()).map(|s| s.coord()).collect();
        hol.sort();
        hol.dedup();
        anti.sort();
        anti.dedup();
        let hol_keys: Vec<Option<usize>> = if hol.is_empty() {
            vec![None]
        } else {
            hol.into_iter().map(Some).collect()
        };
        let anti_keys: Vec<Option<usize>> = if anti.is_empty() {
            vec![None]
        } else {
            anti.into_iter().map(Some).collect()
        };
        let mut acc: Option<WirtingerJet<T>> = None;
        for p in &hol_keys {
            for q in &anti_keys {
                let sub = plan.filtered(|s| match *s {
                    Step::Hol(c) => Some(c) == *p,
                    Step::AntiHol(c) => Some(c) == *q,
                });
                let v = self.evaluate(&sub)?;
                acc = Some(match acc {
                    Some(a) => a.add(&v)?,
                    None => v,
                });
            }
        }
        Ok(acc.expect("at least one pair"))
    }

    /// Evaluate many plans, reusing the results of shared prefixes.
    fn evaluate_many(&self, plans: &[DerivPlan]) -> Result<Vec<WirtingerJet<T>>, GeometryError> {
        let mut memo: HashMap<Vec<Step>, WirtingerJet<T>> = HashMap::new();
        memo.insert(vec![], self.curvature().clone());
        let mut out = Vec::with_capacity(plans.len());
        for plan in plans {
            plan.validate(self.m())?;
            let mut k = plan.len();
            while !memo.contains_key(&plan.steps[..k]) {
                k -= 1;
            }
            let mut x = memo[&plan.steps[..k]].clone();
            for n in k..plan.len() {
                x = self.step(plan.steps[n], &x)?;
                memo.insert(plan.steps[..=n].to_vec(), x.clone());
            }
            out.push(x);
        }
        Ok(out)
    }
}

fn recursive<T: Real, E: Covariant<T> + ?Sized>(
    engine: &E,
    steps: &[Step],
    memo: &mut HashMap<Vec<Step>, WirtingerJet<T>>,
) -> Result<WirtingerJet<T>, GeometryError> {
    let Some((last, prefix)) = steps.split_last() else {
        return Ok(engine.curvature().clone());
    };
    if let Some(x) = memo.get(steps) {
        return Ok(x.clone());
    }
    let same_kind = |s: &Step| s.is_hol() == last.is_hol();
    // Steps of the same kind on other coordinates, and the prefix without them.
    let other: Vec<Step> = prefix
        .iter()
        .copied()
        .filter(|s| !(same_kind(s) && s.coord() == last.coord()))
        .collect();
    let own: Vec<Step> = prefix
        .iter()
        .copied()
        .filter(|s| !(same_kind(s) && s.coord() != last.coord()))
        .collect();
    let lifted = engine.step(*last, &recursive(engine, &own, memo)?)?;
    let out = if other.iter().any(same_kind) {
        recursive(engine, &other, memo)?.add(&lifted)?
    } else {
        lifted
    };
    memo.insert(steps.to_vec(), out.clone());
    Ok(out)
}

// ----------------------------------------------------------------------------
// Classical geometry

/// H(λ) = G*(λ)F(λ) as an n×n jet.
pub fn gram<T: Real>(f: &Frame<T>, g: &Frame<T>, base: &Point<T>, caps: (u32, u32)) -> Result<WirtingerJet<T>, GeometryError> {
    if f.rank() != g.rank() || f.dim() != g.dim() {
        return Err(GeometryError::Incompatible(format!(
            "F is {}×{}, G is {}×{}",
            f.dim(),
            f.rank(),
            g.dim(),
            g.rank()
        )));
    }
    let fj = frame_eval_jet(f, base, caps);
    let gj = frame_eval_jet(g, base, (caps.1, caps.0)).adjoint();
    Ok(gj.mul(&fj)?)
}

/// Θ = H⁻¹ Σᵢ ∂ᵢH.
pub fn classical_connection<T: Real>(h: &WirtingerJet<T>) -> Result<WirtingerJet<T>, GeometryError> {
    let inv = h.invert()?;
    Ok(inv.mul(&h.d_hol_sum()?)?)
}

/// K = −Σ_{i,j} ∂̄ⱼ(H⁻¹∂ᵢH).
pub fn classical_curvature<T: Real>(h: &WirtingerJet<T>) -> Result<WirtingerJet<T>, GeometryError> {
    Ok(classical_connection(h)?.d_anti_sum()?.neg())
}

/// Classical curvature with its per-coordinate connection forms H⁻¹∂ᵢH.
#[derive(Clone, Debug)]
pub struct ClassicalBundle<T: Real> {
    pub h: WirtingerJet<T>,
    pub forms: Vec<WirtingerJet<T>>,
    pub k: WirtingerJet<T>,
}

impl<T: Real> ClassicalBundle<T> {
    pub fn new(h: WirtingerJet<T>) -> Result<Self, GeometryError> {
        let inv = h.invert()?;
        let forms = (0..h.m())
            .map(|i| Ok(inv.mul(&h.d_hol(i)?)?))
            .collect::<Result<Vec<_>, GeometryError>>()?;
        let mut theta = forms[0].clone();
        for f in &forms[1..] {
            theta = theta.add(f)?;
        }
        let k = theta.d_anti_sum()?.neg();
        Ok(Self { h, forms, k })
    }
}

impl<T: Real> Covariant<T> for ClassicalBundle<T> {
    fn m(&self) -> usize {
        self.h.m()
    }

    fn curvature(&self) -> &WirtingerJet<T> {
        &self.k
    }

    /// X ↦ ∂_l X + [H⁻¹∂_l H, X].
    fn hol_step(&self, l: usize, x: &WirtingerJet<T>) -> Result<WirtingerJet<T>, GeometryError> {
        let a = &self.forms[l - 1];
        let comm = a.mul(x)?.sub(&x.mul(a)?)?;
        Ok(x.d_hol(l - 1)?.add(&comm)?)
    }

    /// X ↦ ∂̄_k X.
    fn anti_step(&self, k: usize, x: &WirtingerJet<T>) -> Result<WirtingerJet<T>, GeometryError> {
        Ok(x.d_anti(k - 1)?)
    }
}

/// K_{plan}, the classical covariant derivative along `plan`.
pub fn classical_covariant_derivative<T: Real>(h: &WirtingerJet<T>, plan: &DerivPlan) -> Result<WirtingerJet<T>, GeometryError> {
    ClassicalBundle::new(h.clone())?.evaluate_recursive(plan)
}

// ----------------------------------------------------------------------------
// Frame changes

/// φ_{i,j} = C(j,i)·φ₀₀^{(j−i)} for i ≤ j, zero below the diagonal.
pub fn frame_change_matrix<T: Real>(phi00: &Polynomial<T>, n: usize) -> Vec<Vec<Polynomial<T>>> {
    let m = phi00.m();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i > j {
                        return Polynomial::zero(m);
                    }
                    let d = phi00.derivative_multi(&MultiIndex::new(vec![(j - i) as u32]));
                    d.scale(C::new(re::<T>(binomial(j as u32, i as u32) as f64), T::zero()))
                })
                .collect()
        })
        .collect()
}

/// Evaluate a polynomial matrix.
pub fn eval_poly_matrix<T: Real>(phi: &[Vec<Polynomial<T>>], at: &[C<T>]) -> CMat<T> {
    CMat::from_fn(phi.len(), phi[0].len(), |i, j| phi[i][j].eval(at))
}

/// Frame-change residuals at the base point of the jets.
#[derive(Clone, Debug, PartialEq)]
pub struct ConjugationReport {
    /// K_plan(G) − φ⁻¹ K_plan(F) φ.
    pub conjugation: f64,
    /// trace K_plan(G) − trace K_plan(F).
    pub trace: f64,
}

/// Compare covariant derivatives of two frames related by G = Fφ.
pub fn conjugation_trace_check<T: Real>(
    h_f: &WirtingerJet<T>,
    h_g: &WirtingerJet<T>,
    phi: &[Vec<Polynomial<T>>],
    plan: &DerivPlan,
) -> Result<ConjugationReport, GeometryError> {
    let kf = classical_covariant_derivative(h_f, plan)?.value();
    let kg = classical_covariant_derivative(h_g, plan)?.value();
    let p = eval_poly_matrix(phi, h_f.base());
    let pinv = p.clone().try_inverse().ok_or(JetError::Singular(f64::INFINITY))?;
    let conj = &pinv * &kf * &p;
    let tf = CMat::from_element(1, 1, kf.trace());
    let tg = CMat::from_element(1, 1, kg.trace());
    Ok(ConjugationReport {
        conjugation: residual(&kg, &conj),
        trace: residual(&tg, &tf),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{derivative_frame, jet_frame, section_from_kernel, DiagonalKernelSpec};
    use approx::assert_relative_eq;

    fn c(x: f64) -> C<f64> {
        C::new(x, 0.0)
    }

    fn frame(spec: &DiagonalKernelSpec<f64>, rank: usize) -> Frame<f64> {
        derivative_frame(&section_from_kernel(spec), rank).unwrap()
    }

    fn hardy() -> Frame<f64> {
        frame(&DiagonalKernelSpec::hardy(1, 60), 1)
    }

    fn bergman() -> Frame<f64> {
        frame(&DiagonalKernelSpec::bergman(60), 1)
    }

    fn scalar(j: &WirtingerJet<f64>) -> C<f64> {
        j.value()[(0, 0)]
    }

    #[test]
    fn gram_examples() {
        let h = gram(&hardy(), &hardy(), &vec![c(0.0)], (1, 1)).unwrap();
        assert_eq!(scalar(&h), c(1.0));
        let h = gram(&hardy(), &hardy(), &vec![c(0.5)], (1, 1)).unwrap();
        assert_relative_eq!(scalar(&h).re, 4.0 / 3.0, epsilon = 1e-12);
        let h = gram(&hardy(), &bergman(), &vec![c(0.0)], (1, 1)).unwrap();
        assert_eq!(scalar(&h), c(1.0));
        // Σ √(j+1) r^{2j} at r = 0.3
        let h = gram(&hardy(), &bergman(), &vec![c(0.3)], (0, 0)).unwrap();
        let direct: f64 = (0..=60).map(|j| ((j + 1) as f64).sqrt() * 0.09f64.powi(j)).sum();
        assert_relative_eq!(scalar(&h).re, direct, epsilon = 1e-13);
    }

    #[test]
    fn connection_examples() {
        let one = Frame::new(vec![crate::model::PolynomialSection::new(vec![Polynomial::constant(1, c(1.0)); 3])]).unwrap();
        let h = gram(&one, &one, &vec![c(0.2)], (2, 2)).unwrap();
        assert_eq!(classical_connection(&h).unwrap().max_abs(), 0.0);
        let h = gram(&hardy(), &hardy(), &vec![c(0.0)], (2, 2)).unwrap();
        assert!(scalar(&classical_connection(&h).unwrap()).norm() < 1e-15);
        let h = gram(&hardy(), &hardy(), &vec![c(0.5)], (2, 2)).unwrap();
        assert_relative_eq!(scalar(&classical_connection(&h).unwrap()).re, 0.5 / 0.75, epsilon = 1e-10);
    }

    #[test]
    fn curvature_closed_forms() {
        for (f, scale) in [(hardy(), 1.0), (bergman(), 2.0)] {
            for lam in [c(0.0), C::new(0.5, 0.0), C::new(-0.2, 0.45)] {
                let h = gram(&f, &f, &vec![lam], (1, 1)).unwrap();
                let k = scalar(&classical_curvature(&h).unwrap());
                let r = 1.0 - lam.norm_sqr();
                assert_relative_eq!(k.re, -scale / (r * r), epsilon = 1e-8);
                assert!(k.im.abs() < 1e-12);
            }
        }
        let h = gram(&hardy(), &hardy(), &vec![c(0.5)], (1, 1)).unwrap();
        assert_relative_eq!(scalar(&classical_curvature(&h).unwrap()).re, -16.0 / 9.0, epsilon = 1e-8);
    }

    #[test]
    fn rank_one_curvature_is_minus_ddbar_log() {
        let f = bergman();
        let h = gram(&f, &f, &vec![C::new(0.3, 0.2)], (1, 1)).unwrap();
        let k = scalar(&classical_curvature(&h).unwrap());
        let m1 = MultiIndex::new(vec![1]);
        let l = -h.log().unwrap().extract(&m1, &m1).unwrap()[(0, 0)];
        assert!((k - l).norm() < 1e-12);
    }

    #[test]
    fn covariant_examples() {
        let at0 = vec![c(0.0)];
        let h = gram(&hardy(), &hardy(), &at0, (2, 2)).unwrap();
        let k = classical_curvature(&h).unwrap();
        let k0 = classical_covariant_derivative(&h, &DerivPlan::empty()).unwrap();
        assert_eq!(k0.value(), k.value());
        let plan = DerivPlan::new(vec![Step::AntiHol(1)]);
        assert!(scalar(&classical_covariant_derivative(&h, &plan).unwrap()).norm() < 1e-14);
        let h = gram(&hardy(), &hardy(), &vec![c(0.5)], (2, 2)).unwrap();
        let v = scalar(&classical_covariant_derivative(&h, &plan).unwrap());
        assert_relative_eq!(v.re, -2.0 * 0.5 / 0.75f64.powi(3), epsilon = 1e-8);
        // rank one: the commutator vanishes and Hol(1) is ∂K = −2λ̄(1−|λ|²)⁻³.
        let lam = C::new(0.3, 0.25);
        let h = gram(&hardy(), &hardy(), &vec![lam], (2, 2)).unwrap();
        let v = scalar(&classical_covariant_derivative(&h, &DerivPlan::new(vec![Step::Hol(1)])).unwrap());
        let expect = lam.conj() * c(-2.0 / (1.0 - lam.norm_sqr()).powi(3));
        assert!((v - expect).norm() < 1e-8);
    }

    #[test]
    fn cap_exhaustion_reported() {
        let h = gram(&hardy(), &hardy(), &vec![c(0.1)], (1, 1)).unwrap();
        let plan = DerivPlan::new(vec![Step::Hol(1)]);
        assert!(matches!(
            classical_covariant_derivative(&h, &plan),
            Err(GeometryError::Jet(JetError::CapExhausted))
        ));
        let bad = DerivPlan::new(vec![Step::Hol(2)]);
        assert!(matches!(
            classical_covariant_derivative(&h, &bad),
            Err(GeometryError::Coordinate { .. })
        ));
    }

    #[test]
    fn plan_conventions() {
        let i = MultiIndex::new(vec![1, 1]);
        let j = MultiIndex::new(vec![0, 2]);
        let a = DerivPlan::anti_first(&i, &j);
        assert_eq!(a.steps, vec![Step::AntiHol(2), Step::AntiHol(2), Step::Hol(1), Step::Hol(2)]);
        let h = DerivPlan::hol_first(&i, &j);
        assert_eq!(h.steps, vec![Step::Hol(1), Step::Hol(2), Step::AntiHol(2), Step::AntiHol(2)]);
        assert_eq!(a.realized(2), (i.clone(), j.clone()));
        assert_eq!(h.realized(2), (i, j));
        assert_eq!(a.demand(), (3, 3));
        // 1 + 4 + 16 + 64 plans of length ≤ 3 over two coordinates
        assert_eq!(DerivPlan::enumerate(2, 3, 3, 3).len(), 85);
        assert_eq!(DerivPlan::enumerate(1, 4, 4, 4).len(), 31);
    }

    #[test]
    fn frame_change_examples() {
        let phi = Polynomial::univariate(&[c(1.0), c(0.0), c(1.0)]);
        let one = frame_change_matrix(&phi, 1);
        assert_eq!(one, vec![vec![phi.clone()]]);
        let three = frame_change_matrix(&phi, 3);
        assert_eq!(three[1][2], Polynomial::univariate(&[c(0.0), c(4.0)]));
        assert!(three[2][0].is_zero());
        let k = frame_change_matrix(&Polynomial::constant(1, c(2.5)), 3);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j {
                    Polynomial::constant(1, c(2.5))
                } else {
                    Polynomial::zero(1)
                };
                assert_eq!(k[i][j], expect);
            }
        }
    }

    #[test]
    fn conjugation_trace_examples() {
        let f = hardy();
        let at = vec![c(0.2)];
        let phi = vec![vec![Polynomial::univariate(&[c(1.0), c(1.0)])]];
        let g = f.times(&phi);
        let hf = gram(&f, &f, &at, (3, 3)).unwrap();
        let hg = gram(&g, &g, &at, (3, 3)).unwrap();
        let id = vec![vec![Polynomial::constant(1, c(1.0))]];
        let r = conjugation_trace_check(&hf, &hf, &id, &DerivPlan::empty()).unwrap();
        assert_eq!((r.conjugation, r.trace), (0.0, 0.0));
        let r = conjugation_trace_check(&hf, &hg, &phi, &DerivPlan::empty()).unwrap();
        assert!(r.trace < 1e-8);
        let r = conjugation_trace_check(&hf, &hg, &phi, &DerivPlan::new(vec![Step::Hol(1)])).unwrap();
        assert!(r.conjugation < 1e-8 && r.trace < 1e-8);
    }

    #[test]
    fn rank_two_frame_change_conjugates_every_plan() {
        // G = Fφ with an upper-triangular φ.
        let t = section_from_kernel(&DiagonalKernelSpec::<f64>::bergman(60));
        let f = jet_frame(&t, 1).unwrap();
        let phi = frame_change_matrix(&Polynomial::univariate(&[c(1.0), C::new(0.3, 0.4)]), 2);
        let g = f.times(&phi);
        let at = vec![C::new(0.25, -0.1)];
        let hf = gram(&f, &f, &at, (4, 4)).unwrap();
        let hg = gram(&g, &g, &at, (4, 4)).unwrap();
        for plan in DerivPlan::enumerate(1, 3, 3, 3) {
            let r = conjugation_trace_check(&hf, &hg, &phi, &plan).unwrap();
            assert!(r.conjugation < 1e-8, "{plan}: {}", r.conjugation);
            assert!(r.trace < 1e-8, "{plan}: {}", r.trace);
        }
    }

    #[test]
    fn classical_split_recursion_matches_pair_sum() {
        let t = section_from_kernel(&DiagonalKernelSpec::<f64>::drury_arveson(2, 8));
        let f = derivative_frame(&t, 2).unwrap();
        let at = vec![C::new(0.2, 0.1), C::new(-0.1, 0.15)];
        let h = gram(&f, &f, &at, (3, 3)).unwrap();
        let b = ClassicalBundle::new(h).unwrap();
        for plan in DerivPlan::enumerate(2, 4, 2, 2) {
            let rec = b.evaluate_recursive(&plan).unwrap().value();
            let pairs = b.evaluate_pairs(&plan).unwrap().value();
            assert!(residual(&rec, &pairs) < 1e-8, "{plan}");
        }
        // the elementary plan is its own decomposition
        let p = DerivPlan::new(vec![Step::AntiHol(1), Step::Hol(1)]);
        assert_eq!(b.evaluate_recursive(&p).unwrap().value(), b.evaluate(&p).unwrap().value());
        // composing steps in two Hol coordinates is a different operator
        let p = DerivPlan::new(vec![Step::Hol(1), Step::Hol(2)]);
        let composed = b.evaluate(&p).unwrap().value();
        assert!(residual(&b.evaluate_recursive(&p).unwrap().value(), &composed) > 1e-3);
        let plans = DerivPlan::enumerate(2, 4, 2, 2);
        for (p, v) in plans.iter().zip(b.evaluate_many_recursive(&plans).unwrap()) {
            assert_eq!(v.value(), b.evaluate_recursive(p).unwrap().value());
        }
    }

    #[test]
    fn evaluate_many_matches_single() {
        let f = frame(&DiagonalKernelSpec::bergman(60), 2);
        let h = gram(&f, &f, &vec![C::new(0.1, 0.3)], (3, 3)).unwrap();
        let b = ClassicalBundle::new(h).unwrap();
        let plans = DerivPlan::enumerate(1, 4, 2, 2);
        let many = b.evaluate_many(&plans).unwrap();
        for (p, v) in plans.iter().zip(many) {
            assert_eq!(v.value(), b.evaluate(p).unwrap().value());
        }
    }
}
