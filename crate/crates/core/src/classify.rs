//! Equivalence and similarity decisions built from the geometric invariants.
//!
//! Every verdict is sampled: curvature equalities are tested on a finite grid
//! and shift similarity on a truncated weight sequence, and the verdict says
//! which grid or truncation it used.

use std::collections::BTreeMap;
use std::fmt;

use crate::curves::{curve_eval_jet, ExtendedCurve};
use crate::geometry::{classical_covariant_derivative, classical_curvature, gram, DerivPlan, GeometryError};
use crate::indexing::MultiIndex;
use crate::jets::JetError;
use crate::model::{disk_samples, fmt_point, section_from_kernel, DiagonalKernelSpec, Fb2Model, Frame, ModelError};
use crate::scalar::{max_abs, residual, to_f64, CMat, Point, Real, C};

/// Default tolerance for curvature comparisons.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;
/// Growth of log(max/min ratio) over the upper half of the truncation above
/// which an unbounded ratio is reported.
pub const GROWTH_UNBOUNDED: f64 = 0.05;
/// Growth below which the ratio bounds count as stabilized.
pub const GROWTH_STABLE: f64 = 0.02;

// ----------------------------------------------------------------------------
// Verdicts

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Equivalent,
    NotEquivalent,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Equivalent => "equivalent",
            Verdict::NotEquivalent => "not-equivalent",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Ratio bounds of a truncated weight comparison, per degree.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftTrend {
    /// (min, max) of b_I/a_I over |I| ≤ d, for d = 0..=N.
    pub bounds: Vec<(f64, f64)>,
    /// log(max/min) at N minus the same at N/2.
    pub growth: f64,
    /// max/min strictly increases over the upper half of the degrees.
    pub monotone: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceVerdict {
    pub verdict: Verdict,
    /// The separating invariant, or the data that matched.
    pub witness: String,
    pub residuals: BTreeMap<String, f64>,
    pub trend: Option<ShiftTrend>,
}

impl EquivalenceVerdict {
    fn from_residuals(residuals: BTreeMap<String, f64>, tolerance: f64, witness: String) -> Self {
        let ok = residuals.values().all(|r| *r <= tolerance);
        let verdict = if ok { Verdict::Equivalent } else { Verdict::NotEquivalent };
        Self {
            verdict,
            witness,
            residuals,
            trend: None,
        }
    }
}

/// The default sample grid: 25 points in the disk of radius 0.6.
pub fn default_samples<T: Real>() -> Vec<Point<T>> {
    disk_samples(0.6, 25)
}

fn scalar_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

// ----------------------------------------------------------------------------
// Line bundles

/// Curvature −Σ∂̄ⱼ∂ᵢ log h of a rank-1 frame at a point.
pub fn line_curvature<T: Real>(f: &Frame<T>, at: &Point<T>) -> Result<f64, GeometryError> {
    if f.rank() != 1 {
        return Err(GeometryError::Incompatible(format!(
            "expected a rank-1 frame, got rank {}",
            f.rank()
        )));
    }
    let h = gram(f, f, at, (1, 1))?;
    Ok(to_f64(classical_curvature(&h)?.value()[(0, 0)].re))
}

/// Rank-1 frames are unitarily equivalent iff their curvatures agree.
pub fn b1_unitary_equivalence<T: Real>(
    f1: &Frame<T>,
    f2: &Frame<T>,
    samples: &[Point<T>],
    tolerance: f64,
) -> Result<EquivalenceVerdict, GeometryError> {
    let mut worst = (0.0, 0usize, 0.0, 0.0);
    for (n, p) in samples.iter().enumerate() {
        let (k1, k2) = (line_curvature(f1, p)?, line_curvature(f2, p)?);
        let gap = scalar_gap(k1, k2);
        if gap > worst.0 || n == 0 {
            worst = (gap.max(worst.0), n, k1, k2);
        }
    }
    let (gap, n, k1, k2) = worst;
    let witness = format!("K{}: {k1} vs {k2} ({} samples)", fmt_point(&samples[n]), samples.len());
    Ok(EquivalenceVerdict::from_residuals(
        BTreeMap::from([("curvature".into(), gap)]),
        tolerance,
        witness,
    ))
}

/// FB₂ models are unitarily equivalent iff K_{T₀} and ‖St₁‖²/‖t₁‖² agree.
pub fn fb2_unitary_equivalence<T: Real>(
    m1: &Fb2Model<T>,
    m2: &Fb2Model<T>,
    samples: &[Point<T>],
    tolerance: f64,
) -> Result<EquivalenceVerdict, GeometryError> {
    let data = |m: &Fb2Model<T>, p: &Point<T>| -> Result<(f64, f64), GeometryError> {
        let t0 = Frame::new(vec![m.t0()])?;
        let (a, b) = (m.t0().eval(p), m.t1().eval(p));
        let norm = |v: &[C<T>]| v.iter().map(|z| to_f64(z.norm_sqr())).sum::<f64>();
        Ok((line_curvature(&t0, p)?, norm(&a) / norm(&b)))
    };
    let mut curv = (0.0, 0usize, 0.0, 0.0);
    let mut ratio = (0.0, 0usize, 0.0, 0.0);
    for (n, p) in samples.iter().enumerate() {
        let ((k1, r1), (k2, r2)) = (data(m1, p)?, data(m2, p)?);
        let (gk, gr) = (scalar_gap(k1, k2), scalar_gap(r1, r2));
        if gk > curv.0 || n == 0 {
            curv = (gk.max(curv.0), n, k1, k2);
        }
        if gr > ratio.0 || n == 0 {
            ratio = (gr.max(ratio.0), n, r1, r2);
        }
    }
    let witness = if curv.0 > tolerance {
        format!("K_T0{}: {} vs {}", fmt_point(&samples[curv.1]), curv.2, curv.3)
    } else if ratio.0 > tolerance {
        format!("|St1|^2/|t1|^2{}: {} vs {}", fmt_point(&samples[ratio.1]), ratio.2, ratio.3)
    } else {
        format!("K_T0 and |St1|^2/|t1|^2 agree on {} samples", samples.len())
    };
    let residuals = BTreeMap::from([("curvature".into(), curv.0), ("ratio".into(), ratio.0)]);
    Ok(EquivalenceVerdict::from_residuals(residuals, tolerance, witness))
}

// ----------------------------------------------------------------------------
// Weighted shifts

/// Similarity of the weighted shifts with weights a and b, decided from the
/// ratio b_I/a_I over the truncation: stabilized bounds mean similar, a
/// monotone growing spread means not similar, anything else is inconclusive.
pub fn weighted_shift_similarity<T: Real>(
    a: &DiagonalKernelSpec<T>,
    b: &DiagonalKernelSpec<T>,
) -> Result<EquivalenceVerdict, GeometryError> {
    if a.m != b.m || a.truncation != b.truncation {
        return Err(GeometryError::Incompatible(format!(
            "weights over (m, N) = ({}, {}) and ({}, {})",
            a.m, a.truncation, b.m, b.truncation
        )));
    }
    a.validate()?;
    b.validate()?;
    let n = a.truncation as usize;
    let ratio = |i: &MultiIndex| -> Result<f64, ModelError> {
        let wa = a.weight(i).map(to_f64).ok_or(ModelError::Weight {
            index: i.clone(),
            value: 0.0,
        })?;
        let wb = b.weight(i).map(to_f64).ok_or(ModelError::Weight {
            index: i.clone(),
            value: 0.0,
        })?;
        Ok(wb / wa)
    };
    let mut bounds = Vec::with_capacity(n + 1);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for d in 0..=n as u32 {
        for i in crate::indexing::of_degree(a.m, d) {
            let r = ratio(&i)?;
            lo = lo.min(r);
            hi = hi.max(r);
        }
        bounds.push((lo, hi));
    }
    let spread = |d: usize| (bounds[d].1 / bounds[d].0).ln();
    let growth = spread(n) - spread(n / 2);
    let monotone = (n / 2..n).all(|d| spread(d + 1) > spread(d));
    let verdict = if growth > GROWTH_UNBOUNDED && monotone {
        Verdict::NotEquivalent
    } else if growth < GROWTH_STABLE {
        Verdict::Equivalent
    } else {
        Verdict::Inconclusive
    };

    // Quotient telescoping along every coordinate ray.
    let mut telescoping = 0.0f64;
    for i in crate::indexing::enumerate_upto(a.m, &crate::indexing::Bound::Total(n as u32)) {
        for c in 0..a.m {
            let mut prod = 1.0;
            for k in 1..=(n as u32 - i.total_degree()) {
                let (p, q) = (i.with_added(c, k - 1), i.with_added(c, k));
                prod *= (to_f64(a.weight(&p).unwrap()) / to_f64(a.weight(&q).unwrap()))
                    / (to_f64(b.weight(&p).unwrap()) / to_f64(b.weight(&q).unwrap()));
                let closed = ratio(&q)? / ratio(&i)?;
                telescoping = telescoping.max(scalar_gap(prod, closed));
            }
        }
    }

    let (lo, hi) = bounds[n];
    let witness = format!("b_I/a_I in [{lo}, {hi}] for |I| <= {n}; spread growth {growth:.4} over the upper half");
    let residuals = BTreeMap::from([
        ("min_ratio".into(), lo),
        ("max_ratio".into(), hi),
        ("growth".into(), growth),
        ("telescoping".into(), telescoping),
    ]);
    Ok(EquivalenceVerdict {
        verdict,
        witness,
        residuals,
        trend: Some(ShiftTrend { bounds, growth, monotone }),
    })
}

// ----------------------------------------------------------------------------
// Extended curves

/// Worst X·D^I𝓘₁·D̄^J𝓘₁ − D^I𝓘₂·D̄^J𝓘₂·X over |I| ≤ p, |J| ≤ q and samples.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductIntertwine {
    pub residual: f64,
    /// (I, J, sample index) of the worst residual.
    pub worst: (MultiIndex, MultiIndex, usize),
}

pub fn product_intertwine_check<T: Real>(
    c1: &ExtendedCurve<T>,
    c2: &ExtendedCurve<T>,
    x: &CMat<T>,
    orders: (u32, u32),
    samples: &[Point<T>],
) -> Result<ProductIntertwine, GeometryError> {
    if c1.m() != c2.m() || x.shape() != (c2.dim(), c1.dim()) {
        return Err(GeometryError::Incompatible(format!(
            "X is {}×{}, curves live in ℂ^{} and ℂ^{}",
            x.nrows(),
            x.ncols(),
            c1.dim(),
            c2.dim()
        )));
    }
    let m = c1.m();
    let hol = crate::indexing::enumerate_upto(m, &crate::indexing::Bound::Total(orders.0));
    let anti = crate::indexing::enumerate_upto(m, &crate::indexing::Bound::Total(orders.1));
    let zero = MultiIndex::zero(m);
    let mut out = ProductIntertwine {
        residual: 0.0,
        worst: (zero.clone(), zero.clone(), 0),
    };
    for (n, p) in samples.iter().enumerate() {
        let j1 = curve_eval_jet(c1, p, orders)?;
        let j2 = curve_eval_jet(c2, p, orders)?;
        for i in &hol {
            for j in &anti {
                let l = x * j1.extract(i, &zero)? * j1.extract(&zero, j)?;
                let r = j2.extract(i, &zero)? * j2.extract(&zero, j)? * x;
                let res = residual(&l, &r);
                if res > out.residual {
                    out = ProductIntertwine {
                        residual: res,
                        worst: (i.clone(), j.clone(), n),
                    };
                }
            }
        }
    }
    Ok(out)
}

/// Residuals of Y·K₁,plan − K₂,plan·Y and Y·Z − 1 for
/// Y = H₂⁻¹G₂*UF₁ and Z = H₁⁻¹G₁*U*F₂, with the hypothesis U𝓘₁ = 𝓘₂U.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityWitness {
    pub hypothesis: f64,
    pub intertwining: f64,
    pub inverse: f64,
}

pub fn classical_similarity_witness<T: Real>(
    c1: &ExtendedCurve<T>,
    c2: &ExtendedCurve<T>,
    u: &CMat<T>,
    plan: &DerivPlan,
    base: &Point<T>,
) -> Result<SimilarityWitness, GeometryError> {
    let caps = plan.demand();
    let (i1, i2) = (c1.eval(base)?, c2.eval(base)?);
    let (f1, f2) = (c1.f.eval(base), c2.f.eval(base));
    let (g1s, g2s) = (c1.g.eval(base).adjoint(), c2.g.eval(base).adjoint());
    let inv = |h: CMat<T>| h.try_inverse().ok_or(GeometryError::Jet(JetError::Singular(f64::INFINITY)));
    let h1inv = inv(&g1s * &f1)?;
    let h2inv = inv(&g2s * &f2)?;
    let y = &h2inv * &g2s * u * &f1;
    let z = &h1inv * &g1s * u.adjoint() * &f2;
    let k1 = classical_covariant_derivative(&gram(&c1.f, &c1.g, base, caps)?, plan)?.value();
    let k2 = classical_covariant_derivative(&gram(&c2.f, &c2.g, base, caps)?, plan)?.value();
    let n = y.nrows();
    Ok(SimilarityWitness {
        hypothesis: residual(&(u * &i1), &(&i2 * u)),
        intertwining: residual(&(&y * &k1), &(&k2 * &y)),
        inverse: residual(&(&y * &z), &CMat::identity(n, n)),
    })
}

// ----------------------------------------------------------------------------
// Finite-rank twists

/// The m×m matrix ∂ᵢ∂̄ⱼ log det H at a point, as ∂̄ⱼ tr(H⁻¹∂ᵢH).
pub fn log_det_hessian<T: Real>(f: &Frame<T>, at: &Point<T>) -> Result<CMat<T>, GeometryError> {
    let h = gram(f, f, at, (1, 1))?;
    let inv = h.invert()?;
    let m = f.m();
    let mut out = CMat::<T>::zeros(m, m);
    for i in 0..m {
        let tr = inv.mul(&h.d_hol(i)?)?.trace();
        for j in 0..m {
            out[(i, j)] = tr.d_anti(j)?.value()[(0, 0)];
        }
    }
    Ok(out)
}

/// Coefficient matrix of a rank-1 polynomial frame: rows are ambient
/// coordinates, columns the monomials in graded-lex order.
fn coefficient_matrix<T: Real>(f: &Frame<T>) -> CMat<T> {
    let s = &f.sections[0];
    let basis = crate::indexing::enumerate_upto(f.m(), &crate::indexing::Bound::Total(s.degree()));
    CMat::from_fn(s.dim(), basis.len(), |r, c| {
        s.entries[r]
            .terms()
            .find(|(k, _)| **k == basis[c])
            .map(|(_, v)| *v)
            .unwrap_or_else(|| C::new(T::zero(), T::zero()))
    })
}

/// Frames p, q are equivalent iff H_P = |φ|²H_Q for a holomorphic φ, tested as
/// pluriharmonicity of log(det H_P / det H_Q). For rank-1 frames of equal
/// degree (constant φ), the coefficient Grams A*A and B*B must also be
/// proportional.
pub fn finite_rank_twist_equivalence<T: Real>(
    p: &Frame<T>,
    q: &Frame<T>,
    samples: &[Point<T>],
    tolerance: f64,
) -> Result<EquivalenceVerdict, GeometryError> {
    if p.rank() != q.rank() || p.m() != q.m() {
        return Err(GeometryError::Incompatible(format!("ranks {} and {}", p.rank(), q.rank())));
    }
    let mut worst = (0.0, 0usize);
    for (n, s) in samples.iter().enumerate() {
        let r = residual(&log_det_hessian(p, s)?, &log_det_hessian(q, s)?);
        if r > worst.0 || n == 0 {
            worst = (r.max(worst.0), n);
        }
    }
    let mut residuals = BTreeMap::from([("log_ratio".to_string(), worst.0)]);
    let mut witness = format!(
        "ddbar log(det H_P/det H_Q) max {:.3e} at {} ({} samples)",
        worst.0,
        fmt_point(&samples[worst.1]),
        samples.len()
    );
    if p.rank() == 1 && p.degree() == q.degree() {
        let (a, b) = (coefficient_matrix(p), coefficient_matrix(q));
        let (ga, gb) = (a.adjoint() * &a, b.adjoint() * &b);
        let scale = to_f64(ga.trace().re) / to_f64(gb.trace().re);
        let scaled = gb * C::new(crate::scalar::re::<T>(scale), T::zero());
        let beta = max_abs(&(&ga - &scaled)) / max_abs(&ga).max(1e-300);
        residuals.insert("beta".into(), beta);
        witness.push_str(&format!("; coefficient Gram mismatch {beta:.3e}"));
    }
    Ok(EquivalenceVerdict::from_residuals(residuals, tolerance, witness))
}

/// Rank-1 frame from a kernel's eigen-section, a convenience for callers.
pub fn kernel_line<T: Real>(spec: &DiagonalKernelSpec<T>) -> Result<Frame<T>, GeometryError> {
    Ok(Frame::new(vec![section_from_kernel(spec)])?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Step;
    use crate::model::{derivative_frame, random_unitary, Polynomial, PolynomialSection};
    use crate::scalar::cplx;

    fn hardy() -> Frame<f64> {
        kernel_line(&DiagonalKernelSpec::hardy(1, 60)).unwrap()
    }

    fn bergman() -> Frame<f64> {
        kernel_line(&DiagonalKernelSpec::bergman(60)).unwrap()
    }

    fn poly(c: &[f64]) -> Polynomial<f64> {
        Polynomial::univariate(&c.iter().map(|&x| cplx(x, 0.0)).collect::<Vec<_>>())
    }

    fn line(entries: &[&[f64]]) -> Frame<f64> {
        Frame::new(vec![PolynomialSection::new(entries.iter().map(|c| poly(c)).collect())]).unwrap()
    }

    #[test]
    fn b1_examples() {
        let s = default_samples::<f64>();
        assert_eq!(s.len(), 25);
        let v = b1_unitary_equivalence(&hardy(), &hardy(), &s, DEFAULT_TOLERANCE).unwrap();
        assert_eq!(v.verdict, Verdict::Equivalent);
        let v = b1_unitary_equivalence(&hardy(), &bergman(), &[vec![cplx(0.0, 0.0)]], DEFAULT_TOLERANCE).unwrap();
        assert_eq!(v.verdict, Verdict::NotEquivalent);
        assert!(v.witness.contains("-1 vs -2"), "{}", v.witness);
        let rescaled = hardy().mul_poly(&poly(&[1.0, 1.0]));
        // stay inside the truncation's accuracy range
        let s = crate::model::disk_samples::<f64>(0.3, 9);
        let v = b1_unitary_equivalence(&hardy(), &rescaled, &s, 1e-6).unwrap();
        assert_eq!(v.verdict, Verdict::Equivalent, "{:?}", v.residuals);
    }

    #[test]
    fn fb2_examples() {
        let h = || DiagonalKernelSpec::<f64>::hardy(1, 30);
        let s = default_samples::<f64>();
        let a = Fb2Model::new(h(), h(), cplx(1.0, 0.0)).unwrap();
        assert_eq!(
            fb2_unitary_equivalence(&a, &a, &s, DEFAULT_TOLERANCE).unwrap().verdict,
            Verdict::Equivalent
        );
        let b = Fb2Model::new(h(), h(), cplx(2.0, 0.0)).unwrap();
        let v = fb2_unitary_equivalence(&a, &b, &[vec![cplx(0.0, 0.0)]], DEFAULT_TOLERANCE).unwrap();
        assert_eq!(v.verdict, Verdict::NotEquivalent);
        assert!(v.witness.contains("1 vs 4"), "{}", v.witness);
        let c = Fb2Model::new(DiagonalKernelSpec::bergman(30), h(), cplx(1.0, 0.0)).unwrap();
        let v = fb2_unitary_equivalence(&a, &c, &[vec![cplx(0.0, 0.0)]], DEFAULT_TOLERANCE).unwrap();
        assert!(v.witness.contains("-1 vs -2"), "{}", v.witness);
        let rot = a.rotated(random_unitary(31, 1), random_unitary(31, 2));
        assert_eq!(
            fb2_unitary_equivalence(&a, &rot, &s, DEFAULT_TOLERANCE).unwrap().verdict,
            Verdict::Equivalent
        );
    }

    #[test]
    fn shift_examples() {
        let h = DiagonalKernelSpec::<f64>::hardy(1, 60);
        let v = weighted_shift_similarity(&h, &h).unwrap();
        assert_eq!(v.verdict, Verdict::Equivalent);
        assert_eq!((v.residuals["min_ratio"], v.residuals["max_ratio"]), (1.0, 1.0));
        let v = weighted_shift_similarity(&h, &DiagonalKernelSpec::bergman(60)).unwrap();
        assert_eq!(v.verdict, Verdict::NotEquivalent);
        assert!(v.trend.as_ref().unwrap().monotone);
        let b = DiagonalKernelSpec::from_weights(1, 60, |i| ((i.get(0) as f64 + 2.0) / (i.get(0) as f64 + 1.0)).sqrt()).unwrap();
        let v = weighted_shift_similarity(&h, &b).unwrap();
        assert_eq!(v.verdict, Verdict::Equivalent);
        assert!(v.residuals["max_ratio"] <= 2f64.sqrt() + 1e-15 && v.residuals["min_ratio"] >= 1.0);
        assert!(v.residuals["telescoping"] < 1e-12);
        // swapping the arguments inverts the bounds
        let w = weighted_shift_similarity(&b, &h).unwrap();
        assert!((w.residuals["max_ratio"] - 1.0 / v.residuals["min_ratio"]).abs() < 1e-14);
        assert!((w.residuals["min_ratio"] - 1.0 / v.residuals["max_ratio"]).abs() < 1e-14);
    }

    #[test]
    fn product_intertwine_examples() {
        let c = ExtendedCurve::projection(derivative_frame(&section_from_kernel(&DiagonalKernelSpec::<f64>::hardy(1, 20)), 1).unwrap());
        let s = vec![vec![cplx(0.1, 0.2)], vec![cplx(-0.3, 0.0)]];
        let id = CMat::<f64>::identity(21, 21);
        assert_eq!(product_intertwine_check(&c, &c, &id, (2, 2), &s).unwrap().residual, 0.0);
        let u = random_unitary::<f64>(21, 3);
        let r = product_intertwine_check(&c, &c.conjugated(&u), &u, (2, 2), &s).unwrap();
        assert!(r.residual < 1e-9, "{r:?}");
        let b = ExtendedCurve::projection(derivative_frame(&section_from_kernel(&DiagonalKernelSpec::<f64>::bergman(20)), 1).unwrap());
        assert!(product_intertwine_check(&c, &b, &id, (2, 2), &s).unwrap().residual > 1e-3);
    }

    #[test]
    fn similarity_witness_examples() {
        let t = section_from_kernel(&DiagonalKernelSpec::<f64>::bergman(20));
        let c = ExtendedCurve::projection(derivative_frame(&t, 2).unwrap());
        let base = vec![cplx(0.2, -0.1)];
        let id = CMat::<f64>::identity(21, 21);
        let w = classical_similarity_witness(&c, &c, &id, &DerivPlan::empty(), &base).unwrap();
        assert_eq!(w.hypothesis, 0.0);
        assert!(w.intertwining < 1e-14 && w.inverse < 1e-14);
        let u = random_unitary::<f64>(21, 5);
        let c2 = c.conjugated(&u);
        for plan in [
            DerivPlan::empty(),
            DerivPlan::new(vec![Step::Hol(1)]),
            DerivPlan::new(vec![Step::AntiHol(1), Step::Hol(1)]),
        ] {
            let w = classical_similarity_witness(&c, &c2, &u, &plan, &base).unwrap();
            assert!(w.hypothesis < 1e-12 && w.intertwining < 1e-8 && w.inverse < 1e-9, "{plan}: {w:?}");
        }
    }

    #[test]
    fn twist_examples() {
        let s = default_samples::<f64>();
        let p = line(&[&[1.0], &[0.0, 1.0]]);
        let v = finite_rank_twist_equivalence(&p, &p, &s, DEFAULT_TOLERANCE).unwrap();
        assert_eq!(v.verdict, Verdict::Equivalent);
        let q = p.mul_poly(&poly(&[1.0, 0.5]));
        let v = finite_rank_twist_equivalence(&p, &q, &s, DEFAULT_TOLERANCE).unwrap();
        assert_eq!(v.verdict, Verdict::Equivalent, "{:?}", v.residuals);
        assert!(!v.residuals.contains_key("beta"));
        let q = line(&[&[1.0], &[0.0, 2.0]]);
        let v = finite_rank_twist_equivalence(&p, &q, &s, DEFAULT_TOLERANCE).unwrap();
        assert_eq!(v.verdict, Verdict::NotEquivalent);
        assert!(v.residuals["log_ratio"] > 1e-3 && v.residuals["beta"] > 1e-3);
        // a unitary mix of the coordinates keeps the coefficient Gram
        let q = line(&[&[0.6, 0.8], &[0.8, -0.6]]);
        let v = finite_rank_twist_equivalence(&p, &q, &s, DEFAULT_TOLERANCE).unwrap();
        assert_eq!(v.verdict, Verdict::Equivalent, "{:?}", v.residuals);
    }
}
