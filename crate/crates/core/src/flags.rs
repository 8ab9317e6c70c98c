//! Flag structure of FB₂ and OFB_n models: the explicit projection
//! decomposition, the θ relation, the jet-flag bundle maps and the
//! commutativity of their diagram.

use thiserror::Error;

use crate::curves::ExtendedCurve;
use crate::geometry::{conjugation_trace_check, eval_poly_matrix, frame_change_matrix, gram, DerivPlan, GeometryError};
use crate::model::{fb2_frame, fmt_point, ofb_frame, Fb2Model, Frame, ModelError, Polynomial, PolynomialSection, SignConvention};
use crate::scalar::{re, residual, to_f64, CMat, CVec, Point, Real, C};

/// |h₀h₁ − K h₀²| below this (relative to h₀h₁) is treated as vanishing.
pub const DENOMINATOR_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlagError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("h0*h1 - K*h0^2 vanishes at {at} ({value:e})")]
    VanishingDenominator { at: String, value: f64 },
    #[error("{0}")]
    Dimension(String),
}

// ----------------------------------------------------------------------------
// FB₂ decomposition

/// P_T = (1−θ)(P_{T₀} ⊕ P_{T₁}) + θ·C at one point, together with the direct
/// projection γh⁻¹γ* it should reproduce.
#[derive(Clone, Debug)]
pub struct Fb2Decomposition<T: Real> {
    pub theta: f64,
    /// K_{T₀} = −∂∂̄ log h₀.
    pub curvature: f64,
    pub h0: f64,
    pub h1: f64,
    pub p_t0: CMat<T>,
    pub p_t1: CMat<T>,
    /// C, whose blocks are F_{P_T}, S_{P_T}, S_{P_T}* and 0.
    pub coupling: CMat<T>,
    pub direct: CMat<T>,
    pub dims: (usize, usize),
}

impl<T: Real> Fb2Decomposition<T> {
    pub fn diag_part(&self) -> CMat<T> {
        let (d0, d1) = self.dims;
        let mut out = CMat::zeros(d0 + d1, d0 + d1);
        out.view_mut((0, 0), (d0, d0)).copy_from(&self.p_t0);
        out.view_mut((d0, d0), (d1, d1)).copy_from(&self.p_t1);
        out
    }

    /// F_{P_T}, the upper-left block of the coupling part.
    pub fn f_block(&self) -> CMat<T> {
        let d0 = self.dims.0;
        self.coupling.view((0, 0), (d0, d0)).into_owned()
    }

    /// S_{P_T}, the upper-right block.
    pub fn s_block(&self) -> CMat<T> {
        let (d0, d1) = self.dims;
        self.coupling.view((0, d0), (d0, d1)).into_owned()
    }

    pub fn reassembled(&self) -> CMat<T> {
        let t = C::new(re::<T>(self.theta), T::zero());
        let one = C::new(T::one(), T::zero());
        self.diag_part() * (one - t) + &self.coupling * t
    }

    pub fn reassembly_residual(&self) -> f64 {
        residual(&self.reassembled(), &self.direct)
    }

    pub fn idempotency(&self) -> f64 {
        residual(&(&self.direct * &self.direct), &self.direct)
    }

    pub fn self_adjointness(&self) -> f64 {
        residual(&self.direct.adjoint(), &self.direct)
    }
}

/// t₀, t₀′, t₁ evaluated at λ with h₀, ∂h₀, ∂∂̄h₀ and h₁.
struct Fb2Data<T: Real> {
    t0: CVec<T>,
    dt0: CVec<T>,
    t1: CVec<T>,
    h0: f64,
    dh0: C<T>,
    ddh0: f64,
    h1: f64,
}

fn fb2_data<T: Real>(model: &Fb2Model<T>, at: &[C<T>]) -> Fb2Data<T> {
    let (s0, s1) = (model.t0(), model.t1());
    let t0 = CVec::from_vec(s0.eval(at));
    let dt0 = CVec::from_vec(s0.derivative(0).eval(at));
    let t1 = CVec::from_vec(s1.eval(at));
    let h0 = to_f64(t0.norm_squared());
    let dh0 = t0.dotc(&dt0);
    let ddh0 = to_f64(dt0.norm_squared());
    let h1 = to_f64(t1.norm_squared());
    Fb2Data {
        t0,
        dt0,
        t1,
        h0,
        dh0,
        ddh0,
        h1,
    }
}

fn outer<T: Real>(a: &CVec<T>, s: C<T>, b: &CVec<T>) -> CMat<T> {
    a * b.adjoint() * s
}

/// The decomposition at λ with θ = −K h₀²/(h₀h₁ − K h₀²) and coupling
/// C = M/(K h₀²), where for γ₁ = t₀′ + εt₁
///
/// M₀₀ = −t₀(∂∂̄h₀)t₀* + t₀∂h₀t₀′* + t₀′∂̄h₀t₀* − t₀′h₀t₀′*,
/// M₀₁ = ε(t₀∂h₀ − t₀′h₀)t₁*, M₁₀ = M₀₁*, M₁₁ = 0.
pub fn fb2_projection<T: Real>(model: &Fb2Model<T>, at: &Point<T>, sign: SignConvention) -> Result<Fb2Decomposition<T>, FlagError> {
    let d = fb2_data(model, at);
    let k = -(d.h0 * d.ddh0 - d.dh0.norm_sqr().to_f64().unwrap()) / (d.h0 * d.h0);
    let denom = d.h0 * d.h1 - k * d.h0 * d.h0;
    if denom.abs() <= DENOMINATOR_FLOOR * (d.h0 * d.h1).abs() || k == 0.0 {
        return Err(FlagError::VanishingDenominator {
            at: fmt_point(at),
            value: denom,
        });
    }
    let theta = -k * d.h0 * d.h0 / denom;
    let c = |x: f64| C::new(re::<T>(x), T::zero());
    let eps = match sign {
        SignConvention::Plus => c(1.0),
        SignConvention::Minus => c(-1.0),
    };
    let (d0, d1) = model.dims();
    let m00 =
        outer(&d.t0, c(-d.ddh0), &d.t0) + outer(&d.t0, d.dh0, &d.dt0) + outer(&d.dt0, d.dh0.conj(), &d.t0) - outer(&d.dt0, c(d.h0), &d.dt0);
    let m01 = (outer(&d.t0, d.dh0, &d.t1) - outer(&d.dt0, c(d.h0), &d.t1)) * eps;
    let mut coupling = CMat::zeros(d0 + d1, d0 + d1);
    coupling.view_mut((0, 0), (d0, d0)).copy_from(&m00);
    coupling.view_mut((0, d0), (d0, d1)).copy_from(&m01);
    coupling.view_mut((d0, 0), (d1, d0)).copy_from(&m01.adjoint());
    coupling *= c(1.0 / (k * d.h0 * d.h0));

    let p_t0 = outer(&d.t0, c(1.0 / d.h0), &d.t0);
    let p_t1 = outer(&d.t1, c(1.0 / d.h1), &d.t1);
    let direct = ExtendedCurve::projection(fb2_frame(model, sign)).eval(at)?;
    Ok(Fb2Decomposition {
        theta,
        curvature: k,
        h0: d.h0,
        h1: d.h1,
        p_t0,
        p_t1,
        coupling,
        direct,
        dims: (d0, d1),
    })
}

/// R₊ = θh₁ + (1+θ)K h₀ and R₋ = θh₁ + (1−θ)K h₀.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaRelation {
    pub plus: f64,
    pub minus: f64,
}

pub fn fb2_theta_relation<T: Real>(model: &Fb2Model<T>, at: &Point<T>) -> Result<ThetaRelation, FlagError> {
    let dec = fb2_projection(model, at, SignConvention::Plus)?;
    let (t, k, h0, h1) = (dec.theta, dec.curvature, dec.h0, dec.h1);
    Ok(ThetaRelation {
        plus: t * h1 + (1.0 + t) * k * h0,
        minus: t * h1 + (1.0 - t) * k * h0,
    })
}

/// Residuals of C(t₀ ⊕ 0) = t₀ ⊕ 0 and C(t₀′ ⊕ 0) = t₀′ ⊕ εt₁, and of
/// F_{P_T} acting as the identity on span{t₀, t₀′}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JetAction {
    pub first: f64,
    pub second: f64,
    pub identity: f64,
}

pub fn fb2_jet_action_check<T: Real>(model: &Fb2Model<T>, at: &Point<T>, sign: SignConvention) -> Result<JetAction, FlagError> {
    let dec = fb2_projection(model, at, sign)?;
    let d = fb2_data(model, at);
    let (d0, d1) = dec.dims;
    let lift = |top: &CVec<T>, bottom: Option<CVec<T>>| {
        let mut v = CVec::zeros(d0 + d1);
        v.rows_mut(0, d0).copy_from(top);
        if let Some(b) = bottom {
            v.rows_mut(d0, d1).copy_from(&b);
        }
        v
    };
    let eps = match sign {
        SignConvention::Plus => C::new(T::one(), T::zero()),
        SignConvention::Minus => C::new(-T::one(), T::zero()),
    };
    let col = |v: CVec<T>| CMat::from_column_slice(v.len(), 1, v.as_slice());
    let first = residual(&col(&dec.coupling * lift(&d.t0, None)), &col(lift(&d.t0, None)));
    let second = residual(&col(&dec.coupling * lift(&d.dt0, None)), &col(lift(&d.dt0, Some(&d.t1 * eps))));
    let jet = CMat::from_columns(&[d.t0.clone(), d.dt0.clone()]);
    let identity = residual(&(dec.f_block() * &jet), &jet);
    Ok(JetAction { first, second, identity })
}

// ----------------------------------------------------------------------------
// Projection curves

/// The orthogonal projection curve P(λ) = αh⁻¹α* of a frame, with its worst
/// idempotency and self-adjointness residuals over the samples.
#[derive(Clone, Debug)]
pub struct ProjectionCurve<T: Real> {
    pub curve: ExtendedCurve<T>,
    pub idempotency: f64,
    pub self_adjointness: f64,
}

pub fn projection_curve<T: Real>(frame: &Frame<T>, samples: &[Point<T>]) -> Result<ProjectionCurve<T>, FlagError> {
    frame.check_independent(samples)?;
    let curve = ExtendedCurve::projection(frame.clone());
    let (mut idem, mut adj) = (0.0f64, 0.0f64);
    for p in samples {
        let v = curve.eval(p)?;
        idem = idem.max(residual(&(&v * &v), &v));
        adj = adj.max(residual(&v.adjoint(), &v));
    }
    Ok(ProjectionCurve {
        curve,
        idempotency: idem,
        self_adjointness: adj,
    })
}

/// Worst ‖P₂ − U P₁ U*‖ over the samples.
pub fn congruence_residual<T: Real>(
    p1: &ExtendedCurve<T>,
    p2: &ExtendedCurve<T>,
    u: &CMat<T>,
    samples: &[Point<T>],
) -> Result<f64, FlagError> {
    let mut worst = 0.0f64;
    for p in samples {
        let (a, b) = (p1.eval(p)?, p2.eval(p)?);
        worst = worst.max(residual(&b, &(u * a * u.adjoint())));
    }
    Ok(worst)
}

// ----------------------------------------------------------------------------
// Jet flags

/// Residuals of the flag diagram at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct FlagReport {
    /// Worst i∘J_k − J_{k+1}∘i on the jet-flag basis, 0 ≤ k ≤ n−2.
    pub commutativity: f64,
    /// Worst U_k J_k − J̃_k U₀ for the rotated sections.
    pub conjugation: Option<f64>,
    /// Worst P̃_{T(i)} − D_i P_{T(i)} D_i* with D_i = diag(U⁰, …, U^{i−1}).
    pub nesting: Option<f64>,
}

fn block_offsets<T: Real>(t: &[PolynomialSection<T>]) -> (Vec<usize>, usize) {
    let mut off = vec![];
    let mut acc = 0;
    for s in t {
        off.push(acc);
        acc += s.dim();
    }
    (off, acc)
}

/// Columns t₀^{(j)} ⊕ 0 and Σ_{i≤j} t_i^{(j−i)} (block i), for j ≤ k.
fn flag_bases<T: Real>(t: &[PolynomialSection<T>], k: usize, at: &[C<T>]) -> (CMat<T>, CMat<T>) {
    let (off, total) = block_offsets(t);
    let mut a = CMat::zeros(total, k + 1);
    let mut b = CMat::zeros(total, k + 1);
    for j in 0..=k {
        for i in 0..=j {
            let v = t[i]
                .derivative_multi(&crate::indexing::MultiIndex::new(vec![(j - i) as u32]))
                .eval(at);
            for (r, z) in v.into_iter().enumerate() {
                if i == 0 {
                    a[(off[0] + r, j)] = z;
                }
                b[(off[i] + r, j)] = z;
            }
        }
    }
    (a, b)
}

/// J_k as the ambient matrix B_k A_k⁺.
fn j_map<T: Real>(t: &[PolynomialSection<T>], k: usize, at: &[C<T>]) -> Result<(CMat<T>, CMat<T>), FlagError> {
    let (a, b) = flag_bases(t, k, at);
    let pinv = a
        .clone()
        .pseudo_inverse(re::<T>(1e-13))
        .map_err(|e| FlagError::Dimension(e.to_string()))?;
    Ok((a, b * pinv))
}

fn block_diag<T: Real>(u: &[CMat<T>]) -> CMat<T> {
    let total: usize = u.iter().map(|x| x.nrows()).sum();
    let mut out = CMat::zeros(total, total);
    let mut o = 0;
    for x in u {
        out.view_mut((o, o), (x.nrows(), x.nrows())).copy_from(x);
        o += x.nrows();
    }
    out
}

fn leading_projection<T: Real>(t: &[PolynomialSection<T>], i: usize, at: &[C<T>]) -> Result<CMat<T>, FlagError> {
    Ok(ExtendedCurve::projection(ofb_frame(&t[..i], i)?).eval(at)?)
}

/// Commutativity of the jet-flag diagram for sections t₀, …, t_{n−1} at λ;
/// with `rotation` = (U⁰, …, U^{n−1}) also the conjugated diagram and the
/// leading-block projection nesting.
pub fn flag_diagram_check<T: Real>(
    t: &[PolynomialSection<T>],
    n: usize,
    at: &Point<T>,
    rotation: Option<&[CMat<T>]>,
) -> Result<FlagReport, FlagError> {
    if t.len() < n || at.len() != 1 || t.iter().any(|s| s.m() != 1) {
        return Err(FlagError::Dimension(format!("need {n} one-variable sections, got {}", t.len())));
    }
    let t = &t[..n];
    let maps = (0..n).map(|k| j_map(t, k, at)).collect::<Result<Vec<_>, _>>()?;
    let mut commutativity = 0.0f64;
    for k in 0..n.saturating_sub(1) {
        let (a, jk) = &maps[k];
        let (_, jn) = &maps[k + 1];
        commutativity = commutativity.max(residual(&(jk * a), &(jn * a)));
    }
    let (conjugation, nesting) = match rotation {
        None => (None, None),
        Some(u) => {
            if u.len() < n || u.iter().zip(t).any(|(x, s)| x.shape() != (s.dim(), s.dim())) {
                return Err(FlagError::Dimension("rotation blocks do not match the sections".into()));
            }
            let rotated: Vec<PolynomialSection<T>> = t.iter().zip(u).map(|(s, x)| s.apply(x)).collect();
            let d = block_diag(&u[..n]);
            let mut conj = 0.0f64;
            for (k, (a, jk)) in maps.iter().enumerate() {
                let (_, jt) = j_map(&rotated, k, at)?;
                conj = conj.max(residual(&(&d * jk * a), &(jt * (&d * a))));
            }
            let mut nest = 0.0f64;
            for i in 1..=n {
                let di = block_diag(&u[..i]);
                let p = leading_projection(t, i, at)?;
                let pt = leading_projection(&rotated, i, at)?;
                nest = nest.max(residual(&pt, &(&di * p * di.adjoint())));
            }
            (Some(conj), Some(nest))
        }
    };
    Ok(FlagReport {
        commutativity,
        conjugation,
        nesting,
    })
}

/// For t̃_i = φt_i: the OFB frames satisfy γ̃ = γΦ with Φ_{ij} = C(j,i)φ^{(j−i)},
/// and the classical covariant derivatives conjugate by Φ.
#[derive(Clone, Debug, PartialEq)]
pub struct OfbFrameChange {
    pub frame: f64,
    /// Worst conjugation residual over the plans.
    pub conjugation: f64,
    /// Worst trace residual over the plans.
    pub trace: f64,
}

pub fn ofb_frame_change_check<T: Real>(
    t: &[PolynomialSection<T>],
    phi: &Polynomial<T>,
    n: usize,
    at: &Point<T>,
    plans: &[DerivPlan],
) -> Result<OfbFrameChange, FlagError> {
    let scaled: Vec<PolynomialSection<T>> = t.iter().map(|s| s.mul_poly(phi)).collect();
    let g = ofb_frame(t, n)?;
    let gt = ofb_frame(&scaled, n)?;
    let big_phi = frame_change_matrix(phi, n);
    let frame = residual(&gt.eval(at), &(g.eval(at) * eval_poly_matrix(&big_phi, at)));
    let caps = plans.iter().map(|p| p.demand()).fold((1, 1), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    let (h, ht) = (gram(&g, &g, at, caps)?, gram(&gt, &gt, at, caps)?);
    let (mut conjugation, mut trace) = (0.0f64, 0.0f64);
    for p in plans {
        let r = conjugation_trace_check(&h, &ht, &big_phi, p)?;
        conjugation = conjugation.max(r.conjugation);
        trace = trace.max(r.trace);
    }
    Ok(OfbFrameChange { frame, conjugation, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{random_unitary, section_from_kernel, DiagonalKernelSpec};
    use crate::scalar::cplx;

    fn model(k0: DiagonalKernelSpec<f64>) -> Fb2Model<f64> {
        Fb2Model::new(k0, DiagonalKernelSpec::hardy(1, 30), cplx(1.0, 0.0)).unwrap()
    }

    fn zero() -> Point<f64> {
        vec![cplx(0.0, 0.0)]
    }

    #[test]
    fn theta_examples() {
        let d = fb2_projection(&model(DiagonalKernelSpec::hardy(1, 30)), &zero(), SignConvention::Plus).unwrap();
        assert!((d.theta - 0.5).abs() < 1e-15);
        assert!(d.idempotency() < 1e-12);
        let d = fb2_projection(&model(DiagonalKernelSpec::bergman(30)), &zero(), SignConvention::Plus).unwrap();
        assert!((d.theta - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn theta_relation_examples() {
        let r = fb2_theta_relation(&model(DiagonalKernelSpec::hardy(1, 30)), &zero()).unwrap();
        assert!(r.minus.abs() < 1e-15);
        assert!((r.plus + 1.0).abs() < 1e-15);
        let r = fb2_theta_relation(&model(DiagonalKernelSpec::bergman(30)), &zero()).unwrap();
        assert!(r.minus.abs() < 1e-15);
    }

    #[test]
    fn reassembly_everywhere() {
        for k0 in [DiagonalKernelSpec::hardy(1, 30), DiagonalKernelSpec::bergman(30)] {
            let m = Fb2Model::new(k0, DiagonalKernelSpec::bergman(30), cplx(0.7, -0.4)).unwrap();
            let m = m.rotated(random_unitary(31, 11), random_unitary(31, 12));
            for p in crate::model::disk_samples::<f64>(0.6, 25) {
                for sign in [SignConvention::Plus, SignConvention::Minus] {
                    let d = fb2_projection(&m, &p, sign).unwrap();
                    assert!(d.reassembly_residual() < 1e-9, "{}", d.reassembly_residual());
                    assert!(d.idempotency() < 1e-10 && d.self_adjointness() < 1e-10);
                }
                assert!(fb2_theta_relation(&m, &p).unwrap().minus.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn jet_action_examples() {
        let m = model(DiagonalKernelSpec::hardy(1, 30));
        let a = fb2_jet_action_check(&m, &zero(), SignConvention::Plus).unwrap();
        assert!(a.first < 1e-10 && a.second < 1e-10 && a.identity < 1e-10, "{a:?}");
        // C(t₀′ ⊕ 0) at 0 is e₁ ⊕ e₀
        let d = fb2_projection(&m, &zero(), SignConvention::Plus).unwrap();
        let mut v = CVec::<f64>::zeros(62);
        v[1] = cplx(1.0, 0.0);
        let out = &d.coupling * v;
        assert!((out[1] - cplx(1.0, 0.0)).norm() < 1e-12 && (out[31] - cplx(1.0, 0.0)).norm() < 1e-12);
        assert!(out.iter().filter(|z| z.norm() > 1e-12).count() == 2);
        // with γ₁ = t₀′ − t₁ the second action lands on t₀′ ⊕ (−t₁)
        let a = fb2_jet_action_check(&m, &zero(), SignConvention::Minus).unwrap();
        assert!(a.second < 1e-10);
    }

    #[test]
    fn projection_curve_examples() {
        let t = section_from_kernel(&DiagonalKernelSpec::<f64>::hardy(1, 20));
        let f = Frame::new(vec![t]).unwrap();
        let samples = crate::model::disk_samples::<f64>(0.5, 9);
        let pc = projection_curve(&f, &samples).unwrap();
        assert!(pc.idempotency < 1e-10 && pc.self_adjointness < 1e-10);
        let mut e = CMat::<f64>::zeros(21, 21);
        e[(0, 0)] = cplx(1.0, 0.0);
        assert!(residual(&pc.curve.eval(&zero()).unwrap(), &e) < 1e-15);
        let u = random_unitary::<f64>(21, 4);
        let pu = projection_curve(&f.apply(&u), &samples).unwrap();
        assert!(congruence_residual(&pc.curve, &pu.curve, &u, &samples).unwrap() < 1e-10);
    }

    #[test]
    fn flag_examples() {
        let sections = vec![
            section_from_kernel(&DiagonalKernelSpec::<f64>::hardy(1, 12)),
            section_from_kernel(&DiagonalKernelSpec::<f64>::bergman(12)),
            section_from_kernel(&DiagonalKernelSpec::<f64>::hardy(1, 12)),
        ];
        let at = vec![cplx(0.2, 0.0)];
        assert_eq!(flag_diagram_check(&sections, 1, &at, None).unwrap().commutativity, 0.0);
        for n in [2, 3] {
            let r = flag_diagram_check(&sections, n, &at, None).unwrap();
            assert!(r.commutativity < 1e-10, "{r:?}");
        }
        let u: Vec<CMat<f64>> = (0..3).map(|k| random_unitary(13, 20 + k)).collect();
        let r = flag_diagram_check(&sections, 3, &at, Some(&u)).unwrap();
        assert!(r.conjugation.unwrap() < 1e-10 && r.nesting.unwrap() < 1e-10, "{r:?}");
    }

    #[test]
    fn ofb_frame_change() {
        let sections = vec![
            section_from_kernel(&DiagonalKernelSpec::<f64>::hardy(1, 12)),
            section_from_kernel(&DiagonalKernelSpec::<f64>::bergman(12)),
            section_from_kernel(&DiagonalKernelSpec::<f64>::hardy(1, 12)),
            section_from_kernel(&DiagonalKernelSpec::<f64>::bergman(12)),
        ];
        let phi = Polynomial::univariate(&[cplx(1.0, 0.0), cplx(0.3, 0.2), cplx(0.0, -0.1)]);
        let plans = DerivPlan::enumerate(1, 2, 2, 2);
        for n in 1..=4 {
            let r = ofb_frame_change_check(&sections, &phi, n, &vec![cplx(0.15, 0.1)], &plans).unwrap();
            assert!(r.frame < 1e-12 && r.conjugation < 1e-8 && r.trace < 1e-8, "n={n}: {r:?}");
        }
    }
}
