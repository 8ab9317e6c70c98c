//! Extended holomorphic curves 𝓘 = F(G*F)⁻¹G*: jets, the holomorphy
//! identities, extended connection and curvature, ordered covariant
//! derivatives and their comparison with the classical bundle.

mod words;

pub use words::{alternates, degrees, reduce, Expansion, Factor, MixedRule, Word};

use std::collections::BTreeMap;

use crate::geometry::{gram, ClassicalBundle, Covariant, DerivPlan, GeometryError, Step};
use crate::indexing::{multinomial, MultiIndex};
use crate::jets::{condition_number, JetError, WirtingerJet, DEFAULT_CONDITION_BOUND};
use crate::model::{frame_eval_jet, Frame};
use crate::scalar::{max_abs, re, residual, residual_zero, CMat, Point, Real, C};

/// Highest total order for which monomial expansions are generated.
pub const EXPANSION_ORDER_CAP: u32 = 3;

// ----------------------------------------------------------------------------
// Curves

/// The pair (F, G) defining 𝓘 = F(G*F)⁻¹G*.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedCurve<T: Real> {
    pub f: Frame<T>,
    pub g: Frame<T>,
}

impl<T: Real> ExtendedCurve<T> {
    pub fn new(f: Frame<T>, g: Frame<T>) -> Result<Self, GeometryError> {
        if f.rank() != g.rank() || f.dim() != g.dim() || f.m() != g.m() {
            return Err(GeometryError::Incompatible(format!(
                "F is {}×{} in {} variables, G is {}×{} in {}",
                f.dim(),
                f.rank(),
                f.m(),
                g.dim(),
                g.rank(),
                g.m()
            )));
        }
        Ok(Self { f, g })
    }

    /// The orthogonal-projection curve of a frame (G = F).
    pub fn projection(f: Frame<T>) -> Self {
        Self { g: f.clone(), f }
    }

    pub fn m(&self) -> usize {
        self.f.m()
    }

    pub fn dim(&self) -> usize {
        self.f.dim()
    }

    pub fn rank(&self) -> usize {
        self.f.rank()
    }

    /// (UF, UG), whose 𝓘 is U𝓘U* for unitary U.
    pub fn conjugated(&self, u: &CMat<T>) -> Self {
        Self {
            f: self.f.apply(u),
            g: self.g.apply(u),
        }
    }

    /// 𝓘(λ) evaluated directly.
    pub fn eval(&self, at: &[C<T>]) -> Result<CMat<T>, GeometryError> {
        let f = self.f.eval(at);
        let gs = self.g.eval(at).adjoint();
        let h = &gs * &f;
        let cond = condition_number(&h);
        if !(cond <= DEFAULT_CONDITION_BOUND) {
            return Err(JetError::Singular(cond).into());
        }
        let inv = h.try_inverse().ok_or(JetError::Singular(cond))?;
        Ok(f * inv * gs)
    }
}

/// Jets of F, G* and H⁻¹ at a base point.
struct Parts<T: Real> {
    f: WirtingerJet<T>,
    gstar: WirtingerJet<T>,
    hinv: WirtingerJet<T>,
}

fn parts<T: Real>(c: &ExtendedCurve<T>, base: &Point<T>, caps: (u32, u32)) -> Result<Parts<T>, GeometryError> {
    let f = frame_eval_jet(&c.f, base, caps);
    let gstar = frame_eval_jet(&c.g, base, (caps.1, caps.0)).adjoint();
    let hinv = gstar.mul(&f)?.invert()?;
    Ok(Parts { f, gstar, hinv })
}

/// Jet of 𝓘 (D×D) at `base`.
pub fn curve_eval_jet<T: Real>(c: &ExtendedCurve<T>, base: &Point<T>, caps: (u32, u32)) -> Result<WirtingerJet<T>, GeometryError> {
    let p = parts(c, base, caps)?;
    Ok(p.f.mul(&p.hinv)?.mul(&p.gstar)?)
}

/// ‖𝓘² − 𝓘‖ at one point.
pub fn idempotency_residual<T: Real>(c: &ExtendedCurve<T>, at: &[C<T>]) -> Result<f64, GeometryError> {
    let v = c.eval(at)?;
    Ok(residual(&(&v * &v), &v))
}

// ----------------------------------------------------------------------------
// Holomorphy identities

/// Worst residuals of the four identities ∂ᵢ𝓘·𝓘 = ∂ᵢ𝓘, 𝓘·∂ᵢ𝓘 = 0,
/// 𝓘·∂̄ᵢ𝓘 = ∂̄ᵢ𝓘 and ∂̄ᵢ𝓘·𝓘 = 0, over coordinates and points.
#[derive(Clone, Debug, PartialEq)]
pub struct HolomorphyReport {
    pub identities: [f64; 4],
    pub max: f64,
    /// Index of the point attaining `max`.
    pub worst_point: usize,
}

/// The four identity residuals for any D×D jet with caps ≥ (1, 1).
pub fn holomorphy_residual<T: Real>(idem: &WirtingerJet<T>) -> Result<[f64; 4], GeometryError> {
    let m = idem.m();
    let v = idem.value();
    let zero = MultiIndex::zero(m);
    let mut out = [0.0f64; 4];
    for i in 0..m {
        let e = MultiIndex::unit(m, i);
        let d = idem.extract(&e, &zero)?;
        let db = idem.extract(&zero, &e)?;
        let sd = max_abs(&v).max(max_abs(&d));
        let sdb = max_abs(&v).max(max_abs(&db));
        let r = [
            residual(&(&d * &v), &d),
            residual_zero(&(&v * &d), sd),
            residual(&(&v * &db), &db),
            residual_zero(&(&db * &v), sdb),
        ];
        for (o, x) in out.iter_mut().zip(r) {
            *o = o.max(x);
        }
    }
    Ok(out)
}

pub fn holomorphy_check<T: Real>(c: &ExtendedCurve<T>, points: &[Point<T>]) -> Result<HolomorphyReport, GeometryError> {
    let mut report = HolomorphyReport {
        identities: [0.0; 4],
        max: 0.0,
        worst_point: 0,
    };
    for (n, p) in points.iter().enumerate() {
        let r = holomorphy_residual(&curve_eval_jet(c, p, (1, 1))?)?;
        for (o, x) in report.identities.iter_mut().zip(r) {
            *o = o.max(x);
        }
        let worst = r.iter().cloned().fold(0.0, f64::max);
        if worst > report.max || n == 0 {
            report.max = report.max.max(worst);
            report.worst_point = n;
        }
    }
    Ok(report)
}

// ----------------------------------------------------------------------------
// Connection, curvature and covariant derivatives

/// 𝓘 with 𝒦(𝓘) = (Σⱼ∂̄ⱼ𝓘)(Σᵢ∂ᵢ𝓘) and the steps X ↦ 𝓘∂_lX, X ↦ (∂̄_kX)𝓘.
#[derive(Clone, Debug)]
pub struct ExtendedBundle<T: Real> {
    pub idem: WirtingerJet<T>,
    pub k: WirtingerJet<T>,
}

impl<T: Real> ExtendedBundle<T> {
    pub fn new(idem: WirtingerJet<T>) -> Result<Self, GeometryError> {
        let k = idem.d_anti_sum()?.mul(&idem.d_hol_sum()?)?;
        Ok(Self { idem, k })
    }

    /// Bundle whose 𝓘 jet has the given caps.
    pub fn from_curve(c: &ExtendedCurve<T>, base: &Point<T>, caps: (u32, u32)) -> Result<Self, GeometryError> {
        Self::new(curve_eval_jet(c, base, caps)?)
    }
}

impl<T: Real> Covariant<T> for ExtendedBundle<T> {
    fn m(&self) -> usize {
        self.idem.m()
    }

    fn curvature(&self) -> &WirtingerJet<T> {
        &self.k
    }

    fn hol_step(&self, l: usize, x: &WirtingerJet<T>) -> Result<WirtingerJet<T>, GeometryError> {
        Ok(self.idem.mul(&x.d_hol(l - 1)?)?)
    }

    fn anti_step(&self, k: usize, x: &WirtingerJet<T>) -> Result<WirtingerJet<T>, GeometryError> {
        Ok(x.d_anti(k - 1)?.mul(&self.idem)?)
    }
}

/// 𝚯 = (∂F)H⁻¹G* − ∂𝓘, with caps `caps`.
pub fn extended_connection<T: Real>(c: &ExtendedCurve<T>, base: &Point<T>, caps: (u32, u32)) -> Result<WirtingerJet<T>, GeometryError> {
    let p = parts(c, base, (caps.0 + 1, caps.1))?;
    let tail = p.hinv.mul(&p.gstar)?;
    let idem = p.f.mul(&tail)?;
    Ok(p.f.d_hol_sum()?.mul(&tail)?.sub(&idem.d_hol_sum()?)?)
}

/// 𝒦(𝓘) with caps `caps`.
pub fn extended_curvature<T: Real>(c: &ExtendedCurve<T>, base: &Point<T>, caps: (u32, u32)) -> Result<WirtingerJet<T>, GeometryError> {
    Ok(ExtendedBundle::from_curve(c, base, (caps.0 + 1, caps.1 + 1))?.k)
}

/// 𝒦_plan(𝓘), built from a 𝓘 jet with caps `caps` (at least `plan.demand()`).
pub fn extended_covariant_derivative<T: Real>(
    c: &ExtendedCurve<T>,
    plan: &DerivPlan,
    base: &Point<T>,
    caps: (u32, u32),
) -> Result<WirtingerJet<T>, GeometryError> {
    plan.validate(c.m())?;
    ExtendedBundle::from_curve(c, base, caps)?.evaluate_recursive(plan)
}

/// Residual of 𝒦_plan (split recursion) against the sum over elementary
/// pairs (p, q) of the order-preserving sub-plans in Hol(p) and AntiHol(q),
/// each evaluated by composing steps.
pub fn d3_decomposition_check<T: Real>(c: &ExtendedCurve<T>, plan: &DerivPlan, base: &Point<T>) -> Result<f64, GeometryError> {
    let b = ExtendedBundle::from_curve(c, base, plan.demand())?;
    let rec = b.evaluate_recursive(plan)?.value();
    let pairs = b.evaluate_pairs(plan)?.value();
    Ok(residual(&rec, &pairs))
}

// ----------------------------------------------------------------------------
// Leibniz expansions

/// Which derivative of 𝓘 to expand.
#[derive(Clone, Debug, PartialEq)]
pub enum LeibnizItem {
    /// D^I𝓘 = Σ C(I,I₁) D^{I₁}F · D^{I−I₁}(H⁻¹) · G*.
    Hol(MultiIndex),
    /// D̄^J𝓘 = Σ C(J,J₁) F · D̄^{J₁}(H⁻¹) · D̄^{J−J₁}G*.
    Anti(MultiIndex),
    /// D̄_j D^I𝓘 through the commutator rewrite (zero-based j).
    MixedHol(MultiIndex, usize),
    /// D_i D̄^J𝓘 through the commutator rewrite (zero-based i).
    MixedAnti(MultiIndex, usize),
}

/// Residual of the direct derivative against the expansion, with the mixed
/// items summed over `rule`.
pub fn leibniz_residual<T: Real>(c: &ExtendedCurve<T>, item: &LeibnizItem, base: &Point<T>, rule: MixedRule) -> Result<f64, GeometryError> {
    let m = c.m();
    let zero = MultiIndex::zero(m);
    match item {
        LeibnizItem::Hol(i) => {
            let caps = (i.total_degree(), 0);
            let p = parts(c, base, caps)?;
            let direct = curve_eval_jet(c, base, caps)?.extract(i, &zero)?;
            let g = p.gstar.value();
            let mut acc = CMat::<T>::zeros(c.dim(), c.dim());
            for i1 in i.dominated() {
                let rest = i.checked_sub(&i1).unwrap();
                let w = multinomial(i, &i1).unwrap() as f64;
                acc += p.f.extract(&i1, &zero)? * p.hinv.extract(&rest, &zero)? * &g * C::new(re::<T>(w), T::zero());
            }
            Ok(residual(&direct, &acc))
        }
        LeibnizItem::Anti(j) => {
            let caps = (0, j.total_degree());
            let p = parts(c, base, caps)?;
            let direct = curve_eval_jet(c, base, caps)?.extract(&zero, j)?;
            let f = p.f.value();
            let mut acc = CMat::<T>::zeros(c.dim(), c.dim());
            for j1 in j.dominated() {
                let rest = j.checked_sub(&j1).unwrap();
                let w = multinomial(j, &j1).unwrap() as f64;
                acc += &f * p.hinv.extract(&zero, &j1)? * p.gstar.extract(&zero, &rest)? * C::new(re::<T>(w), T::zero());
            }
            Ok(residual(&direct, &acc))
        }
        LeibnizItem::MixedHol(i, j) => {
            let e = MultiIndex::unit(m, *j);
            let idem = curve_eval_jet(c, base, (i.total_degree(), 1))?;
            let direct = idem.extract(i, &e)?;
            let exp = Expansion::single(vec![Factor::Hol(i.clone())]).d_anti(*j, m, rule);
            Ok(residual(&direct, &evaluate_words(&exp, &idem)?))
        }
        LeibnizItem::MixedAnti(j, i) => {
            let e = MultiIndex::unit(m, *i);
            let idem = curve_eval_jet(c, base, (1, j.total_degree()))?;
            let direct = idem.extract(&e, j)?;
            let exp = Expansion::single(vec![Factor::Anti(j.clone())]).d_hol(*i, m, rule);
            Ok(residual(&direct, &evaluate_words(&exp, &idem)?))
        }
    }
}

/// Leibniz residual with the strict index set for the mixed items.
pub fn leibniz_expansion_check<T: Real>(c: &ExtendedCurve<T>, item: &LeibnizItem, base: &Point<T>) -> Result<f64, GeometryError> {
    leibniz_residual(c, item, base, MixedRule::Strict)
}

/// Value of a word expansion with factors taken from a 𝓘 jet.
pub fn evaluate_words<T: Real>(exp: &Expansion, idem: &WirtingerJet<T>) -> Result<CMat<T>, GeometryError> {
    let m = idem.m();
    let zero = MultiIndex::zero(m);
    let mut values = std::collections::HashMap::new();
    for w in exp.terms.keys() {
        for f in w {
            if !values.contains_key(f) {
                let v = match f {
                    Factor::Id => idem.value(),
                    Factor::Hol(i) => idem.extract(i, &zero)?,
                    Factor::Anti(j) => idem.extract(&zero, j)?,
                };
                values.insert(f.clone(), v);
            }
        }
    }
    let (d, _) = idem.shape();
    Ok(exp.evaluate(&|f: &Factor| values[f].clone(), d))
}

// ----------------------------------------------------------------------------
// Monomial expansions

/// D^I D̄^J𝓘 as a word expansion, differentiating in the Hol coordinates
/// first (`hol_first`) or the AntiHol ones first.
pub fn monomial_expansion(i: &MultiIndex, j: &MultiIndex, hol_first: bool, rule: MixedRule) -> Expansion {
    let m = i.dim();
    let hol: Vec<usize> = (0..m).flat_map(|c| std::iter::repeat_n(c, i.get(c) as usize)).collect();
    let anti: Vec<usize> = (0..m).flat_map(|c| std::iter::repeat_n(c, j.get(c) as usize)).collect();
    let mut e = Expansion::identity();
    let apply_hol = |e: Expansion| hol.iter().fold(e, |acc, &l| acc.d_hol(l, m, rule));
    let apply_anti = |e: Expansion| anti.iter().fold(e, |acc, &k| acc.d_anti(k, m, rule));
    e = if hol_first {
        apply_anti(apply_hol(e))
    } else {
        apply_hol(apply_anti(e))
    };
    e
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonomialReport {
    /// Worst residual over both differentiation orders.
    pub residual: f64,
    /// Same with the per-coordinate index set in the mixed rewrite.
    pub per_coordinate_residual: f64,
    /// Term counts (Hol first, AntiHol first).
    pub terms: (usize, usize),
    /// Every word alternates and carries total orders (|I|, |J|).
    pub well_formed: bool,
}

pub fn monomial_expansion_check<T: Real>(
    c: &ExtendedCurve<T>,
    i: &MultiIndex,
    j: &MultiIndex,
    base: &Point<T>,
) -> Result<MonomialReport, GeometryError> {
    let order = i.total_degree() + j.total_degree();
    if order > EXPANSION_ORDER_CAP {
        return Err(GeometryError::OrderCap {
            order,
            cap: EXPANSION_ORDER_CAP,
        });
    }
    let idem = curve_eval_jet(c, base, (i.total_degree(), j.total_degree()))?;
    let direct = idem.extract(i, j)?;
    let want = (i.total_degree(), j.total_degree());
    let mut report = MonomialReport {
        residual: 0.0,
        per_coordinate_residual: 0.0,
        terms: (0, 0),
        well_formed: true,
    };
    for hol_first in [true, false] {
        let exp = monomial_expansion(i, j, hol_first, MixedRule::Strict);
        report.residual = report.residual.max(residual(&direct, &evaluate_words(&exp, &idem)?));
        let lit = monomial_expansion(i, j, hol_first, MixedRule::PerCoordinate);
        report.per_coordinate_residual = report.per_coordinate_residual.max(residual(&direct, &evaluate_words(&lit, &idem)?));
        report.well_formed &= exp.terms.keys().all(|w| alternates(w) && degrees(w) == want);
        if hol_first {
            report.terms.0 = exp.len();
        } else {
            report.terms.1 = exp.len();
        }
    }
    Ok(report)
}

/// Composed 𝒦_plan(𝓘) as a word expansion: start from Σ D̄_k𝓘 D_l𝓘; a Hol(l) step
/// differentiates and multiplies by 𝓘 on the left, an AntiHol(k) step on the
/// right.
pub fn covariant_expansion(m: usize, plan: &DerivPlan, rule: MixedRule) -> Expansion {
    let mut e = Expansion::curvature(m);
    for s in &plan.steps {
        e = match *s {
            Step::Hol(l) => e.d_hol(l - 1, m, rule).prepend_id(),
            Step::AntiHol(k) => e.d_anti(k - 1, m, rule).append_id(),
        };
    }
    e
}

#[derive(Clone, Debug, PartialEq)]
pub struct CovariantExpansionReport {
    pub residual: f64,
    pub terms: usize,
    /// Words alternate, start with an AntiHol factor, end with a Hol factor,
    /// and their orders add up to (#Hol + 1, #AntiHol + 1).
    pub bookkeeping: bool,
}

pub fn covariant_expansion_check<T: Real>(
    c: &ExtendedCurve<T>,
    plan: &DerivPlan,
    base: &Point<T>,
) -> Result<CovariantExpansionReport, GeometryError> {
    plan.validate(c.m())?;
    let order = plan.len() as u32;
    if order > EXPANSION_ORDER_CAP {
        return Err(GeometryError::OrderCap {
            order,
            cap: EXPANSION_ORDER_CAP,
        });
    }
    let b = ExtendedBundle::from_curve(c, base, plan.demand())?;
    let direct = b.evaluate(plan)?.value();
    let exp = covariant_expansion(c.m(), plan, MixedRule::Strict);
    let (h, a) = plan.counts();
    let bookkeeping = exp.terms.keys().all(|w| {
        alternates(w)
            && matches!(w.first(), Some(Factor::Anti(_)))
            && matches!(w.last(), Some(Factor::Hol(_)))
            && degrees(w) == (h + 1, a + 1)
    });
    Ok(CovariantExpansionReport {
        residual: residual(&direct, &evaluate_words(&exp, &b.idem)?),
        terms: exp.len(),
        bookkeeping,
    })
}

// ----------------------------------------------------------------------------
// Intertwining with the classical bundle

/// Residuals of 𝒦_plan(𝓘)F = −F·K_plan and trace 𝒦_plan(𝓘) = −trace K_plan.
#[derive(Clone, Debug, PartialEq)]
pub struct IntertwineReport {
    pub plan: DerivPlan,
    pub intertwining: f64,
    pub trace: f64,
    /// Intertwining residual when both sides compose steps instead.
    pub composed: f64,
}

fn pair_residuals<T: Real>(ext: &WirtingerJet<T>, cls: &WirtingerJet<T>, f: &CMat<T>) -> (f64, f64) {
    let (e, k) = (ext.value(), cls.value());
    let lhs = &e * f;
    let rhs = -(f * &k);
    let te = CMat::from_element(1, 1, e.trace());
    let tk = CMat::from_element(1, 1, -k.trace());
    (residual(&lhs, &rhs), residual(&te, &tk))
}

pub fn thm1_report<T: Real>(c: &ExtendedCurve<T>, plan: &DerivPlan, base: &Point<T>) -> Result<IntertwineReport, GeometryError> {
    Ok(thm1_sweep(c, base, std::slice::from_ref(plan))?.remove(0))
}

/// Max-entry residual of 𝒦_plan(𝓘)F + F·K_plan at `base`.
pub fn thm1_residual<T: Real>(c: &ExtendedCurve<T>, plan: &DerivPlan, base: &Point<T>) -> Result<f64, GeometryError> {
    Ok(thm1_report(c, plan, base)?.intertwining)
}

/// Residual of trace 𝒦_plan(𝓘) + trace K_plan at `base`.
pub fn trace_residual<T: Real>(c: &ExtendedCurve<T>, plan: &DerivPlan, base: &Point<T>) -> Result<f64, GeometryError> {
    Ok(thm1_report(c, plan, base)?.trace)
}

/// Intertwining and trace residuals for many plans, in input order.
///
/// Plans are grouped by Hol count so that one pair of bundles serves each
/// group; sub-plans shared between plans are evaluated once.
pub fn thm1_sweep<T: Real>(c: &ExtendedCurve<T>, base: &Point<T>, plans: &[DerivPlan]) -> Result<Vec<IntertwineReport>, GeometryError> {
    let total = plans.iter().map(|p| p.len() as u32).max().unwrap_or(0);
    let f = c.f.eval(base);
    let mut out: Vec<Option<IntertwineReport>> = vec![None; plans.len()];
    for a in 0..=total {
        let idx: Vec<usize> = (0..plans.len()).filter(|&n| plans[n].counts().0 == a).collect();
        if idx.is_empty() {
            continue;
        }
        let caps = (a + 1, total - a + 1);
        let group: Vec<DerivPlan> = idx.iter().map(|&n| plans[n].clone()).collect();
        let eb = ExtendedBundle::from_curve(c, base, caps)?;
        let cb = ClassicalBundle::new(gram(&c.f, &c.g, base, caps)?)?;
        let ext = eb.evaluate_many_recursive(&group)?;
        let cls = cb.evaluate_many_recursive(&group)?;
        let ext_c = eb.evaluate_many(&group)?;
        let cls_c = cb.evaluate_many(&group)?;
        for (k, &n) in idx.iter().enumerate() {
            let (intertwining, trace) = pair_residuals(&ext[k], &cls[k], &f);
            let (composed, _) = pair_residuals(&ext_c[k], &cls_c[k], &f);
            out[n] = Some(IntertwineReport {
                plan: plans[n].clone(),
                intertwining,
                trace,
                composed,
            });
        }
    }
    Ok(out.into_iter().map(|r| r.expect("every plan grouped")).collect())
}

/// ‖𝒦_plan(U𝓘U*) − U𝒦_plan(𝓘)U*‖ for a unitary U.
pub fn unitary_invariance_residual<T: Real>(
    c: &ExtendedCurve<T>,
    u: &CMat<T>,
    plan: &DerivPlan,
    base: &Point<T>,
) -> Result<f64, GeometryError> {
    let caps = plan.demand();
    let k1 = extended_covariant_derivative(c, plan, base, caps)?.value();
    let k2 = extended_covariant_derivative(&c.conjugated(u), plan, base, caps)?.value();
    Ok(residual(&k2, &(u * k1 * u.adjoint())))
}

/// [`unitary_invariance_residual`] for many plans; plans with the same
/// demand share one pair of bundles.
pub fn unitary_invariance_sweep<T: Real>(
    c: &ExtendedCurve<T>,
    u: &CMat<T>,
    plans: &[DerivPlan],
    base: &Point<T>,
) -> Result<Vec<f64>, GeometryError> {
    let rotated = c.conjugated(u);
    let mut groups: BTreeMap<(u32, u32), Vec<usize>> = BTreeMap::new();
    for (k, p) in plans.iter().enumerate() {
        groups.entry(p.demand()).or_default().push(k);
    }
    let mut out = vec![0.0; plans.len()];
    for (caps, idx) in groups {
        let group: Vec<DerivPlan> = idx.iter().map(|&k| plans[k].clone()).collect();
        let k1 = ExtendedBundle::from_curve(c, base, caps)?.evaluate_many_recursive(&group)?;
        let k2 = ExtendedBundle::from_curve(&rotated, base, caps)?.evaluate_many_recursive(&group)?;
        for ((a, b), &k) in k1.iter().zip(&k2).zip(&idx) {
            out[k] = residual(&b.value(), &(u * a.value() * u.adjoint()));
        }
    }
    Ok(out)
}

// ----------------------------------------------------------------------------
// Order sensitivity

/// The two orderings of one Hol(l) and one AntiHol(k) step, with their
/// closed forms.
#[derive(Clone, Debug)]
pub struct OrderWitness<T: Real> {
    /// [AntiHol(k), Hol(l)].
    pub anti_then_hol: CMat<T>,
    /// [Hol(l), AntiHol(k)].
    pub hol_then_anti: CMat<T>,
    /// Normalized difference of the two.
    pub difference: f64,
    /// ∂̄_k∂̄𝓘·∂_l∂𝓘 − ∂̄𝓘∂_l𝓘∂̄_k𝓘∂𝓘 − ∂̄_k𝓘∂_l𝓘∂̄𝓘∂𝓘.
    pub anti_then_hol_closed: f64,
    /// ∂̄_k∂̄𝓘·∂_l∂𝓘 − ∂̄𝓘∂_l𝓘∂̄_k𝓘∂𝓘 − ∂̄𝓘∂𝓘∂̄_k𝓘∂_l𝓘.
    pub hol_then_anti_closed: f64,
    /// Worst of the two closed forms with leading term ∂̄_k∂𝓘·∂_l∂𝓘 instead.
    pub mixed_leading_term: f64,
}

/// Both orderings for 1-based coordinates l (Hol) and k (AntiHol).
pub fn order_witness<T: Real>(c: &ExtendedCurve<T>, l: usize, k: usize, base: &Point<T>) -> Result<OrderWitness<T>, GeometryError> {
    let ah = DerivPlan::new(vec![Step::AntiHol(k), Step::Hol(l)]);
    let ha = DerivPlan::new(vec![Step::Hol(l), Step::AntiHol(k)]);
    ah.validate(c.m())?;
    let b = ExtendedBundle::from_curve(c, base, (2, 2))?;
    let v = b.evaluate_many(&[ah, ha])?;
    let (x_ah, x_ha) = (v[0].value(), v[1].value());

    let i = &b.idem;
    let d = i.d_hol_sum()?;
    let db = i.d_anti_sum()?;
    let (dv, dbv) = (d.value(), db.value());
    let dl = i.d_hol(l - 1)?.value();
    let dbk = i.d_anti(k - 1)?.value();
    let dbk_db = db.d_anti(k - 1)?.value();
    let dbk_d = d.d_anti(k - 1)?.value();
    let dl_d = d.d_hol(l - 1)?.value();

    let middle = &dbv * &dl * &dbk * &dv;
    let tail_ah = &dbk * &dl * &dbv * &dv;
    let tail_ha = &dbv * &dv * &dbk * &dl;
    let lead = &dbk_db * &dl_d;
    let lead_mixed = &dbk_d * &dl_d;
    let closed_ah = &lead - &middle - &tail_ah;
    let closed_ha = &lead - &middle - &tail_ha;
    let mixed = residual(&x_ah, &(&lead_mixed - &middle - &tail_ah)).max(residual(&x_ha, &(&lead_mixed - &middle - &tail_ha)));
    Ok(OrderWitness {
        difference: residual(&x_ah, &x_ha),
        anti_then_hol_closed: residual(&x_ah, &closed_ah),
        hol_then_anti_closed: residual(&x_ha, &closed_ha),
        mixed_leading_term: mixed,
        anti_then_hol: x_ah,
        hol_then_anti: x_ha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::classical_connection;
    use crate::jets::fd_oracle;
    use crate::model::{derivative_frame, random_unitary, section_from_kernel, DiagonalKernelSpec};
    use crate::scalar::cplx;
    use std::time::Instant;

    fn pt(z: &[(f64, f64)]) -> Point<f64> {
        z.iter().map(|&(a, b)| cplx(a, b)).collect()
    }

    fn rank_one(spec: &DiagonalKernelSpec<f64>) -> Frame<f64> {
        derivative_frame(&section_from_kernel(spec), 1).unwrap()
    }

    fn hardy() -> ExtendedCurve<f64> {
        ExtendedCurve::projection(rank_one(&DiagonalKernelSpec::hardy(1, 40)))
    }

    fn hardy_bergman() -> ExtendedCurve<f64> {
        ExtendedCurve::new(
            rank_one(&DiagonalKernelSpec::hardy(1, 40)),
            rank_one(&DiagonalKernelSpec::bergman(40)),
        )
        .unwrap()
    }

    fn da_rank_one() -> ExtendedCurve<f64> {
        ExtendedCurve::projection(rank_one(&DiagonalKernelSpec::drury_arveson(2, 6)))
    }

    fn da_rank_two() -> ExtendedCurve<f64> {
        let t = section_from_kernel(&DiagonalKernelSpec::drury_arveson(2, 6));
        ExtendedCurve::projection(derivative_frame(&t, 2).unwrap())
    }

    fn e0e0(d: usize) -> CMat<f64> {
        let mut m = CMat::<f64>::zeros(d, d);
        m[(0, 0)] = cplx(1.0, 0.0);
        m
    }

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    #[test]
    fn eval_examples() {
        let c = hardy();
        let v = curve_eval_jet(&c, &pt(&[(0.0, 0.0)]), (1, 1)).unwrap().value();
        assert!(residual(&v, &e0e0(c.dim())) < 1e-14);
        let v = curve_eval_jet(&hardy_bergman(), &pt(&[(0.0, 0.0)]), (0, 0)).unwrap().value();
        assert!(residual(&v, &e0e0(c.dim())) < 1e-14);
        // constant orthonormal frame: constant projection
        let f = Frame::new(vec![crate::model::PolynomialSection::new(vec![
            crate::model::Polynomial::constant(1, cplx(0.6, 0.0)),
            crate::model::Polynomial::constant(1, cplx(0.0, 0.8)),
        ])])
        .unwrap();
        let j = curve_eval_jet(&ExtendedCurve::projection(f), &pt(&[(0.3, 0.1)]), (2, 2)).unwrap();
        assert!(j.d_hol(0).unwrap().max_abs() < 1e-15);
        assert!(j.d_anti(0).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn jet_matches_direct_and_fd() {
        let c = hardy_bergman();
        let base = pt(&[(0.3, -0.2)]);
        let jet = curve_eval_jet(&c, &base, (2, 2)).unwrap();
        assert!(residual(&jet.value(), &c.eval(&base).unwrap()) < 1e-12);
        let sampler = |p: &Point<f64>| c.eval(p).unwrap();
        for (i, j) in [(mi(&[1]), mi(&[0])), (mi(&[0]), mi(&[1])), (mi(&[1]), mi(&[1]))] {
            let fd = fd_oracle(&sampler, &base, &i, &j, 1e-4);
            assert!(residual(&jet.extract(&i, &j).unwrap(), &fd) < 1e-5, "{i} {j}");
        }
    }

    #[test]
    fn idempotent_and_holomorphic() {
        for c in [hardy(), hardy_bergman(), da_rank_one(), da_rank_two()] {
            let pts: Vec<Point<f64>> = if c.m() == 1 {
                vec![pt(&[(0.0, 0.0)]), pt(&[(0.3, 0.0)]), pt(&[(0.4, 0.2)])]
            } else {
                vec![pt(&[(0.0, 0.0), (0.0, 0.0)]), pt(&[(0.2, 0.0), (0.0, 0.1)])]
            };
            for p in &pts {
                assert!(idempotency_residual(&c, p).unwrap() < 1e-10);
            }
            assert!(holomorphy_check(&c, &pts).unwrap().max < 1e-9);
        }
    }

    #[test]
    fn transposed_projection_fails_holomorphy() {
        let j = curve_eval_jet(&hardy_bergman(), &pt(&[(0.0, 0.0)]), (1, 1)).unwrap();
        let r = holomorphy_residual(&j.transpose()).unwrap();
        assert!(r.iter().cloned().fold(0.0, f64::max) > 1e-3);
    }

    #[test]
    fn connection_examples() {
        let c = hardy();
        for x in [0.0, 0.3] {
            let base = pt(&[(x, 0.0)]);
            let theta = extended_connection(&c, &base, (0, 0)).unwrap().value();
            let idem = c.eval(&base).unwrap();
            assert!(residual(&(&theta * &idem), &theta) < 1e-9);
            let f = c.f.eval(&base);
            let h = gram(&c.f, &c.g, &base, (1, 0)).unwrap();
            let classical = classical_connection(&h).unwrap().value();
            assert!(residual(&(&theta * &f), &(&f * classical)) < 1e-9);
        }
    }

    #[test]
    fn curvature_examples() {
        let c = hardy();
        let base = pt(&[(0.0, 0.0)]);
        let k = extended_curvature(&c, &base, (0, 0)).unwrap().value();
        let f = c.f.eval(&base);
        // 𝒦F = −FK with K(0) = −1
        assert!(residual(&(&k * &f), &f) < 1e-12);
        assert!((k.trace() - cplx(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn covariant_examples() {
        let c = hardy();
        let base = pt(&[(0.0, 0.0)]);
        let empty = extended_covariant_derivative(&c, &DerivPlan::empty(), &base, (1, 1))
            .unwrap()
            .value();
        assert!(residual(&empty, &extended_curvature(&c, &base, (0, 0)).unwrap().value()) < 1e-15);
        let x = extended_covariant_derivative(&c, &DerivPlan::new(vec![Step::Hol(1)]), &base, (2, 1))
            .unwrap()
            .value();
        assert!(residual(&(&x * c.eval(&base).unwrap()), &x) < 1e-9);
        let short = extended_covariant_derivative(&c, &DerivPlan::new(vec![Step::Hol(1)]), &base, (1, 1));
        assert!(matches!(short, Err(GeometryError::Jet(JetError::CapExhausted))));
    }

    #[test]
    fn decomposition_examples() {
        let one = pt(&[(0.3, 0.1)]);
        let two = pt(&[(0.2, 0.0), (0.0, 0.1)]);
        let p = DerivPlan::new(vec![Step::Hol(1), Step::AntiHol(1)]);
        assert_eq!(d3_decomposition_check(&hardy(), &p, &one).unwrap(), 0.0);
        let p = DerivPlan::new(vec![Step::Hol(1), Step::Hol(2), Step::AntiHol(1)]);
        assert!(d3_decomposition_check(&da_rank_one(), &p, &two).unwrap() < 1e-8);
        assert!(d3_decomposition_check(&da_rank_two(), &p, &two).unwrap() < 1e-8);
        let p = DerivPlan::hol_first(&mi(&[2]), &mi(&[1]));
        assert!(d3_decomposition_check(&hardy_bergman(), &p, &one).unwrap() < 1e-8);
    }

    #[test]
    fn leibniz_examples() {
        let c = hardy();
        let base = pt(&[(0.3, 0.0)]);
        assert_eq!(leibniz_expansion_check(&c, &LeibnizItem::Hol(mi(&[0])), &base).unwrap(), 0.0);
        assert!(leibniz_expansion_check(&c, &LeibnizItem::Hol(mi(&[2])), &base).unwrap() < 1e-9);
        assert!(leibniz_expansion_check(&hardy_bergman(), &LeibnizItem::Anti(mi(&[2])), &base).unwrap() < 1e-9);
        let two = pt(&[(0.2, 0.0), (0.0, 0.1)]);
        assert!(leibniz_expansion_check(&da_rank_one(), &LeibnizItem::Anti(mi(&[1, 1])), &two).unwrap() < 1e-9);
        for c in [da_rank_one(), da_rank_two()] {
            for item in [
                LeibnizItem::MixedHol(mi(&[1, 1]), 0),
                LeibnizItem::MixedAnti(mi(&[1, 1]), 1),
                LeibnizItem::MixedHol(mi(&[2, 0]), 1),
            ] {
                assert!(leibniz_expansion_check(&c, &item, &two).unwrap() < 1e-9, "{item:?}");
            }
        }
    }

    #[test]
    fn per_coordinate_index_set_fails_for_mixed_multi_index() {
        let two = pt(&[(0.2, 0.0), (0.0, 0.1)]);
        let c = da_rank_two();
        let item = LeibnizItem::MixedAnti(mi(&[1, 1]), 0);
        assert!(leibniz_residual(&c, &item, &two, MixedRule::PerCoordinate).unwrap() > 1e-6);
        // in one variable the two index sets coincide
        let item = LeibnizItem::MixedHol(mi(&[3]), 0);
        let one = pt(&[(0.3, 0.1)]);
        assert!(leibniz_residual(&hardy_bergman(), &item, &one, MixedRule::PerCoordinate).unwrap() < 1e-9);
    }

    #[test]
    fn monomial_examples() {
        let one = pt(&[(0.3, 0.0)]);
        let r = monomial_expansion_check(&hardy(), &mi(&[1]), &mi(&[1]), &one).unwrap();
        assert!(r.residual < 1e-9 && r.well_formed);
        assert_eq!(r.terms, (2, 2));
        let r = monomial_expansion_check(&hardy(), &mi(&[2]), &mi(&[1]), &one).unwrap();
        assert!(r.residual < 1e-8 && r.well_formed);
        let r = monomial_expansion_check(&hardy_bergman(), &mi(&[0]), &mi(&[2]), &one).unwrap();
        assert!(r.residual < 1e-12 && r.terms == (1, 1));
        assert!(matches!(
            monomial_expansion_check(&hardy(), &mi(&[2]), &mi(&[2]), &one),
            Err(GeometryError::OrderCap { order: 4, cap: 3 })
        ));
    }

    #[test]
    fn monomial_expansions_up_to_order_three() {
        let two = pt(&[(0.2, 0.0), (0.0, 0.1)]);
        let c = da_rank_two();
        for i in crate::indexing::enumerate_upto(2, &crate::indexing::Bound::Total(3)) {
            for j in crate::indexing::enumerate_upto(2, &crate::indexing::Bound::Total(3 - i.total_degree())) {
                let r = monomial_expansion_check(&c, &i, &j, &two).unwrap();
                assert!(r.residual < 1e-8 && r.well_formed, "{i} {j}: {r:?}");
            }
        }
    }

    #[test]
    fn covariant_expansions_match_steps() {
        let two = pt(&[(0.2, 0.0), (0.0, 0.1)]);
        let c = da_rank_two();
        for plan in DerivPlan::enumerate(2, 3, 3, 3) {
            let r = covariant_expansion_check(&c, &plan, &two).unwrap();
            assert!(r.residual < 1e-8 && r.bookkeeping, "{plan}: {r:?}");
        }
    }

    #[test]
    fn thm1_examples() {
        let zero = pt(&[(0.0, 0.0)]);
        assert!(thm1_residual(&hardy(), &DerivPlan::empty(), &zero).unwrap() < 1e-10);
        let p = DerivPlan::new(vec![Step::Hol(1), Step::AntiHol(1)]);
        assert!(thm1_residual(&hardy_bergman(), &p, &pt(&[(0.3, 0.0)])).unwrap() < 1e-8);
        let p = DerivPlan::new(vec![Step::AntiHol(2), Step::Hol(1)]);
        assert!(thm1_residual(&da_rank_one(), &p, &pt(&[(0.2, 0.0), (0.0, 0.1)])).unwrap() < 1e-8);
    }

    #[test]
    fn sweep_matches_single_plans_and_holds() {
        let two = pt(&[(0.2, 0.0), (0.0, 0.1)]);
        let c = da_rank_two();
        let plans = DerivPlan::enumerate(2, 3, 3, 3);
        let start = Instant::now();
        let sweep = thm1_sweep(&c, &two, &plans).unwrap();
        eprintln!("{} plans in {:?}", plans.len(), start.elapsed());
        for r in &sweep {
            assert!(r.intertwining < 1e-8 && r.trace < 1e-8 && r.composed < 1e-8, "{r:?}");
        }
        for n in [0, 5, 17, plans.len() - 1] {
            let single = thm1_report(&c, &plans[n], &two).unwrap();
            assert!((single.intertwining - sweep[n].intertwining).abs() < 1e-9);
        }
    }

    #[test]
    fn unitary_invariance() {
        let two = pt(&[(0.2, 0.0), (0.0, 0.1)]);
        let c = da_rank_two();
        let u = random_unitary::<f64>(c.dim(), 7);
        for plan in [DerivPlan::empty(), DerivPlan::new(vec![Step::Hol(2), Step::AntiHol(1)])] {
            assert!(unitary_invariance_residual(&c, &u, &plan, &two).unwrap() < 1e-8);
        }
    }

    #[test]
    fn order_witness_rank_two() {
        let two = pt(&[(0.2, 0.0), (0.0, 0.1)]);
        let w = order_witness(&da_rank_two(), 1, 2, &two).unwrap();
        assert!(w.difference > 1e-6, "{}", w.difference);
        assert!(w.anti_then_hol_closed < 1e-9, "{}", w.anti_then_hol_closed);
        assert!(w.hol_then_anti_closed < 1e-9, "{}", w.hol_then_anti_closed);
        assert!(w.mixed_leading_term > 1e-6, "{}", w.mixed_leading_term);
    }

    #[test]
    fn orders_agree_in_one_variable_and_rank_one() {
        let w = order_witness(&hardy_bergman(), 1, 1, &pt(&[(0.4, 0.0)])).unwrap();
        assert!(w.difference < 1e-12, "{}", w.difference);
        let w = order_witness(&da_rank_one(), 1, 2, &pt(&[(0.2, 0.0), (0.0, 0.1)])).unwrap();
        assert!(w.difference < 1e-12, "{}", w.difference);
    }
}
