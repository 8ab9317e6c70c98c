//! Task runners: each turns a scenario task into named checks.

use holocurve::classify::{
    b1_unitary_equivalence, classical_similarity_witness, default_samples, fb2_unitary_equivalence, finite_rank_twist_equivalence,
    kernel_line, product_intertwine_check, weighted_shift_similarity, EquivalenceVerdict, Verdict,
};
use holocurve::curves::{
    covariant_expansion_check, curve_eval_jet, d3_decomposition_check, extended_curvature, holomorphy_check, idempotency_residual,
    leibniz_residual, monomial_expansion_check, order_witness, thm1_sweep, unitary_invariance_sweep, ExtendedBundle, LeibnizItem,
    MixedRule,
};
use holocurve::flags::{
    congruence_residual, fb2_jet_action_check, fb2_projection, fb2_theta_relation, flag_diagram_check, ofb_frame_change_check,
};
use holocurve::geometry::{classical_curvature, gram, Covariant, DerivPlan};
use holocurve::indexing::{enumerate_upto, Bound};
use holocurve::jets::fd_cross_check;
use holocurve::model::{fb2_frame, fmt_point, random_unitary, section_from_kernel, SignConvention};
use holocurve::scalar::{cplx, residual, CMat, CVec};
use holocurve::{Curve, Frame, Matrix, Point, Polynomial};

use crate::report::Check;
use crate::scenario::{ClassifyKind, Expectation, Scenario, TaskKind, TaskSpec, Variant};

/// Difference of the two mixed orderings that counts as order dependence.
pub const WITNESS_THRESHOLD: f64 = 1e-6;
/// Longest plan the word expansions are carried to.
pub const EXPANSION_MAX_LEN: usize = 3;
pub const FD_STEP: f64 = 1e-4;
pub const FD_MAX_ORDER: u32 = 3;
/// Finite differencing re-evaluates the whole curve dozens of times per
/// point, so the pass samples at most this many points, evenly spread.
pub const FD_MAX_POINTS: usize = 5;

pub type TaskOutput = Result<(Vec<Check>, Vec<String>), String>;

/// Everything a runner needs besides its own spec.
pub struct Ctx<'a> {
    pub scenario: &'a Scenario,
    pub tolerance: Option<f64>,
    pub orders: (u32, u32),
    pub points: Vec<Point>,
}

impl Ctx<'_> {
    /// CLI override, then task, then scenario, then the check's default.
    fn tol(&self, spec: &TaskSpec, default: f64) -> f64 {
        self.tolerance
            .or(spec.tolerance)
            .or(self.scenario.file.tolerance)
            .unwrap_or(default)
    }

    fn plans(&self, spec: &TaskSpec, default_len: usize) -> Vec<DerivPlan> {
        DerivPlan::enumerate(self.scenario.m(), spec.max_len.unwrap_or(default_len), self.orders.0, self.orders.1)
    }

    fn points(&self) -> &[Point] {
        &self.points
    }
}

/// Running maximum with a description of where it was attained. NaN wins.
struct Worst {
    value: f64,
    at: String,
}

impl Worst {
    fn new() -> Self {
        Self {
            value: 0.0,
            at: String::new(),
        }
    }

    fn see(&mut self, v: f64, at: impl FnOnce() -> String) {
        if self.at.is_empty() || (!self.value.is_nan() && (v.is_nan() || v > self.value)) {
            self.value = v;
            self.at = at();
        }
    }

    fn at_most(&self, name: &str, subject: &str, tol: f64) -> Check {
        Check::at_most(name, subject, self.value, tol).with_detail(self.at.clone())
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn pt(p: &Point) -> String {
    fmt_point(p)
}

pub fn run(ctx: &Ctx, spec: &TaskSpec) -> TaskOutput {
    if let Some(idx) = &spec.points {
        let points = idx
            .iter()
            .map(|&k| {
                ctx.points
                    .get(k)
                    .cloned()
                    .ok_or_else(|| format!("no sample point {k} ({} kept)", ctx.points.len()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let narrowed = Ctx {
            scenario: ctx.scenario,
            tolerance: ctx.tolerance,
            orders: ctx.orders,
            points,
        };
        return dispatch(&narrowed, spec);
    }
    dispatch(ctx, spec)
}

fn dispatch(ctx: &Ctx, spec: &TaskSpec) -> TaskOutput {
    match spec.task {
        TaskKind::Curvature => curvature(ctx, spec),
        TaskKind::Idempotency => idempotency(ctx, spec),
        TaskKind::Holomorphy => holomorphy(ctx, spec),
        TaskKind::Thm1 => thm1(ctx, spec),
        TaskKind::D3 => d3(ctx, spec),
        TaskKind::Leibniz => leibniz(ctx, spec),
        TaskKind::Monomial => monomial(ctx, spec),
        TaskKind::CovariantExpansion => covariant_expansion(ctx, spec),
        TaskKind::OrderWitness => order(ctx, spec),
        TaskKind::UnitaryInvariance => unitary(ctx, spec),
        TaskKind::Similarity => similarity(ctx, spec),
        TaskKind::Fb2 => fb2(ctx, spec),
        TaskKind::Flags => flags(ctx, spec),
        TaskKind::OfbFrameChange => ofb(ctx, spec),
        TaskKind::Classify => classify(ctx, spec),
        TaskKind::FdCheck => fd(ctx, spec),
    }
}

// ----------------------------------------------------------------------------
// Curves

/// Classical curvature of F*F at a point; the trace when the rank exceeds 1.
pub fn curvature_value(f: &Frame, p: &Point) -> Result<f64, String> {
    let k = classical_curvature(&gram(f, f, p, (1, 1)).map_err(err)?).map_err(err)?.value();
    Ok(k.trace().re)
}

fn curvature(ctx: &Ctx, spec: &TaskSpec) -> TaskOutput {
    let tol = ctx.tol(spec, 1e-8);
    let mut checks = vec![];
    for (name, c) in ctx.scenario.curves_for(spec) {
        let first = ctx.points().first().ok_or("no sample points")?;
        let k0 = curvature_value(&c.f, first)?;
        checks.push(Check::reported("value", &name, k0, tol).with_detail(format!("at {}", pt(first))));
        if let Some(Expectation::Value(v)) = &spec.expect {
            checks.push(Check::at_most("expected_value", &name, (k0 - v).abs(), tol).with_detail(format!("{k0} vs {v} at {}", pt(first))));
        }
        if let Some(coef) = spec.closed_form {
            let mut w = Worst::new();
            for p in ctx.points() {
                let r2: f64 = p.iter().map(|z| z.norm_sqr()).sum();
                let exact = -coef / (1.0 - r2).powi(2);
                let k = curvature_value(&c.f, p)?;
                w.see((k - exact).abs(), || format!("{k} vs {exact} at {}", pt(p)));
            }
            checks.push(w.at_most("closed_form", &name, tol));
        }
    }
    Ok((checks, vec![]))
}

fn idempotency(ctx: &Ctx, spec: &TaskSpec) -> TaskOutput {
    let tol = ctx.tol(spec, 1e-10);
    let mut checks = vec![];
    for (name, c) in ctx.scenario.curves_for(spec) {
        let mut w = Worst::new();
        for p in ctx.points() {
            w.see(idempotency_residual(c, p).map_err(err)?, || pt(p));
        }
        checks.push(w.at_most("idempotency", &name, tol));
    }
    Ok((checks, vec![]))
}

fn holomorphy(ctx: &Ctx, spec: &TaskSpec) -> TaskOutput {
    let tol = ctx.tol(spec, 1e-9);
    let mut checks = vec![];
    for (name, c) in ctx.scenario.curves_for(spec) {
        let r = holomorphy_check(c, ctx.points()).map_err(err)?;
        let detail = format!("identities {:?}, worst at {}", r.identities, pt(&ctx.points()[r.worst_point]));
        checks.push(Check::at_most("identities", &name, r.max, tol).with_detail(detail));
    }
    Ok((checks, vec![]))
}

fn thm1(ctx: &Ctx, spec: &TaskSpec) -> TaskOutput {
    let tol = ctx.tol(spec, 1e-8);
    let plans = ctx.plans(spec, 4);
    let mut checks = vec![];
    for (name, c) in ctx.scenario.curves_for(spec) {
        let (mut inter, mut trace, mut composed) = (Worst::new(), Worst::new(), Worst::new());
        for p in ctx.points() {
            for r in thm1_sweep(c, p, &plans).map_err(err)? {
                inter.see(r.intertwining, || format!("{} at {}", r.plan, pt(p)));
                trace.see(r.trace, || format!("{} at {}", r.plan, pt(p)));
                composed.see(r.composed, || format!("{} at {}", r.plan, pt(p)));
            }
        }
        checks.push(inter.at_most("intertwining", &name, tol));
        checks.push(trace.at_most("trace", &name, tol));
        let comp = composed.at_most("composed_intertwining", &name, tol);
        checks.push(if spec.variant == Some(Variant::Composed) {
            comp
        } else {
            Check {
                passed: true,
                relation: crate::report::Relation::Reported,
                ..comp
            }
        });
    }
    let detail = format!("{} plans per point", plans.len());
    Ok((checks, vec![detail]))
}

fn d3(ctx: &Ctx, spec: &TaskSpec) -> TaskOutput {
    let tol = ctx.tol(spec, 1e-8);
    let plans = ctx.plans(spec, 3);
    let composed = spec.variant == Some(Variant::Composed);
    let mut checks = vec![];
    for (name, c) in ctx.scenario.curves_for(spec) {
        let mut w = Worst::new();
        for p in ctx.points() {
            if composed {
                let demand = plans.iter().map(|q| q.demand()).fold((0, 0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
                let b = ExtendedBundle::from_curve(c, p, demand).map_err(err)?;
                for plan in &plans {
                    let r = residual(
                        &b.evaluate(plan).map_err(err)?.value(),
                        &b.evaluate_pairs(plan).map_err(err)?.value(),
                    );
                    w.see(r, || format!("{plan} at {}", pt(p)));
                }
            } else {
                for plan in &plans {
                    w.see(d3_decomposition_check(c, plan, p).map_err(err)?, || format!("{plan} at {}", pt(p)));
                }
            }
        }
        checks.push(w.at_most(if composed { "composed_pair_sum" } else { "pair_sum" }, &name, tol));
    }
    Ok((checks, vec![]))
}

fn leibniz_items(m: usize) -> Vec<LeibnizItem> {
    let mut items = vec![];
    for i in enumerate_upto(m, &Bound::Total(3)).into_iter().filter(|i| !i.is_zero()) {
        items.push(LeibnizItem::Hol(i.clone()));
        items.push(LeibnizItem::Anti(i.clone()));
        if i.total_degree() <= 2 {
            for k in 0..m {
                items.push(LeibnizItem::MixedHol(i.clone(), k));
                items.push(LeibnizItem::MixedAnti(i.clone(), k));
            }
        }
    }
    items
}

fn rule(spec: &TaskSpec) -> MixedRule {
    if spec.variant == Some(Variant::PerCoordinate) {
        MixedRule::PerCoordinate
    } else {
        MixedRule::Strict
    }
}

fn leibniz(ctx: &Ctx, spec: &TaskSpec) -> TaskOutput {
    let tol = ctx.tol(spec, 1e-8);
    let items = leibniz_items(ctx.scenario.m());
    let mut checks = vec![];
    for (name, c) in ctx.scenario.curves_for(spec) {
        let mut w = Worst::new();
        for p in ctx.points() {
            for item in &items {
                w.see(leibniz_residual(c, item, p, rule(spec)).map_err(err)?, || {
                    format!("{item:?} at {}", pt(p))
                });
            }
        }
        checks.push(w.at_most("expansion", &name, tol));
    }
    Ok((checks, vec![format!("{} items per point", items.len())]))
}

fn monomial(ctx: &Ctx, spec: &TaskSpec) -> TaskOutput {
    let tol = ctx.tol(spec, 1e-8);
    let m = ctx.scenario.m();
    let idx = enumerate_upto(m, &Bound::Total(3));
    let mut checks = vec![];
    for (name, c) in ctx.scenario.curves_for(spec) {
        let (mut w, mut malformed) = (Worst::new(), 0usize);
        for p in ctx.points() {
            for i in &idx {
                for j in &idx {
                    if i.total_degree() + j.total_degree() > 3 || (i.is_zero() && j.is_zero()) {
                        continue;
                    }
                    let r = monomial_expansion_check(c, i, j, p).map_err(err)?;
                    let v = if rule(spec) == MixedRule::PerCoordinate {
                        r.per_coordinate_residual
                    } else {
                        r.residual
                    };
                    w.see(v, || format!("I={i} J={j} at {}", pt(p)));
                    malformed += usize::from(!r.well_formed);
                }
            }
        }
        checks.push(w.at_most("expansion", &name, tol));
        checks.push(Check::at_most("malformed_words", &name, malformed as f64, 0.0));
    }
    Ok((checks, vec![]))
}

fn covariant_expansion(ctx: &Ctx, spec: &TaskSpec) -> TaskOutput {
    let tol = ctx.tol(spec, 1e-8);
    let plans = ctx.plans(spec, EXPANSION_MAX_LEN);
    let mut checks = vec![];
    for (name, c) in ctx.scenario.curves_for(spec) {
        let (mut w, mut broken) = (Worst::new(), 0usize);
        for p in ctx.points() {
            for plan in plans.iter().filter(|q| q.len() <= EXPANSION_MAX_LEN) {
                let r = covariant_expansion_check(c, plan, p).map_err(err)?;
                w.see(r.residual, || format!("{plan} at {}", pt(p)));
                broken += usize::from(!r.bookkeeping);
            }
        }
        checks.push(w.at_most("expansion", &name, tol));
        checks.push(Check::at_most("bookkeeping_violations", &name, broken as f64, 0.0));
    }
    Ok((checks, vec![]))
}

fn order(ctx: &Ctx, spec: &TaskSpec) -> TaskOutput {
    let tol = ctx.tol(spec, 1e-8);
    let m = ctx.scenario.m();
    let mixed = spec.variant == Some(Variant::MixedLeadingTerm);
    let mut checks = vec![];
    let mut witness = Worst::new();
    for (name, c) in ctx.scenario.curves_for(spec) {
        let (mut diff, mut closed) = (Worst::new(), Worst::new());
        for p in ctx.points() {
            for l in 1..=m {
                for k in 1..=m {
                    let o = order_witness(c, l, k, p).map_err(err)?;
                    let at = || format!("l={l} k={k} at {}", pt(p));
                    diff.see(o.difference, at);
                    witness.see(o.difference, || format!("{name}, l={l} k={k} at {}", pt(p)));
                    let cf = if mixed {
                        o.mixed_leading_term
                    } else {
                        o.anti_then_hol_closed.max(o.hol_then_anti_closed)
                    };
                    closed.see(cf, at);
                }
            }
        }
        checks.push(Check::reported("difference", &name, diff.value, WITNESS_THRESHOLD).with_detail(diff.at));
        checks.push(closed.at_most(if mixed { "mixed_leading_closed_form" } else { "closed_forms" }, &name, tol));
    }
    checks.push(Check::exceeds("order_dependence", "all", witness.value, WITNESS_THRESHOLD).with_detail(witness.at));
    Ok((checks, vec![]))
}

fn unitary(ctx: &Ctx, spec: &TaskSpec) -> TaskOutput {
    let tol = ctx.tol(spec, 1e-8);
    let plans = ctx.plans(spec, 3);
    let seed = spec.seed.unwrap_or(7);
    let mut checks = vec![];
    for (name, c) in ctx.scenario.curves_for(spec) {
        let u = random_unitary(c.dim(), seed);
        let mut w = Worst::new();
        for p in ctx.points() {
            for (plan, r) in plans.iter().zip(unitary_invariance_sweep(c, &u, &plans, p).map_err(err)?) {
                w.see(r, || format!("{plan} at {}", pt(p)));
            }
        }
        checks.push(w.at_most("conjugation", &name, tol));
    }
    Ok((checks, vec![]))
}

fn similarity(ctx: &Ctx, spec: &TaskSpec) -> TaskOutput {
    let tol = ctx.tol(spec, 1e-8);
    let tol_inv = ctx.tol(spec, 1e-9);
    let plans = ctx.plans(spec, 2);
    let seed = spec.seed.unwrap_or(11);
    let mut checks = vec![];
    for (name, c) in ctx.scenario.curves_for(spec) {
        let u = random_unitary(c.dim(), seed);
        let c2 = c.conjugated(&u);
        let (mut hyp, mut inter, mut inv) = (Worst::new(), Worst::new(), Worst::new());
        for p in ctx.points() {
            for plan in &plans {
                let r = classical_similarity_witness(c, &c2, &u, plan, p).map_err(err)?;
                let at = || format!("{plan} at {}", pt(p));
                hyp.see(r.hypothesis, at);
                inter.see(r.intertwining, at);
                inv.see(r.inverse, at);
            }
        }
        checks.push(hyp.at_most("hypothesis", &name, tol_inv));
        checks.push(inter.at_most("intertwining", &name, tol));
        checks.push(inv.at_most("inverse", &name, tol_inv));
        let r = product_intertwine_check(c, &c2, &u, ctx.orders, ctx.points()).map_err(err)?;
        checks.push(Check::at_most("product_intertwining", &name, r.residual, tol).with_detail(format!("I={} J={}", r.worst.0, r.worst.1)));
    }
    Ok((checks, vec![]))
}

// ----------------------------------------------------------------------------
// FB₂ and flags

fn fb2(ctx: &Ctx, spec: &TaskSpec) -> TaskOutput {
    let tol_re = ctx.tol(spec, 1e-9);
    let tol_proj = ctx.tol(spec, 1e-10);
    let tol_jet = ctx.tol(spec, 1e-10);
    let minus = spec.variant == Some(Variant::MinusSign);
    let sign = if minus { SignConvention::Minus } else { SignConvention::Plus };
    let mut checks = vec![];
    for (name, model) in ctx.scenario.models_for(spec) {
        let (mut re, mut idem, mut adj, mut rm, mut rp, mut jet) =
            (Worst::new(), Worst::new(), Worst::new(), Worst::new(), Worst::new(), Worst::new());
        for p in ctx.points() {
            let at = || pt(p);
            let d = fb2_projection(model, p, sign).map_err(err)?;
            re.see(d.reassembly_residual(), at);
            idem.see(d.idempotency(), at);
            adj.see(d.self_adjointness(), at);
            let r = fb2_theta_relation(model, p).map_err(err)?;
            rm.see(r.minus.abs(), at);
            rp.see(r.plus.abs(), at);
            let a = fb2_jet_action_check(model, p, sign).map_err(err)?;
            let second = if minus {
                // the image t₀′ ⊕ (−t₁) against the displayed t₀′ ⊕ t₁
                let (t0d, t1) = (CVec::from_vec(model.t0().derivative(0).eval(p)), CVec::from_vec(model.t1().eval(p)));
                let (d0, d1) = model.dims();
                let mut v = CVec::zeros(d0 + d1);
                v.rows_mut(0, d0).copy_from(&t0d);
                let mut want = v.clone();
                want.rows_mut(d0, d1).copy_from(&t1);
                let col = |x: CVec<f64>| CMat::from_column_slice(x.len(), 1, x.as_slice());
                residual(&col(&d.coupling * v), &col(want))
            } else {
                a.second
            };
            jet.see(a.first.max(second).max(a.identity), at);
        }
        checks.push(re.at_most("reassembly", &name, tol_re));
        checks.push(idem.at_most("idempotency", &name, tol_proj));
        checks.push(adj.at_most("self_adjointness", &name, tol_proj));
        checks.push(rm.at_most("theta_relation_minus", &name, tol_re));
        if spec.variant == Some(Variant::PlusRelation) {
            checks.push(rp.at_most("theta_relation_plus", &name, tol_re));
        } else {
            checks.push(Check::reported("theta_relation_plus", &name, rp.value, tol_re).with_detail(rp.at));
        }
        checks.push(jet.at_most("jet_action", &name, tol_jet));
        if let Some(first) = ctx.points().first() {
            let theta = fb2_projection(model, first, sign).map_err(err)?.theta;
            checks.push(Check::reported("theta", &name, theta, tol_jet).with_detail(format!("at {}", pt(first))));
            if let Some(Expectation::Value(v)) = &spec.expect {
                checks.push(Check::at_most("expected_theta", &name, (theta - v).abs(), tol_jet).with_detail(format!("{theta} vs {v}")));
            }
        }
    }
    Ok((checks, vec![]))
}

fn sections(ctx: &Ctx, spec: &TaskSpec) -> Vec<holocurve::Section> {
    spec.sections
        .iter()
        .flatten()
        .map(|k| section_from_kernel(&ctx.scenario.kernels[k]))
        .collect()
}

fn flags(ctx: &Ctx, spec: &TaskSpec) -> TaskOutput {
    let tol = ctx.tol(spec, 1e-10);
    let t = sections(ctx, spec);
    let n = spec.n.unwrap_or(t.len()).min(t.len());
    let seed = spec.seed.unwrap_or(5);
    let u: Vec<Matrix> = t
        .iter()
        .enumerate()
        .map(|(i, s)| random_unitary(s.dim(), seed + i as u64))
        .collect();
    let (mut comm, mut conj, mut nest) = (Worst::new(), Worst::new(), Worst::new());
    for p in ctx.points() {
        for k in 1..=n {
            let r = flag_diagram_check(&t, k, p, Some(&u)).map_err(err)?;
            let at = || format!("n={k} at {}", pt(p));
            comm.see(r.commutativity, at);
            conj.see(r.conjugation.unwrap_or(f64::NAN), at);
            nest.see(r.nesting.unwrap_or(f64::NAN), at);
        }
    }
    let subject = spec.sections.clone().unwrap_or_default().join("/");
    Ok((
        vec![
            comm.at_most("commutativity", &subject, tol),
            conj.at_most("conjugation", &subject, tol),
            nest.at_most("nesting", &subject, tol),
        ],
        vec![],
    ))
}

fn ofb(ctx: &Ctx, spec: &TaskSpec) -> TaskOutput {
    let tol_frame = ctx.tol(spec, 1e-9);
    let tol_conj = ctx.tol(spec, 1e-8);
    let t = sections(ctx, spec);
    let n = spec.n.unwrap_or(t.len()).min(t.len());
    let phis: Vec<Vec<[f64; 2]>> = spec.phis.clone().unwrap_or_else(|| vec![vec![[1.0, 0.0]]]);
    let plans = DerivPlan::enumerate(1, 2, 2, 2);
    let subject = spec.sections.clone().unwrap_or_default().join("/");
    let mut checks = vec![];
    for coeffs in &phis {
        let phi = Polynomial::univariate(&coeffs.iter().map(|z| cplx(z[0], z[1])).collect::<Vec<_>>());
        let label = format!("{subject} phi={coeffs:?}");
        let (mut frame, mut conj) = (Worst::new(), Worst::new());
        for p in ctx.points() {
            for k in 1..=n {
                let r = ofb_frame_change_check(&t, &phi, k, p, &plans).map_err(err)?;
                frame.see(r.frame, || format!("n={k} at {}", pt(p)));
                conj.see(r.conjugation.max(r.trace), || format!("n={k} at {}", pt(p)));
            }
        }
        checks.push(frame.at_most("frame_change", &label, tol_frame));
        checks.push(conj.at_most("conjugation", &label, tol_conj));
    }
    Ok((checks, vec![]))
}

// ----------------------------------------------------------------------------
// Classification

fn line_frame(ctx: &Ctx, name: &str) -> Result<Frame, String> {
    match ctx.scenario.curves.get(name) {
        Some(c) => Ok(c.f.clone()),
        None => kernel_line(&ctx.scenario.kernels[name]).map_err(err),
    }
}

fn verdict_check(spec: &TaskSpec, subject: &str, v: &EquivalenceVerdict, tol: f64) -> Check {
    let decisive = v.residuals.values().cloned().fold(0.0, f64::max);
    let observed = v.verdict.to_string();
    let mut detail = v.witness.clone();
    if let Some(t) = &v.trend {
        detail.push_str(&format!("; growth {:.4}, monotone {}", t.growth, t.monotone));
    }
    match &spec.expect {
        Some(Expectation::Verdict(e)) => Check::outcome("verdict", subject, e, &observed, decisive, tol).with_detail(detail),
        _ => Check {
            observed: Some(observed),
            ..Check::reported("verdict", subject, decisive, tol).with_detail(detail)
        },
    }
}

fn classify(ctx: &Ctx, spec: &TaskSpec) -> TaskOutput {
    let tol = ctx.tol(spec, holocurve::classify::DEFAULT_TOLERANCE);
    let [a, b] = spec.pair.clone().ok_or("classify needs a pair")?;
    let subject = format!("{a} vs {b}");
    let samples = if ctx.points().is_empty() {
        default_samples()
    } else {
        ctx.points().to_vec()
    };
    let mut checks = vec![];
    let verdict = match spec.kind.ok_or("classify needs a kind")? {
        ClassifyKind::Line => b1_unitary_equivalence(&line_frame(ctx, &a)?, &line_frame(ctx, &b)?, &samples, tol).map_err(err)?,
        ClassifyKind::Twist => finite_rank_twist_equivalence(&line_frame(ctx, &a)?, &line_frame(ctx, &b)?, &samples, tol).map_err(err)?,
        ClassifyKind::Shift => weighted_shift_similarity(&ctx.scenario.kernels[&a], &ctx.scenario.kernels[&b]).map_err(err)?,
        ClassifyKind::Fb2 => {
            let (ma, mb) = (&ctx.scenario.models[&a], &ctx.scenario.models[&b]);
            let v = fb2_unitary_equivalence(ma, mb, &samples, tol).map_err(err)?;
            if v.verdict == Verdict::Equivalent {
                if let Some(u) = fb2_intertwiner(ctx, &a, &b) {
                    let (pa, pb) = (
                        Curve::projection(fb2_frame(ma, SignConvention::Plus)),
                        Curve::projection(fb2_frame(mb, SignConvention::Plus)),
                    );
                    let r = congruence_residual(&pa, &pb, &u, &samples).map_err(err)?;
                    checks.push(
                        Check::at_most("intertwiner", &subject, r, ctx.tol(spec, 1e-8)).with_detail("diag(U0, U1) from the rotation seeds"),
                    );
                }
            }
            v
        }
    };
    checks.insert(0, verdict_check(spec, &subject, &verdict, tol));
    for (k, v) in &verdict.residuals {
        checks.push(Check::reported(k, &subject, *v, tol));
    }
    Ok((checks, vec![]))
}

/// diag(V₀, V₁) with V_i = R_i(b) R_i(a)* when the two models differ only in
/// their rotation seeds.
fn fb2_intertwiner(ctx: &Ctx, a: &str, b: &str) -> Option<Matrix> {
    let (da, db) = (&ctx.scenario.file.fb2_models[a], &ctx.scenario.file.fb2_models[b]);
    if da.kernel0 != db.kernel0 || da.kernel1 != db.kernel1 || da.coupling != db.coupling {
        return None;
    }
    let (d0, d1) = ctx.scenario.models[a].dims();
    let rot = |seed: Option<u64>, d: usize, k: u64| seed.map(|s| random_unitary(d, s + k)).unwrap_or_else(|| CMat::identity(d, d));
    let v0 = rot(db.rotation_seed, d0, 0) * rot(da.rotation_seed, d0, 0).adjoint();
    let v1 = rot(db.rotation_seed, d1, 1) * rot(da.rotation_seed, d1, 1).adjoint();
    let mut u = CMat::zeros(d0 + d1, d0 + d1);
    u.view_mut((0, 0), (d0, d0)).copy_from(&v0);
    u.view_mut((d0, d0), (d1, d1)).copy_from(&v1);
    Some(u)
}

// ----------------------------------------------------------------------------
// Finite differences

fn fd_curve(c: &Curve, p: &Point, caps: (u32, u32)) -> Result<[(&'static str, f64, String); 4], String> {
    let fmt = |r: holocurve::jets::FdCheck| (r.worst, format!("I={} J={} ({} derivatives)", r.at.0, r.at.1, r.checked));
    let o = FD_MAX_ORDER;
    let g = gram(&c.f, &c.g, p, caps).map_err(err)?;
    let g = fmt(fd_cross_check(&g, &|q| gram(&c.f, &c.g, q, (0, 0)).expect("gram").value(), o, FD_STEP).map_err(err)?);
    let i = curve_eval_jet(c, p, caps).map_err(err)?;
    let i = fmt(fd_cross_check(&i, &|q| c.eval(q).expect("curve value"), o, FD_STEP).map_err(err)?);
    let k = classical_curvature(&gram(&c.f, &c.f, p, (caps.0 + 1, caps.1 + 1)).map_err(err)?).map_err(err)?;
    let sampler = |q: &Point| {
        classical_curvature(&gram(&c.f, &c.f, q, (1, 1)).expect("gram"))
            .expect("curvature")
            .value()
    };
    let k = fmt(fd_cross_check(&k, &sampler, o, FD_STEP).map_err(err)?);
    let e = extended_curvature(c, p, caps).map_err(err)?;
    let e = fmt(fd_cross_check(&e, &|q| extended_curvature(c, q, (0, 0)).expect("curvature").value(), o, FD_STEP).map_err(err)?);
    Ok([
        ("gram", g.0, g.1),
        ("curve", i.0, i.1),
        ("curvature", k.0, k.1),
        ("extended_curvature", e.0, e.1),
    ])
}

fn fd(ctx: &Ctx, spec: &TaskSpec) -> TaskOutput {
    let tol = ctx.tol(spec, 1e-5);
    let caps = (FD_MAX_ORDER, FD_MAX_ORDER);
    let mut subjects: Vec<(String, Curve)> = ctx.scenario.curves_for(spec).into_iter().map(|(n, c)| (n, c.clone())).collect();
    if spec.curves.is_none() {
        for (n, m) in ctx.scenario.models_for(spec) {
            subjects.push((format!("fb2:{n}"), Curve::projection(fb2_frame(m, SignConvention::Plus))));
        }
    }
    let all = ctx.points();
    let points: Vec<&Point> = if all.len() <= FD_MAX_POINTS {
        all.iter().collect()
    } else {
        (0..FD_MAX_POINTS)
            .map(|k| &all[k * (all.len() - 1) / (FD_MAX_POINTS - 1)])
            .collect()
    };
    let mut checks = vec![];
    for (name, c) in &subjects {
        let mut worst: Vec<Worst> = (0..4).map(|_| Worst::new()).collect();
        let mut labels = [""; 4];
        for p in points.iter().copied() {
            for (k, (label, v, at)) in fd_curve(c, p, caps)?.into_iter().enumerate() {
                labels[k] = label;
                worst[k].see(v, || format!("{at} at {}", pt(p)));
            }
        }
        for (k, w) in worst.iter().enumerate() {
            if !labels[k].is_empty() {
                checks.push(w.at_most(labels[k], name, tol));
            }
        }
    }
    let note = format!(
        "central differences, step {FD_STEP:e}, orders up to {FD_MAX_ORDER}, {} of {} points",
        points.len(),
        all.len()
    );
    Ok((checks, vec![note]))
}
