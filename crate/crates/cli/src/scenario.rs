//! Scenario documents: JSON schema, name resolution and load-time checks.

use std::collections::BTreeMap;
use std::path::Path;

use holocurve::curves::ExtendedCurve;
use holocurve::model::{derivative_frame, fb2_frame, random_unitary, section_from_kernel, SignConvention};
use holocurve::scalar::cplx;
use holocurve::{Curve, Fb2Model, Kernel, Point};
use serde::Deserialize;

use crate::InputError;

pub const SCHEMA_VERSION: u32 = 1;

// ----------------------------------------------------------------------------
// Schema

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub m: usize,
    pub truncation: u32,
    #[serde(default)]
    pub kernels: BTreeMap<String, KernelDef>,
    #[serde(default)]
    pub curves: BTreeMap<String, CurveDef>,
    #[serde(default)]
    pub fb2_models: BTreeMap<String, Fb2Def>,
    /// Points of ℂ^m, each coordinate an [re, im] pair.
    #[serde(default)]
    pub sample_points: Vec<Vec<[f64; 2]>>,
    /// Caps (p, q) on the Hol and AntiHol steps of swept plans.
    #[serde(default = "default_orders")]
    pub orders: [u32; 2],
    #[serde(default)]
    pub tasks: Vec<TaskDef>,
    /// Replaces every check's default tolerance when set.
    #[serde(default)]
    pub tolerance: Option<f64>,
}

fn default_orders() -> [u32; 2] {
    [2, 2]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelDef {
    Hardy {
        #[serde(default)]
        truncation: Option<u32>,
    },
    Bergman {
        #[serde(default)]
        truncation: Option<u32>,
    },
    DruryArveson {
        #[serde(default)]
        truncation: Option<u32>,
    },
    /// Weights a_I in graded-lex order.
    Explicit {
        weights: Vec<f64>,
        #[serde(default)]
        truncation: Option<u32>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveDef {
    /// Kernel whose derivative frame gives F.
    pub f: String,
    /// Kernel for G; the projection curve when absent.
    #[serde(default)]
    pub g: Option<String>,
    #[serde(default = "one")]
    pub rank: usize,
    /// Conjugate by a seeded random unitary.
    #[serde(default)]
    pub rotation_seed: Option<u64>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fb2Def {
    pub kernel0: String,
    pub kernel1: String,
    /// Coupling s as [re, im].
    #[serde(default = "unit")]
    pub coupling: [f64; 2],
    /// Rotate t₀, t₁ by seeded random unitaries (seed, seed + 1).
    #[serde(default)]
    pub rotation_seed: Option<u64>,
}

fn unit() -> [f64; 2] {
    [1.0, 0.0]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum TaskDef {
    Name(TaskKind),
    Full(TaskSpec),
}

impl TaskDef {
    pub fn spec(&self) -> TaskSpec {
        match self {
            TaskDef::Name(kind) => TaskSpec::of(*kind),
            TaskDef::Full(spec) => spec.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Curvature,
    Idempotency,
    Holomorphy,
    Thm1,
    D3,
    Leibniz,
    Monomial,
    CovariantExpansion,
    OrderWitness,
    UnitaryInvariance,
    Similarity,
    Fb2,
    Flags,
    OfbFrameChange,
    Classify,
    FdCheck,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Curvature => "curvature",
            TaskKind::Idempotency => "idempotency",
            TaskKind::Holomorphy => "holomorphy",
            TaskKind::Thm1 => "thm1",
            TaskKind::D3 => "d3",
            TaskKind::Leibniz => "leibniz",
            TaskKind::Monomial => "monomial",
            TaskKind::CovariantExpansion => "covariant_expansion",
            TaskKind::OrderWitness => "order_witness",
            TaskKind::UnitaryInvariance => "unitary_invariance",
            TaskKind::Similarity => "similarity",
            TaskKind::Fb2 => "fb2",
            TaskKind::Flags => "flags",
            TaskKind::OfbFrameChange => "ofb_frame_change",
            TaskKind::Classify => "classify",
            TaskKind::FdCheck => "fd_check",
        }
    }
}

/// Deliberately false variants of a check, used as negative controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Mixed Leibniz items summed over ∪_p{e_p ≤ I₁ ≤ I − e_p}.
    PerCoordinate,
    /// Order witness against the closed form led by ∂̄_k∂𝓘·∂_l∂𝓘.
    MixedLeadingTerm,
    /// Step composition in place of the split recursion.
    Composed,
    /// Assert θh₁ + (1+θ)Kh₀ = 0.
    PlusRelation,
    /// γ₁ = t₀′ − t₁ with the jet action expected to give t₀′ ⊕ t₁.
    MinusSign,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifyKind {
    /// Rank-1 curvature comparison of two kernel lines.
    Line,
    /// FB₂ invariants (K_{T₀}, coupling ratio).
    Fb2,
    /// Weighted-shift similarity from the weight ratios.
    Shift,
    /// Finite-rank twist through log det H.
    Twist,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Expectation {
    Value(f64),
    Verdict(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub task: TaskKind,
    #[serde(default)]
    pub label: Option<String>,
    /// Curves (or FB₂ models) the task runs on; all when absent.
    #[serde(default)]
    pub curves: Option<Vec<String>>,
    #[serde(default)]
    pub models: Option<Vec<String>>,
    #[serde(default)]
    pub pair: Option<[String; 2]>,
    #[serde(default)]
    pub kind: Option<ClassifyKind>,
    #[serde(default)]
    pub expect: Option<Expectation>,
    /// Curvature expected as −c/(1 − |λ|²)² at every sample point.
    #[serde(default)]
    pub closed_form: Option<f64>,
    #[serde(default)]
    pub tolerance: Option<f64>,
    /// Longest plan swept.
    #[serde(default)]
    pub max_len: Option<usize>,
    /// Kernels of the sections t₀, …, t_{n−1}.
    #[serde(default)]
    pub sections: Option<Vec<String>>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Polynomials φ as coefficient lists of [re, im].
    #[serde(default)]
    pub phis: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default)]
    pub variant: Option<Variant>,
    /// Indices into the kept sample points; all when absent.
    #[serde(default)]
    pub points: Option<Vec<usize>>,
}

impl TaskSpec {
    pub fn of(task: TaskKind) -> Self {
        Self {
            task,
            label: None,
            curves: None,
            models: None,
            pair: None,
            kind: None,
            expect: None,
            closed_form: None,
            tolerance: None,
            max_len: None,
            sections: None,
            n: None,
            seed: None,
            phis: None,
            variant: None,
            points: None,
        }
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.task.name().to_string())
    }
}

// ----------------------------------------------------------------------------
// Resolution

/// A parsed scenario with every name resolved.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub kernels: BTreeMap<String, Kernel>,
    pub curves: BTreeMap<String, Curve>,
    pub models: BTreeMap<String, Fb2Model>,
    /// Sample points kept after the load-time Gram check.
    pub points: Vec<Point>,
    pub diagnostics: Vec<String>,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, InputError> {
        let text = std::fs::read_to_string(path).map_err(|e| InputError::Read(path.display().to_string(), e.to_string()))?;
        Self::parse(&text).map_err(|e| match e {
            InputError::Parse(msg) => InputError::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, InputError> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(|e| InputError::Parse(e.to_string()))?;
        Self::resolve(file)
    }

    pub fn resolve(file: ScenarioFile) -> Result<Self, InputError> {
        if file.schema_version != SCHEMA_VERSION {
            return Err(InputError::Schema(format!(
                "schema_version {} (supported: {SCHEMA_VERSION})",
                file.schema_version
            )));
        }
        if file.m == 0 {
            return Err(InputError::Schema("m must be positive".into()));
        }
        let m = file.m;
        let mut kernels = BTreeMap::new();
        for (name, def) in &file.kernels {
            kernels.insert(name.clone(), build_kernel(name, def, m, file.truncation)?);
        }
        let kernel = |name: &str, whose: &str| {
            kernels
                .get(name)
                .cloned()
                .ok_or_else(|| InputError::Name(format!("{whose} refers to unknown kernel '{name}'")))
        };

        let mut curves = BTreeMap::new();
        for (name, def) in &file.curves {
            let frame = |k: &str| -> Result<_, InputError> {
                let spec = kernel(k, &format!("curve '{name}'"))?;
                derivative_frame(&section_from_kernel(&spec), def.rank).map_err(|e| InputError::Schema(format!("curve '{name}': {e}")))
            };
            let f = frame(&def.f)?;
            let mut c = match &def.g {
                None => ExtendedCurve::projection(f),
                Some(g) => ExtendedCurve::new(f, frame(g)?).map_err(|e| InputError::Schema(format!("curve '{name}': {e}")))?,
            };
            if let Some(seed) = def.rotation_seed {
                c = c.conjugated(&random_unitary(c.dim(), seed));
            }
            curves.insert(name.clone(), c);
        }

        let mut models = BTreeMap::new();
        for (name, def) in &file.fb2_models {
            if m != 1 {
                return Err(InputError::Schema(format!("FB2 model '{name}' needs m = 1")));
            }
            let whose = format!("FB2 model '{name}'");
            let (k0, k1) = (kernel(&def.kernel0, &whose)?, kernel(&def.kernel1, &whose)?);
            let mut model =
                Fb2Model::new(k0, k1, cplx(def.coupling[0], def.coupling[1])).map_err(|e| InputError::Schema(format!("{whose}: {e}")))?;
            if let Some(seed) = def.rotation_seed {
                let (d0, d1) = model.dims();
                model = model.rotated(random_unitary(d0, seed), random_unitary(d1, seed + 1));
            }
            models.insert(name.clone(), model);
        }

        for t in &file.tasks {
            check_task_names(&t.spec(), &kernels, &curves, &models, &file)?;
        }

        let mut points = vec![];
        let mut diagnostics = vec![];
        for (n, p) in file.sample_points.iter().enumerate() {
            if p.len() != m {
                return Err(InputError::Schema(format!("sample point {n} has {} coordinates, m = {m}", p.len())));
            }
            let point: Point = p.iter().map(|z| cplx(z[0], z[1])).collect();
            match singular_at(&point, &curves, &models) {
                None => points.push(point),
                Some(why) => diagnostics.push(format!("sample point {n} {} dropped: {why}", holocurve::model::fmt_point(&point))),
            }
        }
        Ok(Self {
            file,
            kernels,
            curves,
            models,
            points,
            diagnostics,
        })
    }

    pub fn m(&self) -> usize {
        self.file.m
    }

    pub fn curves_for(&self, spec: &TaskSpec) -> Vec<(String, &Curve)> {
        match &spec.curves {
            Some(names) => names.iter().map(|n| (n.clone(), &self.curves[n])).collect(),
            None => self.curves.iter().map(|(n, c)| (n.clone(), c)).collect(),
        }
    }

    pub fn models_for(&self, spec: &TaskSpec) -> Vec<(String, &Fb2Model)> {
        match &spec.models {
            Some(names) => names.iter().map(|n| (n.clone(), &self.models[n])).collect(),
            None => self.models.iter().map(|(n, c)| (n.clone(), c)).collect(),
        }
    }
}

fn build_kernel(name: &str, def: &KernelDef, m: usize, truncation: u32) -> Result<Kernel, InputError> {
    let bad = |e: String| InputError::Schema(format!("kernel '{name}': {e}"));
    Ok(match def {
        KernelDef::Hardy { truncation: t } => Kernel::hardy(m, t.unwrap_or(truncation)),
        KernelDef::Bergman { truncation: t } => {
            if m != 1 {
                return Err(bad("the bergman family needs m = 1".into()));
            }
            Kernel::bergman(t.unwrap_or(truncation))
        }
        KernelDef::DruryArveson { truncation: t } => Kernel::drury_arveson(m, t.unwrap_or(truncation)),
        KernelDef::Explicit { weights, truncation: t } => {
            Kernel::explicit(m, t.unwrap_or(truncation), weights).map_err(|e| bad(e.to_string()))?
        }
    })
}

fn check_task_names(
    spec: &TaskSpec,
    kernels: &BTreeMap<String, Kernel>,
    curves: &BTreeMap<String, Curve>,
    models: &BTreeMap<String, Fb2Model>,
    file: &ScenarioFile,
) -> Result<(), InputError> {
    let label = spec.label();
    let missing = |what: &str, n: &str| InputError::Name(format!("task '{label}' refers to unknown {what} '{n}'"));
    for n in spec.curves.iter().flatten() {
        curves.get(n).ok_or_else(|| missing("curve", n))?;
    }
    for n in spec.models.iter().flatten() {
        models.get(n).ok_or_else(|| missing("FB2 model", n))?;
    }
    for n in spec.sections.iter().flatten() {
        kernels.get(n).ok_or_else(|| missing("kernel", n))?;
    }
    if matches!(spec.task, TaskKind::Flags | TaskKind::OfbFrameChange | TaskKind::Fb2) && file.m != 1 {
        return Err(InputError::Schema(format!("task '{label}' needs m = 1")));
    }
    if let Some([a, b]) = &spec.pair {
        let kind = spec
            .kind
            .ok_or_else(|| InputError::Schema(format!("task '{label}' has a pair but no kind")))?;
        for n in [a, b] {
            let ok = match kind {
                ClassifyKind::Fb2 => models.contains_key(n),
                ClassifyKind::Line | ClassifyKind::Shift | ClassifyKind::Twist => kernels.contains_key(n) || curves.contains_key(n),
            };
            if !ok {
                return Err(missing("pair member", n));
            }
        }
    }
    match spec.task {
        TaskKind::Classify if spec.pair.is_none() => Err(InputError::Schema(format!("task '{label}' needs a pair"))),
        TaskKind::Flags | TaskKind::OfbFrameChange if spec.sections.is_none() => {
            Err(InputError::Schema(format!("task '{label}' needs sections")))
        }
        _ => Ok(()),
    }
}

/// Reason a point is unusable for some referenced Gram, if any.
fn singular_at(p: &Point, curves: &BTreeMap<String, Curve>, models: &BTreeMap<String, Fb2Model>) -> Option<String> {
    for (name, c) in curves {
        let h = c.g.eval(p).adjoint() * c.f.eval(p);
        let k = holocurve::jets::condition_number(&h);
        if !(k < holocurve::jets::DEFAULT_CONDITION_BOUND) {
            return Some(format!("Gram of curve '{name}' has condition {k:.3e}"));
        }
    }
    for (name, model) in models {
        let f = fb2_frame(model, SignConvention::Plus);
        let e = f.eval(p);
        let k = holocurve::jets::condition_number(&(e.adjoint() * &e));
        if !(k < holocurve::jets::DEFAULT_CONDITION_BOUND) {
            return Some(format!("Gram of FB2 model '{name}' has condition {k:.3e}"));
        }
    }
    None
}
