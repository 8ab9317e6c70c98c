//! Curvature on a square grid in the plane.

use holocurve::scalar::cplx;
use serde::Serialize;

use crate::scenario::Scenario;
use crate::tasks::curvature_value;
use crate::InputError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Half-width of the square [−r, r]².
    pub radius: f64,
    /// Points per side.
    pub size: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { radius: 0.5, size: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridRow {
    pub re: f64,
    pub im: f64,
    /// Curvature (the trace for rank > 1); absent when it could not be computed.
    pub value: Option<f64>,
    /// "outside-domain" for |λ| ≥ 1, "singular" when the Gram fails.
    pub flag: Option<String>,
}

/// Rows ordered by Im then Re, both ascending.
pub fn emit_curvature_grid(scenario: &Scenario, curve: &str, spec: GridSpec) -> Result<Vec<GridRow>, InputError> {
    if scenario.m() != 1 {
        return Err(InputError::Usage(format!("grid needs m = 1, scenario has m = {}", scenario.m())));
    }
    if spec.size == 0 || !(spec.radius > 0.0) {
        return Err(InputError::Usage("grid needs size > 0 and radius > 0".into()));
    }
    let c = scenario
        .curves
        .get(curve)
        .ok_or_else(|| InputError::Name(format!("no curve '{curve}'")))?;
    let coord = |k: usize| {
        if spec.size == 1 {
            0.0
        } else {
            -spec.radius + 2.0 * spec.radius * k as f64 / (spec.size - 1) as f64
        }
    };
    let mut rows = Vec::with_capacity(spec.size * spec.size);
    for a in 0..spec.size {
        for b in 0..spec.size {
            let (re, im) = (coord(b), coord(a));
            let p = vec![cplx(re, im)];
            let mut flag = (re * re + im * im >= 1.0).then(|| "outside-domain".to_string());
            let value = match curvature_value(&c.f, &p) {
                Ok(v) if v.is_finite() => Some(v),
                _ => {
                    flag = Some("singular".into());
                    None
                }
            };
            rows.push(GridRow { re, im, value, flag });
        }
    }
    Ok(rows)
}

pub fn grid_csv(rows: &[GridRow]) -> String {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(["re", "im", "value", "flag"]).expect("in-memory write");
    for r in rows {
        let v = r.value.map(|v| format!("{v:e}")).unwrap_or_default();
        w.write_record([format!("{:e}", r.re), format!("{:e}", r.im), v, r.flag.clone().unwrap_or_default()])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

pub fn grid_json(rows: &[GridRow]) -> String {
    #[derive(Serialize)]
    struct Doc<'a> {
        schema_version: u32,
        rows: &'a [GridRow],
    }
    serde_json::to_string_pretty(&Doc {
        schema_version: crate::scenario::SCHEMA_VERSION,
        rows,
    })
    .expect("grid serializes")
}
