//! Output formats: field and trace CSV, summary and report JSON.
//!
//! Floating values are written with 17 significant digits so every `f64`
//! round-trips exactly and identical runs produce identical bytes.

use std::io::{BufRead, Write};
use std::sync::Arc;

use serde_json::{json, Map, Value};

use crate::chern_simons::{DomainSolution, IterationTrace};
use crate::config::DomainSpec;
use crate::error::{Error, Result};
use crate::exhaustion::GlobalSolutionEstimate;
use crate::field::LatticeField;
use crate::lattice::{LatticeDomain, LatticePoint};

/// `x` with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// JSON number carrying exactly the text of [`fmt17`]; `null` when not
/// finite.
pub fn num17(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    // arbitrary_precision keeps the literal text of the number.
    serde_json::from_str::<serde_json::Number>(&fmt17(x))
        .map(Value::Number)
        .unwrap_or(Value::Null)
}

/// One row per closure point: `x1,...,xn,value`.
pub fn write_field_csv(field: &LatticeField, mut out: impl Write) -> Result<()> {
    let n = field.domain().dimension();
    let header: Vec<String> = (1..=n).map(|i| format!("x{i}")).chain(["value".into()]).collect();
    writeln!(out, "{}", header.join(","))?;
    for (p, &v) in field.domain().points().iter().zip(field.values()) {
        for c in p.coords() {
            write!(out, "{c},")?;
        }
        writeln!(out, "{}", fmt17(v))?;
    }
    Ok(())
}

/// Reads a field written by [`write_field_csv`] onto `domain`. Points of
/// the closure missing from the file are zero.
pub fn read_field_csv(domain: &Arc<LatticeDomain>, input: impl BufRead) -> Result<LatticeField> {
    let mut field = LatticeField::zeros(domain.clone());
    let n = domain.dimension();
    for (lineno, line) in input.lines().enumerate().skip(1) {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != n + 1 {
            return Err(Error::InvalidInput(format!(
                "line {}: expected {} columns, got {}",
                lineno + 1,
                n + 1,
                parts.len()
            )));
        }
        let bad = |what: &str| Error::InvalidInput(format!("line {}: bad {what}", lineno + 1));
        let coords = parts[..n]
            .iter()
            .map(|s| s.trim().parse::<i64>().map_err(|_| bad("coordinate")))
            .collect::<Result<Vec<_>>>()?;
        let value: f64 = parts[n].trim().parse().map_err(|_| bad("value"))?;
        let point = LatticePoint::new(coords);
        let i = domain
            .index_of(&point)
            .ok_or_else(|| Error::InvalidInput(format!("{point} is not in the domain closure")))?;
        field.values_mut()[i] = value;
    }
    Ok(field)
}

/// Field values in index order.
pub fn field_to_json(field: &LatticeField) -> Value {
    Value::Array(field.values().iter().map(|&v| num17(v)).collect())
}

pub fn field_from_json(domain: &Arc<LatticeDomain>, value: &Value) -> Result<LatticeField> {
    let values: Vec<f64> = serde_json::from_value(value.clone())?;
    LatticeField::from_values(domain.clone(), values)
}

/// `k,J,sup_change,residual,l2p2_norm`.
pub fn write_trace_csv(trace: &IterationTrace, mut out: impl Write) -> Result<()> {
    writeln!(out, "k,J,sup_change,residual,l2p2_norm")?;
    for r in &trace.records {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.k,
            fmt17(r.j_value),
            fmt17(r.sup_change),
            fmt17(r.residual_inf),
            fmt17(r.l2p2_norm)
        )?;
    }
    Ok(())
}

/// Summary of a converged single-domain run.
pub fn solve_summary(solution: &DomainSolution, params_p: u32) -> Value {
    let last = solution.trace.last();
    let get = |f: fn(&crate::chern_simons::IterationRecord) -> f64| last.map_or(0.0, f);
    json!({
        "converged": true,
        "iterations": solution.iterations(),
        "monotone": solution.trace.all_monotone(),
        "energy_decreasing": solution.trace.all_energy_decreasing(),
        "final": {
            "J": num17(get(|r| r.j_value)),
            "sup_change": num17(get(|r| r.sup_change)),
            "residual": num17(get(|r| r.residual_inf)),
            "l2p2_norm": num17(get(|r| r.l2p2_norm)),
            "l2p2_exponent": 2 * params_p + 2,
            "sup_norm": num17(solution.field.sup_abs()),
            "max_value": num17(solution.field.max_value()),
        }
    })
}

/// Machine-readable failure record.
pub fn failure_summary(kind: &str, error: &Error, trace: Option<&IterationTrace>) -> Value {
    let mut m = Map::new();
    m.insert("converged".into(), Value::Bool(false));
    m.insert("failure".into(), Value::String(kind.into()));
    m.insert("message".into(), Value::String(error.to_string()));
    if let Some(t) = trace {
        m.insert("iterations".into(), json!(t.len()));
    }
    Value::Object(m)
}

pub fn domain_to_json(domain: &LatticeDomain) -> Value {
    serde_json::to_value(DomainSpec::from_domain(domain)).unwrap_or(Value::Null)
}

pub fn exhaustion_report(estimate: &GlobalSolutionEstimate) -> Value {
    let radii: Vec<Value> = estimate
        .reports
        .iter()
        .map(|r| {
            json!({
                "radius": r.radius,
                "iterations": r.iterations,
                "J_final": num17(r.j_final),
                "residual": num17(r.residual),
                "l2p2_norm": num17(r.l2p2_norm),
                "gap_to_previous": r.gap_to_previous.map_or(Value::Null, num17),
            })
        })
        .collect();
    let c = &estimate.certificate;
    json!({
        "radii": radii,
        "decay_center": estimate.decay_center.coords(),
        "outer_shell_sup": num17(estimate.outer_shell_sup),
        "certificate": {
            "certified": c.certified(),
            "all_converged": c.all_converged,
            "gaps_decreasing": c.gaps_decreasing,
            "final_gap_ok": c.final_gap_ok,
            "decay_ok": c.decay_ok,
            "tail_monotone": c.tail_monotone,
        }
    })
}

/// `shell_radius,sup_abs`.
pub fn write_decay_csv(profile: &[(u64, f64)], mut out: impl Write) -> Result<()> {
    writeln!(out, "shell_radius,sup_abs")?;
    for (r, v) in profile {
        writeln!(out, "{r},{}", fmt17(*v))?;
    }
    Ok(())
}
