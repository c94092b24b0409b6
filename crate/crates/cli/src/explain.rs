//! Render a saved machine report back into prose: which law each task
//! exercised, what the verdict was, and what evidence backs it.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::Value;

use crate::error::{CliError, Result};
use crate::report::SCHEMA_VERSION;

pub fn explain(path: &Path) -> Result<String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::MalformedReport(format!("{}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::MalformedReport(format!("{}: {e}", path.display())))?;
    let obj = v
        .as_object()
        .ok_or_else(|| CliError::MalformedReport("top level is not an object".into()))?;
    let version = obj
        .get("schema_version")
        .and_then(Value::as_u64)
        .ok_or_else(|| CliError::MalformedReport("missing schema_version".into()))?;
    if version != SCHEMA_VERSION {
        return Err(CliError::MalformedReport(format!(
            "schema_version {version} is not supported (expected {SCHEMA_VERSION})"
        )));
    }
    let tasks = obj
        .get("tasks")
        .and_then(Value::as_array)
        .ok_or_else(|| CliError::MalformedReport("missing tasks array".into()))?;

    let mut out = String::new();
    let scenario = obj.get("scenario").and_then(Value::as_str).unwrap_or("?");
    let seed = obj.get("seed").and_then(Value::as_u64).unwrap_or(0);
    writeln!(out, "report for scenario {scenario} (seed {seed})").unwrap();
    match obj.get("order").and_then(Value::as_u64) {
        Some(n) => writeln!(out, "scalars: series truncated at order {n}").unwrap(),
        None => writeln!(out, "scalars: classical").unwrap(),
    }
    if let Some(assertions) = obj.get("assertions").and_then(Value::as_array) {
        for a in assertions {
            if let Some(s) = a.as_str() {
                writeln!(out, "assumes: {s}").unwrap();
            }
        }
    }
    if tasks.is_empty() {
        writeln!(out, "no tasks").unwrap();
    }

    for (i, task) in tasks.iter().enumerate() {
        let t = task
            .as_object()
            .ok_or_else(|| CliError::MalformedReport(format!("task {i} is not an object")))?;
        let get = |k: &str| t.get(k).and_then(Value::as_str).unwrap_or("?");
        let name = get("name");
        let verb = get("verb");
        let outcome = get("outcome");
        let expected = get("expected");
        let matched = t.get("matched").and_then(Value::as_bool).unwrap_or(false);

        writeln!(out).unwrap();
        writeln!(out, "{name} [{verb}]").unwrap();
        writeln!(out, "  law: {}", law_tag(verb)).unwrap();
        let status = if matched { "as expected" } else { "MISMATCH" };
        writeln!(out, "  verdict: {outcome} (expected {expected}; {status})").unwrap();
        writeln!(out, "  detail: {}", get("detail")).unwrap();
        for line in evidence_lines(verb, t.get("data").unwrap_or(&Value::Null)) {
            writeln!(out, "  {line}").unwrap();
        }
    }

    let overall = obj.get("overall").and_then(Value::as_str).unwrap_or("?");
    writeln!(out).unwrap();
    writeln!(out, "overall: {overall}").unwrap();
    Ok(out)
}

fn law_tag(verb: &str) -> &'static str {
    match verb {
        "verify-equivalence" => "the axioms of an equivalence bimodule, checked one by one",
        "compose" => "equivalences compose through the balanced tensor product",
        "conjugate" => "the conjugate bimodule reverses an equivalence",
        "invertibility" => "composing with the conjugate returns the identity bimodule",
        "isometric" => "scaled rank-one pairings are classified by which norms the scale admits",
        "tensor" => "complete positivity is preserved by balanced and external tensor products",
        "induce" => "induction along an equivalence preserves complete positivity",
        "structure-theorem" => "strong equivalences arise exactly from full hermitian projections",
        "kaplansky" => "every idempotent aligns with a hermitian one generating the same left module",
        "factor" => "positive invertible elements factor as u*u",
        "check-property" => "inversion and factorization properties of the coefficient family",
        "deform-validate" => "the deformed product stays an associative *-algebra with the right classical limit",
        "deform-factor" => "positivity factorizations persist order by order under deformation",
        "decompose-auto" => "an automorphism splits as a hermitian flow after a *-automorphism",
        "derivations" => "derivations of the deformed product are quasi-inner when no outer space remains",
        _ => "unrecognized verb",
    }
}

/// A few load-bearing numbers from the evidence object, by verb.
fn evidence_lines(verb: &str, data: &Value) -> Vec<String> {
    let mut lines = Vec::new();
    let Some(obj) = data.as_object() else {
        return lines;
    };
    let grab_u64 = |k: &str| obj.get(k).and_then(Value::as_u64);

    match verb {
        "verify-equivalence" | "compose" | "conjugate" => {
            if let Some(axioms) = obj.get("axioms").and_then(Value::as_object) {
                let mut held = 0usize;
                let mut failed = Vec::new();
                for (name, v) in axioms {
                    match v.get("status").and_then(Value::as_str) {
                        Some("holds") => held += 1,
                        Some("fails") => failed.push(name.clone()),
                        _ => {}
                    }
                }
                if failed.is_empty() {
                    lines.push(format!("evidence: {held} axioms hold"));
                } else {
                    lines.push(format!("evidence: failing axioms: {}", failed.join(", ")));
                }
            }
            if let Some(d) = grab_u64("pre_dimension") {
                lines.push(format!(
                    "tensor dimensions: {d} before relations, {} relations, {} degenerate",
                    grab_u64("relation_dimension").unwrap_or(0),
                    grab_u64("degeneracy_dimension").unwrap_or(0),
                ));
            }
        }
        "tensor" | "induce" => {
            if let Some(cp) = obj.get("cp").and_then(Value::as_object) {
                match cp.get("status").and_then(Value::as_str) {
                    Some("holds") => {
                        let n = cp
                            .get("certificate")
                            .and_then(Value::as_array)
                            .map_or(0, Vec::len);
                        let rechecked = obj
                            .get("certificate_rechecked")
                            .and_then(Value::as_bool)
                            .unwrap_or(false);
                        lines.push(format!(
                            "evidence: sum-of-squares certificate with {n} terms{}",
                            if rechecked { ", rechecked against the Gram table" } else { "" }
                        ));
                    }
                    Some("fails") => {
                        let kind = cp
                            .get("obstruction")
                            .and_then(|o| o.get("kind"))
                            .and_then(Value::as_str)
                            .unwrap_or("?");
                        lines.push(format!("evidence: obstruction of kind {kind}"));
                    }
                    _ => {}
                }
            }
            if let Some(d) = grab_u64("pre_dimension") {
                lines.push(format!(
                    "tensor dimensions: {d} before relations, {} relations, {} degenerate",
                    grab_u64("relation_dimension").unwrap_or(0),
                    grab_u64("degeneracy_dimension").unwrap_or(0),
                ));
            }
        }
        "isometric" => {
            if obj.get("isometry").is_some() {
                lines.push("evidence: explicit isometry between the pairings".into());
            }
        }
        "structure-theorem" => {
            if let Some(n) = grab_u64("n") {
                lines.push(format!("evidence: full projection in a {n} x {n} matrix algebra"));
            }
            if let Some(c) = grab_u64("corner_dimension") {
                lines.push(format!("corner dimension: {c}"));
            }
        }
        "kaplansky" => {
            if obj
                .get("identities_rechecked")
                .and_then(Value::as_bool)
                .unwrap_or(false)
            {
                lines.push("evidence: p = p* = p^2, pe = e, ep = p all rechecked".into());
            }
        }
        "factor" | "deform-factor" => {
            if obj
                .get("factorization_rechecked")
                .and_then(Value::as_bool)
                .unwrap_or(false)
            {
                lines.push("evidence: u*u recomputed and compared entry by entry".into());
            }
        }
        "check-property" => {
            if let Some(status) = obj.get("status").and_then(Value::as_object) {
                match status.get("kind").and_then(Value::as_str) {
                    Some("proven-for-family") => {
                        lines.push("evidence: proven for the whole family, not sampled".into())
                    }
                    Some("verified-on-samples") => lines.push(format!(
                        "evidence: {} random instances, none refuted",
                        status.get("samples").and_then(Value::as_u64).unwrap_or(0)
                    )),
                    Some("refuted") => lines.push(format!(
                        "evidence: counterexample: {}",
                        status.get("witness").and_then(Value::as_str).unwrap_or("?")
                    )),
                    _ => {}
                }
            }
        }
        "deform-validate" => {
            if let Some(checks) = obj.get("checks").and_then(Value::as_object) {
                let passed: Vec<&str> = checks
                    .iter()
                    .filter(|(_, v)| v.as_bool() == Some(true))
                    .map(|(k, _)| k.as_str())
                    .collect();
                lines.push(format!("evidence: laws rechecked: {}", passed.join(", ")));
            }
        }
        "decompose-auto" => {
            if obj
                .get("reconstruction_rechecked")
                .and_then(Value::as_bool)
                .unwrap_or(false)
            {
                lines.push("evidence: exp(i t D) composed with the star part reproduces the input".into());
            }
        }
        "derivations" => {
            if let Some(d) = grab_u64("dimension") {
                lines.push(format!(
                    "evidence: derivation space has dimension {d}, outer dimension {}",
                    grab_u64("outer_dimension").unwrap_or(0)
                ));
            }
        }
        "invertibility" => {
            if obj.get("iso_left").is_some() {
                lines.push("evidence: explicit isometries to the two identity bimodules".into());
            }
        }
        _ => {}
    }
    lines
}
