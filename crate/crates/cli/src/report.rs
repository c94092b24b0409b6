//! Report assembly and rendering. The machine form is canonical: keys are
//! sorted recursively, scalars appear as exact strings, and timings are
//! omitted, so identical inputs reproduce identical bytes. The human form
//! is free to show durations.

use morita::amat::AMat;
use morita::linalg::Mat;
use morita::positivity::{Obstruction, SquaresCert};
use morita::psd::PsdCertificate;
use morita::scalar::Scalar;
use morita::Verdict;
use serde_json::{json, Map, Value};

pub const SCHEMA_VERSION: u64 = 1;

pub struct TaskReport {
    pub name: String,
    pub verb: String,
    pub expected: String,
    pub outcome: String,
    pub matched: bool,
    pub detail: String,
    pub data: Value,
    pub seconds: f64,
}

pub struct RunReport {
    pub scenario: String,
    pub seed: u64,
    pub order: Option<usize>,
    pub assertions: Vec<String>,
    pub tasks: Vec<TaskReport>,
}

impl RunReport {
    pub fn overall_ok(&self) -> bool {
        self.tasks.iter().all(|t| t.matched)
    }

    pub fn machine_value(&self) -> Value {
        let tasks: Vec<Value> = self
            .tasks
            .iter()
            .map(|t| {
                json!({
                    "name": t.name,
                    "verb": t.verb,
                    "expected": t.expected,
                    "outcome": t.outcome,
                    "matched": t.matched,
                    "detail": t.detail,
                    "data": t.data,
                })
            })
            .collect();
        canonical(&json!({
            "schema_version": SCHEMA_VERSION,
            "scenario": self.scenario,
            "seed": self.seed,
            "order": self.order,
            "assertions": self.assertions,
            "overall": if self.overall_ok() { "ok" } else { "failed" },
            "tasks": tasks,
        }))
    }

    pub fn machine_string(&self) -> String {
        let mut s =
            serde_json::to_string_pretty(&self.machine_value()).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn human_string(&self) -> String {
        let mut out = String::new();
        let ring = match self.order {
            Some(n) => format!("series order {n}"),
            None => "classical scalars".into(),
        };
        out.push_str(&format!(
            "scenario {} (seed {}, {})\n",
            self.scenario, self.seed, ring
        ));
        for a in &self.assertions {
            out.push_str(&format!("assumes: {a}\n"));
        }
        for t in &self.tasks {
            let mark = if t.matched { "ok " } else { "FAIL" };
            out.push_str(&format!(
                "{mark} {:<24} [{}] {} (expected {}) ({:.2} s) — {}\n",
                t.name, t.verb, t.outcome, t.expected, t.seconds, t.detail
            ));
        }
        out.push_str(&format!(
            "overall: {}\n",
            if self.overall_ok() { "ok" } else { "failed" }
        ));
        out
    }
}

/// Rebuild a JSON value with object keys inserted in sorted order at every
/// level. The serializer preserves insertion order, so this pins the byte
/// layout.
pub fn canonical(v: &Value) -> Value {
    match v {
        Value::Object(m) => {
            let mut keys: Vec<&String> = m.keys().collect();
            keys.sort();
            let mut out = Map::new();
            for k in keys {
                out.insert(k.clone(), canonical(&m[k]));
            }
            Value::Object(out)
        }
        Value::Array(a) => Value::Array(a.iter().map(canonical).collect()),
        other => other.clone(),
    }
}

pub fn scalar_value(s: &Scalar) -> Value {
    Value::String(s.to_string())
}

pub fn aelt_value(a: &[Scalar]) -> Value {
    Value::Array(a.iter().map(scalar_value).collect())
}

pub fn mat_value(m: &Mat) -> Value {
    Value::Array(
        (0..m.rows())
            .map(|r| Value::Array((0..m.cols()).map(|c| scalar_value(m.at(r, c))).collect()))
            .collect(),
    )
}

pub fn amat_value(m: &AMat) -> Value {
    Value::Array(
        (0..m.rows())
            .map(|r| Value::Array((0..m.cols()).map(|c| aelt_value(m.at(r, c))).collect()))
            .collect(),
    )
}

pub fn cert_value(c: &SquaresCert) -> Value {
    Value::Array(
        c.terms
            .iter()
            .map(|(d, row)| {
                json!({
                    "coefficient": scalar_value(d),
                    "row": row.iter().map(|a| aelt_value(a)).collect::<Vec<_>>(),
                })
            })
            .collect(),
    )
}

fn psd_cert_value(c: &PsdCertificate) -> Value {
    Value::Array(
        c.iter()
            .map(|(d, w)| json!({"coefficient": scalar_value(d), "vector": aelt_value(w)}))
            .collect(),
    )
}

pub fn obstruction_value(o: &Obstruction) -> Value {
    match o {
        Obstruction::NotHermitian => json!({"kind": "not-hermitian"}),
        Obstruction::Functional { phi, gram_cert, value } => json!({
            "kind": "functional",
            "functional": aelt_value(phi),
            "gram_certificate": psd_cert_value(gram_cert),
            "value": scalar_value(value),
        }),
        Obstruction::VectorState { x, value } => json!({
            "kind": "vector-state",
            "vector": aelt_value(x),
            "value": scalar_value(value),
        }),
        Obstruction::Classical(inner) => json!({
            "kind": "classical",
            "classical_obstruction": obstruction_value(inner),
        }),
        Obstruction::NilpotentSupport(detail) => {
            json!({"kind": "nilpotent-support", "detail": detail})
        }
    }
}

/// Status object for a positivity verdict, with the evidence serialized
/// exactly.
pub fn cp_value(v: &Verdict<SquaresCert, Obstruction>) -> Value {
    match v {
        Verdict::Holds(cert) => json!({"status": "holds", "certificate": cert_value(cert)}),
        Verdict::Fails(obs) => json!({"status": "fails", "obstruction": obstruction_value(obs)}),
        Verdict::Unknown(w) => json!({"status": "unknown", "witness": w}),
    }
}

pub fn check_value(v: &Verdict<(), String>) -> Value {
    match v {
        Verdict::Holds(()) => json!({"status": "holds"}),
        Verdict::Fails(w) => json!({"status": "fails", "witness": w}),
        Verdict::Unknown(w) => json!({"status": "unknown", "witness": w}),
    }
}
