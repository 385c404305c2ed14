//! Gate JSON parsing and input echo.
//!
//! ```json
//! {"d": 2, "matrix": [[[1, 0], [0, 0], ...], ...]}
//! {"name": "cnot"}
//! {"canonical": {"mu": [0.5, 0.2, 0.0]}}
//! ```

use std::fmt::Write as _;

use locconv_core::gates::CanonicalForm;
use locconv_core::{gate_from_canonical, named_gate, ComplexMatrix, Error, Gate, C64};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Unitarity tolerance applied to user-supplied matrices.
pub const INPUT_UNITARY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateJson {
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default)]
    pub matrix: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub canonical: Option<CanonicalJson>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CanonicalJson {
    pub mu: [f64; 3],
}

/// How the gate was given, echoed back in reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputEcho {
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<[f64; 3]>,
    pub digest: String,
}

#[derive(Debug, Clone)]
pub struct ParsedGate {
    pub gate: Gate,
    pub echo: InputEcho,
}

/// Failure to obtain a gate, split by exit status.
#[derive(Debug, Clone, PartialEq)]
pub enum GateError {
    Malformed(String),
    NotUnitary { residual: f64 },
}

impl std::fmt::Display for GateError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GateError::Malformed(m) => write!(f, "malformed gate: {m}"),
            GateError::NotUnitary { residual } => {
                write!(f, "matrix is not unitary: residual {residual:.3e} exceeds {INPUT_UNITARY_TOL:.0e}")
            }
        }
    }
}

fn from_core(e: Error) -> GateError {
    match e {
        Error::NotUnitary { residual, .. } => GateError::NotUnitary { residual },
        other => GateError::Malformed(other.to_string()),
    }
}

/// First 16 hex digits of SHA-256 over `d` and the little-endian entries.
pub fn digest(g: &Gate) -> String {
    let mut h = Sha256::new();
    h.update((g.d() as u64).to_le_bytes());
    for z in g.matrix().data() {
        h.update(z.re.to_le_bytes());
        h.update(z.im.to_le_bytes());
    }
    let bytes = h.finalize();
    bytes[..8].iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn from_name(name: &str) -> Result<ParsedGate, GateError> {
    let gate = named_gate(name).map_err(from_core)?;
    let echo = InputEcho { kind: "name", name: Some(name.to_string()), mu: None, digest: digest(&gate) };
    Ok(ParsedGate { gate, echo })
}

pub fn from_mu(mu: [f64; 3]) -> Result<ParsedGate, GateError> {
    if mu.iter().any(|m| !m.is_finite()) {
        return Err(GateError::Malformed("mu entries must be finite".into()));
    }
    let gate = gate_from_canonical(&CanonicalForm::from_mu(mu));
    let echo = InputEcho { kind: "canonical", name: None, mu: Some(mu), digest: digest(&gate) };
    Ok(ParsedGate { gate, echo })
}

pub fn from_json_value(v: GateJson) -> Result<ParsedGate, GateError> {
    let given = [v.matrix.is_some(), v.name.is_some(), v.canonical.is_some()].iter().filter(|&&x| x).count();
    if given != 1 {
        return Err(GateError::Malformed("exactly one of \"matrix\", \"name\", \"canonical\" is required".into()));
    }
    if let Some(name) = v.name {
        check_qubit_d(v.d)?;
        return from_name(&name);
    }
    if let Some(c) = v.canonical {
        check_qubit_d(v.d)?;
        return from_mu(c.mu);
    }
    let rows = v.matrix.expect("checked above");
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(GateError::Malformed("matrix must be square and non-empty".into()));
    }
    let d = match v.d {
        Some(d) => d,
        None => {
            (2..=16).find(|d| d * d == n).ok_or_else(|| GateError::Malformed(format!("{n}x{n} is not d^2 x d^2")))?
        }
    };
    let data: Vec<C64> = rows.iter().flatten().map(|[re, im]| C64::new(*re, *im)).collect();
    let m = ComplexMatrix::new(n, n, data).map_err(from_core)?;
    let gate = Gate::with_tolerance(d, m, INPUT_UNITARY_TOL).map_err(from_core)?;
    let echo = InputEcho { kind: "matrix", name: None, mu: None, digest: digest(&gate) };
    Ok(ParsedGate { gate, echo })
}

fn check_qubit_d(d: Option<usize>) -> Result<(), GateError> {
    match d {
        None | Some(2) => Ok(()),
        Some(other) => Err(GateError::Malformed(format!("named and canonical gates have d = 2, got {other}"))),
    }
}

pub fn from_json_str(s: &str) -> Result<ParsedGate, GateError> {
    let v: GateJson = serde_json::from_str(s).map_err(|e| GateError::Malformed(e.to_string()))?;
    from_json_value(v)
}

/// Gate JSON for a matrix, in the format accepted by [`from_json_str`].
pub fn to_json(g: &Gate) -> serde_json::Value {
    let m = g.matrix();
    let rows: Vec<Vec<[f64; 2]>> = (0..m.rows()).map(|r| m.row(r).iter().map(|z| [z.re, z.im]).collect()).collect();
    serde_json::json!({ "d": g.d(), "matrix": rows })
}
