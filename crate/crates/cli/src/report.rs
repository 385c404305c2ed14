//! Analysis of a single gate.

use locconv_core::choi::choi_state_with_tol;
use locconv_core::convert::quote_with_tol;
use locconv_core::gates::interaction_coefficients;
use locconv_core::{canonical_decompose, classify, ConversionQuote, ConversionTarget, Gate};
use serde::Serialize;

use crate::error::CliError;
use crate::gate_source::InputEcho;

pub const ANALYSIS_SCHEMA: &str = "locconv/analysis/v1";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuoteJson {
    pub target: &'static str,
    pub feasible: bool,
    pub probability: f64,
    pub uncapped: f64,
}

impl From<&ConversionQuote> for QuoteJson {
    fn from(q: &ConversionQuote) -> Self {
        Self { target: q.target.name(), feasible: q.feasible, probability: q.probability, uncapped: q.uncapped }
    }
}

/// Everything the tool knows about a gate. Two-qubit-only fields are `null`
/// for `d > 2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub schema: &'static str,
    pub input: InputEcho,
    pub d: usize,
    pub mu: Option<[f64; 3]>,
    pub global_phase: Option<f64>,
    pub interaction_coefficients: Option<[[f64; 2]; 4]>,
    pub choi_spectrum: Vec<f64>,
    pub schmidt_number: usize,
    pub class: &'static str,
    pub rank_tol: f64,
    pub quote_cnot: Option<QuoteJson>,
    pub quote_swap: Option<QuoteJson>,
}

/// Maps `-0.0` to `0.0` so signed zeros from round-off do not reach the output.
fn tidy(x: f64) -> f64 {
    x + 0.0
}

pub fn analyze(gate: &Gate, input: InputEcho, rank_tol: f64) -> Result<AnalysisReport, CliError> {
    let choi = choi_state_with_tol(gate, rank_tol)?;
    let class = classify(gate, rank_tol)?;
    let mut report = AnalysisReport {
        schema: ANALYSIS_SCHEMA,
        input,
        d: gate.d(),
        mu: None,
        global_phase: None,
        interaction_coefficients: None,
        choi_spectrum: choi.spectrum.amplitudes().iter().map(|&x| tidy(x)).collect(),
        schmidt_number: class.schmidt_number,
        class: class.label.as_str(),
        rank_tol,
        quote_cnot: None,
        quote_swap: None,
    };
    if gate.d() == 2 {
        let cf = canonical_decompose(gate)?;
        let a = interaction_coefficients(cf.mu).a;
        report.mu = Some(cf.mu.map(tidy));
        report.global_phase = Some(tidy(cf.global_phase));
        report.interaction_coefficients = Some(a.map(|z| [tidy(z.re), tidy(z.im)]));
        report.quote_cnot = Some((&quote_with_tol(gate, ConversionTarget::Cnot, rank_tol)?).into());
        report.quote_swap = Some((&quote_with_tol(gate, ConversionTarget::Swap, rank_tol)?).into());
    }
    Ok(report)
}

impl AnalysisReport {
    /// One-line summary for standard error.
    pub fn summary(&self) -> String {
        let mut s = format!("d={} schmidt_number={} class={}", self.d, self.schmidt_number, self.class);
        if let Some(mu) = self.mu {
            s += &format!(" mu=[{:.6}, {:.6}, {:.6}]", mu[0], mu[1], mu[2]);
        }
        for q in [&self.quote_cnot, &self.quote_swap].into_iter().flatten() {
            if q.feasible {
                s += &format!(" p({})={:.6}", q.target, q.probability);
            } else {
                s += &format!(" p({})=infeasible", q.target);
            }
        }
        s
    }
}
