//! Interconversion classes: a gate can probabilistically simulate another iff
//! the Schmidt number of its Choi state is at least as large.

use serde::Serialize;

use crate::choi::choi_state_with_tol;
use crate::error::{Error, Result};
use crate::gates::Gate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ClassLabel {
    #[serde(rename = "LOCAL")]
    Local,
    #[serde(rename = "CNOT_CLASS")]
    CnotClass,
    #[serde(rename = "SWAP_CLASS")]
    SwapClass,
    #[serde(rename = "GENERAL")]
    General(usize),
}

impl ClassLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            ClassLabel::Local => "LOCAL",
            ClassLabel::CnotClass => "CNOT_CLASS",
            ClassLabel::SwapClass => "SWAP_CLASS",
            ClassLabel::General(_) => "GENERAL",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GateClass {
    pub schmidt_number: usize,
    pub label: ClassLabel,
}

pub fn classify(g: &Gate, rank_tol: f64) -> Result<GateClass> {
    let choi = choi_state_with_tol(g, rank_tol)?;
    let n = choi.schmidt_number;
    let label = if g.d() == 2 {
        match n {
            1 => ClassLabel::Local,
            2 => ClassLabel::CnotClass,
            4 => ClassLabel::SwapClass,
            _ => return Err(Error::ImpossibleRank { spectrum: choi.spectrum.amplitudes().to_vec() }),
        }
    } else {
        ClassLabel::General(n)
    };
    Ok(GateClass { schmidt_number: n, label })
}

fn same_dimension(g: &Gate, h: &Gate) -> Result<()> {
    if g.d() != h.d() {
        return Err(Error::DimensionMismatch(format!("gates act on d = {} and d = {}", g.d(), h.d())));
    }
    Ok(())
}

/// `g` can be converted into `h` with non-zero probability.
pub fn can_simulate(g: &Gate, h: &Gate, rank_tol: f64) -> Result<bool> {
    same_dimension(g, h)?;
    Ok(classify(g, rank_tol)?.schmidt_number >= classify(h, rank_tol)?.schmidt_number)
}

/// Mutual probabilistic interconvertibility.
pub fn equivalent(g: &Gate, h: &Gate, rank_tol: f64) -> Result<bool> {
    same_dimension(g, h)?;
    Ok(classify(g, rank_tol)?.schmidt_number == classify(h, rank_tol)?.schmidt_number)
}

/// Whether the gate's Choi state carries two full ebits (uniform rank-4 spectrum).
pub fn creates_two_ebits(g: &Gate) -> Result<bool> {
    if g.d() != 2 {
        return Err(Error::Input("creates_two_ebits needs a two-qubit gate".into()));
    }
    let choi = choi_state_with_tol(g, crate::DEFAULT_RANK_TOL)?;
    Ok(choi.spectrum.amplitudes().iter().all(|b| (b - 0.5).abs() <= 1e-9))
}
