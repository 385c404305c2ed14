//! Exact pure-state simulator for two-party protocols.
//!
//! A [`Register`] is a labelled pure state whose subsystems belong to Alice
//! or Bob. An [`Execution`] carries the branches of a protocol run: in
//! enumeration mode every measurement splits each branch into all outcomes
//! with their Born weights, in sampling mode a seeded generator picks one.
//! Protocols are written once against [`Execution`] and run in either mode.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::choi::{schmidt_number, schmidt_spectrum, PureState};
use crate::convert::{FilterCascade, LocalFilter};
use crate::error::{Error, Result};
use crate::gates::Gate;
use crate::linalg::{is_unitary, pauli, tensor, ComplexMatrix, C64, ONE, ZERO};
use crate::DEFAULT_RANK_TOL;

/// Largest register, in amplitudes (eight qubits).
pub const MAX_AMPLITUDES: usize = 256;
/// Branches whose absolute probability falls below this are dropped.
pub const PRUNE_TOL: f64 = 1e-14;
pub const OPERATOR_UNITARY_TOL: f64 = 1e-10;
pub const BASIS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Party {
    Alice,
    Bob,
}

/// Pure state with one label and one owning party per subsystem.
#[derive(Debug, Clone, PartialEq)]
pub struct Register {
    state: PureState,
    labels: Vec<String>,
    parties: Vec<Party>,
}

impl Register {
    /// Wraps a state; `layout` names each subsystem in order.
    pub fn new(state: PureState, layout: &[(&str, Party)]) -> Result<Self> {
        if layout.len() != state.num_subsystems() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} subsystems",
                layout.len(),
                state.num_subsystems()
            )));
        }
        if state.dim() > MAX_AMPLITUDES {
            return Err(Error::RegisterTooLarge(state.dim()));
        }
        let labels: Vec<String> = layout.iter().map(|(l, _)| l.to_string()).collect();
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::Input(format!("duplicate label `{l}`")));
            }
        }
        Ok(Self { state, labels, parties: layout.iter().map(|(_, p)| *p).collect() })
    }

    /// Appends subsystems in `state`, labelled by `layout`.
    pub fn append(&self, state: &PureState, layout: &[(&str, Party)]) -> Result<Self> {
        let mut full: Vec<(&str, Party)> =
            self.labels.iter().map(String::as_str).zip(self.parties.iter().copied()).collect();
        full.extend_from_slice(layout);
        Register::new(self.state.tensor(state), &full)
    }

    pub fn state(&self) -> &PureState {
        &self.state
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index(&self, label: &str) -> Result<usize> {
        self.labels.iter().position(|l| l == label).ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn indices(&self, labels: &[&str]) -> Result<Vec<usize>> {
        labels.iter().map(|l| self.index(l)).collect()
    }

    pub fn party(&self, label: &str) -> Result<Party> {
        Ok(self.parties[self.index(label)?])
    }

    /// Applies a unitary to the labelled subsystems (in the given order).
    pub fn apply(&self, op: &ComplexMatrix, targets: &[&str]) -> Result<Register> {
        if !is_unitary(op, OPERATOR_UNITARY_TOL) {
            return Err(Error::NotUnitary {
                residual: crate::linalg::unitarity_residual(op),
                tolerance: OPERATOR_UNITARY_TOL,
            });
        }
        self.apply_unchecked(op, targets)
    }

    pub fn apply_gate(&self, g: &Gate, targets: &[&str]) -> Result<Register> {
        self.apply_unchecked(g.matrix(), targets)
    }

    fn apply_unchecked(&self, op: &ComplexMatrix, targets: &[&str]) -> Result<Register> {
        let idx = self.indices(targets)?;
        Ok(Register { state: self.state.apply_operator(op, &idx)?, ..self.clone() })
    }

    /// Schmidt number across the Alice | Bob cut.
    pub fn party_schmidt_number(&self) -> Result<usize> {
        let alice: Vec<usize> = (0..self.parties.len()).filter(|&i| self.parties[i] == Party::Alice).collect();
        if alice.is_empty() || alice.len() == self.parties.len() {
            return Ok(1);
        }
        Ok(schmidt_number(&schmidt_spectrum(&self.state, &alice)?, DEFAULT_RANK_TOL))
    }

    /// `<target| rho_L |target>` where `rho_L` is the reduced state on `labels`.
    /// Equals 1 exactly when the register is `target` on `labels` times anything.
    pub fn reduced_fidelity(&self, labels: &[&str], target: &PureState) -> Result<f64> {
        let idx = self.indices(labels)?;
        let dims: Vec<usize> = idx.iter().map(|&i| self.state.dims()[i]).collect();
        if dims != target.dims() {
            return Err(Error::DimensionMismatch(format!("labels have dims {dims:?}, target {:?}", target.dims())));
        }
        if idx.len() == self.labels.len() {
            let permuted = self.state.permuted_amplitudes(&idx);
            let overlap: C64 = target.amplitudes().iter().zip(&permuted).map(|(t, a)| t.conj() * a).sum();
            return Ok(overlap.norm_sqr());
        }
        let m = self.state.bipartite_matrix(&idx)?;
        let t = target.amplitudes();
        let f = (0..m.cols()).map(|c| (0..m.rows()).map(|r| t[r].conj() * m[(r, c)]).sum::<C64>().norm_sqr()).sum();
        Ok(f)
    }

    fn with_amplitudes(&self, amps: Vec<C64>) -> Result<(Register, f64)> {
        let p: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
        let state = if p > 0.0 {
            let n = p.sqrt();
            PureState::new(self.state.dims().to_vec(), amps.into_iter().map(|z| z / n).collect())?
        } else {
            self.state.clone()
        };
        Ok((Register { state, ..self.clone() }, p))
    }

    fn local_targets(&self, targets: &[&str]) -> Result<Vec<usize>> {
        let idx = self.indices(targets)?;
        let party = self.parties[idx[0]];
        if idx.iter().any(|&i| self.parties[i] != party) {
            return Err(Error::Input(format!("local operation spans both parties: {targets:?}")));
        }
        Ok(idx)
    }

    /// All outcomes of a projective measurement with their Born weights.
    pub fn measure(&self, targets: &[&str], basis: &MeasurementBasis) -> Result<Vec<(f64, Register)>> {
        let idx = self.local_targets(targets)?;
        basis
            .vectors
            .iter()
            .map(|v| {
                let proj = ComplexMatrix::column(v).matmul(&ComplexMatrix::column(v).adjoint());
                let amps = self.state.apply_operator(&proj, &idx)?.amplitudes().to_vec();
                let (reg, p) = self.with_amplitudes(amps)?;
                Ok((p, reg))
            })
            .collect()
    }

    /// All outcomes of a local filter with their Born weights and success flags.
    pub fn apply_filter(&self, filter: &LocalFilter, targets: &[&str]) -> Result<Vec<(f64, bool, Register)>> {
        let idx = self.local_targets(targets)?;
        filter
            .operators()
            .iter()
            .map(|op| {
                let amps = self.state.apply_operator(&op.matrix, &idx)?.amplitudes().to_vec();
                let (reg, p) = self.with_amplitudes(amps)?;
                Ok((p, op.success, reg))
            })
            .collect()
    }
}

/// Orthonormal basis of the space measured by a projective measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementBasis {
    vectors: Vec<Vec<C64>>,
}

impl MeasurementBasis {
    pub fn new(vectors: Vec<Vec<C64>>) -> Result<Self> {
        let dim = vectors.len();
        if dim == 0 || vectors.iter().any(|v| v.len() != dim) {
            return Err(Error::IncompleteMeasurement("basis must be square and non-empty".into()));
        }
        for (i, a) in vectors.iter().enumerate() {
            for (j, b) in vectors.iter().enumerate() {
                let ip: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                if (ip - expect).norm() > BASIS_TOL {
                    return Err(Error::IncompleteMeasurement(format!("basis vectors {i},{j} overlap {ip}")));
                }
            }
        }
        Ok(Self { vectors })
    }

    pub fn computational(d: usize) -> Self {
        Self { vectors: (0..d).map(|k| (0..d).map(|j| if j == k { ONE } else { ZERO }).collect()).collect() }
    }

    /// `|+>, |->`.
    pub fn x() -> Self {
        let r = C64::from(std::f64::consts::FRAC_1_SQRT_2);
        Self { vectors: vec![vec![r, r], vec![r, -r]] }
    }

    /// `Phi_i = (sigma_i (x) 1) Phi_0` for `i = 0..4`.
    pub fn bell() -> Self {
        let phi0 = bell_state(0);
        Self {
            vectors: (0..4)
                .map(|i| tensor(&pauli(i), &ComplexMatrix::identity(2)).mul_vec(phi0.amplitudes()))
                .collect(),
        }
    }

    pub fn vectors(&self) -> &[Vec<C64>] {
        &self.vectors
    }
}

/// `Phi_i` from [`MeasurementBasis::bell`] as a two-qubit state.
pub fn bell_state(i: usize) -> PureState {
    let phi0 = crate::choi::maximally_entangled(2);
    let v = tensor(&pauli(i), &ComplexMatrix::identity(2)).mul_vec(phi0.amplitudes());
    PureState::new(vec![2, 2], v).expect("Bell states are normalised")
}

pub fn fidelity(a: &PureState, b: &PureState) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchStatus {
    Active,
    Failed,
}

/// One outcome path of a protocol run.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub outcomes: Vec<(String, usize)>,
    /// Absolute probability of the path.
    pub probability: f64,
    pub register: Register,
    pub status: BranchStatus,
}

impl Branch {
    pub fn outcome(&self, label: &str) -> Option<usize> {
        self.outcomes.iter().rev().find(|(l, _)| l == label).map(|(_, k)| *k)
    }

    pub fn is_success(&self) -> bool {
        self.status == BranchStatus::Active
    }

    /// `label=k` pairs joined by commas.
    pub fn path_key(&self) -> String {
        let parts: Vec<String> = self.outcomes.iter().map(|(l, k)| format!("{l}={k}")).collect();
        parts.join(",")
    }
}

#[allow(clippy::large_enum_variant)]
pub enum Mode {
    Enumerate,
    Sample(ChaCha8Rng),
}

impl fmt::Debug for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Enumerate => f.write_str("Enumerate"),
            Mode::Sample(_) => f.write_str("Sample"),
        }
    }
}

/// Per-sample generator: stream `i` of the ChaCha8 generator seeded by `seed`.
pub fn sample_rng(seed: u64, i: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i);
    rng
}

/// State of a protocol run: its branches plus bookkeeping shared by all of them.
#[derive(Debug)]
pub struct Execution {
    branches: Vec<Branch>,
    mode: Mode,
    pruned_mass: f64,
    rank_monotone: bool,
    classical_bits: usize,
    gate_uses: usize,
}

impl Execution {
    pub fn new(register: Register, mode: Mode) -> Self {
        Self {
            branches: vec![Branch { outcomes: Vec::new(), probability: 1.0, register, status: BranchStatus::Active }],
            mode,
            pruned_mass: 0.0,
            rank_monotone: true,
            classical_bits: 0,
            gate_uses: 0,
        }
    }

    pub fn enumerate(register: Register) -> Self {
        Self::new(register, Mode::Enumerate)
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn into_branches(self) -> Vec<Branch> {
        self.branches
    }

    pub fn pruned_mass(&self) -> f64 {
        self.pruned_mass
    }

    /// False once any branching step raised the Alice | Bob Schmidt number.
    pub fn rank_monotone(&self) -> bool {
        self.rank_monotone
    }

    pub fn classical_bits(&self) -> usize {
        self.classical_bits
    }

    pub fn gate_uses(&self) -> usize {
        self.gate_uses
    }

    pub fn send_bits(&mut self, n: usize) {
        self.classical_bits += n;
    }

    pub fn success_probability(&self) -> f64 {
        self.branches.iter().filter(|b| b.is_success()).map(|b| b.probability).sum()
    }

    pub fn total_probability(&self) -> f64 {
        self.branches.iter().map(|b| b.probability).sum::<f64>() + self.pruned_mass
    }

    /// Local unitary on every active branch; all targets must belong to one party.
    pub fn apply(&mut self, op: &ComplexMatrix, targets: &[&str]) -> Result<()> {
        if !is_unitary(op, OPERATOR_UNITARY_TOL) {
            return Err(Error::NotUnitary {
                residual: crate::linalg::unitarity_residual(op),
                tolerance: OPERATOR_UNITARY_TOL,
            });
        }
        for b in self.branches.iter_mut().filter(|b| b.is_success()) {
            b.register.local_targets(targets)?;
            b.register = b.register.apply_unchecked(op, targets)?;
        }
        Ok(())
    }

    /// One application of the (possibly non-local) resource gate. A run may
    /// use it at most once.
    pub fn use_gate(&mut self, g: &Gate, targets: &[&str]) -> Result<()> {
        self.gate_uses += 1;
        if self.gate_uses > 1 {
            return Err(Error::ResourceOveruse(self.gate_uses));
        }
        for b in self.branches.iter_mut().filter(|b| b.is_success()) {
            b.register = b.register.apply_gate(g, targets)?;
        }
        Ok(())
    }

    /// Branch-dependent step on every active branch (conditional corrections).
    pub fn for_each_active(&mut self, mut f: impl FnMut(&mut Branch) -> Result<()>) -> Result<()> {
        self.branches.iter_mut().filter(|b| b.is_success()).try_for_each(&mut f)
    }

    /// Marks active branches failing `keep` as failed.
    pub fn postselect(&mut self, keep: impl Fn(&Branch) -> bool) {
        for b in self.branches.iter_mut().filter(|b| b.is_success()) {
            if !keep(b) {
                b.status = BranchStatus::Failed;
            }
        }
    }

    pub fn measure(&mut self, name: &str, targets: &[&str], basis: &MeasurementBasis) -> Result<()> {
        self.branch_out(
            name,
            |b| {
                let outs = b.register.measure(targets, basis)?;
                Ok(outs.into_iter().map(|(p, r)| (p, BranchStatus::Active, r)).collect())
            },
            |b| b.is_success(),
        )
    }

    /// Filter whose failure outcomes end the branch.
    pub fn filter(&mut self, name: &str, targets: &[&str], filter: &LocalFilter) -> Result<()> {
        self.filter_if(name, targets, filter, |b| b.is_success())
    }

    fn filter_if(
        &mut self,
        name: &str,
        targets: &[&str],
        filter: &LocalFilter,
        select: impl Fn(&Branch) -> bool,
    ) -> Result<()> {
        self.branch_out(
            name,
            |b| {
                let outs = b.register.apply_filter(filter, targets)?;
                Ok(outs
                    .into_iter()
                    .map(|(p, ok, r)| (p, if ok { BranchStatus::Active } else { BranchStatus::Failed }, r))
                    .collect())
            },
            select,
        )
    }

    /// Applies the rounds of `cascade` in turn: round `k` acts on the branches
    /// that reached the failure outcome of round `k - 1`. Outcomes are
    /// recorded as `name.k`.
    pub fn filter_cascade(&mut self, name: &str, targets: &[&str], cascade: &FilterCascade) -> Result<()> {
        let mut previous: Option<(String, Vec<usize>)> = None;
        for (k, round) in cascade.rounds().iter().enumerate() {
            let label = format!("{name}.{k}");
            match &previous {
                None => self.filter(&label, targets, round)?,
                Some((prev, fails)) => {
                    let (prev, fails) = (prev.clone(), fails.clone());
                    let select =
                        move |b: &Branch| b.outcomes.last().is_some_and(|(l, i)| *l == prev && fails.contains(i));
                    self.filter_if(&label, targets, round, select)?;
                }
            }
            let fails = round.operators().iter().enumerate().filter(|(_, o)| !o.success).map(|(i, _)| i).collect();
            previous = Some((label, fails));
        }
        Ok(())
    }

    fn branch_out(
        &mut self,
        name: &str,
        split: impl Fn(&Branch) -> Result<Vec<(f64, BranchStatus, Register)>>,
        select: impl Fn(&Branch) -> bool,
    ) -> Result<()> {
        let old = std::mem::take(&mut self.branches);
        for b in old {
            if !select(&b) {
                self.branches.push(b);
                continue;
            }
            let parent_rank = b.register.party_schmidt_number()?;
            let children = split(&b)?;
            let total: f64 = children.iter().map(|c| c.0).sum();
            if (total - 1.0).abs() > 1e-10 {
                return Err(Error::IncompleteMeasurement(format!("outcome probabilities sum to {total}")));
            }
            let chosen: Vec<usize> = match &mut self.mode {
                Mode::Enumerate => (0..children.len()).collect(),
                Mode::Sample(rng) => {
                    let u: f64 = rng.random::<f64>() * total;
                    let mut acc = 0.0;
                    let mut pick = children.iter().rposition(|c| c.0 > 0.0).unwrap_or(0);
                    for (k, c) in children.iter().enumerate() {
                        acc += c.0;
                        if u < acc && c.0 > 0.0 {
                            pick = k;
                            break;
                        }
                    }
                    vec![pick]
                }
            };
            let sampling = matches!(self.mode, Mode::Sample(_));
            for (k, (p, status, register)) in children.into_iter().enumerate() {
                let abs = b.probability * p;
                if !chosen.contains(&k) {
                    continue;
                }
                if !sampling && abs < PRUNE_TOL {
                    self.pruned_mass += abs;
                    continue;
                }
                if register.party_schmidt_number()? > parent_rank {
                    self.rank_monotone = false;
                }
                let mut outcomes = b.outcomes.clone();
                outcomes.push((name.to_string(), k));
                // In sampling mode the path probability is the product of the
                // conditional probabilities of the drawn outcomes.
                self.branches.push(Branch { outcomes, probability: abs, register, status });
            }
        }
        Ok(())
    }
}

/// Outcome counts of repeated sampled runs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FrequencyTable {
    pub seed: u64,
    pub samples: usize,
    pub successes: usize,
    /// Keyed by outcome path; failed paths are prefixed with `!`.
    pub counts: BTreeMap<String, usize>,
}

impl FrequencyTable {
    pub fn success_frequency(&self) -> f64 {
        self.successes as f64 / self.samples as f64
    }
}

/// Runs `program` `n` times in sampling mode; sample `i` draws from
/// [`sample_rng`]`(seed, i)`, so the table does not depend on scheduling.
pub fn sample_run<F>(program: F, seed: u64, n: usize) -> Result<FrequencyTable>
where
    F: Fn(Mode) -> Result<Execution> + Sync,
{
    if n == 0 {
        return Err(Error::Input("sample count must be at least 1".into()));
    }
    let keys: Vec<(String, bool)> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let exec = program(Mode::Sample(sample_rng(seed, i)))?;
            let b = exec
                .branches()
                .first()
                .ok_or(Error::Numerical { context: "sampled run lost its branch", residual: 1.0 })?;
            let key = if b.is_success() { b.path_key() } else { format!("!{}", b.path_key()) };
            Ok((key, b.is_success()))
        })
        .collect::<Result<_>>()?;
    let mut counts = BTreeMap::new();
    let mut successes = 0;
    for (k, ok) in keys {
        *counts.entry(k).or_insert(0) += 1;
        successes += ok as usize;
    }
    Ok(FrequencyTable { seed, samples: n, successes, counts })
}
