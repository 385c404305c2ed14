//! Executable protocols: gate teleportation, deterministic implementations
//! from entanglement, and the optimal single-use conversion of a gate into
//! CNOT or SWAP. Every protocol runs on [`Execution`] and is verified branch
//! by branch against the gate it claims to implement.

use std::collections::HashMap;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::choi::{choi_state_with_tol, maximally_entangled, schmidt_decompose, PureState, CHOI_CUT};
use crate::classify::classify;
use crate::convert::{build_cascade_to_rank2, build_filter_to_rank4, ConversionTarget, FilterCascade};
use crate::error::{Error, Result};
use crate::gates::{haar_unitary, named_gate, ualpha, Gate};
use crate::linalg::{pauli, ComplexMatrix, C64, ONE, ZERO};
use crate::sim::{bell_state, sample_run, Branch, Execution, FrequencyTable, MeasurementBasis, Mode, Party, Register};
use crate::DEFAULT_RANK_TOL;

/// A success branch is verified when its output has at least this fidelity
/// with the target action on every test input.
pub const VERIFY_TOL: f64 = 1e-9;
/// Minimum fidelity of a resource pair with `Phi_0`.
pub const EBIT_TOL: f64 = 1e-9;

/// Pauli applied to the far half after Bell outcome `Phi_i` in teleportation.
pub const TELEPORT_CORRECTION: [usize; 4] = [0, 1, 2, 3];
/// Pauli on Bob's ebit half after Alice's Z outcome in [`cnot_via_ebit`].
pub const CNOT_BOB_CORRECTION: [usize; 2] = [0, 1];
/// Pauli on the control after Bob's X outcome in [`cnot_via_ebit`].
pub const CNOT_ALICE_CORRECTION: [usize; 2] = [0, 3];
/// Pauli on `A` and on the ancilla after the ancilla's X outcome in [`ualpha_from_cnot`].
pub const UALPHA_CORRECTION: [usize; 2] = [0, 3];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchReport {
    pub outcomes: Vec<(String, usize)>,
    pub probability: f64,
    pub success: bool,
    /// Success branches only: fidelity with the target action, minimised over
    /// the test inputs.
    pub min_fidelity: Option<f64>,
    pub verified: bool,
}

/// Enumerated run of a protocol over a set of test inputs. Branch data and
/// bookkeeping come from the first input; fidelities are minimised over all.
#[derive(Debug, Clone, Serialize)]
pub struct ProtocolReport {
    pub protocol: String,
    pub target: String,
    #[serde(skip)]
    pub target_gate: Gate,
    pub success_probability_exact: f64,
    pub success_probability_per_input: Vec<f64>,
    pub total_probability: f64,
    pub branches: Vec<BranchReport>,
    #[serde(skip)]
    pub test_inputs: Vec<PureState>,
    pub classical_bits_sent: usize,
    pub pruned_mass: f64,
    pub gate_uses: usize,
    /// No branching step increased the Alice | Bob Schmidt number, on any input.
    pub rank_monotone: bool,
}

impl ProtocolReport {
    /// Every success branch verified and at least one success branch exists.
    pub fn verified(&self) -> bool {
        let mut success = self.branches.iter().filter(|b| b.success).peekable();
        success.peek().is_some() && success.all(|b| b.verified)
    }

    pub fn min_fidelity(&self) -> f64 {
        self.branches.iter().filter_map(|b| b.min_fidelity).fold(1.0, f64::min)
    }

    /// Largest spread of the success probability over the test inputs.
    pub fn input_deviation(&self) -> f64 {
        spread(&self.success_probability_per_input)
    }
}

fn spread(p: &[f64]) -> f64 {
    let max = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = p.iter().copied().fold(f64::INFINITY, f64::min);
    if p.is_empty() {
        0.0
    } else {
        max - min
    }
}

fn check_input(input: &PureState) -> Result<()> {
    if input.dims() != [2, 2] {
        return Err(Error::DimensionMismatch(format!(
            "protocol input must be two qubits, got dims {:?}",
            input.dims()
        )));
    }
    Ok(())
}

/// Runs `program` on every input and verifies the success branches against
/// `target` acting on the input, read off the `outputs` labels.
fn run_and_verify(
    protocol: &str,
    target_name: &str,
    target: &Gate,
    outputs: &[&str],
    inputs: &[PureState],
    program: impl Fn(&PureState, Mode) -> Result<Execution>,
) -> Result<ProtocolReport> {
    if inputs.is_empty() {
        return Err(Error::Input("at least one test input is required".into()));
    }
    let mut first: Option<Execution> = None;
    let mut fidelities: HashMap<String, f64> = HashMap::new();
    let mut per_input = Vec::with_capacity(inputs.len());
    let mut monotone = true;
    for input in inputs {
        check_input(input)?;
        let exec = program(input, Mode::Enumerate)?;
        let expected = PureState::new(vec![2, 2], target.apply(input.amplitudes()))?;
        for b in exec.branches().iter().filter(|b| b.is_success()) {
            let f = b.register.reduced_fidelity(outputs, &expected)?;
            let e = fidelities.entry(b.path_key()).or_insert(f);
            *e = e.min(f);
        }
        per_input.push(exec.success_probability());
        monotone &= exec.rank_monotone();
        if first.is_none() {
            first = Some(exec);
        }
    }
    let exec = first.expect("inputs are non-empty");
    let branches = exec
        .branches()
        .iter()
        .map(|b| {
            let min_fidelity = b.is_success().then(|| fidelities[&b.path_key()]);
            BranchReport {
                outcomes: b.outcomes.clone(),
                probability: b.probability,
                success: b.is_success(),
                verified: min_fidelity.is_some_and(|f| f >= 1.0 - VERIFY_TOL),
                min_fidelity,
            }
        })
        .collect();
    Ok(ProtocolReport {
        protocol: protocol.to_string(),
        target: target_name.to_string(),
        target_gate: target.clone(),
        success_probability_exact: per_input[0],
        success_probability_per_input: per_input,
        total_probability: exec.total_probability(),
        branches,
        test_inputs: inputs.to_vec(),
        classical_bits_sent: exec.classical_bits(),
        pruned_mass: exec.pruned_mass(),
        gate_uses: exec.gate_uses(),
        rank_monotone: monotone,
    })
}

/// The 16 product states of `{|0>, |1>, |+>, |+i>}` on two qubits followed by
/// `n_random` Haar-random two-qubit states. Fidelity one on all of these pins
/// down a two-qubit unitary up to a global phase.
pub fn standard_test_inputs(seed: u64, n_random: usize) -> Vec<PureState> {
    let r = FRAC_1_SQRT_2;
    let singles = [[ONE, ZERO], [ZERO, ONE], [C64::from(r), C64::from(r)], [C64::from(r), C64::new(0.0, r)]];
    let mut out = Vec::with_capacity(16 + n_random);
    for a in &singles {
        for b in &singles {
            let q = |v: &[C64; 2]| PureState::qubit(v[0], v[1]).expect("unit vector");
            out.push(q(a).tensor(&q(b)));
        }
    }
    out.extend(random_inputs(seed, n_random));
    out
}

/// Haar-random two-qubit states.
pub fn random_inputs(seed: u64, n: usize) -> Vec<PureState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| PureState::new(vec![2, 2], haar_unitary(&mut rng, 4).col(0)).expect("unit column")).collect()
}

fn check_ebit(exec: &Execution, pair: (&str, &str)) -> Result<()> {
    let phi0 = bell_state(0);
    for b in exec.branches().iter().filter(|b| b.is_success()) {
        let f = b.register.reduced_fidelity(&[pair.0, pair.1], &phi0)?;
        if f < 1.0 - EBIT_TOL {
            return Err(Error::Input(format!("pair ({}, {}) is not Phi_0 (fidelity {f})", pair.0, pair.1)));
        }
    }
    Ok(())
}

fn correct(exec: &mut Execution, measurement: &str, table: &[usize], targets: &[&str]) -> Result<()> {
    exec.for_each_active(|b: &mut Branch| {
        let k = b.outcome(measurement).ok_or_else(|| Error::UnknownLabel(measurement.to_string()))?;
        if table[k] != 0 {
            for t in targets {
                b.register = b.register.apply(&pauli(table[k]), &[t])?;
            }
        }
        Ok(())
    })
}

/// Teleports `source` through the ebit `(near, far)`: Bell measurement of
/// `source` with `near`, two bits to the owner of `far`, Pauli correction.
pub fn teleport(exec: &mut Execution, source: &str, ebit: (&str, &str)) -> Result<()> {
    check_ebit(exec, ebit)?;
    let name = format!("bell:{source}");
    exec.measure(&name, &[source, ebit.0], &MeasurementBasis::bell())?;
    exec.send_bits(2);
    correct(exec, &name, &TELEPORT_CORRECTION, &[ebit.1])
}

/// CNOT from `control` (Alice) onto `target` (Bob) consuming the ebit
/// `(alice_half, bob_half)`, with one bit sent each way.
pub fn cnot_via_ebit(exec: &mut Execution, control: &str, target: &str, ebit: (&str, &str)) -> Result<()> {
    check_ebit(exec, ebit)?;
    let cnot = named_gate("cnot")?;
    let (ea, eb) = ebit;
    exec.apply(cnot.matrix(), &[control, ea])?;
    let z = format!("z:{ea}");
    exec.measure(&z, &[ea], &MeasurementBasis::computational(2))?;
    exec.send_bits(1);
    correct(exec, &z, &CNOT_BOB_CORRECTION, &[eb])?;
    exec.apply(cnot.matrix(), &[eb, target])?;
    let x = format!("x:{eb}");
    exec.measure(&x, &[eb], &MeasurementBasis::x())?;
    exec.send_bits(1);
    correct(exec, &x, &CNOT_ALICE_CORRECTION, &[control])
}

const INPUT_LAYOUT: [(&str, Party); 2] = [("A", Party::Alice), ("B", Party::Bob)];

fn phi_pair() -> PureState {
    maximally_entangled(2)
}

/// `|Psi_U>` on `A1 A2 B1 B2`, prepared from two local pairs and one use of `g`.
pub fn make_choi(g: &Gate) -> Result<Register> {
    if g.d() != 2 {
        return Err(Error::Input("protocols are implemented for two-qubit gates".into()));
    }
    let mut exec = Execution::enumerate(choi_preparation(None)?);
    exec.use_gate(g, &["A1", "B1"])?;
    Ok(exec.into_branches().remove(0).register)
}

/// `Phi(A1,A2) Phi(B1,B2)`, optionally followed by an input on `inA`, `inB`.
fn choi_preparation(input: Option<&PureState>) -> Result<Register> {
    let phi = phi_pair();
    let reg = Register::new(
        phi.tensor(&phi),
        &[("A1", Party::Alice), ("A2", Party::Alice), ("B1", Party::Bob), ("B2", Party::Bob)],
    )?;
    match input {
        Some(i) => reg.append(i, &[("inA", Party::Alice), ("inB", Party::Bob)]),
        None => Ok(reg),
    }
}

fn cnot_program(input: &PureState, mode: Mode) -> Result<Execution> {
    let phi = phi_pair();
    let reg = Register::new(input.clone(), &INPUT_LAYOUT)?.append(&phi, &[("ea", Party::Alice), ("eb", Party::Bob)])?;
    let mut exec = Execution::new(reg, mode);
    cnot_via_ebit(&mut exec, "A", "B", ("ea", "eb"))?;
    Ok(exec)
}

/// Deterministic CNOT (control A, target B) from one ebit and two bits.
pub fn cnot_from_one_ebit(inputs: &[PureState]) -> Result<ProtocolReport> {
    run_and_verify("cnot_from_one_ebit", "cnot", &named_gate("cnot")?, &["A", "B"], inputs, cnot_program)
}

fn ualpha_program(alpha: f64, input: &PureState, mode: Mode) -> Result<Execution> {
    let ancilla = PureState::basis(vec![2], &[0])?;
    let reg = Register::new(input.clone(), &INPUT_LAYOUT)?.append(&ancilla, &[("Bt", Party::Bob)])?;
    let mut exec = Execution::new(reg, mode);
    exec.use_gate(&named_gate("cnot")?, &["A", "Bt"])?;
    exec.apply(ualpha(alpha).matrix(), &["B", "Bt"])?;
    exec.measure("x:Bt", &["Bt"], &MeasurementBasis::x())?;
    exec.send_bits(1);
    correct(&mut exec, "x:Bt", &UALPHA_CORRECTION, &["A", "Bt"])?;
    Ok(exec)
}

/// `U(alpha) = exp(-i alpha Z (x) Z)` from one use of a CNOT onto Bob's
/// ancilla, a local `U(alpha)` at Bob and one bit back to Alice.
pub fn ualpha_from_cnot(alpha: f64, inputs: &[PureState]) -> Result<ProtocolReport> {
    if !(0.0..=FRAC_PI_4).contains(&alpha) {
        return Err(Error::Input(format!("alpha = {alpha} outside [0, pi/4]")));
    }
    run_and_verify("ualpha_from_cnot", &format!("ualpha({alpha})"), &ualpha(alpha), &["A", "B"], inputs, |i, m| {
        ualpha_program(alpha, i, m)
    })
}

/// Teleports `b` to Alice through `(e1b, e1a)`, applies `target` on
/// `(a, e1a)` locally, teleports back through `(e2a, e2b)`. Output on `(a, e2b)`.
fn two_ebit_steps(
    exec: &mut Execution,
    target: &Gate,
    a: &str,
    b: &str,
    e1: (&str, &str),
    e2: (&str, &str),
) -> Result<()> {
    teleport(exec, b, (e1.1, e1.0))?;
    exec.apply(target.matrix(), &[a, e1.0])?;
    teleport(exec, e1.0, e2)
}

fn two_ebit_program(target: &Gate, input: &PureState, mode: Mode) -> Result<Execution> {
    let phi = phi_pair();
    let reg = Register::new(input.clone(), &INPUT_LAYOUT)?
        .append(&phi, &[("e1a", Party::Alice), ("e1b", Party::Bob)])?
        .append(&phi, &[("e2a", Party::Alice), ("e2b", Party::Bob)])?;
    let mut exec = Execution::new(reg, mode);
    two_ebit_steps(&mut exec, target, "A", "B", ("e1a", "e1b"), ("e2a", "e2b"))?;
    Ok(exec)
}

/// Any two-qubit gate from two ebits and four bits, by teleporting Bob's
/// qubit to Alice and back.
pub fn simulate_via_two_ebits(target: &Gate, inputs: &[PureState]) -> Result<ProtocolReport> {
    if target.d() != 2 {
        return Err(Error::Input("two-ebit simulation needs a two-qubit target".into()));
    }
    run_and_verify("simulate_via_two_ebits", "target", target, &["A", "e2b"], inputs, |i, m| {
        two_ebit_program(target, i, m)
    })
}

fn choi_postselected_program(g: &Gate, input: &PureState, mode: Mode) -> Result<Execution> {
    let mut exec = Execution::new(choi_preparation(Some(input))?, mode);
    exec.use_gate(g, &["A1", "B1"])?;
    exec.measure("bell:inA", &["inA", "A2"], &MeasurementBasis::bell())?;
    exec.measure("bell:inB", &["inB", "B2"], &MeasurementBasis::bell())?;
    exec.postselect(|b| b.outcome("bell:inA") == Some(0) && b.outcome("bell:inB") == Some(0));
    Ok(exec)
}

/// Implements `g` from its state `|Psi_g>` (prepared with the single use of
/// `g`) by Bell-measuring each input half with the matching pair half and
/// keeping the `Phi_0 Phi_0` outcome, which has probability 1/16.
pub fn implement_from_choi_postselected(g: &Gate, inputs: &[PureState]) -> Result<ProtocolReport> {
    if g.d() != 2 {
        return Err(Error::Input("protocols are implemented for two-qubit gates".into()));
    }
    run_and_verify("implement_from_choi_postselected", "gate", g, &["A1", "B1"], inputs, |i, m| {
        choi_postselected_program(g, i, m)
    })
}

/// Everything about a conversion that depends only on the gate.
#[derive(Debug, Clone)]
pub struct ConversionPlan {
    pub target: ConversionTarget,
    pub source_rank: usize,
    /// Filter rounds in the Schmidt basis of `A1 A2`.
    schmidt_cascade: FilterCascade,
    /// The same rounds in the computational basis.
    cascade: FilterCascade,
    /// Columns: Schmidt vectors of `A1 A2`.
    left: ComplexMatrix,
    /// Rows: Schmidt vectors of `B1 B2`.
    right: ComplexMatrix,
}

impl ConversionPlan {
    pub fn new(g: &Gate, target: ConversionTarget) -> Result<Self> {
        Self::with_tol(g, target, DEFAULT_RANK_TOL)
    }

    pub fn with_tol(g: &Gate, target: ConversionTarget, rank_tol: f64) -> Result<Self> {
        if g.d() != 2 {
            return Err(Error::Input("conversion is implemented for two-qubit gates".into()));
        }
        let source_rank = classify(g, rank_tol)?.schmidt_number;
        if source_rank < target.rank() {
            return Err(Error::Infeasible { source_rank, target_rank: target.rank() });
        }
        let choi = choi_state_with_tol(g, rank_tol)?;
        let dec = schmidt_decompose(&choi.state, &CHOI_CUT)?;
        let schmidt_cascade = match target {
            ConversionTarget::Cnot => build_cascade_to_rank2(&dec.spectrum)?,
            ConversionTarget::Swap => FilterCascade::single(build_filter_to_rank4(&dec.spectrum)?),
        };
        let cascade = schmidt_cascade.conjugated(&dec.left);
        Ok(Self { target, source_rank, schmidt_cascade, cascade, left: dec.left, right: dec.right })
    }

    /// Bits telling Bob the filter outcome (worst case over the rounds).
    fn filter_bits(&self) -> usize {
        self.cascade.rounds().iter().map(|r| (r.operators().len() as f64).log2().ceil() as usize).sum()
    }

    /// Schmidt directions kept by the success outcome a branch went through.
    fn surviving_directions(&self, b: &Branch) -> Result<Vec<usize>> {
        let (label, op) = b
            .outcomes
            .iter()
            .rev()
            .find(|(l, _)| l.starts_with("filter."))
            .ok_or_else(|| Error::UnknownLabel("filter".into()))?;
        let round: usize = label["filter.".len()..].parse().map_err(|_| Error::UnknownLabel(label.clone()))?;
        let m = &self.schmidt_cascade.rounds()[round].operators()[*op].matrix;
        Ok((0..m.rows()).filter(|&k| m[(k, k)].norm() > 0.0).collect())
    }

    /// Local unitaries `(W_A, W_B)` mapping the uniform state on the given
    /// Schmidt directions onto the standard resource: `Phi(A1,B1)|00>` for
    /// CNOT, `Phi(A1,B1) Phi(A2,B2)` for SWAP.
    fn standardising_unitaries(&self, kept: &[usize]) -> Result<(ComplexMatrix, ComplexMatrix)> {
        let slots: &[usize] = match self.target {
            ConversionTarget::Cnot => &[0, 2],
            ConversionTarget::Swap => &[0, 1, 2, 3],
        };
        if kept.len() != slots.len() {
            return Err(Error::Numerical { context: "filter output rank", residual: kept.len() as f64 });
        }
        let mut perm = [usize::MAX; 4];
        for (&k, &s) in kept.iter().zip(slots) {
            perm[k] = s;
        }
        let mut free = (0..4).filter(|s| !slots.contains(s));
        for p in perm.iter_mut().filter(|p| **p == usize::MAX) {
            *p = free.next().expect("permutation completes");
        }
        let mut pi = ComplexMatrix::zeros(4, 4);
        for (k, &s) in perm.iter().enumerate() {
            pi[(s, k)] = ONE;
        }
        Ok((&pi * &self.left.adjoint(), &pi * &self.right.conj()))
    }

    fn run(&self, g: &Gate, input: &PureState, mode: Mode) -> Result<Execution> {
        let mut exec = Execution::new(choi_preparation(Some(input))?, mode);
        exec.use_gate(g, &["A1", "B1"])?;
        exec.filter_cascade("filter", &["A1", "A2"], &self.cascade)?;
        exec.send_bits(self.filter_bits());
        exec.for_each_active(|b| {
            let (wa, wb) = self.standardising_unitaries(&self.surviving_directions(b)?)?;
            b.register = b.register.apply(&wa, &["A1", "A2"])?.apply(&wb, &["B1", "B2"])?;
            Ok(())
        })?;
        match self.target {
            ConversionTarget::Cnot => cnot_via_ebit(&mut exec, "inA", "inB", ("A1", "B1"))?,
            ConversionTarget::Swap => {
                two_ebit_steps(&mut exec, &named_gate("swap")?, "inA", "inB", ("A1", "B1"), ("A2", "B2"))?
            }
        }
        Ok(exec)
    }

    fn outputs(&self) -> [&'static str; 2] {
        match self.target {
            ConversionTarget::Cnot => ["inA", "inB"],
            ConversionTarget::Swap => ["inA", "B2"],
        }
    }
}

/// Single use of `g` -> `|Psi_g>` -> optimal local filter onto the target's
/// resource state -> deterministic implementation of CNOT or SWAP on the input.
pub fn convert_gate(g: &Gate, target: ConversionTarget, inputs: &[PureState]) -> Result<ProtocolReport> {
    convert_gate_with_tol(g, target, inputs, DEFAULT_RANK_TOL)
}

pub fn convert_gate_with_tol(
    g: &Gate,
    target: ConversionTarget,
    inputs: &[PureState],
    rank_tol: f64,
) -> Result<ProtocolReport> {
    let plan = ConversionPlan::with_tol(g, target, rank_tol)?;
    run_and_verify("convert_gate", target.name(), &target.gate(), &plan.outputs(), inputs, |i, m| plan.run(g, i, m))
}

/// `n` sampled runs of [`convert_gate`] on one input.
pub fn convert_gate_sampled(
    g: &Gate,
    target: ConversionTarget,
    input: &PureState,
    seed: u64,
    n: usize,
) -> Result<FrequencyTable> {
    convert_gate_sampled_with_tol(g, target, input, seed, n, DEFAULT_RANK_TOL)
}

pub fn convert_gate_sampled_with_tol(
    g: &Gate,
    target: ConversionTarget,
    input: &PureState,
    seed: u64,
    n: usize,
    rank_tol: f64,
) -> Result<FrequencyTable> {
    check_input(input)?;
    let plan = ConversionPlan::with_tol(g, target, rank_tol)?;
    sample_run(|mode| plan.run(g, input, mode), seed, n)
}

/// Runs `protocol` once per input and returns the largest difference between
/// the success probabilities.
pub fn input_independence_check(
    protocol: impl Fn(&PureState) -> Result<ProtocolReport>,
    inputs: &[PureState],
) -> Result<f64> {
    if inputs.len() < 2 {
        return Err(Error::Input("input independence needs at least two inputs".into()));
    }
    let p = inputs.iter().map(|i| Ok(protocol(i)?.success_probability_exact)).collect::<Result<Vec<f64>>>()?;
    Ok(spread(&p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{gate_from_canonical, haar_random_gate, interaction_coefficients, CanonicalForm};
    use crate::linalg::tensor;
    use std::f64::consts::PI;

    fn basis2(a: usize, b: usize) -> PureState {
        PureState::basis(vec![2, 2], &[a, b]).unwrap()
    }

    fn assert_deterministic(r: &ProtocolReport, bits: usize) {
        assert!(r.verified(), "{r:?}");
        assert!(r.min_fidelity() >= 1.0 - 1e-10);
        assert!((r.success_probability_exact - 1.0).abs() < 1e-12);
        assert!((r.total_probability - 1.0).abs() < 1e-10);
        assert_eq!(r.classical_bits_sent, bits);
        assert!(r.rank_monotone);
        assert!(r.input_deviation() < 1e-12);
    }

    #[test]
    fn make_choi_matches_gate_state() {
        for name in ["identity", "cnot", "swap", "iswap"] {
            let g = named_gate(name).unwrap();
            let reg = make_choi(&g).unwrap();
            let reference = crate::choi::choi_state(&g).unwrap().state;
            assert!(reg.state().amplitudes().iter().zip(reference.amplitudes()).all(|(a, b)| (a - b).norm() < 1e-12));
        }
        // SWAP state is Phi(A1,B2) Phi(A2,B1).
        let reg = make_choi(&named_gate("swap").unwrap()).unwrap();
        let f = reg.reduced_fidelity(&["A1", "B2", "A2", "B1"], &bell_state(0).tensor(&bell_state(0))).unwrap();
        assert!((f - 1.0).abs() < 1e-12);
        let cnot = make_choi(&named_gate("cnot").unwrap()).unwrap();
        assert_eq!(cnot.party_schmidt_number().unwrap(), 2);
    }

    #[test]
    fn teleportation_table() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut qubits = vec![PureState::basis(vec![2], &[0]).unwrap()];
        qubits.extend((0..5).map(|_| PureState::new(vec![2], haar_unitary(&mut rng, 2).col(0)).unwrap()));
        for input in qubits {
            let reg = Register::new(input.clone(), &[("s", Party::Bob)])
                .unwrap()
                .append(&phi_pair(), &[("n", Party::Bob), ("f", Party::Alice)])
                .unwrap();
            let mut exec = Execution::enumerate(reg);
            teleport(&mut exec, "s", ("n", "f")).unwrap();
            assert_eq!(exec.branches().len(), 4);
            for b in exec.branches() {
                assert!((b.probability - 0.25).abs() < 1e-12);
                assert!((b.register.reduced_fidelity(&["f"], &input).unwrap() - 1.0).abs() < 1e-10);
            }
            assert_eq!(exec.classical_bits(), 2);
        }
    }

    #[test]
    fn teleportation_swaps_entanglement() {
        let reg = Register::new(bell_state(0), &[("r", Party::Bob), ("s", Party::Bob)])
            .unwrap()
            .append(&phi_pair(), &[("n", Party::Bob), ("f", Party::Alice)])
            .unwrap();
        let mut exec = Execution::enumerate(reg);
        teleport(&mut exec, "s", ("n", "f")).unwrap();
        for b in exec.branches() {
            assert!((b.register.reduced_fidelity(&["r", "f"], &bell_state(0)).unwrap() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn teleportation_rejects_bad_resource() {
        let reg = Register::new(basis2(0, 0), &[("s", Party::Bob), ("n", Party::Bob)])
            .unwrap()
            .append(&PureState::basis(vec![2], &[0]).unwrap(), &[("f", Party::Alice)])
            .unwrap();
        let mut exec = Execution::enumerate(reg);
        assert!(matches!(teleport(&mut exec, "s", ("n", "f")), Err(Error::Input(_))));
    }

    #[test]
    fn cnot_from_one_ebit_examples() {
        let r = cnot_from_one_ebit(&[basis2(1, 0)]).unwrap();
        assert_eq!(r.branches.len(), 4);
        assert_deterministic(&r, 2);

        let plus0 =
            PureState::new(vec![2, 2], vec![C64::from(FRAC_1_SQRT_2), ZERO, C64::from(FRAC_1_SQRT_2), ZERO]).unwrap();
        assert_deterministic(&cnot_from_one_ebit(&[plus0]).unwrap(), 2);
        assert_deterministic(&cnot_from_one_ebit(&standard_test_inputs(2, 100)).unwrap(), 2);
    }

    #[test]
    fn ualpha_examples() {
        let r = ualpha_from_cnot(0.0, &standard_test_inputs(3, 4)).unwrap();
        assert_eq!(r.branches.len(), 2);
        assert!(r.branches.iter().all(|b| (b.probability - 0.5).abs() < 1e-12));
        assert_deterministic(&r, 1);
        assert_eq!(r.gate_uses, 1);

        let r = ualpha_from_cnot(FRAC_PI_4, &[basis2(1, 1)]).unwrap();
        assert_deterministic(&r, 1);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let alpha = rand::Rng::random_range(&mut rng, 0.0..=FRAC_PI_4);
            assert_deterministic(&ualpha_from_cnot(alpha, &random_inputs(rand::Rng::random(&mut rng), 2)).unwrap(), 1);
        }
        assert!(ualpha_from_cnot(1.0, &[basis2(0, 0)]).is_err());
        assert!(ualpha_from_cnot(-0.1, &[basis2(0, 0)]).is_err());
    }

    #[test]
    fn ualpha_output_is_exact_on_basis_state() {
        // U(pi/4)|11> = e^{-i pi/4}|11>, checked against the raw amplitudes.
        let exec = ualpha_program(FRAC_PI_4, &basis2(1, 1), Mode::Enumerate).unwrap();
        for b in exec.branches() {
            let expected = basis2(1, 1);
            assert!((b.register.reduced_fidelity(&["A", "B"], &expected).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn two_ebit_simulation() {
        let inputs = standard_test_inputs(5, 3);
        for g in [named_gate("swap").unwrap(), named_gate("cnot").unwrap(), haar_random_gate(6, 2).unwrap()] {
            let r = simulate_via_two_ebits(&g, &inputs).unwrap();
            assert_eq!(r.branches.len(), 16);
            assert_deterministic(&r, 4);
        }
    }

    #[test]
    fn choi_postselection() {
        let inputs = standard_test_inputs(7, 4);
        for g in [named_gate("identity").unwrap(), haar_random_gate(8, 2).unwrap()] {
            let r = implement_from_choi_postselected(&g, &inputs).unwrap();
            assert!((r.success_probability_exact - 1.0 / 16.0).abs() < 1e-12);
            assert!(r.verified() && r.min_fidelity() >= 1.0 - 1e-10);
            assert_eq!(r.branches.len(), 16);
            assert!(r.input_deviation() < 1e-12);
        }
    }

    #[test]
    fn choi_postselection_failure_branches_are_pauli_twisted() {
        let g = named_gate("cnot").unwrap();
        let input = random_inputs(9, 1).remove(0);
        let exec = choi_postselected_program(&g, &input, Mode::Enumerate).unwrap();
        assert_eq!(exec.branches().len(), 16);
        for b in exec.branches() {
            let (i, j) = (b.outcome("bell:inA").unwrap(), b.outcome("bell:inB").unwrap());
            let twisted = &g.matrix().clone() * &tensor(&pauli(i), &pauli(j));
            let expected = PureState::new(vec![2, 2], twisted.mul_vec(input.amplitudes())).unwrap();
            assert!((b.register.reduced_fidelity(&["A1", "B1"], &expected).unwrap() - 1.0).abs() < 1e-10);
        }
    }

    fn canonical(mu: [f64; 3]) -> Gate {
        gate_from_canonical(&CanonicalForm::from_mu(mu))
    }

    #[test]
    fn conversion_examples() {
        let inputs = standard_test_inputs(10, 2);
        let r = convert_gate(&canonical([PI / 6.0, 0.0, 0.0]), ConversionTarget::Cnot, &inputs).unwrap();
        assert!((r.success_probability_exact - 0.5).abs() < 1e-9);
        assert!(r.verified() && r.rank_monotone);
        assert_eq!(r.gate_uses, 1);

        let r = convert_gate(&named_gate("swap").unwrap(), ConversionTarget::Cnot, &inputs).unwrap();
        assert!((r.success_probability_exact - 1.0).abs() < 1e-9);
        assert!(r.verified());

        assert!(matches!(
            convert_gate(&named_gate("cnot").unwrap(), ConversionTarget::Swap, &inputs),
            Err(Error::Infeasible { source_rank: 2, target_rank: 4 })
        ));
        assert!(matches!(
            convert_gate(&named_gate("identity").unwrap(), ConversionTarget::Cnot, &inputs),
            Err(Error::Infeasible { source_rank: 1, target_rank: 2 })
        ));
    }

    #[test]
    fn conversion_to_swap_hits_a3_bound() {
        let inputs = standard_test_inputs(11, 1);
        let mu = [FRAC_PI_4, 0.5, 0.2];
        let g = canonical(mu).dress((&pauli(1), &pauli(2)), (&pauli(3), &ComplexMatrix::identity(2)));
        let r = convert_gate(&g, ConversionTarget::Swap, &inputs).unwrap();
        let expected = 4.0 * interaction_coefficients(mu).a[3].norm_sqr();
        assert!((r.success_probability_exact - expected).abs() < 1e-9);
        assert!(r.verified() && r.rank_monotone);
    }

    #[test]
    fn deterministic_class3_to_cnot() {
        // Uniform-ish spectrum: b0^2 < 1/2, so every branch succeeds.
        let g = canonical([FRAC_PI_4, 0.6, 0.4]);
        let spec = crate::choi::choi_state(&g).unwrap().spectrum;
        assert!(spec.amplitudes()[0].powi(2) < 0.5);
        let r = convert_gate(&g, ConversionTarget::Cnot, &standard_test_inputs(12, 2)).unwrap();
        assert!((r.success_probability_exact - 1.0).abs() < 1e-9);
        assert!(r.verified());
    }

    #[test]
    fn random_conversions_match_quotes() {
        for seed in 0..10 {
            let g = haar_random_gate(100 + seed, 2).unwrap();
            let inputs = random_inputs(seed, 2);
            for target in [ConversionTarget::Cnot, ConversionTarget::Swap] {
                let quote = crate::convert::quote(&g, target).unwrap();
                let r = convert_gate(&g, target, &inputs).unwrap();
                assert!((r.success_probability_exact - quote.probability).abs() < 1e-9, "{seed} {target}");
                assert!(r.verified() && r.rank_monotone);
                assert!((r.total_probability - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn independence_of_input() {
        let g = canonical([PI / 6.0, 0.0, 0.0]);
        let inputs = random_inputs(13, 10);
        let dev =
            input_independence_check(|i| convert_gate(&g, ConversionTarget::Cnot, std::slice::from_ref(i)), &inputs)
                .unwrap();
        assert!(dev < 1e-9);
        // Deterministic: every p_i is 1 up to summation round-off.
        let dev = input_independence_check(|i| cnot_from_one_ebit(std::slice::from_ref(i)), &inputs).unwrap();
        assert!(dev < 1e-14);
        assert!(input_independence_check(|i| cnot_from_one_ebit(std::slice::from_ref(i)), &inputs[..1]).is_err());
    }

    #[test]
    fn sampled_conversion() {
        let g = canonical([PI / 6.0, 0.0, 0.0]);
        let input = random_inputs(14, 1).remove(0);
        let n = 20_000;
        let t = convert_gate_sampled(&g, ConversionTarget::Cnot, &input, 7, n).unwrap();
        let sigma = (0.25 / n as f64).sqrt();
        assert!((t.success_frequency() - 0.5).abs() < 4.0 * sigma);
        assert_eq!(t, convert_gate_sampled(&g, ConversionTarget::Cnot, &input, 7, n).unwrap());
    }

    #[test]
    fn inputs_must_be_two_qubits() {
        assert!(cnot_from_one_ebit(&[PureState::basis(vec![2], &[0]).unwrap()]).is_err());
        assert!(cnot_from_one_ebit(&[]).is_err());
    }
}
