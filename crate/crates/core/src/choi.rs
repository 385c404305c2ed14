//! Pure states on a few subsystems, the gate-state map and Schmidt analysis.
//!
//! Subsystem 0 is the most significant digit of the amplitude index. The state
//! associated with a gate on two `d`-level systems lives on `A1, A2, B1, B2`
//! (indices 0..4), with the gate acting on `A1` and `B1`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gates::Gate;
use crate::linalg::{singular_values, svd, tensor_vec, ComplexMatrix, C64, ONE, ZERO};
use crate::DEFAULT_RANK_TOL;

/// Norm tolerance accepted by [`PureState::new`].
pub const STATE_NORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    dims: Vec<usize>,
    amplitudes: Vec<C64>,
}

impl PureState {
    pub fn new(dims: Vec<usize>, amplitudes: Vec<C64>) -> Result<Self> {
        let state = Self::unchecked(dims, amplitudes)?;
        let norm = state.norm();
        if (norm - 1.0).abs() > STATE_NORM_TOL {
            return Err(Error::Input(format!("state norm {norm} differs from 1")));
        }
        Ok(state)
    }

    /// Normalises the given amplitudes; rejects the zero vector.
    pub fn from_unnormalized(dims: Vec<usize>, amplitudes: Vec<C64>) -> Result<Self> {
        let mut state = Self::unchecked(dims, amplitudes)?;
        let norm = state.norm();
        if !norm.is_finite() || norm <= 0.0 {
            return Err(Error::Input("cannot normalise a zero or non-finite vector".into()));
        }
        state.amplitudes.iter_mut().for_each(|z| *z /= norm);
        Ok(state)
    }

    fn unchecked(dims: Vec<usize>, amplitudes: Vec<C64>) -> Result<Self> {
        if dims.is_empty() || dims.iter().any(|&d| d < 1) {
            return Err(Error::Input(format!("bad subsystem dimensions {dims:?}")));
        }
        let total: usize = dims.iter().product();
        if total != amplitudes.len() {
            return Err(Error::DimensionMismatch(format!("{} amplitudes for dimensions {dims:?}", amplitudes.len())));
        }
        Ok(Self { dims, amplitudes })
    }

    /// Computational basis state `|digits>`.
    pub fn basis(dims: Vec<usize>, digits: &[usize]) -> Result<Self> {
        if digits.len() != dims.len() || digits.iter().zip(&dims).any(|(x, d)| x >= d) {
            return Err(Error::Input(format!("basis digits {digits:?} invalid for {dims:?}")));
        }
        let mut amps = vec![ZERO; dims.iter().product()];
        let idx = digits.iter().zip(&dims).fold(0, |acc, (x, d)| acc * d + x);
        amps[idx] = ONE;
        Ok(Self { dims, amplitudes: amps })
    }

    /// Single qubit `a|0> + b|1>` (normalised).
    pub fn qubit(a: C64, b: C64) -> Result<Self> {
        Self::from_unnormalized(vec![2], vec![a, b])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn num_subsystems(&self) -> usize {
        self.dims.len()
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", self.dims, other.dims)));
        }
        Ok(self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum())
    }

    /// `self (x) other`, with `other`'s subsystems appended.
    pub fn tensor(&self, other: &PureState) -> PureState {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        PureState { dims, amplitudes: tensor_vec(&self.amplitudes, &other.amplitudes) }
    }

    /// Applies `op` to the listed subsystems (in the listed order) without renormalising.
    pub fn apply_operator(&self, op: &ComplexMatrix, targets: &[usize]) -> Result<PureState> {
        let amplitudes = apply_on_subsystems(&self.dims, &self.amplitudes, op, targets)?;
        Ok(PureState { dims: self.dims.clone(), amplitudes })
    }

    /// Amplitudes with subsystems reordered to `order` (a permutation).
    pub(crate) fn permuted_amplitudes(&self, order: &[usize]) -> Vec<C64> {
        let strides = strides(&self.dims);
        let mut out = vec![ZERO; self.amplitudes.len()];
        for (idx, &amp) in self.amplitudes.iter().enumerate() {
            let j = order.iter().fold(0, |acc, &k| acc * self.dims[k] + (idx / strides[k]) % self.dims[k]);
            out[j] = amp;
        }
        out
    }

    /// Amplitudes arranged as a matrix with rows indexed by the subsystems in
    /// `side_a` (in that order) and columns by the remaining subsystems in
    /// ascending order.
    pub fn bipartite_matrix(&self, side_a: &[usize]) -> Result<ComplexMatrix> {
        validate_cut(self.dims.len(), side_a)?;
        let side_b: Vec<usize> = (0..self.dims.len()).filter(|i| !side_a.contains(i)).collect();
        let rows: usize = side_a.iter().map(|&i| self.dims[i]).product();
        let cols: usize = side_b.iter().map(|&i| self.dims[i]).product();
        let strides = strides(&self.dims);
        let mut m = ComplexMatrix::zeros(rows, cols);
        for (idx, &amp) in self.amplitudes.iter().enumerate() {
            let digit = |k: usize| (idx / strides[k]) % self.dims[k];
            let r = side_a.iter().fold(0, |acc, &k| acc * self.dims[k] + digit(k));
            let c = side_b.iter().fold(0, |acc, &k| acc * self.dims[k] + digit(k));
            m[(r, c)] = amp;
        }
        Ok(m)
    }
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

fn validate_cut(n: usize, side_a: &[usize]) -> Result<()> {
    let mut seen = vec![false; n];
    for &i in side_a {
        if i >= n || std::mem::replace(&mut seen[i], true) {
            return Err(Error::Input(format!("invalid cut {side_a:?} for {n} subsystems")));
        }
    }
    if side_a.is_empty() || side_a.len() == n {
        return Err(Error::Input("a cut needs two non-empty sides".into()));
    }
    Ok(())
}

/// Core kernel: `(op on targets) (x) identity elsewhere` applied to `amps`.
pub(crate) fn apply_on_subsystems(
    dims: &[usize],
    amps: &[C64],
    op: &ComplexMatrix,
    targets: &[usize],
) -> Result<Vec<C64>> {
    let n = dims.len();
    let mut seen = vec![false; n];
    for &t in targets {
        if t >= n || std::mem::replace(&mut seen[t], true) {
            return Err(Error::Input(format!("invalid target list {targets:?}")));
        }
    }
    let sub: usize = targets.iter().map(|&t| dims[t]).product();
    if op.rows() != sub || op.cols() != sub {
        return Err(Error::DimensionMismatch(format!(
            "operator {}x{} on targets of total dimension {sub}",
            op.rows(),
            op.cols()
        )));
    }
    let st = strides(dims);
    // Offsets of each target-digit combination relative to a base index.
    let offsets: Vec<usize> = (0..sub)
        .map(|mut j| {
            let mut off = 0;
            for &t in targets.iter().rev() {
                off += (j % dims[t]) * st[t];
                j /= dims[t];
            }
            off
        })
        .collect();
    let mut out = vec![ZERO; amps.len()];
    let mut local = vec![ZERO; sub];
    for base in 0..amps.len() {
        if targets.iter().any(|&t| !(base / st[t]).is_multiple_of(dims[t])) {
            continue;
        }
        for (l, &o) in local.iter_mut().zip(&offsets) {
            *l = amps[base + o];
        }
        for (r, &o) in offsets.iter().enumerate() {
            out[base + o] = (0..sub).map(|c| op[(r, c)] * local[c]).sum();
        }
    }
    Ok(out)
}

/// Descending non-negative Schmidt amplitudes with unit square sum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchmidtSpectrum {
    amplitudes: Vec<f64>,
}

impl SchmidtSpectrum {
    /// Sorts the amplitudes and checks `sum b_i^2 = 1` within 1e-10.
    pub fn new(mut amplitudes: Vec<f64>) -> Result<Self> {
        if amplitudes.is_empty() || amplitudes.iter().any(|&b| !b.is_finite() || b < 0.0) {
            return Err(Error::Input(format!("bad Schmidt amplitudes {amplitudes:?}")));
        }
        amplitudes.sort_by(|a, b| b.total_cmp(a));
        let total: f64 = amplitudes.iter().map(|b| b * b).sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::Input(format!("Schmidt amplitudes square-sum to {total}")));
        }
        Ok(Self { amplitudes })
    }

    /// `rank` amplitudes of `1/sqrt(rank)` padded with zeros to `len`.
    pub fn uniform(rank: usize, len: usize) -> Self {
        assert!(rank >= 1 && rank <= len);
        let mut amplitudes = vec![0.0; len];
        amplitudes[..rank].fill(1.0 / (rank as f64).sqrt());
        Self { amplitudes }
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    /// Squared amplitudes (the Schmidt probabilities).
    pub fn weights(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|b| b * b).collect()
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn schmidt_number(&self, rank_tol: f64) -> usize {
        schmidt_number(self, rank_tol)
    }
}

/// Number of amplitudes strictly above `rank_tol` times the largest one.
pub fn schmidt_number(spec: &SchmidtSpectrum, rank_tol: f64) -> usize {
    let cutoff = rank_tol * spec.amplitudes[0];
    spec.amplitudes.iter().filter(|&&b| b > cutoff).count()
}

/// Schmidt form `sum_k b_k |e_k>|f_k>` across a cut.
#[derive(Debug, Clone)]
pub struct SchmidtDecomposition {
    pub spectrum: SchmidtSpectrum,
    /// Subsystems on the A side, in the order used for `left`.
    pub cut: Vec<usize>,
    /// Unitary whose column `k` is `|e_k>` (A side, completed to a basis).
    pub left: ComplexMatrix,
    /// Unitary whose row `k` holds the amplitudes of `|f_k>` (B side).
    pub right: ComplexMatrix,
}

pub fn schmidt_decompose(s: &PureState, cut: &[usize]) -> Result<SchmidtDecomposition> {
    let m = s.bipartite_matrix(cut)?;
    let res = svd(&m)?;
    let total: f64 = res.singular_values.iter().map(|x| x * x).sum();
    let amps = res.singular_values.iter().map(|x| x / total.sqrt()).collect();
    Ok(SchmidtDecomposition {
        spectrum: SchmidtSpectrum::new(amps)?,
        cut: cut.to_vec(),
        left: res.left,
        right: res.right_adjoint,
    })
}

/// Schmidt coefficients across `cut` without the local bases.
pub fn schmidt_spectrum(s: &PureState, cut: &[usize]) -> Result<SchmidtSpectrum> {
    let sv = singular_values(&s.bipartite_matrix(cut)?)?;
    let total: f64 = sv.iter().map(|x| x * x).sum::<f64>().sqrt();
    SchmidtSpectrum::new(sv.iter().map(|x| x / total).collect())
}

/// `(1/sqrt d) sum_k |k>|k>` on two `d`-level systems.
pub fn maximally_entangled(d: usize) -> PureState {
    assert!(d >= 2, "maximally entangled state needs d >= 2");
    let amp = C64::from(1.0 / (d as f64).sqrt());
    let mut amps = vec![ZERO; d * d];
    for k in 0..d {
        amps[k * d + k] = amp;
    }
    PureState { dims: vec![d, d], amplitudes: amps }
}

/// The gate's state on A1 A2 B1 B2 together with its Schmidt data across A|B.
#[derive(Debug, Clone)]
pub struct ChoiState {
    pub state: PureState,
    pub spectrum: SchmidtSpectrum,
    pub schmidt_number: usize,
}

pub const CHOI_CUT: [usize; 2] = [0, 1];

pub fn choi_state(g: &Gate) -> Result<ChoiState> {
    choi_state_with_tol(g, DEFAULT_RANK_TOL)
}

pub fn choi_state_with_tol(g: &Gate, rank_tol: f64) -> Result<ChoiState> {
    let phi = maximally_entangled(g.d());
    // Order A1 A2 B1 B2; the gate acts on A1 (0) and B1 (2).
    let state = phi.tensor(&phi).apply_operator(g.matrix(), &[0, 2])?;
    let spectrum = schmidt_spectrum(&state, &CHOI_CUT)?;
    let n = schmidt_number(&spectrum, rank_tol);
    Ok(ChoiState { state, spectrum, schmidt_number: n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{gate_from_canonical, interaction_coefficients, named_gate, CanonicalForm};
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    #[test]
    fn maximally_entangled_examples() {
        let phi = maximally_entangled(2);
        let expected = [FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2];
        for (z, e) in phi.amplitudes().iter().zip(expected) {
            assert!((z - e).norm() < 1e-15);
        }
        let phi3 = maximally_entangled(3);
        let a = 1.0 / 3f64.sqrt();
        for k in 0..3 {
            assert!((phi3.amplitudes()[4 * k].re - a).abs() < 1e-15);
        }
        let spec = schmidt_decompose(&phi3, &[0]).unwrap().spectrum;
        for b in spec.amplitudes() {
            assert!((b - a).abs() < 1e-14);
        }
    }

    #[test]
    fn textbook_choi_spectra() {
        let c = choi_state(&named_gate("identity").unwrap()).unwrap();
        assert_eq!(c.schmidt_number, 1);
        assert!((c.spectrum.amplitudes()[0] - 1.0).abs() < 1e-14);

        let c = choi_state(&named_gate("cnot").unwrap()).unwrap();
        assert_eq!(c.schmidt_number, 2);
        assert!((c.spectrum.amplitudes()[0] - FRAC_1_SQRT_2).abs() < 1e-14);
        assert!((c.spectrum.amplitudes()[1] - FRAC_1_SQRT_2).abs() < 1e-14);

        let c = choi_state(&named_gate("swap").unwrap()).unwrap();
        assert_eq!(c.schmidt_number, 4);
        for b in c.spectrum.amplitudes() {
            assert!((b - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn cnot_choi_matches_brute_force_svd() {
        // Build |Psi_CNOT> by explicit index loops and compare spectra.
        let mut amps = vec![ZERO; 16];
        for a in 0..2 {
            for b in 0..2 {
                // CNOT|a b> = |a, a xor b>; amplitude 1/2 on |a1 a2 b1 b2> = |a, a, a^b, b>.
                let idx = (a << 3) | (a << 2) | ((a ^ b) << 1) | b;
                amps[idx] = C64::from(0.5);
            }
        }
        let brute = PureState::new(vec![2; 4], amps).unwrap();
        let c = choi_state(&named_gate("cnot").unwrap()).unwrap();
        assert!((brute.inner(&c.state).unwrap().norm() - 1.0).abs() < 1e-14);
        let s = svd(&brute.bipartite_matrix(&[0, 1]).unwrap()).unwrap();
        let expected = [FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0, 0.0];
        for (x, y) in s.singular_values.iter().zip(expected) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn spectrum_matches_interaction_coefficients() {
        let mu = [PI / 8.0, PI / 16.0, 0.0];
        let c = choi_state(&gate_from_canonical(&CanonicalForm::from_mu(mu))).unwrap();
        let expected = interaction_coefficients(mu).sorted_moduli();
        for (x, y) in c.spectrum.amplitudes().iter().zip(expected) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn schmidt_number_examples() {
        assert_eq!(schmidt_number(&SchmidtSpectrum::new(vec![1.0]).unwrap(), DEFAULT_RANK_TOL), 1);
        let r = FRAC_1_SQRT_2;
        assert_eq!(schmidt_number(&SchmidtSpectrum::new(vec![r, r]).unwrap(), DEFAULT_RANK_TOL), 2);
        let x = (1.0f64 - 0.81).sqrt();
        let spec = SchmidtSpectrum::new(vec![0.9, x, 1e-12]).unwrap();
        assert_eq!(schmidt_number(&spec, DEFAULT_RANK_TOL), 2);
    }

    #[test]
    fn product_and_bell_decompositions() {
        let prod = PureState::basis(vec![2, 2], &[1, 0]).unwrap();
        assert_eq!(schmidt_decompose(&prod, &[0]).unwrap().spectrum.schmidt_number(DEFAULT_RANK_TOL), 1);
        let spec = schmidt_decompose(&maximally_entangled(2), &[1]).unwrap().spectrum;
        assert!((spec.amplitudes()[1] - FRAC_1_SQRT_2).abs() < 1e-14);
    }

    #[test]
    fn decomposition_bases_reconstruct_state() {
        let g = crate::gates::haar_random_gate(4, 2).unwrap();
        let c = choi_state(&g).unwrap();
        let dec = schmidt_decompose(&c.state, &[0, 1]).unwrap();
        let mut rebuilt = ComplexMatrix::zeros(4, 4);
        for (k, &b) in dec.spectrum.amplitudes().iter().enumerate() {
            for r in 0..4 {
                for col in 0..4 {
                    rebuilt[(r, col)] += dec.left[(r, k)] * dec.right[(k, col)] * b;
                }
            }
        }
        assert!(rebuilt.frobenius_distance(&c.state.bipartite_matrix(&[0, 1]).unwrap()) < 1e-12);
    }

    #[test]
    fn scattered_cut_ordering() {
        // Pair on subsystems 0 and 2, |0> on 1.
        let s = maximally_entangled(2).tensor(&PureState::basis(vec![2], &[0]).unwrap());
        let s = s.apply_operator(&crate::gates::named_gate("swap").unwrap().matrix().clone(), &[1, 2]).unwrap();
        assert_eq!(schmidt_decompose(&s, &[2, 0]).unwrap().spectrum.schmidt_number(1e-7), 1);
        assert_eq!(schmidt_decompose(&s, &[0, 1]).unwrap().spectrum.schmidt_number(1e-7), 2);
    }

    #[test]
    fn invalid_inputs() {
        assert!(PureState::new(vec![2], vec![ONE, ONE]).is_err());
        assert!(PureState::from_unnormalized(vec![2], vec![ZERO, ZERO]).is_err());
        assert!(schmidt_decompose(&maximally_entangled(2), &[0, 1]).is_err());
        assert!(schmidt_decompose(&maximally_entangled(2), &[3]).is_err());
        assert!(SchmidtSpectrum::new(vec![0.5, 0.5]).is_err());
    }
}
