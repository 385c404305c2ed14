//! Gate representation, the named-gate library and the two-qubit canonical form
//! `U = e^{i phi} (V (x) W) exp(-i sum_k mu_k s_k (x) s_k) (V~ (x) W~)` with
//! `pi/4 >= mu_1 >= mu_2 >= |mu_3| >= 0`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    exp_interaction, interaction_amplitudes, qr_gram_schmidt, symmetric_eigen, tensor, unitarity_residual,
    ComplexMatrix, C64, I, ONE, ZERO,
};

/// Unitarity tolerance for the [`Gate`] invariant.
pub const GATE_UNITARY_TOL: f64 = 1e-10;
/// Canonical parameters within this distance of 0 or pi/4 are snapped onto the boundary.
pub const MU_SNAP_TOL: f64 = 1e-9;
/// Reconstruction tolerance of the canonical form (Frobenius).
pub const CANONICAL_RECON_TOL: f64 = 1e-8;

/// A unitary acting on two `d`-level systems, first factor = party A.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    d: usize,
    matrix: ComplexMatrix,
}

impl Gate {
    pub fn new(d: usize, matrix: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(d, matrix, GATE_UNITARY_TOL)
    }

    /// Same as [`Gate::new`] with a caller-chosen unitarity tolerance.
    pub fn with_tolerance(d: usize, matrix: ComplexMatrix, tol: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::Input(format!("local dimension must be >= 2, got {d}")));
        }
        if matrix.rows() != d * d || matrix.cols() != d * d {
            return Err(Error::DimensionMismatch(format!(
                "gate on two {d}-level systems needs a {0}x{0} matrix, got {1}x{2}",
                d * d,
                matrix.rows(),
                matrix.cols()
            )));
        }
        let residual = unitarity_residual(&matrix);
        if residual > tol {
            return Err(Error::NotUnitary { residual, tolerance: tol });
        }
        Ok(Self { d, matrix })
    }

    pub(crate) fn from_trusted(d: usize, matrix: ComplexMatrix) -> Self {
        debug_assert!(unitarity_residual(&matrix) < 1e-8);
        Self { d, matrix }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn adjoint(&self) -> Gate {
        Gate { d: self.d, matrix: self.matrix.adjoint() }
    }

    /// `(a (x) b) * self * (c (x) e)` for single-system operators.
    pub fn dress(&self, before: (&ComplexMatrix, &ComplexMatrix), after: (&ComplexMatrix, &ComplexMatrix)) -> Gate {
        let pre = tensor(after.0, after.1);
        let post = tensor(before.0, before.1);
        Gate::from_trusted(self.d, &(&post * &self.matrix) * &pre)
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        self.matrix.mul_vec(v)
    }
}

/// Named two-qubit gates. CNOT uses the first (A) qubit as control.
pub fn named_gate(name: &str) -> Result<Gate> {
    let n = name.trim().to_ascii_lowercase();
    let h = C64::new(0.5, 0.5);
    let hc = C64::new(0.5, -0.5);
    let m = match n.as_str() {
        "identity" | "id" | "i" => ComplexMatrix::identity(4),
        "cnot" | "cx" => ComplexMatrix::from_real_rows([
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, 1.0, 0.0],
        ]),
        "cz" => ComplexMatrix::from_real_diag(&[1.0, 1.0, 1.0, -1.0]),
        "swap" => ComplexMatrix::from_real_rows([
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ]),
        "iswap" => ComplexMatrix::from_rows([
            [ONE, ZERO, ZERO, ZERO],
            [ZERO, ZERO, I, ZERO],
            [ZERO, I, ZERO, ZERO],
            [ZERO, ZERO, ZERO, ONE],
        ]),
        "sqrt_swap" | "sqrtswap" => ComplexMatrix::from_rows([
            [ONE, ZERO, ZERO, ZERO],
            [ZERO, h, hc, ZERO],
            [ZERO, hc, h, ZERO],
            [ZERO, ZERO, ZERO, ONE],
        ]),
        _ => {
            if let Some(alpha) = parse_ualpha(&n) {
                return Ok(ualpha(alpha?));
            }
            return Err(Error::Input(format!("unknown gate name `{name}`")));
        }
    };
    Ok(Gate::from_trusted(2, m))
}

/// Names accepted by [`named_gate`], with `ualpha(x)` standing for any angle.
pub const GATE_NAMES: [&str; 7] = ["identity", "cnot", "cz", "swap", "iswap", "sqrt_swap", "ualpha(x)"];

fn parse_ualpha(n: &str) -> Option<Result<f64>> {
    let rest = n.strip_prefix("ualpha")?;
    let inner = rest.strip_prefix('(').and_then(|r| r.strip_suffix(')')).or_else(|| rest.strip_prefix(':'))?;
    Some(
        inner
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|a| a.is_finite())
            .ok_or_else(|| Error::Input(format!("bad ualpha angle `{inner}`"))),
    )
}

/// `U(alpha) = exp(-i alpha Z (x) Z)`.
pub fn ualpha(alpha: f64) -> Gate {
    let m = C64::from_polar(1.0, -alpha);
    let p = C64::from_polar(1.0, alpha);
    Gate::from_trusted(2, ComplexMatrix::from_diag(&[m, p, p, m]))
}

/// The four amplitudes `a_k` of `exp(-iH)` in the `s_k (x) s_k` basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteractionCoefficients {
    pub a: [C64; 4],
}

impl InteractionCoefficients {
    pub fn moduli(&self) -> [f64; 4] {
        self.a.map(|z| z.norm())
    }

    pub fn sorted_moduli(&self) -> [f64; 4] {
        let mut m = self.moduli();
        m.sort_by(|x, y| y.total_cmp(x));
        m
    }
}

pub fn interaction_coefficients(mu: [f64; 3]) -> InteractionCoefficients {
    InteractionCoefficients { a: interaction_amplitudes(mu) }
}

/// Local factors, interaction parameters and phase of a two-qubit gate.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalForm {
    pub v: ComplexMatrix,
    pub w: ComplexMatrix,
    pub v_tilde: ComplexMatrix,
    pub w_tilde: ComplexMatrix,
    pub mu: [f64; 3],
    pub global_phase: f64,
}

impl CanonicalForm {
    /// Identity locals, zero phase.
    pub fn from_mu(mu: [f64; 3]) -> Self {
        let id = ComplexMatrix::identity(2);
        Self { v: id.clone(), w: id.clone(), v_tilde: id.clone(), w_tilde: id, mu, global_phase: 0.0 }
    }

    pub fn in_canonical_cell(&self) -> bool {
        let [m1, m2, m3] = self.mu;
        FRAC_PI_4 >= m1 && m1 >= m2 && m2 >= m3.abs()
    }

    pub fn coefficients(&self) -> InteractionCoefficients {
        interaction_coefficients(self.mu)
    }
}

pub fn gate_from_canonical(cf: &CanonicalForm) -> Gate {
    let left = tensor(&cf.v, &cf.w);
    let right = tensor(&cf.v_tilde, &cf.w_tilde);
    let m = (&(&left * &exp_interaction(cf.mu)) * &right).scale(C64::from_polar(1.0, cf.global_phase));
    Gate::from_trusted(2, m)
}

/// Magic basis: columns are Phi+, i Psi+, Psi-, i Phi-. Conjugation by it maps
/// SU(2) x SU(2) onto SO(4) and diagonalises every `s_k (x) s_k`.
fn magic_basis() -> ComplexMatrix {
    let r = C64::from(FRAC_1_SQRT_2);
    let ri = C64::new(0.0, FRAC_1_SQRT_2);
    ComplexMatrix::from_rows([[r, ZERO, ZERO, ri], [ZERO, ri, r, ZERO], [ZERO, ri, -r, ZERO], [r, ZERO, ZERO, -ri]])
}

/// Eigenvalues of (XX, YY, ZZ) on each magic basis vector.
const MAGIC_SIGNS: [[f64; 3]; 4] = [[1.0, -1.0, 1.0], [1.0, 1.0, -1.0], [-1.0, -1.0, -1.0], [-1.0, 1.0, 1.0]];

/// Diagonal of `exp(-i sum mu_k s_k s_k)` in the magic basis.
fn magic_spectrum(mu: [f64; 3]) -> [C64; 4] {
    MAGIC_SIGNS.map(|s| C64::from_polar(1.0, -(s[0] * mu[0] + s[1] * mu[1] + s[2] * mu[2])))
}

/// Kraus-Cirac canonical decomposition of a two-qubit gate.
pub fn canonical_decompose(g: &Gate) -> Result<CanonicalForm> {
    if g.d != 2 {
        return Err(Error::Input(format!("canonical form needs d = 2, got d = {}", g.d)));
    }
    let residual = unitarity_residual(&g.matrix);
    if residual > 1e-8 {
        return Err(Error::NotUnitary { residual, tolerance: 1e-8 });
    }
    let u = &g.matrix;
    // Move to SU(4); the removed phase is recovered from the final overlap.
    let det = u.determinant();
    let u_su = u.scale(C64::from_polar(1.0, -det.arg() / 4.0));

    let q = magic_basis();
    let qd = q.adjoint();
    let up = &(&qd * &u_su) * &q;
    let m = &up.transpose() * &up;

    let (p, delta) = simultaneous_real_diagonalisation(&m)?;

    // D = sqrt(Delta) with det D = +1 so O1 = U' P D^-1 lands in SO(4).
    let mut d: Vec<C64> = delta.iter().map(|z| C64::from_polar(1.0, z.arg() / 2.0)).collect();
    let prod: C64 = d.iter().product();
    if prod.re < 0.0 {
        d[0] = -d[0];
    }
    let d_inv = ComplexMatrix::from_diag(&d.iter().map(|z| z.conj()).collect::<Vec<_>>());
    let o1 = &(&up * &p) * &d_inv;
    let o2 = p.transpose();

    let mut phases: Vec<f64> = d.iter().map(|z| -z.arg()).collect();
    let total: f64 = phases.iter().sum();
    phases[3] -= (total / TAU).round() * TAU;
    let raw_mu = [(phases[0] + phases[1]) / 2.0, (phases[1] + phases[3]) / 2.0, (phases[0] + phases[3]) / 2.0];
    let mu = fold_into_chamber(raw_mu);

    let target = magic_spectrum(mu);
    let (perm, signs) = match_spectrum(&d, &target)?;

    // D = e^{-i alpha} P^T S D_N P  ==>  U' = e^{-i alpha} (O1 P^T S) D_N (P O2).
    let mut pmat = ComplexMatrix::zeros(4, 4);
    for (j, &pj) in perm.iter().enumerate() {
        pmat[(j, pj)] = ONE;
    }
    if permutation_parity(&perm) {
        for c in 0..4 {
            pmat[(0, c)] = -pmat[(0, c)];
        }
    }
    let smat = ComplexMatrix::from_real_diag(&signs);
    let k1 = &(&o1 * &pmat.transpose()) * &smat;
    let k2 = &pmat * &o2;

    let l1 = &(&q * &k1) * &qd;
    let l2 = &(&q * &k2) * &qd;
    let (v, w) = factor_tensor_product(&l1);
    let (v_tilde, w_tilde) = factor_tensor_product(&l2);

    let mut cf = CanonicalForm { v, w, v_tilde, w_tilde, mu, global_phase: 0.0 };
    let recon = gate_from_canonical(&cf);
    let overlap: C64 = recon.matrix.data().iter().zip(u.data()).map(|(r, x)| r.conj() * x).sum();
    cf.global_phase = wrap_phase(overlap.arg());
    let err = gate_from_canonical(&cf).matrix.frobenius_distance(u);
    if err > CANONICAL_RECON_TOL {
        return Err(Error::Numerical { context: "canonical decomposition reconstruction", residual: err });
    }
    Ok(cf)
}

/// Orthogonal `P` (det +1) and diagonal `Delta` with `M = P Delta P^T`, for a
/// complex symmetric unitary `M`. Its real and imaginary parts commute, so a
/// generic real combination of them shares their eigenvectors; a handful of
/// deterministic combinations are tried and the result is verified.
fn simultaneous_real_diagonalisation(m: &ComplexMatrix) -> Result<(ComplexMatrix, Vec<C64>)> {
    let re: Vec<f64> = m.data().iter().map(|z| z.re).collect();
    let im: Vec<f64> = m.data().iter().map(|z| z.im).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x6d_6167_6963);
    let mut best = f64::INFINITY;
    for attempt in 0..64 {
        let (a, b) = if attempt == 0 {
            (1.0, 0.377)
        } else {
            (rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
        };
        let combo: Vec<f64> = re.iter().zip(&im).map(|(x, y)| a * x + b * y).collect();
        let (_, vecs) = symmetric_eigen(&combo, 4)?;
        let mut p = ComplexMatrix::new(4, 4, vecs.iter().map(|&x| C64::from(x)).collect())?;
        if p.determinant().re < 0.0 {
            for r in 0..4 {
                p[(r, 0)] = -p[(r, 0)];
            }
        }
        let t = &(&p.transpose() * m) * &p;
        let mut off = 0.0f64;
        for r in 0..4 {
            for c in 0..4 {
                if r != c {
                    off = off.max(t[(r, c)].norm());
                }
            }
        }
        if off < 1e-11 {
            return Ok((p, t.diag()));
        }
        best = best.min(off);
    }
    Err(Error::Numerical { context: "simultaneous diagonalisation of the magic-basis product", residual: best })
}

/// Maps any interaction vector onto the canonical cell
/// `pi/4 >= mu_1 >= mu_2 >= |mu_3| >= 0` using the local symmetries:
/// shifts of a single entry by pi/2, permutations, and sign flips of pairs.
pub fn fold_into_chamber(mu: [f64; 3]) -> [f64; 3] {
    // Reduce each into (-pi/4, pi/4].
    let mut m = mu.map(|x| {
        let mut y = (x + FRAC_PI_4).rem_euclid(FRAC_PI_2) - FRAC_PI_4;
        if y <= -FRAC_PI_4 + MU_SNAP_TOL {
            y += FRAC_PI_2;
        }
        y
    });
    m.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
    match (m[0] < 0.0, m[1] < 0.0) {
        (true, true) => {
            m[0] = -m[0];
            m[1] = -m[1];
        }
        (true, false) => {
            m[0] = -m[0];
            m[2] = -m[2];
        }
        (false, true) => {
            m[1] = -m[1];
            m[2] = -m[2];
        }
        (false, false) => {}
    }
    for x in m.iter_mut() {
        if x.abs() < MU_SNAP_TOL {
            *x = 0.0;
        } else if (x.abs() - FRAC_PI_4).abs() < MU_SNAP_TOL {
            *x = FRAC_PI_4.copysign(*x);
        }
    }
    // On the mu_1 = pi/4 face, (pi/4, b, c) ~ (pi/4, b, -c).
    if m[0] == FRAC_PI_4 && m[2] < 0.0 {
        m[2] = -m[2];
    }
    // Snapping may break ties in the wrong direction by < MU_SNAP_TOL.
    if m[1] > m[0] {
        m[1] = m[0];
    }
    if m[2].abs() > m[1] {
        m[2] = m[1].copysign(m[2]);
    }
    m
}

/// Finds a permutation `pi` and signs `s` (product +1) with
/// `target[j] = e^{i alpha} s_j d[pi(j)]` for some common phase `alpha`.
fn match_spectrum(d: &[C64], target: &[C64; 4]) -> Result<([usize; 4], [f64; 4])> {
    let mut best: Option<([usize; 4], [f64; 4])> = None;
    let mut best_err = f64::INFINITY;
    for perm in permutations4() {
        let ratios: Vec<C64> = (0..4).map(|j| target[j] / d[perm[j]]).collect();
        let alpha = ratios[0].arg();
        let rot = C64::from_polar(1.0, -alpha);
        let signs = [0, 1, 2, 3].map(|j| if (ratios[j] * rot).re >= 0.0 { 1.0 } else { -1.0 });
        if signs.iter().product::<f64>() < 0.0 {
            continue;
        }
        let err = (0..4).map(|j| (ratios[j] * rot - signs[j]).norm()).fold(0.0, f64::max);
        if err < best_err {
            best_err = err;
            best = Some((perm, signs));
        }
    }
    match best {
        Some(b) if best_err < 1e-6 => Ok(b),
        _ => Err(Error::Numerical { context: "matching folded interaction spectrum", residual: best_err }),
    }
}

fn permutations4() -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(24);
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let p = [a, b, c, d];
                    let mut seen = [false; 4];
                    if p.iter().all(|&x| !std::mem::replace(&mut seen[x], true)) {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}

/// True for odd permutations.
fn permutation_parity(p: &[usize; 4]) -> bool {
    let mut inversions = 0;
    for i in 0..4 {
        for j in i + 1..4 {
            if p[i] > p[j] {
                inversions += 1;
            }
        }
    }
    inversions % 2 == 1
}

/// Splits a 4x4 matrix `k = a (x) b` into unitary factors (overall phase is
/// left to the caller).
fn factor_tensor_product(k: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    // R[(a,a'),(b,b')] = k[(2a+b, 2a'+b')] is rank one.
    let r = |aa: usize, bb: usize| k[(2 * (aa / 2) + bb / 2, 2 * (aa % 2) + bb % 2)];
    let (mut bi, mut bj, mut best) = (0, 0, -1.0);
    for i in 0..4 {
        for j in 0..4 {
            let v = r(i, j).norm();
            if v > best {
                (bi, bj, best) = (i, j, v);
            }
        }
    }
    let pivot = r(bi, bj);
    let mut a = ComplexMatrix::zeros(2, 2);
    let mut b = ComplexMatrix::zeros(2, 2);
    for i in 0..4 {
        a[(i / 2, i % 2)] = r(i, bj);
        b[(i / 2, i % 2)] = r(bi, i) / pivot;
    }
    let s = a.determinant().sqrt();
    (a.scale(s.inv()), b.scale(s))
}

/// Haar-distributed unitary of size n x n from the given generator.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let data = (0..n * n).map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
    let ginibre = ComplexMatrix::new(n, n, data).expect("finite gaussian samples");
    let (q, r_diag) = qr_gram_schmidt(&ginibre);
    let phases: Vec<C64> = r_diag.iter().map(|z| z / z.norm()).collect();
    &q * &ComplexMatrix::from_diag(&phases)
}

/// Haar-random gate on two `d`-level systems; deterministic in `seed`.
pub fn haar_random_gate(seed: u64, d: usize) -> Result<Gate> {
    if !(2..=4).contains(&d) {
        return Err(Error::Input(format!("haar_random_gate supports d in 2..=4, got {d}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(Gate::from_trusted(d, haar_unitary(&mut rng, d * d)))
}

/// Wraps an angle into [0, 2pi).
pub fn wrap_phase(x: f64) -> f64 {
    let y = x.rem_euclid(TAU);
    if (TAU - y).abs() < 1e-15 {
        0.0
    } else {
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{is_unitary, pauli};

    fn basis(i: usize) -> Vec<C64> {
        let mut v = vec![ZERO; 4];
        v[i] = ONE;
        v
    }

    #[test]
    fn named_gate_actions() {
        assert_eq!(named_gate("identity").unwrap().matrix(), &ComplexMatrix::identity(4));
        assert_eq!(named_gate("cnot").unwrap().apply(&basis(2)), basis(3));
        assert_eq!(named_gate("swap").unwrap().apply(&basis(1)), basis(2));
        assert!(matches!(named_gate("toffoli"), Err(Error::Input(_))));
        assert!(matches!(named_gate("ualpha(x)"), Err(Error::Input(_))));
        let u = named_gate("ualpha(0.25)").unwrap();
        assert!(u.matrix().max_abs_diff(&exp_interaction([0.0, 0.0, 0.25])) < 1e-15);
    }

    #[test]
    fn coefficient_examples() {
        let a = interaction_coefficients([0.0; 3]).a;
        assert_eq!(a, [ONE, ZERO, ZERO, ZERO]);

        let a = interaction_coefficients([FRAC_PI_4, 0.0, 0.0]).a;
        assert!((a[0] - C64::new(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((a[1] - C64::new(0.0, -FRAC_1_SQRT_2)).norm() < 1e-15);
        assert!(a[2].norm() < 1e-15 && a[3].norm() < 1e-15);

        let m = interaction_coefficients([FRAC_PI_4; 3]).moduli();
        for x in m {
            assert!((x - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn magic_basis_diagonalises_interaction() {
        let q = magic_basis();
        assert!(is_unitary(&q, 1e-14));
        let mu = [0.3, -0.2, 0.11];
        let dn = &(&q.adjoint() * &exp_interaction(mu)) * &q;
        assert!(dn.max_abs_diff(&ComplexMatrix::from_diag(&magic_spectrum(mu))) < 1e-14);
    }

    #[test]
    fn magic_basis_maps_locals_to_real_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = haar_unitary(&mut rng, 2);
        let b = haar_unitary(&mut rng, 2);
        let a = a.scale(a.determinant().sqrt().inv());
        let b = b.scale(b.determinant().sqrt().inv());
        let q = magic_basis();
        let o = &(&q.adjoint() * &tensor(&a, &b)) * &q;
        assert!(o.data().iter().all(|z| z.im.abs() < 1e-14));
    }

    #[test]
    fn textbook_decompositions() {
        let cases = [
            ("identity", [0.0, 0.0, 0.0]),
            ("cnot", [FRAC_PI_4, 0.0, 0.0]),
            ("cz", [FRAC_PI_4, 0.0, 0.0]),
            ("swap", [FRAC_PI_4; 3]),
            ("iswap", [FRAC_PI_4, FRAC_PI_4, 0.0]),
            ("sqrt_swap", [FRAC_PI_4 / 2.0; 3]),
        ];
        for (name, mu) in cases {
            let g = named_gate(name).unwrap();
            let cf = canonical_decompose(&g).unwrap();
            for (got, want) in cf.mu.iter().zip(mu) {
                assert!((got - want).abs() < 1e-12, "{name}: {:?}", cf.mu);
            }
            assert!(gate_from_canonical(&cf).matrix().frobenius_distance(g.matrix()) < 1e-10, "{name}");
            for m in [&cf.v, &cf.w, &cf.v_tilde, &cf.w_tilde] {
                assert!(is_unitary(m, 1e-10));
            }
        }
    }

    #[test]
    fn exact_boundary_values() {
        let cf = canonical_decompose(&named_gate("cnot").unwrap()).unwrap();
        assert_eq!(cf.mu, [FRAC_PI_4, 0.0, 0.0]);
        let cf = canonical_decompose(&named_gate("swap").unwrap()).unwrap();
        assert_eq!(cf.mu, [FRAC_PI_4; 3]);
    }

    #[test]
    fn folding_examples() {
        assert_eq!(fold_into_chamber([0.0; 3]), [0.0; 3]);
        let m = fold_into_chamber([-0.1, 0.3, 0.2]);
        assert!((m[0] - 0.3).abs() < 1e-15 && (m[1] - 0.2).abs() < 1e-15 && (m[2] + 0.1).abs() < 1e-15);
        // pi/2 shift of one entry is a local operation.
        let m = fold_into_chamber([0.3 + FRAC_PI_2, 0.2, 0.1]);
        assert!((m[0] - 0.3).abs() < 1e-14);
        // (pi/4, b, -c) ~ (pi/4, b, c)
        let m = fold_into_chamber([FRAC_PI_4, 0.2, -0.1]);
        assert!(m[0] == FRAC_PI_4 && (m[1] - 0.2).abs() < 1e-15 && (m[2] - 0.1).abs() < 1e-15);
        assert_eq!(fold_into_chamber([-FRAC_PI_4, -FRAC_PI_4, -FRAC_PI_4]), [FRAC_PI_4; 3]);
    }

    #[test]
    fn non_unitary_and_wrong_dimension_rejected() {
        let g = Gate::with_tolerance(2, ComplexMatrix::from_real_diag(&[1.0, 1.0, 1.0, 0.5]), 1.0).unwrap();
        assert!(matches!(canonical_decompose(&g), Err(Error::NotUnitary { .. })));
        let g3 = haar_random_gate(1, 3).unwrap();
        assert!(matches!(canonical_decompose(&g3), Err(Error::Input(_))));
        assert!(matches!(Gate::new(2, ComplexMatrix::identity(3)), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn haar_determinism_and_unitarity() {
        let a = haar_random_gate(42, 2).unwrap();
        let b = haar_random_gate(42, 2).unwrap();
        assert_eq!(a, b);
        assert!(is_unitary(a.matrix(), 1e-10));
        for c in 0..4 {
            let n: f64 = a.matrix().col(c).iter().map(|z| z.norm_sqr()).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
        assert!(haar_random_gate(1, 5).is_err());
        let g4 = haar_random_gate(9, 4).unwrap();
        assert_eq!(g4.matrix().rows(), 16);
    }

    #[test]
    fn random_round_trip_and_lu_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for seed in 0..200 {
            let g = haar_random_gate(seed, 2).unwrap();
            let cf = canonical_decompose(&g).unwrap();
            assert!(cf.in_canonical_cell(), "{:?}", cf.mu);
            assert!(gate_from_canonical(&cf).matrix().frobenius_distance(g.matrix()) < 1e-8);

            let locals: Vec<_> = (0..4).map(|_| haar_unitary(&mut rng, 2)).collect();
            let dressed = g.dress((&locals[0], &locals[1]), (&locals[2], &locals[3]));
            let cf2 = canonical_decompose(&dressed).unwrap();
            for k in 0..3 {
                assert!((cf.mu[k] - cf2.mu[k]).abs() < 1e-9, "{:?} vs {:?}", cf.mu, cf2.mu);
            }
        }
    }

    #[test]
    fn canonical_mu_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let m1 = rng.random_range(0.0..FRAC_PI_4);
            let m2 = rng.random_range(0.0..=m1);
            let m3 = rng.random_range(-m2..=m2);
            let mut cf = CanonicalForm::from_mu([m1, m2, m3]);
            cf.v = haar_unitary(&mut rng, 2);
            cf.w = haar_unitary(&mut rng, 2);
            cf.v_tilde = haar_unitary(&mut rng, 2);
            cf.w_tilde = haar_unitary(&mut rng, 2);
            cf.global_phase = 1.3;
            let back = canonical_decompose(&gate_from_canonical(&cf)).unwrap();
            for k in 0..3 {
                assert!((back.mu[k] - cf.mu[k]).abs() < 1e-9, "{:?} vs {:?}", back.mu, cf.mu);
            }
        }
    }

    #[test]
    fn pauli_dressing_keeps_mu() {
        let g = gate_from_canonical(&CanonicalForm::from_mu([0.5, 0.3, -0.2]));
        for k in 1..4 {
            let p = pauli(k);
            let id = ComplexMatrix::identity(2);
            let d = g.dress((&p, &id), (&id, &p));
            let cf = canonical_decompose(&d).unwrap();
            assert!((cf.mu[0] - 0.5).abs() < 1e-9 && (cf.mu[1] - 0.3).abs() < 1e-9 && (cf.mu[2] + 0.2).abs() < 1e-9);
        }
    }
}
