//! Cross-checks of the core kernels against independently computed references.

use locconv_core::choi::{schmidt_decompose, PureState, SchmidtSpectrum};
use locconv_core::convert::{build_filter, vidal_probability, ConversionTarget};
use locconv_core::linalg::{exp_interaction, pauli, svd, tensor, ComplexMatrix, C64};
use locconv_core::sim::{Execution, Party, Register};
use locconv_core::{choi_state, haar_random_gate, named_gate, Error, DEFAULT_RANK_TOL};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `exp(-iH)` by scaling and squaring a truncated Taylor series.
fn expm_minus_i(h: &ComplexMatrix) -> ComplexMatrix {
    let n = h.rows();
    let norm = h.frobenius_norm();
    let squarings = (norm.max(1.0).log2().ceil() as i32 + 4).max(0);
    let scaled = h.scale(C64::new(0.0, -1.0 / 2f64.powi(squarings)));
    let mut term = ComplexMatrix::identity(n);
    let mut sum = ComplexMatrix::identity(n);
    for k in 1..30 {
        term = (&term * &scaled).scale(C64::from(1.0 / k as f64));
        sum = &sum + &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

fn interaction_hamiltonian(mu: [f64; 3]) -> ComplexMatrix {
    (0..3)
        .fold(ComplexMatrix::zeros(4, 4), |acc, k| &acc + &tensor(&pauli(k + 1), &pauli(k + 1)).scale(C64::from(mu[k])))
}

proptest! {
    #[test]
    fn exp_interaction_matches_generic_exponential(
        m1 in -4.0f64..4.0, m2 in -4.0f64..4.0, m3 in -4.0f64..4.0,
    ) {
        let mu = [m1, m2, m3];
        let reference = expm_minus_i(&interaction_hamiltonian(mu));
        prop_assert!(exp_interaction(mu).max_abs_diff(&reference) < 1e-12);
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    let data = (0..rows * cols).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    ComplexMatrix::new(rows, cols, data).unwrap()
}

#[test]
fn svd_on_random_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let rows = rng.random_range(2..=16);
        let cols = rng.random_range(2..=16);
        let m = random_matrix(&mut rng, rows, cols);
        let s = svd(&m).unwrap();
        assert!(s.reconstruct().frobenius_distance(&m) < 1e-10);
        assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
        // Frobenius norm and |det| are singular-value invariants computed
        // without any decomposition.
        let sq: f64 = s.singular_values.iter().map(|x| x * x).sum();
        assert!((sq - m.frobenius_norm().powi(2)).abs() < 1e-9 * sq);
        if rows == cols {
            let prod: f64 = s.singular_values.iter().product();
            let det = m.determinant().norm();
            assert!((prod - det).abs() < 1e-9 * det.max(1.0));
        }
    }
}

/// `sum_{ijkl} U[(i,j),(k,l)] |i>_{A1} |k>_{A2} |j>_{B1} |l>_{B2} / d`, written out
/// without the subsystem kernel.
fn brute_force_choi(u: &ComplexMatrix, d: usize) -> Vec<C64> {
    let mut amps = vec![C64::new(0.0, 0.0); d.pow(4)];
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    let idx = ((i * d + k) * d + j) * d + l;
                    amps[idx] = u[(i * d + j, k * d + l)] / d as f64;
                }
            }
        }
    }
    amps
}

#[test]
fn choi_state_matches_brute_force() {
    for (seed, d) in [(1, 2), (2, 2), (3, 3)] {
        let g = haar_random_gate(seed, d).unwrap();
        let c = choi_state(&g).unwrap();
        let reference = brute_force_choi(g.matrix(), d);
        assert!(c.state.amplitudes().iter().zip(&reference).all(|(a, b)| (a - b).norm() < 1e-14));
    }
    let c = choi_state(&named_gate("cnot").unwrap()).unwrap();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    assert!(c.spectrum.amplitudes().iter().zip([r, r, 0.0, 0.0]).all(|(a, b)| (a - b).abs() < 1e-12));
}

#[test]
fn schmidt_spectrum_matches_purity() {
    // sum b^4 = Tr rho_A^2, with rho_A formed directly from the amplitudes.
    for seed in 0..50 {
        let g = haar_random_gate(seed, 2).unwrap();
        let s = choi_state(&g).unwrap();
        let amps = s.state.amplitudes();
        let mut rho = vec![C64::new(0.0, 0.0); 16];
        for a in 0..4 {
            for a2 in 0..4 {
                rho[a * 4 + a2] = (0..4).map(|b| amps[a * 4 + b] * amps[a2 * 4 + b].conj()).sum();
            }
        }
        let purity: f64 =
            (0..4).flat_map(|a| (0..4).map(move |b| (a, b))).map(|(a, b)| (rho[a * 4 + b] * rho[b * 4 + a]).re).sum();
        let b4: f64 = s.spectrum.amplitudes().iter().map(|b| b.powi(4)).sum();
        assert!((purity - b4).abs() < 1e-12);
    }
}

fn random_spectrum(rng: &mut ChaCha8Rng) -> SchmidtSpectrum {
    let zeros = rng.random_range(0..3usize);
    let mut v: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..1.0f64)).collect();
    for x in v.iter_mut().take(zeros) {
        *x = 0.0;
    }
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    SchmidtSpectrum::new(v.iter().map(|x| x / n).collect()).unwrap()
}

#[test]
fn filters_reproduce_optimum_by_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..500 {
        let s = random_spectrum(&mut rng);
        let b = s.amplitudes();
        let lambda: Vec<f64> = b.iter().map(|x| x * x).collect();
        let amps: Vec<C64> =
            (0..16).map(|i| if i / 4 == i % 4 { C64::from(b[i / 4]) } else { C64::new(0.0, 0.0) }).collect();
        let reg = Register::new(PureState::new(vec![4, 4], amps).unwrap(), &[("A", Party::Alice), ("B", Party::Bob)])
            .unwrap();
        let rank = s.schmidt_number(DEFAULT_RANK_TOL);
        for (target, r, closed_form) in [
            (ConversionTarget::Cnot, 2, (2.0 * (1.0 - lambda[0])).min(1.0)),
            (ConversionTarget::Swap, 4, 4.0 * lambda[3]),
        ] {
            let uniform = SchmidtSpectrum::uniform(r, 4);
            let opt = vidal_probability(&s, &uniform);
            match build_filter(&s, target) {
                Ok(filter) => {
                    let mut exec = Execution::enumerate(reg.clone());
                    exec.filter("f", &["A"], &filter).unwrap();
                    let p = exec.success_probability();
                    assert!((p - opt).abs() < 1e-9 && (p - closed_form).abs() < 1e-9, "p={p} opt={opt} {b:?}");
                    assert!(exec.rank_monotone());
                    for br in exec.branches().iter().filter(|br| br.is_success()) {
                        let spec = schmidt_decompose(br.register.state(), &[0]).unwrap().spectrum;
                        let out = spec.amplitudes();
                        let u = 1.0 / (r as f64).sqrt();
                        assert!(
                            out[..r].iter().all(|x| (x - u).abs() < 1e-9) && out[r..].iter().all(|x| x.abs() < 1e-9)
                        );
                    }
                }
                Err(Error::Infeasible { .. }) => {
                    assert!(rank < r);
                    assert!(opt < 1e-9 || closed_form < 1e-12);
                }
                Err(e) => panic!("{e}"),
            }
        }
    }
}
