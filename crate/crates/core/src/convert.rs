//! Optimal conversion probabilities toward the class representatives (CNOT,
//! SWAP) and the one-sided local filters that achieve them.
//!
//! Pure-state conversion `|psi> -> |phi>` under LOCC succeeds at best with
//! probability `min_l E_l(psi) / E_l(phi)`, where `E_l` is the tail sum of the
//! squared Schmidt coefficients from index `l` on. Converting a gate then
//! reduces to converting its Choi state into the Choi state of the target.

use std::fmt;

use serde::Serialize;

use crate::choi::{choi_state_with_tol, schmidt_number, SchmidtSpectrum};
use crate::classify::{classify, ClassLabel};
use crate::error::{Error, Result};
use crate::gates::{canonical_decompose, interaction_coefficients, Gate};
use crate::linalg::{svd, ComplexMatrix};
use crate::DEFAULT_RANK_TOL;

/// Completeness tolerance of a [`LocalFilter`].
pub const FILTER_COMPLETENESS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ConversionTarget {
    Cnot,
    Swap,
}

impl ConversionTarget {
    /// Schmidt number of the target's Choi state.
    pub fn rank(&self) -> usize {
        match self {
            ConversionTarget::Cnot => 2,
            ConversionTarget::Swap => 4,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ConversionTarget::Cnot => "cnot",
            ConversionTarget::Swap => "swap",
        }
    }

    pub fn gate(&self) -> Gate {
        crate::gates::named_gate(self.name()).expect("registry gate")
    }
}

impl fmt::Display for ConversionTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ConversionTarget {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cnot" => Ok(ConversionTarget::Cnot),
            "swap" => Ok(ConversionTarget::Swap),
            other => Err(Error::Input(format!("unknown conversion target `{other}`"))),
        }
    }
}

/// One Kraus operator of a local measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterOperator {
    pub matrix: ComplexMatrix,
    pub success: bool,
}

/// A complete local measurement `sum K^dagger K = I` whose outcomes are
/// labelled success or failure.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalFilter {
    operators: Vec<FilterOperator>,
}

impl LocalFilter {
    pub fn new(operators: Vec<FilterOperator>) -> Result<Self> {
        let f = Self { operators };
        f.validate()?;
        Ok(f)
    }

    fn validate(&self) -> Result<()> {
        let Some(first) = self.operators.first() else {
            return Err(Error::IncompleteMeasurement("filter has no operators".into()));
        };
        let n = first.matrix.rows();
        let mut sum = ComplexMatrix::zeros(n, n);
        for op in &self.operators {
            if op.matrix.rows() != n || op.matrix.cols() != n {
                return Err(Error::DimensionMismatch("filter operators differ in size".into()));
            }
            let top = svd(&op.matrix)?.singular_values[0];
            if top > 1.0 + 1e-12 {
                return Err(Error::IncompleteMeasurement(format!("operator norm {top} exceeds 1")));
            }
            sum = &sum + &(&op.matrix.adjoint() * &op.matrix);
        }
        let residual = sum.frobenius_distance(&ComplexMatrix::identity(n));
        if residual > FILTER_COMPLETENESS_TOL {
            return Err(Error::IncompleteMeasurement(format!("sum K^dagger K deviates from I by {residual:.3e}")));
        }
        Ok(())
    }

    /// Completes diagonal success operators with one diagonal failure operator.
    fn from_diagonal_successes(successes: Vec<Vec<f64>>, dim: usize) -> Result<Self> {
        let mut covered = vec![0.0; dim];
        for d in &successes {
            for (c, x) in covered.iter_mut().zip(d) {
                *c += x * x;
            }
        }
        let failure: Vec<f64> = covered.iter().map(|c| (1.0 - c).max(0.0).sqrt()).collect();
        let mut ops: Vec<FilterOperator> = successes
            .into_iter()
            .map(|d| FilterOperator { matrix: ComplexMatrix::from_real_diag(&d), success: true })
            .collect();
        if failure.iter().any(|&x| x > 0.0) {
            ops.push(FilterOperator { matrix: ComplexMatrix::from_real_diag(&failure), success: false });
        }
        Self::new(ops)
    }

    pub fn operators(&self) -> &[FilterOperator] {
        &self.operators
    }

    pub fn dim(&self) -> usize {
        self.operators[0].matrix.rows()
    }

    /// `basis * K * basis^dagger` for every operator: re-expresses a filter
    /// written in the Schmidt basis (columns of `basis`) in the computational one.
    pub fn conjugated(&self, basis: &ComplexMatrix) -> LocalFilter {
        let bd = basis.adjoint();
        LocalFilter {
            operators: self
                .operators
                .iter()
                .map(|op| FilterOperator { matrix: &(basis * &op.matrix) * &bd, success: op.success })
                .collect(),
        }
    }

    /// Total success probability on a state given by its Schmidt spectrum,
    /// for a filter diagonal in that Schmidt basis.
    pub fn success_probability_diagonal(&self, source: &SchmidtSpectrum) -> f64 {
        let w = source.weights();
        self.operators
            .iter()
            .filter(|op| op.success)
            .map(|op| w.iter().enumerate().map(|(i, x)| op.matrix[(i, i)].norm_sqr() * x).sum::<f64>())
            .sum()
    }
}

/// Optimal probability of converting `source` into `target` by LOCC.
pub fn vidal_probability(source: &SchmidtSpectrum, target: &SchmidtSpectrum) -> f64 {
    let n = source.len().max(target.len());
    let mut ls = source.weights();
    let mut lt = target.weights();
    ls.resize(n, 0.0);
    lt.resize(n, 0.0);
    let mut best: f64 = 1.0;
    for l in 0..n {
        let num: f64 = ls[l..].iter().sum();
        let den: f64 = lt[l..].iter().sum();
        if den > 1e-15 {
            best = best.min(num / den);
        }
    }
    best.clamp(0.0, 1.0)
}

/// Conversion probability of a gate into CNOT or SWAP.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConversionQuote {
    pub source_mu: [f64; 3],
    pub target: ConversionTarget,
    pub probability: f64,
    pub feasible: bool,
    /// The closed-form value before capping at 1 (only differs for
    /// SWAP-class gates converted to CNOT).
    pub uncapped: f64,
}

impl ConversionQuote {
    fn infeasible(source_mu: [f64; 3], target: ConversionTarget) -> Self {
        Self { source_mu, target, probability: 0.0, feasible: false, uncapped: 0.0 }
    }
}

pub fn quote_to_cnot(g: &Gate) -> Result<ConversionQuote> {
    quote_with_tol(g, ConversionTarget::Cnot, DEFAULT_RANK_TOL)
}

pub fn quote_to_swap(g: &Gate) -> Result<ConversionQuote> {
    quote_with_tol(g, ConversionTarget::Swap, DEFAULT_RANK_TOL)
}

pub fn quote(g: &Gate, target: ConversionTarget) -> Result<ConversionQuote> {
    quote_with_tol(g, target, DEFAULT_RANK_TOL)
}

pub fn quote_with_tol(g: &Gate, target: ConversionTarget, rank_tol: f64) -> Result<ConversionQuote> {
    if g.d() != 2 {
        return Err(Error::Input("conversion quotes are defined for two-qubit gates".into()));
    }
    let mu = canonical_decompose(g)?.mu;
    let class = classify(g, rank_tol)?;
    let q = match (class.label, target) {
        (ClassLabel::Local, _) | (ClassLabel::CnotClass, ConversionTarget::Swap) => {
            ConversionQuote::infeasible(mu, target)
        }
        (ClassLabel::CnotClass, ConversionTarget::Cnot) => {
            let p = cnot_class_probability(mu[0]);
            ConversionQuote { source_mu: mu, target, probability: p.min(1.0), feasible: true, uncapped: p }
        }
        (ClassLabel::SwapClass, ConversionTarget::Cnot) => {
            let spec = choi_state_with_tol(g, rank_tol)?.spectrum;
            let p = vidal_probability(&spec, &SchmidtSpectrum::uniform(2, spec.len()));
            let b0 = spec.amplitudes()[0];
            ConversionQuote { source_mu: mu, target, probability: p, feasible: true, uncapped: 2.0 * (1.0 - b0 * b0) }
        }
        (ClassLabel::SwapClass, ConversionTarget::Swap) => {
            let a3 = interaction_coefficients(mu).a[3].norm_sqr();
            let p = 4.0 * a3;
            ConversionQuote { source_mu: mu, target, probability: p.min(1.0), feasible: true, uncapped: p }
        }
        (ClassLabel::General(_), _) => unreachable!("two-qubit gates never classify as GENERAL"),
    };
    Ok(q)
}

/// `2 sin^2(mu)`. Away from zero `1 - cos(2 mu)` is evaluated instead: it
/// rounds once less, and gives the correctly rounded double at `pi/8`.
fn cnot_class_probability(mu1: f64) -> f64 {
    if mu1 < 0.25 {
        2.0 * mu1.sin().powi(2)
    } else {
        1.0 - (2.0 * mu1).cos()
    }
}

/// Local measurement applied in rounds: the success outcomes of a round stop
/// the protocol, its failure outcome feeds the next round, and the failure
/// outcome of the last round is final.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterCascade {
    rounds: Vec<LocalFilter>,
}

impl FilterCascade {
    pub fn single(filter: LocalFilter) -> Self {
        Self { rounds: vec![filter] }
    }

    pub fn rounds(&self) -> &[LocalFilter] {
        &self.rounds
    }

    /// Single-round measurement with the same outcome statistics and outputs.
    pub fn flatten(&self) -> Result<LocalFilter> {
        let dim = self.rounds[0].dim();
        let mut reach = ComplexMatrix::identity(dim);
        let mut ops = Vec::new();
        for round in &self.rounds {
            let mut next = None;
            for op in round.operators() {
                let composite = &op.matrix * &reach;
                if op.success {
                    ops.push(FilterOperator { matrix: composite, success: true });
                } else {
                    next = Some(composite);
                }
            }
            match next {
                Some(m) => reach = m,
                None => return LocalFilter::new(ops),
            }
        }
        ops.push(FilterOperator { matrix: reach, success: false });
        LocalFilter::new(ops)
    }

    pub fn conjugated(&self, basis: &ComplexMatrix) -> FilterCascade {
        FilterCascade { rounds: self.rounds.iter().map(|r| r.conjugated(basis)).collect() }
    }
}

/// Filter turning a state with Schmidt spectrum `source` into a rank-2
/// maximally entangled state with the optimal probability `min(1, 2(1 - b0^2))`.
/// Operators are diagonal in the source's Schmidt basis (side A).
pub fn build_filter_to_rank2(source: &SchmidtSpectrum) -> Result<LocalFilter> {
    build_cascade_to_rank2(source)?.flatten()
}

/// Round structure behind [`build_filter_to_rank2`]. When `b0^2 >= 1/2` there is
/// one round with a success outcome per remaining Schmidt direction. Otherwise
/// every round is a two-outcome measurement whose success operator is supported
/// on two Schmidt directions and which leaves the failure branch deterministically
/// convertible; no branch ends in failure.
pub fn build_cascade_to_rank2(source: &SchmidtSpectrum) -> Result<FilterCascade> {
    let rank = schmidt_number(source, DEFAULT_RANK_TOL);
    if rank < 2 {
        return Err(Error::Infeasible { source_rank: rank, target_rank: 2 });
    }
    let b = source.amplitudes();
    let dim = b.len();
    let cutoff = DEFAULT_RANK_TOL * b[0];
    let lambda: Vec<f64> = b.iter().map(|x| if *x > cutoff { x * x } else { 0.0 }).collect();

    if lambda[0] >= 0.5 {
        // Outcome k keeps directions {0, k} with amplitudes rescaled to (b_k, b_k).
        let successes = (1..dim)
            .filter(|&k| lambda[k] > 0.0)
            .map(|k| {
                let mut d = vec![0.0; dim];
                d[0] = b[k] / b[0];
                d[k] = 1.0;
                d
            })
            .collect();
        return Ok(FilterCascade { rounds: vec![LocalFilter::from_diagonal_successes(successes, dim)?] });
    }

    // Write lambda as a mixture of uniform weights on pairs,
    // lambda_i = (1/2) sum_j w_ij, and test for one pair per round. The
    // operators act on the renormalised state left by earlier failures.
    let total: f64 = lambda.iter().sum();
    let mut remaining: Vec<f64> = lambda.iter().map(|x| x / total).collect();
    let pairs = pair_decomposition(&remaining)?;
    let mut rounds = Vec::with_capacity(pairs.len());
    for &(i, j, w) in &pairs {
        let mut d = vec![0.0; dim];
        for k in [i, j] {
            d[k] = if remaining[k] > 0.0 { (w / (2.0 * remaining[k])).min(1.0).sqrt() } else { 0.0 };
            remaining[k] = (remaining[k] - w / 2.0).max(0.0);
        }
        rounds.push(LocalFilter::from_diagonal_successes(vec![d], dim)?);
    }
    Ok(FilterCascade { rounds })
}

/// Weights `w` on index pairs with `sum_j w_ij = 2 lambda_i` and `sum w = 1`.
/// Requires `max lambda <= 1/2`.
fn pair_decomposition(lambda: &[f64]) -> Result<Vec<(usize, usize, f64)>> {
    let eps = 1e-15;
    let mut deg: Vec<f64> = lambda.iter().map(|x| 2.0 * x).collect();
    let mut out = Vec::new();
    for _ in 0..4 * lambda.len() {
        let mut order: Vec<usize> = (0..deg.len()).filter(|&i| deg[i] > eps).collect();
        if order.is_empty() {
            return Ok(out);
        }
        order.sort_by(|&x, &y| deg[y].total_cmp(&deg[x]));
        if order.len() == 1 {
            // Rounding leftover on a single index.
            if deg[order[0]] < 1e-12 {
                return Ok(out);
            }
            break;
        }
        let (i, j) = (order[0], order[1]);
        let total: f64 = deg.iter().sum();
        let third = order.get(2).map_or(0.0, |&k| deg[k]);
        let w = deg[j].min((total - 2.0 * third) / 2.0).max(0.0);
        if w <= eps {
            break;
        }
        deg[i] = (deg[i] - w).max(0.0);
        deg[j] = (deg[j] - w).max(0.0);
        out.push((i.min(j), i.max(j), w));
    }
    let residual: f64 = deg.iter().sum();
    Err(Error::Numerical { context: "pair decomposition of Schmidt weights", residual })
}

/// Filter turning a full-rank four-term Schmidt spectrum into the uniform one,
/// succeeding with probability `4 b3^2`.
pub fn build_filter_to_rank4(source: &SchmidtSpectrum) -> Result<LocalFilter> {
    let rank = schmidt_number(source, DEFAULT_RANK_TOL);
    if rank < 4 {
        return Err(Error::Infeasible { source_rank: rank, target_rank: 4 });
    }
    let b = source.amplitudes();
    let b3 = b[3];
    let mut d = vec![0.0; b.len()];
    for k in 0..4 {
        d[k] = b3 / b[k];
    }
    LocalFilter::from_diagonal_successes(vec![d], b.len())
}

pub fn build_filter(source: &SchmidtSpectrum, target: ConversionTarget) -> Result<LocalFilter> {
    match target {
        ConversionTarget::Cnot => build_filter_to_rank2(source),
        ConversionTarget::Swap => build_filter_to_rank4(source),
    }
}
