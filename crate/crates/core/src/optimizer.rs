//! Contextual CMA-ES: the upper-level Gaussian policy and its update rule.
//!
//! A generation consists of λ samples `(s_i, θ_i, R_i)` with
//! `θ_i ~ N(Wᵀφ(s_i), σ²Σ)`. Returns are turned into advantages by
//! subtracting a ridge-fitted context baseline, the samples are ranked by
//! advantage, the policy mean `W` is refitted by weighted ridge regression,
//! and evolution paths drive the covariance and step-size adaptation. The
//! active variant additionally subtracts a rank-μ term built from the worst
//! samples of the generation.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::features::FeatureMap;
use crate::Context;

/// Default ridge regularization for the baseline and policy-mean fits. Small
/// enough not to bias either fit, large enough to keep rank-deficient feature
/// matrices solvable.
pub const DEFAULT_RIDGE: f64 = 1e-8;

/// Relative floor for covariance eigenvalues during repair.
const EIG_FLOOR_REL: f64 = 1e-20;

// ---------------------------------------------------------------------------
// Recombination weights
// ---------------------------------------------------------------------------

/// The diagonal weight matrix `D`: log-linear weights on the µ best samples,
/// zero on the rest, normalized to sum to one.
#[derive(Debug, Clone)]
pub struct RecombinationWeights {
    values: Vec<f64>,
    mu: usize,
}

impl RecombinationWeights {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn lambda(&self) -> usize {
        self.values.len()
    }

    pub fn mu(&self) -> usize {
        self.mu
    }

    /// Variance-effective selection mass `1 / Σ D_ii²`.
    pub fn mu_eff(&self) -> f64 {
        1.0 / self.values.iter().map(|w| w * w).sum::<f64>()
    }
}

/// Builds the weight schedule `D_ii = max(0, ln(µ + 0.5) − ln i) / Z` with
/// `Z` normalizing the weights to sum to one.
pub fn recombination_weights(lambda: usize, mu: usize) -> Result<RecombinationWeights> {
    if mu == 0 || mu > lambda {
        return Err(Error::invalid(format!(
            "need 1 <= mu <= lambda, got mu={mu}, lambda={lambda}"
        )));
    }
    let log_mu = (mu as f64 + 0.5).ln();
    let mut values: Vec<f64> = (1..=lambda)
        .map(|i| (log_mu - (i as f64).ln()).max(0.0))
        .collect();
    let z: f64 = values.iter().sum();
    for w in values.iter_mut() {
        *w /= z;
    }
    Ok(RecombinationWeights { values, mu })
}

// ---------------------------------------------------------------------------
// Hyperparameters
// ---------------------------------------------------------------------------

/// All learning constants of the update rule. Produced by
/// [`default_hyperparameters`]; fields are public so variants can be toggled.
#[derive(Debug, Clone)]
pub struct Hyperparameters {
    pub lambda: usize,
    pub mu: usize,
    /// Ridge regularization used by both regression steps.
    pub gamma: f64,
    pub mu_eff: f64,
    pub c_1: f64,
    pub c_mu: f64,
    pub c_c: f64,
    pub c_sigma: f64,
    pub d_sigma: f64,
    /// Learning rate of the negative (active) rank-µ term.
    pub c_mu_neg: f64,
    /// Expected norm of an n-dimensional standard normal vector.
    pub chi_n: f64,
    pub n: usize,
    pub n_s: usize,
    /// Enables the active covariance update.
    pub active: bool,
}

/// Computes the default learning constants for a generation of `lambda`
/// samples with the given weight schedule, `n` parameters, and `n_s` context
/// variables.
pub fn default_hyperparameters(
    lambda: usize,
    n: usize,
    n_s: usize,
    weights: &RecombinationWeights,
) -> Result<Hyperparameters> {
    if lambda < 2 {
        return Err(Error::invalid("lambda must be at least 2"));
    }
    if n == 0 {
        return Err(Error::invalid("parameter dimension must be at least 1"));
    }
    if weights.lambda() != lambda {
        return Err(Error::invalid(format!(
            "weights are sized for lambda={}, got lambda={lambda}",
            weights.lambda()
        )));
    }
    let sum: f64 = weights.values().iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("weights sum to {sum}, expected 1")));
    }

    let nf = n as f64;
    let m = (n + n_s) as f64;
    let mu_eff = weights.mu_eff();
    let c_1 = 2.0 / ((m + 1.3).powi(2) + mu_eff);
    let c_mu = (1.0 - c_1).min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((m + 2.0).powi(2) + mu_eff));
    let c_c = (4.0 + mu_eff / m) / (4.0 + m + 2.0 * mu_eff / m);
    let c_sigma = (mu_eff + 2.0) / (m + mu_eff + 5.0);
    let d_sigma =
        1.0 + 2.0 * (((mu_eff - 1.0) / (m + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma + (m + 1.0).ln();
    let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));
    let c_mu_neg = (1.0 - c_mu) * mu_eff / (4.0 * ((m + 2.0).powf(1.5) + 2.0 * mu_eff));

    Ok(Hyperparameters {
        lambda,
        mu: weights.mu(),
        gamma: DEFAULT_RIDGE,
        mu_eff,
        c_1,
        c_mu,
        c_c,
        c_sigma,
        d_sigma,
        c_mu_neg,
        chi_n,
        n,
        n_s,
        active: false,
    })
}

// ---------------------------------------------------------------------------
// Search distribution
// ---------------------------------------------------------------------------

/// The upper-level policy `N(Wᵀφ(s), σ²Σ)` together with its adaptation
/// state: the two evolution paths and a generation counter.
#[derive(Debug, Clone)]
pub struct SearchDistribution {
    /// Policy coefficients, `dim φ(s) × n`.
    w: DMatrix<f64>,
    /// Covariance shape matrix `Σ`, symmetric positive definite.
    cov: DMatrix<f64>,
    /// Global step size σ.
    step_size: f64,
    path_sigma: DVector<f64>,
    path_c: DVector<f64>,
    generation: u64,
}

impl SearchDistribution {
    /// Initial distribution: `Σ = I` and a `W` that carries ones on the main
    /// diagonal of its leading square block (the identity-shaped stand-in for
    /// a non-square `W⁰ = I`), with the row of a constant feature left zero.
    pub fn new(phi: FeatureMap, n_s: usize, n: usize, sigma0: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("parameter dimension must be at least 1"));
        }
        if !(sigma0 > 0.0) || !sigma0.is_finite() {
            return Err(Error::invalid(format!("sigma0 must be positive, got {sigma0}")));
        }
        let phi_dim = phi.dim(n_s);
        let mut w = DMatrix::zeros(phi_dim, n);
        for i in 0..phi_dim.min(n) {
            if !phi.is_constant_term(i) {
                w[(i, i)] = 1.0;
            }
        }
        Ok(Self {
            w,
            cov: DMatrix::identity(n, n),
            step_size: sigma0,
            path_sigma: DVector::zeros(n),
            path_c: DVector::zeros(n),
            generation: 1,
        })
    }

    /// Distribution around an explicit policy, with unit covariance and
    /// fresh adaptation state; for warm starts and policy evaluation.
    pub fn from_policy(w: DMatrix<f64>, sigma0: f64) -> Result<Self> {
        let n = w.ncols();
        Self::from_parts(w, DMatrix::identity(n, n), sigma0)
    }

    /// Distribution with explicit policy and covariance and fresh adaptation
    /// state.
    pub fn from_parts(w: DMatrix<f64>, cov: DMatrix<f64>, sigma0: f64) -> Result<Self> {
        let n = w.ncols();
        if n == 0 {
            return Err(Error::invalid("parameter dimension must be at least 1"));
        }
        if cov.nrows() != n || cov.ncols() != n {
            return Err(Error::invalid(format!(
                "covariance must be {n}x{n}, got {}x{}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if !(sigma0 > 0.0) || !sigma0.is_finite() {
            return Err(Error::invalid(format!("sigma0 must be positive, got {sigma0}")));
        }
        if w.iter().any(|v| !v.is_finite()) || cov.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("policy and covariance must be finite"));
        }
        Ok(Self {
            w,
            cov,
            step_size: sigma0,
            path_sigma: DVector::zeros(n),
            path_c: DVector::zeros(n),
            generation: 1,
        })
    }

    pub fn policy_coefficients(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn step_size(&self) -> f64 {
        self.step_size
    }

    pub fn path_sigma(&self) -> &DVector<f64> {
        &self.path_sigma
    }

    pub fn path_c(&self) -> &DVector<f64> {
        &self.path_c
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn param_dim(&self) -> usize {
        self.cov.nrows()
    }

    /// Policy mean `Wᵀφ(s)` for an already expanded feature vector.
    pub fn mean(&self, phi_s: &DVector<f64>) -> DVector<f64> {
        self.w.transpose() * phi_s
    }

    /// Draws `θ = Wᵀφ(s) + σ·L·z` with `LLᵀ = Σ` and `z` standard normal.
    pub fn sample_parameters<R: Rng>(
        &self,
        phi_s: &DVector<f64>,
        rng: &mut R,
    ) -> Result<DVector<f64>> {
        let chol = nalgebra::Cholesky::new(self.cov.clone())
            .ok_or_else(|| Error::degenerate("covariance is not positive definite"))?;
        let n = self.param_dim();
        let z = DVector::from_fn(n, |_, _| rng.sample(StandardNormal));
        Ok(self.mean(phi_s) + self.step_size * (chol.l() * z))
    }

    /// True when every piece of state is finite.
    pub fn is_finite(&self) -> bool {
        self.step_size.is_finite()
            && self.w.iter().all(|v| v.is_finite())
            && self.cov.iter().all(|v| v.is_finite())
            && self.path_sigma.iter().all(|v| v.is_finite())
            && self.path_c.iter().all(|v| v.is_finite())
    }
}

// ---------------------------------------------------------------------------
// Generation batches
// ---------------------------------------------------------------------------

/// One sample of a generation. Virtual (surrogate-scored) samples carry no
/// real return.
#[derive(Debug, Clone)]
pub struct BatchEntry {
    pub context: Context,
    pub params: DVector<f64>,
    pub ret: Option<f64>,
    /// Ranking key: the advantage for real generations, the predicted ranking
    /// value for surrogate generations.
    pub advantage: f64,
}

/// The samples used by one distribution update.
#[derive(Debug, Clone, Default)]
pub struct GenerationBatch {
    entries: Vec<BatchEntry>,
    sorted: bool,
}

impl GenerationBatch {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_real(&mut self, context: Context, params: DVector<f64>, ret: f64) {
        self.entries.push(BatchEntry {
            context,
            params,
            ret: Some(ret),
            advantage: 0.0,
        });
        self.sorted = false;
    }

    pub fn push_scored(
        &mut self,
        context: Context,
        params: DVector<f64>,
        ret: Option<f64>,
        score: f64,
    ) {
        self.entries.push(BatchEntry {
            context,
            params,
            ret,
            advantage: score,
        });
        self.sorted = false;
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[BatchEntry] {
        &self.entries
    }

    pub fn is_sorted(&self) -> bool {
        self.sorted
    }

    /// Stable descending sort by the ranking key; ties keep insertion order.
    pub fn sort_by_advantage(&mut self) {
        self.entries
            .sort_by(|a, b| b.advantage.total_cmp(&a.advantage));
        self.sorted = true;
    }

    /// Mean of the real returns in this batch (NaN when there are none).
    pub fn mean_real_return(&self) -> f64 {
        let mut sum = 0.0;
        let mut count = 0usize;
        for e in &self.entries {
            if let Some(r) = e.ret {
                sum += r;
                count += 1;
            }
        }
        if count == 0 {
            f64::NAN
        } else {
            sum / count as f64
        }
    }

    pub(crate) fn set_advantage(&mut self, idx: usize, value: f64) {
        self.entries[idx].advantage = value;
        self.sorted = false;
    }
}

// ---------------------------------------------------------------------------
// Baseline
// ---------------------------------------------------------------------------

/// Ridge-regression baseline `R ≈ Bᵀψ(s)` that normalizes returns across
/// contexts before ranking.
#[derive(Debug, Clone)]
pub struct BaselineModel {
    coefficients: DVector<f64>,
    psi: FeatureMap,
}

impl BaselineModel {
    pub fn coefficients(&self) -> &DVector<f64> {
        &self.coefficients
    }

    pub fn feature_map(&self) -> FeatureMap {
        self.psi
    }

    pub fn predict(&self, s: &Context) -> f64 {
        self.coefficients.dot(&self.psi.apply(s))
    }
}

/// Fits `B = (ΨᵀΨ + γI)⁻¹ ΨᵀR` over the batch's real returns.
pub fn fit_baseline(batch: &GenerationBatch, psi: FeatureMap, gamma: f64) -> Result<BaselineModel> {
    if batch.is_empty() {
        return Err(Error::invalid("cannot fit a baseline on an empty batch"));
    }
    let n_s = batch.entries()[0].context.len();
    let dim = psi.dim(n_s);
    let lambda = batch.len();
    let mut psi_mat = DMatrix::zeros(lambda, dim);
    let mut returns = DVector::zeros(lambda);
    for (i, e) in batch.entries().iter().enumerate() {
        let r = e
            .ret
            .ok_or_else(|| Error::invalid("baseline requires real returns on every entry"))?;
        psi_mat.row_mut(i).copy_from(&psi.apply(&e.context).transpose());
        returns[i] = r;
    }
    let mut normal = psi_mat.transpose() * &psi_mat;
    for i in 0..dim {
        normal[(i, i)] += gamma;
    }
    let rhs = psi_mat.transpose() * returns;
    let coefficients = nalgebra::Cholesky::new(normal)
        .ok_or_else(|| Error::degenerate("baseline normal equations are singular"))?
        .solve(&rhs);
    if coefficients.iter().any(|v| !v.is_finite()) {
        return Err(Error::divergence("baseline coefficients are non-finite"));
    }
    Ok(BaselineModel { coefficients, psi })
}

/// Fills in `Â_i = R_i − Bᵀψ(s_i)` for every entry of the batch.
pub fn compute_advantages(batch: &mut GenerationBatch, baseline: &BaselineModel) -> Result<()> {
    for i in 0..batch.len() {
        let (r, a) = {
            let e = &batch.entries()[i];
            let r = e
                .ret
                .ok_or_else(|| Error::invalid("advantage requires a real return"))?;
            (r, baseline.predict(&e.context))
        };
        batch.set_advantage(i, r - a);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Policy-mean fit and distribution update
// ---------------------------------------------------------------------------

/// Weighted ridge regression `W = (ΦᵀDΦ + γI)⁻¹ ΦᵀDΘ` over a sorted batch.
pub fn fit_policy_mean(
    batch: &GenerationBatch,
    weights: &RecombinationWeights,
    phi: FeatureMap,
    gamma: f64,
) -> Result<DMatrix<f64>> {
    if !batch.is_sorted() {
        return Err(Error::invalid("policy fit requires a batch sorted by advantage"));
    }
    if weights.lambda() != batch.len() {
        return Err(Error::invalid(format!(
            "weights sized for {} samples, batch has {}",
            weights.lambda(),
            batch.len()
        )));
    }
    let n_s = batch.entries()[0].context.len();
    let dim = phi.dim(n_s);
    let n = batch.entries()[0].params.len();
    let lambda = batch.len();

    let mut phi_mat = DMatrix::zeros(lambda, dim);
    let mut theta_mat = DMatrix::zeros(lambda, n);
    for (i, e) in batch.entries().iter().enumerate() {
        phi_mat.row_mut(i).copy_from(&phi.apply(&e.context).transpose());
        theta_mat.row_mut(i).copy_from(&e.params.transpose());
    }
    // Scale rows by D_ii once; both sides of the normal equations reuse it.
    let mut weighted_phi = phi_mat.clone();
    for (i, &w) in weights.values().iter().enumerate() {
        weighted_phi.row_mut(i).scale_mut(w);
    }
    let mut normal = phi_mat.transpose() * &weighted_phi;
    for i in 0..dim {
        normal[(i, i)] += gamma;
    }
    let rhs = weighted_phi.transpose() * theta_mat;
    let solved = nalgebra::Cholesky::new(normal)
        .ok_or_else(|| Error::degenerate("policy normal equations are singular"))?
        .solve(&rhs);
    if solved.iter().any(|v| !v.is_finite()) {
        return Err(Error::divergence("policy coefficients are non-finite"));
    }
    Ok(solved)
}

/// Symmetric inverse square root `Σ^{−1/2}` via eigendecomposition.
pub fn matrix_inv_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::invalid("inverse square root needs a square matrix"));
    }
    let eigen = m.clone().symmetric_eigen();
    let mut inv_sqrt_vals = eigen.eigenvalues.clone();
    for v in inv_sqrt_vals.iter_mut() {
        if *v <= 0.0 || !v.is_finite() {
            return Err(Error::degenerate(format!(
                "matrix has a non-positive eigenvalue ({v})"
            )));
        }
        *v = 1.0 / v.sqrt();
    }
    let result = &eigen.eigenvectors
        * DMatrix::from_diagonal(&inv_sqrt_vals)
        * eigen.eigenvectors.transpose();
    // Exact symmetry, eigenvector round-off aside.
    Ok((&result + result.transpose()) * 0.5)
}

/// Rank-µ matrices of a sorted batch: `S` from the best samples and the
/// mirrored `S⁻` from the worst (sample `j = 1 + λ − i` paired with weight
/// `D_ii`, so the worst samples receive the largest weights).
pub fn active_rank_mu_terms(
    batch: &GenerationBatch,
    dist: &SearchDistribution,
    weights: &RecombinationWeights,
    phi: FeatureMap,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if !batch.is_sorted() {
        return Err(Error::invalid("rank-µ terms require a sorted batch"));
    }
    let n = dist.param_dim();
    let lambda = batch.len();
    let inv_sq = 1.0 / (dist.step_size() * dist.step_size());
    let deviations: Vec<DVector<f64>> = batch
        .entries()
        .iter()
        .map(|e| &e.params - dist.mean(&phi.apply(&e.context)))
        .collect();
    let mut s_pos = DMatrix::zeros(n, n);
    let mut s_neg = DMatrix::zeros(n, n);
    for (i, &w) in weights.values().iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let scale = w * inv_sq;
        let d = &deviations[i];
        s_pos.ger(scale, d, d, 1.0);
        let mirrored = &deviations[lambda - 1 - i];
        s_neg.ger(scale, mirrored, mirrored, 1.0);
    }
    Ok((s_pos, s_neg))
}

/// Multiplier applied to σ given the updated step-size path norm: exactly 1
/// when the norm equals its expectation `chi_n`.
pub fn step_size_factor(hyper: &Hyperparameters, path_norm: f64) -> f64 {
    ((hyper.c_sigma / hyper.d_sigma) * (path_norm / hyper.chi_n - 1.0)).exp()
}

/// One full distribution update from a sorted generation batch. Returns the
/// next distribution; the covariance is re-symmetrized and eigenvalue-floored
/// so it stays positive definite even under the active update.
pub fn update_distribution(
    dist: &SearchDistribution,
    batch: &GenerationBatch,
    hyper: &Hyperparameters,
    phi: FeatureMap,
) -> Result<SearchDistribution> {
    if !batch.is_sorted() {
        return Err(Error::invalid("update requires a batch sorted by advantage"));
    }
    if batch.len() != hyper.lambda {
        return Err(Error::invalid(format!(
            "hyperparameters are for lambda={}, batch has {} entries",
            hyper.lambda,
            batch.len()
        )));
    }
    let n = dist.param_dim();
    let sigma = dist.step_size();
    let weights = recombination_weights(hyper.lambda, hyper.mu)?;

    let w_next = fit_policy_mean(batch, &weights, phi, hyper.gamma)?;

    // Mean feature vector of the generation and the scaled mean shift.
    let lambda = batch.len() as f64;
    let mut phi_hat = DVector::zeros(dist.w.nrows());
    for e in batch.entries() {
        phi_hat += phi.apply(&e.context);
    }
    phi_hat /= lambda;
    let y = (w_next.transpose() * &phi_hat - dist.w.transpose() * &phi_hat) / sigma;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::divergence("mean shift y is non-finite"));
    }

    let inv_sqrt = matrix_inv_sqrt(&dist.cov)?;
    let cs = hyper.c_sigma;
    let path_sigma =
        (1.0 - cs) * &dist.path_sigma + (cs * (2.0 - cs) * hyper.mu_eff).sqrt() * (&inv_sqrt * &y);
    if path_sigma.iter().any(|v| !v.is_finite()) {
        return Err(Error::divergence("step-size path is non-finite"));
    }

    let t = dist.generation;
    let decay = 1.0 - (1.0 - cs).powi((2 * t.min(100_000)) as i32);
    let h_sigma = if path_sigma.norm_squared() / (n as f64 * decay.sqrt())
        < 2.0 + 4.0 / (n as f64 + 1.0)
    {
        1.0
    } else {
        0.0
    };

    let cc = hyper.c_c;
    let path_c =
        (1.0 - cc) * &dist.path_c + h_sigma * (cc * (2.0 - cc) * hyper.mu_eff).sqrt() * &y;
    let c_1a = hyper.c_1 * (1.0 - (1.0 - h_sigma) * cc * (2.0 - cc));

    let (s_pos, s_neg) = active_rank_mu_terms(batch, dist, &weights, phi)?;
    let rank_one = &path_c * path_c.transpose();
    let cov = if hyper.active {
        let cn = hyper.c_mu_neg;
        (1.0 - c_1a - hyper.c_mu - 0.5 * cn) * &dist.cov
            + hyper.c_1 * rank_one
            + (hyper.c_mu + 0.5 * cn) * s_pos
            - cn * s_neg
    } else {
        (1.0 - c_1a - hyper.c_mu) * &dist.cov + hyper.c_1 * rank_one + hyper.c_mu * s_pos
    };

    let step_size = sigma * step_size_factor(hyper, path_sigma.norm());
    if !step_size.is_finite() || step_size <= 0.0 {
        return Err(Error::divergence(format!("step size became {step_size}")));
    }

    let cov = repair_covariance(cov)?;

    Ok(SearchDistribution {
        w: w_next,
        cov,
        step_size,
        path_sigma,
        path_c,
        generation: t + 1,
    })
}

/// Symmetrizes the covariance and floors its eigenvalues at
/// `1e-20 · trace / n`, rebuilding the matrix from the clipped spectrum.
fn repair_covariance(cov: DMatrix<f64>) -> Result<DMatrix<f64>> {
    if cov.iter().any(|v| !v.is_finite()) {
        return Err(Error::divergence("covariance has non-finite entries"));
    }
    let n = cov.nrows();
    let sym = (&cov + cov.transpose()) * 0.5;
    let trace = sym.trace();
    if !(trace > 0.0) {
        return Err(Error::divergence(format!("covariance trace became {trace}")));
    }
    let floor = EIG_FLOOR_REL * trace / n as f64;
    let mut eigen = sym.clone().symmetric_eigen();
    let mut clipped = false;
    for v in eigen.eigenvalues.iter_mut() {
        if *v < floor {
            *v = floor;
            clipped = true;
        }
    }
    if !clipped {
        return Ok(sym);
    }
    let rebuilt = &eigen.eigenvectors
        * DMatrix::from_diagonal(&eigen.eigenvalues)
        * eigen.eigenvectors.transpose();
    Ok((&rebuilt + rebuilt.transpose()) * 0.5)
}
