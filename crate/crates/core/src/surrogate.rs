//! Comparison-based surrogate: a ranking SVM over archived samples.
//!
//! The surrogate never predicts returns. It learns a ranking function from
//! adjacent-pair order constraints over the archive (ordered by advantage),
//! with rank-dependent costs so mistakes near the top are punished hardest.
//! Each exploiting generation is filled up to λ′ entries with virtual samples
//! drawn from the current search distribution at archived contexts, and the
//! whole generation is reordered by predicted ranking value.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::features::FeatureMap;
use crate::optimizer::{matrix_inv_sqrt, BaselineModel, GenerationBatch, SearchDistribution};
use crate::Context;

/// Base cost multiplier of a ranking error.
const COST_SCALE: f64 = 1e6;

// ---------------------------------------------------------------------------
// Archive
// ---------------------------------------------------------------------------

/// Capacity of the sample archive for `d` optimized parameters:
/// `40 + ⌊4·d^1.7⌋`.
pub fn archive_capacity(d: usize) -> Result<usize> {
    if d < 1 {
        return Err(Error::invalid("parameter dimension must be at least 1"));
    }
    Ok(40 + (4.0 * (d as f64).powf(1.7)).floor() as usize)
}

/// One evaluated sample kept for surrogate training.
#[derive(Debug, Clone)]
pub struct ArchiveEntry {
    pub context: Context,
    pub params: DVector<f64>,
    pub ret: f64,
}

/// FIFO ring of the most recent real evaluations.
#[derive(Debug, Clone)]
pub struct Archive {
    entries: VecDeque<ArchiveEntry>,
    capacity: usize,
    real_eval_count: u64,
}

impl Archive {
    /// Archive sized for `param_dim` optimized parameters.
    pub fn new(param_dim: usize) -> Result<Self> {
        Ok(Self::with_capacity(archive_capacity(param_dim)?))
    }

    pub fn with_capacity(capacity: usize) -> Self {
        Self {
            entries: VecDeque::with_capacity(capacity),
            capacity,
            real_eval_count: 0,
        }
    }

    /// Inserts a sample, evicting the oldest entry once full.
    pub fn insert(&mut self, context: Context, params: DVector<f64>, ret: f64) {
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(ArchiveEntry { context, params, ret });
        self.real_eval_count += 1;
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Total real objective evaluations ever inserted (not just retained).
    pub fn real_eval_count(&self) -> u64 {
        self.real_eval_count
    }

    pub fn iter(&self) -> impl Iterator<Item = &ArchiveEntry> {
        self.entries.iter()
    }

    pub fn get(&self, idx: usize) -> &ArchiveEntry {
        &self.entries[idx]
    }
}

// ---------------------------------------------------------------------------
// Surrogate configuration and gating
// ---------------------------------------------------------------------------

/// Tuning knobs of the surrogate-assisted update.
#[derive(Debug, Clone)]
pub struct SurrogateConfig {
    /// Generation size after filling with virtual samples (λ′ ≥ λ).
    pub lambda_prime: usize,
    /// Real evaluations required before the surrogate is exploited.
    pub n_start: u64,
    /// Exponent of the rank-dependent cost schedule.
    pub c_pow: f64,
    /// SMO coordinate-ascent iterations per training sample.
    pub n_iter: usize,
}

impl SurrogateConfig {
    pub fn validate(&self, lambda: usize) -> Result<()> {
        if self.lambda_prime < lambda {
            return Err(Error::invalid(format!(
                "lambda_prime ({}) must be at least lambda ({lambda})",
                self.lambda_prime
            )));
        }
        if !(self.c_pow > 0.0) {
            return Err(Error::invalid(format!("c_pow must be positive, got {}", self.c_pow)));
        }
        if self.n_iter < 1 {
            return Err(Error::invalid("n_iter must be at least 1"));
        }
        Ok(())
    }
}

/// True once enough real evaluations exist to train and use the surrogate.
pub fn should_exploit(archive: &Archive, config: &SurrogateConfig) -> bool {
    archive.real_eval_count() >= config.n_start && archive.len() >= 2
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

/// Per-component mean and standard deviation of the training contexts.
/// Context variables are treated as uncorrelated; a zero-variance component
/// is centered but passed through unscaled.
#[derive(Debug, Clone)]
pub struct ContextStats {
    pub mean: DVector<f64>,
    pub std: DVector<f64>,
}

impl ContextStats {
    pub fn from_contexts<'a, I>(contexts: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a Context>,
    {
        let mut iter = contexts.into_iter();
        let first = iter
            .next()
            .ok_or_else(|| Error::invalid("context statistics need at least one context"))?;
        let dim = first.len();
        let mut sum = first.clone();
        let mut sum_sq = first.component_mul(first);
        let mut count = 1usize;
        for s in iter {
            sum += s;
            sum_sq += s.component_mul(s);
            count += 1;
        }
        let nf = count as f64;
        let mean = sum / nf;
        let std = DVector::from_fn(dim, |i, _| {
            (sum_sq[i] / nf - mean[i] * mean[i]).max(0.0).sqrt()
        });
        Ok(Self { mean, std })
    }

    /// Stats that leave contexts untouched; for corpora without contexts.
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: DVector::zeros(dim),
            std: DVector::from_element(dim, 1.0),
        }
    }

    /// Z-scores a context (components with zero variance are only centered).
    pub fn normalize(&self, s: &Context) -> DVector<f64> {
        DVector::from_fn(s.len(), |i, _| {
            let centered = s[i] - self.mean[i];
            if self.std[i] > 0.0 {
                centered / self.std[i]
            } else {
                centered
            }
        })
    }
}

/// Maps raw samples into the distribution-relative feature space: z-scored
/// context concatenated with `Σ^{-1/2}(θ − Wᵀφ(s))`. The step size is
/// deliberately not divided out of the parameter part.
#[derive(Debug, Clone)]
pub struct Normalizer {
    whitener: DMatrix<f64>,
    policy: DMatrix<f64>,
    stats: ContextStats,
    phi: FeatureMap,
}

impl Normalizer {
    pub fn new(dist: &SearchDistribution, stats: ContextStats, phi: FeatureMap) -> Result<Self> {
        let whitener = matrix_inv_sqrt(dist.covariance())?;
        Ok(Self {
            whitener,
            policy: dist.policy_coefficients().clone(),
            stats,
            phi,
        })
    }

    pub fn stats(&self) -> &ContextStats {
        &self.stats
    }

    pub fn normalize(&self, s: &Context, theta: &DVector<f64>) -> DVector<f64> {
        let ctx_part = self.stats.normalize(s);
        let deviation = theta - self.policy.transpose() * self.phi.apply(s);
        let param_part = &self.whitener * deviation;
        let mut out = DVector::zeros(ctx_part.len() + param_part.len());
        out.rows_mut(0, ctx_part.len()).copy_from(&ctx_part);
        out.rows_mut(ctx_part.len(), param_part.len()).copy_from(&param_part);
        out
    }
}

/// One-off normalization of a single sample (builds the whitener each call;
/// use [`Normalizer`] for batches).
pub fn normalize_sample(
    dist: &SearchDistribution,
    stats: &ContextStats,
    phi: FeatureMap,
    s: &Context,
    theta: &DVector<f64>,
) -> Result<DVector<f64>> {
    Ok(Normalizer::new(dist, stats.clone(), phi)?.normalize(s, theta))
}

// ---------------------------------------------------------------------------
// Ranking SVM
// ---------------------------------------------------------------------------

/// RBF kernel bandwidth: the mean Euclidean distance over all unordered
/// pairs of training features.
pub fn kernel_width(features: &[DVector<f64>]) -> Result<f64> {
    if features.len() < 2 {
        return Err(Error::invalid("kernel width needs at least two features"));
    }
    let mut sum = 0.0;
    let mut pairs = 0u64;
    for i in 0..features.len() {
        for j in (i + 1)..features.len() {
            sum += (&features[i] - &features[j]).norm();
            pairs += 1;
        }
    }
    let width = sum / pairs as f64;
    if !width.is_finite() {
        return Err(Error::divergence("pairwise feature distances are non-finite"));
    }
    if width == 0.0 {
        return Err(Error::degenerate("all training features are identical"));
    }
    Ok(width)
}

/// Cost schedule over the `N−1` adjacent-pair constraints:
/// `C_i = 10⁶ (N−i)^{c_pow}`, strictly decreasing toward `C_{N−1} = 10⁶`.
pub fn rank_costs(n: usize, c_pow: f64) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::invalid("cost schedule needs at least two samples"));
    }
    Ok((1..n)
        .map(|i| COST_SCALE * ((n - i) as f64).powf(c_pow))
        .collect())
}

fn rbf(a: &DVector<f64>, b: &DVector<f64>, width: f64) -> f64 {
    (-(a - b).norm_squared() / (2.0 * width * width)).exp()
}

/// A trained comparison surrogate. Higher predicted values mean better rank.
#[derive(Debug, Clone)]
pub struct RankingModel {
    features: Vec<DVector<f64>>,
    alpha: Vec<f64>,
    costs: Vec<f64>,
    kernel_width: f64,
    context_stats: ContextStats,
}

impl RankingModel {
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn kernel_width(&self) -> f64 {
        self.kernel_width
    }

    pub fn context_stats(&self) -> &ContextStats {
        &self.context_stats
    }

    pub fn training_size(&self) -> usize {
        self.features.len()
    }

    /// Ranking value `f(x) = Σ α_i (k(x_i, x) − k(x_{i+1}, x))`.
    pub fn predict_rank(&self, x: &DVector<f64>) -> f64 {
        let mut prev = rbf(&self.features[0], x, self.kernel_width);
        let mut value = 0.0;
        for (i, &a) in self.alpha.iter().enumerate() {
            let next = rbf(&self.features[i + 1], x, self.kernel_width);
            value += a * (prev - next);
            prev = next;
        }
        value
    }
}

/// Per-sweep diagnostics of the dual ascent.
#[derive(Debug, Clone, Default)]
pub struct SmoTrace {
    /// Dual objective value after each completed sweep.
    pub dual_per_sweep: Vec<f64>,
    /// Whether `0 ≤ α_i ≤ C_i` held for all constraints after each sweep.
    pub feasible_per_sweep: Vec<bool>,
}

/// Trains the ranking SVM on features ordered best-to-worst.
///
/// Runs `n_iter · N` single-constraint coordinate-ascent steps, sweeping
/// cyclically over the `N−1` adjacent-pair constraints; each step solves its
/// one-dimensional subproblem exactly and clips the coefficient to
/// `[0, C_i]`, so the dual objective never decreases.
pub fn train_ranking_svm(
    features: Vec<DVector<f64>>,
    costs: &[f64],
    kernel_width: f64,
    n_iter: usize,
    context_stats: ContextStats,
) -> Result<RankingModel> {
    train_impl(features, costs, kernel_width, n_iter, context_stats, None).map(|(m, _)| m)
}

/// [`train_ranking_svm`] with per-sweep dual/feasibility diagnostics.
pub fn train_ranking_svm_traced(
    features: Vec<DVector<f64>>,
    costs: &[f64],
    kernel_width: f64,
    n_iter: usize,
    context_stats: ContextStats,
) -> Result<(RankingModel, SmoTrace)> {
    let mut trace = SmoTrace::default();
    let (model, _) = train_impl(
        features,
        costs,
        kernel_width,
        n_iter,
        context_stats,
        Some(&mut trace),
    )?;
    Ok((model, trace))
}

fn train_impl(
    features: Vec<DVector<f64>>,
    costs: &[f64],
    kernel_width: f64,
    n_iter: usize,
    context_stats: ContextStats,
    mut trace: Option<&mut SmoTrace>,
) -> Result<(RankingModel, f64)> {
    let n = features.len();
    if n < 2 {
        return Err(Error::invalid("ranking SVM needs at least two samples"));
    }
    if costs.len() != n - 1 {
        return Err(Error::invalid(format!(
            "expected {} costs for {n} samples, got {}",
            n - 1,
            costs.len()
        )));
    }
    if !(kernel_width > 0.0) || !kernel_width.is_finite() {
        return Err(Error::invalid(format!(
            "kernel width must be positive and finite, got {kernel_width}"
        )));
    }
    if n_iter < 1 {
        return Err(Error::invalid("n_iter must be at least 1"));
    }

    // Point kernel matrix.
    let inv_two_w2 = 1.0 / (2.0 * kernel_width * kernel_width);
    let mut kernel = vec![0.0; n * n];
    for i in 0..n {
        kernel[i * n + i] = 1.0;
        for j in (i + 1)..n {
            let k = (-(&features[i] - &features[j]).norm_squared() * inv_two_w2).exp();
            if !k.is_finite() {
                return Err(Error::divergence("kernel value is non-finite"));
            }
            kernel[i * n + j] = k;
            kernel[j * n + i] = k;
        }
    }

    // Gram matrix of adjacent-pair difference vectors:
    // G_ij = k(i,j) − k(i,j+1) − k(i+1,j) + k(i+1,j+1).
    // Stored as f32: the sweeps below are memory-bound and the entries live
    // in [−4, 4]; steps and gradients stay f64.
    let m = n - 1;
    let mut gram = vec![0.0f32; m * m];
    for i in 0..m {
        for j in 0..m {
            gram[i * m + j] = (kernel[i * n + j] - kernel[i * n + j + 1]
                - kernel[(i + 1) * n + j]
                + kernel[(i + 1) * n + j + 1]) as f32;
        }
    }

    let mut alpha = vec![0.0; m];
    // grad_i = ∂dual/∂α_i = 1 − (Gα)_i; starts at 1 with α = 0.
    let mut grad = vec![1.0; m];
    let mut dual = 0.0;
    let total_steps = n_iter * n;
    let mut steps_in_sweep = 0usize;
    for step in 0..total_steps {
        let i = step % m;
        let gii = f64::from(gram[i * m + i]);
        if gii > 0.0 {
            let target = (alpha[i] + grad[i] / gii).clamp(0.0, costs[i]);
            let delta = target - alpha[i];
            if delta != 0.0 {
                // Each clipped exact 1-D step has δ·g − ½δ²G_ii ≥ 0, so the
                // tracked dual never decreases.
                dual += delta * grad[i] - 0.5 * delta * delta * gii;
                alpha[i] = target;
                let row = &gram[i * m..(i + 1) * m];
                for (g, &gr) in grad.iter_mut().zip(row.iter()) {
                    *g -= delta * f64::from(gr);
                }
            }
        }
        steps_in_sweep += 1;
        if steps_in_sweep == m {
            steps_in_sweep = 0;
            if let Some(t) = trace.as_deref_mut() {
                t.dual_per_sweep.push(dual);
                t.feasible_per_sweep.push(
                    alpha
                        .iter()
                        .zip(costs.iter())
                        .all(|(&a, &c)| (0.0..=c).contains(&a)),
                );
            }
        }
    }
    if !dual.is_finite() {
        return Err(Error::divergence("dual objective is non-finite"));
    }

    Ok((
        RankingModel {
            features,
            alpha,
            costs: costs.to_vec(),
            kernel_width,
            context_stats,
        },
        dual,
    ))
}

// ---------------------------------------------------------------------------
// Surrogate generation
// ---------------------------------------------------------------------------

/// Builds the λ′-sized generation used for a surrogate-assisted update.
///
/// The archive is re-scored with the current baseline, normalized relative to
/// the current distribution, and used to train the ranking model. The real
/// batch is then padded with `λ′ − λ` virtual samples (archived contexts,
/// parameters from the current distribution), every entry is scored by the
/// model, and the result is sorted by predicted ranking value. Real entries
/// keep their true returns; virtual entries carry none.
pub fn surrogate_generation<R: Rng>(
    dist: &SearchDistribution,
    archive: &Archive,
    baseline: &BaselineModel,
    real_batch: &GenerationBatch,
    config: &SurrogateConfig,
    phi: FeatureMap,
    rng: &mut R,
) -> Result<GenerationBatch> {
    if !should_exploit(archive, config) {
        return Err(Error::invalid(
            "surrogate gate is closed (too few real evaluations or archive entries)",
        ));
    }
    let lambda = real_batch.len();
    config.validate(lambda)?;

    // Rank the archive by advantage under the current baseline.
    let mut order: Vec<usize> = (0..archive.len()).collect();
    let advantages: Vec<f64> = archive
        .iter()
        .map(|e| e.ret - baseline.predict(&e.context))
        .collect();
    order.sort_by(|&a, &b| advantages[b].total_cmp(&advantages[a]));

    let stats = ContextStats::from_contexts(archive.iter().map(|e| &e.context))?;
    let normalizer = Normalizer::new(dist, stats, phi)?;
    let features: Vec<DVector<f64>> = order
        .iter()
        .map(|&i| {
            let e = archive.get(i);
            normalizer.normalize(&e.context, &e.params)
        })
        .collect();

    let width = kernel_width(&features)?;
    let costs = rank_costs(features.len(), config.c_pow)?;
    let model = train_ranking_svm(
        features,
        &costs,
        width,
        config.n_iter,
        normalizer.stats().clone(),
    )?;

    let mut generation = GenerationBatch::new();
    for e in real_batch.entries() {
        let score = model.predict_rank(&normalizer.normalize(&e.context, &e.params));
        generation.push_scored(e.context.clone(), e.params.clone(), e.ret, score);
    }
    for _ in lambda..config.lambda_prime {
        let idx = rng.gen_range(0..archive.len());
        let context = archive.get(idx).context.clone();
        let params = dist.sample_parameters(&phi.apply(&context), rng)?;
        let score = model.predict_rank(&normalizer.normalize(&context, &params));
        generation.push_scored(context, params, None, score);
    }
    generation.sort_by_advantage();
    Ok(generation)
}
