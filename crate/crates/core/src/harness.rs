//! Seeded experiment runner: composes problems with optimizer variants,
//! records learning curves, aggregates runs, and writes CSV.
//!
//! Reproducibility contract: the problem instance (the context-shift matrix)
//! is derived from the base seed alone, the context stream from the base
//! seed and run index, and the optimizer stream from the base seed, run
//! index, and method — so every method run under one base seed faces the
//! same problem instance and the same per-generation context sequence.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::dmp_env::{test_context_grid, viapoint_return, ViapointProblem};
use crate::error::{Error, Result};
use crate::features::FeatureMap;
use crate::objectives::{BaseFunction, BaseFunctionKind, ContextualObjective};
use crate::optimizer::{
    compute_advantages, default_hyperparameters, fit_baseline, recombination_weights,
    update_distribution, GenerationBatch, Hyperparameters, SearchDistribution,
};
use crate::surrogate::{should_exploit, surrogate_generation, Archive, SurrogateConfig};
use crate::Context;

/// Any |return| beyond this marks the run divergent.
const RETURN_DIVERGENCE_LIMIT: f64 = 1e100;
/// Seed offset separating the context stream from optimizer streams.
const CONTEXT_STREAM_OFFSET: u64 = 900_000_000;

// ---------------------------------------------------------------------------
// Problems and methods
// ---------------------------------------------------------------------------

/// Every benchmark the runner knows about.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Sphere,
    Rosenbrock,
    Ackley,
    Ellipsoidal,
    Discus,
    DiffPowers,
    Viapoint,
}

impl ProblemKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "sphere" => Ok(Self::Sphere),
            "rosenbrock" => Ok(Self::Rosenbrock),
            "ackley" => Ok(Self::Ackley),
            "ellipsoidal" => Ok(Self::Ellipsoidal),
            "discus" => Ok(Self::Discus),
            "diff_powers" => Ok(Self::DiffPowers),
            "viapoint" => Ok(Self::Viapoint),
            other => Err(Error::invalid(format!(
                "unknown problem '{other}' (expected sphere, rosenbrock, ackley, ellipsoidal, \
                 discus, diff_powers, or viapoint)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Sphere => "sphere",
            Self::Rosenbrock => "rosenbrock",
            Self::Ackley => "ackley",
            Self::Ellipsoidal => "ellipsoidal",
            Self::Discus => "discus",
            Self::DiffPowers => "diff_powers",
            Self::Viapoint => "viapoint",
        }
    }

    fn base_kind(&self) -> Option<BaseFunctionKind> {
        match self {
            Self::Sphere => Some(BaseFunctionKind::Sphere),
            Self::Rosenbrock => Some(BaseFunctionKind::Rosenbrock),
            Self::Ackley => Some(BaseFunctionKind::Ackley),
            Self::Ellipsoidal => Some(BaseFunctionKind::Ellipsoidal),
            Self::Discus => Some(BaseFunctionKind::Discus),
            Self::DiffPowers => Some(BaseFunctionKind::DifferentPowers),
            Self::Viapoint => None,
        }
    }
}

/// Optimizer variants: plain contextual CMA-ES, its active-update version,
/// and both with the ranking-SVM surrogate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    CCmaEs,
    ActiveCCmaEs,
    CAcmEs,
    ActiveCAcmEs,
}

impl Method {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "ccmaes" => Ok(Self::CCmaEs),
            "accmaes" => Ok(Self::ActiveCCmaEs),
            "cacmes" => Ok(Self::CAcmEs),
            "acacmes" => Ok(Self::ActiveCAcmEs),
            other => Err(Error::invalid(format!(
                "unknown method '{other}' (expected ccmaes, accmaes, cacmes, or acacmes)"
            ))),
        }
    }

    pub fn uses_surrogate(&self) -> bool {
        matches!(self, Self::CAcmEs | Self::ActiveCAcmEs)
    }

    pub fn is_active(&self) -> bool {
        matches!(self, Self::ActiveCCmaEs | Self::ActiveCAcmEs)
    }

    fn code(&self) -> u64 {
        match self {
            Self::CCmaEs => 0,
            Self::ActiveCCmaEs => 1,
            Self::CAcmEs => 2,
            Self::ActiveCAcmEs => 3,
        }
    }
}

/// Method label used in CSV output; a trailing `+` marks the aggressive
/// surrogate configuration.
pub fn method_label(method: Method, aggressive: bool) -> String {
    let base = match method {
        Method::CCmaEs => "ccmaes",
        Method::ActiveCCmaEs => "accmaes",
        Method::CAcmEs => "cacmes",
        Method::ActiveCAcmEs => "acacmes",
    };
    if aggressive {
        format!("{base}+")
    } else {
        base.to_string()
    }
}

/// Seed of the optimizer stream for one (run, method) pair.
pub fn optimizer_seed(base_seed: u64, run_index: usize, method: Method, aggressive: bool) -> u64 {
    let code = method.code() + if aggressive { 4 } else { 0 };
    base_seed
        .wrapping_add(1000u64.wrapping_mul(run_index as u64))
        .wrapping_add(code)
}

/// Seed of the context stream for one run; identical for every method.
pub fn context_seed(base_seed: u64, run_index: usize) -> u64 {
    base_seed
        .wrapping_add(CONTEXT_STREAM_OFFSET)
        .wrapping_add(run_index as u64)
}

/// A problem instance the runner can draw contexts from and evaluate.
#[derive(Debug, Clone)]
pub enum Problem {
    Benchmark(ContextualObjective),
    Viapoint(ViapointProblem),
}

impl Problem {
    /// Builds the instance for a config; the shift matrix of a benchmark is
    /// seeded with the base seed alone so methods share instances.
    pub fn build(config: &ExperimentConfig) -> Result<Self> {
        match config.problem.base_kind() {
            Some(kind) => {
                let base = BaseFunction::new(kind, config.n)?;
                Ok(Self::Benchmark(ContextualObjective::new(
                    base,
                    config.n_s,
                    config.base_seed,
                )?))
            }
            None => Ok(Self::Viapoint(ViapointProblem::new())),
        }
    }

    pub fn param_dim(&self) -> usize {
        match self {
            Self::Benchmark(o) => o.param_dim(),
            Self::Viapoint(v) => v.param_dim(),
        }
    }

    pub fn context_dim(&self) -> usize {
        match self {
            Self::Benchmark(o) => o.context_dim(),
            Self::Viapoint(v) => v.context_dim(),
        }
    }

    pub fn sample_context(&self, rng: &mut ChaCha12Rng) -> Context {
        match self {
            Self::Benchmark(o) => o.sample_context(rng),
            Self::Viapoint(v) => v.sample_training_context(rng),
        }
    }

    pub fn evaluate(&self, s: &Context, theta: &nalgebra::DVector<f64>) -> Result<f64> {
        match self {
            Self::Benchmark(o) => o.eval(s, theta),
            Self::Viapoint(v) => v.evaluate(s, theta),
        }
    }

    /// Policy feature map: affine context features everywhere, so the policy
    /// mean can represent the affine optimum `x* − G·s` of a shifted
    /// benchmark (pure linear features cannot express the intercept).
    fn phi(&self) -> FeatureMap {
        FeatureMap::Affine
    }
}

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

/// Full description of one experiment. Optional fields fall back to the
/// problem- and method-dependent defaults.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    pub method: Method,
    /// Exploit the surrogate aggressively (λ′ = 10λ, n_start = 100).
    pub aggressive: bool,
    pub n: usize,
    pub n_s: usize,
    pub lambda: usize,
    /// Virtual generation size; defaults to 3λ (10λ when aggressive).
    pub lambda_prime: Option<usize>,
    /// Real evaluations before surrogate exploitation; defaults to 3000
    /// (100 when aggressive, 1000 on the viapoint problem).
    pub n_start: Option<u64>,
    pub c_pow: f64,
    pub n_iter: usize,
    pub gamma: f64,
    /// Initial step size; defaults to 1 (14.5 on Ackley, 0.05 on viapoint).
    pub sigma0: Option<f64>,
    pub generations: usize,
    pub runs: usize,
    pub base_seed: u64,
}

impl ExperimentConfig {
    /// Benchmark defaults: 20 parameters, one context variable, λ = 50.
    pub fn benchmark(problem: ProblemKind, method: Method) -> Self {
        Self {
            problem,
            method,
            aggressive: false,
            n: 20,
            n_s: 1,
            lambda: 50,
            lambda_prime: None,
            n_start: None,
            c_pow: 1.0,
            n_iter: 1000,
            gamma: crate::optimizer::DEFAULT_RIDGE,
            sigma0: None,
            generations: 200,
            runs: 20,
            base_seed: 0,
        }
    }

    /// Viapoint defaults: λ = 100, n_start = 1000, small initial step size.
    pub fn viapoint(method: Method) -> Self {
        Self {
            n: 20,
            n_s: 2,
            lambda: 100,
            ..Self::benchmark(ProblemKind::Viapoint, method)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs < 1 {
            return Err(Error::invalid("runs must be at least 1"));
        }
        if self.generations < 1 {
            return Err(Error::invalid("generations must be at least 1"));
        }
        if self.lambda < 2 {
            return Err(Error::invalid("lambda must be at least 2"));
        }
        if self.aggressive && !self.method.uses_surrogate() {
            return Err(Error::invalid(
                "the aggressive flag only applies to surrogate methods (cacmes, acacmes)",
            ));
        }
        if self.problem == ProblemKind::Viapoint {
            if self.n != 20 || self.n_s != 2 {
                return Err(Error::invalid(
                    "the viapoint problem is fixed at n=20 parameters and n_s=2 context variables",
                ));
            }
        } else if self.n_s < 1 {
            return Err(Error::invalid("benchmarks need at least one context variable"));
        }
        if self.method.uses_surrogate() {
            self.surrogate_config().validate(self.lambda)?;
        }
        Ok(())
    }

    pub fn resolved_sigma0(&self) -> f64 {
        self.sigma0.unwrap_or(match self.problem {
            ProblemKind::Ackley => 14.5,
            ProblemKind::Viapoint => 0.05,
            _ => 1.0,
        })
    }

    pub fn surrogate_config(&self) -> SurrogateConfig {
        let lambda_prime = self
            .lambda_prime
            .unwrap_or(if self.aggressive { 10 * self.lambda } else { 3 * self.lambda });
        let n_start = self.n_start.unwrap_or(if self.aggressive {
            100
        } else if self.problem == ProblemKind::Viapoint {
            1000
        } else {
            3000
        });
        SurrogateConfig {
            lambda_prime,
            n_start,
            c_pow: self.c_pow,
            n_iter: self.n_iter,
        }
    }

    pub fn label(&self) -> String {
        method_label(self.method, self.aggressive)
    }
}

// ---------------------------------------------------------------------------
// Generation stepper
// ---------------------------------------------------------------------------

/// One generation's summary as it lands in the learning curve.
#[derive(Debug, Clone, Copy)]
pub struct GenerationRecord {
    /// 1-based generation counter.
    pub generation: usize,
    /// Cumulative real-episode budget, `generation · λ`.
    pub episodes: u64,
    /// Mean return of the generation's real samples; NaN once diverged.
    pub mean_value: f64,
}

/// Drives one learning run generation by generation.
///
/// Divergence (non-finite optimizer state, factorization breakdown, or a
/// |return| beyond 1e100) is latched: the offending generation and all later
/// ones record NaN and the simulation stops doing work. Argument errors still
/// surface as errors.
pub struct PolicySearch<'p> {
    problem: &'p Problem,
    phi: FeatureMap,
    psi: FeatureMap,
    hyper: Hyperparameters,
    /// Hyperparameters of λ′-sized surrogate updates.
    hyper_virtual: Option<Hyperparameters>,
    surrogate: Option<(Archive, SurrogateConfig)>,
    dist: SearchDistribution,
    opt_rng: ChaCha12Rng,
    ctx_rng: ChaCha12Rng,
    completed: usize,
    real_evals: u64,
    diverged_at: Option<usize>,
}

impl<'p> PolicySearch<'p> {
    pub fn new(
        problem: &'p Problem,
        config: &ExperimentConfig,
        opt_seed: u64,
        ctx_seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        let n = problem.param_dim();
        let n_s = problem.context_dim();
        let phi = problem.phi();
        let psi = FeatureMap::Quadratic;

        let weights = recombination_weights(config.lambda, (config.lambda / 2).max(1))?;
        let mut hyper = default_hyperparameters(config.lambda, n, n_s, &weights)?;
        hyper.gamma = config.gamma;
        hyper.active = config.method.is_active();

        let (hyper_virtual, surrogate) = if config.method.uses_surrogate() {
            let sc = config.surrogate_config();
            let wv = recombination_weights(sc.lambda_prime, (sc.lambda_prime / 2).max(1))?;
            let mut hv = default_hyperparameters(sc.lambda_prime, n, n_s, &wv)?;
            hv.gamma = config.gamma;
            hv.active = hyper.active;
            (Some(hv), Some((Archive::new(n)?, sc)))
        } else {
            (None, None)
        };

        Ok(Self {
            problem,
            phi,
            psi,
            hyper,
            hyper_virtual,
            surrogate,
            dist: SearchDistribution::new(phi, n_s, n, config.resolved_sigma0())?,
            opt_rng: ChaCha12Rng::seed_from_u64(opt_seed),
            ctx_rng: ChaCha12Rng::seed_from_u64(ctx_seed),
            completed: 0,
            real_evals: 0,
            diverged_at: None,
        })
    }

    pub fn distribution(&self) -> &SearchDistribution {
        &self.dist
    }

    pub fn diverged(&self) -> bool {
        self.diverged_at.is_some()
    }

    pub fn diverged_at(&self) -> Option<usize> {
        self.diverged_at
    }

    pub fn real_evaluations(&self) -> u64 {
        self.real_evals
    }

    pub fn completed_generations(&self) -> usize {
        self.completed
    }

    /// Runs one generation and returns its record.
    pub fn step(&mut self) -> Result<GenerationRecord> {
        let generation = self.completed + 1;
        let episodes = generation as u64 * self.hyper.lambda as u64;
        let mean_value = if self.diverged_at.is_some() {
            f64::NAN
        } else {
            match self.advance() {
                Ok(mean) => mean,
                Err(Error::Degenerate(_)) | Err(Error::Divergence(_)) => {
                    self.diverged_at = Some(generation);
                    f64::NAN
                }
                Err(e) => return Err(e),
            }
        };
        self.completed = generation;
        Ok(GenerationRecord {
            generation,
            episodes,
            mean_value,
        })
    }

    fn advance(&mut self) -> Result<f64> {
        let lambda = self.hyper.lambda;
        let mut batch = GenerationBatch::new();
        for _ in 0..lambda {
            let s = self.problem.sample_context(&mut self.ctx_rng);
            let theta = self
                .dist
                .sample_parameters(&self.phi.apply(&s), &mut self.opt_rng)?;
            if theta.iter().any(|v| !v.is_finite()) {
                return Err(Error::divergence("sampled parameters are non-finite"));
            }
            let ret = self.problem.evaluate(&s, &theta)?;
            self.real_evals += 1;
            if !ret.is_finite() || ret.abs() > RETURN_DIVERGENCE_LIMIT {
                return Err(Error::divergence(format!("return became {ret}")));
            }
            batch.push_real(s, theta, ret);
        }

        let baseline = fit_baseline(&batch, self.psi, self.hyper.gamma)?;
        compute_advantages(&mut batch, &baseline)?;
        let mean_value = batch.mean_real_return();

        if let Some((archive, sc)) = self.surrogate.as_mut() {
            for e in batch.entries() {
                let r = e.ret.expect("real batch entries always carry a return");
                archive.insert(e.context.clone(), e.params.clone(), r);
            }
            if should_exploit(archive, sc) {
                let virtual_batch = surrogate_generation(
                    &self.dist,
                    archive,
                    &baseline,
                    &batch,
                    sc,
                    self.phi,
                    &mut self.opt_rng,
                )?;
                let hv = self
                    .hyper_virtual
                    .as_ref()
                    .expect("surrogate methods always carry virtual hyperparameters");
                self.dist = update_distribution(&self.dist, &virtual_batch, hv, self.phi)?;
                if !self.dist.is_finite() {
                    return Err(Error::divergence("search distribution is non-finite"));
                }
                return Ok(mean_value);
            }
        }

        batch.sort_by_advantage();
        self.dist = update_distribution(&self.dist, &batch, &self.hyper, self.phi)?;
        if !self.dist.is_finite() {
            return Err(Error::divergence("search distribution is non-finite"));
        }
        Ok(mean_value)
    }
}

// ---------------------------------------------------------------------------
// Runs, aggregation, CSV
// ---------------------------------------------------------------------------

/// One run's learning curve: per generation, the episode budget and the mean
/// return over that generation's real samples.
#[derive(Debug, Clone)]
pub struct LearningCurve {
    pub method: String,
    pub run: usize,
    pub points: Vec<GenerationRecord>,
    pub diverged: bool,
}

impl LearningCurve {
    pub fn final_value(&self) -> f64 {
        self.points.last().map_or(f64::NAN, |p| p.mean_value)
    }
}

/// Cross-run statistics of one generation.
#[derive(Debug, Clone, Copy)]
pub struct AggregateRecord {
    pub generation: usize,
    pub episodes: u64,
    pub mean: f64,
    pub std: f64,
    pub n_runs: usize,
}

/// Curves of all runs plus their per-generation aggregate.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub method: String,
    pub curves: Vec<LearningCurve>,
    pub aggregate: Vec<AggregateRecord>,
}

impl ExperimentResult {
    /// The final-generation mean across runs: the summary statistic reported
    /// per experiment.
    pub fn final_mean(&self) -> f64 {
        self.aggregate.last().map_or(f64::NAN, |a| a.mean)
    }

    pub fn all_diverged(&self) -> bool {
        self.curves.iter().all(|c| c.diverged)
    }
}

/// Executes one seeded run of the configured experiment.
pub fn run_single(config: &ExperimentConfig, run_index: usize) -> Result<LearningCurve> {
    let problem = Problem::build(config)?;
    run_single_on(&problem, config, run_index)
}

/// [`run_single`] against an externally built problem instance.
pub fn run_single_on(
    problem: &Problem,
    config: &ExperimentConfig,
    run_index: usize,
) -> Result<LearningCurve> {
    let opt_seed = optimizer_seed(config.base_seed, run_index, config.method, config.aggressive);
    let ctx_seed = context_seed(config.base_seed, run_index);
    let mut search = PolicySearch::new(problem, config, opt_seed, ctx_seed)?;
    let mut points = Vec::with_capacity(config.generations);
    for _ in 0..config.generations {
        points.push(search.step()?);
    }
    Ok(LearningCurve {
        method: config.label(),
        run: run_index,
        points,
        diverged: search.diverged(),
    })
}

/// Runs all configured repetitions and aggregates them. Divergent runs enter
/// the aggregate as NaN and propagate into the mean, matching how divergence
/// is reported downstream.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let problem = Problem::build(config)?;
    let mut curves = Vec::with_capacity(config.runs);
    for run_index in 0..config.runs {
        curves.push(run_single_on(&problem, config, run_index)?);
    }
    let aggregate = aggregate_curves(&curves);
    Ok(ExperimentResult {
        method: config.label(),
        curves,
        aggregate,
    })
}

/// Per-generation mean and population standard deviation across runs.
pub fn aggregate_curves(curves: &[LearningCurve]) -> Vec<AggregateRecord> {
    let Some(first) = curves.first() else {
        return Vec::new();
    };
    let n_runs = curves.len();
    first
        .points
        .iter()
        .enumerate()
        .map(|(g, point)| {
            let mean = curves.iter().map(|c| c.points[g].mean_value).sum::<f64>() / n_runs as f64;
            let var = curves
                .iter()
                .map(|c| (c.points[g].mean_value - mean).powi(2))
                .sum::<f64>()
                / n_runs as f64;
            AggregateRecord {
                generation: point.generation,
                episodes: point.episodes,
                mean,
                std: var.sqrt(),
                n_runs,
            }
        })
        .collect()
}

/// Deterministic evaluation of a trained viapoint policy on the 25-context
/// test grid: rolls out the distribution mean for every grid context and
/// averages the returns.
pub fn evaluate_viapoint_policy(dist: &SearchDistribution) -> Result<f64> {
    let problem = ViapointProblem::new();
    let phi = FeatureMap::Affine;
    let grid = test_context_grid();
    let mut total = 0.0;
    for s in &grid {
        let theta = dist.mean(&phi.apply(s));
        let traj = problem.dmp().rollout(theta.as_slice())?;
        total += viapoint_return(&traj, s)?;
    }
    Ok(total / grid.len() as f64)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes the per-run curves: `method,run,generation,episodes,mean_value`,
/// one line per generation, NaN for diverged generations.
pub fn write_runs_csv(curves: &[LearningCurve], path: &Path) -> Result<()> {
    let mut out = String::from("method,run,generation,episodes,mean_value\n");
    for curve in curves {
        for p in &curve.points {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                curve.method, curve.run, p.generation, p.episodes, p.mean_value
            ));
        }
    }
    write_file(path, &out)
}

/// Writes the aggregate table: `method,generation,episodes,mean,std,n_runs`.
pub fn write_aggregate_csv(
    method: &str,
    aggregate: &[AggregateRecord],
    path: &Path,
) -> Result<()> {
    let mut out = String::from("method,generation,episodes,mean,std,n_runs\n");
    for a in aggregate {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            method, a.generation, a.episodes, a.mean, a.std, a.n_runs
        ));
    }
    write_file(path, &out)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut file = fs::File::create(path).map_err(io_err(path))?;
    file.write_all(contents.as_bytes()).map_err(io_err(path))?;
    Ok(())
}

/// Writes both CSVs of an experiment into `out_dir` and returns their paths.
pub fn export_experiment(
    result: &ExperimentResult,
    config: &ExperimentConfig,
    out_dir: &Path,
) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let stem = format!("{}_{}", config.problem.name(), config.label());
    let runs_path = out_dir.join(format!("{stem}_runs.csv"));
    let agg_path = out_dir.join(format!("{stem}_aggregate.csv"));
    write_runs_csv(&result.curves, &runs_path)?;
    write_aggregate_csv(&result.method, &result.aggregate, &agg_path)?;
    Ok((runs_path, agg_path))
}
