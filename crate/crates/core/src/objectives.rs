//! Contextual benchmark functions.
//!
//! Six standard black-box test functions are made contextual by shifting the
//! input with a random linear map of the context: the return of a sample
//! `(s, θ)` is `−f(θ + G·φ(s))`, so that maximizing the return minimizes the
//! shifted function. `G` is drawn once per problem instance from a seeded
//! stream so different methods can be compared on identical instances.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::Context;

/// The six base test functions. All are nonnegative with minimum 0 at the
/// origin, except Rosenbrock whose optimum is the all-ones vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseFunctionKind {
    Sphere,
    Rosenbrock,
    Ackley,
    Ellipsoidal,
    Discus,
    DifferentPowers,
}

impl BaseFunctionKind {
    /// Smallest input dimension the function's formula is defined for.
    fn min_dim(&self) -> usize {
        match self {
            BaseFunctionKind::Sphere | BaseFunctionKind::Ackley | BaseFunctionKind::Discus => 1,
            BaseFunctionKind::Rosenbrock
            | BaseFunctionKind::Ellipsoidal
            | BaseFunctionKind::DifferentPowers => 2,
        }
    }
}

/// A base function pinned to a fixed input dimension.
#[derive(Debug, Clone, Copy)]
pub struct BaseFunction {
    kind: BaseFunctionKind,
    dim: usize,
}

impl BaseFunction {
    pub fn new(kind: BaseFunctionKind, dim: usize) -> Result<Self> {
        if dim < kind.min_dim() {
            return Err(Error::invalid(format!(
                "{kind:?} requires dimension >= {}, got {dim}",
                kind.min_dim()
            )));
        }
        Ok(Self { kind, dim })
    }

    pub fn kind(&self) -> BaseFunctionKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The known minimizer (all-ones for Rosenbrock, origin otherwise).
    pub fn optimum(&self) -> DVector<f64> {
        match self.kind {
            BaseFunctionKind::Rosenbrock => DVector::from_element(self.dim, 1.0),
            _ => DVector::zeros(self.dim),
        }
    }

    /// Evaluates the function. Always nonnegative.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::invalid(format!(
                "input has length {}, function dimension is {}",
                x.len(),
                self.dim
            )));
        }
        let d = self.dim as f64;
        let value = match self.kind {
            BaseFunctionKind::Sphere => x.iter().map(|xi| xi * xi).sum(),
            BaseFunctionKind::Rosenbrock => x
                .windows(2)
                .map(|w| 100.0 * (w[0] * w[0] - w[1]).powi(2) + (w[0] - 1.0).powi(2))
                .sum(),
            BaseFunctionKind::Ackley => {
                let sum_sq: f64 = x.iter().map(|xi| xi * xi).sum();
                let sum_cos: f64 = x
                    .iter()
                    .map(|xi| (2.0 * std::f64::consts::PI * xi).cos())
                    .sum();
                -20.0 * (-0.2 * (sum_sq / d).sqrt()).exp() + 20.0 - (sum_cos / d).exp()
                    + std::f64::consts::E
            }
            BaseFunctionKind::Ellipsoidal => x
                .iter()
                .enumerate()
                .map(|(i, xi)| 10f64.powf(6.0 * i as f64 / (d - 1.0)) * xi * xi)
                .sum(),
            BaseFunctionKind::Discus => {
                1e6 * x[0] * x[0] + x[1..].iter().map(|xi| xi * xi).sum::<f64>()
            }
            BaseFunctionKind::DifferentPowers => x
                .iter()
                .enumerate()
                .map(|(i, xi)| xi.abs().powf(2.0 + 4.0 * i as f64 / (d - 1.0)))
                .sum::<f64>()
                .sqrt(),
        };
        Ok(value)
    }
}

/// Bounds on the Ackley function's effective input, applied component-wise.
const ACKLEY_BOUND: f64 = 32.5;

/// A base function shifted by a context-dependent offset: the return of a
/// sample is `−f(θ + G·φ(s))`, clamped to the function's bounds first when it
/// has any. `φ` is the identity here; the shift matrix `G` is fixed at
/// construction.
#[derive(Debug, Clone)]
pub struct ContextualObjective {
    base: BaseFunction,
    shift: DMatrix<f64>,
    context_dim: usize,
    bounds: Option<(f64, f64)>,
}

impl ContextualObjective {
    /// Builds an objective whose shift matrix has iid standard normal entries
    /// drawn from a generator seeded with `seed`. The same seed always yields
    /// the same instance.
    pub fn new(base: BaseFunction, context_dim: usize, seed: u64) -> Result<Self> {
        if context_dim == 0 {
            return Err(Error::invalid("context dimension must be at least 1"));
        }
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let shift = DMatrix::from_fn(base.dim(), context_dim, |_, _| rng.sample(StandardNormal));
        Self::with_shift(base, shift)
    }

    /// Builds an objective with an explicit shift matrix (`d × n_s`).
    pub fn with_shift(base: BaseFunction, shift: DMatrix<f64>) -> Result<Self> {
        if shift.nrows() != base.dim() {
            return Err(Error::invalid(format!(
                "shift matrix has {} rows, function dimension is {}",
                shift.nrows(),
                base.dim()
            )));
        }
        if shift.ncols() == 0 {
            return Err(Error::invalid("context dimension must be at least 1"));
        }
        let bounds = match base.kind() {
            BaseFunctionKind::Ackley => Some((-ACKLEY_BOUND, ACKLEY_BOUND)),
            _ => None,
        };
        Ok(Self {
            context_dim: shift.ncols(),
            base,
            shift,
            bounds,
        })
    }

    /// Builds an objective whose context does not influence the function
    /// (`G = 0`); useful for recovering plain non-contextual optimization.
    pub fn unshifted(base: BaseFunction, context_dim: usize) -> Result<Self> {
        Self::with_shift(base, DMatrix::zeros(base.dim(), context_dim))
    }

    pub fn base(&self) -> &BaseFunction {
        &self.base
    }

    pub fn param_dim(&self) -> usize {
        self.base.dim()
    }

    pub fn context_dim(&self) -> usize {
        self.context_dim
    }

    pub fn shift_matrix(&self) -> &DMatrix<f64> {
        &self.shift
    }

    /// The return `−f(clamp(θ + G·s))`. Nonpositive for every input.
    pub fn eval(&self, s: &Context, theta: &DVector<f64>) -> Result<f64> {
        if s.len() != self.context_dim {
            return Err(Error::invalid(format!(
                "context has length {}, expected {}",
                s.len(),
                self.context_dim
            )));
        }
        if theta.len() != self.base.dim() {
            return Err(Error::invalid(format!(
                "parameters have length {}, expected {}",
                theta.len(),
                self.base.dim()
            )));
        }
        let mut effective = theta + &self.shift * s;
        if let Some((lo, hi)) = self.bounds {
            for v in effective.iter_mut() {
                *v = v.clamp(lo, hi);
            }
        }
        Ok(-self.base.eval(effective.as_slice())?)
    }

    /// One training context: components iid uniform in `[1, 2)`.
    pub fn sample_context<R: Rng>(&self, rng: &mut R) -> Context {
        DVector::from_fn(self.context_dim, |_, _| rng.gen_range(1.0..2.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;

    fn all_kinds() -> [BaseFunctionKind; 6] {
        [
            BaseFunctionKind::Sphere,
            BaseFunctionKind::Rosenbrock,
            BaseFunctionKind::Ackley,
            BaseFunctionKind::Ellipsoidal,
            BaseFunctionKind::Discus,
            BaseFunctionKind::DifferentPowers,
        ]
    }

    #[test]
    fn value_is_zero_at_the_optimum() {
        for kind in all_kinds() {
            let f = BaseFunction::new(kind, 20).unwrap();
            let x = f.optimum();
            let v = f.eval(x.as_slice()).unwrap();
            assert_eq!(v, 0.0, "{kind:?} is {v} at its optimum");
        }
    }

    #[test]
    fn discus_first_axis_dominates() {
        let f = BaseFunction::new(BaseFunctionKind::Discus, 5).unwrap();
        let mut x = vec![0.0; 5];
        x[0] = 1.0;
        assert_eq!(f.eval(&x).unwrap(), 1e6);
    }

    #[test]
    fn ellipsoidal_conditioning_spans_1e6() {
        let f = BaseFunction::new(BaseFunctionKind::Ellipsoidal, 3).unwrap();
        assert_eq!(f.eval(&[1.0, 0.0, 0.0]).unwrap(), 1.0);
        assert!((f.eval(&[0.0, 1.0, 0.0]).unwrap() - 1e3).abs() < 1e-9);
        assert_eq!(f.eval(&[0.0, 0.0, 1.0]).unwrap(), 1e6);
    }

    #[test]
    fn dimension_mismatch_is_an_argument_error() {
        let f = BaseFunction::new(BaseFunctionKind::Sphere, 3).unwrap();
        assert!(matches!(f.eval(&[1.0, 2.0]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn rosenbrock_requires_two_dimensions() {
        assert!(BaseFunction::new(BaseFunctionKind::Rosenbrock, 1).is_err());
        assert!(BaseFunction::new(BaseFunctionKind::Rosenbrock, 2).is_ok());
    }

    #[test]
    fn shift_matrix_shape_and_determinism() {
        let base = BaseFunction::new(BaseFunctionKind::Sphere, 20).unwrap();
        let a = ContextualObjective::new(base, 1, 7).unwrap();
        assert_eq!(a.shift_matrix().shape(), (20, 1));
        let b = ContextualObjective::new(base, 1, 7).unwrap();
        assert_eq!(a.shift_matrix(), b.shift_matrix());
        let c = ContextualObjective::new(base, 2, 7).unwrap();
        assert_eq!(c.shift_matrix().shape(), (20, 2));
    }

    #[test]
    fn same_seed_agrees_on_random_evaluations() {
        let base = BaseFunction::new(BaseFunctionKind::Rosenbrock, 6).unwrap();
        let a = ContextualObjective::new(base, 2, 99).unwrap();
        let b = ContextualObjective::new(base, 2, 99).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        for _ in 0..100 {
            let s = a.sample_context(&mut rng);
            let theta = DVector::from_fn(6, |_, _| rng.gen_range(-3.0..3.0));
            let va = a.eval(&s, &theta).unwrap();
            let vb = b.eval(&s, &theta).unwrap();
            assert_eq!(va.to_bits(), vb.to_bits());
        }
    }

    #[test]
    fn shift_cancellation_reaches_zero() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for trial in 0..100 {
            let base = BaseFunction::new(BaseFunctionKind::Sphere, 8).unwrap();
            let obj = ContextualObjective::new(base, 2, 1000 + trial).unwrap();
            let s = obj.sample_context(&mut rng);
            let theta = -(obj.shift_matrix() * &s);
            assert_eq!(obj.eval(&s, &theta).unwrap(), 0.0);
        }
    }

    #[test]
    fn zero_shift_reduces_to_base_function() {
        let base = BaseFunction::new(BaseFunctionKind::Ellipsoidal, 4).unwrap();
        let obj = ContextualObjective::unshifted(base, 1).unwrap();
        let s = dvector![1.7];
        let theta = dvector![0.5, -1.0, 2.0, 0.25];
        let expected = -base.eval(theta.as_slice()).unwrap();
        assert_eq!(obj.eval(&s, &theta).unwrap(), expected);
    }

    #[test]
    fn hand_evaluated_shift() {
        // d=2 sphere, G = [[1], [1]], s = 1.5, θ = 0 → −(1.5² + 1.5²).
        let base = BaseFunction::new(BaseFunctionKind::Sphere, 2).unwrap();
        let g = DMatrix::from_column_slice(2, 1, &[1.0, 1.0]);
        let obj = ContextualObjective::with_shift(base, g).unwrap();
        let v = obj.eval(&dvector![1.5], &dvector![0.0, 0.0]).unwrap();
        assert!((v - (-4.5)).abs() < 1e-15);
    }

    #[test]
    fn ackley_clamps_effective_input() {
        let base = BaseFunction::new(BaseFunctionKind::Ackley, 2).unwrap();
        let obj = ContextualObjective::unshifted(base, 1).unwrap();
        let s = dvector![1.0];
        let far = obj.eval(&s, &dvector![1e9, 1e9]).unwrap();
        let edge = obj.eval(&s, &dvector![32.5, 32.5]).unwrap();
        assert_eq!(far.to_bits(), edge.to_bits());
    }

    #[test]
    fn context_sampling_statistics() {
        let base = BaseFunction::new(BaseFunctionKind::Sphere, 4).unwrap();
        let obj = ContextualObjective::new(base, 2, 5).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let n = 100_000;
        let mut sum = 0.0;
        let mut sum_a = 0.0;
        let mut sum_b = 0.0;
        let mut sum_ab = 0.0;
        let mut sum_a2 = 0.0;
        let mut sum_b2 = 0.0;
        for _ in 0..n {
            let s = obj.sample_context(&mut rng);
            assert!(s.iter().all(|&v| (1.0..2.0).contains(&v)));
            sum += s[0] + s[1];
            sum_a += s[0];
            sum_b += s[1];
            sum_ab += s[0] * s[1];
            sum_a2 += s[0] * s[0];
            sum_b2 += s[1] * s[1];
        }
        let mean = sum / (2 * n) as f64;
        assert!((mean - 1.5).abs() < 0.01, "mean = {mean}");
        // Components of one draw are independent.
        let nf = n as f64;
        let cov = sum_ab / nf - (sum_a / nf) * (sum_b / nf);
        let var_a = sum_a2 / nf - (sum_a / nf).powi(2);
        let var_b = sum_b2 / nf - (sum_b / nf).powi(2);
        let corr = cov / (var_a * var_b).sqrt();
        assert!(corr.abs() < 0.05, "correlation = {corr}");
    }

    #[test]
    fn base_functions_are_nonnegative_on_random_inputs() {
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        for kind in all_kinds() {
            let f = BaseFunction::new(kind, 20).unwrap();
            for _ in 0..10_000 {
                let x: Vec<f64> = (0..20).map(|_| rng.gen_range(-50.0..50.0)).collect();
                let v = f.eval(&x).unwrap();
                assert!(v >= 0.0, "{kind:?} went negative: {v}");
            }
        }
    }

    proptest! {

        #[test]
        fn contextual_returns_are_nonpositive(
            seed in 0u64..1000,
            sv in proptest::collection::vec(1.0f64..2.0, 2..=2),
            theta in proptest::collection::vec(-10.0f64..10.0, 5..=5),
        ) {
            let base = BaseFunction::new(BaseFunctionKind::DifferentPowers, 5).unwrap();
            let obj = ContextualObjective::new(base, 2, seed).unwrap();
            let s = DVector::from_vec(sv);
            let theta = DVector::from_vec(theta);
            prop_assert!(obj.eval(&s, &theta).unwrap() <= 0.0);
        }
    }
}
