//! 2D viapoint environment: a dynamical movement primitive as trajectory
//! generator and a reward that penalizes velocity and viapoint misses.
//!
//! The movement runs from (0,0) to (1,1) in one second. Per dimension, a
//! point attractor `τ²ÿ = α_y(β_y(g−y) − τẏ) + f(z)` is driven by a forcing
//! term that is a normalized weighted sum of Gaussian basis functions over
//! the exponentially decaying phase `z` and vanishes with it, so the goal
//! stays an attractor for any weights. The trajectory must pass a fixed
//! viapoint at t=0.2 and a context-dependent one at t=0.5.

use nalgebra::DVector;
use rand::Rng;

use crate::error::{Error, Result};
use crate::Context;

/// Basis functions per movement dimension.
pub const BASES_PER_DIM: usize = 10;
/// Movement dimensions; the policy parameter vector has
/// `DIMS * BASES_PER_DIM = 20` entries, dimension-major.
pub const DIMS: usize = 2;

const ALPHA_Y: f64 = 25.0;
const BETA_Y: f64 = ALPHA_Y / 4.0;
const DT: f64 = 0.01;
const TAU: f64 = 1.0;

/// Fixed viapoint: (time, position).
pub const FIXED_VIAPOINT: (f64, [f64; 2]) = (0.2, [0.2, 0.5]);
/// Time of the context-dependent viapoint; its position is the context.
pub const CONTEXT_VIAPOINT_TIME: f64 = 0.5;
/// Per-component bounds of the context box.
pub const CONTEXT_BOX: (f64, f64) = (0.3, 0.7);

/// A rolled-out movement: positions and state velocities at every
/// integration step, `⌈τ/dt⌉ + 1` of each.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub positions: Vec<[f64; 2]>,
    pub velocities: Vec<[f64; 2]>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// The 2D point-to-point dynamical movement primitive used by the viapoint
/// problem: start (0,0), goal (1,1), duration 1 s, ten Gaussian basis
/// functions per dimension.
#[derive(Debug, Clone)]
pub struct Dmp {
    start: [f64; 2],
    goal: [f64; 2],
    /// Phase decay rate; the phase reaches 1% of its initial value at t = τ.
    alpha_z: f64,
    /// Basis centers in phase space, at equally spaced times.
    centers: Vec<f64>,
    /// Basis widths; adjacent bases overlap at about half height.
    widths: Vec<f64>,
}

impl Default for Dmp {
    fn default() -> Self {
        let alpha_z = -(0.01f64.ln());
        let k = BASES_PER_DIM;
        let centers: Vec<f64> = (0..k)
            .map(|i| (-alpha_z * i as f64 / (k - 1) as f64).exp())
            .collect();
        // Width from the gap to the next center so neighbors intersect at 0.5.
        let mut widths: Vec<f64> = centers
            .windows(2)
            .map(|c| (c[0] - c[1]).abs() / (2.0 * (2.0 * 2f64.ln()).sqrt()))
            .collect();
        widths.push(*widths.last().expect("at least two basis functions"));
        Self {
            start: [0.0, 0.0],
            goal: [1.0, 1.0],
            alpha_z,
            centers,
            widths,
        }
    }
}

impl Dmp {
    pub fn weight_count(&self) -> usize {
        DIMS * BASES_PER_DIM
    }

    /// Number of recorded states per rollout.
    pub fn steps(&self) -> usize {
        (TAU / DT).ceil() as usize + 1
    }

    pub fn goal(&self) -> [f64; 2] {
        self.goal
    }

    fn forcing(&self, z: f64, weights: &[f64]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for ((&c, &w), &weight) in self.centers.iter().zip(&self.widths).zip(weights) {
            let psi = (-(z - c) * (z - c) / (2.0 * w * w)).exp();
            num += psi * weight;
            den += psi;
        }
        num / den * z
    }

    /// Integrates the movement with explicit Euler at `dt = 0.01`.
    /// `weights` holds the ten basis weights of each dimension back to back.
    pub fn rollout(&self, weights: &[f64]) -> Result<Trajectory> {
        if weights.len() != self.weight_count() {
            return Err(Error::invalid(format!(
                "expected {} weights, got {}",
                self.weight_count(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::invalid("weights must be finite"));
        }
        let steps = self.steps();
        let mut positions = Vec::with_capacity(steps);
        let mut velocities = Vec::with_capacity(steps);
        let mut y = self.start;
        let mut v = [0.0; 2];
        let mut z = 1.0;
        positions.push(y);
        velocities.push(v);
        for _ in 1..steps {
            let mut acc = [0.0; 2];
            for d in 0..DIMS {
                let w = &weights[d * BASES_PER_DIM..(d + 1) * BASES_PER_DIM];
                let f = self.forcing(z, w) * (self.goal[d] - self.start[d]);
                acc[d] =
                    (ALPHA_Y * (BETA_Y * (self.goal[d] - y[d]) - TAU * v[d]) + f) / (TAU * TAU);
            }
            for d in 0..DIMS {
                y[d] += DT * v[d];
                v[d] += DT * acc[d];
            }
            z += DT * (-self.alpha_z * z) / TAU;
            positions.push(y);
            velocities.push(v);
        }
        Ok(Trajectory { positions, velocities })
    }
}

fn nearest_step(time: f64) -> usize {
    (time / DT).round() as usize
}

/// Return of a trajectory under the viapoint reward: a velocity penalty of
/// `−0.001‖v‖` per step plus the negative distances to the fixed viapoint at
/// t=0.2 and the contextual viapoint (position `s`) at t=0.5. Never positive.
pub fn viapoint_return(traj: &Trajectory, s: &Context) -> Result<f64> {
    if s.len() != 2 {
        return Err(Error::invalid(format!("context must be 2D, got {}", s.len())));
    }
    let mut total = 0.0;
    for v in &traj.velocities {
        total -= 0.001 * (v[0] * v[0] + v[1] * v[1]).sqrt();
    }
    let (t_fixed, p_fixed) = FIXED_VIAPOINT;
    let at_fixed = traj.positions[nearest_step(t_fixed)];
    total -= ((p_fixed[0] - at_fixed[0]).powi(2) + (p_fixed[1] - at_fixed[1]).powi(2)).sqrt();
    let at_ctx = traj.positions[nearest_step(CONTEXT_VIAPOINT_TIME)];
    total -= ((s[0] - at_ctx[0]).powi(2) + (s[1] - at_ctx[1]).powi(2)).sqrt();
    Ok(total)
}

/// The viapoint task: rolls out the DMP for the 20 policy parameters and
/// scores the trajectory against the two viapoints.
#[derive(Debug, Clone, Default)]
pub struct ViapointProblem {
    dmp: Dmp,
}

impl ViapointProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn dmp(&self) -> &Dmp {
        &self.dmp
    }

    pub fn param_dim(&self) -> usize {
        self.dmp.weight_count()
    }

    pub fn context_dim(&self) -> usize {
        2
    }

    pub fn evaluate(&self, s: &Context, theta: &DVector<f64>) -> Result<f64> {
        let (lo, hi) = CONTEXT_BOX;
        if s.len() != 2 || s.iter().any(|&v| !(lo..=hi).contains(&v)) {
            return Err(Error::invalid(format!("context {s:?} outside [{lo}, {hi}]²")));
        }
        let traj = self.dmp.rollout(theta.as_slice())?;
        viapoint_return(&traj, s)
    }

    /// Uniform training context over the box.
    pub fn sample_training_context<R: Rng>(&self, rng: &mut R) -> Context {
        let (lo, hi) = CONTEXT_BOX;
        DVector::from_fn(2, |_, _| rng.gen_range(lo..hi))
    }
}

/// The 25 test contexts: the row-major grid over
/// `{0.3, 0.4, 0.5, 0.6, 0.7}²`, from (0.3, 0.3) to (0.7, 0.7).
pub fn test_context_grid() -> Vec<Context> {
    let values = [0.3, 0.4, 0.5, 0.6, 0.7];
    let mut grid = Vec::with_capacity(25);
    for &a in &values {
        for &b in &values {
            grid.push(DVector::from_vec(vec![a, b]));
        }
    }
    grid
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn zero_weights_converge_to_the_goal() {
        let dmp = Dmp::default();
        let traj = dmp.rollout(&[0.0; 20]).unwrap();
        assert_eq!(traj.len(), 101);
        assert_eq!(traj.velocities.len(), 101);
        let last = traj.positions.last().unwrap();
        let dist = ((last[0] - 1.0).powi(2) + (last[1] - 1.0).powi(2)).sqrt();
        assert!(dist < 1e-2, "endpoint {last:?} misses the goal by {dist}");
    }

    #[test]
    fn zero_weight_motion_is_monotone_without_overshoot() {
        let dmp = Dmp::default();
        let traj = dmp.rollout(&[0.0; 20]).unwrap();
        for d in 0..2 {
            let mut prev = traj.positions[0][d];
            for p in &traj.positions {
                assert!(p[d] >= prev - 1e-12, "axis {d} not monotone");
                assert!(p[d] <= 1.01, "axis {d} overshoots: {}", p[d]);
                prev = p[d];
            }
        }
    }

    #[test]
    fn forcing_vanishes_at_the_endpoint_attractor() {
        let dmp = Dmp::default();
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let weights: Vec<f64> = (0..20).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let traj = dmp.rollout(&weights).unwrap();
        let last = traj.positions.last().unwrap();
        let d1 = ((last[0] - 1.0).powi(2) + (last[1] - 1.0).powi(2)).sqrt();
        assert!(d1 < 1e-2, "endpoint off by {d1}");

        let doubled: Vec<f64> = weights.iter().map(|w| 2.0 * w).collect();
        let traj2 = dmp.rollout(&doubled).unwrap();
        let last2 = traj2.positions.last().unwrap();
        let d2 = ((last2[0] - 1.0).powi(2) + (last2[1] - 1.0).powi(2)).sqrt();
        assert!(d2 < 1e-2, "doubled-weight endpoint off by {d2}");
        // The path itself must differ.
        let mid_delta = (traj.positions[50][0] - traj2.positions[50][0]).abs()
            + (traj.positions[50][1] - traj2.positions[50][1]).abs();
        assert!(mid_delta > 1e-4, "doubling the weights left the path unchanged");
    }

    #[test]
    fn rollouts_are_bit_reproducible() {
        let dmp = Dmp::default();
        let weights: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).sin()).collect();
        let a = dmp.rollout(&weights).unwrap();
        let b = dmp.rollout(&weights).unwrap();
        for (pa, pb) in a.positions.iter().zip(&b.positions) {
            assert_eq!(pa[0].to_bits(), pb[0].to_bits());
            assert_eq!(pa[1].to_bits(), pb[1].to_bits());
        }
    }

    #[test]
    fn rollout_validates_weights() {
        let dmp = Dmp::default();
        assert!(dmp.rollout(&[0.0; 19]).is_err());
        let mut bad = [0.0; 20];
        bad[3] = f64::NAN;
        assert!(dmp.rollout(&bad).is_err());
    }

    #[test]
    fn pinned_trajectory_scores_zero() {
        let p = FIXED_VIAPOINT.1;
        let traj = Trajectory {
            positions: vec![p; 101],
            velocities: vec![[0.0, 0.0]; 101],
        };
        let r = viapoint_return(&traj, &dvector![p[0], p[1]]).unwrap();
        assert_eq!(r, 0.0);

        // Displacing the contextual viapoint by δ costs exactly δ.
        let delta = 0.13;
        let r2 = viapoint_return(&traj, &dvector![p[0] + delta, p[1]]).unwrap();
        assert!((r2 + delta).abs() < 1e-15);
    }

    #[test]
    fn reward_matches_an_independent_reimplementation() {
        let dmp = Dmp::default();
        let traj = dmp.rollout(&[0.0; 20]).unwrap();
        let s = dvector![0.5, 0.5];
        let r = viapoint_return(&traj, &s).unwrap();

        // Step-by-step re-computation of the same sum.
        let mut expected = 0.0;
        for t in 0..traj.len() {
            let v = traj.velocities[t];
            expected += -0.001 * v[0].hypot(v[1]);
        }
        let p20 = traj.positions[20];
        expected -= (0.2 - p20[0]).hypot(0.5 - p20[1]);
        let p50 = traj.positions[50];
        expected -= (0.5 - p50[0]).hypot(0.5 - p50[1]);
        assert!((r - expected).abs() < 1e-12);
        assert!(r < 0.0);
    }

    #[test]
    fn grid_is_row_major_over_the_five_levels() {
        let grid = test_context_grid();
        assert_eq!(grid.len(), 25);
        assert_eq!(grid[0], dvector![0.3, 0.3]);
        assert_eq!(grid[1], dvector![0.3, 0.4]);
        assert_eq!(grid[24], dvector![0.7, 0.7]);
        let levels = [0.3, 0.4, 0.5, 0.6, 0.7];
        for s in &grid {
            for &c in s.iter() {
                assert!(levels.iter().any(|&l| (l - c).abs() < 1e-15));
            }
        }
    }

    #[test]
    fn training_contexts_fill_the_box() {
        let problem = ViapointProblem::new();
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let mut sum = [0.0; 2];
        let n = 100_000;
        for _ in 0..n {
            let s = problem.sample_training_context(&mut rng);
            assert!((0.3..0.7).contains(&s[0]) && (0.3..0.7).contains(&s[1]));
            sum[0] += s[0];
            sum[1] += s[1];
        }
        assert!((sum[0] / n as f64 - 0.5).abs() < 0.01);
        assert!((sum[1] / n as f64 - 0.5).abs() < 0.01);

        let mut a = ChaCha12Rng::seed_from_u64(9);
        let mut b = ChaCha12Rng::seed_from_u64(9);
        assert_eq!(
            problem.sample_training_context(&mut a),
            problem.sample_training_context(&mut b)
        );
    }

    #[test]
    fn evaluation_rejects_contexts_outside_the_box() {
        let problem = ViapointProblem::new();
        let theta = nalgebra::DVector::zeros(20);
        assert!(problem.evaluate(&dvector![0.2, 0.5], &theta).is_err());
        assert!(problem.evaluate(&dvector![0.5, 0.5], &theta).is_ok());
    }

    #[test]
    fn contextual_term_is_lipschitz_in_the_context() {
        let dmp = Dmp::default();
        let traj = dmp.rollout(&[0.0; 20]).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(10);
        for _ in 0..200 {
            let a = dvector![rng.gen_range(0.3..0.7), rng.gen_range(0.3..0.7)];
            let b = dvector![rng.gen_range(0.3..0.7), rng.gen_range(0.3..0.7)];
            let ra = viapoint_return(&traj, &a).unwrap();
            let rb = viapoint_return(&traj, &b).unwrap();
            assert!((ra - rb).abs() <= (&a - &b).norm() + 1e-12);
        }
    }

    proptest! {
        #[test]
        fn returns_are_never_positive(
            seed in 0u64..500,
            scale in 0.0f64..10.0,
        ) {
            let dmp = Dmp::default();
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let weights: Vec<f64> = (0..20).map(|_| rng.gen_range(-scale..=scale)).collect();
            let traj = dmp.rollout(&weights).unwrap();
            let s = dvector![rng.gen_range(0.3..0.7), rng.gen_range(0.3..0.7)];
            prop_assert!(viapoint_return(&traj, &s).unwrap() <= 0.0);
        }
    }
}
