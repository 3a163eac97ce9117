//! Unstable planar linear system kept outside a disk, with and without
//! input limits.

use serde::{Deserialize, Serialize};

use super::{check_step, config, fmt_list, run_checks, Assertion, AssertionReport, ScenarioId, ScenarioOutcome, ScenarioRun};
use crate::analysis::simulate_closed_loop;
use crate::embedding::{embed, input_embed, BarrierStateSpec, EmbeddedSystem};
use crate::linearize::{cross_check, linearize_at_equilibrium};
use crate::model::{BarrierFunction, ControlSystem, Disturbance, LinearFeedback, SafetyConstraint, SignConvention};
use crate::numkit::{matrix_from_rows, Matrix, Vector};
use crate::synthesis::{ackermann, closed_loop_spectrum};
use crate::{Complex, Result};

/// Published gain for the disk example, additive convention `u = K x̄`.
pub const PAPER_GAIN: [f64; 3] = [2.1143, -5.2857, 4.2902];

/// Published gain for the input-limited example, `v = −K x̄`.
pub const PAPER_INPUT_GAIN: [f64; 6] = [-2120.0, 5290.0, -101.0, 2670.0, -24970.0, -4290.0];

/// Tolerance on the BaS identity along simulated runs.
pub const BAS_TOL: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearSafeParams {
    pub center: [f64; 2],
    pub radius: f64,
    pub gamma: f64,
    /// Additive convention.
    pub gain: [f64; 3],
    /// Requested poles for the Ackermann cross-check.
    pub poles: [f64; 3],
    pub initial_states: Vec<[f64; 2]>,
    pub horizon: f64,
    pub dt: f64,
    pub stride: usize,
}

impl Default for LinearSafeParams {
    fn default() -> Self {
        Self {
            center: [2.0, 2.0],
            radius: 0.5,
            gamma: 1.0,
            gain: PAPER_GAIN,
            poles: [-2.0, -3.0, -1.0],
            initial_states: vec![
                [4.0, 4.0],
                [5.0, 5.0],
                [3.0, 3.0],
                [0.0, 4.0],
                [2.0, 5.0],
                [-2.0, -3.0],
                [1.0, 5.0],
                [6.0, 6.0],
                [-4.0, 4.0],
            ],
            horizon: 20.0,
            dt: 1e-3,
            stride: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConstrainedParams {
    pub center: [f64; 2],
    pub radius: f64,
    /// `|u| < input_bound`.
    pub input_bound: f64,
    /// Gains of the upper-limit, lower-limit and disk barrier states.
    pub gammas: [f64; 3],
    /// `v = −K x̄` over `(x1, x2, u, z1, z2, z3)`.
    pub gain: [f64; 6],
    /// Plant states; the input starts at zero.
    pub initial_states: Vec<[f64; 2]>,
    pub horizon: f64,
    pub dt: f64,
    pub stride: usize,
}

impl Default for InputConstrainedParams {
    fn default() -> Self {
        Self {
            center: [2.0, 2.0],
            radius: 0.5,
            input_bound: 5.0,
            gammas: [1.8, 1.4, 1.0],
            gain: PAPER_INPUT_GAIN,
            initial_states: vec![[-2.5, 0.0], [0.5, 1.5], [1.0, 2.0]],
            horizon: 30.0,
            dt: 1e-4,
            stride: 10,
        }
    }
}

/// `ẋ = [[1, −5], [0, −1]] x + [0; 1] u`.
pub fn plant() -> Result<ControlSystem> {
    let a = matrix_from_rows(&[&[1.0, -5.0], &[0.0, -1.0]]);
    let b = matrix_from_rows(&[&[0.0], &[1.0]]);
    ControlSystem::linear(a, b)
}

pub fn obstacle(center: [f64; 2], radius: f64) -> Result<SafetyConstraint> {
    SafetyConstraint::disk_exclusion("obstacle", 2, &[0, 1], &center, radius)
}

/// Inverse-barrier state for the disk, appended to the plant.
pub fn linear_safe_system(center: [f64; 2], radius: f64, gamma: f64) -> Result<EmbeddedSystem> {
    let sys = plant()?;
    let spec = BarrierStateSpec::new(obstacle(center, radius)?, BarrierFunction::inverse(), gamma, &Vector::zeros(2))?;
    embed(&sys, vec![spec])
}

/// State `(x1, x2, u, z1, z2, z3)`: the input becomes a state, two barrier
/// states guard `|u| < bound` and one guards the disk.
pub fn input_constrained_system(center: [f64; 2], radius: f64, bound: f64, gammas: [f64; 3]) -> Result<EmbeddedSystem> {
    let sys = plant()?;
    let upper = SafetyConstraint::affine("input_upper", &[-1.0], bound);
    let lower = SafetyConstraint::affine("input_lower", &[1.0], bound);
    let disk = BarrierStateSpec::new(obstacle(center, radius)?, BarrierFunction::inverse(), gammas[2], &Vector::zeros(2))?;
    input_embed(&sys, &[upper, lower], &BarrierFunction::inverse(), &gammas[..2], vec![disk])
}

/// Hand-derived `(Ā, B̄)` of [`linear_safe_system`] at the origin.
pub fn expected_linear_safe(center: [f64; 2], radius: f64, gamma: f64) -> (Matrix, Matrix) {
    let (h0, g) = disk_at_origin(center, radius);
    let s = -1.0 / (h0 * h0);
    // Aᵀ∇h with A = [[1, −5], [0, −1]].
    let atg = [g[0], -5.0 * g[0] - g[1]];
    let a = matrix_from_rows(&[
        &[1.0, -5.0, 0.0],
        &[0.0, -1.0, 0.0],
        &[s * (atg[0] + gamma * g[0]), s * (atg[1] + gamma * g[1]), -gamma],
    ]);
    let b = matrix_from_rows(&[&[0.0], &[1.0], &[s * g[1]]]);
    (a, b)
}

/// Hand-derived `(Ā, B̄)` of [`input_constrained_system`] at the origin.
pub fn expected_input_constrained(center: [f64; 2], radius: f64, bound: f64, gammas: [f64; 3]) -> (Matrix, Matrix) {
    let (h0, g) = disk_at_origin(center, radius);
    let s = -1.0 / (h0 * h0);
    let atg = [g[0], -5.0 * g[0] - g[1]];
    let c = 1.0 / (bound * bound);
    let a = matrix_from_rows(&[
        &[1.0, -5.0, 0.0, 0.0, 0.0, 0.0],
        &[0.0, -1.0, 1.0, 0.0, 0.0, 0.0],
        &[0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        &[0.0, 0.0, gammas[0] * c, -gammas[0], 0.0, 0.0],
        &[0.0, 0.0, -gammas[1] * c, 0.0, -gammas[1], 0.0],
        &[s * (atg[0] + gammas[2] * g[0]), s * (atg[1] + gammas[2] * g[1]), s * g[1], 0.0, 0.0, -gammas[2]],
    ]);
    let b = matrix_from_rows(&[&[0.0], &[0.0], &[1.0], &[c], &[-c], &[0.0]]);
    (a, b)
}

fn disk_at_origin(center: [f64; 2], radius: f64) -> (f64, [f64; 2]) {
    let h0 = center[0] * center[0] + center[1] * center[1] - radius * radius;
    (h0, [-2.0 * center[0], -2.0 * center[1]])
}

fn max_gap(a: &Matrix, b: &Matrix) -> f64 {
    (a - b).amax()
}

fn reals(values: &[f64]) -> Vec<Complex<f64>> {
    values.iter().map(|&v| Complex::new(v, 0.0)).collect()
}

fn plant_norm(x: &Vector) -> f64 {
    x.rows(0, 2).norm()
}

pub(crate) fn run_linear_safe(p: &LinearSafeParams, seed: u64) -> Result<ScenarioOutcome> {
    let id = ScenarioId::LinearSafe;
    check_step(id, p.dt, p.horizon)?;
    let emb = linear_safe_system(p.center, p.radius, p.gamma).map_err(config(id))?;
    let lin = linearize_at_equilibrium(&emb)?;
    let (a_ref, b_ref) = expected_linear_safe(p.center, p.radius, p.gamma);
    let mut checks = vec![
        Assertion::at_most("linearization.a", max_gap(&lin.a, &a_ref), 1e-9),
        Assertion::at_most("linearization.b", max_gap(&lin.b, &b_ref), 1e-9),
        Assertion::at_most("linearization.fd_agreement", cross_check(&emb, &lin.state, &lin.input)?, 1e-6),
    ];

    let fb = LinearFeedback::row(&p.gain, SignConvention::Positive);
    let spectrum = closed_loop_spectrum(&lin, &fb)?;
    let paper_err = spectrum.sorted_pairing_error(&reals(&p.poles)).unwrap_or(f64::INFINITY);
    checks.push(Assertion::new(
        "spectrum.gain",
        fmt_list(&p.poles),
        spectrum.to_string(),
        "5e-3",
        paper_err <= 5e-3,
    ));
    let placed = ackermann(&lin.a, &lin.b, &reals(&p.poles))?;
    let placed_fb = LinearFeedback::new(placed, SignConvention::Negative);
    let placed_err = closed_loop_spectrum(&lin, &placed_fb)?
        .sorted_pairing_error(&reals(&p.poles))
        .unwrap_or(f64::INFINITY);
    checks.push(Assertion::at_most("spectrum.ackermann", placed_err, 1e-6));

    let dist = Disturbance::zero(1);
    let mut runs = Vec::with_capacity(p.initial_states.len());
    for (i, x0) in p.initial_states.iter().enumerate() {
        let label = format!("ic{i}");
        let xb0 = emb.consistent_state(&Vector::from_column_slice(x0)).map_err(config(id))?;
        let traj = simulate_closed_loop(&emb, &fb, &dist, &xb0, p.horizon, p.dt)?;
        checks.extend(run_checks(&label, &traj, &emb, BAS_TOL)?);
        checks.push(Assertion::below(format!("{label}.final_norm"), plant_norm(traj.final_state()), 1e-2));
        runs.push(ScenarioRun { label, trajectory: traj });
    }
    Ok(ScenarioOutcome {
        id,
        seed,
        runs,
        report: AssertionReport { scenario: id.to_string(), seed, assertions: checks },
        stride: p.stride,
    })
}

pub(crate) fn run_input_constrained(p: &InputConstrainedParams, seed: u64) -> Result<ScenarioOutcome> {
    let id = ScenarioId::InputConstrained;
    check_step(id, p.dt, p.horizon)?;
    let emb = input_constrained_system(p.center, p.radius, p.input_bound, p.gammas).map_err(config(id))?;
    let lin = linearize_at_equilibrium(&emb)?;
    let (a_ref, b_ref) = expected_input_constrained(p.center, p.radius, p.input_bound, p.gammas);
    let mut checks = vec![
        Assertion::at_most("linearization.a", max_gap(&lin.a, &a_ref), 1e-9),
        Assertion::at_most("linearization.b", max_gap(&lin.b, &b_ref), 1e-9),
        Assertion::at_most("linearization.fd_agreement", cross_check(&emb, &lin.state, &lin.input)?, 1e-6),
    ];

    let fb = LinearFeedback::row(&p.gain, SignConvention::Negative);
    let spectrum = closed_loop_spectrum(&lin, &fb)?;
    for target in [-2.0, -3.0, -1000.0] {
        let rel = spectrum.distance_to(Complex::new(target, 0.0)) / f64::abs(target);
        checks.push(Assertion::new(
            format!("spectrum.contains_{}", -target),
            format!("{target}"),
            spectrum.to_string(),
            "2% relative",
            rel <= 0.02,
        ));
    }

    // The unconstrained design from the same plant states, for contrast.
    let baseline = linear_safe_system(p.center, p.radius, p.gammas[2]).map_err(config(id))?;
    let baseline_fb = LinearFeedback::row(&PAPER_GAIN, SignConvention::Positive);

    let mut runs = Vec::with_capacity(p.initial_states.len());
    for (i, x0) in p.initial_states.iter().enumerate() {
        let label = format!("ic{i}");
        let xp = Vector::from_column_slice(x0);
        let base0 = baseline.consistent_state(&xp).map_err(config(id))?;
        let demand = simulate_closed_loop(&baseline, &baseline_fb, &Disturbance::zero(1), &base0, p.horizon, p.dt)?.sup_input();
        checks.push(Assertion::above(format!("{label}.unconstrained_demand"), demand, p.input_bound));

        let xb0 = emb
            .consistent_state(&Vector::from_vec(vec![x0[0], x0[1], 0.0]))
            .map_err(config(id))?;
        let traj = simulate_closed_loop(&emb, &fb, &Disturbance::zero(1), &xb0, p.horizon, p.dt)?;
        let sup_u = traj.states.iter().map(|x| x[2].abs()).fold(0.0, f64::max);
        checks.extend(run_checks(&label, &traj, &emb, BAS_TOL)?);
        checks.push(Assertion::below(format!("{label}.sup_u"), sup_u, p.input_bound));
        checks.push(Assertion::below(format!("{label}.final_norm"), plant_norm(traj.final_state()), 1e-2));
        runs.push(ScenarioRun { label, trajectory: traj });
    }
    Ok(ScenarioOutcome {
        id,
        seed,
        runs,
        report: AssertionReport { scenario: id.to_string(), seed, assertions: checks },
        stride: p.stride,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Error;

    #[test]
    fn hand_matrices_match_published_entries() {
        let (a, b) = expected_linear_safe([2.0, 2.0], 0.5, 1.0);
        let k = 7.75f64 * 7.75;
        assert!((a[(2, 0)] - 8.0 / k).abs() < 1e-15);
        assert!((a[(2, 1)] + 20.0 / k).abs() < 1e-15);
        assert!((b[(2, 0)] - 4.0 / k).abs() < 1e-15);
        let (a6, b6) = expected_input_constrained([2.0, 2.0], 0.5, 5.0, [1.8, 1.4, 1.0]);
        assert!((a6[(3, 2)] - 1.8 / 25.0).abs() < 1e-15);
        assert!((a6[(4, 2)] + 1.4 / 25.0).abs() < 1e-15);
        assert!((a6[(5, 2)] - 4.0 / k).abs() < 1e-15);
        assert!((b6[(3, 0)] - 0.04).abs() < 1e-15);
    }

    #[test]
    fn unsafe_parameters_are_config_errors() {
        let p = LinearSafeParams { center: [0.0, 0.0], ..Default::default() };
        assert!(matches!(run_linear_safe(&p, 0), Err(Error::Config(_))));
    }
}
