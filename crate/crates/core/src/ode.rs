//! Real-vector initial-value-problem integrator shared by all model modules.
//!
//! Two methods behind one entry point, [`integrate`]:
//!
//! - an embedded Dormand–Prince 5(4) pair with PI step-size control and the
//!   classic fourth-order continuous extension for dense output,
//! - a fixed-step classical RK4 with cubic Hermite dense output, kept for
//!   cases where step control is done externally.
//!
//! Requested sample times are produced from the dense interpolant of whichever
//! accepted step contains them; samples that land exactly on a step endpoint
//! copy the stepper state, so endpoint samples are bit-identical to the march.
//! Integration is sequential and allocation-light; identical inputs give
//! bit-identical output.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Stepping scheme used by [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    FixedRk4,
    AdaptiveEmbeddedRk,
}

/// Step-size and tolerance settings.
///
/// Invariants: `rel_tol > 0`, `abs_tol > 0`, `0 < min_step <= initial_step <=
/// max_step`, `max_steps > 0`. For `FixedRk4` the step is `initial_step`,
/// shortened uniformly so the span divides evenly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub method: Method,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub initial_step: f64,
    pub max_step: f64,
    pub min_step: f64,
    pub max_steps: usize,
}

impl IntegratorConfig {
    /// Adaptive defaults for a problem spanning `span` time units.
    ///
    /// Tolerances default tight (1e-9 / 1e-12): the fermion-pair model is
    /// stiff near its explosion and the conservation suites require <= 1e-9
    /// relative drift.
    pub fn adaptive(span: f64) -> Self {
        IntegratorConfig {
            method: Method::AdaptiveEmbeddedRk,
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            initial_step: span * 1e-4,
            max_step: span,
            min_step: span * 1e-15,
            max_steps: 10_000_000,
        }
    }

    /// Fixed RK4 with the given step.
    pub fn fixed(step: f64) -> Self {
        IntegratorConfig {
            method: Method::FixedRk4,
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            initial_step: step,
            max_step: step,
            min_step: step,
            max_steps: 10_000_000,
        }
    }

    fn validate(&self) -> Result<(), OdeError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.rel_tol) || !positive(self.abs_tol) {
            return Err(OdeError::InvalidInput("tolerances must be positive".into()));
        }
        if !(self.min_step > 0.0
            && self.min_step <= self.initial_step
            && self.initial_step <= self.max_step)
        {
            return Err(OdeError::InvalidInput(
                "need 0 < min_step <= initial_step <= max_step".into(),
            ));
        }
        if self.max_steps == 0 {
            return Err(OdeError::InvalidInput("max_steps must be > 0".into()));
        }
        Ok(())
    }
}

/// An initial-value problem `dy/dt = rhs(t, y)` on `[t0, t_end]`.
///
/// `rhs` must be pure: deterministic and free of side effects.
pub struct IvpProblem<F>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    pub dimension: usize,
    pub rhs: F,
    pub t0: f64,
    pub y0: Vec<f64>,
    pub t_end: f64,
}

/// States sampled on the requested grid plus step statistics.
#[derive(Debug, Clone)]
pub struct SolutionGrid {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub accepted_steps: u64,
    pub rejected_steps: u64,
}

#[derive(Debug, Error)]
pub enum OdeError {
    #[error("step size underflow at t = {t}: required step below min_step = {min_step}")]
    StepUnderflow { t: f64, min_step: f64 },
    #[error("exceeded max_steps = {0}")]
    MaxStepsExceeded(usize),
    #[error("non-finite state component at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("component never crosses the threshold")]
    NoCrossing,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

fn validate_problem<F>(problem: &IvpProblem<F>, sample_times: &[f64]) -> Result<(), OdeError>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    if problem.dimension != problem.y0.len() {
        return Err(OdeError::InvalidInput("dimension != y0.len()".into()));
    }
    if problem.t_end.partial_cmp(&problem.t0) != Some(std::cmp::Ordering::Greater) {
        return Err(OdeError::InvalidInput("t_end must exceed t0".into()));
    }
    let mut prev = f64::NEG_INFINITY;
    for &ts in sample_times {
        if !(ts >= problem.t0 && ts <= problem.t_end) {
            return Err(OdeError::InvalidInput(format!(
                "sample time {ts} outside [{}, {}]",
                problem.t0, problem.t_end
            )));
        }
        if ts <= prev {
            return Err(OdeError::InvalidInput(
                "sample times must be strictly increasing".into(),
            ));
        }
        prev = ts;
    }
    if problem.y0.iter().any(|v| !v.is_finite()) {
        return Err(OdeError::NonFiniteState { t: problem.t0 });
    }
    Ok(())
}

/// Integrate `problem` and return states at exactly `sample_times`.
///
/// Sample times must lie in `[t0, t_end]` and be strictly increasing. For the
/// adaptive method the local error per step is bounded by
/// `rel_tol * |y| + abs_tol` in the max norm.
pub fn integrate<F>(
    problem: &IvpProblem<F>,
    config: &IntegratorConfig,
    sample_times: &[f64],
) -> Result<SolutionGrid, OdeError>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    config.validate()?;
    validate_problem(problem, sample_times)?;
    match config.method {
        Method::FixedRk4 => integrate_rk4(problem, config, sample_times),
        Method::AdaptiveEmbeddedRk => integrate_dp54(problem, config, sample_times),
    }
}

fn non_finite(y: &[f64]) -> bool {
    y.iter().any(|v| !v.is_finite())
}

// ---------------------------------------------------------------------------
// Fixed-step classical RK4, cubic Hermite dense output
// ---------------------------------------------------------------------------

fn integrate_rk4<F>(
    problem: &IvpProblem<F>,
    config: &IntegratorConfig,
    sample_times: &[f64],
) -> Result<SolutionGrid, OdeError>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let n = problem.dimension;
    let span = problem.t_end - problem.t0;
    let n_steps = (span / config.initial_step).ceil().max(1.0) as usize;
    if n_steps > config.max_steps {
        return Err(OdeError::MaxStepsExceeded(config.max_steps));
    }
    let h = span / n_steps as f64;

    let mut grid = SolutionGrid {
        times: Vec::with_capacity(sample_times.len()),
        states: Vec::with_capacity(sample_times.len()),
        accepted_steps: 0,
        rejected_steps: 0,
    };
    let mut next_sample = 0usize;
    if next_sample < sample_times.len() && sample_times[next_sample] == problem.t0 {
        grid.times.push(problem.t0);
        grid.states.push(problem.y0.clone());
        next_sample += 1;
    }

    let mut t = problem.t0;
    let mut y = problem.y0.clone();
    let mut f0 = vec![0.0; n];
    (problem.rhs)(t, &y, &mut f0);
    if non_finite(&f0) {
        return Err(OdeError::NonFiniteState { t });
    }

    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut y_tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut f1 = vec![0.0; n];

    for step in 0..n_steps {
        // Land the final step on t_end exactly.
        let t_new = if step + 1 == n_steps {
            problem.t_end
        } else {
            problem.t0 + (step + 1) as f64 * h
        };
        let h_step = t_new - t;

        for i in 0..n {
            y_tmp[i] = y[i] + 0.5 * h_step * f0[i];
        }
        (problem.rhs)(t + 0.5 * h_step, &y_tmp, &mut k2);
        for i in 0..n {
            y_tmp[i] = y[i] + 0.5 * h_step * k2[i];
        }
        (problem.rhs)(t + 0.5 * h_step, &y_tmp, &mut k3);
        for i in 0..n {
            y_tmp[i] = y[i] + h_step * k3[i];
        }
        (problem.rhs)(t + h_step, &y_tmp, &mut k4);
        for i in 0..n {
            y_new[i] = y[i] + h_step / 6.0 * (f0[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if non_finite(&y_new) {
            return Err(OdeError::NonFiniteState { t: t_new });
        }
        (problem.rhs)(t_new, &y_new, &mut f1);
        if non_finite(&f1) {
            return Err(OdeError::NonFiniteState { t: t_new });
        }
        grid.accepted_steps += 1;

        while next_sample < sample_times.len() && sample_times[next_sample] <= t_new {
            let ts = sample_times[next_sample];
            if ts == t_new {
                grid.states.push(y_new.clone());
            } else {
                let theta = (ts - t) / h_step;
                grid.states
                    .push(hermite(theta, h_step, &y, &f0, &y_new, &f1));
            }
            grid.times.push(ts);
            next_sample += 1;
        }

        t = t_new;
        std::mem::swap(&mut y, &mut y_new);
        std::mem::swap(&mut f0, &mut f1);
    }
    debug_assert_eq!(next_sample, sample_times.len());
    Ok(grid)
}

fn hermite(theta: f64, h: f64, y0: &[f64], f0: &[f64], y1: &[f64], f1: &[f64]) -> Vec<f64> {
    let t2 = theta * theta;
    let t3 = t2 * theta;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + theta;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    y0.iter()
        .zip(f0)
        .zip(y1.iter().zip(f1))
        .map(|((&y0i, &f0i), (&y1i, &f1i))| h00 * y0i + h10 * h * f0i + h01 * y1i + h11 * h * f1i)
        .collect()
}

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4), PI step control, 4th-order dense output
// ---------------------------------------------------------------------------

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
// 5th-order weights; the advancing solution.
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Error weights (5th minus embedded 4th order).
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Dense-output weights.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
const FAC_MIN: f64 = 0.2; // largest step shrink per step
const FAC_MAX: f64 = 10.0; // largest step growth per step

struct DenseStep {
    rcont: [Vec<f64>; 5],
}

impl DenseStep {
    fn eval(&self, theta: f64, i: usize) -> f64 {
        let th1 = 1.0 - theta;
        self.rcont[0][i]
            + theta
                * (self.rcont[1][i]
                    + th1
                        * (self.rcont[2][i] + theta * (self.rcont[3][i] + th1 * self.rcont[4][i])))
    }
}

fn integrate_dp54<F>(
    problem: &IvpProblem<F>,
    config: &IntegratorConfig,
    sample_times: &[f64],
) -> Result<SolutionGrid, OdeError>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let n = problem.dimension;
    let mut grid = SolutionGrid {
        times: Vec::with_capacity(sample_times.len()),
        states: Vec::with_capacity(sample_times.len()),
        accepted_steps: 0,
        rejected_steps: 0,
    };
    let mut next_sample = 0usize;
    if next_sample < sample_times.len() && sample_times[next_sample] == problem.t0 {
        grid.times.push(problem.t0);
        grid.states.push(problem.y0.clone());
        next_sample += 1;
    }

    let mut t = problem.t0;
    let mut y = problem.y0.clone();
    let mut k1 = vec![0.0; n];
    (problem.rhs)(t, &y, &mut k1);
    if non_finite(&k1) {
        return Err(OdeError::NonFiniteState { t });
    }
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut y_tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];

    let mut h = config
        .initial_step
        .min(config.max_step)
        .min(problem.t_end - t);
    let mut facold: f64 = 1e-4;
    let mut rejected_last = false;
    let mut total_steps = 0usize;

    while t < problem.t_end {
        total_steps += 1;
        if total_steps > config.max_steps {
            return Err(OdeError::MaxStepsExceeded(config.max_steps));
        }
        let last = t + h >= problem.t_end;
        let h_step = if last { problem.t_end - t } else { h };

        for i in 0..n {
            y_tmp[i] = y[i] + h_step * A21 * k1[i];
        }
        (problem.rhs)(t + h_step / 5.0, &y_tmp, &mut k2);
        for i in 0..n {
            y_tmp[i] = y[i] + h_step * (A31 * k1[i] + A32 * k2[i]);
        }
        (problem.rhs)(t + 3.0 * h_step / 10.0, &y_tmp, &mut k3);
        for i in 0..n {
            y_tmp[i] = y[i] + h_step * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        (problem.rhs)(t + 4.0 * h_step / 5.0, &y_tmp, &mut k4);
        for i in 0..n {
            y_tmp[i] = y[i] + h_step * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        (problem.rhs)(t + 8.0 * h_step / 9.0, &y_tmp, &mut k5);
        for i in 0..n {
            y_tmp[i] = y[i]
                + h_step * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        (problem.rhs)(t + h_step, &y_tmp, &mut k6);
        for i in 0..n {
            y_new[i] =
                y[i] + h_step * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        (problem.rhs)(t + h_step, &y_new, &mut k7); // FSAL

        // Max-norm error scaled by abs_tol + rel_tol * |y|.
        let finite = !non_finite(&y_new) && !non_finite(&k7);
        let mut err: f64 = 0.0;
        if finite {
            for i in 0..n {
                let e = h_step
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let scale = config.abs_tol + config.rel_tol * y[i].abs().max(y_new[i].abs());
                err = err.max((e / scale).abs());
            }
        } else {
            err = f64::INFINITY;
        }

        let fac11 = err.powf(EXPO1);
        if err <= 1.0 {
            // Accept.
            let mut fac = fac11 / facold.powf(BETA);
            fac = (fac / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut h_next = h_step / fac;
            if rejected_last {
                h_next = h_next.min(h_step);
            }
            rejected_last = false;
            facold = err.max(1e-4);
            grid.accepted_steps += 1;
            let t_new = t + h_step;

            if next_sample < sample_times.len() && sample_times[next_sample] <= t_new {
                let dense = build_dense(h_step, &y, &y_new, &k1, &k3, &k4, &k5, &k6, &k7);
                while next_sample < sample_times.len() && sample_times[next_sample] <= t_new {
                    let ts = sample_times[next_sample];
                    if ts == t_new {
                        grid.states.push(y_new.clone());
                    } else {
                        let theta = (ts - t) / h_step;
                        grid.states
                            .push((0..n).map(|i| dense.eval(theta, i)).collect());
                    }
                    grid.times.push(ts);
                    next_sample += 1;
                }
            }

            t = t_new;
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut k1, &mut k7);
            h = h_next.min(config.max_step);
        } else {
            // Reject and shrink.
            grid.rejected_steps += 1;
            rejected_last = true;
            let h_next = if err.is_finite() {
                h_step / (fac11 / SAFETY).min(1.0 / FAC_MIN)
            } else {
                // Overflowing trial: cut hard; a persistently non-finite rhs
                // bottoms out at min_step and reports below.
                h_step * FAC_MIN
            };
            if h_next < config.min_step {
                return if finite {
                    Err(OdeError::StepUnderflow {
                        t,
                        min_step: config.min_step,
                    })
                } else {
                    Err(OdeError::NonFiniteState { t })
                };
            }
            h = h_next;
        }
    }
    debug_assert_eq!(next_sample, sample_times.len());
    Ok(grid)
}

#[allow(clippy::too_many_arguments)]
fn build_dense(
    h: f64,
    y: &[f64],
    y_new: &[f64],
    k1: &[f64],
    k3: &[f64],
    k4: &[f64],
    k5: &[f64],
    k6: &[f64],
    k7: &[f64],
) -> DenseStep {
    let n = y.len();
    let mut rcont = [
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    ];
    for i in 0..n {
        let ydiff = y_new[i] - y[i];
        let bspl = h * k1[i] - ydiff;
        rcont[0].push(y[i]);
        rcont[1].push(ydiff);
        rcont[2].push(bspl);
        rcont[3].push(ydiff - h * k7[i] - bspl);
        rcont[4].push(
            h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]),
        );
    }
    DenseStep { rcont }
}

// ---------------------------------------------------------------------------
// Threshold crossing
// ---------------------------------------------------------------------------

/// Earliest time at which `grid.states[..][component]` crosses `threshold`.
///
/// The crossing is located on the piecewise-linear interpolant of the sampled
/// component and resolved by bisection to a time tolerance of
/// `1e-6 * (t_last - t_first)`.
pub fn find_crossing(
    grid: &SolutionGrid,
    component: usize,
    threshold: f64,
) -> Result<f64, OdeError> {
    if grid.times.is_empty() {
        return Err(OdeError::InvalidInput("empty solution grid".into()));
    }
    if component >= grid.states[0].len() {
        return Err(OdeError::InvalidInput(format!(
            "component {component} out of range"
        )));
    }
    let tol = 1e-6 * (grid.times[grid.times.len() - 1] - grid.times[0]);
    for w in 0..grid.times.len() {
        let v = grid.states[w][component];
        if v == threshold {
            return Ok(grid.times[w]);
        }
        if w + 1 == grid.times.len() {
            break;
        }
        let v_next = grid.states[w + 1][component];
        if (v - threshold) * (v_next - threshold) < 0.0 {
            let (mut t_lo, mut t_hi) = (grid.times[w], grid.times[w + 1]);
            let (y_lo, y_hi) = (v, v_next);
            let slope = (y_hi - y_lo) / (t_hi - t_lo);
            let sign_lo = (y_lo - threshold).signum();
            while t_hi - t_lo > tol {
                let t_mid = 0.5 * (t_lo + t_hi);
                let y_mid = y_lo + slope * (t_mid - grid.times[w]);
                if (y_mid - threshold).signum() == sign_lo {
                    t_lo = t_mid;
                } else {
                    t_hi = t_mid;
                }
            }
            return Ok(0.5 * (t_lo + t_hi));
        }
    }
    Err(OdeError::NoCrossing)
}

/// Uniform grid of `n` samples on `[t0, t_end]`, endpoints included.
pub fn linspace(t0: f64, t_end: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "need at least two samples");
    let mut v: Vec<f64> = (0..n)
        .map(|i| t0 + (t_end - t0) * i as f64 / (n - 1) as f64)
        .collect();
    v[n - 1] = t_end;
    v
}

/// Log-spaced grid from `t_first > 0` to `t_end`, with `t0 = 0` prepended when
/// `include_zero` is set.
pub fn logspace(t_first: f64, t_end: f64, n: usize, include_zero: bool) -> Vec<f64> {
    assert!(t_first > 0.0 && t_end > t_first && n >= 2);
    let (l0, l1) = (t_first.ln(), t_end.ln());
    let mut v = Vec::with_capacity(n + 1);
    if include_zero {
        v.push(0.0);
    }
    for i in 0..n {
        v.push((l0 + (l1 - l0) * i as f64 / (n - 1) as f64).exp());
    }
    let last = v.len() - 1;
    v[last] = t_end;
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay_problem() -> IvpProblem<impl Fn(f64, &[f64], &mut [f64])> {
        IvpProblem {
            dimension: 1,
            rhs: |_t, y: &[f64], dy: &mut [f64]| dy[0] = -y[0],
            t0: 0.0,
            y0: vec![1.0],
            t_end: 1.0,
        }
    }

    #[test]
    fn zero_rhs_holds_state() {
        let problem = IvpProblem {
            dimension: 2,
            rhs: |_t, _y: &[f64], dy: &mut [f64]| dy.fill(0.0),
            t0: 0.0,
            y0: vec![1.0, 2.0],
            t_end: 3.0,
        };
        for method in [Method::AdaptiveEmbeddedRk, Method::FixedRk4] {
            let mut config = IntegratorConfig::adaptive(3.0);
            config.method = method;
            let grid = integrate(&problem, &config, &linspace(0.0, 3.0, 7)).unwrap();
            for s in &grid.states {
                assert_eq!(s, &vec![1.0, 2.0]);
            }
        }
    }

    #[test]
    fn exponential_decay_endpoint() {
        // Closed form: y(1) = e^-1.
        let expected = 0.367_879_441_171_442_33_f64;
        let grid = integrate(
            &decay_problem(),
            &IntegratorConfig::adaptive(1.0),
            &linspace(0.0, 1.0, 11),
        )
        .unwrap();
        let got = grid.states.last().unwrap()[0];
        assert!(
            (got - expected).abs() < 1e-9,
            "got {got}, expected {expected}, err {}",
            (got - expected).abs()
        );
        // Dense samples track the exponential too.
        for (t, s) in grid.times.iter().zip(&grid.states) {
            assert!((s[0] - (-t).exp()).abs() < 1e-8);
        }
    }

    #[test]
    fn rk4_is_fourth_order() {
        let run = |step: f64| -> f64 {
            let grid = integrate(&decay_problem(), &IntegratorConfig::fixed(step), &[1.0]).unwrap();
            (grid.states[0][0] - (-1.0_f64).exp()).abs()
        };
        let ratio = run(0.05) / run(0.025);
        assert!(
            (14.0..=18.0).contains(&ratio),
            "halving the step changed the error by {ratio}, expected ~16"
        );
    }

    #[test]
    fn determinism_bit_identical() {
        let problem = IvpProblem {
            dimension: 2,
            rhs: |t: f64, y: &[f64], dy: &mut [f64]| {
                dy[0] = -0.7 * y[0] + 0.2 * y[1] * (t * 3.0).sin();
                dy[1] = 0.1 * y[0] - 1.3 * y[1];
            },
            t0: 0.0,
            y0: vec![1.0, -0.5],
            t_end: 4.0,
        };
        let config = IntegratorConfig::adaptive(4.0);
        let samples = linspace(0.0, 4.0, 37);
        let a = integrate(&problem, &config, &samples).unwrap();
        let b = integrate(&problem, &config, &samples).unwrap();
        assert_eq!(a.accepted_steps, b.accepted_steps);
        assert_eq!(a.rejected_steps, b.rejected_steps);
        for (sa, sb) in a.states.iter().zip(&b.states) {
            for (va, vb) in sa.iter().zip(sb) {
                assert_eq!(va.to_bits(), vb.to_bits());
            }
        }
    }

    #[test]
    fn endpoint_samples_match_stepper_exactly() {
        // With a fixed step, every sample that lands on a step boundary must
        // copy the stepper state bit-for-bit.
        let step = 0.125;
        let problem = decay_problem();
        let boundary_samples: Vec<f64> = (0..=8).map(|i| i as f64 * step).collect();
        let full = integrate(&problem, &IntegratorConfig::fixed(step), &boundary_samples).unwrap();
        for (idx, &ts) in boundary_samples.iter().enumerate().skip(1) {
            let partial = integrate(&problem, &IntegratorConfig::fixed(step), &[ts]).unwrap();
            assert_eq!(
                full.states[idx][0].to_bits(),
                partial.states[0][0].to_bits()
            );
        }
    }

    #[test]
    fn max_steps_exceeded() {
        let mut config = IntegratorConfig::adaptive(1.0);
        config.max_steps = 3;
        config.initial_step = 1e-6;
        config.max_step = 1e-6;
        config.min_step = 1e-9;
        let err = integrate(&decay_problem(), &config, &[1.0]).unwrap_err();
        assert!(matches!(err, OdeError::MaxStepsExceeded(3)));
    }

    #[test]
    fn step_underflow_reported() {
        // min_step pinned at the whole span: the controller cannot shrink
        // below it once a step is rejected.
        let problem = IvpProblem {
            dimension: 1,
            rhs: |_t, y: &[f64], dy: &mut [f64]| dy[0] = 50.0 * y[0],
            t0: 0.0,
            y0: vec![1.0],
            t_end: 1.0,
        };
        let mut config = IntegratorConfig::adaptive(1.0);
        config.min_step = 0.5;
        config.initial_step = 1.0;
        config.rel_tol = 1e-12;
        config.abs_tol = 1e-14;
        let err = integrate(&problem, &config, &[1.0]).unwrap_err();
        assert!(matches!(err, OdeError::StepUnderflow { .. }), "got {err:?}");
    }

    #[test]
    fn non_finite_rhs_reported() {
        let problem = IvpProblem {
            dimension: 1,
            rhs: |_t, _y: &[f64], dy: &mut [f64]| dy[0] = f64::NAN,
            t0: 0.0,
            y0: vec![1.0],
            t_end: 1.0,
        };
        for method in [Method::AdaptiveEmbeddedRk, Method::FixedRk4] {
            let mut config = IntegratorConfig::adaptive(1.0);
            config.method = method;
            let err = integrate(&problem, &config, &[1.0]).unwrap_err();
            assert!(
                matches!(err, OdeError::NonFiniteState { .. }),
                "got {err:?}"
            );
        }
    }

    #[test]
    fn crossing_linear_component() {
        let problem = IvpProblem {
            dimension: 1,
            rhs: |_t, _y: &[f64], dy: &mut [f64]| dy[0] = 1.0,
            t0: 0.0,
            y0: vec![0.0],
            t_end: 2.0,
        };
        let grid = integrate(
            &problem,
            &IntegratorConfig::adaptive(2.0),
            &linspace(0.0, 2.0, 21),
        )
        .unwrap();
        let t = find_crossing(&grid, 0, 1.0).unwrap();
        assert!((t - 1.0).abs() < 2e-6 * 2.0, "got {t}");
    }

    #[test]
    fn crossing_absent() {
        let problem = IvpProblem {
            dimension: 1,
            rhs: |_t, _y: &[f64], dy: &mut [f64]| dy[0] = 0.0,
            t0: 0.0,
            y0: vec![0.0],
            t_end: 1.0,
        };
        let grid = integrate(
            &problem,
            &IntegratorConfig::adaptive(1.0),
            &linspace(0.0, 1.0, 5),
        )
        .unwrap();
        assert!(matches!(
            find_crossing(&grid, 0, 1.0),
            Err(OdeError::NoCrossing)
        ));
    }

    #[test]
    fn rejects_bad_sample_grid() {
        let problem = decay_problem();
        let config = IntegratorConfig::adaptive(1.0);
        assert!(matches!(
            integrate(&problem, &config, &[0.5, 0.5]),
            Err(OdeError::InvalidInput(_))
        ));
        assert!(matches!(
            integrate(&problem, &config, &[0.5, 1.5]),
            Err(OdeError::InvalidInput(_))
        ));
    }
}
