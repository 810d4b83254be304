//! Fermion-pair condensate decaying into two bosonic daughter quanta: a
//! molecular mode `a` (N/2 pairs of N fermionic atoms) is destroyed while the
//! boson mode `b` gains two quanta per event.
//!
//! Truncated mean-field pair (hbar = 1):
//!
//! ```text
//! dn_a/dt = -γ n_a (n_b + 1)(n_b + 2)
//! dn_b/dt = 2γ n_a (n_b + 1)(n_b + 2)
//! ```
//!
//! with `2 n_a + n_b = N` conserved; substituting the constraint gives the
//! reduced form `dn_b/dt = γ (N - n_b)(n_b + 1)(n_b + 2)`. The double bosonic
//! stimulation `(n_b+1)(n_b+2)` drives an explosive, distinctly
//! sharper-than-logistic transition. Dephasing channels on either condensate
//! drop out of this closed set entirely.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ode::{self, IntegratorConfig, IvpProblem};
use crate::trajectory::{SimError, Trajectory, TrajectoryMeta};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FbParams {
    /// Total number of fermionic atoms N (even; pairs = N/2).
    pub n_total: u64,
    /// Pair-destruction rate γ.
    pub gamma_decay: f64,
    /// Dephasing rates; they do not enter the closed population dynamics and
    /// are carried for the exact oracle only.
    pub gamma_phi_a: f64,
    pub gamma_phi_b: f64,
    /// Mode energies (diagonal; oracle only).
    pub e_a: f64,
    pub e_b: f64,
}

impl FbParams {
    pub fn new(n_total: u64, gamma_decay: f64) -> Self {
        FbParams {
            n_total,
            gamma_decay,
            gamma_phi_a: 0.0,
            gamma_phi_b: 0.0,
            e_a: 0.0,
            e_b: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.n_total < 2 {
            return Err(SimError::InvalidParams("n_total must be >= 2".into()));
        }
        if !self.n_total.is_multiple_of(2) {
            // The deep-BEC premise assumes full pairing.
            return Err(SimError::InvalidParams("n_total must be even".into()));
        }
        if self.gamma_decay < 0.0 || self.gamma_phi_a < 0.0 || self.gamma_phi_b < 0.0 {
            return Err(SimError::InvalidParams("rates must be >= 0".into()));
        }
        Ok(())
    }
}

/// Which algebraically equivalent system to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FbForm {
    /// Coupled (n_a, n_b) pair.
    Pair,
    /// Single equation in n_b with the conservation law substituted.
    Reduced,
}

/// Pair-form derivatives (dn_a/dt, dn_b/dt).
pub fn pair_rhs(n_a: f64, n_b: f64, params: &FbParams) -> (f64, f64) {
    let events = params.gamma_decay * n_a * (n_b + 1.0) * (n_b + 2.0);
    (-events, 2.0 * events)
}

/// Reduced-form rate γ (N - n_b)(n_b + 1)(n_b + 2).
pub fn reduced_rhs(n_b: f64, params: &FbParams) -> f64 {
    params.gamma_decay * (params.n_total as f64 - n_b) * (n_b + 1.0) * (n_b + 2.0)
}

/// Time at which the reduced equation reaches boson number `n_b`, by exact
/// partial-fraction quadrature. Independent of the integrator; used as the
/// oracle for onset and sharpness checks.
pub fn reduced_time_to(n_b: f64, params: &FbParams) -> f64 {
    let n = params.n_total as f64;
    let a = 1.0 / ((n + 1.0) * (n + 2.0));
    let b = 1.0 / (n + 1.0);
    let c = -1.0 / (n + 2.0);
    (a * (n / (n - n_b)).ln() + b * (n_b + 1.0).ln() + c * ((n_b + 2.0) / 2.0).ln())
        / params.gamma_decay
}

/// Integrate from n_a = N/2, n_b = 0.
pub fn simulate(
    params: &FbParams,
    sample_times: &[f64],
    form: FbForm,
    config: &IntegratorConfig,
) -> Result<Trajectory, SimError> {
    params.validate()?;
    let n = params.n_total as f64;
    let t_end = *sample_times
        .last()
        .ok_or_else(|| SimError::InvalidParams("sample_times must not be empty".into()))?;

    let p = params.clone();
    let grid = match form {
        FbForm::Pair => {
            let problem = IvpProblem {
                dimension: 2,
                rhs: move |_t: f64, y: &[f64], dy: &mut [f64]| {
                    let (da, db) = pair_rhs(y[0], y[1], &p);
                    dy[0] = da;
                    dy[1] = db;
                },
                t0: 0.0,
                y0: vec![n / 2.0, 0.0],
                t_end,
            };
            ode::integrate(&problem, config, sample_times)?
        }
        FbForm::Reduced => {
            let problem = IvpProblem {
                dimension: 1,
                rhs: move |_t: f64, y: &[f64], dy: &mut [f64]| dy[0] = reduced_rhs(y[0], &p),
                t0: 0.0,
                y0: vec![0.0],
                t_end,
            };
            ode::integrate(&problem, config, sample_times)?
        }
    };

    let mut meta = TrajectoryMeta::new("fb", serde_json::to_value(params).unwrap());
    meta.integrator = Some(config.clone());
    meta.extra
        .insert("form".into(), serde_json::to_value(form).unwrap());
    let mut traj = Trajectory::new(grid.times.clone(), meta);
    match form {
        FbForm::Pair => {
            traj.push_column("n_a", grid.states.iter().map(|s| s[0]).collect());
            traj.push_column("n_b", grid.states.iter().map(|s| s[1]).collect());
            traj.push_column("n_b_frac", grid.states.iter().map(|s| s[1] / n).collect());
            let drift = grid
                .states
                .iter()
                .map(|s| (2.0 * s[0] + s[1] - n).abs())
                .fold(0.0, f64::max);
            traj.metadata.conservation_drift = Some(drift);
        }
        FbForm::Reduced => {
            traj.push_column(
                "n_a",
                grid.states.iter().map(|s| (n - s[0]) / 2.0).collect(),
            );
            traj.push_column("n_b", grid.states.iter().map(|s| s[0]).collect());
            traj.push_column("n_b_frac", grid.states.iter().map(|s| s[0] / n).collect());
        }
    }
    Ok(traj)
}

#[derive(Debug, Error)]
pub enum SharpnessError {
    #[error("trajectory never reaches 99% decayed fraction")]
    ThresholdNotReached,
    #[error("trajectory lacks column n_b_frac")]
    MissingColumn,
}

/// Transition width over onset time, `(t_90 - t_10) / t_50`, from the sampled
/// decayed fraction. Requires the trajectory to reach 99% so all three
/// crossings are well inside the window.
pub fn sharpness(traj: &Trajectory) -> Result<f64, SharpnessError> {
    let frac = traj
        .column("n_b_frac")
        .ok_or(SharpnessError::MissingColumn)?;
    if !frac.iter().any(|&f| f >= 0.99) {
        return Err(SharpnessError::ThresholdNotReached);
    }
    let t10 = traj
        .crossing_time("n_b_frac", 0.1)
        .ok_or(SharpnessError::ThresholdNotReached)?;
    let t50 = traj
        .crossing_time("n_b_frac", 0.5)
        .ok_or(SharpnessError::ThresholdNotReached)?;
    let t90 = traj
        .crossing_time("n_b_frac", 0.9)
        .ok_or(SharpnessError::ThresholdNotReached)?;
    Ok((t90 - t10) / t50)
}

/// Logistic sharpness at equal N from the closed-form inversions,
/// `ln(9 (0.9N + 1)/(0.1N + 1)) / ln(N + 2)`; the Ω scale cancels.
pub fn logistic_sharpness(n_total: u64) -> f64 {
    let n = n_total as f64;
    (9.0 * (0.9 * n + 1.0) / (0.1 * n + 1.0)).ln() / (n + 2.0).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::linspace;

    fn tight(span: f64) -> IntegratorConfig {
        let mut c = IntegratorConfig::adaptive(span);
        c.rel_tol = 1e-11;
        c.abs_tol = 1e-13;
        c
    }

    /// Dense grid covering the explosion for a given N at γ = 1.
    fn fb_times(n: u64) -> Vec<f64> {
        let p = FbParams::new(n, 1.0);
        let t99 = reduced_time_to(0.999 * n as f64, &p);
        linspace(0.0, 1.3 * t99, 40_001)
    }

    #[test]
    fn rhs_spot_values() {
        let p = FbParams::new(100, 1.0);
        // Initial spontaneous rate: n_a = N/2, n_b = 0.
        let (da, db) = pair_rhs(50.0, 0.0, &p);
        assert!((db - 200.0).abs() < 1e-12);
        assert!((da + 100.0).abs() < 1e-12);
        // Depleted condensate.
        assert_eq!(pair_rhs(0.0, 17.0, &p), (0.0, 0.0));
        // Direct substitution: γ=1, n_b=50, n_a=25.
        let (_, db) = pair_rhs(25.0, 50.0, &p);
        assert!((db - 132_600.0).abs() < 1e-9);
    }

    #[test]
    fn reduced_rhs_consistency() {
        let p = FbParams::new(100, 1.0);
        assert_eq!(reduced_rhs(100.0, &p), 0.0);
        assert!((reduced_rhs(0.0, &p) - 200.0).abs() < 1e-12);
        assert!((reduced_rhs(50.0, &p) - 132_600.0).abs() < 1e-9);
        // Algebraically identical to the pair form under 2 n_a = N - n_b.
        for n_b in [0.0, 13.0, 50.0, 99.5] {
            let n_a = (100.0 - n_b) / 2.0;
            let (_, db) = pair_rhs(n_a, n_b, &p);
            assert!((db - reduced_rhs(n_b, &p)).abs() <= 1e-12 * db.abs());
        }
    }

    #[test]
    fn quadrature_oracle_is_inverse_of_dynamics() {
        // d/dn_b of reduced_time_to must equal 1/reduced_rhs; check by
        // finite differences at a few points.
        let p = FbParams::new(1000, 0.7);
        for n_b in [1.0, 50.0, 500.0, 900.0] {
            let h = 1e-4;
            let deriv = (reduced_time_to(n_b + h, &p) - reduced_time_to(n_b - h, &p)) / (2.0 * h);
            let expected = 1.0 / reduced_rhs(n_b, &p);
            // Threshold limited by cancellation in the finite difference.
            assert!(
                ((deriv - expected) / expected).abs() < 2e-5,
                "n_b = {n_b}: {deriv} vs {expected}"
            );
        }
        assert_eq!(reduced_time_to(0.0, &p), 0.0);
    }

    #[test]
    fn two_forms_agree() {
        let p = FbParams::new(1000, 1.0);
        let times = fb_times(1000);
        let span = *times.last().unwrap();
        let pair = simulate(&p, &times, FbForm::Pair, &tight(span)).unwrap();
        let reduced = simulate(&p, &times, FbForm::Reduced, &tight(span)).unwrap();
        let a = pair.column("n_b_frac").unwrap();
        let b = reduced.column("n_b_frac").unwrap();
        let max_diff = a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(max_diff <= 1e-9, "pair vs reduced differ by {max_diff}");
    }

    #[test]
    fn conservation_and_monotonicity() {
        let p = FbParams::new(200, 1.0);
        let times = fb_times(200);
        let span = *times.last().unwrap();
        let traj = simulate(&p, &times, FbForm::Pair, &tight(span)).unwrap();
        assert!(traj.metadata.conservation_drift.unwrap() <= 1e-9 * 200.0);
        let n_a = traj.column("n_a").unwrap();
        let n_b = traj.column("n_b").unwrap();
        assert!(n_a.windows(2).all(|w| w[1] <= w[0] + 1e-9));
        assert!(n_b.windows(2).all(|w| w[1] >= w[0] - 1e-9));
        // Unique stable fixed point: everything decays.
        assert!((traj.column("n_b_frac").unwrap().last().unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn decoherence_rates_do_not_enter() {
        let times = fb_times(100);
        let span = *times.last().unwrap();
        let mut p = FbParams::new(100, 1.0);
        let base = simulate(&p, &times, FbForm::Pair, &tight(span)).unwrap();
        p.gamma_phi_a = 10.0;
        p.gamma_phi_b = 3.0;
        let dephased = simulate(&p, &times, FbForm::Pair, &tight(span)).unwrap();
        for (x, y) in base
            .column("n_b")
            .unwrap()
            .iter()
            .zip(dephased.column("n_b").unwrap())
        {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn onset_shifts_earlier_with_population() {
        let t50 = |n: u64| {
            let p = FbParams::new(n, 1.0);
            let times = fb_times(n);
            let span = *times.last().unwrap();
            let traj = simulate(&p, &times, FbForm::Reduced, &tight(span)).unwrap();
            traj.crossing_time("n_b_frac", 0.5).unwrap()
        };
        let (a, b, c) = (t50(100), t50(1000), t50(10_000));
        assert!(a > b && b > c, "t50 not decreasing: {a}, {b}, {c}");
    }

    #[test]
    fn crossings_match_quadrature_oracle() {
        let n = 10_000_u64;
        let p = FbParams::new(n, 1.0);
        let times = fb_times(n);
        let span = *times.last().unwrap();
        let traj = simulate(&p, &times, FbForm::Reduced, &tight(span)).unwrap();
        for q in [0.1, 0.5, 0.9] {
            let expected = reduced_time_to(q * n as f64, &p);
            let got = traj.crossing_time("n_b_frac", q).unwrap();
            assert!(
                ((got - expected) / expected).abs() < 1e-3,
                "q = {q}: {got} vs oracle {expected}"
            );
        }
    }

    #[test]
    fn sharper_than_logistic() {
        let n = 10_000_u64;
        let p = FbParams::new(n, 1.0);
        let times = fb_times(n);
        let span = *times.last().unwrap();
        let traj = simulate(&p, &times, FbForm::Reduced, &tight(span)).unwrap();
        let fb = sharpness(&traj).unwrap();
        let logistic = logistic_sharpness(n);
        // Frozen from the closed-form inversion at N = 1e4.
        assert!((logistic - 0.477_014_441_213_988_5).abs() < 1e-12);
        assert!(
            fb < logistic,
            "fb sharpness {fb} not below logistic {logistic}"
        );
        assert!(fb < 0.01, "fb transition unexpectedly wide: {fb}");
    }

    #[test]
    fn sharpness_requires_saturation() {
        let p = FbParams::new(100, 1.0);
        let t10 = reduced_time_to(10.0, &p);
        let times = linspace(0.0, t10, 101);
        let traj = simulate(&p, &times, FbForm::Reduced, &tight(t10)).unwrap();
        assert!(matches!(
            sharpness(&traj),
            Err(SharpnessError::ThresholdNotReached)
        ));
    }

    #[test]
    fn odd_or_tiny_populations_rejected() {
        assert!(FbParams::new(101, 1.0).validate().is_err());
        assert!(FbParams::new(0, 1.0).validate().is_err());
        assert!(FbParams::new(2, 1.0).validate().is_ok());
    }
}
