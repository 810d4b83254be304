//! Boson-to-fermion decay: a condensate mode `a` feeds a fermionic level
//! ladder through a preferred arrival level `alpha`, with downward
//! thermalization and neutrino escape.
//!
//! Truncated mean-field equations (occupations factorized, hbar = 1), with
//! the capture flux `P = g_alpha n_a (1 - n_alpha)(1 - n_c)`:
//!
//! ```text
//! dn_a/dt = -P
//! dn_c/dt =  P - Γ n_c
//! dn_k/dt =  δ_{k,alpha} P - γ n_k (1 - n_{k-1}) [k > 0]
//!                          + γ n_{k+1} (1 - n_k) [k < M]
//! ```
//!
//! Level 0 has no loss; the top level M receives nothing from above. The
//! total decayed-plus-undecayed number `n_a + Σ n_k` is conserved. The Pauli
//! factors bound every transition, so the decayed fraction can never beat the
//! pure exponential law `dn/dt = g_alpha (N - n)`; cooperative (superradiant)
//! speed-up is absent in this channel.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ode::{self, IntegratorConfig, IvpProblem};
use crate::trajectory::{SimError, Trajectory, TrajectoryMeta};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BfParams {
    /// Total atom number N.
    pub n_total: u64,
    /// Preferred arrival level index.
    pub alpha: usize,
    /// Ladder size M + 1 (levels 0..=M).
    pub n_levels: usize,
    /// Electron-capture rate g_alpha.
    pub g_alpha: f64,
    /// Uniform downward thermalization rate γ.
    pub gamma_th: f64,
    /// Optional per-bond rates γ_k (index k is the k -> k-1 bond, entry 0
    /// unused); None means the uniform `gamma_th` everywhere.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gamma_profile: Option<Vec<f64>>,
    /// Neutrino escape rate Γ.
    pub gamma_cap: f64,
    /// Mode energies; diagonal in the truncated dynamics, kept for the oracle.
    pub e_a: f64,
    pub e_levels: Vec<f64>,
    pub e_nu: f64,
}

impl BfParams {
    /// Minimal ladder 0..=alpha: the decay feeds only level `alpha` and
    /// relaxation is strictly downward, so higher levels are inert.
    pub fn new(n_total: u64, alpha: usize, g_alpha: f64, gamma_th: f64, gamma_cap: f64) -> Self {
        let n_levels = alpha + 1;
        BfParams {
            n_total,
            alpha,
            n_levels,
            g_alpha,
            gamma_th,
            gamma_profile: None,
            gamma_cap,
            e_a: 0.0,
            e_levels: (0..n_levels).map(|i| i as f64).collect(),
            e_nu: 0.0,
        }
    }

    pub fn with_levels(mut self, n_levels: usize) -> Self {
        self.n_levels = n_levels;
        self.e_levels = (0..n_levels).map(|i| i as f64).collect();
        self
    }

    /// Thermalization rate of the k -> k-1 bond.
    pub fn bond_rate(&self, k: usize) -> f64 {
        match &self.gamma_profile {
            Some(profile) => profile[k],
            None => self.gamma_th,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.n_total < 1 {
            return Err(SimError::InvalidParams("n_total must be >= 1".into()));
        }
        if self.alpha >= self.n_levels {
            return Err(SimError::InvalidParams(
                "alpha must lie inside the ladder".into(),
            ));
        }
        if self.g_alpha < 0.0 || self.gamma_th < 0.0 || self.gamma_cap < 0.0 {
            return Err(SimError::InvalidParams("rates must be >= 0".into()));
        }
        if self.e_levels.len() != self.n_levels {
            return Err(SimError::InvalidParams(
                "e_levels length must equal n_levels".into(),
            ));
        }
        if self.e_levels.windows(2).any(|w| w[1] < w[0]) {
            return Err(SimError::InvalidParams("e_levels must be ascending".into()));
        }
        if let Some(profile) = &self.gamma_profile {
            if profile.len() != self.n_levels {
                return Err(SimError::InvalidParams(
                    "gamma_profile length must equal n_levels".into(),
                ));
            }
            if profile.iter().any(|&g| g < 0.0) {
                return Err(SimError::InvalidParams(
                    "gamma_profile rates must be >= 0".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Mean occupations; `n_k[i]` is the i-th ladder level.
#[derive(Debug, Clone, PartialEq)]
pub struct BfState {
    pub n_a: f64,
    pub n_c: f64,
    pub n_k: Vec<f64>,
}

impl BfState {
    pub fn initial(params: &BfParams) -> Self {
        BfState {
            n_a: params.n_total as f64,
            n_c: 0.0,
            n_k: vec![0.0; params.n_levels],
        }
    }
}

/// Capture flux P = g_alpha n_a (1 - n_alpha)(1 - n_c).
pub fn capture_flux(state: &BfState, params: &BfParams) -> f64 {
    params.g_alpha * state.n_a * (1.0 - state.n_k[params.alpha]) * (1.0 - state.n_c)
}

/// Right-hand side of the truncated hierarchy.
pub fn rhs(state: &BfState, params: &BfParams) -> BfState {
    let m = params.n_levels - 1;
    let p = capture_flux(state, params);
    let mut d = BfState {
        n_a: -p,
        n_c: p - params.gamma_cap * state.n_c,
        n_k: vec![0.0; m + 1],
    };
    d.n_k[params.alpha] = p;
    // One flux per bond so level sums cancel exactly.
    for k in 1..=m {
        let flux = params.bond_rate(k) * state.n_k[k] * (1.0 - state.n_k[k - 1]);
        d.n_k[k] -= flux;
        d.n_k[k - 1] += flux;
    }
    d
}

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("empty trajectory")]
    EmptyTrajectory,
    #[error("trajectory lacks required column {0}")]
    MissingColumn(String),
    #[error("trajectory metadata does not carry usable model parameters")]
    MissingParams,
}

/// Integrate from n_a = N, n_k = 0, n_c = 0.
///
/// With `fast_neutrino` the neutrino occupation is pinned to zero and dropped
/// from the state vector (instant escape, `<n_c> ~ 0`); Γ then never enters.
pub fn simulate(
    params: &BfParams,
    sample_times: &[f64],
    fast_neutrino: bool,
    config: &IntegratorConfig,
) -> Result<Trajectory, SimError> {
    params.validate()?;
    let n = params.n_total as f64;
    let m1 = params.n_levels;
    let t_end = *sample_times
        .last()
        .ok_or_else(|| SimError::InvalidParams("sample_times must not be empty".into()))?;

    let p = params.clone();
    let grid = if fast_neutrino {
        // State layout: [n_a, n_0..n_M].
        let problem = IvpProblem {
            dimension: 1 + m1,
            rhs: move |_t: f64, y: &[f64], dy: &mut [f64]| {
                let state = BfState {
                    n_a: y[0],
                    n_c: 0.0,
                    n_k: y[1..].to_vec(),
                };
                let d = rhs(&state, &p);
                dy[0] = d.n_a;
                dy[1..].copy_from_slice(&d.n_k);
            },
            t0: 0.0,
            y0: {
                let mut y = vec![0.0; 1 + m1];
                y[0] = n;
                y
            },
            t_end,
        };
        ode::integrate(&problem, config, sample_times)?
    } else {
        // State layout: [n_a, n_c, n_0..n_M].
        let problem = IvpProblem {
            dimension: 2 + m1,
            rhs: move |_t: f64, y: &[f64], dy: &mut [f64]| {
                let state = BfState {
                    n_a: y[0],
                    n_c: y[1],
                    n_k: y[2..].to_vec(),
                };
                let d = rhs(&state, &p);
                dy[0] = d.n_a;
                dy[1] = d.n_c;
                dy[2..].copy_from_slice(&d.n_k);
            },
            t0: 0.0,
            y0: {
                let mut y = vec![0.0; 2 + m1];
                y[0] = n;
                y
            },
            t_end,
        };
        ode::integrate(&problem, config, sample_times)?
    };

    fn ladder(s: &[f64], fast_neutrino: bool) -> &[f64] {
        if fast_neutrino {
            &s[1..]
        } else {
            &s[2..]
        }
    }

    let mut meta = TrajectoryMeta::new("bf", serde_json::to_value(params).unwrap());
    meta.integrator = Some(config.clone());
    meta.extra
        .insert("fast_neutrino".into(), serde_json::json!(fast_neutrino));
    meta.extra
        .insert("time_unit".into(), serde_json::json!("1/gamma_th"));
    let mut traj = Trajectory::new(grid.times.clone(), meta);
    traj.push_column("n_a", grid.states.iter().map(|s| s[0]).collect());
    traj.push_column(
        "n_c",
        grid.states
            .iter()
            .map(|s| if fast_neutrino { 0.0 } else { s[1] })
            .collect(),
    );
    traj.push_column(
        "decayed_frac",
        grid.states
            .iter()
            .map(|s| ladder(s, fast_neutrino).iter().sum::<f64>() / n)
            .collect(),
    );
    for k in 0..m1 {
        traj.push_column(
            &format!("n_k_{k}"),
            grid.states
                .iter()
                .map(|s| ladder(s, fast_neutrino)[k])
                .collect(),
        );
    }
    let drift = grid
        .states
        .iter()
        .map(|s| (s[0] + ladder(s, fast_neutrino).iter().sum::<f64>() - n).abs())
        .fold(0.0, f64::max);
    traj.metadata.conservation_drift = Some(drift);

    // Occupation bounds are never clamped; a real violation means the
    // integration itself failed and must surface as an error.
    for (s, &t) in grid.states.iter().zip(&grid.times) {
        if ladder(s, fast_neutrino)
            .iter()
            .any(|&v| !(-1e-6..=1.0 + 1e-6).contains(&v))
        {
            return Err(SimError::Ode(ode::OdeError::NonFiniteState { t }));
        }
    }
    Ok(traj)
}

/// Instantaneous capture rate `-dn_a/dt` recomputed from sampled occupations.
pub fn capture_rate_series(traj: &Trajectory) -> Result<Vec<f64>, MetricError> {
    let params: BfParams = serde_json::from_value(traj.metadata.params.clone())
        .map_err(|_| MetricError::MissingParams)?;
    let n_a = traj
        .column("n_a")
        .ok_or_else(|| MetricError::MissingColumn("n_a".into()))?;
    let n_c = traj
        .column("n_c")
        .ok_or_else(|| MetricError::MissingColumn("n_c".into()))?;
    let n_alpha = traj
        .column(&format!("n_k_{}", params.alpha))
        .ok_or_else(|| MetricError::MissingColumn(format!("n_k_{}", params.alpha)))?;
    Ok(n_a
        .iter()
        .zip(n_alpha)
        .zip(n_c)
        .map(|((&a, &na), &nc)| params.g_alpha * a * (1.0 - na) * (1.0 - nc))
        .collect())
}

/// Pauli-blocking plateau score of a sampled decay.
///
/// Decay curves live on a logarithmic time axis, so the instantaneous rate is
/// taken per unit log-time, `-dn_a/d(ln t) = t * P`, and compared against its
/// running maximum from the start of the trajectory. The metric is the
/// largest relative dip observed while the sample time lies in the middle
/// third of the logarithmic time window. A decay whose log-time rate rises
/// into a single peak (the exponential-like regimes) scores near zero; a
/// burst that stalls on arrival-level blocking before thermalization reopens
/// it (the plateau) scores above 0.5.
pub fn plateau_metric(traj: &Trajectory) -> Result<f64, MetricError> {
    if traj.times.is_empty() {
        return Err(MetricError::EmptyTrajectory);
    }
    let rate = capture_rate_series(traj)?;
    // Positive times only: the window is logarithmic.
    let positive: Vec<(f64, f64)> = traj
        .times
        .iter()
        .zip(&rate)
        .filter(|(&t, _)| t > 0.0)
        .map(|(&t, &r)| (t, t * r))
        .collect();
    if positive.len() < 3 {
        return Err(MetricError::EmptyTrajectory);
    }
    let l0 = positive.first().unwrap().0.ln();
    let l1 = positive.last().unwrap().0.ln();
    let (w_lo, w_hi) = (l0 + (l1 - l0) / 3.0, l0 + 2.0 * (l1 - l0) / 3.0);
    let mut run_max = f64::MIN_POSITIVE;
    let mut dip: f64 = 0.0;
    for (t, r) in positive {
        run_max = run_max.max(r);
        let lt = t.ln();
        if lt >= w_lo && lt <= w_hi {
            dip = dip.max(1.0 - r / run_max);
        }
    }
    Ok(dip)
}
