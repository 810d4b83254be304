//! wasm-bindgen surface for the browser demo (`www/index.html`).
//!
//! Three interactive views over the core models:
//!
//! - boson-boson decay vs population and interaction strength,
//! - Pauli-blocked ladder decay vs capture/thermalization ratio, with the
//!   ladder occupation profile at a scrubbed time,
//! - pair-decay explosion against the logistic shape at equal population.
//!
//! Curves come back as flat `Float64Array`s, `[t_0.., v_0..]`, to keep the
//! page framework-free. Build with `wasm-pack build crates/web --target web`.

use wasm_bindgen::prelude::wasm_bindgen;

use nudecay::bb::{self, BbVariant};
use nudecay::bf;
use nudecay::fb::{self, FbForm};
use nudecay::figures::{fig3_params, unit_omega_params};
use nudecay::ode::{linspace, logspace, IntegratorConfig};

fn pack(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(times.len() + values.len());
    out.extend_from_slice(times);
    out.extend_from_slice(values);
    out
}

/// Decayed fraction of the boson-boson model at unit collective rate.
///
/// `eta` is the interaction parameter; 0 gives plain logistic growth. The
/// window extends until the curve saturates; returns `[times..., fracs...]`.
#[wasm_bindgen]
pub fn bb_curve(n_total: u32, eta: f64, n_samples: usize) -> Vec<f64> {
    let n = n_total.clamp(1, 1_000_000) as u64;
    let n_samples = n_samples.clamp(16, 20_000);
    let mut params = unit_omega_params(n);
    params.u = eta.max(0.0).sqrt() * params.gamma_cap / n as f64;
    let omega = bb::omega(&params);
    let mut t_end = 30.0 / (omega * (n + 1) as f64);
    loop {
        let times = linspace(0.0, t_end, n_samples);
        let traj = bb::simulate(
            &params,
            BbVariant::Interacting,
            &times,
            &IntegratorConfig::adaptive(t_end),
        )
        .expect("bb integration");
        let frac = traj.column("n_b_frac").unwrap();
        if *frac.last().unwrap() >= 0.999 {
            return pack(&traj.times, frac);
        }
        t_end *= 2.0;
    }
}

/// Decayed fraction of the ladder model (N = 100, alpha = 80) on a log-time
/// grid in units of 1/gamma; returns `[times..., fracs...]`.
#[wasm_bindgen]
pub fn bf_curve(g_over_gamma: f64, n_samples: usize) -> Vec<f64> {
    let g = g_over_gamma.clamp(1e-3, 10.0);
    let n_samples = n_samples.clamp(16, 5_000);
    let params = fig3_params(g);
    let times = logspace(1e-4, 1e3, n_samples, true);
    let t_end = *times.last().unwrap();
    let traj = bf::simulate(&params, &times, true, &IntegratorConfig::adaptive(t_end))
        .expect("bf integration");
    pack(&traj.times, traj.column("decayed_frac").unwrap())
}

/// Ladder occupations n_0..n_80 of the same model at time `t` (units 1/gamma).
#[wasm_bindgen]
pub fn bf_ladder(g_over_gamma: f64, t: f64) -> Vec<f64> {
    let g = g_over_gamma.clamp(1e-3, 10.0);
    let t = t.clamp(1e-4, 1e3);
    let params = fig3_params(g);
    let times = [0.0, t];
    let traj = bf::simulate(&params, &times, true, &IntegratorConfig::adaptive(t))
        .expect("bf integration");
    (0..params.n_levels)
        .map(|k| traj.column(&format!("n_k_{k}")).unwrap()[1])
        .collect()
}

/// Pair-decay explosion, onset-normalized: `[t/t50..., fracs...]`.
#[wasm_bindgen]
pub fn fb_curve(n_total: u32, n_samples: usize) -> Vec<f64> {
    let n = (n_total.clamp(4, 100_000) & !1) as u64; // even
    let n_samples = n_samples.clamp(16, 60_000);
    let params = fb::FbParams::new(n, 1.0);
    let t_end = 1.3 * fb::reduced_time_to(0.999 * n as f64, &params);
    let times = linspace(0.0, t_end, n_samples);
    let mut config = IntegratorConfig::adaptive(t_end);
    config.rel_tol = 1e-10;
    let traj = fb::simulate(&params, &times, FbForm::Reduced, &config).expect("fb integration");
    let t50 = traj
        .crossing_time("n_b_frac", 0.5)
        .expect("half decay reached");
    let scaled: Vec<f64> = traj.times.iter().map(|&t| t / t50).collect();
    pack(&scaled, traj.column("n_b_frac").unwrap())
}

/// Logistic decay at equal population, onset-normalized the same way, for
/// shape comparison against [`fb_curve`].
#[wasm_bindgen]
pub fn logistic_curve_normalized(n_total: u32, n_samples: usize) -> Vec<f64> {
    let n = n_total.clamp(1, 1_000_000) as u64;
    let n_samples = n_samples.clamp(16, 60_000);
    let omega = 1.0;
    let t50 = ((n + 2) as f64).ln() / (omega * (n + 1) as f64);
    // Same normalized window [0, 3 t50] as a typical fb_curve view.
    let times = linspace(0.0, 3.0 * t50, n_samples);
    let fracs: Vec<f64> = times
        .iter()
        .map(|&t| bb::logistic_closed_form(t, n, omega))
        .collect();
    let scaled: Vec<f64> = times.iter().map(|&t| t / t50).collect();
    pack(&scaled, &fracs)
}
