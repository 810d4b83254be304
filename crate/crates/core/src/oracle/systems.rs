//! Lindblad systems for the three decay models on truncated Fock spaces,
//! the exact pre-factorization equation-of-motion identities, and the
//! seeded identity battery the CLI exposes.

use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use super::fock::{DensityMatrix, FockSpace, Mode, OpKind, Operator, DEFAULT_DIM_CAP};
use super::lindblad::{check_eom_identity, evolve, LindbladSystem};
use super::OracleError;
use crate::bb::BbParams;
use crate::bf::BfParams;
use crate::fb::FbParams;

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn mode(space: &Arc<FockSpace>, label: &str, kind: OpKind) -> Result<Operator, OracleError> {
    Operator::mode_op(space, label, kind)
}

/// Boson-boson system: modes (a, b bosonic at `bose_trunc`, c fermionic).
///
/// `H = ε_a n_a + ε_b n_b + E_ν n_c + (g c†b†a + h.c.) + U(n_a² + n_b² + n_a n_b)`
/// with the single escape jump `√(2Γ) c`.
pub fn build_bb_system(
    params: &BbParams,
    bose_trunc: usize,
) -> Result<LindbladSystem, OracleError> {
    let required = params.n_total as usize + 1;
    if bose_trunc < required {
        return Err(OracleError::TruncationTooSmall {
            required,
            got: bose_trunc,
        });
    }
    let space = FockSpace::new(
        vec![
            Mode::bose("a", bose_trunc),
            Mode::bose("b", bose_trunc),
            Mode::fermi("c"),
        ],
        DEFAULT_DIM_CAP,
    )?;
    let n_a = mode(&space, "a", OpKind::Number)?;
    let n_b = mode(&space, "b", OpKind::Number)?;
    let n_c = mode(&space, "c", OpKind::Number)?;
    // Vertex g c†b†a + h.c. with complex g.
    let vertex = mode(&space, "c", OpKind::Create)?
        .mul(&mode(&space, "b", OpKind::Create)?)
        .mul(&mode(&space, "a", OpKind::Destroy)?);
    let g = params.g_complex();
    let mut h = n_a
        .scale(re(params.eps_a))
        .add(&n_b.scale(re(params.eps_b)))
        .add(&n_c.scale(re(params.e_nu)))
        .add(&vertex.scale(g))
        .add(&vertex.adjoint().scale(g.conj()));
    if params.u != 0.0 {
        h = h.add(&collision_hamiltonian(
            &space, params.u, params.u, params.u,
        )?);
    }
    let escape = mode(&space, "c", OpKind::Destroy)?.scale(re((2.0 * params.gamma_cap).sqrt()));
    LindbladSystem::new(h, &[escape])
}

/// Contact-interaction term `U_a n_a² + U_b n_b² + U_ab n_a n_b` on a
/// boson-boson space.
pub fn collision_hamiltonian(
    space: &Arc<FockSpace>,
    u_a: f64,
    u_b: f64,
    u_ab: f64,
) -> Result<Operator, OracleError> {
    let n_a = mode(space, "a", OpKind::Number)?;
    let n_b = mode(space, "b", OpKind::Number)?;
    Ok(n_a
        .mul(&n_a)
        .scale(re(u_a))
        .add(&n_b.mul(&n_b).scale(re(u_b)))
        .add(&n_a.mul(&n_b).scale(re(u_ab))))
}

/// Boson-fermion system: modes (a bosonic, b_0..b_M fermionic, c fermionic),
/// diagonal Hamiltonian, jumps `√g_α c†b_α†a`, `√Γ c`, `√γ b_{k-1}†b_k`.
pub fn build_bf_system(
    params: &BfParams,
    bose_trunc: usize,
) -> Result<LindbladSystem, OracleError> {
    let required = params.n_total as usize + 1;
    if bose_trunc < required {
        return Err(OracleError::TruncationTooSmall {
            required,
            got: bose_trunc,
        });
    }
    let mut modes = vec![Mode::bose("a", bose_trunc)];
    for k in 0..params.n_levels {
        modes.push(Mode::fermi(&format!("b{k}")));
    }
    modes.push(Mode::fermi("c"));
    let space = FockSpace::new(modes, DEFAULT_DIM_CAP)?;

    let mut h = mode(&space, "a", OpKind::Number)?.scale(re(params.e_a));
    for k in 0..params.n_levels {
        let nk = mode(&space, &format!("b{k}"), OpKind::Number)?;
        h = h.add(&nk.scale(re(params.e_levels[k])));
    }
    h = h.add(&mode(&space, "c", OpKind::Number)?.scale(re(params.e_nu)));

    let mut jumps = Vec::new();
    let capture = mode(&space, "c", OpKind::Create)?
        .mul(&mode(
            &space,
            &format!("b{}", params.alpha),
            OpKind::Create,
        )?)
        .mul(&mode(&space, "a", OpKind::Destroy)?)
        .scale(re(params.g_alpha.sqrt()));
    jumps.push(capture);
    jumps.push(mode(&space, "c", OpKind::Destroy)?.scale(re(params.gamma_cap.sqrt())));
    for k in 1..params.n_levels {
        let hop = mode(&space, &format!("b{}", k - 1), OpKind::Create)?
            .mul(&mode(&space, &format!("b{k}"), OpKind::Destroy)?)
            .scale(re(params.bond_rate(k).sqrt()));
        jumps.push(hop);
    }
    LindbladSystem::new(h, &jumps)
}

/// Fermion-pair/boson system: modes (a bosonic pairs, b bosonic daughters),
/// diagonal Hamiltonian, jumps `√γ (b†)² a` plus the two dephasing channels.
pub fn build_fb_system(
    params: &FbParams,
    pair_trunc: usize,
    bose_trunc: usize,
) -> Result<LindbladSystem, OracleError> {
    let required_pairs = params.n_total as usize / 2 + 1;
    if pair_trunc < required_pairs {
        return Err(OracleError::TruncationTooSmall {
            required: required_pairs,
            got: pair_trunc,
        });
    }
    let required_bose = params.n_total as usize + 1;
    if bose_trunc < required_bose {
        return Err(OracleError::TruncationTooSmall {
            required: required_bose,
            got: bose_trunc,
        });
    }
    let space = FockSpace::new(
        vec![Mode::bose("a", pair_trunc), Mode::bose("b", bose_trunc)],
        DEFAULT_DIM_CAP,
    )?;
    let n_a = mode(&space, "a", OpKind::Number)?;
    let n_b = mode(&space, "b", OpKind::Number)?;
    let h = n_a.scale(re(params.e_a)).add(&n_b.scale(re(params.e_b)));
    let b_create = mode(&space, "b", OpKind::Create)?;
    let decay = b_create
        .mul(&b_create)
        .mul(&mode(&space, "a", OpKind::Destroy)?)
        .scale(re(params.gamma_decay.sqrt()));
    let deph_a = n_a.scale(re(params.gamma_phi_a.sqrt()));
    let deph_b = n_b.scale(re(params.gamma_phi_b.sqrt()));
    LindbladSystem::new(h, &[decay, deph_a, deph_b])
}

/// Max-norm residual of the three-term commutator formula
/// `[H_coll, a†bc] = (2U_a - U_ab) a†bc n_a - (2U_b - U_ab) a†bc n_b
///                   + (U_a + U_b - U_ab) a†bc`
/// with general couplings, evaluated by direct matrix algebra.
pub fn collision_commutator_residual(
    bose_trunc: usize,
    u_a: f64,
    u_b: f64,
    u_ab: f64,
) -> Result<f64, OracleError> {
    let space = FockSpace::new(
        vec![
            Mode::bose("a", bose_trunc),
            Mode::bose("b", bose_trunc),
            Mode::fermi("c"),
        ],
        DEFAULT_DIM_CAP,
    )?;
    let h_coll = collision_hamiltonian(&space, u_a, u_b, u_ab)?;
    let y = mode(&space, "a", OpKind::Create)?
        .mul(&mode(&space, "b", OpKind::Destroy)?)
        .mul(&mode(&space, "c", OpKind::Destroy)?);
    let n_a = mode(&space, "a", OpKind::Number)?;
    let n_b = mode(&space, "b", OpKind::Number)?;
    let expected = y
        .mul(&n_a)
        .scale(re(2.0 * u_a - u_ab))
        .sub(&y.mul(&n_b).scale(re(2.0 * u_b - u_ab)))
        .add(&y.scale(re(u_a + u_b - u_ab)));
    Ok(h_coll.commutator(&y).sub(&expected).max_abs())
}

/// Max drift of `<op>` from its initial value along an exact evolution.
pub fn conservation_drift(
    system: &LindbladSystem,
    rho0: &DensityMatrix,
    op: &Operator,
    sample_times: &[f64],
) -> Result<f64, OracleError> {
    let states = evolve(system, rho0, sample_times)?;
    let initial = rho0.expectation(op).re;
    Ok(states
        .iter()
        .map(|rho| (rho.expectation(op).re - initial).abs())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone)]
pub struct IdentityReport {
    pub name: &'static str,
    pub max_residual: f64,
    pub states_checked: usize,
}

/// Verify the models' pre-factorization equations of motion as operator
/// identities on seeded random density matrices.
///
/// States are drawn inside each system's conserved-charge sector
/// (`n_a + n_b <= N`, `n_a + Σn_k <= N`, `2n_a + n_b <= N`), where bosonic
/// truncation is exact; above it the top ladder level clips `a a†` and the
/// identities pick up truncation artifacts that the dynamics itself never
/// explores.
///
/// The four identities, each checked against the full Lindblad generator:
///
/// - boson-boson population: `d<n_a>/dt = 2 Im[g* <a†bc>]`,
/// - boson-boson correlator:
///   `d<a†bc>/dt = (iΔ - Γ)<a†bc> + ig <n_c n_b (1+n_a) - n_a (1+n_b)(1-n_c)>`
///   (checked before any factorization; the grouped form agrees with the
///   raw commutator),
/// - boson-fermion population: `d<n_a>/dt = -g_α <n_a (1-n_α)(1-n_c)>`,
/// - pair-boson population: `d<n_a>/dt = -γ <n_a (n_b+1)(n_b+2)>`.
pub fn identity_battery(
    seed: u64,
    states_per_identity: usize,
) -> Result<Vec<IdentityReport>, OracleError> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut reports = Vec::new();

    // Boson-boson at N = 2 with a complex coupling and nonzero detuning;
    // U = 0 so the bare-detuning correlator identity applies verbatim.
    let mut bb = BbParams::new(2, 0.7, 0.3, 1.1);
    bb.g_phase = 0.4;
    let system = build_bb_system(&bb, 3)?;
    let space = &system.space.clone();
    let n_a = mode(space, "a", OpKind::Number)?;
    let n_b = mode(space, "b", OpKind::Number)?;
    let n_c = mode(space, "c", OpKind::Number)?;
    let one = Operator::identity(space);
    let y = mode(space, "a", OpKind::Create)?
        .mul(&mode(space, "b", OpKind::Destroy)?)
        .mul(&mode(space, "c", OpKind::Destroy)?);
    let g = bb.g_complex();
    // 2 Im[g* S] as an operator: -i g* Y + i g Y†.
    let population_rhs = y
        .scale(Complex64::new(0.0, -1.0) * g.conj())
        .add(&y.adjoint().scale(Complex64::new(0.0, 1.0) * g));
    let bb_sector = |occs: &[usize]| occs[0] + occs[1] <= 2;
    let mut max_r: f64 = 0.0;
    for _ in 0..states_per_identity {
        let rho = DensityMatrix::random_in_sector(space, &mut rng, bb_sector);
        max_r = max_r.max(check_eom_identity(&system, &rho, &n_a, &population_rhs)?);
    }
    reports.push(IdentityReport {
        name: "bb_population",
        max_residual: max_r,
        states_checked: states_per_identity,
    });

    let blocked = one.sub(&n_c);
    let correlator_rhs = y.scale(Complex64::new(-bb.gamma_cap, bb.delta)).add(
        &one.add(&n_a)
            .mul(&n_b)
            .mul(&n_c)
            .sub(&n_a.mul(&one.add(&n_b)).mul(&blocked))
            .scale(Complex64::new(0.0, 1.0) * g),
    );
    let mut max_r: f64 = 0.0;
    for _ in 0..states_per_identity {
        let rho = DensityMatrix::random_in_sector(space, &mut rng, bb_sector);
        max_r = max_r.max(check_eom_identity(&system, &rho, &y, &correlator_rhs)?);
    }
    reports.push(IdentityReport {
        name: "bb_correlator",
        max_residual: max_r,
        states_checked: states_per_identity,
    });

    // Boson-fermion at N = 2 with a two-level ladder (alpha = 1).
    let bf = BfParams::new(2, 1, 0.8, 0.6, 1.3);
    let system = build_bf_system(&bf, 3)?;
    let space = &system.space.clone();
    let n_a = mode(space, "a", OpKind::Number)?;
    let n_alpha = mode(space, "b1", OpKind::Number)?;
    let n_c = mode(space, "c", OpKind::Number)?;
    let one = Operator::identity(space);
    let capture_rhs = n_a
        .mul(&one.sub(&n_alpha))
        .mul(&one.sub(&n_c))
        .scale(re(-bf.g_alpha));
    let mut max_r: f64 = 0.0;
    for _ in 0..states_per_identity {
        let rho = DensityMatrix::random_in_sector(space, &mut rng, |occs: &[usize]| {
            occs[0] + occs[1..3].iter().sum::<usize>() <= 2
        });
        max_r = max_r.max(check_eom_identity(&system, &rho, &n_a, &capture_rhs)?);
    }
    reports.push(IdentityReport {
        name: "bf_population",
        max_residual: max_r,
        states_checked: states_per_identity,
    });

    // Pair-boson at N = 4, with dephasing channels switched on.
    let mut fb = FbParams::new(4, 0.9);
    fb.gamma_phi_a = 0.3;
    fb.gamma_phi_b = 0.5;
    let system = build_fb_system(&fb, 3, 5)?;
    let space = &system.space.clone();
    let n_a = mode(space, "a", OpKind::Number)?;
    let n_b = mode(space, "b", OpKind::Number)?;
    let one = Operator::identity(space);
    let two = one.scale(re(2.0));
    let pair_rhs = n_a
        .mul(&n_b.add(&one))
        .mul(&n_b.add(&two))
        .scale(re(-fb.gamma_decay));
    let mut max_r: f64 = 0.0;
    for _ in 0..states_per_identity {
        let rho = DensityMatrix::random_in_sector(space, &mut rng, |occs: &[usize]| {
            2 * occs[0] + occs[1] <= 4
        });
        max_r = max_r.max(check_eom_identity(&system, &rho, &n_a, &pair_rhs)?);
    }
    reports.push(IdentityReport {
        name: "fb_population",
        max_residual: max_r,
        states_checked: states_per_identity,
    });

    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bb::{self, BbVariant};
    use crate::ode::{linspace, IntegratorConfig};

    #[test]
    fn bb_dimension_arithmetic() {
        let p = BbParams::new(2, 0.5, 0.0, 1.0);
        let system = build_bb_system(&p, 3).unwrap();
        assert_eq!(system.space.total_dim(), 3 * 3 * 2);
        assert!(matches!(
            build_bb_system(&p, 2),
            Err(OracleError::TruncationTooSmall {
                required: 3,
                got: 2
            })
        ));
    }

    #[test]
    fn bf_dimension_arithmetic() {
        let p = BfParams::new(2, 1, 0.8, 0.6, 1.3);
        let system = build_bf_system(&p, 3).unwrap();
        assert_eq!(system.space.total_dim(), 3 * 2 * 2 * 2);
    }

    #[test]
    fn fb_dimension_arithmetic() {
        let p = FbParams::new(4, 1.0);
        let system = build_fb_system(&p, 3, 5).unwrap();
        assert_eq!(system.space.total_dim(), 15);
    }

    #[test]
    fn decoupled_bb_keeps_populations() {
        // g = 0: |N, 0, 0> is stationary in the populations.
        let p = BbParams::new(2, 0.0, 0.0, 1.0);
        let system = build_bb_system(&p, 3).unwrap();
        let rho0 = DensityMatrix::pure_fock(&system.space, &[2, 0, 0]);
        let n_a = mode(&system.space, "a", OpKind::Number).unwrap();
        let drift = conservation_drift(&system, &rho0, &n_a, &[0.5, 1.5, 4.0]).unwrap();
        assert!(drift < 1e-10, "n_a drifted by {drift}");
    }

    #[test]
    fn decoupled_bf_keeps_condensate() {
        let mut p = BfParams::new(2, 1, 0.0, 0.6, 1.3);
        p.e_a = 0.4;
        let system = build_bf_system(&p, 3).unwrap();
        let rho0 = DensityMatrix::pure_fock(&system.space, &[2, 0, 0, 0]);
        let n_a = mode(&system.space, "a", OpKind::Number).unwrap();
        let drift = conservation_drift(&system, &rho0, &n_a, &[1.0, 3.0]).unwrap();
        assert!(drift < 1e-10);
    }

    #[test]
    fn frozen_fb_when_decay_off() {
        let p = FbParams::new(4, 0.0);
        let system = build_fb_system(&p, 3, 5).unwrap();
        let rho0 = DensityMatrix::pure_fock(&system.space, &[2, 0]);
        let n_b = mode(&system.space, "b", OpKind::Number).unwrap();
        let drift = conservation_drift(&system, &rho0, &n_b, &[1.0, 2.0]).unwrap();
        assert!(drift < 1e-12);
    }

    #[test]
    fn conserved_charges_under_evolution() {
        // BB: n_a + n_b; FB: 2 n_a + n_b.
        let p = BbParams::new(2, 0.7, 0.2, 1.0);
        let system = build_bb_system(&p, 3).unwrap();
        let rho0 = DensityMatrix::pure_fock(&system.space, &[2, 0, 0]);
        let total = mode(&system.space, "a", OpKind::Number)
            .unwrap()
            .add(&mode(&system.space, "b", OpKind::Number).unwrap());
        let drift = conservation_drift(&system, &rho0, &total, &linspace(0.1, 3.0, 10)).unwrap();
        assert!(drift < 1e-8, "BB total drifted by {drift}");

        let p = FbParams::new(4, 0.9);
        let system = build_fb_system(&p, 3, 5).unwrap();
        let rho0 = DensityMatrix::pure_fock(&system.space, &[2, 0]);
        let total = mode(&system.space, "a", OpKind::Number)
            .unwrap()
            .scale(re(2.0))
            .add(&mode(&system.space, "b", OpKind::Number).unwrap());
        let drift = conservation_drift(&system, &rho0, &total, &linspace(0.05, 1.5, 10)).unwrap();
        assert!(drift < 1e-8, "FB charge drifted by {drift}");
    }

    #[test]
    fn identity_battery_is_exact() {
        let reports = identity_battery(42, 20).unwrap();
        assert_eq!(reports.len(), 4);
        for r in &reports {
            assert_eq!(r.states_checked, 20);
            assert!(
                r.max_residual < 1e-8,
                "{}: residual {}",
                r.name,
                r.max_residual
            );
        }
    }

    #[test]
    fn decoupled_identity_residual_is_zero() {
        // g = 0: both sides of the population identity vanish identically.
        let p = BbParams::new(2, 0.0, 0.0, 1.0);
        let system = build_bb_system(&p, 3).unwrap();
        let space = system.space.clone();
        let n_a = mode(&space, "a", OpKind::Number).unwrap();
        let zero = Operator::zero(&space);
        let mut rng = {
            use rand::SeedableRng;
            rand_chacha::ChaCha12Rng::seed_from_u64(5)
        };
        let rho = DensityMatrix::random_in_sector(&space, &mut rng, |o| o[0] + o[1] <= 2);
        let r = super::check_eom_identity(&system, &rho, &n_a, &zero).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn collision_commutator_formula_holds() {
        // Unequal couplings.
        let r = collision_commutator_residual(4, 0.37, 0.81, 0.13).unwrap();
        assert!(r < 1e-12, "residual {r}");
        // Wrong formula would show O(U) residuals; sanity-check the scale.
        let r2 = collision_commutator_residual(4, 1.0, 0.0, 0.0).unwrap();
        assert!(r2 < 1e-12, "residual {r2}");
    }

    #[test]
    fn fb_dephasing_invisible_in_populations() {
        let times = linspace(0.02, 0.8, 8);
        let run = |phi_a: f64, phi_b: f64| {
            let mut p = FbParams::new(4, 1.0);
            p.gamma_phi_a = phi_a;
            p.gamma_phi_b = phi_b;
            let system = build_fb_system(&p, 3, 5).unwrap();
            let rho0 = DensityMatrix::pure_fock(&system.space, &[2, 0]);
            let n_a = mode(&system.space, "a", OpKind::Number).unwrap();
            let n_b = mode(&system.space, "b", OpKind::Number).unwrap();
            let states = evolve(&system, &rho0, &times).unwrap();
            states
                .iter()
                .flat_map(|rho| [rho.expectation(&n_a).re, rho.expectation(&n_b).re])
                .collect::<Vec<f64>>()
        };
        let base = run(0.0, 0.0);
        let dephased = run(10.0, 10.0);
        let max_diff = base
            .iter()
            .zip(&dephased)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(
            max_diff < 1e-10,
            "dephasing changed populations by {max_diff}"
        );
    }

    #[test]
    fn exact_bb_tracks_mean_field_at_small_n() {
        // N = 2, Γ/g = 100: the factorized system should follow the exact
        // <n_b>(t) qualitatively; the deviation is reported, not pinned.
        let mut p = BbParams::new(2, 1.0, 0.0, 100.0);
        p.eps_a = 0.0;
        let system = build_bb_system(&p, 3).unwrap();
        let rho0 = DensityMatrix::pure_fock(&system.space, &[2, 0, 0]);
        let om = bb::omega(&p);
        let t_end = 0.15 * (4.0_f64).ln() / (om * 3.0);
        let times = linspace(0.1 * t_end, t_end, 4);
        let states = evolve(&system, &rho0, &times).unwrap();
        let n_b_op = mode(&system.space, "b", OpKind::Number).unwrap();
        let exact: Vec<f64> = states
            .iter()
            .map(|rho| rho.expectation(&n_b_op).re)
            .collect();

        let mf = bb::simulate(
            &p,
            BbVariant::Full,
            &times,
            &IntegratorConfig::adaptive(t_end),
        )
        .unwrap();
        let approx = mf.column("n_b").unwrap();
        let max_dev = exact
            .iter()
            .zip(approx)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        println!("BB exact-vs-mean-field max |<n_b>| deviation at N=2: {max_dev:.3e}");
        assert!(
            max_dev < 0.5,
            "deviation {max_dev} out of qualitative range"
        );
        // Both show actual decay over the window.
        assert!(exact.last().unwrap() > &0.05);
    }
}
