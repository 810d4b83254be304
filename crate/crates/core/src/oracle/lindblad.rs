//! Dense density-matrix propagation of `dρ/dt = -i[H,ρ] + Σ (LρL† - ½{L†L,ρ})`
//! with fixed RK4; jump operators are stored sparse (mode ladder operators
//! have at most one entry per column), the state stays dense.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::fock::{DensityMatrix, FockSpace, Operator};
use super::OracleError;

/// Triplet-form sparse operator, enough for jump operators.
#[derive(Debug, Clone)]
pub struct SparseOp {
    dim: usize,
    entries: Vec<(usize, usize, Complex64)>,
}

impl SparseOp {
    pub fn from_operator(op: &Operator) -> Self {
        let dim = op.dim();
        let mut entries = Vec::new();
        for col in 0..dim {
            for row in 0..dim {
                let v = op.matrix[(row, col)];
                if v != Complex64::ZERO {
                    entries.push((row, col, v));
                }
            }
        }
        SparseOp { dim, entries }
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// L · X
    pub fn mul_dense(&self, x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut out = DMatrix::<Complex64>::zeros(self.dim, self.dim);
        for &(r, c, v) in &self.entries {
            for j in 0..self.dim {
                out[(r, j)] += v * x[(c, j)];
            }
        }
        out
    }

    /// X · L†
    pub fn dense_mul_adjoint(&self, x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut out = DMatrix::<Complex64>::zeros(self.dim, self.dim);
        for &(r, c, v) in &self.entries {
            let vc = v.conj();
            for i in 0..self.dim {
                out[(i, r)] += x[(i, c)] * vc;
            }
        }
        out
    }

    /// L† L as a dense matrix.
    pub fn gram(&self) -> DMatrix<Complex64> {
        let mut out = DMatrix::<Complex64>::zeros(self.dim, self.dim);
        for &(r1, c1, v1) in &self.entries {
            for &(r2, c2, v2) in &self.entries {
                if r1 == r2 {
                    out[(c1, c2)] += v1.conj() * v2;
                }
            }
        }
        out
    }

    /// Largest column sum of moduli (the induced 1-norm).
    fn one_norm(&self) -> f64 {
        let mut sums = vec![0.0f64; self.dim];
        for &(_, c, v) in &self.entries {
            sums[c] += v.norm();
        }
        sums.into_iter().fold(0.0, f64::max)
    }
}

/// Hamiltonian plus jump operators (rate prefactors absorbed into each jump).
pub struct LindbladSystem {
    pub space: Arc<FockSpace>,
    pub hamiltonian: Operator,
    pub jumps: Vec<SparseOp>,
    /// Σ L†L, precomputed for the anticommutator term.
    k_total: DMatrix<Complex64>,
}

impl LindbladSystem {
    pub fn new(hamiltonian: Operator, jump_ops: &[Operator]) -> Result<Self, OracleError> {
        let herm = hamiltonian.hermiticity_defect();
        if herm > 1e-12 {
            return Err(OracleError::InvalidState(format!(
                "hamiltonian hermiticity defect {herm:.3e}"
            )));
        }
        let dim = hamiltonian.dim();
        let mut k_total = DMatrix::<Complex64>::zeros(dim, dim);
        let mut jumps = Vec::with_capacity(jump_ops.len());
        for op in jump_ops {
            if op.dim() != dim {
                return Err(OracleError::DimensionMismatch);
            }
            let sparse = SparseOp::from_operator(op);
            k_total += sparse.gram();
            jumps.push(sparse);
        }
        Ok(LindbladSystem {
            space: hamiltonian.space.clone(),
            hamiltonian,
            jumps,
            k_total,
        })
    }

    /// Crude upper bound on the generator's operator norm, used for the
    /// initial step-size choice.
    fn generator_norm_bound(&self) -> f64 {
        let h_norm = matrix_one_norm(&self.hamiltonian.matrix);
        let jump_sq: f64 = self.jumps.iter().map(|l| l.one_norm() * l.one_norm()).sum();
        2.0 * h_norm + 2.0 * jump_sq
    }
}

fn matrix_one_norm(m: &DMatrix<Complex64>) -> f64 {
    let mut best = 0.0f64;
    for c in 0..m.ncols() {
        let s: f64 = (0..m.nrows()).map(|r| m[(r, c)].norm()).sum();
        best = best.max(s);
    }
    best
}

/// Apply the Lindblad generator once.
pub fn liouvillian(system: &LindbladSystem, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let h = &system.hamiltonian.matrix;
    let mut out = (h * rho - rho * h) * Complex64::new(0.0, -1.0);
    for jump in &system.jumps {
        out += jump.dense_mul_adjoint(&jump.mul_dense(rho));
    }
    let k = &system.k_total;
    out -= (k * rho + rho * k) * Complex64::new(0.5, 0.0);
    out
}

fn rk4_step(system: &LindbladSystem, rho: &DMatrix<Complex64>, h: f64) -> DMatrix<Complex64> {
    let hc = Complex64::new(h, 0.0);
    let half = Complex64::new(0.5, 0.0);
    let k1 = liouvillian(system, rho);
    let k2 = liouvillian(system, &(rho + &k1 * (hc * half)));
    let k3 = liouvillian(system, &(rho + &k2 * (hc * half)));
    let k4 = liouvillian(system, &(rho + &k3 * hc));
    rho + (k1 + k2 * Complex64::new(2.0, 0.0) + k3 * Complex64::new(2.0, 0.0) + k4)
        * (hc / Complex64::new(6.0, 0.0))
}

fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Propagate `rho0` and return the state at each requested sample time.
///
/// Fixed RK4; the step is chosen from the generator-norm bound so the local
/// truncation error stays below 1e-10 per step (state-change interpretation
/// would need ~1e10 steps), then verified by step doubling on the first
/// segment and halved until the doubling defect is below 1e-10. Physicality
/// (trace, Hermiticity, positivity) is enforced at every sample.
pub fn evolve(
    system: &LindbladSystem,
    rho0: &DensityMatrix,
    sample_times: &[f64],
) -> Result<Vec<DensityMatrix>, OracleError> {
    if rho0.matrix.nrows() != system.hamiltonian.dim() {
        return Err(OracleError::DimensionMismatch);
    }
    rho0.validate()?;
    let mut prev = sample_times.first().copied().unwrap_or(0.0);
    if sample_times.windows(2).any(|w| w[1] <= w[0]) || prev < 0.0 {
        return Err(OracleError::InvalidState(
            "sample times must be increasing and >= 0".into(),
        ));
    }

    // (1.2e-8)^(1/5) / Λ keeps the RK4 local error ~ (Λh)^5/120 under 1e-10.
    let lambda = system.generator_norm_bound().max(1e-12);
    let mut h = 0.026 / lambda;

    // Step-doubling check on the first nontrivial interval.
    let t_total = sample_times.last().copied().unwrap_or(0.0);
    if t_total > 0.0 {
        h = h.min(t_total);
        loop {
            let full = rk4_step(system, &rho0.matrix, h);
            let half = rk4_step(system, &rk4_step(system, &rho0.matrix, 0.5 * h), 0.5 * h);
            if max_abs_diff(&full, &half) <= 1e-10 || h < 1e-6 / lambda {
                break;
            }
            h *= 0.5;
        }
    }

    let mut rho = rho0.matrix.clone();
    let mut out = Vec::with_capacity(sample_times.len());
    let mut t = 0.0f64;
    prev = 0.0;
    for &ts in sample_times {
        let seg = ts - prev;
        if seg > 0.0 {
            let n_steps = (seg / h).ceil().max(1.0) as usize;
            let step = seg / n_steps as f64;
            for _ in 0..n_steps {
                rho = rk4_step(system, &rho, step);
            }
            t = ts;
        }
        prev = ts;
        let sampled = DensityMatrix {
            space: system.space.clone(),
            matrix: rho.clone(),
        };
        let min_eig = sampled.min_eigenvalue();
        if min_eig < -1e-8 {
            return Err(OracleError::NonPhysicalState {
                t,
                min_eigenvalue: min_eig,
            });
        }
        let tr = sampled.trace();
        if (tr.re - 1.0).abs() > 1e-8 || tr.im.abs() > 1e-10 {
            return Err(OracleError::InvalidState(format!(
                "trace drift {tr} at t = {t}"
            )));
        }
        let herm = sampled.hermiticity_defect();
        if herm > 1e-10 {
            return Err(OracleError::InvalidState(format!(
                "hermiticity defect {herm:.3e} at t = {t}"
            )));
        }
        out.push(sampled);
    }
    Ok(out)
}

/// Residual of a claimed equation of motion `d<lhs>/dt = <rhs>` on `rho`:
/// `|tr(lhs L[rho]) - tr(rhs rho)| / max(1, |tr(rhs rho)|)`.
pub fn check_eom_identity(
    system: &LindbladSystem,
    rho: &DensityMatrix,
    lhs_observable: &Operator,
    rhs_expression: &Operator,
) -> Result<f64, OracleError> {
    let dim = system.hamiltonian.dim();
    if lhs_observable.dim() != dim || rhs_expression.dim() != dim || rho.matrix.nrows() != dim {
        return Err(OracleError::DimensionMismatch);
    }
    let drho = liouvillian(system, &rho.matrix);
    let lhs = (&lhs_observable.matrix * &drho).trace();
    let rhs = (&rhs_expression.matrix * &rho.matrix).trace();
    Ok((lhs - rhs).norm() / rhs.norm().max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::fock::{Mode, OpKind, DEFAULT_DIM_CAP};
    use num_complex::Complex64;

    fn single_bose_system(gamma: f64) -> (Arc<FockSpace>, LindbladSystem) {
        let space = FockSpace::new(vec![Mode::bose("a", 4)], DEFAULT_DIM_CAP).unwrap();
        let n = Operator::mode_op(&space, "a", OpKind::Number).unwrap();
        let destroy = Operator::mode_op(&space, "a", OpKind::Destroy).unwrap();
        let h = n.scale(Complex64::new(1.3, 0.0));
        let jump = destroy.scale(Complex64::new(gamma.sqrt(), 0.0));
        let system = LindbladSystem::new(h, &[jump]).unwrap();
        (space, system)
    }

    #[test]
    fn sparse_ops_match_dense_products() {
        let (space, _) = single_bose_system(1.0);
        let a = Operator::mode_op(&space, "a", OpKind::Destroy).unwrap();
        let sparse = SparseOp::from_operator(&a);
        assert_eq!(sparse.nnz(), 3);
        let x = DMatrix::<Complex64>::from_fn(4, 4, |i, j| {
            Complex64::new((i + 2 * j) as f64, (i * j) as f64 - 1.0)
        });
        assert!(max_abs_diff(&sparse.mul_dense(&x), &(&a.matrix * &x)) < 1e-14);
        assert!(max_abs_diff(&sparse.dense_mul_adjoint(&x), &(&x * a.matrix.adjoint())) < 1e-14);
        assert!(max_abs_diff(&sparse.gram(), &(a.matrix.adjoint() * &a.matrix)) < 1e-14);
    }

    #[test]
    fn damped_mode_decays_exponentially() {
        // <n>(t) = n0 e^{-γ t} for the damped harmonic mode.
        let gamma = 0.8;
        let (space, system) = single_bose_system(gamma);
        let rho0 = DensityMatrix::pure_fock(&space, &[3]);
        let times = [0.0, 0.3, 0.9, 2.0];
        let states = evolve(&system, &rho0, &times).unwrap();
        let n = Operator::mode_op(&space, "a", OpKind::Number).unwrap();
        for (rho, &t) in states.iter().zip(&times) {
            let got = rho.expectation(&n).re;
            let expected = 3.0 * (-gamma * t).exp();
            assert!(
                (got - expected).abs() < 1e-8,
                "t = {t}: {got} vs {expected}"
            );
        }
    }

    #[test]
    fn unitary_diagonal_hamiltonian_keeps_diagonal() {
        let space = FockSpace::new(vec![Mode::bose("a", 3)], DEFAULT_DIM_CAP).unwrap();
        let n = Operator::mode_op(&space, "a", OpKind::Number).unwrap();
        let system = LindbladSystem::new(n.scale(Complex64::new(2.0, 0.0)), &[]).unwrap();
        let mut rng = {
            use rand::SeedableRng;
            rand_chacha::ChaCha12Rng::seed_from_u64(3)
        };
        let rho0 = DensityMatrix::random(&space, &mut rng);
        let states = evolve(&system, &rho0, &[0.0, 1.7]).unwrap();
        for i in 0..3 {
            let before = rho0.matrix[(i, i)];
            let after = states[1].matrix[(i, i)];
            assert!((before - after).norm() < 1e-9);
        }
    }

    #[test]
    fn trace_preserved_along_evolution() {
        let (space, system) = single_bose_system(1.7);
        let rho0 = DensityMatrix::pure_fock(&space, &[2]);
        let states = evolve(&system, &rho0, &[0.5, 1.0, 5.0]).unwrap();
        for s in states {
            assert!((s.trace().re - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn identity_check_on_damped_mode() {
        // d<n>/dt = -γ <n> is exact for the damped mode.
        let gamma = 0.8;
        let (space, system) = single_bose_system(gamma);
        let n = Operator::mode_op(&space, "a", OpKind::Number).unwrap();
        let rhs = n.scale(Complex64::new(-gamma, 0.0));
        let mut rng = {
            use rand::SeedableRng;
            rand_chacha::ChaCha12Rng::seed_from_u64(11)
        };
        for _ in 0..5 {
            let rho = DensityMatrix::random(&space, &mut rng);
            let r = check_eom_identity(&system, &rho, &n, &rhs).unwrap();
            assert!(r < 1e-12, "residual {r}");
        }
        // A wrong rhs is caught.
        let wrong = n.scale(Complex64::new(-0.5 * gamma, 0.0));
        let rho = DensityMatrix::random(&space, &mut rng);
        assert!(check_eom_identity(&system, &rho, &n, &wrong).unwrap() > 1e-3);
    }

    #[test]
    fn dimension_mismatch_detected() {
        let (_, system) = single_bose_system(1.0);
        let other = FockSpace::new(vec![Mode::bose("a", 5)], DEFAULT_DIM_CAP).unwrap();
        let n = Operator::mode_op(&other, "a", OpKind::Number).unwrap();
        let rho = DensityMatrix::pure_fock(&other, &[1]);
        assert!(matches!(
            check_eom_identity(&system, &rho, &n, &n),
            Err(OracleError::DimensionMismatch)
        ));
    }
}
