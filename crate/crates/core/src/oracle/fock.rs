//! Truncated tensor-product Fock spaces with mixed statistics, dense complex
//! operators on them, and density matrices.
//!
//! Fermionic operators carry Jordan-Wigner parity strings over all preceding
//! fermionic modes in the fixed mode order, so canonical anticommutation
//! relations hold exactly on the truncated space. Bosonic ladder matrices are
//! the usual truncated `<n-1|a|n> = sqrt(n)`.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use super::OracleError;

pub const DEFAULT_DIM_CAP: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistics {
    Bose,
    Fermi,
}

#[derive(Debug, Clone)]
pub struct Mode {
    pub label: String,
    pub statistics: Statistics,
    pub local_dim: usize,
}

impl Mode {
    pub fn bose(label: &str, local_dim: usize) -> Self {
        Mode {
            label: label.to_string(),
            statistics: Statistics::Bose,
            local_dim,
        }
    }

    pub fn fermi(label: &str) -> Self {
        Mode {
            label: label.to_string(),
            statistics: Statistics::Fermi,
            local_dim: 2,
        }
    }
}

/// Ordered mode list; basis index is row-major over occupations, last mode
/// fastest.
#[derive(Debug, Clone)]
pub struct FockSpace {
    modes: Vec<Mode>,
    strides: Vec<usize>,
    total_dim: usize,
}

impl FockSpace {
    pub fn new(modes: Vec<Mode>, dim_cap: usize) -> Result<Arc<Self>, OracleError> {
        let mut total_dim = 1usize;
        for mode in &modes {
            if mode.statistics == Statistics::Fermi && mode.local_dim != 2 {
                return Err(OracleError::InvalidState(format!(
                    "fermi mode {} must have local_dim 2",
                    mode.label
                )));
            }
            if mode.local_dim == 0 {
                return Err(OracleError::InvalidState(format!(
                    "mode {} has zero local dimension",
                    mode.label
                )));
            }
            total_dim = total_dim.saturating_mul(mode.local_dim);
        }
        if total_dim > dim_cap {
            return Err(OracleError::CapExceeded {
                total_dim,
                cap: dim_cap,
            });
        }
        let mut strides = vec![1usize; modes.len()];
        for i in (0..modes.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * modes[i + 1].local_dim;
        }
        Ok(Arc::new(FockSpace {
            modes,
            strides,
            total_dim,
        }))
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn mode_index(&self, label: &str) -> Option<usize> {
        self.modes.iter().position(|m| m.label == label)
    }

    /// Occupation numbers of a basis state.
    pub fn occupations(&self, basis_index: usize) -> Vec<usize> {
        self.modes
            .iter()
            .zip(&self.strides)
            .map(|(m, &s)| basis_index / s % m.local_dim)
            .collect()
    }

    pub fn basis_index(&self, occupations: &[usize]) -> usize {
        occupations
            .iter()
            .zip(&self.strides)
            .map(|(&n, &s)| n * s)
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpKind {
    Destroy,
    Create,
    Number,
}

/// Dense complex matrix acting on a [`FockSpace`].
#[derive(Debug, Clone)]
pub struct Operator {
    pub space: Arc<FockSpace>,
    pub matrix: DMatrix<Complex64>,
}

impl Operator {
    pub fn zero(space: &Arc<FockSpace>) -> Self {
        let d = space.total_dim();
        Operator {
            space: space.clone(),
            matrix: DMatrix::zeros(d, d),
        }
    }

    pub fn identity(space: &Arc<FockSpace>) -> Self {
        let d = space.total_dim();
        Operator {
            space: space.clone(),
            matrix: DMatrix::identity(d, d),
        }
    }

    /// Single-mode destroy/create/number operator with fermionic parity
    /// strings applied over preceding fermi modes.
    pub fn mode_op(space: &Arc<FockSpace>, label: &str, kind: OpKind) -> Result<Self, OracleError> {
        let m = space
            .mode_index(label)
            .ok_or_else(|| OracleError::UnknownMode(label.to_string()))?;
        let d = space.total_dim();
        let mut matrix = DMatrix::<Complex64>::zeros(d, d);
        let mode = &space.modes()[m];
        for col in 0..d {
            let occs = space.occupations(col);
            let n = occs[m];
            match kind {
                OpKind::Number => {
                    matrix[(col, col)] = Complex64::new(n as f64, 0.0);
                }
                OpKind::Destroy => {
                    if n > 0 {
                        let row = col - space.strides[m];
                        let amp = match mode.statistics {
                            Statistics::Bose => (n as f64).sqrt(),
                            Statistics::Fermi => parity_sign(space, &occs, m),
                        };
                        matrix[(row, col)] = Complex64::new(amp, 0.0);
                    }
                }
                OpKind::Create => {
                    if n + 1 < mode.local_dim {
                        let row = col + space.strides[m];
                        let amp = match mode.statistics {
                            Statistics::Bose => ((n + 1) as f64).sqrt(),
                            Statistics::Fermi => parity_sign(space, &occs, m),
                        };
                        matrix[(row, col)] = Complex64::new(amp, 0.0);
                    }
                }
            }
        }
        Ok(Operator {
            space: space.clone(),
            matrix,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn adjoint(&self) -> Self {
        Operator {
            space: self.space.clone(),
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Operator {
            space: self.space.clone(),
            matrix: &self.matrix * c,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Operator {
            space: self.space.clone(),
            matrix: &self.matrix + &other.matrix,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Operator {
            space: self.space.clone(),
            matrix: &self.matrix - &other.matrix,
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Operator {
            space: self.space.clone(),
            matrix: &self.matrix * &other.matrix,
        }
    }

    pub fn commutator(&self, other: &Self) -> Self {
        Operator {
            space: self.space.clone(),
            matrix: &self.matrix * &other.matrix - &other.matrix * &self.matrix,
        }
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        Operator {
            space: self.space.clone(),
            matrix: &self.matrix * &other.matrix + &other.matrix * &self.matrix,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint())
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }
}

fn parity_sign(space: &FockSpace, occs: &[usize], mode: usize) -> f64 {
    let flips: usize = space.modes()[..mode]
        .iter()
        .zip(occs)
        .filter(|(m, &n)| m.statistics == Statistics::Fermi && n == 1)
        .count();
    if flips.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Hermitian, unit-trace, positive matrix on a [`FockSpace`].
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    pub space: Arc<FockSpace>,
    pub matrix: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Pure Fock state |occs><occs|.
    pub fn pure_fock(space: &Arc<FockSpace>, occupations: &[usize]) -> Self {
        let d = space.total_dim();
        let idx = space.basis_index(occupations);
        let mut matrix = DMatrix::<Complex64>::zeros(d, d);
        matrix[(idx, idx)] = Complex64::new(1.0, 0.0);
        DensityMatrix {
            space: space.clone(),
            matrix,
        }
    }

    /// Random full-rank state G G† / tr(G G†) from a complex Gaussian G.
    pub fn random<R: Rng>(space: &Arc<FockSpace>, rng: &mut R) -> Self {
        Self::random_in_sector(space, rng, |_| true)
    }

    /// Random state supported on the basis states passing `allow`.
    ///
    /// G G† is projected onto the sector and renormalized (still Hermitian
    /// positive). Operator identities that rely on bosonic commutation
    /// relations are exact only below the truncation edge, so identity
    /// checks restrict states to the conserved-charge sector the dynamics
    /// can actually reach.
    pub fn random_in_sector<R: Rng, F>(space: &Arc<FockSpace>, rng: &mut R, allow: F) -> Self
    where
        F: Fn(&[usize]) -> bool,
    {
        let d = space.total_dim();
        let keep: Vec<bool> = (0..d).map(|i| allow(&space.occupations(i))).collect();
        assert!(keep.iter().any(|&k| k), "empty sector");
        let g = DMatrix::<Complex64>::from_fn(d, d, |_, _| {
            Complex64::new(standard_normal(rng), standard_normal(rng))
        });
        let mut gg = &g * g.adjoint();
        for i in 0..d {
            for j in 0..d {
                if !keep[i] || !keep[j] {
                    gg[(i, j)] = Complex64::ZERO;
                }
            }
        }
        let tr = gg.trace().re;
        DensityMatrix {
            space: space.clone(),
            matrix: gg / Complex64::new(tr, 0.0),
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint())
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        // Symmetrize first so the eigensolver sees an exactly Hermitian input.
        let h = (&self.matrix + self.matrix.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = nalgebra::SymmetricEigen::new(h);
        eig.eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    /// <O> = tr(O rho).
    pub fn expectation(&self, op: &Operator) -> Complex64 {
        (&op.matrix * &self.matrix).trace()
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        let herm = self.hermiticity_defect();
        if herm > 1e-10 {
            return Err(OracleError::InvalidState(format!(
                "hermiticity defect {herm:.3e}"
            )));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(OracleError::InvalidState(format!("trace {tr}")));
        }
        let min_eig = self.min_eigenvalue();
        if min_eig < -1e-10 {
            return Err(OracleError::InvalidState(format!(
                "min eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(())
    }
}

/// Box-Muller standard normal; avoids a distribution dependency.
fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn mixed_space() -> Arc<FockSpace> {
        FockSpace::new(
            vec![
                Mode::bose("a", 3),
                Mode::fermi("f1"),
                Mode::bose("b", 2),
                Mode::fermi("f2"),
            ],
            DEFAULT_DIM_CAP,
        )
        .unwrap()
    }

    #[test]
    fn dimensions_and_indexing() {
        let s = mixed_space();
        assert_eq!(s.total_dim(), 3 * 2 * 2 * 2);
        for idx in 0..s.total_dim() {
            assert_eq!(s.basis_index(&s.occupations(idx)), idx);
        }
    }

    #[test]
    fn cap_and_unknown_mode() {
        let err = FockSpace::new(vec![Mode::bose("a", 100), Mode::bose("b", 100)], 4096)
            .err()
            .unwrap();
        assert!(matches!(
            err,
            OracleError::CapExceeded {
                total_dim: 10000,
                cap: 4096
            }
        ));
        let s = mixed_space();
        assert!(matches!(
            Operator::mode_op(&s, "nope", OpKind::Number),
            Err(OracleError::UnknownMode(_))
        ));
    }

    #[test]
    fn number_equals_create_destroy() {
        let s = mixed_space();
        for label in ["a", "f1", "b", "f2"] {
            let n = Operator::mode_op(&s, label, OpKind::Number).unwrap();
            let c = Operator::mode_op(&s, label, OpKind::Create).unwrap();
            let d = Operator::mode_op(&s, label, OpKind::Destroy).unwrap();
            let diff = c.mul(&d).sub(&n).max_abs();
            assert!(diff < 1e-14, "{label}: |a†a - n| = {diff}");
        }
    }

    #[test]
    fn bose_truncation_nilpotency() {
        let s = mixed_space();
        let d = Operator::mode_op(&s, "a", OpKind::Destroy).unwrap();
        // local_dim 3: a³ = 0 on the truncated space.
        let d3 = d.mul(&d).mul(&d);
        assert_eq!(d3.max_abs(), 0.0);
    }

    #[test]
    fn fermi_anticommutators() {
        let s = mixed_space();
        let c1 = Operator::mode_op(&s, "f1", OpKind::Destroy).unwrap();
        let c2 = Operator::mode_op(&s, "f2", OpKind::Destroy).unwrap();
        // {c_i, c_j} = 0 for i != j and c_i² = 0.
        assert!(c1.anticommutator(&c2).max_abs() < 1e-14);
        assert!(c1.mul(&c1).max_abs() < 1e-14);
        // {c_i, c_j†} = δ_ij exactly on the truncated space.
        let id = Operator::identity(&s);
        assert!(c1.anticommutator(&c1.adjoint()).sub(&id).max_abs() < 1e-14);
        assert!(c1.anticommutator(&c2.adjoint()).max_abs() < 1e-14);
    }

    #[test]
    fn bose_commutator_below_truncation() {
        // [a, a†] = 1 holds exactly on states with occupation <= local_dim-2.
        let s = mixed_space();
        let a = Operator::mode_op(&s, "a", OpKind::Destroy).unwrap();
        let comm = a.commutator(&a.adjoint());
        for col in 0..s.total_dim() {
            let occ = s.occupations(col)[0];
            if occ + 1 < 3 {
                let diag = comm.matrix[(col, col)];
                assert!((diag - Complex64::new(1.0, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn random_density_matrix_is_physical() {
        let s = mixed_space();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..5 {
            let rho = DensityMatrix::random(&s, &mut rng);
            rho.validate().unwrap();
            assert!(rho.min_eigenvalue() >= -1e-12);
        }
    }

    #[test]
    fn pure_fock_expectations() {
        let s = mixed_space();
        let rho = DensityMatrix::pure_fock(&s, &[2, 1, 0, 1]);
        rho.validate().unwrap();
        for (label, expected) in [("a", 2.0), ("f1", 1.0), ("b", 0.0), ("f2", 1.0)] {
            let n = Operator::mode_op(&s, label, OpKind::Number).unwrap();
            let v = rho.expectation(&n);
            assert!((v.re - expected).abs() < 1e-14 && v.im.abs() < 1e-14);
        }
    }
}
