//! Initial states of the quench: the symmetry-broken chain-A product state,
//! the current-carrying chain-B ground state and their composite.

use alloc::format;

#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg;
use crate::model::{chain_b_hamiltonian, ModelParams};
use crate::spinops::{checked_dim, Operator, DEFAULT_MAX_SITES};
use crate::{CMatrix, CVector, Error, Result, C64};

/// Allowed deviation of `‖ψ‖₂` from 1.
pub const NORM_TOL: f64 = 1e-12;
/// Allowed `max |ρ_ij - conj(ρ_ji)|`.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Allowed `|Tr ρ - 1|`.
pub const TRACE_TOL: f64 = 1e-10;
/// Smallest eigenvalue accepted for a density matrix.
pub const MIN_EIGENVALUE: f64 = -1e-8;
/// Relative gap below which the chain-B ground state counts as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Normalized state vector on `2^n` amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amps: CVector,
}

impl PureState {
    /// Wraps an amplitude vector that is already normalized.
    pub fn new(amps: CVector) -> Result<Self> {
        check_power_of_two(amps.len())?;
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("state amplitudes"));
        }
        let norm = vector_norm(&amps);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("norm {norm} differs from 1")));
        }
        Ok(PureState { amps })
    }

    /// Rescales `amps` to unit norm.
    pub fn normalized(amps: CVector) -> Result<Self> {
        let norm = vector_norm(&amps);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState(format!("cannot normalize a vector of norm {norm}")));
        }
        PureState::new(amps.mapv(|z| z / norm))
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn sites(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    pub fn into_amplitudes(self) -> CVector {
        self.amps
    }

    /// `⟨self|other⟩`.
    pub fn overlap(&self, other: &PureState) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(self.amps.iter().zip(other.amps.iter()).map(|(a, b)| a.conj() * b).sum())
    }

    /// `|self⟩ ⊗ |other⟩`.
    pub fn kron(&self, other: &PureState) -> Result<PureState> {
        checked_dim(self.sites() + other.sites(), DEFAULT_MAX_SITES)?;
        let m = other.dim();
        let amps = CVector::from_shape_fn(self.dim() * m, |i| self.amps[i / m] * other.amps[i % m]);
        Ok(PureState { amps })
    }

    /// Real part of `⟨ψ|A|ψ⟩`.
    pub fn expectation(&self, op: &Operator) -> Result<f64> {
        Ok(op.expectation(&self.amps)?.re)
    }

    pub fn projector(&self) -> CMatrix {
        let n = self.dim();
        CMatrix::from_shape_fn((n, n), |(i, j)| self.amps[i] * self.amps[j].conj())
    }

    pub fn density_matrix(&self) -> DensityMatrix {
        DensityMatrix { mat: self.projector() }
    }
}

/// Hermitian, unit-trace, positive-semidefinite matrix on `2^n` levels.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: CMatrix,
}

impl DensityMatrix {
    /// Validates every invariant, including positivity.
    pub fn new(mat: CMatrix) -> Result<Self> {
        let rho = DensityMatrix::with_structure_checked(mat)?;
        let min = rho.min_eigenvalue()?;
        if min < MIN_EIGENVALUE {
            return Err(Error::InvalidState(format!("minimum eigenvalue {min:e} is negative")));
        }
        Ok(rho)
    }

    /// Validates shape, Hermiticity and trace; skips the eigenvalue check.
    pub fn with_structure_checked(mat: CMatrix) -> Result<Self> {
        let (r, c) = mat.dim();
        if r != c {
            return Err(Error::NotSquare { rows: r, cols: c });
        }
        check_power_of_two(r)?;
        if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("density matrix"));
        }
        let defect = linalg::hermiticity_defect(&mat);
        if defect > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("Hermiticity defect {defect:e}")));
        }
        let tr = linalg::trace(&mat);
        let dev = (tr - C64::new(1.0, 0.0)).norm();
        if dev > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace deviates from 1 by {dev:e}")));
        }
        Ok(DensityMatrix { mat })
    }

    /// Maximally mixed state on `sites` spins.
    pub fn maximally_mixed(sites: usize) -> Result<Self> {
        let dim = checked_dim(sites, DEFAULT_MAX_SITES)?;
        Ok(DensityMatrix { mat: linalg::identity(dim).mapv(|z| z / dim as f64) })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn sites(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn trace(&self) -> C64 {
        linalg::trace(&self.mat)
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        self.mat.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(linalg::eigvalsh(&self.mat)?[0])
    }

    /// `Re Tr[A ρ]`.
    pub fn expectation(&self, op: &Operator) -> Result<f64> {
        if op.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: op.dim() });
        }
        Ok(linalg::trace_product(op.matrix(), &self.mat).re)
    }

    /// `ρ ⊗ σ`.
    pub fn kron(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        checked_dim(self.sites() + other.sites(), DEFAULT_MAX_SITES)?;
        Ok(DensityMatrix { mat: linalg::kron(&self.mat, &other.mat) })
    }
}

/// Which of the two symmetry-broken chain-A states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

/// `|→→⋯→⟩` or `|←←⋯←⟩` on `n_a` sites, built as a product state.
pub fn chain_a_ground(sign: Sign, n_a: usize) -> Result<PureState> {
    if n_a == 0 {
        return Err(Error::InvalidParameter { name: "n_a", reason: "must be positive".into() });
    }
    let dim = checked_dim(n_a, DEFAULT_MAX_SITES)?;
    let mag = (dim as f64).sqrt().recip();
    let amps = CVector::from_shape_fn(dim, |b| match sign {
        Sign::Minus if b.count_ones() % 2 == 1 => C64::new(-mag, 0.0),
        _ => C64::new(mag, 0.0),
    });
    Ok(PureState { amps })
}

/// Ground state of the chain-B source Hamiltonian.
///
/// Fails with [`Error::DegenerateGroundState`] when the two lowest levels are
/// closer than `1e-10 ‖Ĥ_B‖_F`. The global phase makes the largest-magnitude
/// amplitude real and positive.
pub fn chain_b_ground(p: &ModelParams) -> Result<PureState> {
    let h = chain_b_hamiltonian(p)?;
    let eig = linalg::eigh(h.matrix())?;
    let threshold = DEGENERACY_TOL * linalg::frobenius(h.matrix());
    let gap = eig.values[1] - eig.values[0];
    if gap < threshold {
        return Err(Error::DegenerateGroundState { gap, threshold });
    }
    let amps: CVector = eig.vectors.column(0).to_owned();
    PureState::normalized(fix_phase(amps))
}

fn fix_phase(amps: CVector) -> CVector {
    let max = amps.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let pivot = amps.iter().find(|z| z.norm() >= max * (1.0 - 1e-12)).copied();
    match pivot {
        Some(z) if z.norm() > 0.0 => {
            let rot = z.conj() / z.norm();
            amps.mapv(|a| a * rot)
        }
        _ => amps,
    }
}

/// `|ψ_+⟩ ⊗ |ψ_G⟩` on the full ring.
pub fn initial_state(p: &ModelParams) -> Result<PureState> {
    p.validate()?;
    chain_a_ground(Sign::Plus, p.n_a)?.kron(&chain_b_ground(p)?)
}

/// Rank-one density matrix of [`initial_state`].
pub fn initial_density_matrix(p: &ModelParams) -> Result<DensityMatrix> {
    DensityMatrix::new(initial_state(p)?.projector())
}

fn vector_norm(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn check_power_of_two(n: usize) -> Result<()> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    Ok(())
}
