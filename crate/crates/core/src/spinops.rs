//! Many-spin Pauli operators on the `2^N`-dimensional Hilbert space.
//!
//! Operators are stored densely. Sums of Pauli strings are assembled in
//! `O(terms · 2^N)` through [`PauliSum`] without forming any Kronecker
//! products, which is how every Hamiltonian and current in [`crate::model`]
//! is built.

use core::ops::{Add, Mul, Sub};

use crate::linalg;
use crate::{CMatrix, Error, Result, C64};

/// Hard cap on the number of spins unless a caller raises it explicitly.
pub const DEFAULT_MAX_SITES: usize = 14;

/// Pauli axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// A 1-based site label on a ring of `sites` spins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SiteIndex(usize);

impl SiteIndex {
    pub fn new(value: usize, sites: usize) -> Result<Self> {
        if value == 0 || value > sites {
            return Err(Error::SiteOutOfRange { site: value, sites });
        }
        Ok(SiteIndex(value))
    }

    /// Resolves any integer label cyclically: `sites + 1 → 1`, `0 → sites`.
    pub fn ring(value: isize, sites: usize) -> Self {
        assert!(sites > 0, "ring must have at least one site");
        let n = sites as isize;
        SiteIndex(((value - 1).rem_euclid(n) + 1) as usize)
    }

    pub fn get(self) -> usize {
        self.0
    }

    fn bit(self, sites: usize) -> u64 {
        1u64 << (sites - self.0)
    }
}

/// Checks the site count against `max` and returns the Hilbert dimension.
pub fn checked_dim(sites: usize, max: usize) -> Result<usize> {
    if sites == 0 {
        return Err(Error::InvalidParameter { name: "sites", reason: "must be at least 1".into() });
    }
    if sites > max || sites >= 63 {
        return Err(Error::DimensionOverflow { sites, max });
    }
    Ok(1usize << sites)
}

/// Dense operator on a spin Hilbert space. The dimension is always a power
/// of two and every entry is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    mat: CMatrix,
}

impl Operator {
    pub fn from_matrix(mat: CMatrix) -> Result<Self> {
        let (r, c) = mat.dim();
        if r != c {
            return Err(Error::NotSquare { rows: r, cols: c });
        }
        if !r.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(r));
        }
        if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("operator"));
        }
        Ok(Operator { mat })
    }

    pub fn zeros(sites: usize) -> Result<Self> {
        let dim = checked_dim(sites, DEFAULT_MAX_SITES)?;
        Ok(Operator { mat: CMatrix::zeros((dim, dim)) })
    }

    pub fn identity(sites: usize) -> Result<Self> {
        let dim = checked_dim(sites, DEFAULT_MAX_SITES)?;
        Ok(Operator { mat: linalg::identity(dim) })
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

    pub fn adjoint(&self) -> Operator {
        Operator { mat: linalg::adjoint(&self.mat) }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        linalg::hermiticity_defect(&self.mat) <= tol
    }

    pub fn scale(&self, s: C64) -> Operator {
        Operator { mat: self.mat.mapv(|z| z * s) }
    }

    pub fn trace(&self) -> C64 {
        linalg::trace(&self.mat)
    }

    /// `A ⊗ B`, with `self` as the more significant factor.
    pub fn kron(&self, other: &Operator) -> Result<Operator> {
        let sites = self.sites() + other.sites();
        checked_dim(sites, DEFAULT_MAX_SITES)?;
        Ok(Operator { mat: linalg::kron(&self.mat, &other.mat) })
    }

    pub fn try_matmul(&self, other: &Operator) -> Result<Operator> {
        same_dim(self, other)?;
        Ok(Operator { mat: self.mat.dot(&other.mat) })
    }

    /// `⟨ψ|A|ψ⟩` for an unnormalized amplitude vector.
    pub fn expectation(&self, amps: &crate::CVector) -> Result<C64> {
        if amps.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: amps.len() });
        }
        let a_psi = self.mat.dot(amps);
        Ok(amps.iter().zip(a_psi.iter()).map(|(x, y)| x.conj() * y).sum())
    }
}

fn same_dim(a: &Operator, b: &Operator) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    Ok(())
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimensions differ");
        Operator { mat: &self.mat + &rhs.mat }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimensions differ");
        Operator { mat: &self.mat - &rhs.mat }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimensions differ");
        Operator { mat: self.mat.dot(&rhs.mat) }
    }
}

/// A Pauli string `i^phase · X^x Z^z` encoded by bit masks, one bit per site.
///
/// `σ^y = i σ^x σ^z`, so a `Y` on a site sets both masks and adds one to the
/// phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PauliString {
    x: u64,
    z: u64,
    phase: u8,
}

impl PauliString {
    pub const IDENTITY: PauliString = PauliString { x: 0, z: 0, phase: 0 };

    pub fn single(axis: Axis, site: SiteIndex, sites: usize) -> Self {
        let b = site.bit(sites);
        match axis {
            Axis::X => PauliString { x: b, z: 0, phase: 0 },
            Axis::Z => PauliString { x: 0, z: b, phase: 0 },
            Axis::Y => PauliString { x: b, z: b, phase: 1 },
        }
    }

    /// Operator product `self · rhs`.
    pub fn then(self, rhs: PauliString) -> PauliString {
        // Z^z1 X^x2 = (-1)^{z1·x2} X^x2 Z^z1
        let swaps = (self.z & rhs.x).count_ones() as u8;
        PauliString {
            x: self.x ^ rhs.x,
            z: self.z ^ rhs.z,
            phase: (self.phase + rhs.phase + 2 * (swaps % 2)) % 4,
        }
    }

    fn phase_factor(self) -> C64 {
        match self.phase {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        }
    }

    /// Row and amplitude of the single nonzero entry in column `col`.
    #[inline]
    pub fn apply_to_basis(self, col: usize) -> (usize, C64) {
        let sign = if (self.z & col as u64).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        ((col as u64 ^ self.x) as usize, self.phase_factor() * sign)
    }
}

/// Weighted sum of Pauli strings on a fixed number of sites.
#[derive(Debug, Clone)]
pub struct PauliSum {
    sites: usize,
    terms: alloc::vec::Vec<(C64, PauliString)>,
}

impl PauliSum {
    pub fn new(sites: usize) -> Result<Self> {
        checked_dim(sites, DEFAULT_MAX_SITES)?;
        Ok(PauliSum { sites, terms: alloc::vec::Vec::new() })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Adds `coeff · σ^{a1}_{s1} σ^{a2}_{s2} ⋯`; sites may repeat.
    pub fn push(&mut self, coeff: f64, factors: &[(Axis, SiteIndex)]) -> &mut Self {
        let s = factors
            .iter()
            .fold(PauliString::IDENTITY, |acc, &(a, j)| acc.then(PauliString::single(a, j, self.sites)));
        self.terms.push((C64::new(coeff, 0.0), s));
        self
    }

    pub fn to_operator(&self) -> Operator {
        let dim = 1usize << self.sites;
        let mut mat = CMatrix::zeros((dim, dim));
        for &(c, s) in &self.terms {
            for col in 0..dim {
                let (row, amp) = s.apply_to_basis(col);
                mat[(row, col)] += c * amp;
            }
        }
        Operator { mat }
    }
}

/// `σ^axis` at `site` on an `sites`-spin register.
pub fn pauli(axis: Axis, site: usize, sites: usize) -> Result<Operator> {
    checked_dim(sites, DEFAULT_MAX_SITES)?;
    let j = SiteIndex::new(site, sites)?;
    let mut sum = PauliSum::new(sites)?;
    sum.push(1.0, &[(axis, j)]);
    Ok(sum.to_operator())
}

/// `AB - BA`.
pub fn commutator(a: &Operator, b: &Operator) -> Result<Operator> {
    same_dim(a, b)?;
    let ab = a.mat.dot(&b.mat);
    let ba = b.mat.dot(&a.mat);
    Ok(Operator { mat: ab - ba })
}

pub fn frobenius_norm(a: &Operator) -> f64 {
    linalg::frobenius(&a.mat)
}

/// `‖[A, B]‖_F / (‖A‖_F ‖B‖_F)`, with `A` applied as a sparse operator;
/// zero when either operator vanishes.
pub fn relative_commutator(a: &Operator, b: &Operator) -> Result<f64> {
    same_dim(a, b)?;
    let (na, nb) = (frobenius_norm(a), frobenius_norm(b));
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    let sparse = linalg::SparseOp::from_dense(&a.mat, 0.0);
    let x: alloc::vec::Vec<C64> = b.mat.iter().copied().collect();
    let mut out = alloc::vec![C64::new(0.0, 0.0); x.len()];
    sparse.left_mul_add(&x, C64::new(1.0, 0.0), &mut out);
    sparse.right_mul_add(&x, C64::new(-1.0, 0.0), &mut out);
    let norm = out.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    Ok(norm / (na * nb))
}
