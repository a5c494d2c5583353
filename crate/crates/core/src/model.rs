//! Hamiltonians and energy currents of the two-chain Ising ring.
//!
//! Chain A occupies sites `1..=N_A` and chain B sites `N_A+1..=N`. The ring
//! Hamiltonian includes the closure bond `σ^x_N σ^x_1`; without it the
//! energy current is not conserved.
//!
//! Subsystem operators (`Ĥ_A`, `Ĥ_B`, `Ĵ_A`, `Ĵ_B`) are built on their own
//! `2^{N_A}` or `2^{N_B}` spaces. [`embed`] lifts them into the full ring.

use crate::spinops::{checked_dim, Axis, Operator, PauliSum, SiteIndex, DEFAULT_MAX_SITES};
use crate::{Error, Result};

/// Physical parameters of the ring. Energies are in units of Ω.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Length of chain A, sites `1..=n_a`.
    pub n_a: usize,
    /// Length of chain B, sites `n_a+1..=n_a+n_b`.
    pub n_b: usize,
    /// Interspin coupling τ.
    pub tau: f64,
    /// Transverse field H.
    pub field: f64,
    /// Source-current strength ν used to prepare chain B.
    pub nu: f64,
}

/// One of the two chains that make up the ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Segment {
    A,
    B,
}

impl ModelParams {
    /// Reference quench parameters: N_A = 6, N_B = 2, τ = 0.42, H = 1, ν = 5.
    pub const REFERENCE: ModelParams = ModelParams { n_a: 6, n_b: 2, tau: 0.42, field: 1.0, nu: 5.0 };

    pub fn sites(&self) -> usize {
        self.n_a + self.n_b
    }

    pub fn segment_len(&self, seg: Segment) -> usize {
        match seg {
            Segment::A => self.n_a,
            Segment::B => self.n_b,
        }
    }

    /// Full-ring label of the first site of a segment.
    pub fn segment_start(&self, seg: Segment) -> usize {
        match seg {
            Segment::A => 1,
            Segment::B => self.n_a + 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_a < 2 {
            return Err(Error::InvalidParameter { name: "n_a", reason: "must be at least 2".into() });
        }
        if self.n_b < 2 {
            return Err(Error::InvalidParameter { name: "n_b", reason: "must be at least 2".into() });
        }
        checked_dim(self.sites(), DEFAULT_MAX_SITES)?;
        for (name, v) in [("tau", self.tau), ("field", self.field), ("nu", self.nu)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter { name, reason: "must be finite".into() });
            }
        }
        Ok(())
    }
}

fn ring_terms(p: &ModelParams, closure: bool) -> Result<PauliSum> {
    p.validate()?;
    let n = p.sites();
    let mut sum = PauliSum::new(n)?;
    let bonds = if closure { n } else { n - 1 };
    for j in 1..=bonds {
        let a = SiteIndex::ring(j as isize, n);
        let b = SiteIndex::ring(j as isize + 1, n);
        sum.push(-p.tau, &[(Axis::X, a), (Axis::X, b)]);
    }
    for j in 1..=n {
        sum.push(-p.field, &[(Axis::Z, SiteIndex::ring(j as isize, n))]);
    }
    Ok(sum)
}

/// `Ĥ^S = -τ Σ_{j=1}^{N} σ^x_j σ^x_{j+1} - H Σ_j σ^z_j` with `σ_{N+1} ≡ σ_1`.
pub fn ring_hamiltonian(p: &ModelParams) -> Result<Operator> {
    Ok(ring_terms(p, true)?.to_operator())
}

/// The ring Hamiltonian with the closure bond removed. Used as a negative
/// control for current conservation.
pub fn open_ring_hamiltonian(p: &ModelParams) -> Result<Operator> {
    Ok(ring_terms(p, false)?.to_operator())
}

/// `Ĵ = (Hτ/2) Σ_j σ^y_j (σ^x_{j-1} - σ^x_{j+1})` with periodic indices.
pub fn global_current(p: &ModelParams) -> Result<Operator> {
    p.validate()?;
    let n = p.sites();
    let pre = 0.5 * p.field * p.tau;
    let mut sum = PauliSum::new(n)?;
    for j in 1..=n as isize {
        let here = SiteIndex::ring(j, n);
        sum.push(pre, &[(Axis::Y, here), (Axis::X, SiteIndex::ring(j - 1, n))]);
        sum.push(-pre, &[(Axis::Y, here), (Axis::X, SiteIndex::ring(j + 1, n))]);
    }
    Ok(sum.to_operator())
}

/// `Ĥ_A = -τ Σ_{j=1}^{N_A-1} σ^x_j σ^x_{j+1}` on the chain-A space.
pub fn chain_a_hamiltonian(p: &ModelParams) -> Result<Operator> {
    p.validate()?;
    let n = p.n_a;
    let mut sum = PauliSum::new(n)?;
    for j in 1..n {
        sum.push(-p.tau, &[(Axis::X, SiteIndex::new(j, n)?), (Axis::X, SiteIndex::new(j + 1, n)?)]);
    }
    Ok(sum.to_operator())
}

fn local_current_terms(p: &ModelParams, len: usize) -> Result<PauliSum> {
    if len < 2 {
        return Err(Error::SegmentTooShort { len });
    }
    let pre = 0.5 * p.field * p.tau;
    let mut sum = PauliSum::new(len)?;
    let site = |j: usize| SiteIndex::new(j, len);
    for j in 2..len {
        sum.push(pre, &[(Axis::Y, site(j)?), (Axis::X, site(j - 1)?)]);
        sum.push(-pre, &[(Axis::Y, site(j)?), (Axis::X, site(j + 1)?)]);
    }
    sum.push(-pre, &[(Axis::Y, site(1)?), (Axis::X, site(2)?)]);
    sum.push(pre, &[(Axis::Y, site(len)?), (Axis::X, site(len - 1)?)]);
    Ok(sum)
}

/// Open-boundary energy current of one chain, on that chain's own space.
///
/// Interior sites carry `σ^y_j(σ^x_{j-1} - σ^x_{j+1})`; the first and last
/// sites keep only the bond that stays inside the segment.
pub fn local_current(p: &ModelParams, seg: Segment) -> Result<Operator> {
    p.validate()?;
    Ok(local_current_terms(p, p.segment_len(seg))?.to_operator())
}

/// `Ĥ_B = -τ Σ σ^x_j σ^x_{j+1} - H Σ σ^z_j - ν Ĵ_B` on the chain-B space.
pub fn chain_b_hamiltonian(p: &ModelParams) -> Result<Operator> {
    p.validate()?;
    let n = p.n_b;
    let mut sum = PauliSum::new(n)?;
    for j in 1..n {
        sum.push(-p.tau, &[(Axis::X, SiteIndex::new(j, n)?), (Axis::X, SiteIndex::new(j + 1, n)?)]);
    }
    for j in 1..=n {
        sum.push(-p.field, &[(Axis::Z, SiteIndex::new(j, n)?)]);
    }
    let h0 = sum.to_operator();
    if p.nu == 0.0 {
        return Ok(h0);
    }
    let jb = local_current_terms(p, n)?.to_operator();
    Ok(&h0 - &jb.scale(crate::C64::new(p.nu, 0.0)))
}

/// Lifts a segment operator into the full ring: `O ⊗ I_B` for chain A and
/// `I_A ⊗ O` for chain B.
pub fn embed(op: &Operator, seg: Segment, p: &ModelParams) -> Result<Operator> {
    let len = p.segment_len(seg);
    if op.sites() != len {
        return Err(Error::DimensionMismatch { expected: 1 << len, found: op.dim() });
    }
    match seg {
        Segment::A => op.kron(&Operator::identity(p.n_b)?),
        Segment::B => Operator::identity(p.n_a)?.kron(op),
    }
}
