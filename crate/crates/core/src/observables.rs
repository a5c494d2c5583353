//! Quantities measured on evolved states.
//!
//! The chain-A references `ρ_± = |ψ_±⟩⟨ψ_±|` are pure, so the fidelity
//! amplitudes reduce to `G_{F,±} = √⟨ψ_±|ρ_A|ψ_±⟩`. Together with the
//! return probabilities, the magnetization and the current they are linear
//! functionals of the full state, which is what [`Probe`] evaluates sample
//! by sample without leaving the propagation frame.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::bathrates::BathRates;
use crate::engine::{Frame, Observer};
use crate::linalg;
use crate::model::{embed, global_current, ModelParams, Segment};
use crate::prep::{chain_a_ground, DensityMatrix, PureState, Sign};
use crate::spinops::{pauli, Axis, Operator};
use crate::{CMatrix, Error, Result, C64};

/// Eigenvalues below this are dropped from matrix square roots.
pub const SQRT_CLAMP: f64 = 1e-10;
/// Return probabilities whose sum falls below this cannot be normalized.
pub const MIN_NORMALIZATION: f64 = 1e-300;
/// Largest accepted Gram-matrix defect of a ground manifold.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// `Tr_B ρ` for a ring of `n_a + n_b` sites.
pub fn partial_trace_b(rho: &DensityMatrix, n_a: usize, n_b: usize) -> Result<DensityMatrix> {
    DensityMatrix::new(partial_trace_b_matrix(rho.matrix(), n_a, n_b)?)
}

/// Partial trace on a raw matrix, without validation of the result.
pub fn partial_trace_b_matrix(m: &CMatrix, n_a: usize, n_b: usize) -> Result<CMatrix> {
    let da = 1usize << n_a;
    let db = 1usize << n_b;
    if m.dim() != (da * db, da * db) {
        return Err(Error::DimensionMismatch { expected: da * db, found: m.nrows() });
    }
    Ok(CMatrix::from_shape_fn((da, da), |(i, j)| (0..db).map(|k| m[(i * db + k, j * db + k)]).sum()))
}

/// Uhlmann fidelity `Tr √(√ρ σ √ρ)`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: sigma.dim() });
    }
    let root = linalg::psd_sqrt(rho.matrix(), SQRT_CLAMP)?;
    let inner = linalg::hermitian_part(&root.dot(&sigma.matrix().dot(&root)));
    let values = linalg::eigvalsh(&inner)?;
    Ok(values.iter().map(|&x| if x < SQRT_CLAMP { 0.0 } else { x.sqrt() }).sum())
}

/// Fidelity with a pure reference, `√⟨ψ|σ|ψ⟩`.
pub fn fidelity_pure(psi: &PureState, sigma: &DensityMatrix) -> Result<f64> {
    if psi.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch { expected: psi.dim(), found: sigma.dim() });
    }
    let a = psi.amplitudes();
    let s = sigma.matrix().dot(a);
    let q: C64 = a.iter().zip(s.iter()).map(|(x, y)| x.conj() * y).sum();
    Ok(q.re.max(0.0).sqrt())
}

/// Normalization of the rate function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Denominator {
    /// All `N_A + N_B` sites.
    #[default]
    Total,
    /// Chain A only.
    ChainA,
}

impl Denominator {
    pub fn sites(self, p: &ModelParams) -> usize {
        match self {
            Denominator::Total => p.sites(),
            Denominator::ChainA => p.n_a,
        }
    }
}

/// `ϖ = min_d -ln G_{F,d} / N` and the minimizing branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateValue {
    pub value: f64,
    pub branch: Sign,
    /// Both amplitudes vanished; `value` is `+∞`.
    pub infinite: bool,
}

/// Rate function from the two fidelity amplitudes. Ties go to `+`.
pub fn rate_from_amplitudes(g_plus: f64, g_minus: f64, denominator: usize) -> RateValue {
    let (g, branch) = if g_plus >= g_minus { (g_plus, Sign::Plus) } else { (g_minus, Sign::Minus) };
    if g <= 0.0 {
        return RateValue { value: f64::INFINITY, branch, infinite: true };
    }
    RateValue { value: (-g.ln() / denominator as f64).max(0.0), branch, infinite: false }
}

/// Rate function of a chain-A state against `|ψ_±⟩`.
pub fn rate_function(rho_a: &DensityMatrix, denominator: usize) -> Result<RateValue> {
    let n_a = rho_a.sites();
    let gp = fidelity_pure(&chain_a_ground(Sign::Plus, n_a)?, rho_a)?;
    let gm = fidelity_pure(&chain_a_ground(Sign::Minus, n_a)?, rho_a)?;
    Ok(rate_from_amplitudes(gp, gm, denominator))
}

/// `Tr[ρ_± ρ_A]` normalized by their sum.
pub fn return_probabilities(rho_a: &DensityMatrix) -> Result<(f64, f64)> {
    let n_a = rho_a.sites();
    let qp = fidelity_pure(&chain_a_ground(Sign::Plus, n_a)?, rho_a)?.powi(2);
    let qm = fidelity_pure(&chain_a_ground(Sign::Minus, n_a)?, rho_a)?.powi(2);
    normalize_pair(qp, qm)
}

fn normalize_pair(qp: f64, qm: f64) -> Result<(f64, f64)> {
    let total = qp + qm;
    if total <= MIN_NORMALIZATION || !total.is_finite() {
        return Err(Error::DegenerateNormalization { total });
    }
    Ok((qp / total, qm / total))
}

/// `N_A⁻¹ Σ_{i≤N_A} ⟨σ^x_i⟩` on a state whose first `n_a` sites are chain A.
pub fn magnetization_x(rho: &DensityMatrix, n_a: usize) -> Result<f64> {
    let sites = rho.sites();
    if n_a == 0 || n_a > sites {
        return Err(Error::InvalidParameter { name: "n_a", reason: format!("must lie in 1..={sites}") });
    }
    let mut sum = 0.0;
    for i in 1..=n_a {
        sum += rho.expectation(&pauli(Axis::X, i, sites)?)?;
    }
    Ok(sum / n_a as f64)
}

/// `G(t) = ⟨ψ₀|e^{-iHt}|ψ₀⟩`.
pub fn closed_loschmidt(psi0: &PureState, h_f: &Operator, times: &[f64]) -> Result<Vec<C64>> {
    let (energies, weights) = spectral_weights(psi0, h_f)?;
    Ok(times
        .iter()
        .map(|&t| energies.iter().zip(&weights).map(|(e, w)| C64::new(0.0, -e * t).exp() * *w).sum())
        .collect())
}

fn spectral_weights(psi0: &PureState, h_f: &Operator) -> Result<(Vec<f64>, Vec<f64>)> {
    if psi0.dim() != h_f.dim() {
        return Err(Error::DimensionMismatch { expected: h_f.dim(), found: psi0.dim() });
    }
    let eig = linalg::eigh(h_f.matrix())?;
    let c = linalg::adjoint(&eig.vectors).dot(psi0.amplitudes());
    Ok((eig.values, c.iter().map(|z| z.norm_sqr()).collect()))
}

/// Closed-system diagnostics of a pure quench.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedDiagnostics {
    /// `ζ(t) = -N⁻¹ ln G(t)` on the principal branch.
    pub zeta: Vec<C64>,
    /// Probability to remain in the ground manifold.
    pub l_sym: Vec<f64>,
    /// Interferometric amplitude `Tr[ρ(0) U(t)]`.
    pub g_i: Vec<C64>,
}

/// `ζ(t)`, `L_Sym(t)` and `G_I(t)` for the quench of `psi0` under `h_f`.
pub fn closed_rate_and_symmetric(
    psi0: &PureState,
    manifold: &[PureState],
    h_f: &Operator,
    times: &[f64],
) -> Result<ClosedDiagnostics> {
    let mut deviation = 0.0f64;
    for (i, a) in manifold.iter().enumerate() {
        for (j, b) in manifold.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            deviation = deviation.max((a.overlap(b)? - C64::new(target, 0.0)).norm());
        }
    }
    if deviation > ORTHONORMAL_TOL {
        return Err(Error::NotOrthonormal { deviation });
    }
    if let Some(bad) = manifold.iter().find(|s| s.dim() != psi0.dim()) {
        return Err(Error::DimensionMismatch { expected: psi0.dim(), found: bad.dim() });
    }

    let sites = psi0.sites().max(1) as f64;
    let g = closed_loschmidt(psi0, h_f, times)?;
    let zeta = g.iter().map(|z| -z.ln() / sites).collect();

    let eig = linalg::eigh(h_f.matrix())?;
    let vt = linalg::adjoint(&eig.vectors);
    let c0 = vt.dot(psi0.amplitudes());
    let overlaps: Vec<_> = manifold.iter().map(|m| vt.dot(m.amplitudes())).collect();
    let rho0 = psi0.projector();
    let mut l_sym = Vec::with_capacity(times.len());
    let mut g_i = Vec::with_capacity(times.len());
    for &t in times {
        let phases: Vec<C64> = eig.values.iter().map(|e| C64::new(0.0, -e * t).exp()).collect();
        let mut total = 0.0;
        for d in &overlaps {
            let amp: C64 = d.iter().zip(c0.iter()).zip(&phases).map(|((x, y), p)| x.conj() * y * p).sum();
            total += amp.norm_sqr();
        }
        l_sym.push(total);
        let mut scaled = eig.vectors.clone();
        for (mut col, p) in scaled.columns_mut().into_iter().zip(&phases) {
            col.mapv_inplace(|z| z * p);
        }
        let u = scaled.dot(&vt);
        g_i.push(linalg::trace_product(&rho0, &u));
    }
    Ok(ClosedDiagnostics { zeta, l_sym, g_i })
}

/// Everything measured at one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservableRecord {
    /// Time in units of the bath period.
    pub t: f64,
    pub rate_function: f64,
    pub rate_branch: Sign,
    pub rate_infinite: bool,
    pub g_f_plus: f64,
    pub g_f_minus: f64,
    pub p_plus: f64,
    pub p_minus: f64,
    pub m_x: f64,
    pub j_expect: f64,
    pub gamma_t: f64,
    pub lambda_t: f64,
    pub trace_dev: f64,
    pub purity: f64,
}

impl ObservableRecord {
    /// Range checks on every bounded field.
    pub fn check(&self) -> Result<()> {
        const TOL: f64 = 1e-8;
        let unit = |name: &str, v: f64| -> Result<()> {
            if !(-TOL..=1.0 + TOL).contains(&v) {
                return Err(Error::InvalidState(format!("{name} = {v} outside [0, 1] at t = {}", self.t)));
            }
            Ok(())
        };
        unit("G_F_plus", self.g_f_plus)?;
        unit("G_F_minus", self.g_f_minus)?;
        unit("P_plus", self.p_plus)?;
        unit("P_minus", self.p_minus)?;
        unit("purity", self.purity)?;
        if (self.p_plus + self.p_minus - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState(format!("P_plus + P_minus = {} at t = {}", self.p_plus + self.p_minus, self.t)));
        }
        if self.m_x.abs() > 1.0 + TOL {
            return Err(Error::InvalidState(format!("M_x = {} at t = {}", self.m_x, self.t)));
        }
        if !self.rate_infinite && (self.rate_function.is_nan() || self.rate_function < 0.0) {
            return Err(Error::InvalidState(format!("rate function {} at t = {}", self.rate_function, self.t)));
        }
        Ok(())
    }
}

/// Sites averaged in the magnetization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum MagnetizationSites {
    #[default]
    ChainA,
    Ring,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ProbeConfig {
    pub denominator: Denominator,
    pub magnetization: MagnetizationSites,
}

/// Evaluates [`ObservableRecord`]s from full-ring states given in a fixed
/// frame; records every observed sample.
#[derive(Debug, Clone)]
pub struct Probe {
    // Transposed frame operators, so that Tr[Oρ] = Σ (Oᵀ ∘ ρ).
    p_plus: CMatrix,
    p_minus: CMatrix,
    m_x: CMatrix,
    current: CMatrix,
    rates: BathRates,
    denominator: usize,
    records: Vec<ObservableRecord>,
}

impl Probe {
    pub fn new(p: &ModelParams, frame: &Frame, rates: BathRates, cfg: ProbeConfig) -> Result<Self> {
        p.validate()?;
        let n = p.sites();
        let lift = |sign| -> Result<CMatrix> {
            let proj = Operator::from_matrix(chain_a_ground(sign, p.n_a)?.projector())?;
            Ok(embed(&proj, Segment::A, p)?.into_matrix())
        };
        let sites: Vec<usize> = match cfg.magnetization {
            MagnetizationSites::ChainA => (1..=p.n_a).collect(),
            MagnetizationSites::Ring => (1..=n).collect(),
        };
        let mut mx = Operator::zeros(n)?;
        for &i in &sites {
            mx = &mx + &pauli(Axis::X, i, n)?;
        }
        let mx = mx.scale(C64::new(1.0 / sites.len() as f64, 0.0)).into_matrix();
        let prepare = |m: CMatrix| frame.to_frame(&m).t().to_owned();
        Ok(Probe {
            p_plus: prepare(lift(Sign::Plus)?),
            p_minus: prepare(lift(Sign::Minus)?),
            m_x: prepare(mx),
            current: prepare(global_current(p)?.into_matrix()),
            rates,
            denominator: cfg.denominator.sites(p),
            records: Vec::new(),
        })
    }

    /// Measures one full-ring state expressed in the probe's frame; `t` in
    /// units of Ω⁻¹.
    pub fn measure(&self, t: f64, rho: &CMatrix) -> Result<ObservableRecord> {
        if rho.dim() != self.p_plus.dim() {
            return Err(Error::DimensionMismatch { expected: self.p_plus.nrows(), found: rho.nrows() });
        }
        let functional = |o: &CMatrix| -> f64 { o.iter().zip(rho.iter()).map(|(a, b)| a * b).sum::<C64>().re };
        let qp = functional(&self.p_plus).max(0.0);
        let qm = functional(&self.p_minus).max(0.0);
        let (gp, gm) = (qp.sqrt(), qm.sqrt());
        let rate = rate_from_amplitudes(gp, gm, self.denominator);
        let (p_plus, p_minus) = normalize_pair(qp, qm)?;
        let (gamma_t, lambda_t) = self.rates.generator_coefficients(t);
        let trace = linalg::trace(rho);
        Ok(ObservableRecord {
            t: t / self.rates.period(),
            rate_function: rate.value,
            rate_branch: rate.branch,
            rate_infinite: rate.infinite,
            g_f_plus: gp,
            g_f_minus: gm,
            p_plus,
            p_minus,
            m_x: functional(&self.m_x),
            j_expect: functional(&self.current),
            gamma_t,
            lambda_t,
            trace_dev: (trace - C64::new(1.0, 0.0)).norm(),
            purity: rho.iter().map(|z| z.norm_sqr()).sum(),
        })
    }

    pub fn records(&self) -> &[ObservableRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<ObservableRecord> {
        self.records
    }
}

impl Observer for Probe {
    fn observe(&mut self, _index: usize, t: f64, rho: &CMatrix) -> Result<()> {
        let rec = self.measure(t, rho)?;
        rec.check()?;
        self.records.push(rec);
        Ok(())
    }
}

/// A change of the minimizing branch between two consecutive samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cusp {
    /// Index of the first sample on the new branch.
    pub index: usize,
    /// Midpoint of the bracketing samples, units of T.
    pub time: f64,
    /// Half the bracketing interval.
    pub uncertainty: f64,
    pub from: Sign,
    pub to: Sign,
}

/// Branch switches of the rate function.
pub fn detect_cusps(records: &[ObservableRecord]) -> Vec<Cusp> {
    records
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0].rate_branch != w[1].rate_branch)
        .map(|(i, w)| Cusp {
            index: i + 1,
            time: 0.5 * (w[0].t + w[1].t),
            uncertainty: 0.5 * (w[1].t - w[0].t),
            from: w[0].rate_branch,
            to: w[1].rate_branch,
        })
        .collect()
}

/// Midpoints of the intervals where `values` changes sign. Exact zeros are
/// attributed to the interval they open.
pub fn sign_changes(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    let mut last: Option<(usize, bool)> = None;
    for (i, &v) in values.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let pos = v > 0.0;
        if let Some((j, prev)) = last {
            if prev != pos {
                out.push(0.5 * (times[j] + times[i]));
            }
        }
        last = Some((i, pos));
    }
    out
}
