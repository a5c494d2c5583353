//! Time evolution of the ring density matrix.
//!
//! Two engines produce the same dynamics. [`ExactPropagator`] multiplies the
//! eigenbasis coherences by `e^{-i(E_α-E_β)t} F_αβ(t)`. [`LindbladIntegrator`]
//! integrates the time-local master equation
//!
//! ```text
//! dρ/dt = -i[Ĥ - λ(t)Ĵ², ρ] + γ(t)(ĴρĴ - ½{Ĵ², ρ})
//! ```
//!
//! with classical fixed-step RK4. Both run in a *frame*: the computational
//! basis, or the simultaneous eigenbasis of `Ĥ` and `Ĵ` where both are
//! diagonal. Trace, purity and spectrum are frame invariant, so quality
//! checks and linear observables never leave the frame.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::bathrates::{BathParams, BathRates};
use crate::linalg::{self, SparseOp};
use crate::model::ModelParams;
use crate::prep::DensityMatrix;
use crate::spinops::Operator;
use crate::{CMatrix, Error, Result, C64};

/// Largest relative commutator accepted by [`simultaneous_eigensystem`].
pub const COMMUTATOR_TOL: f64 = 1e-8;
/// Relative gap that separates clusters of degenerate energies.
pub const CLUSTER_TOL: f64 = 1e-9;
/// Sparse operators drop entries below this fraction of their largest entry.
pub const DROP_TOL: f64 = 1e-12;
/// Lindblad runs abort beyond this trace drift or negativity.
pub const LINDBLAD_QUALITY_TOL: f64 = 1e-6;
/// Exact runs abort beyond this trace drift.
pub const EXACT_TRACE_TOL: f64 = 1e-9;

const I: C64 = C64 { re: 0.0, im: 1.0 };
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Simultaneous eigenbasis of the quench Hamiltonian and the current.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub energies: Vec<f64>,
    pub currents: Vec<f64>,
    /// Unitary whose columns are the common eigenvectors.
    pub basis: CMatrix,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// `U† A U`.
    pub fn to_eigen(&self, a: &CMatrix) -> CMatrix {
        linalg::adjoint(&self.basis).dot(&a.dot(&self.basis))
    }

    /// `U Ã U†`.
    pub fn to_computational(&self, a: &CMatrix) -> CMatrix {
        self.basis.dot(&a.dot(&linalg::adjoint(&self.basis)))
    }

    /// Unitarity defect of the basis and the relative off-diagonal norms of
    /// `h` and `j` after rotation.
    pub fn residuals(&self, h: &Operator, j: &Operator) -> (f64, f64, f64) {
        let n = self.dim();
        let gram = linalg::adjoint(&self.basis).dot(&self.basis);
        let unitarity = linalg::frobenius(&(&gram - &linalg::identity(n)));
        let rel = |op: &Operator| {
            let norm = linalg::frobenius(op.matrix());
            if norm == 0.0 {
                0.0
            } else {
                linalg::offdiagonal_norm(&self.to_eigen(op.matrix())) / norm
            }
        };
        (unitarity, rel(h), rel(j))
    }
}

/// Diagonalizes commuting Hermitian `h` and `j` in a common basis.
///
/// Energies within `1e-9` of the spectral range are treated as degenerate
/// and `j` is diagonalized inside each such cluster.
pub fn simultaneous_eigensystem(h: &Operator, j: &Operator) -> Result<EigenSystem> {
    if h.dim() != j.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), found: j.dim() });
    }
    let residual = crate::spinops::relative_commutator(h, j)?;
    if residual > COMMUTATOR_TOL {
        return Err(Error::NonCommuting { residual });
    }

    let n = h.dim();
    let eh = linalg::eigh(h.matrix())?;
    let range = eh.values[n - 1] - eh.values[0];
    let gap = CLUSTER_TOL * range;
    let mut basis = eh.vectors;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && eh.values[end] - eh.values[end - 1] <= gap {
            end += 1;
        }
        if end - start > 1 {
            let block = basis.slice(ndarray::s![.., start..end]).to_owned();
            let projected = linalg::adjoint(&block).dot(&j.matrix().dot(&block));
            let inner = linalg::eigh(&projected)?;
            let rotated = block.dot(&inner.vectors);
            basis.slice_mut(ndarray::s![.., start..end]).assign(&rotated);
        }
        start = end;
    }

    let rayleigh = |op: &CMatrix| -> Vec<f64> {
        let ob = op.dot(&basis);
        (0..n)
            .map(|c| (0..n).map(|r| basis[(r, c)].conj() * ob[(r, c)]).sum::<C64>().re)
            .collect()
    };
    let energies = rayleigh(h.matrix());
    let currents = rayleigh(j.matrix());
    Ok(EigenSystem { energies, currents, basis })
}

/// `F_αβ(t) = exp[-Γ(t)(V_α-V_β)² + iΛ(t)(V_α²-V_β²)]`.
pub fn influence_factor(alpha: usize, beta: usize, t: f64, eig: &EigenSystem, rates: &BathRates) -> C64 {
    if alpha == beta {
        return C64::new(1.0, 0.0);
    }
    let (big_gamma, big_lambda) = rates.influence_exponents(t);
    let (va, vb) = (eig.currents[alpha], eig.currents[beta]);
    let dv = va - vb;
    C64::new(-big_gamma * dv * dv, big_lambda * (va * va - vb * vb)).exp()
}

/// Which engine produced a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EngineTag {
    Exact,
    Lindblad,
}

/// Which states a run keeps in its [`Trajectory`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Store {
    All,
    /// Samples at integer multiples of the bath period.
    PeriodBoundaries,
    /// Every sample whose index is a multiple of the stride.
    Every(usize),
    Nothing,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub store: Store,
    /// Minimum eigenvalue is computed every this many samples and at the
    /// last one.
    pub min_eig_every: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { store: Store::All, min_eig_every: 1 }
    }
}

/// Worst state quality seen along a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityReport {
    pub max_trace_dev: f64,
    pub min_eigenvalue: f64,
    pub eigen_checks: usize,
}

impl Default for QualityReport {
    fn default() -> Self {
        QualityReport { max_trace_dev: 0.0, min_eigenvalue: f64::INFINITY, eigen_checks: 0 }
    }
}

/// Result of an evolution.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub engine: EngineTag,
    pub model: Option<ModelParams>,
    pub bath: BathParams,
    pub period: f64,
    /// Sample times in units of the bath period.
    pub times: Vec<f64>,
    /// Stored states in the computational basis, keyed by sample index.
    pub states: Vec<(usize, DensityMatrix)>,
    pub quality: QualityReport,
}

impl Trajectory {
    pub fn state_at(&self, index: usize) -> Option<&DensityMatrix> {
        self.states.iter().find(|(i, _)| *i == index).map(|(_, s)| s)
    }

    pub fn with_model(mut self, model: ModelParams) -> Self {
        self.model = Some(model);
        self
    }
}

/// Receives every sample of a run, expressed in the run's frame.
pub trait Observer {
    fn observe(&mut self, index: usize, t: f64, rho: &CMatrix) -> Result<()>;
}

impl Observer for () {
    fn observe(&mut self, _: usize, _: f64, _: &CMatrix) -> Result<()> {
        Ok(())
    }
}

/// Basis in which a Lindblad run is integrated.
#[derive(Debug, Clone, Copy)]
pub enum Frame<'a> {
    Computational,
    Eigen(&'a EigenSystem),
}

impl Frame<'_> {
    pub fn to_frame(&self, a: &CMatrix) -> CMatrix {
        match self {
            Frame::Computational => a.clone(),
            Frame::Eigen(e) => e.to_eigen(a),
        }
    }

    pub fn to_computational(&self, a: &CMatrix) -> CMatrix {
        match self {
            Frame::Computational => a.clone(),
            Frame::Eigen(e) => e.to_computational(a),
        }
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::InvalidParameter { name: "times", reason: "must be finite and nonnegative".into() });
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter { name: "times", reason: "must be strictly increasing".into() });
    }
    Ok(())
}

fn is_period_boundary(t: f64, period: f64) -> bool {
    let x = t / period;
    (x - x.round()).abs() < 1e-9
}

struct Recorder<'o> {
    opts: RunOptions,
    period: f64,
    count: usize,
    quality: QualityReport,
    states: Vec<(usize, DensityMatrix)>,
    observer: &'o mut dyn Observer,
}

impl Recorder<'_> {
    /// Returns the trace deviation and, when checked, the minimum eigenvalue.
    fn record(&mut self, index: usize, t: f64, rho: &CMatrix, frame: &Frame) -> Result<(f64, Option<f64>)> {
        let trace_dev = (linalg::trace(rho) - C64::new(1.0, 0.0)).norm();
        self.quality.max_trace_dev = self.quality.max_trace_dev.max(trace_dev);
        let every = self.opts.min_eig_every.max(1);
        let min_eig = if index.is_multiple_of(every) || index + 1 == self.count {
            let m = linalg::eigvalsh(rho)?[0];
            self.quality.min_eigenvalue = self.quality.min_eigenvalue.min(m);
            self.quality.eigen_checks += 1;
            Some(m)
        } else {
            None
        };
        let keep = match self.opts.store {
            Store::All => true,
            Store::PeriodBoundaries => is_period_boundary(t, self.period),
            Store::Every(stride) => index.is_multiple_of(stride.max(1)),
            Store::Nothing => false,
        };
        if keep {
            let full = linalg::hermitian_part(&frame.to_computational(rho));
            self.states.push((index, DensityMatrix::with_structure_checked(full)?));
        }
        self.observer.observe(index, t, rho)?;
        Ok((trace_dev, min_eig))
    }

    fn finish(self, engine: EngineTag, rates: &BathRates, times: &[f64]) -> Trajectory {
        Trajectory {
            engine,
            model: None,
            bath: *rates.params(),
            period: self.period,
            times: times.iter().map(|t| t / self.period).collect(),
            states: self.states,
            quality: self.quality,
        }
    }
}

/// Exact influence-functional propagation from a fixed initial state.
#[derive(Debug, Clone)]
pub struct ExactPropagator<'a> {
    eig: &'a EigenSystem,
    rates: BathRates,
    rho0: CMatrix,
}

impl<'a> ExactPropagator<'a> {
    pub fn new(rho0: &DensityMatrix, eig: &'a EigenSystem, rates: BathRates) -> Result<Self> {
        if rho0.dim() != eig.dim() {
            return Err(Error::DimensionMismatch { expected: eig.dim(), found: rho0.dim() });
        }
        Ok(ExactPropagator { eig, rates, rho0: eig.to_eigen(rho0.matrix()) })
    }

    pub fn rates(&self) -> &BathRates {
        &self.rates
    }

    /// Initial state in the eigenbasis.
    pub fn initial_eigen(&self) -> &CMatrix {
        &self.rho0
    }

    /// Elementwise factors `e^{-i(E_α-E_β)t} F_αβ(t)`.
    pub fn factors(&self, t: f64) -> CMatrix {
        let (big_gamma, big_lambda) = self.rates.influence_exponents(t);
        let e = &self.eig.energies;
        let v = &self.eig.currents;
        let phase: Vec<C64> = (0..e.len())
            .map(|a| C64::new(0.0, -(e[a] * t - big_lambda * v[a] * v[a])).exp())
            .collect();
        CMatrix::from_shape_fn((e.len(), e.len()), |(a, b)| {
            if a == b {
                return C64::new(1.0, 0.0);
            }
            let dv = v[a] - v[b];
            phase[a] * phase[b].conj() * (-big_gamma * dv * dv).exp()
        })
    }

    /// `ρ(t)` in the eigenbasis.
    pub fn state_eigen(&self, t: f64) -> CMatrix {
        let mut out = self.factors(t);
        out.zip_mut_with(&self.rho0, |f, r| *f *= *r);
        out
    }

    /// `ρ(t)` in the computational basis.
    pub fn state(&self, t: f64) -> Result<DensityMatrix> {
        let full = linalg::hermitian_part(&self.eig.to_computational(&self.state_eigen(t)));
        DensityMatrix::new(full)
    }

    /// The one-period dynamical map as elementwise eigenbasis factors.
    pub fn one_period_map(&self) -> PeriodMap {
        PeriodMap { factors: self.factors(self.rates.period()) }
    }

    /// Samples `ρ(t)` at `times` (units Ω⁻¹).
    pub fn run(&self, times: &[f64], opts: RunOptions, observer: &mut dyn Observer) -> Result<Trajectory> {
        check_times(times)?;
        let frame = Frame::Eigen(self.eig);
        let mut rec = Recorder {
            opts,
            period: self.rates.period(),
            count: times.len(),
            quality: QualityReport::default(),
            states: Vec::new(),
            observer,
        };
        for (index, &t) in times.iter().enumerate() {
            let rho = self.state_eigen(t);
            let (trace_dev, min_eig) = rec.record(index, t, &rho, &frame)?;
            if trace_dev > EXACT_TRACE_TOL || min_eig.is_some_and(|m| m < crate::prep::MIN_EIGENVALUE) {
                return Err(Error::InvalidState(format!(
                    "exact state at t = {t} has trace deviation {trace_dev:e} and minimum eigenvalue {:e}",
                    min_eig.unwrap_or(f64::NAN)
                )));
            }
        }
        Ok(rec.finish(EngineTag::Exact, &self.rates, times))
    }
}

/// One-period map `Φ(T)` acting on eigenbasis matrices.
#[derive(Debug, Clone)]
pub struct PeriodMap {
    factors: CMatrix,
}

impl PeriodMap {
    pub fn apply_eigen(&self, rho: &CMatrix) -> CMatrix {
        let mut out = rho.clone();
        out.zip_mut_with(&self.factors, |r, f| *r *= *f);
        out
    }

    /// `Φ(T)^m`.
    pub fn power(&self, m: u32) -> PeriodMap {
        PeriodMap { factors: self.factors.mapv(|f| f.powu(m)) }
    }
}

/// Exact trajectory storing every sample.
pub fn evolve_exact(rho0: &DensityMatrix, eig: &EigenSystem, bath: &BathParams, times: &[f64]) -> Result<Trajectory> {
    ExactPropagator::new(rho0, eig, BathRates::new(bath)?)?.run(times, RunOptions::default(), &mut ())
}

/// Per-entry coefficients when `Ĥ` and `Ĵ` are diagonal in the frame:
/// `dρ_ab/dt = (A_ab + λ B_ab + γ C_ab) ρ_ab`, stored as split real and
/// imaginary parts.
#[derive(Debug, Clone)]
struct DiagonalKernel {
    coeffs: [Vec<f64>; 6],
}

impl DiagonalKernel {
    fn new(h: &[C64], j: &[C64]) -> Self {
        let n = h.len();
        let k: Vec<C64> = j.iter().map(|x| x * x).collect();
        let mut coeffs: [Vec<f64>; 6] = core::array::from_fn(|_| vec![0.0; n * n]);
        for r in 0..n {
            for s in 0..n {
                let idx = r * n + s;
                let a = -I * (h[r] - h[s]);
                let b = I * (k[r] - k[s]);
                let c = j[r] * j[s] - (k[r] + k[s]) * 0.5;
                for (slot, v) in [a.re, a.im, b.re, b.im, c.re, c.im].into_iter().enumerate() {
                    coeffs[slot][idx] = v;
                }
            }
        }
        DiagonalKernel { coeffs }
    }
}

const CHUNK: usize = 128;

/// Fixed-step RK4 integrator of the time-local master equation.
#[derive(Debug, Clone)]
pub struct LindbladIntegrator {
    h: SparseOp,
    j: SparseOp,
    k: SparseOp,
    kernel: Option<DiagonalKernel>,
    rates: BathRates,
    n: usize,
    t: f64,
    rho: Vec<C64>,
}

impl LindbladIntegrator {
    /// `h`, `j` and `rho0` must be expressed in the same frame; `t0` is the
    /// time elapsed since the quench.
    pub fn new(h: &CMatrix, j: &CMatrix, rates: BathRates, rho0: &CMatrix, t0: f64) -> Result<Self> {
        let n = h.nrows();
        for m in [j, rho0] {
            if m.dim() != (n, n) {
                return Err(Error::DimensionMismatch { expected: n, found: m.nrows() });
            }
        }
        let hs = SparseOp::from_dense(h, DROP_TOL);
        let js = SparseOp::from_dense(j, DROP_TOL);
        let ks = SparseOp::from_dense(&j.dot(j), DROP_TOL);
        let kernel = match (hs.diagonal(), js.diagonal()) {
            (Some(hd), Some(jd)) if ks.is_diagonal() => Some(DiagonalKernel::new(hd, jd)),
            _ => None,
        };
        Ok(LindbladIntegrator {
            h: hs,
            j: js,
            k: ks,
            kernel,
            rates,
            n,
            t: t0,
            rho: rho0.iter().copied().collect(),
        })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn is_diagonal(&self) -> bool {
        self.kernel.is_some()
    }

    pub fn state(&self) -> CMatrix {
        CMatrix::from_shape_vec((self.n, self.n), self.rho.clone()).expect("square buffer")
    }

    /// `ρ ← (ρ + ρ†)/2`.
    pub fn symmetrize(&mut self) {
        let n = self.n;
        for r in 0..n {
            for c in r..n {
                let avg = (self.rho[r * n + c] + self.rho[c * n + r].conj()) * 0.5;
                self.rho[r * n + c] = avg;
                self.rho[c * n + r] = avg.conj();
            }
        }
    }

    /// Right-hand side of the master equation at time `t`, accumulated
    /// into `out` (which is overwritten).
    pub fn rhs(&self, t: f64, x: &[C64], out: &mut [C64]) {
        let (gamma, lambda) = self.rates.generator_coefficients(t);
        out.iter_mut().for_each(|o| *o = ZERO);
        self.h.left_mul_add(x, -I, out);
        self.h.right_mul_add(x, I, out);
        self.k.left_mul_add(x, C64::new(-0.5 * gamma, lambda), out);
        self.k.right_mul_add(x, C64::new(-0.5 * gamma, -lambda), out);
        if gamma != 0.0 {
            let mut jx = vec![ZERO; x.len()];
            self.j.left_mul_add(x, C64::new(1.0, 0.0), &mut jx);
            self.j.right_mul_add(&jx, C64::new(gamma, 0.0), out);
        }
    }

    /// Integrates to `t_end` in `steps` equal RK4 steps.
    pub fn advance(&mut self, t_end: f64, steps: usize) {
        let steps = steps.max(1);
        let dt = (t_end - self.t) / steps as f64;
        if self.kernel.is_some() {
            self.advance_diagonal(dt, steps);
        } else {
            self.advance_generic(dt, steps);
        }
        self.t = t_end;
    }

    fn advance_generic(&mut self, dt: f64, steps: usize) {
        let len = self.rho.len();
        let mut k1 = vec![ZERO; len];
        let mut k2 = vec![ZERO; len];
        let mut k3 = vec![ZERO; len];
        let mut k4 = vec![ZERO; len];
        let mut tmp = vec![ZERO; len];
        for s in 0..steps {
            let t = self.t + s as f64 * dt;
            self.rhs(t, &self.rho, &mut k1);
            axpy_into(&self.rho, 0.5 * dt, &k1, &mut tmp);
            self.rhs(t + 0.5 * dt, &tmp, &mut k2);
            axpy_into(&self.rho, 0.5 * dt, &k2, &mut tmp);
            self.rhs(t + 0.5 * dt, &tmp, &mut k3);
            axpy_into(&self.rho, dt, &k3, &mut tmp);
            self.rhs(t + dt, &tmp, &mut k4);
            let w = dt / 6.0;
            for i in 0..len {
                self.rho[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * w;
            }
        }
    }

    fn advance_diagonal(&mut self, dt: f64, steps: usize) {
        let kernel = self.kernel.as_ref().expect("diagonal kernel");
        // (γ, λ) at t, t + dt/2 and t + dt for every step.
        let schedule: Vec<[(f64, f64); 3]> = (0..steps)
            .map(|s| {
                let t = self.t + s as f64 * dt;
                [
                    self.rates.generator_coefficients(t),
                    self.rates.generator_coefficients(t + 0.5 * dt),
                    self.rates.generator_coefficients(t + dt),
                ]
            })
            .collect();
        let half = 0.5 * dt;
        let w = dt / 6.0;
        let [ar, ai, br, bi, cr, ci] = &kernel.coeffs;
        let mut yr = [0.0f64; CHUNK];
        let mut yi = [0.0f64; CHUNK];
        for start in (0..self.rho.len()).step_by(CHUNK) {
            let m = CHUNK.min(self.rho.len() - start);
            for i in 0..m {
                yr[i] = self.rho[start + i].re;
                yi[i] = self.rho[start + i].im;
            }
            let (ar, ai) = (&ar[start..start + m], &ai[start..start + m]);
            let (br, bi) = (&br[start..start + m], &bi[start..start + m]);
            let (cr, ci) = (&cr[start..start + m], &ci[start..start + m]);
            for stage in &schedule {
                let [(g0, l0), (g1, l1), (g2, l2)] = *stage;
                for i in 0..m {
                    let (c0r, c0i) = (ar[i] + br[i] * l0 + cr[i] * g0, ai[i] + bi[i] * l0 + ci[i] * g0);
                    let (c1r, c1i) = (ar[i] + br[i] * l1 + cr[i] * g1, ai[i] + bi[i] * l1 + ci[i] * g1);
                    let (c2r, c2i) = (ar[i] + br[i] * l2 + cr[i] * g2, ai[i] + bi[i] * l2 + ci[i] * g2);
                    let (y0r, y0i) = (yr[i], yi[i]);
                    let (k1r, k1i) = (c0r * y0r - c0i * y0i, c0r * y0i + c0i * y0r);
                    let (ur, ui) = (y0r + half * k1r, y0i + half * k1i);
                    let (k2r, k2i) = (c1r * ur - c1i * ui, c1r * ui + c1i * ur);
                    let (ur, ui) = (y0r + half * k2r, y0i + half * k2i);
                    let (k3r, k3i) = (c1r * ur - c1i * ui, c1r * ui + c1i * ur);
                    let (ur, ui) = (y0r + dt * k3r, y0i + dt * k3i);
                    let (k4r, k4i) = (c2r * ur - c2i * ui, c2r * ui + c2i * ur);
                    yr[i] = y0r + w * (k1r + 2.0 * (k2r + k3r) + k4r);
                    yi[i] = y0i + w * (k1i + 2.0 * (k2i + k3i) + k4i);
                }
            }
            for i in 0..m {
                self.rho[start + i] = C64::new(yr[i], yi[i]);
            }
        }
    }
}

fn axpy_into(x: &[C64], a: f64, y: &[C64], out: &mut [C64]) {
    for ((o, xi), yi) in out.iter_mut().zip(x).zip(y) {
        *o = xi + yi * a;
    }
}

/// Master-equation run of `rho0` (state at `t = 0`) sampled at `times`.
///
/// Between consecutive samples the integrator takes `steps_per_sample`
/// equal steps; the stretch from 0 to `times[0]` uses the same step length.
#[allow(clippy::too_many_arguments)]
pub fn run_lindblad(
    rho0: &DensityMatrix,
    h: &Operator,
    j: &Operator,
    frame: Frame,
    rates: BathRates,
    times: &[f64],
    steps_per_sample: usize,
    opts: RunOptions,
    observer: &mut dyn Observer,
) -> Result<Trajectory> {
    check_times(times)?;
    if steps_per_sample == 0 {
        return Err(Error::InvalidParameter { name: "steps_per_sample", reason: "must be at least 1".into() });
    }
    for op in [h, j] {
        if op.dim() != rho0.dim() {
            return Err(Error::DimensionMismatch { expected: rho0.dim(), found: op.dim() });
        }
    }
    let hf = frame.to_frame(h.matrix());
    let jf = frame.to_frame(j.matrix());
    let rho_f = frame.to_frame(rho0.matrix());
    let period = rates.period();
    let mut integ = LindbladIntegrator::new(&hf, &jf, rates.clone(), &rho_f, 0.0)?;
    let mut rec = Recorder {
        opts,
        period,
        count: times.len(),
        quality: QualityReport::default(),
        states: Vec::new(),
        observer,
    };
    for (index, &t) in times.iter().enumerate() {
        if t > integ.time() {
            let steps = if index == 0 {
                let h_step = if times.len() > 1 { (times[1] - times[0]) / steps_per_sample as f64 } else { t };
                ((t / h_step).ceil() as usize).max(1)
            } else {
                steps_per_sample
            };
            integ.advance(t, steps);
            integ.symmetrize();
        }
        let rho = integ.state();
        let (trace_dev, min_eig) = rec.record(index, t, &rho, &frame)?;
        let min = min_eig.unwrap_or(0.0);
        if trace_dev > LINDBLAD_QUALITY_TOL || min < -LINDBLAD_QUALITY_TOL {
            return Err(Error::IntegrationQuality { t, trace_dev, min_eig: min });
        }
    }
    Ok(rec.finish(EngineTag::Lindblad, &rates, times))
}

/// Master-equation trajectory in the computational basis, storing every
/// sample.
pub fn evolve_lindblad(
    rho0: &DensityMatrix,
    h: &Operator,
    j: &Operator,
    bath: &BathParams,
    times: &[f64],
    steps_per_sample: usize,
) -> Result<Trajectory> {
    run_lindblad(
        rho0,
        h,
        j,
        Frame::Computational,
        BathRates::new(bath)?,
        times,
        steps_per_sample,
        RunOptions::default(),
        &mut (),
    )
}

/// Exact runs driven through the common [`Observer`] interface.
pub fn run_exact(
    rho0: &DensityMatrix,
    eig: &EigenSystem,
    rates: BathRates,
    times: &[f64],
    opts: RunOptions,
    observer: &mut dyn Observer,
) -> Result<Trajectory> {
    ExactPropagator::new(rho0, eig, rates)?.run(times, opts, observer)
}

/// Largest trace distance between matching stored states of two runs.
pub fn max_trace_distance(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    let mut worst = 0.0f64;
    for (i, sa) in &a.states {
        if let Some(sb) = b.state_at(*i) {
            worst = worst.max(linalg::trace_distance(sa.matrix(), sb.matrix())?);
        }
    }
    Ok(worst)
}
