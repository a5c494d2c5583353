//! Self-check suite: conservation, bath rates, preparation, both engines,
//! stroboscopic divisibility, observables and config limits.

use std::time::Instant;

use dqpt_core::bathrates::{infinite_mode_sine_series, BathParams, BathRates};
use dqpt_core::engine::{
    max_trace_distance, run_lindblad, simultaneous_eigensystem, ExactPropagator, Frame, RunOptions, Store,
};
use dqpt_core::model::{global_current, open_ring_hamiltonian, ring_hamiltonian, ModelParams};
use dqpt_core::observables::{fidelity, partial_trace_b, return_probabilities, Probe, ProbeConfig};
use dqpt_core::prep::initial_density_matrix;
use dqpt_core::spinops::{relative_commutator, Operator};

use crate::config::ExperimentConfig;

#[derive(Debug, Clone, Copy, Default)]
pub struct SuiteOptions {
    /// Build every ring without the `σ^x_N σ^x_1` bond (negative control).
    pub drop_closure_bond: bool,
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Check { name, passed, detail }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
        write!(f, "{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

const OPEN_BATH: BathParams = BathParams { gamma0: 0.2827, h: 0.5, z: 0.1, modes: 60, beta: f64::INFINITY, omega: 1.0 };

fn hamiltonian(p: &ModelParams, opts: SuiteOptions) -> dqpt_core::Result<Operator> {
    if opts.drop_closure_bond {
        open_ring_hamiltonian(p)
    } else {
        ring_hamiltonian(p)
    }
}

fn small(nu: f64) -> ModelParams {
    ModelParams { n_a: 2, n_b: 2, nu, ..ModelParams::REFERENCE }
}

fn conservation(opts: SuiteOptions) -> dqpt_core::Result<Check> {
    let couplings = [(0.42, 1.0), (1.3, 0.25), (0.05, 2.0)];
    let mut worst = 0.0f64;
    for n in 4..=10 {
        for (tau, field) in couplings {
            let p = ModelParams { n_a: n / 2, n_b: n - n / 2, tau, field, nu: 0.0 };
            worst = worst.max(relative_commutator(&hamiltonian(&p, opts)?, &global_current(&p)?)?);
        }
    }
    Ok(Check::new("ring current is conserved", worst < 1e-10, format!("max ‖[H,J]‖/‖H‖‖J‖ = {worst:.3e} for N = 4..10")))
}

fn rate_maxima() -> dqpt_core::Result<Check> {
    let targets = [(0.3, 0.1018), (0.5, 0.2827), (0.7, 0.5542)];
    let mut worst = 0.0f64;
    let mut worst_series = 0.0f64;
    for (h, target) in targets {
        let params = BathParams { h, ..BathParams::default() };
        let rates = BathRates::new(&params)?;
        let (t, g) = rates.max_gamma1();
        worst = worst.max((g - target).abs());
        let closed = h * h * infinite_mode_sine_series(params.z, t);
        worst_series = worst_series.max((closed - g).abs());
    }
    let passed = worst <= 1e-3 && worst_series <= 1e-3;
    Ok(Check::new(
        "maximum of the non-Markovian rate",
        passed,
        format!("max deviation {worst:.2e} from (0.1018, 0.2827, 0.5542); closed form {worst_series:.2e}"),
    ))
}

fn preparation() -> dqpt_core::Result<Check> {
    let p = ModelParams::REFERENCE;
    let rho = initial_density_matrix(&p)?;
    let rho_a = partial_trace_b(&rho, p.n_a, p.n_b)?;
    let (pp, pm) = return_probabilities(&rho_a)?;
    let f = fidelity(&rho, &rho)?;
    let purity = rho.purity();
    let passed = (pp - 1.0).abs() < 1e-10 && pm.abs() < 1e-10 && (f - 1.0).abs() < 1e-8 && (purity - 1.0).abs() < 1e-10;
    Ok(Check::new(
        "initial state is pure and starts on the + branch",
        passed,
        format!("P+ = {pp:.12}, P- = {pm:.2e}, F(ρ,ρ) = {f:.10}, purity = {purity:.12}"),
    ))
}

fn eigensystem(opts: SuiteOptions) -> dqpt_core::Result<Check> {
    let p = ModelParams::REFERENCE;
    let h = hamiltonian(&p, opts)?;
    let j = global_current(&p)?;
    match simultaneous_eigensystem(&h, &j) {
        Ok(eig) => {
            let (u, hr, jr) = eig.residuals(&h, &j);
            let worst = u.max(hr).max(jr);
            Ok(Check::new(
                "joint eigenbasis of H and J",
                worst < 1e-10,
                format!("unitarity {u:.2e}, off-diagonal H {hr:.2e}, J {jr:.2e}"),
            ))
        }
        Err(e) => Ok(Check::new("joint eigenbasis of H and J", false, e.to_string())),
    }
}

fn engines(opts: SuiteOptions) -> dqpt_core::Result<Check> {
    let name = "exact and master-equation engines agree";
    let p = small(5.0);
    let h = hamiltonian(&p, opts)?;
    let j = global_current(&p)?;
    let eig = match simultaneous_eigensystem(&h, &j) {
        Ok(e) => e,
        Err(e) => return Ok(Check::new(name, false, e.to_string())),
    };
    let rates = BathRates::new(&OPEN_BATH)?;
    let rho0 = initial_density_matrix(&p)?;
    let period = rates.period();
    let times: Vec<f64> = (0..=20).map(|k| k as f64 * period / 20.0).collect();
    let run = RunOptions { store: Store::All, min_eig_every: 1 };
    let exact = ExactPropagator::new(&rho0, &eig, rates.clone())?.run(&times, run, &mut ())?;
    let rk4 = run_lindblad(&rho0, &h, &j, Frame::Computational, rates, &times, 1000, run, &mut ())?;
    let d = max_trace_distance(&exact, &rk4)?;
    Ok(Check::new(name, d <= 1e-6, format!("max trace distance {d:.2e} at 21 samples over one period, N = 4")))
}

fn divisibility() -> dqpt_core::Result<Check> {
    let p = small(5.0);
    let h = ring_hamiltonian(&p)?;
    let j = global_current(&p)?;
    let eig = simultaneous_eigensystem(&h, &j)?;
    let rates = BathRates::new(&OPEN_BATH)?;
    let prop = ExactPropagator::new(&initial_density_matrix(&p)?, &eig, rates)?;
    let map = prop.one_period_map();
    let period = prop.rates().period();
    let mut worst = 0.0f64;
    for m in [2u32, 3] {
        let direct = prop.state_eigen(m as f64 * period);
        let composed = map.power(m).apply_eigen(prop.initial_eigen());
        worst = direct.iter().zip(composed.iter()).map(|(a, b)| (a - b).norm()).fold(worst, f64::max);
    }
    Ok(Check::new("one-period map composes", worst <= 1e-8, format!("max |ρ(mT) - Φ(T)^m ρ(0)| = {worst:.2e}, m = 2, 3")))
}

fn state_quality() -> dqpt_core::Result<Check> {
    let p = ModelParams::REFERENCE;
    let h = ring_hamiltonian(&p)?;
    let j = global_current(&p)?;
    let eig = simultaneous_eigensystem(&h, &j)?;
    let rates = BathRates::new(&OPEN_BATH)?;
    let period = rates.period();
    let times: Vec<f64> = (0..=200).map(|k| k as f64 * period / 100.0).collect();
    let mut probe = Probe::new(&p, &Frame::Eigen(&eig), rates.clone(), ProbeConfig::default())?;
    let run = RunOptions { store: Store::Nothing, min_eig_every: 10 };
    let traj = ExactPropagator::new(&initial_density_matrix(&p)?, &eig, rates)?.run(&times, run, &mut probe)?;
    let q = traj.quality;
    let passed = q.max_trace_dev <= 1e-9 && q.min_eigenvalue >= -1e-8;
    Ok(Check::new(
        "trace and positivity over two periods",
        passed,
        format!("max |Tr ρ - 1| = {:.2e}, min eigenvalue {:.2e} ({} checks)", q.max_trace_dev, q.min_eigenvalue, q.eigen_checks),
    ))
}

fn site_cap() -> Check {
    let doc = "[model]\nn_a = 13\nn_b = 2\n";
    let rejected = matches!(ExperimentConfig::from_toml_str(doc), Err(crate::CliError::Config { .. }));
    Check::new("15-site config is rejected", rejected, "n_a = 13, n_b = 2".into())
}

/// Runs every check; errors become failed checks.
pub fn run_suite(opts: SuiteOptions) -> Vec<Check> {
    type Job = Box<dyn Fn(SuiteOptions) -> dqpt_core::Result<Check>>;
    let jobs: Vec<(&'static str, Job)> = vec![
        ("ring current is conserved", Box::new(conservation)),
        ("maximum of the non-Markovian rate", Box::new(|_| rate_maxima())),
        ("initial state is pure and starts on the + branch", Box::new(|_| preparation())),
        ("joint eigenbasis of H and J", Box::new(eigensystem)),
        ("exact and master-equation engines agree", Box::new(engines)),
        ("one-period map composes", Box::new(|_| divisibility())),
        ("trace and positivity over two periods", Box::new(|_| state_quality())),
        ("15-site config is rejected", Box::new(|_| Ok(site_cap()))),
    ];
    jobs.into_iter()
        .map(|(name, job)| {
            let start = Instant::now();
            let mut check = job(opts).unwrap_or_else(|e| Check::new(name, false, e.to_string()));
            check.detail = format!("{} [{:.2} s]", check.detail, start.elapsed().as_secs_f64());
            check
        })
        .collect()
}
