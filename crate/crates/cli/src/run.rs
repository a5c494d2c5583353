//! Single quench runs: prepare `ψ₊ ⊗ ψ_G`, evolve under the ring
//! Hamiltonian with the current-coupled baths, and measure every sample.

use std::path::{Path, PathBuf};
use std::time::Instant;

use dqpt_core::bathrates::BathRates;
use dqpt_core::engine::{
    max_trace_distance, run_lindblad, simultaneous_eigensystem, ExactPropagator, Frame, QualityReport, RunOptions,
    Store, Trajectory,
};
use dqpt_core::model::{chain_a_hamiltonian, chain_b_hamiltonian, global_current, ring_hamiltonian};
use dqpt_core::observables::{detect_cusps, Cusp, ObservableRecord, Probe};
use dqpt_core::prep::{chain_a_ground, chain_b_ground, Sign};
use serde::Serialize;

use crate::config::{EngineChoice, ExperimentConfig};
use crate::error::{CliError, Result};
use crate::output::{format_sign, write_json, write_trajectory_file};

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const LINDBLAD_TRAJECTORY_FILE: &str = "trajectory_lindblad.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// States compared between the two engines per period.
pub const CROSS_CHECK_SAMPLES: usize = 20;

#[derive(Debug, Clone, Serialize)]
pub struct Software {
    pub name: &'static str,
    pub version: &'static str,
}

impl Default for Software {
    fn default() -> Self {
        Software { name: env!("CARGO_PKG_NAME"), version: env!("CARGO_PKG_VERSION") }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaMaximum {
    pub t_over_period: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GroundEnergies {
    /// `⟨ψ₊|Ĥ_A|ψ₊⟩` for the xx-only chain A.
    pub chain_a: f64,
    /// `⟨ψ_G|Ĥ_B|ψ_G⟩`, including the source term.
    pub chain_b: f64,
    /// `⟨Ĥ^S⟩` in the initial state.
    pub ring_initial: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Derived {
    pub period: f64,
    pub max_gamma1: GammaMaximum,
    pub mean_lamb_shift: f64,
    pub initial_current: f64,
    pub ground_energies: GroundEnergies,
}

#[derive(Debug, Clone, Serialize)]
pub struct Quality {
    pub max_trace_dev: f64,
    pub min_eigenvalue: f64,
    pub eigen_checks: usize,
}

impl From<&QualityReport> for Quality {
    fn from(q: &QualityReport) -> Self {
        Quality { max_trace_dev: q.max_trace_dev, min_eigenvalue: q.min_eigenvalue, eigen_checks: q.eigen_checks }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CuspEntry {
    pub index: usize,
    pub t_over_period: f64,
    pub uncertainty: f64,
    pub from: &'static str,
    pub to: &'static str,
}

impl From<&Cusp> for CuspEntry {
    fn from(c: &Cusp) -> Self {
        CuspEntry {
            index: c.index,
            t_over_period: c.time,
            uncertainty: c.uncertainty,
            from: format_sign(c.from),
            to: format_sign(c.to),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub software: Software,
    pub config: serde_json::Value,
    pub derived: Derived,
    pub samples: usize,
    pub exact_quality: Option<Quality>,
    pub lindblad_quality: Option<Quality>,
    /// Largest trace distance between the two engines at the compared samples.
    pub cross_check_distance: Option<f64>,
    pub cross_check_samples: Option<usize>,
    pub cusps: Vec<CuspEntry>,
    pub outputs: Vec<String>,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    /// Records of the primary engine (exact unless only the master equation ran).
    pub records: Vec<ObservableRecord>,
    /// Master-equation records when both engines ran.
    pub lindblad_records: Option<Vec<ObservableRecord>>,
    pub cusps: Vec<Cusp>,
    pub manifest: RunManifest,
}

fn describe(cfg: &ExperimentConfig) -> String {
    let (m, b, r) = (&cfg.model, &cfg.bath, &cfg.run);
    format!(
        "n_a={} n_b={} tau={} field={} nu={} gamma0={} h={} z={} modes={} beta={} engine={:?} periods={} \
         samples_per_period={} rk4_steps_per_sample={}",
        m.n_a,
        m.n_b,
        m.tau,
        m.field,
        m.nu,
        b.gamma0,
        b.h,
        b.z,
        b.modes,
        b.beta.0,
        r.engine,
        r.periods,
        r.samples_per_period,
        r.rk4_steps_per_sample
    )
}

/// Runs the quench described by `cfg`. Nothing is written.
pub fn run_quench(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let started = Instant::now();
    let echo = |source| CliError::Quench { source, params: describe(cfg) };
    let p = cfg.model_params();
    let rates = BathRates::new(&cfg.bath_params()).map_err(echo)?;
    let h = ring_hamiltonian(&p).map_err(echo)?;
    let j = global_current(&p).map_err(echo)?;
    let eig = simultaneous_eigensystem(&h, &j).map_err(echo)?;

    let psi_a = chain_a_ground(Sign::Plus, p.n_a).map_err(echo)?;
    let psi_b = chain_b_ground(&p).map_err(echo)?;
    let psi = psi_a.kron(&psi_b).map_err(echo)?;
    let rho0 = psi.density_matrix();
    let (t_max, g_max) = rates.max_gamma1();
    let derived = Derived {
        period: rates.period(),
        max_gamma1: GammaMaximum { t_over_period: t_max / rates.period(), value: g_max },
        mean_lamb_shift: rates.mean_lamb_shift(),
        initial_current: psi.expectation(&j).map_err(echo)?,
        ground_energies: GroundEnergies {
            chain_a: psi_a.expectation(&chain_a_hamiltonian(&p).map_err(echo)?).map_err(echo)?,
            chain_b: psi_b.expectation(&chain_b_hamiltonian(&p).map_err(echo)?).map_err(echo)?,
            ring_initial: psi.expectation(&h).map_err(echo)?,
        },
    };

    let times = cfg.sample_times();
    let frame = Frame::Eigen(&eig);
    let both = cfg.run.engine == EngineChoice::Both;
    let stride = (cfg.run.samples_per_period / CROSS_CHECK_SAMPLES).max(1);
    let opts = RunOptions {
        store: if both { Store::Every(stride) } else { Store::Nothing },
        min_eig_every: cfg.run.min_eig_every,
    };
    let new_probe = || Probe::new(&p, &frame, rates.clone(), cfg.probe_config()).map_err(echo);

    let mut exact: Option<(Trajectory, Vec<ObservableRecord>)> = None;
    if cfg.run.engine != EngineChoice::Lindblad {
        let mut probe = new_probe()?;
        let traj = ExactPropagator::new(&rho0, &eig, rates.clone())
            .and_then(|prop| prop.run(&times, opts, &mut probe))
            .map_err(echo)?;
        exact = Some((traj, probe.into_records()));
    }
    let mut lindblad: Option<(Trajectory, Vec<ObservableRecord>)> = None;
    if cfg.run.engine != EngineChoice::Exact {
        let mut probe = new_probe()?;
        let traj = run_lindblad(
            &rho0,
            &h,
            &j,
            frame,
            rates.clone(),
            &times,
            cfg.run.rk4_steps_per_sample,
            opts,
            &mut probe,
        )
        .map_err(echo)?;
        lindblad = Some((traj, probe.into_records()));
    }

    let cross_check = match (&exact, &lindblad) {
        (Some((a, _)), Some((b, _))) => Some((max_trace_distance(a, b).map_err(echo)?, a.states.len())),
        _ => None,
    };
    let exact_quality = exact.as_ref().map(|(t, _)| Quality::from(&t.quality));
    let lindblad_quality = lindblad.as_ref().map(|(t, _)| Quality::from(&t.quality));
    let (records, lindblad_records) = match (exact, lindblad) {
        (Some((_, r)), l) => (r, l.map(|(_, r)| r)),
        (None, Some((_, r))) => (r, None),
        (None, None) => unreachable!("at least one engine runs"),
    };
    let cusps = detect_cusps(&records);
    let mut outputs = vec![TRAJECTORY_FILE.to_string()];
    if lindblad_records.is_some() {
        outputs.push(LINDBLAD_TRAJECTORY_FILE.to_string());
    }
    let manifest = RunManifest {
        software: Software::default(),
        config: cfg.to_json_value(),
        derived,
        samples: records.len(),
        exact_quality,
        lindblad_quality,
        cross_check_distance: cross_check.map(|c| c.0),
        cross_check_samples: cross_check.map(|c| c.1),
        cusps: cusps.iter().map(CuspEntry::from).collect(),
        outputs,
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    Ok(RunOutput { records, lindblad_records, cusps, manifest })
}

impl RunOutput {
    /// Writes the CSV files and the manifest into `dir`, creating it.
    pub fn write(&self, dir: &Path, digits: usize) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("cannot create {}", dir.display()), e))?;
        let mut written = Vec::new();
        let path = dir.join(TRAJECTORY_FILE);
        write_trajectory_file(&path, &self.records, digits)?;
        written.push(path);
        if let Some(l) = &self.lindblad_records {
            let path = dir.join(LINDBLAD_TRAJECTORY_FILE);
            write_trajectory_file(&path, l, digits)?;
            written.push(path);
        }
        let path = dir.join(MANIFEST_FILE);
        write_json(&path, &self.manifest)?;
        written.push(path);
        Ok(written)
    }
}

/// Runs `cfg` and writes its outputs to `out`, or to `cfg.output.path`.
pub fn simulate(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<(RunOutput, PathBuf)> {
    let mut cfg = cfg.clone();
    if let Some(dir) = out {
        cfg.output.path = dir.to_path_buf();
    }
    let result = run_quench(&cfg)?;
    result.write(&cfg.output.path, cfg.output.precision)?;
    Ok((result, cfg.output.path))
}
