//! CSV writers. Floats are printed in scientific notation with a fixed
//! number of significant digits so that identical runs give identical bytes.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use dqpt_core::bathrates::BathRates;
use dqpt_core::observables::ObservableRecord;
use dqpt_core::prep::Sign;

use crate::error::{CliError, Result};

pub const TRAJECTORY_HEADER: [&str; 13] = [
    "t_over_T",
    "gamma_t",
    "lambda_t",
    "rate_function",
    "rate_branch",
    "G_F_plus",
    "G_F_minus",
    "P_plus",
    "P_minus",
    "M_x",
    "J_expect",
    "trace_dev",
    "purity",
];

pub const RATES_HEADER: [&str; 6] = ["t_over_T", "gamma_t", "lambda_t", "gamma1_t", "big_gamma_t", "big_lambda_t"];

/// `x` with `digits` significant digits; `inf`, `-inf` and `nan` spelled out.
pub fn format_float(x: f64, digits: usize) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{:.*e}", digits.saturating_sub(1), x)
    }
}

pub fn format_sign(s: Sign) -> &'static str {
    match s {
        Sign::Plus => "+",
        Sign::Minus => "-",
    }
}

fn csv_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Output { path: path.to_path_buf(), reason: e.to_string() }
}

/// Writes one row per record; every record is checked first.
pub fn write_trajectory<W: Write>(w: W, records: &[ObservableRecord], digits: usize) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let err = |e: csv::Error| CliError::Run(format!("csv: {e}"));
    out.write_record(TRAJECTORY_HEADER).map_err(err)?;
    for r in records {
        r.check()?;
        let f = |x| format_float(x, digits);
        let rate = if r.rate_infinite { "inf".to_string() } else { f(r.rate_function) };
        out.write_record([
            f(r.t),
            f(r.gamma_t),
            f(r.lambda_t),
            rate,
            format_sign(r.rate_branch).to_string(),
            f(r.g_f_plus),
            f(r.g_f_minus),
            f(r.p_plus),
            f(r.p_minus),
            f(r.m_x),
            f(r.j_expect),
            f(r.trace_dev),
            f(r.purity),
        ])
        .map_err(err)?;
    }
    out.flush().map_err(|e| CliError::io("flushing csv", e))?;
    Ok(())
}

pub fn write_trajectory_file(path: &Path, records: &[ObservableRecord], digits: usize) -> Result<()> {
    let file = File::create(path).map_err(|e| csv_error(path, e))?;
    write_trajectory(file, records, digits)
}

/// Bath functions at `times` (units Ω⁻¹).
pub fn write_rates<W: Write>(w: W, rates: &BathRates, times: &[f64], digits: usize) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let err = |e: csv::Error| CliError::Run(format!("csv: {e}"));
    out.write_record(RATES_HEADER).map_err(err)?;
    let period = rates.period();
    for &t in times {
        let (gamma, lambda) = rates.generator_coefficients(t);
        let (big_gamma, big_lambda) = rates.influence_exponents(t);
        let f = |x| format_float(x, digits);
        out.write_record([f(t / period), f(gamma), f(lambda), f(rates.gamma1(t)), f(big_gamma), f(big_lambda)])
            .map_err(err)?;
    }
    out.flush().map_err(|e| CliError::io("flushing csv", e))?;
    Ok(())
}

pub fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| csv_error(path, e))?;
    std::fs::write(path, text + "\n").map_err(|e| csv_error(path, e))
}
