//! Parameter sweeps, work-series tables and figure bundles.
//!
//! All tables are written with [`format_number`] so identical inputs give
//! byte-identical CSV bodies. Sweep points run on the ambient rayon pool and
//! are collected in grid order.

use std::collections::BTreeMap;
use std::fmt;
use std::io;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::analytics::{self, classify_branch, max_work, work_coefficients, Branch};
use crate::charging::{Battery, PropagationMode};
use crate::error::{Error, Result};
use crate::{format_number, ChargingSpec, SpinParams};

pub const WORK_HEADER: [&str; 5] = ["t", "W_closed", "W_oracle", "mode", "omega"];

pub const SWEEP_HEADER: [&str; 13] = [
    "axis", "value", "J", "Jz", "gamma", "B", "omega", "branch", "w_max", "w_m", "a", "b", "x",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Axis {
    J,
    Jz,
    Gamma,
    B,
    Omega,
}

impl Axis {
    pub fn as_str(&self) -> &'static str {
        match self {
            Axis::J => "J",
            Axis::Jz => "Jz",
            Axis::Gamma => "gamma",
            Axis::B => "B",
            Axis::Omega => "omega",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "J" => Ok(Axis::J),
            "Jz" => Ok(Axis::Jz),
            "gamma" => Ok(Axis::Gamma),
            "B" => Ok(Axis::B),
            "omega" => Ok(Axis::Omega),
            other => Err(Error::invalid(format!(
                "unknown sweep axis `{other}` (expected J, Jz, gamma, B or omega)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// Maximum of the closed-form work.
    WMaxPrinted,
    /// Closed-form coefficients only.
    Coefficients,
    /// Peak of the numerically propagated work over one period.
    WSeriesPeakOracle,
}

impl Quantity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Quantity::WMaxPrinted => "w_max_printed",
            Quantity::Coefficients => "coefficients",
            Quantity::WSeriesPeakOracle => "w_series_peak_oracle",
        }
    }
}

impl FromStr for Quantity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "w_max_printed" => Ok(Quantity::WMaxPrinted),
            "coefficients" => Ok(Quantity::Coefficients),
            "w_series_peak_oracle" => Ok(Quantity::WSeriesPeakOracle),
            other => Err(Error::invalid(format!(
                "unknown quantity `{other}` (expected w_max_printed, coefficients or w_series_peak_oracle)"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub axis: Axis,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
    pub params: SpinParams,
    pub charging: ChargingSpec,
    pub quantity: Quantity,
    /// Grid points per period for the oracle peak search.
    pub samples: usize,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.stop.is_finite()) || self.start >= self.stop {
            return Err(Error::invalid("sweep requires finite start < stop"));
        }
        if self.steps < 2 {
            return Err(Error::invalid("sweep requires at least 2 steps"));
        }
        if self.samples < 2 {
            return Err(Error::invalid("samples must be at least 2"));
        }
        if self.quantity != Quantity::WSeriesPeakOracle && self.params.beta() != 1.0 {
            return Err(Error::UnsupportedClosedForm {
                beta: self.params.beta(),
            });
        }
        Ok(())
    }

    /// Uniform grid from `start` to `stop` inclusive.
    pub fn grid(&self) -> Vec<f64> {
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| {
                if i + 1 == self.steps {
                    self.stop
                } else {
                    self.start + (self.stop - self.start) * i as f64 / last
                }
            })
            .collect()
    }

    fn point(&self, value: f64) -> Result<(SpinParams, ChargingSpec)> {
        let p = self.params;
        let c = self.charging;
        Ok(match self.axis {
            Axis::J => (p.set_j(value)?, c),
            Axis::Jz => (p.set_jz(value)?, c),
            Axis::Gamma => (p.set_gamma(value)?, c),
            Axis::B => (p.set_field(value)?, c),
            Axis::Omega => (p, ChargingSpec::new(value, c.mode())?),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis: Axis,
    pub value: f64,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "Jz")]
    pub jz: f64,
    pub gamma: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub omega: f64,
    pub branch: Option<Branch>,
    pub w_max: Option<f64>,
    pub w_m: Option<f64>,
    pub a: Option<f64>,
    #[serde(rename = "b")]
    pub b_coef: Option<f64>,
    pub x: Option<f64>,
}

/// Evaluates one sweep point. Closed-form columns are filled whenever
/// `beta = 1`; `w_max` holds the quantity selected by the spec.
pub fn evaluate_point(spec: &SweepSpec, value: f64) -> Result<SweepRow> {
    let (p, charging) = spec.point(value)?;
    let coeffs = if p.beta() == 1.0 {
        Some(work_coefficients(&p)?)
    } else {
        None
    };
    let branch = coeffs.as_ref().map(classify_branch);
    let extrema = coeffs
        .as_ref()
        .and_then(|c| max_work(c, charging.omega()).ok());

    let (w_max, w_m) = match spec.quantity {
        Quantity::WMaxPrinted => (
            extrema.as_ref().map(|e| e.w_max),
            extrema.as_ref().and_then(|e| e.w_m),
        ),
        Quantity::Coefficients => (None, None),
        Quantity::WSeriesPeakOracle => (Some(oracle_peak(&p, &charging, spec.samples)?), None),
    };

    Ok(SweepRow {
        axis: spec.axis,
        value,
        j: p.j(),
        jz: p.jz(),
        gamma: p.gamma(),
        b: p.field(),
        omega: charging.omega(),
        branch,
        w_max,
        w_m,
        a: coeffs.map(|c| c.a),
        b_coef: coeffs.map(|c| c.b),
        x: coeffs.and_then(|c| c.x),
    })
}

/// Largest propagated stored work over one charging period.
pub fn oracle_peak(p: &SpinParams, charging: &ChargingSpec, samples: usize) -> Result<f64> {
    let battery = Battery::new(*p)?;
    // Surface propagation errors before the search swallows them.
    battery.stored_work(charging, 0.0)?;
    let (_, peak) = analytics::grid_search(
        |t| battery.stored_work(charging, t).unwrap_or(f64::NEG_INFINITY),
        0.0,
        charging.period(),
        samples,
        analytics::Extremum::Max,
    );
    Ok(peak)
}

pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    spec.grid()
        .into_par_iter()
        .map(|v| evaluate_point(spec, v))
        .collect()
}

fn opt_num(v: Option<f64>) -> String {
    v.map(format_number).unwrap_or_default()
}

pub fn write_sweep_csv<W: io::Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        w.write_record([
            r.axis.to_string(),
            format_number(r.value),
            format_number(r.j),
            format_number(r.jz),
            format_number(r.gamma),
            format_number(r.b),
            format_number(r.omega),
            r.branch.map(|b| b.to_string()).unwrap_or_default(),
            opt_num(r.w_max),
            opt_num(r.w_m),
            opt_num(r.a),
            opt_num(r.b_coef),
            opt_num(r.x),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WorkRow {
    pub t: f64,
    /// Closed form; absent unless `beta = 1`.
    #[serde(rename = "W_closed")]
    pub w_closed: Option<f64>,
    #[serde(rename = "W_oracle")]
    pub w_oracle: f64,
    pub mode: PropagationMode,
    pub omega: f64,
}

pub fn work_rows(p: &SpinParams, charging: &ChargingSpec, t_max: f64, n: usize) -> Result<Vec<WorkRow>> {
    let series = Battery::new(*p)?.work_series(charging, t_max, n)?;
    let coeffs = if p.beta() == 1.0 {
        Some(work_coefficients(p)?)
    } else {
        None
    };
    Ok(series
        .times
        .iter()
        .zip(&series.values)
        .map(|(&t, &w)| WorkRow {
            t,
            w_closed: coeffs
                .as_ref()
                .map(|c| analytics::closed_form_work(c, charging.omega(), t)),
            w_oracle: w,
            mode: charging.mode(),
            omega: charging.omega(),
        })
        .collect())
}

pub fn write_work_csv<W: io::Write>(rows: &[WorkRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(WORK_HEADER)?;
    for r in rows {
        w.write_record([
            format_number(r.t),
            opt_num(r.w_closed),
            format_number(r.w_oracle),
            r.mode.to_string(),
            format_number(r.omega),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn to_csv_string(write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<String> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

/// Inputs for figure regeneration. Unset physical parameters are only
/// filled in for figure 1, whose parameters are published.
#[derive(Clone, Debug, Default)]
pub struct FigureRequest {
    pub id: u8,
    pub j: Option<f64>,
    pub jz: Option<f64>,
    pub gamma: Option<f64>,
    pub b: Option<f64>,
    pub omega: Option<f64>,
    pub mode: PropagationMode,
    pub t_max: Option<f64>,
    pub samples: Option<usize>,
    pub b_values: Option<Vec<f64>>,
    pub b_start: Option<f64>,
    pub b_stop: Option<f64>,
    pub b_steps: Option<usize>,
    pub gamma_start: Option<f64>,
    pub gamma_stop: Option<f64>,
    pub gamma_steps: Option<usize>,
}

pub const FIGURE1_PARAMS: (f64, f64, f64, f64) = (0.2, 0.2, 0.5, 1.0);
pub const FIGURE1_OMEGAS: [f64; 3] = [1.0, 0.7, 0.3];
const FIGURE_SERIES_SAMPLES: usize = 2001;
const FIGURE_GRID_STEPS: usize = 41;

#[derive(Clone, Debug, Serialize)]
pub struct Curve {
    pub file: String,
    pub label: String,
    #[serde(skip)]
    pub csv: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct FigureBundle {
    pub figure: u8,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub curves: Vec<Curve>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    #[serde(flatten)]
    bundle: &'a FigureBundle,
    tool_version: &'a str,
    timestamp_unix: u64,
}

impl FigureBundle {
    /// Manifest listing parameters and files; the only output carrying a timestamp.
    pub fn manifest_json(&self, timestamp_unix: u64) -> Result<String> {
        let m = Manifest {
            bundle: self,
            tool_version: env!("CARGO_PKG_VERSION"),
            timestamp_unix,
        };
        Ok(serde_json::to_string_pretty(&m)?)
    }
}

fn require<T: Copy>(missing: &mut Vec<String>, value: Option<T>, flag: &str) -> Option<T> {
    if value.is_none() {
        missing.push(flag.to_string());
    }
    value
}

fn label(x: f64) -> String {
    format!("{x}")
}

pub fn build_figure(req: &FigureRequest) -> Result<FigureBundle> {
    match req.id {
        1 => figure1(req),
        3 => figure3(req),
        4 => figure4(req),
        5 => figure5(req),
        other => Err(Error::invalid(format!(
            "unknown figure {other} (expected 1, 3, 4 or 5)"
        ))),
    }
}

fn series_samples(req: &FigureRequest) -> Result<usize> {
    let n = req.samples.unwrap_or(FIGURE_SERIES_SAMPLES);
    if n < 2 {
        return Err(Error::invalid("samples must be at least 2"));
    }
    Ok(n)
}

fn figure1(req: &FigureRequest) -> Result<FigureBundle> {
    let (j0, jz0, g0, b0) = FIGURE1_PARAMS;
    let p = SpinParams::new(
        req.j.unwrap_or(j0),
        req.jz.unwrap_or(jz0),
        req.gamma.unwrap_or(g0),
        req.b.unwrap_or(b0),
    )?;
    let omegas: Vec<f64> = match req.omega {
        Some(w) => vec![w],
        None => FIGURE1_OMEGAS.to_vec(),
    };
    let slowest = omegas.iter().cloned().fold(f64::INFINITY, f64::min);
    let t_max = req.t_max.unwrap_or(std::f64::consts::TAU / slowest);
    let n = series_samples(req)?;

    let mut curves = Vec::new();
    for &omega in &omegas {
        let spec = ChargingSpec::new(omega, req.mode)?;
        let rows = work_rows(&p, &spec, t_max, n)?;
        curves.push(Curve {
            file: format!("fig1_omega_{}.csv", label(omega)),
            label: format!("omega = {}", label(omega)),
            csv: to_csv_string(|buf| write_work_csv(&rows, buf))?,
        });
    }
    let mut parameters = params_map(&p);
    parameters.insert("omega".into(), serde_json::json!(omegas));
    parameters.insert("t_max".into(), serde_json::json!(t_max));
    parameters.insert("samples".into(), serde_json::json!(n));
    parameters.insert("mode".into(), serde_json::json!(req.mode.as_str()));
    Ok(FigureBundle {
        figure: 1,
        parameters,
        curves,
    })
}

fn params_map(p: &SpinParams) -> BTreeMap<String, serde_json::Value> {
    let mut m = BTreeMap::new();
    m.insert("J".into(), serde_json::json!(p.j()));
    m.insert("Jz".into(), serde_json::json!(p.jz()));
    m.insert("gamma".into(), serde_json::json!(p.gamma()));
    m.insert("B".into(), serde_json::json!(p.field()));
    m.insert("beta".into(), serde_json::json!(p.beta()));
    m
}

fn figure3(req: &FigureRequest) -> Result<FigureBundle> {
    let mut missing = Vec::new();
    let j = require(&mut missing, req.j, "--J");
    let jz = require(&mut missing, req.jz, "--Jz");
    let gamma = require(&mut missing, req.gamma, "--gamma");
    let omega = require(&mut missing, req.omega, "--omega");
    if req.b_values.as_ref().is_none_or(|v| v.is_empty()) {
        missing.push("--B-values".into());
    }
    if !missing.is_empty() {
        return Err(Error::MissingParameters(missing));
    }
    let (j, jz, gamma, omega) = (j.unwrap(), jz.unwrap(), gamma.unwrap(), omega.unwrap());
    let spec = ChargingSpec::new(omega, req.mode)?;
    let t_max = req.t_max.unwrap_or(spec.period());
    let n = series_samples(req)?;
    let b_values = req.b_values.clone().unwrap_or_default();

    let mut curves = Vec::new();
    for &b in &b_values {
        let p = SpinParams::new(j, jz, gamma, b)?;
        let rows = work_rows(&p, &spec, t_max, n)?;
        curves.push(Curve {
            file: format!("fig3_B_{}.csv", label(b)),
            label: format!("B = {}", label(b)),
            csv: to_csv_string(|buf| write_work_csv(&rows, buf))?,
        });
    }
    let mut parameters = BTreeMap::new();
    parameters.insert("J".into(), serde_json::json!(j));
    parameters.insert("Jz".into(), serde_json::json!(jz));
    parameters.insert("gamma".into(), serde_json::json!(gamma));
    parameters.insert("B".into(), serde_json::json!(b_values));
    parameters.insert("omega".into(), serde_json::json!(omega));
    parameters.insert("t_max".into(), serde_json::json!(t_max));
    parameters.insert("samples".into(), serde_json::json!(n));
    parameters.insert("mode".into(), serde_json::json!(req.mode.as_str()));
    Ok(FigureBundle {
        figure: 3,
        parameters,
        curves,
    })
}

fn figure4(req: &FigureRequest) -> Result<FigureBundle> {
    let mut missing = Vec::new();
    let j = require(&mut missing, req.j, "--J");
    let jz = require(&mut missing, req.jz, "--Jz");
    if req.b_values.as_ref().is_none_or(|v| v.is_empty()) {
        missing.push("--B-values".into());
    }
    if !missing.is_empty() {
        return Err(Error::MissingParameters(missing));
    }
    let (j, jz) = (j.unwrap(), jz.unwrap());
    let omega = req.omega.unwrap_or(1.0);
    let b_values = req.b_values.clone().unwrap_or_default();
    let (start, stop) = (req.gamma_start.unwrap_or(-1.0), req.gamma_stop.unwrap_or(1.0));
    let steps = req.gamma_steps.unwrap_or(FIGURE_GRID_STEPS);

    let mut curves = Vec::new();
    for &b in &b_values {
        let spec = SweepSpec {
            axis: Axis::Gamma,
            start,
            stop,
            steps,
            params: SpinParams::new(j, jz, start, b)?,
            charging: ChargingSpec::new(omega, req.mode)?,
            quantity: Quantity::WMaxPrinted,
            samples: FIGURE_SERIES_SAMPLES,
        };
        let rows = run_sweep(&spec)?;
        curves.push(Curve {
            file: format!("fig4_B_{}.csv", label(b)),
            label: format!("B = {}", label(b)),
            csv: to_csv_string(|buf| write_sweep_csv(&rows, buf))?,
        });
    }
    let mut parameters = BTreeMap::new();
    parameters.insert("J".into(), serde_json::json!(j));
    parameters.insert("Jz".into(), serde_json::json!(jz));
    parameters.insert("B".into(), serde_json::json!(b_values));
    parameters.insert("omega".into(), serde_json::json!(omega));
    parameters.insert("gamma_start".into(), serde_json::json!(start));
    parameters.insert("gamma_stop".into(), serde_json::json!(stop));
    parameters.insert("gamma_steps".into(), serde_json::json!(steps));
    Ok(FigureBundle {
        figure: 4,
        parameters,
        curves,
    })
}

fn figure5(req: &FigureRequest) -> Result<FigureBundle> {
    let mut missing = Vec::new();
    let j = require(&mut missing, req.j, "--J");
    let jz = require(&mut missing, req.jz, "--Jz");
    let gamma = require(&mut missing, req.gamma, "--gamma");
    let start = require(&mut missing, req.b_start, "--B-start");
    let stop = require(&mut missing, req.b_stop, "--B-stop");
    if !missing.is_empty() {
        return Err(Error::MissingParameters(missing));
    }
    let (start, stop) = (start.unwrap(), stop.unwrap());
    let omega = req.omega.unwrap_or(1.0);
    let steps = req.b_steps.unwrap_or(FIGURE_GRID_STEPS);
    let spec = SweepSpec {
        axis: Axis::B,
        start,
        stop,
        steps,
        params: SpinParams::new(j.unwrap(), jz.unwrap(), gamma.unwrap(), start)?,
        charging: ChargingSpec::new(omega, req.mode)?,
        quantity: Quantity::WMaxPrinted,
        samples: FIGURE_SERIES_SAMPLES,
    };
    let rows = run_sweep(&spec)?;
    let mut parameters = params_map(&spec.params);
    parameters.remove("B");
    parameters.insert("omega".into(), serde_json::json!(omega));
    parameters.insert("B_start".into(), serde_json::json!(start));
    parameters.insert("B_stop".into(), serde_json::json!(stop));
    parameters.insert("B_steps".into(), serde_json::json!(steps));
    Ok(FigureBundle {
        figure: 5,
        parameters,
        curves: vec![Curve {
            file: "fig5.csv".into(),
            label: "w_max vs B".into(),
            csv: to_csv_string(|buf| write_sweep_csv(&rows, buf))?,
        }],
    })
}
