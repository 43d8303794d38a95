use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use xyz_battery::analytics::{
    classify_branch, consistency_report, large_b_asymptote, max_work, printed_delta_t, work_coefficients,
};
use xyz_battery::linalg::hermitian_eig;
use xyz_battery::model::{
    build_total_hamiltonian, closed_form_spectrum, gibbs_state, thermal_elements,
};
use xyz_battery::sweep::{self, Axis, FigureRequest, Quantity, SweepSpec};
use xyz_battery::{
    format_number, ChargingSpec, Error, GibbsMethod, PropagationMode, Result, SpinParams,
};

#[derive(Parser)]
#[command(name = "xyz-battery", version, about = "Two-spin Heisenberg XYZ quantum battery simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form eigenvalues and eigenvectors with numerical residuals.
    Spectrum(CommonArgs),
    /// Gibbs state elements, closed form against the spectral oracle.
    Gibbs(CommonArgs),
    /// Stored work series: closed form and propagated.
    Work(CommonArgs),
    /// Closed-form work coefficients a, b, b1, b2, b3, d and x = a/(4b).
    Coeffs(CommonArgs),
    /// Maximum-work branch, peak values and peak times.
    Maxwork(CommonArgs),
    /// Parameter sweep over one axis.
    Sweep(SweepArgs),
    /// Data for replotting a figure (1, 3, 4 or 5).
    Figure(FigureArgs),
    /// Closed form reconciled against harmonic fits of the propagated work.
    Report(CommonArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum ModeArg {
    ChargingOnly,
    Full,
}

impl From<ModeArg> for PropagationMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::ChargingOnly => PropagationMode::ChargingOnly,
            ModeArg::Full => PropagationMode::Full,
        }
    }
}

#[derive(Args, Clone, Debug, Default, Deserialize)]
struct CommonArgs {
    #[arg(long = "J", allow_hyphen_values = true)]
    #[serde(rename = "J")]
    j: Option<f64>,
    #[arg(long = "Jz", allow_hyphen_values = true)]
    #[serde(rename = "Jz")]
    jz: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<f64>,
    #[arg(long = "B", allow_hyphen_values = true)]
    #[serde(rename = "B")]
    b: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long = "t-max")]
    #[serde(rename = "t-max")]
    t_max: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Output file (directory for `figure`); stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// JSON file with defaults for any of these flags; flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Worker threads for sweeps (default: available cores).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args, Clone, Debug, Default, Deserialize)]
struct SweepFlags {
    /// J, Jz, gamma, B or omega.
    #[arg(long)]
    axis: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    start: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    stop: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    /// w_max_printed, coefficients or w_series_peak_oracle.
    #[arg(long)]
    quantity: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    sweep: SweepFlags,
}

#[derive(Args, Clone, Debug, Default, Deserialize)]
struct FigureFlags {
    /// Comma-separated field strengths (figures 3 and 4).
    #[arg(long = "B-values", value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(rename = "B-values")]
    b_values: Option<Vec<f64>>,
    #[arg(long = "B-start", allow_hyphen_values = true)]
    #[serde(rename = "B-start")]
    b_start: Option<f64>,
    #[arg(long = "B-stop", allow_hyphen_values = true)]
    #[serde(rename = "B-stop")]
    b_stop: Option<f64>,
    #[arg(long = "B-steps")]
    #[serde(rename = "B-steps")]
    b_steps: Option<usize>,
    #[arg(long = "gamma-start", allow_hyphen_values = true)]
    #[serde(rename = "gamma-start")]
    gamma_start: Option<f64>,
    #[arg(long = "gamma-stop", allow_hyphen_values = true)]
    #[serde(rename = "gamma-stop")]
    gamma_stop: Option<f64>,
    #[arg(long = "gamma-steps")]
    #[serde(rename = "gamma-steps")]
    gamma_steps: Option<usize>,
}

#[derive(Args)]
struct FigureArgs {
    /// Figure number: 1, 3, 4 or 5.
    id: u8,
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    figure: FigureFlags,
}

/// Every flag that may appear in a config file.
#[derive(Deserialize, Default)]
struct ConfigFile {
    #[serde(flatten)]
    common: CommonArgs,
    #[serde(flatten)]
    sweep: SweepFlags,
    #[serde(flatten)]
    figure: FigureFlags,
}

fn load_config(path: Option<&Path>) -> Result<ConfigFile> {
    match path {
        None => Ok(ConfigFile::default()),
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                Error::InvalidArgument(format!("cannot read config {}: {e}", path.display()))
            })?;
            Ok(serde_json::from_str(&text)?)
        }
    }
}

macro_rules! merge {
    ($flags:expr, $file:expr, [$($field:ident),*]) => {
        $( if $flags.$field.is_none() { $flags.$field = $file.$field.take(); } )*
    };
}

impl CommonArgs {
    fn merged(mut self, file: &mut ConfigFile) -> Self {
        let f = &mut file.common;
        merge!(self, f, [j, jz, gamma, b, beta, omega, t_max, samples, mode, out, format, jobs]);
        self
    }

    fn params(&self) -> Result<SpinParams> {
        let mut missing = Vec::new();
        for (flag, v) in [("--J", self.j), ("--Jz", self.jz), ("--gamma", self.gamma), ("--B", self.b)] {
            if v.is_none() {
                missing.push(flag.to_string());
            }
        }
        if !missing.is_empty() {
            return Err(Error::MissingParameters(missing));
        }
        SpinParams::with_beta(
            self.j.unwrap(),
            self.jz.unwrap(),
            self.gamma.unwrap(),
            self.b.unwrap(),
            self.beta.unwrap_or(1.0),
        )
    }

    fn mode(&self) -> PropagationMode {
        self.mode.map(Into::into).unwrap_or_default()
    }

    fn charging(&self) -> Result<ChargingSpec> {
        ChargingSpec::new(self.omega.unwrap_or(1.0), self.mode())
    }

    fn format(&self) -> Format {
        self.format.unwrap_or(Format::Csv)
    }
}

/// Writes to `--out` or stdout.
fn emit(out: Option<&Path>, body: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, body)?,
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(body.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn key_value_csv(rows: &[(String, String)]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["quantity", "value"])?;
    for (k, v) in rows {
        w.write_record([k, v])?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("utf-8"))
}

fn kv(k: impl Into<String>, v: f64) -> (String, String) {
    (k.into(), format_number(v))
}

fn render(args: &CommonArgs, rows: Vec<(String, String)>, json: impl Serialize) -> Result<()> {
    let body = match args.format() {
        Format::Csv => key_value_csv(&rows)?,
        Format::Json => serde_json::to_string_pretty(&json)? + "\n",
    };
    emit(args.out.as_deref(), &body)
}

fn cmd_spectrum(args: CommonArgs) -> Result<()> {
    let p = args.params()?;
    let spec = closed_form_spectrum(&p);
    let h = build_total_hamiltonian(&p);
    let numeric = hermitian_eig(&h)?.values;
    let mut closed = spec.energies;
    closed.sort_by(|a, b| a.total_cmp(b));
    let eig_diff = closed
        .iter()
        .zip(&numeric)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let residuals: Vec<f64> = (0..4).map(|k| spec.residual(&h, k)).collect();

    let mut rows = Vec::new();
    for (k, e) in spec.energies.iter().enumerate() {
        rows.push(kv(format!("E{}", k + 1), *e));
    }
    rows.push(kv("eta", spec.eta));
    rows.push(kv("N_plus", spec.n_plus));
    rows.push(kv("N_minus", spec.n_minus));
    for (k, r) in residuals.iter().enumerate() {
        rows.push(kv(format!("residual_psi{}", k + 1), *r));
    }
    for (k, e) in numeric.iter().enumerate() {
        rows.push(kv(format!("numeric_eigenvalue_{}", k + 1), *e));
    }
    rows.push(kv("max_eigenvalue_diff", eig_diff));

    let json = serde_json::json!({
        "energies": spec.energies,
        "eta": spec.eta,
        "N_plus": spec.n_plus,
        "N_minus": spec.n_minus,
        "eigenvectors": spec.states.iter().map(|s| s.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "residuals": residuals,
        "numeric_eigenvalues": numeric,
        "max_eigenvalue_diff": eig_diff,
    });
    render(&args, rows, json)
}

fn cmd_gibbs(args: CommonArgs) -> Result<()> {
    let p = args.params()?;
    let oracle = gibbs_state(&p, GibbsMethod::Oracle)?;
    let mut rows = Vec::new();
    let mut json = serde_json::Map::new();
    if p.beta() == 1.0 {
        let el = thermal_elements(&p)?;
        let closed = gibbs_state(&p, GibbsMethod::ClosedForm)?;
        let diff = closed.matrix().max_abs_diff(oracle.matrix());
        rows.extend([
            kv("mu_plus", el.mu_plus),
            kv("mu_minus", el.mu_minus),
            kv("kappa", el.kappa),
            kv("nu", el.nu),
            kv("epsilon", el.epsilon),
            kv("Z", el.partition),
            kv("closed_form_vs_oracle_max_diff", diff),
        ]);
        json.insert("elements".into(), serde_json::to_value(el)?);
        json.insert("closed_form_vs_oracle_max_diff".into(), diff.into());
    }
    let m = oracle.matrix();
    let mut entries = Vec::new();
    for r in 0..4 {
        let mut row = Vec::new();
        for c in 0..4 {
            rows.push(kv(format!("rho_{r}{c}_re"), m[(r, c)].re));
            rows.push(kv(format!("rho_{r}{c}_im"), m[(r, c)].im));
            row.push([m[(r, c)].re, m[(r, c)].im]);
        }
        entries.push(row);
    }
    json.insert("beta".into(), p.beta().into());
    json.insert("rho".into(), serde_json::to_value(entries)?);
    render(&args, rows, json)
}

const DEFAULT_SAMPLES: usize = 201;

fn cmd_work(args: CommonArgs) -> Result<()> {
    let p = args.params()?;
    let charging = args.charging()?;
    let t_max = args.t_max.unwrap_or(charging.period());
    let rows = sweep::work_rows(&p, &charging, t_max, args.samples.unwrap_or(DEFAULT_SAMPLES))?;
    let body = match args.format() {
        Format::Csv => {
            let mut buf = Vec::new();
            sweep::write_work_csv(&rows, &mut buf)?;
            String::from_utf8(buf).expect("utf-8")
        }
        Format::Json => serde_json::to_string_pretty(&rows)? + "\n",
    };
    emit(args.out.as_deref(), &body)
}

fn cmd_coeffs(args: CommonArgs) -> Result<()> {
    let p = args.params()?;
    let c = work_coefficients(&p)?;
    let branch = classify_branch(&c);
    let mut rows = vec![
        kv("a", c.a),
        kv("b", c.b),
        kv("b1", c.b1),
        kv("b2", c.b2),
        kv("b3", c.b3),
        kv("d", c.d),
    ];
    rows.push(("x".into(), c.x.map(format_number).unwrap_or_default()));
    rows.push(("branch".into(), branch.to_string()));
    let json = serde_json::json!({ "coefficients": c, "branch": branch });
    render(&args, rows, json)
}

fn cmd_maxwork(args: CommonArgs) -> Result<()> {
    let p = args.params()?;
    let omega = args.charging()?.omega();
    let c = work_coefficients(&p)?;
    let asymptote = large_b_asymptote(&p);
    match max_work(&c, omega) {
        Err(Error::FlatSignal) => {
            let rows = vec![("branch".to_string(), "flat".to_string())];
            render(&args, rows, serde_json::json!({ "branch": "flat" }))
        }
        Err(e) => Err(e),
        Ok(e) => {
            let mut rows = vec![("branch".to_string(), e.branch.to_string()), kv("w_max", e.w_max)];
            if let Some(w_m) = e.w_m {
                rows.push(kv("w_m", w_m));
            }
            for (k, t) in e.peak_times.iter().enumerate() {
                rows.push(kv(format!("peak_time_{}", k + 1), *t));
            }
            let printed = c.x.filter(|_| e.delta_phi.is_some()).map(|x| printed_delta_t(x, omega));
            if let (Some(dphi), Some(dt)) = (e.delta_phi, e.delta_t) {
                rows.push(kv("delta_phi", dphi));
                rows.push(kv("delta_t", dt));
            }
            if let Some(pd) = printed {
                rows.push(kv("delta_t_printed", pd));
            }
            rows.push(kv("large_B_asymptote", asymptote));
            let json = serde_json::json!({
                "extrema": e,
                "delta_t_printed": printed,
                "large_B_asymptote": asymptote,
            });
            render(&args, rows, json)
        }
    }
}

fn with_pool<R: Send>(jobs: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(Error::InvalidArgument("--jobs must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Io(io::Error::other(e)))?;
            Ok(pool.install(f))
        }
    }
}

fn cmd_sweep(args: SweepArgs, file: &mut ConfigFile) -> Result<()> {
    let common = args.common.merged(file);
    let mut flags = args.sweep;
    merge!(flags, file.sweep, [axis, start, stop, steps, quantity]);

    let mut missing = Vec::new();
    for (flag, present) in [
        ("--axis", flags.axis.is_some()),
        ("--start", flags.start.is_some()),
        ("--stop", flags.stop.is_some()),
        ("--steps", flags.steps.is_some()),
    ] {
        if !present {
            missing.push(flag.to_string());
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingParameters(missing));
    }
    let axis: Axis = flags.axis.as_deref().unwrap().parse()?;
    let quantity: Quantity = flags
        .quantity
        .as_deref()
        .unwrap_or("w_max_printed")
        .parse()?;
    let spec = SweepSpec {
        axis,
        start: flags.start.unwrap(),
        stop: flags.stop.unwrap(),
        steps: flags.steps.unwrap(),
        params: common.params()?,
        charging: common.charging()?,
        quantity,
        samples: common.samples.unwrap_or(2001),
    };
    let rows = with_pool(common.jobs, || sweep::run_sweep(&spec))??;
    let body = match common.format() {
        Format::Csv => {
            let mut buf = Vec::new();
            sweep::write_sweep_csv(&rows, &mut buf)?;
            String::from_utf8(buf).expect("utf-8")
        }
        Format::Json => serde_json::to_string_pretty(&rows)? + "\n",
    };
    emit(common.out.as_deref(), &body)
}

fn cmd_figure(args: FigureArgs, file: &mut ConfigFile) -> Result<()> {
    let common = args.common.merged(file);
    let mut flags = args.figure;
    merge!(flags, file.figure, [b_values, b_start, b_stop, b_steps, gamma_start, gamma_stop, gamma_steps]);
    if let Some(beta) = common.beta.filter(|&b| b != 1.0) {
        return Err(Error::UnsupportedClosedForm { beta });
    }
    let req = FigureRequest {
        id: args.id,
        j: common.j,
        jz: common.jz,
        gamma: common.gamma,
        b: common.b,
        omega: common.omega,
        mode: common.mode(),
        t_max: common.t_max,
        samples: common.samples,
        b_values: flags.b_values,
        b_start: flags.b_start,
        b_stop: flags.b_stop,
        b_steps: flags.b_steps,
        gamma_start: flags.gamma_start,
        gamma_stop: flags.gamma_stop,
        gamma_steps: flags.gamma_steps,
    };
    let bundle = with_pool(common.jobs, || sweep::build_figure(&req))??;
    let dir = common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("figure{}", args.id)));
    fs::create_dir_all(&dir)?;
    for curve in &bundle.curves {
        fs::write(dir.join(&curve.file), &curve.csv)?;
    }
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    fs::write(dir.join("manifest.json"), bundle.manifest_json(timestamp)? + "\n")?;
    eprintln!("wrote {} curve(s) to {}", bundle.curves.len(), dir.display());
    Ok(())
}

fn cmd_report(args: CommonArgs) -> Result<()> {
    let p = args.params()?;
    let report = consistency_report(&p, args.charging()?.omega())?;
    let body = match args.format() {
        Format::Csv => report.to_csv_string()?,
        Format::Json => serde_json::to_string_pretty(&report)? + "\n",
    };
    emit(args.out.as_deref(), &body)
}

fn run(cli: Cli) -> Result<()> {
    let config_path = match &cli.command {
        Command::Spectrum(a)
        | Command::Gibbs(a)
        | Command::Work(a)
        | Command::Coeffs(a)
        | Command::Maxwork(a)
        | Command::Report(a) => a.config.clone(),
        Command::Sweep(a) => a.common.config.clone(),
        Command::Figure(a) => a.common.config.clone(),
    };
    let mut file = load_config(config_path.as_deref())?;
    match cli.command {
        Command::Spectrum(a) => cmd_spectrum(a.merged(&mut file)),
        Command::Gibbs(a) => cmd_gibbs(a.merged(&mut file)),
        Command::Work(a) => cmd_work(a.merged(&mut file)),
        Command::Coeffs(a) => cmd_coeffs(a.merged(&mut file)),
        Command::Maxwork(a) => cmd_maxwork(a.merged(&mut file)),
        Command::Sweep(a) => cmd_sweep(a, &mut file),
        Command::Figure(a) => cmd_figure(a, &mut file),
        Command::Report(a) => cmd_report(a.merged(&mut file)),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
