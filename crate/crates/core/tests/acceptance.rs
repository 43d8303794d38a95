//! Acceptance suite. Run with `cargo test --test acceptance`.
//!
//! Prints one `[PASS]`/`[FAIL]` line per criterion and exits nonzero if any
//! criterion fails.

use std::f64::consts::{PI, TAU};
use std::path::Path;
use std::process::{Command, ExitCode};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use xyz_battery::analytics::{
    classify_branch, closed_form_work, consistency_report, grid_search, harmonic_fit, max_work,
    plateau_gap, work_coefficients,
};
use xyz_battery::charging::{ergotropy, propagator, work_series};
use xyz_battery::linalg::{exp_series, hermitian_eig, imag_unit, unitary_exp};
use xyz_battery::model::{build_total_hamiltonian, closed_form_spectrum, gibbs_state};
use xyz_battery::{
    Battery, Branch, ChargingSpec, ConsistencyReport, DensityMatrix, Extremum, GibbsMethod,
    Matrix4, PropagationMode, SpinParams,
};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: String) -> Outcome {
    if cond {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn fig1() -> SpinParams {
    SpinParams::new(0.2, 0.2, 0.5, 1.0).unwrap()
}

fn draw(rng: &mut ChaCha8Rng) -> SpinParams {
    SpinParams::new(
        rng.gen_range(-2.0..=2.0),
        rng.gen_range(-2.0..=2.0),
        rng.gen_range(-1.0..=1.0),
        rng.gen_range(-5.0..=5.0),
    )
    .unwrap()
}

fn ac1() -> Outcome {
    let c = work_coefficients(&fig1()).map_err(|e| e.to_string())?;
    let (t, w) = grid_search(|t| closed_form_work(&c, 1.0, t), 0.0, TAU, 4001, Extremum::Max);
    check(
        (w - 3.369).abs() <= 1e-3 && (t - PI).abs() <= 1e-6,
        format!("max W_closed = {w:.6} at ωt = {t:.9}"),
    )
}

fn ac2() -> Outcome {
    let c = work_coefficients(&fig1()).map_err(|e| e.to_string())?;
    let ratio = (c.a / (4.0 * c.b)).abs();
    let branch = classify_branch(&c);
    check(
        (ratio - 1.489).abs() <= 1e-3 && branch == Branch::Max1,
        format!("|a/4b| = {ratio:.6}, branch {branch}"),
    )
}

fn ac3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst_e, mut worst_r) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let p = draw(&mut rng);
        let h = build_total_hamiltonian(&p);
        let spec = closed_form_spectrum(&p);
        let mut closed = spec.energies;
        closed.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let numeric = hermitian_eig(&h).map_err(|e| e.to_string())?.values;
        for (x, y) in closed.iter().zip(numeric.iter()) {
            worst_e = worst_e.max((x - y).abs());
        }
        worst_r = worst_r.max(spec.max_residual(&h));
    }
    check(
        worst_e < 1e-10 && worst_r < 1e-10,
        format!("1000 draws: max eigenvalue diff {worst_e:.2e}, max residual {worst_r:.2e}"),
    )
}

fn ac4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst, mut worst_comm) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let p = draw(&mut rng);
        let closed = gibbs_state(&p, GibbsMethod::ClosedForm).map_err(|e| e.to_string())?;
        let oracle = gibbs_state(&p, GibbsMethod::Oracle).map_err(|e| e.to_string())?;
        worst = worst.max(closed.matrix().max_abs_diff(oracle.matrix()));
        let h = build_total_hamiltonian(&p);
        worst_comm = worst_comm.max(closed.matrix().commutator(&h).max_abs());
    }
    check(
        worst < 1e-12 && worst_comm < 1e-12,
        format!("1000 draws: max |ρ_closed - ρ_oracle| {worst:.2e}, max |[ρ,H]| {worst_comm:.2e}"),
    )
}

fn ac5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut worst_gibbs, mut worst_diff) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let p = draw(&mut rng);
        let omega = rng.gen_range(0.1..=3.0);
        let spec = ChargingSpec::charging_only(omega).unwrap();
        let battery = Battery::new(p).map_err(|e| e.to_string())?;
        let h = battery.hamiltonian();
        worst_gibbs = worst_gibbs.max(ergotropy(battery.initial_state(), h).map_err(|e| e.to_string())?);
        for _ in 0..100 {
            let t = rng.gen_range(0.0..=2.0 * spec.period());
            let rho = battery.state_at(&spec, t).map_err(|e| e.to_string())?;
            let erg = ergotropy(&rho, h).map_err(|e| e.to_string())?;
            let w = battery.stored_work(&spec, t).map_err(|e| e.to_string())?;
            worst_diff = worst_diff.max((erg - w).abs());
        }
    }
    check(
        worst_gibbs < 1e-12 && worst_diff < 1e-10,
        format!("max ergotropy(Gibbs) {worst_gibbs:.2e}, max |ergotropy - W| {worst_diff:.2e}"),
    )
}

fn ac6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let p = draw(&mut rng);
        let omega = rng.gen_range(0.1..=3.0);
        let spec = ChargingSpec::charging_only(omega).unwrap();
        let series = work_series(&p, &spec, spec.period(), 257).map_err(|e| e.to_string())?;
        let fit = harmonic_fit(&series).map_err(|e| e.to_string())?;
        worst = worst.max(fit.residual);
    }
    let mut worst_alpha1 = 0.0f64;
    for _ in 0..20 {
        let p = draw(&mut rng).set_field(0.0).unwrap();
        let spec = ChargingSpec::charging_only(1.0).unwrap();
        let series = work_series(&p, &spec, spec.period(), 257).map_err(|e| e.to_string())?;
        let fit = harmonic_fit(&series).map_err(|e| e.to_string())?;
        worst_alpha1 = worst_alpha1.max(fit.alpha1.abs());
    }
    check(
        worst < 1e-9 && worst_alpha1 < 1e-10,
        format!("100 draws: max fit residual {worst:.2e}; B = 0: max |α1| {worst_alpha1:.2e}"),
    )
}

fn ac7() -> Outcome {
    let p = fig1();
    let omega = 1.0;
    let t = PI / omega;
    let spec = ChargingSpec::charging_only(omega).unwrap();
    let h = build_total_hamiltonian(&p);
    let hc = xyz_battery::charging::build_charging_hamiltonian(&spec);
    let rho0 = gibbs_state(&p, GibbsMethod::Oracle).map_err(|e| e.to_string())?;
    let work = |u: &Matrix4| {
        let rho = DensityMatrix::new(*u * *rho0.matrix() * u.adjoint()).unwrap();
        rho.expectation(&h) - rho0.expectation(&h)
    };
    let u_spectral = unitary_exp(&hc, t).map_err(|e| e.to_string())?;
    let u_series = exp_series(&hc.scale_complex(-imag_unit::<f64>() * t));
    let w_spectral = work(&u_spectral);
    let w_series = work(&u_series);
    let w_factored = work(&propagator(&p, &spec, t).map_err(|e| e.to_string())?);
    let eta = p.eta();
    let d = eta * ((0.2f64).exp() * (0.2f64).cosh() + eta.cosh());
    let expected = 2.0 * eta.sinh() / d;
    let ok = [w_spectral, w_series, w_factored]
        .iter()
        .all(|w| (w - 0.8423).abs() <= 5e-4 && (w - expected).abs() < 1e-10);
    check(
        ok,
        format!(
            "W(π/ω): spectral {w_spectral:.10}, series {w_series:.10}, factored {w_factored:.10}, 2B²sinh η/d = {expected:.10}"
        ),
    )
}

fn ac8() -> Outcome {
    let report = consistency_report(&fig1(), 1.0).map_err(|e| e.to_string())?;
    let csv = report.to_csv_string().map_err(|e| e.to_string())?;
    let back = ConsistencyReport::read_csv(csv.as_bytes()).map_err(|e| e.to_string())?;
    let again = back.to_csv_string().map_err(|e| e.to_string())?;
    let row = report
        .row(PropagationMode::ChargingOnly)
        .ok_or("no charging-only row")?;
    let ratio = row.ratio_a.map_or("n/a".to_string(), |r| format!("{r:.6}"));
    check(
        back == report && again == csv,
        format!(
            "report round-trips; printed/fitted ω-amplitude ratio (charging-only) = {ratio}"
        ),
    )
}

fn ac9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut found, mut tries) = (0, 0);
    let (mut e_max, mut e_min, mut e_gap) = (0.0f64, 0.0f64, 0.0f64);
    while found < 100 {
        tries += 1;
        if tries > 1_000_000 {
            return Err(format!("only {found} max2 draws found"));
        }
        let p = draw(&mut rng);
        let c = match work_coefficients(&p) {
            Ok(c) => c,
            Err(_) => continue,
        };
        if classify_branch(&c) != Branch::Max2 || c.a < 0.0 {
            continue;
        }
        found += 1;
        let omega = rng.gen_range(0.1..=3.0);
        let ext = max_work(&c, omega).map_err(|e| e.to_string())?;
        let w = |t: f64| closed_form_work(&c, omega, t);
        let period = TAU / omega;
        let (_, grid_max) = grid_search(w, 0.0, period, 4001, Extremum::Max);
        let (t1, t2) = (ext.peak_times[0], ext.peak_times[1]);
        let (_, grid_min) = grid_search(w, t1, t2, 4001, Extremum::Min);
        let expected_max = 2.0 * c.b + c.a + c.a * c.a / (8.0 * c.b);
        e_max = e_max.max((grid_max - expected_max).abs());
        e_min = e_min.max((grid_min - 2.0 * c.a).abs());
        let gap = plateau_gap(&c).ok_or("no plateau gap in max2")?;
        e_gap = e_gap.max((ext.w_max - ext.w_m.unwrap() - gap).abs());
    }
    check(
        e_max < 1e-8 && e_min < 1e-8 && e_gap < 1e-10,
        format!(
            "100 max2 draws ({tries} tries): max err w_max {e_max:.2e}, w_m {e_min:.2e}, gap {e_gap:.2e}"
        ),
    )
}

fn ac10() -> Outcome {
    let mut values = Vec::new();
    for b in [10.0, 20.0, 30.0, 40.0, 50.0] {
        let c = work_coefficients(&fig1().set_field(b).unwrap()).map_err(|e| e.to_string())?;
        values.push(2.0 * c.a);
    }
    let ratio = values[4] / (8.0 * 50.0);
    let increasing = values.windows(2).all(|w| w[1] > w[0]);
    check(
        (0.99..=1.01).contains(&ratio) && increasing,
        format!("2a/8B at B = 50 is {ratio:.6}; strictly increasing: {increasing}"),
    )
}

fn ac11() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    let mut zero_ok = true;
    for _ in 0..20 {
        let p = draw(&mut rng);
        let omega = rng.gen_range(0.1..=3.0);
        let spec = ChargingSpec::charging_only(omega).unwrap();
        let battery = Battery::new(p).map_err(|e| e.to_string())?;
        let c = work_coefficients(&p).map_err(|e| e.to_string())?;
        zero_ok &= closed_form_work(&c, omega, 0.0) == 0.0;
        zero_ok &= battery.stored_work(&spec, 0.0).map_err(|e| e.to_string())? == 0.0;
        for _ in 0..20 {
            let t = rng.gen_range(0.0..=spec.period());
            let t2 = t + spec.period();
            let dc = (closed_form_work(&c, omega, t) - closed_form_work(&c, omega, t2)).abs();
            let w1 = battery.stored_work(&spec, t).map_err(|e| e.to_string())?;
            let w2 = battery.stored_work(&spec, t2).map_err(|e| e.to_string())?;
            worst = worst.max(dc).max((w1 - w2).abs());
        }
    }
    check(
        zero_ok && worst < 1e-10,
        format!("W(0) exactly zero on both paths: {zero_ok}; max periodicity error {worst:.2e}"),
    )
}

fn run_cli(args: &[&str]) -> std::io::Result<std::process::Output> {
    Command::new(env!("CARGO_BIN_EXE_xyz-battery")).args(args).output()
}

fn read_csvs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn ac12() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let first = tmp.path().join("first");
    let second = tmp.path().join("second");
    let mut codes = Vec::new();
    for dir in [&first, &second] {
        let out = run_cli(&["figure", "1", "--out", dir.to_str().unwrap()]).map_err(|e| e.to_string())?;
        codes.push(("figure 1", out.status.code(), 0));
    }
    let a = read_csvs(&first);
    let b = read_csvs(&second);
    let identical = a.len() == 3 && a == b;

    let fig = ["--J", "0.2", "--Jz", "0.2", "--gamma", "0.5"];
    let cases: [(&str, Vec<&str>, i32); 4] = [
        ("non-numeric flag", [&["spectrum"][..], &fig, &["--B", "abc"]].concat(), 2),
        (
            "steps = 1",
            [&["sweep"][..], &fig, &["--B", "1", "--axis", "B", "--start", "1", "--stop", "2", "--steps", "1"]].concat(),
            2,
        ),
        ("figure 3 without parameters", vec!["figure", "3"], 2),
        (
            "unwritable output",
            [&["work"][..], &fig, &["--B", "1", "--out", "/nonexistent-dir/x/w.csv"]].concat(),
            1,
        ),
    ];
    for (name, args, expected) in cases {
        let out = run_cli(&args).map_err(|e| e.to_string())?;
        codes.push((name, out.status.code(), expected));
    }
    let bad: Vec<String> = codes
        .iter()
        .filter(|(_, got, want)| *got != Some(*want))
        .map(|(name, got, want)| format!("{name}: got {got:?}, want {want}"))
        .collect();
    check(
        identical && bad.is_empty(),
        format!(
            "figure 1 CSVs byte-identical across runs: {identical}; exit codes {}",
            if bad.is_empty() { "0/1/2 as expected".to_string() } else { bad.join("; ") }
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("AC1 peak value of the closed form", ac1),
        ("AC2 branch condition", ac2),
        ("AC3 spectrum equivalence", ac3),
        ("AC4 thermal-state equivalence", ac4),
        ("AC5 passivity and ergotropy", ac5),
        ("AC6 harmonic structure", ac6),
        ("AC7 oracle spot value", ac7),
        ("AC8 reconciliation report", ac8),
        ("AC9 extrema algebra", ac9),
        ("AC10 large-field linearity", ac10),
        ("AC11 periodicity and zero", ac11),
        ("AC12 CLI determinism and exit codes", ac12),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        match f() {
            Ok(msg) => println!("[PASS] {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("[FAIL] {name}: {msg}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
