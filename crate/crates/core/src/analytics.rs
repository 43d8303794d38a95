//! Closed-form stored work, its maximum-work branches, harmonic fitting of
//! numerically propagated work, and the reconciliation between the two.

use std::fmt;
use std::io;

use serde::{Deserialize, Serialize};

use crate::charging::{Battery, ChargingSpec, PropagationMode, WorkSeries};
use crate::error::{Error, Result};
use crate::model::SpinParams;
use crate::scalar::{sinhc, Real};

/// Coefficients of `W(t) = (a + b) - b cos(2ωt) - a cos(ωt)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WorkCoefficients<T> {
    pub a: T,
    pub b: T,
    pub b1: T,
    pub b2: T,
    pub b3: T,
    pub d: T,
    /// `a / (4b)`; `None` when `|b| < 1e-14`.
    pub x: Option<T>,
}

impl<T: Real> WorkCoefficients<T> {
    /// Coefficients from the two harmonic amplitudes alone; the auxiliary
    /// terms `b1`, `b2`, `b3`, `d` are left at zero.
    pub fn from_amplitudes(a: T, b: T) -> Self {
        Self {
            a,
            b,
            b1: T::zero(),
            b2: T::zero(),
            b3: T::zero(),
            d: T::zero(),
            x: branch_ratio(a, b),
        }
    }
}

fn branch_ratio<T: Real>(a: T, b: T) -> Option<T> {
    (b.abs() >= T::lit(1e-14)).then(|| a / (T::lit(4.0) * b))
}

pub fn work_coefficients<T: Real>(p: &SpinParams<T>) -> Result<WorkCoefficients<T>> {
    p.require_unit_beta()?;
    let (j, jz, g, b) = (p.j(), p.jz(), p.gamma(), p.field());
    let one = T::one();
    let eta = p.eta();
    let ejz = jz.exp();
    // d = η·den; every η in a numerator cancels against it, which keeps
    // the η → 0 limit finite.
    let den = ejz * j.cosh() + eta.cosh();
    let d = eta * den;

    let a = T::lit(4.0) * b * b * sinhc(eta) / den;
    let c1 = ejz * (jz + j * (one + g));
    let c2 = -jz + j * (one + g);
    let b3 = j * (-one + g);
    let bb = (c1 * j.cosh() + c2 * eta.cosh()) / den
        + b3 * (-ejz * j.sinh() + j * g * sinhc(eta)) / den;

    Ok(WorkCoefficients {
        a,
        b: bb,
        b1: c1 * eta,
        b2: c2 * eta,
        b3,
        d,
        x: branch_ratio(a, bb),
    })
}

/// `(a + b) - b cos(2ωt) - a cos(ωt)`, evaluated as
/// `2b sin²(ωt) + 2a sin²(ωt/2)` so that `t = 0` gives exactly zero.
pub fn closed_form_work<T: Real>(c: &WorkCoefficients<T>, omega: T, t: T) -> T {
    let two = T::lit(2.0);
    let phase = omega * t;
    let s1 = phase.sin();
    let s2 = (phase * T::lit(0.5)).sin();
    two * c.b * s1 * s1 + two * c.a * s2 * s2
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// Single maximum `2a` at `ωt = π`.
    Max1,
    /// Two maxima `2b + a + a²/(8b)` at `ωt = arccos(-x)` and `2π - arccos(-x)`.
    Max2,
    /// `a ≈ 0` and `b ≈ 0`: the work is identically flat.
    Flat,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::Max1 => "max1",
            Branch::Max2 => "max2",
            Branch::Flat => "flat",
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Selects the maximum-work regime without dividing by `b`.
///
/// The interior maximum only exists for a concave `cos(ωt)` profile, so
/// `max2` additionally requires `b > 0`; for `b < 0` the printed `max2`
/// value is the minimum and the maximum sits at `ωt = π`.
pub fn classify_branch<T: Real>(c: &WorkCoefficients<T>) -> Branch {
    let tiny = T::lit(1e-14);
    if c.a.abs() < tiny && c.b.abs() < tiny {
        Branch::Flat
    } else if c.b > T::zero() && c.a.abs() <= T::lit(4.0) * c.b {
        Branch::Max2
    } else {
        Branch::Max1
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WorkExtrema<T> {
    pub branch: Branch,
    pub w_max: T,
    /// Minimum between the two maxima (`2a`, at `ωt = π`); `max2` only.
    pub w_m: Option<T>,
    /// Phases `ωt` of the maxima within `[0, 2π)`.
    pub peak_phases: Vec<T>,
    /// Times of the maxima within the first period `[0, 2π/ω)`.
    pub peak_times: Vec<T>,
    /// `2π - 2 arccos(-x)`; `max2` only.
    pub delta_phi: Option<T>,
    /// `delta_phi / ω`.
    pub delta_t: Option<T>,
    pub omega: T,
}

impl<T: Real> WorkExtrema<T> {
    /// Peak times shifted into period `n` (`n = 0` is the first period).
    pub fn peak_times_in_period(&self, n: i64) -> Vec<T> {
        let shift = T::TAU() * T::lit(n as f64) / self.omega;
        self.peak_times.iter().map(|&t| t + shift).collect()
    }
}

pub fn max_work<T: Real>(c: &WorkCoefficients<T>, omega: T) -> Result<WorkExtrema<T>> {
    if !omega.is_finite() || omega <= T::zero() {
        return Err(Error::invalid("omega must be positive and finite"));
    }
    if c.a < T::zero() {
        return Err(Error::invalid("the ω-harmonic amplitude a must be non-negative"));
    }
    let two = T::lit(2.0);
    match classify_branch(c) {
        Branch::Flat => Err(Error::FlatSignal),
        Branch::Max1 => Ok(WorkExtrema {
            branch: Branch::Max1,
            w_max: two * c.a,
            w_m: None,
            peak_phases: vec![T::PI()],
            peak_times: vec![T::PI() / omega],
            delta_phi: None,
            delta_t: None,
            omega,
        }),
        Branch::Max2 => {
            let x = c.a / (T::lit(4.0) * c.b);
            let first = (-x).max(-T::one()).min(T::one()).acos();
            let second = T::TAU() - first;
            let delta_phi = second - first;
            Ok(WorkExtrema {
                branch: Branch::Max2,
                w_max: two * c.b + c.a + c.a * c.a / (T::lit(8.0) * c.b),
                w_m: Some(two * c.a),
                peak_phases: vec![first, second],
                peak_times: vec![first / omega, second / omega],
                delta_phi: Some(delta_phi),
                delta_t: Some(delta_phi / omega),
                omega,
            })
        }
    }
}

/// Plateau width exactly as printed, `2π - (2/ω) arccos(-x)`, which mixes
/// phase and time units. Kept for reporting only.
pub fn printed_delta_t<T: Real>(x: T, omega: T) -> T {
    T::TAU() - T::lit(2.0) / omega * (-x).max(-T::one()).min(T::one()).acos()
}

/// Printed gap between the `max2` peak and the central minimum, `(1 - x)²/2`.
pub fn printed_plateau_gap<T: Real>(x: T) -> T {
    T::lit(0.5) + T::lit(0.5) * x * x - x
}

/// `2b(1 - x)²`, the gap implied by the closed-form work itself.
pub fn plateau_gap<T: Real>(c: &WorkCoefficients<T>) -> Option<T> {
    c.x.map(|x| T::lit(2.0) * c.b * (T::one() - x) * (T::one() - x))
}

/// `8B`, the large-field approximation of the `max1` peak.
pub fn large_b_asymptote<T: Real>(p: &SpinParams<T>) -> T {
    T::lit(8.0) * p.field()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Extremum {
    Max,
    Min,
}

/// Location and value of the extremum of `f` on `[lo, hi]` from a uniform
/// grid of `points` samples, refined by golden-section search around the
/// best grid point until the bracket is below `1e-12` (relative).
pub fn grid_search<T: Real>(
    f: impl Fn(T) -> T,
    lo: T,
    hi: T,
    points: usize,
    kind: Extremum,
) -> (T, T) {
    let sign = match kind {
        Extremum::Max => T::one(),
        Extremum::Min => -T::one(),
    };
    let g = |t: T| sign * f(t);
    let points = points.max(2);
    let step = (hi - lo) / T::lit((points - 1) as f64);
    let mut best = (lo, g(lo));
    for i in 1..points {
        let t = lo + step * T::lit(i as f64);
        let v = g(t);
        if v > best.1 {
            best = (t, v);
        }
    }

    let mut a = (best.0 - step).max(lo);
    let mut b = (best.0 + step).min(hi);
    let ratio = T::lit(0.618_033_988_749_894_8);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    let tol = T::lit(1e-12) * T::one().max(best.0.abs());
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        if gc > gd {
            b = d;
            d = c;
            gd = gc;
            c = b - ratio * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + ratio * (b - a);
            gd = g(d);
        }
    }
    let mid = (a + b) * T::lit(0.5);
    let refined = g(mid);
    let (t, v) = if refined >= best.1 { (mid, refined) } else { best };
    (t, sign * v)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HarmonicFit<T> {
    pub alpha0: T,
    pub alpha1: T,
    pub alpha2: T,
    /// Largest absolute deviation of the fit from the data.
    pub residual: T,
}

impl<T: Real> HarmonicFit<T> {
    pub fn eval(&self, omega: T, t: T) -> T {
        let phase = omega * t;
        self.alpha0 + self.alpha1 * phase.cos() + self.alpha2 * (phase + phase).cos()
    }
}

const MIN_FIT_SAMPLES: usize = 16;

/// Least-squares fit of `α0 + α1 cos(ωt) + α2 cos(2ωt)` to a work series
/// covering at least one full period.
pub fn harmonic_fit<T: Real>(series: &WorkSeries<T>) -> Result<HarmonicFit<T>> {
    let n = series.len();
    if n < MIN_FIT_SAMPLES || series.values.len() != n {
        return Err(Error::invalid(format!(
            "harmonic fit needs at least {MIN_FIT_SAMPLES} samples"
        )));
    }
    let span = series.times[n - 1] - series.times[0];
    let period = T::TAU() / series.omega;
    if span < period * (T::one() - T::lit(1e-9)) {
        return Err(Error::invalid("harmonic fit needs a series spanning one full period"));
    }

    let basis = |t: T| {
        let phase = series.omega * t;
        [T::one(), phase.cos(), (phase + phase).cos()]
    };
    let mut gram = [[T::zero(); 3]; 3];
    let mut rhs = [T::zero(); 3];
    for (&t, &w) in series.times.iter().zip(&series.values) {
        let phi = basis(t);
        for i in 0..3 {
            rhs[i] += phi[i] * w;
            for j in 0..3 {
                gram[i][j] += phi[i] * phi[j];
            }
        }
    }
    let [alpha0, alpha1, alpha2] = solve3(gram, rhs)?;
    let mut fit = HarmonicFit {
        alpha0,
        alpha1,
        alpha2,
        residual: T::zero(),
    };
    fit.residual = series
        .times
        .iter()
        .zip(&series.values)
        .map(|(&t, &w)| (fit.eval(series.omega, t) - w).abs())
        .fold(T::zero(), |acc, r| acc.max(r));
    Ok(fit)
}

/// Gaussian elimination with partial pivoting.
fn solve3<T: Real>(mut m: [[T; 3]; 3], mut v: [T; 3]) -> Result<[T; 3]> {
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())
            .unwrap();
        if m[pivot][col].abs() < T::epsilon() {
            return Err(Error::invalid("harmonic basis is singular on these samples"));
        }
        m.swap(col, pivot);
        v.swap(col, pivot);
        for row in (col + 1)..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                let delta = f * m[col][k];
                m[row][k] -= delta;
            }
            let delta = f * v[col];
            v[row] -= delta;
        }
    }
    let mut x = [T::zero(); 3];
    for row in (0..3).rev() {
        let mut acc = v[row];
        for k in (row + 1)..3 {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    Ok(x)
}

/// Fit of the propagated work in one propagation mode, compared against
/// the printed coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub mode: PropagationMode,
    pub omega: f64,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "Jz")]
    pub jz: f64,
    pub gamma: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub beta: f64,
    pub a_printed: f64,
    pub b_printed: f64,
    pub alpha0: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    /// `-α1`.
    pub a_fitted: f64,
    /// `-α2`.
    pub b_fitted: f64,
    /// `a_printed / a_fitted`, absent when the fitted amplitude vanishes.
    pub ratio_a: Option<f64>,
    pub ratio_b: Option<f64>,
    pub fit_residual: f64,
    /// Closed-form and propagated work at `t = π/ω`.
    pub w_half_closed: f64,
    pub w_half_oracle: f64,
    pub branch: Branch,
    pub delta_t_printed: Option<f64>,
    pub delta_t_consistent: Option<f64>,
    pub plateau_gap_printed: Option<f64>,
    pub plateau_gap_algebraic: Option<f64>,
}

pub const REPORT_HEADER: [&str; 24] = [
    "mode",
    "omega",
    "J",
    "Jz",
    "gamma",
    "B",
    "beta",
    "a_printed",
    "b_printed",
    "alpha0",
    "alpha1",
    "alpha2",
    "a_fitted",
    "b_fitted",
    "ratio_a",
    "ratio_b",
    "fit_residual",
    "w_half_closed",
    "w_half_oracle",
    "branch",
    "delta_t_printed",
    "delta_t_consistent",
    "plateau_gap_printed",
    "plateau_gap_algebraic",
];

/// Printed coefficients side by side with harmonic fits of the propagated
/// work, one row per propagation mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub rows: Vec<ReportRow>,
}

/// Samples per period used for the report's fits.
pub const REPORT_SAMPLES: usize = 257;

pub fn consistency_report(p: &SpinParams<f64>, omega: f64) -> Result<ConsistencyReport> {
    let coeffs = work_coefficients(p)?;
    let battery = Battery::new(*p)?;
    let branch = classify_branch(&coeffs);
    let extrema = max_work(&coeffs, omega).ok();
    let half = std::f64::consts::PI / omega;

    let mut rows = Vec::with_capacity(2);
    for mode in PropagationMode::ALL {
        let spec = ChargingSpec::new(omega, mode)?;
        let series = battery.work_series(&spec, spec.period(), REPORT_SAMPLES)?;
        let fit = harmonic_fit(&series)?;
        let a_fitted = -fit.alpha1;
        let b_fitted = -fit.alpha2;
        let ratio = |printed: f64, fitted: f64| (fitted.abs() > 1e-14).then(|| printed / fitted);
        let (delta_t_printed, plateau_gap_printed, plateau_gap_algebraic) = match branch {
            Branch::Max2 => {
                let x = coeffs.x.expect("max2 implies b > 0");
                (
                    Some(printed_delta_t(x, omega)),
                    Some(printed_plateau_gap(x)),
                    plateau_gap(&coeffs),
                )
            }
            _ => (None, None, None),
        };
        rows.push(ReportRow {
            mode,
            omega,
            j: p.j(),
            jz: p.jz(),
            gamma: p.gamma(),
            b: p.field(),
            beta: p.beta(),
            a_printed: coeffs.a,
            b_printed: coeffs.b,
            alpha0: fit.alpha0,
            alpha1: fit.alpha1,
            alpha2: fit.alpha2,
            a_fitted,
            b_fitted,
            ratio_a: ratio(coeffs.a, a_fitted),
            ratio_b: ratio(coeffs.b, b_fitted),
            fit_residual: fit.residual,
            w_half_closed: closed_form_work(&coeffs, omega, half),
            w_half_oracle: battery.stored_work(&spec, half)?,
            branch,
            delta_t_printed,
            delta_t_consistent: extrema.as_ref().and_then(|e| e.delta_t),
            plateau_gap_printed,
            plateau_gap_algebraic,
        });
    }
    Ok(ConsistencyReport { rows })
}

impl ConsistencyReport {
    pub fn row(&self, mode: PropagationMode) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.mode == mode)
    }

    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(REPORT_HEADER)?;
        for r in &self.rows {
            let num = crate::format_number;
            let opt = |v: Option<f64>| v.map(crate::format_number).unwrap_or_default();
            w.write_record([
                r.mode.to_string(),
                num(r.omega),
                num(r.j),
                num(r.jz),
                num(r.gamma),
                num(r.b),
                num(r.beta),
                num(r.a_printed),
                num(r.b_printed),
                num(r.alpha0),
                num(r.alpha1),
                num(r.alpha2),
                num(r.a_fitted),
                num(r.b_fitted),
                opt(r.ratio_a),
                opt(r.ratio_b),
                num(r.fit_residual),
                num(r.w_half_closed),
                num(r.w_half_oracle),
                r.branch.to_string(),
                opt(r.delta_t_printed),
                opt(r.delta_t_consistent),
                opt(r.plateau_gap_printed),
                opt(r.plateau_gap_algebraic),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn read_csv<R: io::Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers()?.clone();
        if header.iter().ne(REPORT_HEADER) {
            return Err(Error::invalid("unexpected report header"));
        }
        let rows = r.deserialize().collect::<std::result::Result<Vec<ReportRow>, _>>()?;
        Ok(Self { rows })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charging::work_series;
    use proptest::prelude::*;
    use std::f64::consts::{PI, TAU};

    type SpinParams = crate::model::SpinParams<f64>;
    type WorkCoefficients = super::WorkCoefficients<f64>;
    type ChargingSpec = crate::charging::ChargingSpec<f64>;

    fn fig1() -> SpinParams {
        SpinParams::new(0.2, 0.2, 0.5, 1.0).unwrap()
    }

    #[test]
    fn fig1_coefficients() {
        let c = work_coefficients(&fig1()).unwrap();
        // High-precision evaluation of the printed formulas.
        assert!((c.a - 1.684_572_053_605_689_7).abs() < 1e-13);
        assert!((c.b - 0.282_901_209_363_701_97).abs() < 1e-13);
        assert!((c.d - 2.808_813_195_211_776_6).abs() < 1e-13);
        assert!((c.x.unwrap() - 1.488_657_522_350_831_5).abs() < 1e-12);
        let p = fig1();
        let z = crate::model::thermal_elements(&p).unwrap().partition;
        assert!((c.d - p.eta() * z * (p.jz() / 2.0).exp() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_field_kills_first_harmonic() {
        let p = SpinParams::new(0.3, -0.4, 0.6, 0.0).unwrap();
        let c = work_coefficients(&p).unwrap();
        assert_eq!(c.a, 0.0);
        assert_eq!(classify_branch(&c), Branch::Max2);
    }

    #[test]
    fn coefficients_are_finite_at_vanishing_eta() {
        let p = SpinParams::new(0.3, 0.1, 0.0, 0.0).unwrap();
        let c = work_coefficients(&p).unwrap();
        assert!(c.a.is_finite() && c.b.is_finite());
        assert_eq!(c.d, 0.0);
        let p = fig1().set_beta(0.5).unwrap();
        assert!(matches!(work_coefficients(&p), Err(Error::UnsupportedClosedForm { .. })));
    }

    #[test]
    fn closed_form_spot_values() {
        let c = work_coefficients(&fig1()).unwrap();
        assert_eq!(closed_form_work(&c, 1.0, 0.0), 0.0);
        assert!((closed_form_work(&c, 1.0, PI) - 3.369).abs() < 1e-3);
        assert!((closed_form_work(&c, 1.0, PI / 2.0) - (c.a + 2.0 * c.b)).abs() < 1e-14);
        let printed = |t: f64| (c.a + c.b) - c.b * (2.0 * t).cos() - c.a * t.cos();
        for i in 0..50 {
            let t = 0.13 * i as f64;
            assert!((closed_form_work(&c, 1.0, t) - printed(t)).abs() < 1e-14);
        }
    }

    #[test]
    fn branch_classification() {
        let c = work_coefficients(&fig1()).unwrap();
        assert_eq!(classify_branch(&c), Branch::Max1);
        assert_eq!(classify_branch(&WorkCoefficients::from_amplitudes(1.0, 0.0)), Branch::Max1);
        assert_eq!(classify_branch(&WorkCoefficients::from_amplitudes(0.0, 0.0)), Branch::Flat);
        assert_eq!(classify_branch(&WorkCoefficients::from_amplitudes(0.0, 0.3)), Branch::Max2);
        // b < 0: the interior stationary point is a minimum.
        assert_eq!(classify_branch(&WorkCoefficients::from_amplitudes(0.1, -0.3)), Branch::Max1);
    }

    #[test]
    fn fig1_max_work() {
        let c = work_coefficients(&fig1()).unwrap();
        let e = max_work(&c, 1.0).unwrap();
        assert_eq!(e.branch, Branch::Max1);
        assert!((e.w_max - 3.369).abs() < 1e-3);
        assert_eq!(e.peak_times, vec![PI]);
        assert!((e.peak_times_in_period(1)[0] - 3.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn pure_second_harmonic_peaks() {
        let c = WorkCoefficients::from_amplitudes(0.0, 0.4);
        let e = max_work(&c, 2.0).unwrap();
        assert_eq!(e.branch, Branch::Max2);
        assert!((e.w_max - 0.8).abs() < 1e-15);
        assert!((e.peak_phases[0] - PI / 2.0).abs() < 1e-15);
        assert!((e.peak_phases[1] - 1.5 * PI).abs() < 1e-15);
        assert!((e.peak_times[0] - PI / 4.0).abs() < 1e-15);
        assert!((e.delta_phi.unwrap() - PI).abs() < 1e-15);
        assert!((e.delta_t.unwrap() - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn boundary_peaks_merge() {
        let c = WorkCoefficients::from_amplitudes(1.2, 0.3);
        let e = max_work(&c, 1.0).unwrap();
        assert_eq!(e.branch, Branch::Max2);
        assert!((e.w_max - e.w_m.unwrap()).abs() < 1e-15);
        assert!(e.delta_phi.unwrap().abs() < 1e-7);
        assert_eq!(plateau_gap(&c).unwrap(), 0.0);
    }

    #[test]
    fn flat_and_invalid_inputs() {
        let flat = WorkCoefficients::from_amplitudes(0.0, 0.0);
        assert!(matches!(max_work(&flat, 1.0), Err(Error::FlatSignal)));
        let c = WorkCoefficients::from_amplitudes(1.0, 0.1);
        assert!(max_work(&c, 0.0).is_err());
        assert!(max_work(&WorkCoefficients::from_amplitudes(-1.0, 0.1), 1.0).is_err());
    }

    #[test]
    fn large_field_asymptote() {
        let p = |b: f64| SpinParams::new(0.2, 0.2, 0.5, b).unwrap();
        assert_eq!(large_b_asymptote(&p(100.0)), 800.0);
        assert_eq!(large_b_asymptote(&p(1.0)), 8.0);
        let w = |b: f64| 2.0 * work_coefficients(&p(b)).unwrap().a;
        assert!((w(50.0) / 400.0 - 1.0).abs() < 0.01);
        let seq: Vec<f64> = [10.0, 20.0, 30.0, 40.0, 50.0].iter().map(|&b| w(b)).collect();
        assert!(seq.windows(2).all(|s| s[1] > s[0]));
    }

    #[test]
    fn grid_search_locates_known_peak() {
        let (t, v) = grid_search(|t: f64| -(t - 1.234_567).powi(2) + 2.0, 0.0, 3.0, 1000, Extremum::Max);
        assert!((t - 1.234_567).abs() < 1e-6);
        assert!((v - 2.0).abs() < 1e-12);
        let (t, v) = grid_search(|t: f64| t.cos(), 0.0, TAU, 1000, Extremum::Min);
        assert!((t - PI).abs() < 1e-6);
        assert!((v + 1.0).abs() < 1e-12);
    }

    #[test]
    fn max2_extrema_match_grid_search() {
        let c = WorkCoefficients::from_amplitudes(0.5, 0.4);
        let e = max_work(&c, 1.0).unwrap();
        let w = |phi: f64| closed_form_work(&c, 1.0, phi);
        let (p1, v1) = grid_search(w, 0.0, PI, 100_000, Extremum::Max);
        let (p2, v2) = grid_search(w, PI, TAU, 100_000, Extremum::Max);
        assert!((v1 - e.w_max).abs() < 1e-8 && (v2 - e.w_max).abs() < 1e-8);
        assert!((p1 - e.peak_phases[0]).abs() < 1e-6);
        assert!((p2 - e.peak_phases[1]).abs() < 1e-6);
        let (pm, vm) = grid_search(w, e.peak_phases[0], e.peak_phases[1], 100_000, Extremum::Min);
        assert!((vm - e.w_m.unwrap()).abs() < 1e-8);
        assert!((pm - PI).abs() < 1e-6);
    }

    #[test]
    fn harmonic_fit_round_trip_on_closed_form() {
        let c = work_coefficients(&fig1()).unwrap();
        let omega = 0.7;
        let n = 64;
        let t_max = TAU / omega;
        let times: Vec<f64> = (0..n).map(|i| t_max * i as f64 / (n - 1) as f64).collect();
        let values = times.iter().map(|&t| closed_form_work(&c, omega, t)).collect();
        let series = WorkSeries { times, values, omega, mode: PropagationMode::ChargingOnly };
        let fit = harmonic_fit(&series).unwrap();
        assert!((fit.alpha0 - (c.a + c.b)).abs() < 1e-10);
        assert!((fit.alpha1 + c.a).abs() < 1e-10);
        assert!((fit.alpha2 + c.b).abs() < 1e-10);
        assert!(fit.residual < 1e-10);
    }

    #[test]
    fn harmonic_fit_rejects_short_series() {
        let spec = ChargingSpec::charging_only(1.0).unwrap();
        let short = work_series(&fig1(), &spec, TAU, 8).unwrap();
        assert!(harmonic_fit(&short).is_err());
        let partial = work_series(&fig1(), &spec, PI, 64).unwrap();
        assert!(harmonic_fit(&partial).is_err());
    }

    #[test]
    fn oracle_series_has_two_harmonics() {
        let spec = ChargingSpec::charging_only(1.3).unwrap();
        let s = work_series(&fig1(), &spec, spec.period(), 100).unwrap();
        let fit = harmonic_fit(&s).unwrap();
        assert!(fit.residual < 1e-9);
        let p0 = SpinParams::new(0.2, 0.2, 0.5, 0.0).unwrap();
        let s = work_series(&p0, &spec, spec.period(), 100).unwrap();
        assert!(harmonic_fit(&s).unwrap().alpha1.abs() < 1e-10);
    }

    #[test]
    fn report_ratio_and_round_trip() {
        let report = consistency_report(&fig1(), 1.0).unwrap();
        assert_eq!(report.rows.len(), 2);
        let row = report.row(PropagationMode::ChargingOnly).unwrap();
        assert!(row.fit_residual < 1e-9);
        assert!((row.w_half_oracle - 0.842_286_026_802_844_9).abs() < 1e-12);
        let ratio = row.ratio_a.unwrap();
        assert!((ratio - 4.0).abs() < 1e-9, "{ratio}");
        let csv = report.to_csv_string().unwrap();
        let back = ConsistencyReport::read_csv(csv.as_bytes()).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn report_at_zero_field() {
        let p = SpinParams::new(0.2, 0.2, 0.5, 0.0).unwrap();
        let report = consistency_report(&p, 1.0).unwrap();
        let row = report.row(PropagationMode::ChargingOnly).unwrap();
        assert_eq!(row.a_printed, 0.0);
        assert!(row.a_fitted.abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn closed_form_is_periodic_and_vanishes_at_zero(
            a in 0.0..5.0f64, b in -2.0..2.0f64, omega in 0.1..3.0f64, t in 0.0..50.0f64
        ) {
            let c = WorkCoefficients::from_amplitudes(a, b);
            prop_assert_eq!(closed_form_work(&c, omega, 0.0), 0.0);
            let period = TAU / omega;
            prop_assert!((closed_form_work(&c, omega, t) - closed_form_work(&c, omega, t + period)).abs() < 1e-10);
        }

        #[test]
        fn plateau_gap_identity(a in 0.0..2.0f64, b in 0.01..2.0f64) {
            let c = WorkCoefficients::from_amplitudes(a, b);
            prop_assume!(classify_branch(&c) == Branch::Max2);
            let e = max_work(&c, 1.0).unwrap();
            let gap = e.w_max - e.w_m.unwrap();
            prop_assert!((gap - plateau_gap(&c).unwrap()).abs() < 1e-12);
            prop_assert!(e.w_m.unwrap() <= e.w_max + 1e-15);
            let dphi = e.delta_phi.unwrap();
            prop_assert!((0.0..TAU).contains(&dphi));
        }
    }
}
