//! Cross-validation suite behind the `validate` CLI command.
//!
//! Every check evaluates one physical or numerical identity by two
//! independent routes and records the achieved deviation next to the
//! tolerance it is held to. A failed computation never panics the suite:
//! the error text becomes the check's detail and the check fails. The
//! whole suite is a fresh-checkout smoke run, a few seconds end to end.

use std::f64::consts::PI;

use serde::Serialize;

use crate::config::SpectralPoint;
use crate::error::Result;
use crate::perfreq;
use crate::quad;
use crate::spa;
use crate::specfun;
use crate::thermo;
use crate::zerofreq;
use crate::Geometry;

/// Outcome of one validation check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    /// Stable slug naming the identity under test.
    pub name: String,
    pub passed: bool,
    /// Achieved deviation (relative unless the detail says otherwise);
    /// infinite when the computation itself failed.
    pub achieved: f64,
    /// Tolerance the deviation is held to.
    pub required: f64,
    /// Human-readable account of what was compared, or the error text.
    pub detail: String,
}

fn run(name: &str, required: f64, f: impl FnOnce() -> Result<(f64, String)>) -> CheckResult {
    match f() {
        Ok((achieved, detail)) => CheckResult {
            name: name.to_string(),
            passed: achieved <= required,
            achieved,
            required,
            detail,
        },
        Err(e) => CheckResult {
            name: name.to_string(),
            passed: false,
            achieved: f64::INFINITY,
            required,
            detail: format!("computation failed: {e}"),
        },
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Literal defining sum A(y) = sum_{l>=1} [l/(l+1)] y^{2l} / (2l)!,
/// restated here independently of the special-function module.
fn multipole_defining_series(y: f64) -> f64 {
    let y2 = y * y;
    let mut term = y2 / 2.0;
    let mut sum = 0.0;
    for l in 1..500u64 {
        let lf = l as f64;
        sum += lf / (lf + 1.0) * term;
        term *= y2 / ((2.0 * lf + 1.0) * (2.0 * lf + 2.0));
        if term < 1e-18 * sum {
            break;
        }
    }
    sum
}

fn specfun_switchovers() -> Result<(f64, String)> {
    let checks = specfun::two_method_checks();
    let worst = checks
        .iter()
        .max_by(|a, b| a.rel_diff.total_cmp(&b.rel_diff))
        .expect("non-empty check list");
    let listing: Vec<String> = checks
        .iter()
        .map(|c| format!("{} at {:.6e}: rel {:.3e}", c.name, c.point, c.rel_diff))
        .collect();
    Ok((worst.rel_diff, listing.join("; ")))
}

fn multipole_series_vs_closed() -> Result<(f64, String)> {
    let mut worst = 0.0f64;
    for y in [0.5, 3.0, 10.0, 30.0] {
        let series = multipole_defining_series(y);
        let closed = specfun::multipole_sum_a(y, false)?;
        worst = worst.max(rel(series, closed));
    }
    Ok((worst, "closed hyperbolic form of the multipole sum A(y) against its defining series at y in {0.5, 3, 10, 30}".to_string()))
}

fn trilog_series_anchor() -> Result<(f64, String)> {
    // near-one branch versus the literal power series: a corrupted zeta
    // constant in the expansion shows up here immediately
    let z: f64 = 0.995;
    let direct = specfun::trilog(z)?;
    let mut series = 0.0;
    let mut pw = 1.0;
    for k in 1..40_000u64 {
        pw *= z;
        let term = pw / (k * k * k) as f64;
        series += term;
        if term < 1e-18 * series {
            break;
        }
    }
    Ok((
        rel(direct, series),
        format!("trilogarithm near-one expansion {direct:.15e} vs literal power series {series:.15e} at z = 0.995"),
    ))
}

fn quadrature_reference_integrals() -> Result<(f64, String)> {
    let a = quad::integrate_to_inf(|t| (-t).exp(), 0.0, 1e-13, 0.0)?;
    let b = quad::integrate(|t| 1.0 / (1.0 + t * t), 0.0, 1.0, 1e-13, 0.0)?;
    let worst = rel(a, 1.0).max(rel(b, PI / 4.0));
    Ok((worst, "semi-infinite exponential tail vs 1 and arctangent integral vs pi/4".to_string()))
}

fn saddle_point_families() -> Result<(f64, String)> {
    let g = |_: &[f64]| 1.0;

    let f_gauss = |x: &[f64]| 0.5 * x[0] * x[0];
    let p = spa::SaddleProblem::new(1, &f_gauss, &g, vec![0.0], 20.0)?;
    let t = spa::derivative_tensors(&p, 0.01)?;
    let gauss_c = (spa::ntlo_spa(&p, &t)? / spa::lo_spa(&p, &t)?).abs();

    let f_gamma = |x: &[f64]| x[0] - x[0].ln();
    let p = spa::SaddleProblem::new(1, &f_gamma, &g, vec![1.0], 10.0)?;
    let t = spa::derivative_tensors(&p, 0.01)?;
    let gamma_dev = (spa::ntlo_spa(&p, &t)? / spa::lo_spa(&p, &t)? - 1.0 / 12.0).abs();

    let alpha = 0.01;
    let f_quartic = move |x: &[f64]| 0.5 * x[0] * x[0] + alpha * x[0].powi(4);
    let p = spa::SaddleProblem::new(1, &f_quartic, &g, vec![0.0], 50.0)?;
    let t = spa::derivative_tensors(&p, 0.01)?;
    let quartic_dev = (spa::ntlo_spa(&p, &t)? / spa::lo_spa(&p, &t)? - (-3.0 * alpha)).abs();

    let worst = gauss_c.max(gamma_dev).max(quartic_dev);
    Ok((worst, format!(
        "absolute deviations: Gaussian correction {gauss_c:.2e} (exact 0), gamma-family ratio vs 1/12 {gamma_dev:.2e}, quartic ratio vs -3 alpha {quartic_dev:.2e}"
    )))
}

fn closed_forms_vs_round_trip_sums() -> Result<(f64, String)> {
    let mut worst = 0.0f64;
    for q in [0.3, 1.0, 3.0] {
        let a = perfreq::free_energy_ntlo_at_q(q)?;
        let b = perfreq::free_energy_ntlo_rsum(q)?;
        worst = worst
            .max(rel(a.d_te, b.d_te))
            .max(rel(a.d_tm, b.d_tm))
            .max(rel(a.go_total, b.go_total));
    }
    Ok((worst, "per-frequency closed forms vs direct round-trip summation, componentwise at q in {0.3, 1, 3}".to_string()))
}

fn trace_integrand_oracle() -> Result<(f64, String)> {
    let mut worst = 0.0f64;
    for (r, u) in [(1u32, 1.0), (2, 0.5), (3, 2.0)] {
        let pt = SpectralPoint::from_q(u / f64::from(r), r);
        let via = perfreq::trace_via_integrand(&pt, 1e-3)?;
        let (te, tm, go_pp) = perfreq::trace_ntlo(&pt)?;
        worst = worst.max(rel(via, te + tm + 2.0 * go_pp));
    }
    Ok((worst, "radial-quadrature NTLO trace vs closed trace at (r, u) in {(1,1), (2,0.5), (3,2)}".to_string()))
}

fn polarization_split_identity() -> Result<(f64, String)> {
    let mut worst = 0.0f64;
    for u in [0.7, 1.7, 4.0] {
        let pt = SpectralPoint::from_q(u, 1);
        let (te, tm, _) = perfreq::trace_ntlo(&pt)?;
        worst = worst.max(rel(te + tm, -0.5 * specfun::exp_int_e1(u)?));
    }
    Ok((worst, "TE + TM diffraction trace vs -E1(u)/2 at u in {0.7, 1.7, 4}".to_string()))
}

fn zero_temperature_coefficient() -> Result<(f64, String)> {
    let x = 1e-3;
    let theta1 = 1.0 / 3.0 - 20.0 / (PI * PI);
    let ratio = perfreq::zero_temp_ntlo(x)? / (-PI.powi(3) / (720.0 * x));
    Ok((
        rel(ratio, theta1 * x),
        format!("zero-temperature NTLO over proximity energy {ratio:.9e} vs (1/3 - 20/pi^2) x = {:.9e}", theta1 * x),
    ))
}

fn geom_at(x: f64) -> Geometry {
    Geometry { l: x, r: 1.0, x }
}

fn nystrom_pinned_value() -> Result<(f64, String)> {
    let geom = geom_at(0.1);
    let got = zerofreq::f0_te_exact(&geom, &zerofreq::NystromConfig::default())?;
    Ok((
        rel(got.value, -1.7687705788),
        format!("zero-frequency TE log-determinant sum at x = 0.1: {:.10} vs frozen -1.7687705788", got.value),
    ))
}

fn nystrom_trace_identity() -> Result<(f64, String)> {
    let geom = geom_at(0.05);
    let cfg = zerofreq::NystromConfig {
        n_nodes: 80,
        n_phi: Some(2048),
        ..Default::default()
    };
    let by_sectors = zerofreq::round_trip_trace_by_sectors(&geom, &cfg)?;
    let radial = zerofreq::round_trip_trace_radial(&geom)?;
    Ok((
        rel(by_sectors, radial),
        format!("single round-trip trace by angular sectors {by_sectors:.12e} vs radial quadrature {radial:.12e} at x = 0.05"),
    ))
}

fn zero_frequency_coefficient_audit() -> Result<(f64, String)> {
    let mut worst = 0.0f64;
    for x in [1e-3, 1e-2] {
        let te = zerofreq::f0_te_asympt(x, zerofreq::AsymptoticOrder::Full)?;
        let tm = zerofreq::f0_tm_asympt(x)?;
        let total = zerofreq::f0_total_asympt(x)?;
        worst = worst.max(rel(te + tm, total));
    }
    Ok((worst, "coefficient audit: the TE log coefficient (7/6 - ln 2) plus the TM coefficient (-1/6) assemble exactly to the combined form's (1 - ln 2); both assemblies evaluated at x in {1e-3, 1e-2} and the combined form is the one used by the thermal module".to_string()))
}

fn euler_maclaurin_reference_sums() -> Result<(f64, String)> {
    let (v, _) = thermo::euler_maclaurin(|n| Ok(1.0 / (n * n)), 5)?;
    let dev_zeta = (v - PI * PI / 6.0).abs();
    let (v, _) = thermo::euler_maclaurin(|n| Ok((-n).exp()), 4)?;
    let dev_geo = (v - 1.0 / (std::f64::consts::E - 1.0)).abs();
    Ok((
        dev_zeta.max(dev_geo),
        format!("absolute deviations: sum of 1/n^2 vs pi^2/6 {dev_zeta:.2e}, sum of e^-n vs 1/(e-1) {dev_geo:.2e}"),
    ))
}

fn euler_maclaurin_vs_direct_matsubara() -> Result<(f64, String)> {
    let tau = 0.05;
    let f = |n: f64| perfreq::free_energy_ntlo_at_q(4.0 * PI * tau * n).map(|c| c.total());
    let mut direct = 0.0;
    let mut small = 0;
    let mut n = 1.0;
    while small < 2 {
        let term = f(n)?;
        direct += term;
        if term.abs() < 1e-14 * direct.abs() {
            small += 1;
        } else {
            small = 0;
        }
        n += 1.0;
    }
    let (em, _) = thermo::euler_maclaurin(f, 5)?;
    Ok((
        rel(em, direct),
        format!("Euler-Maclaurin NTLO Matsubara sum {em:.12e} vs direct summation {direct:.12e} at tau = 0.05"),
    ))
}

fn delta_small_tau_law() -> Result<(f64, String)> {
    let d = thermo::delta(1e-3, 3e-2)?;
    let dev = (d.delta_formula - (-1.191e-3)).abs();
    Ok((
        dev,
        format!("closed-form thermal correction {:.9e} vs -1.191e-3 (absolute band 1e-6); assembled value {:.9e}, positive-mode share {:.9e}",
            d.delta_formula, d.delta_assembled, d.delta_n_positive),
    ))
}

fn beyond_pfa_factor_two() -> Result<(f64, String)> {
    let r = thermo::beyond_pfa_ratio(1e-3, 3e-2)?;
    Ok((
        (r - 1.7649081).abs(),
        format!("beyond-proximity correction grows by {r:.7} from T = 0 at tau = 0.03 (a factor of about two)"),
    ))
}

fn entropy_derivative_identity() -> Result<(f64, String)> {
    let (x, tau, h) = (1e-3, 0.1, 1e-5);
    let fd = (thermo::entropy_ntlo(x, tau + h)? - thermo::entropy_ntlo(x, tau - h)?) / (2.0 * h);
    Ok((
        rel(fd, tau.ln() / (4.0 * tau)),
        format!("finite-difference dS/dtau {fd:.9e} vs ln(tau)/(4 tau) at tau = 0.1"),
    ))
}

fn proximity_hot_limit() -> Result<(f64, String)> {
    let hot = thermo::pfa_free_energy(1e-3, 50.0)?.value;
    let want = -specfun::zeta3() / (4.0 * 1e-3);
    Ok((
        rel(hot, want),
        format!("proximity energy at tau = 50 {hot:.12e} vs the surviving halved zero mode {want:.12e}"),
    ))
}

/// Run every cross-validation check. Failures are recorded, never panicked.
pub fn validation_suite() -> Vec<CheckResult> {
    vec![
        run("specfun-switchover-agreement", 1e-11, specfun_switchovers),
        run("multipole-closed-form-vs-series", 1e-13, multipole_series_vs_closed),
        run("trilog-series-anchor", 1e-11, trilog_series_anchor),
        run("quadrature-reference-integrals", 1e-12, quadrature_reference_integrals),
        run("saddle-point-families", 1e-6, saddle_point_families),
        run("closed-forms-vs-round-trip-sums", 1e-9, closed_forms_vs_round_trip_sums),
        run("trace-integrand-oracle", 1e-8, trace_integrand_oracle),
        run("polarization-split-identity", 1e-12, polarization_split_identity),
        run("zero-temperature-coefficient", 1e-3, zero_temperature_coefficient),
        run("nystrom-pinned-value", 1e-6, nystrom_pinned_value),
        run("nystrom-trace-identity", 1e-8, nystrom_trace_identity),
        run("zero-frequency-coefficient-audit", 1e-12, zero_frequency_coefficient_audit),
        run("euler-maclaurin-reference-sums", 1e-7, euler_maclaurin_reference_sums),
        run("euler-maclaurin-vs-direct-matsubara", 1e-6, euler_maclaurin_vs_direct_matsubara),
        run("delta-small-tau-law", 1e-6, delta_small_tau_law),
        run("beyond-pfa-factor-two", 0.5, beyond_pfa_factor_two),
        run("entropy-derivative-identity", 1e-6, entropy_derivative_identity),
        run("proximity-hot-limit", 1e-12, proximity_hot_limit),
    ]
}

/// True iff every check in the slice passed.
pub fn all_passed(results: &[CheckResult]) -> bool {
    results.iter().all(|r| r.passed)
}
