//! Release acceptance suite. Each test covers one acceptance criterion and
//! prints exactly one `criterion N PASS/FAIL (...)` line, so running
//!
//! ```text
//! cargo test -p casimir-cli --test acceptance -- --nocapture
//! ```
//!
//! yields a scannable checklist. A failing criterion still prints its line
//! before panicking with the same detail.

use std::f64::consts::{LN_2, PI};
use std::process::Command;
use std::time::Instant;

use casimir_core::config::{Geometry, SpectralPoint};
use casimir_core::{perfreq, quad, spa, specfun, thermo, zerofreq};
use zerofreq::{AsymptoticOrder, NystromConfig};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !($cond) {
            return Err(format!($($msg)+));
        }
    };
}

fn report(id: u32, what: &str, outcome: Outcome) {
    match outcome {
        Ok(detail) => println!("criterion {id} PASS ({what}): {detail}"),
        Err(detail) => {
            println!("criterion {id} FAIL ({what}): {detail}");
            panic!("acceptance criterion {id} ({what}) failed: {detail}");
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b.abs().max(1e-300)).abs()
}

fn err_str(e: casimir_core::Error) -> String {
    format!("computation failed: {e}")
}

/// Elapsed seconds if under the budget, an error otherwise.
fn within_budget(start: Instant, budget_secs: f64) -> Result<f64, String> {
    let t = start.elapsed().as_secs_f64();
    if t < budget_secs {
        Ok(t)
    } else {
        Err(format!("exceeded the {budget_secs:.0}-second budget: {t:.1} s"))
    }
}

// Criterion 1: the Nystrom zero-frequency TE energy and its full asymptotic
// form separate by an O(1) residual that is positive, shrinks monotonically
// toward small x, and stays below 0.5 k_BT at x = 0.005, while the log terms
// the asymptote keeps are far larger than that residual.
#[test]
fn criterion_1_zero_frequency_residual_structure() {
    report(1, "zero-frequency TE residual structure", (|| {
        let start = Instant::now();
        let cfg = NystromConfig::default();
        let xs = [0.1, 0.05, 0.02, 0.01, 0.005];
        let mut residuals = Vec::with_capacity(xs.len());
        for &x in &xs {
            let geom = Geometry { l: x, r: 1.0, x };
            let exact = zerofreq::f0_te_exact(&geom, &cfg).map_err(err_str)?;
            let asympt = zerofreq::f0_te_asympt(x, AsymptoticOrder::Full).map_err(err_str)?;
            let resid = (exact.value - asympt).abs();
            ensure!(
                resid > 0.0 && resid.is_finite(),
                "residual at x = {x} is not positive and finite: {resid}"
            );
            residuals.push(resid);
        }
        for (w, pair) in residuals.windows(2).enumerate() {
            ensure!(
                pair[1] < pair[0],
                "residual must shrink with x: x = {} gives {:.6}, x = {} gives {:.6}",
                xs[w], pair[0], xs[w + 1], pair[1]
            );
        }
        let last = *residuals.last().unwrap();
        ensure!(last < 0.5, "residual at x = 0.005 is {last:.4}, not below 0.5 k_BT");

        // Size of the log terms the asymptote retains at the smallest x,
        // quoted both bare and with the overall 1/4 prefactor applied.
        let lx = 0.005_f64.ln();
        let bare = (-0.5 * lx * lx + (7.0 / 6.0 - LN_2) * lx).abs();
        let scaled = bare / 4.0;
        ensure!(
            bare > 5.0,
            "retained log terms at x = 0.005 measure {bare:.2}, expected > 5"
        );
        let secs = within_budget(start, 300.0)?;
        Ok(format!(
            "residuals {:?} strictly decreasing, final {:.3} < 0.5 k_BT; \
             retained log terms at x = 0.005: {:.2} bare ({:.2} with the 1/4 prefactor) \
             vs residual {:.3}; {:.2} s",
            residuals.iter().map(|r| (r * 1e3).round() / 1e3).collect::<Vec<_>>(),
            last, bare, scaled, last, secs
        ))
    })());
}

fn linear_slope(ts: &[f64], ys: &[f64]) -> f64 {
    let n = ts.len() as f64;
    let tbar = ts.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (&t, &y) in ts.iter().zip(ys) {
        num += (t - tbar) * (y - ybar);
        den += (t - tbar) * (t - tbar);
    }
    num / den
}

/// Least-squares quadratic coefficient of y against t (centered for
/// conditioning; the leading coefficient is shift-invariant).
fn quadratic_coefficient(ts: &[f64], ys: &[f64]) -> f64 {
    let n = ts.len() as f64;
    let tbar = ts.iter().sum::<f64>() / n;
    let u: Vec<f64> = ts.iter().map(|&t| t - tbar).collect();
    let mut s = [0.0f64; 5];
    for &ui in &u {
        let mut p = 1.0;
        for sk in s.iter_mut() {
            *sk += p;
            p *= ui;
        }
    }
    let (b0, b1, b2) = {
        let mut m0 = 0.0;
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for (&ui, &yi) in u.iter().zip(ys) {
            m0 += yi;
            m1 += ui * yi;
            m2 += ui * ui * yi;
        }
        (m0, m1, m2)
    };
    // Solve the 3x3 normal equations by Cramer's rule for the t^2 weight.
    let a = [[s[0], s[1], s[2]], [s[1], s[2], s[3]], [s[2], s[3], s[4]]];
    let det3 = |m: [[f64; 3]; 3]| -> f64 {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let det = det3(a);
    let mut ac = a;
    ac[0][2] = b0;
    ac[1][2] = b1;
    ac[2][2] = b2;
    det3(ac) / det
}

// Criterion 2: fits over x in [1e-6, 1e-4] recover the asymptotic weights of
// the zero-frequency saddle-point sums: the NTLO sum is linear in ln x with
// slope -1/24, and the LO sum minus its 1/x part is quadratic in ln x with
// leading weight 1/8, both within 5 percent.
#[test]
fn criterion_2_asymptotic_weight_fits() {
    report(2, "saddle-point sum asymptotic weights", (|| {
        let start = Instant::now();
        let n = 9;
        let mut ts = Vec::with_capacity(n);
        let mut ntlo_vals = Vec::with_capacity(n);
        let mut lo_vals = Vec::with_capacity(n);
        for i in 0..n {
            let x = 10f64.powf(-6.0 + 2.0 * i as f64 / (n as f64 - 1.0));
            ts.push(x.ln());
            ntlo_vals.push(zerofreq::ntlo_spa_free_energy(x).map_err(err_str)?);
            lo_vals.push(
                zerofreq::lo_spa_free_energy(x).map_err(err_str)?
                    + specfun::zeta3() / (4.0 * x),
            );
        }
        let slope = linear_slope(&ts, &ntlo_vals);
        let c2 = quadratic_coefficient(&ts, &lo_vals);
        ensure!(
            (slope / (-1.0 / 24.0) - 1.0).abs() < 0.05,
            "NTLO slope {slope:.8} deviates from -1/24 by more than 5 percent"
        );
        ensure!(
            (c2 / 0.125 - 1.0).abs() < 0.05,
            "LO log^2 weight {c2:.8} deviates from 1/8 by more than 5 percent"
        );
        // Frozen fit values for this exact nine-point grid.
        ensure!(
            (slope - (-0.04158945)).abs() < 1e-6,
            "NTLO slope drifted from the recorded fit: {slope:.10}"
        );
        ensure!(
            (c2 - 0.12499573).abs() < 1e-6,
            "LO log^2 weight drifted from the recorded fit: {c2:.10}"
        );
        let secs = within_budget(start, 60.0)?;
        Ok(format!(
            "NTLO slope {slope:.8} vs -1/24 = {:.8} ({:.2}% off); \
             LO log^2 weight {c2:.8} vs 1/8 ({:.3}% off); {secs:.2} s",
            -1.0 / 24.0,
            (slope / (-1.0 / 24.0) - 1.0).abs() * 100.0,
            (c2 / 0.125 - 1.0).abs() * 100.0
        ))
    })());
}

// Criterion 3: per-frequency closed forms agree with direct round-trip sums
// componentwise, and the NTLO trace agrees with its independent integrand
// quadrature.
#[test]
fn criterion_3_closed_forms_and_trace_oracle() {
    report(3, "closed forms vs sums and integrand", (|| {
        let start = Instant::now();
        let mut worst_sum = 0.0f64;
        for &q in &[0.3, 1.0, 3.0] {
            let a = perfreq::free_energy_ntlo_at_q(q).map_err(err_str)?;
            let b = perfreq::free_energy_ntlo_rsum(q).map_err(err_str)?;
            let w = rel(a.d_te, b.d_te)
                .max(rel(a.d_tm, b.d_tm))
                .max(rel(a.go_total, b.go_total));
            ensure!(
                w < 1e-9,
                "closed form vs round-trip sum disagrees at q = {q}: rel {w:.3e}"
            );
            worst_sum = worst_sum.max(w);
        }
        let mut worst_tr = 0.0f64;
        for &(r, u) in &[(1u32, 1.0), (2, 0.5), (3, 2.0)] {
            let pt = SpectralPoint::from_q(u / f64::from(r), r);
            let via = perfreq::trace_via_integrand(&pt, 1e-3).map_err(err_str)?;
            let (te, tm, go_pp) = perfreq::trace_ntlo(&pt).map_err(err_str)?;
            let w = rel(via, te + tm + 2.0 * go_pp);
            ensure!(
                w < 1e-8,
                "trace quadrature disagrees at (r, u) = ({r}, {u}): rel {w:.3e}"
            );
            worst_tr = worst_tr.max(w);
        }
        let secs = within_budget(start, 60.0)?;
        Ok(format!(
            "componentwise closed vs summed rel <= {worst_sum:.2e} at q in {{0.3, 1, 3}}; \
             integrand-quadrature trace rel <= {worst_tr:.2e} at three (r, u) points; {secs:.2} s"
        ))
    })());
}

// Criterion 4: at x = 1e-3 the zero-temperature NTLO correction over the
// proximity energy equals theta_1 x with theta_1 = 1/3 - 20/pi^2.
#[test]
fn criterion_4_zero_temperature_coefficient() {
    report(4, "zero-temperature linear coefficient", (|| {
        let start = Instant::now();
        let x = 1e-3;
        let zt = perfreq::zero_temp_ntlo(x).map_err(err_str)?;
        let pfa0 = -PI.powi(3) / (720.0 * x);
        let theta1 = 1.0 / 3.0 - 20.0 / (PI * PI);
        let ratio = zt / pfa0;
        let dev = rel(ratio, theta1 * x);
        ensure!(
            dev < 1e-3,
            "NTLO/PFA ratio {ratio:.8e} vs theta_1 x = {:.8e}: rel {dev:.3e}",
            theta1 * x
        );
        let secs = within_budget(start, 60.0)?;
        Ok(format!(
            "NTLO/PFA = {ratio:.6e} matches theta_1 x = {:.6e} to {dev:.2e} \
             (theta_1 = {theta1:.10}); {secs:.2} s",
            theta1 * x
        ))
    })());
}

// Criterion 5: the thermal beyond-PFA correction at (x, tau) = (1e-3, 0.03)
// matches its closed form, the positive-mode share stays positive across
// tau in [0.01, 0.3], and the full beyond-PFA ratio sits near a factor two.
#[test]
fn criterion_5_thermal_delta_and_factor_two() {
    report(5, "thermal delta law and beyond-PFA factor", (|| {
        let start = Instant::now();
        let d = thermo::delta(1e-3, 3e-2).map_err(err_str)?;
        let gap = (d.delta_formula - (-1.191e-3)).abs();
        ensure!(
            gap < 1e-6,
            "closed-form delta {:.8e} misses -1.191e-3 by {gap:.3e}",
            d.delta_formula
        );
        let taus = [0.01, 0.02, 0.03, 0.05, 0.08, 0.1, 0.15, 0.2, 0.3];
        for &tau in &taus {
            let dn = thermo::delta(1e-3, tau).map_err(err_str)?.delta_n_positive;
            ensure!(
                dn > 0.0,
                "positive-mode share turned non-positive at tau = {tau}: {dn:.3e}"
            );
        }
        let bpr = thermo::beyond_pfa_ratio(1e-3, 3e-2).map_err(err_str)?;
        ensure!(
            (1.6..=2.6).contains(&bpr),
            "beyond-PFA ratio {bpr:.4} outside [1.6, 2.6]"
        );
        let secs = within_budget(start, 120.0)?;
        Ok(format!(
            "delta = {:.6e} within 1e-6 of -1.191e-3; positive-mode share > 0 on \
             tau in [0.01, 0.3] ({} points); beyond-PFA ratio {bpr:.4} in [1.6, 2.6]; {secs:.2} s",
            d.delta_formula,
            taus.len()
        ))
    })());
}

// Criterion 6: the saddle-point engine reproduces three analytic families:
// a pure Gaussian (no correction), the gamma-integral family (1/12 with a
// 1/R^2-closing quadrature gap), and a quartic perturbation (-3 alpha).
#[test]
fn criterion_6_saddle_point_families() {
    report(6, "saddle-point engine reference families", (|| {
        let start = Instant::now();
        let g = |_: &[f64]| 1.0;

        let f_gauss = |x: &[f64]| 0.5 * x[0] * x[0];
        let p = spa::SaddleProblem::new(1, &f_gauss, &g, vec![0.0], 30.0).map_err(err_str)?;
        let t = spa::derivative_tensors(&p, 0.01).map_err(err_str)?;
        let gauss_ntlo = spa::ntlo_spa(&p, &t).map_err(err_str)?;
        ensure!(
            gauss_ntlo.abs() <= 1e-13,
            "Gaussian correction should vanish, got {gauss_ntlo:.3e}"
        );

        let f_gamma = |x: &[f64]| x[0] - x[0].ln();
        let mut prev_scaled = f64::INFINITY;
        let mut gamma_c = 0.0;
        let mut last_scaled = 0.0;
        for &r in &[10.0f64, 20.0, 40.0, 80.0] {
            let p = spa::SaddleProblem::new(1, &f_gamma, &g, vec![1.0], r).map_err(err_str)?;
            let t = spa::derivative_tensors(&p, 0.01).map_err(err_str)?;
            let lo = spa::lo_spa(&p, &t).map_err(err_str)?;
            let ntlo = spa::ntlo_spa(&p, &t).map_err(err_str)?;
            gamma_c = ntlo / lo;
            ensure!(
                (gamma_c - 1.0 / 12.0).abs() < 1e-6,
                "gamma-family ratio {gamma_c:.10} misses 1/12 at R = {r}"
            );
            let quad_val = quad::integrate_to_inf(
                |u| (r * (u.ln() - u)).exp(),
                0.0,
                1e-12,
                0.0,
            )
            .map_err(err_str)?;
            let scaled = (quad_val - (lo + ntlo / r)).abs() * r * r;
            ensure!(
                scaled <= 1.3e-7 && scaled < prev_scaled,
                "R^2-scaled quadrature gap {scaled:.3e} at R = {r} is not small and shrinking"
            );
            prev_scaled = scaled;
            last_scaled = scaled;
        }

        let alpha = 0.01;
        let big_r = 50.0;
        let f_quartic = move |x: &[f64]| 0.5 * x[0] * x[0] + alpha * x[0].powi(4);
        let p = spa::SaddleProblem::new(1, &f_quartic, &g, vec![0.0], big_r).map_err(err_str)?;
        let t = spa::derivative_tensors(&p, 0.01).map_err(err_str)?;
        let lo = spa::lo_spa(&p, &t).map_err(err_str)?;
        let quartic_c = spa::ntlo_spa(&p, &t).map_err(err_str)? / lo;
        ensure!(
            (quartic_c - (-3.0 * alpha)).abs() < 1e-6,
            "quartic ratio {quartic_c:.10} misses -3 alpha = {:.4}",
            -3.0 * alpha
        );
        let quad_val = 2.0
            * quad::integrate_to_inf(
                move |u| (-big_r * (0.5 * u * u + alpha * u.powi(4))).exp(),
                0.0,
                1e-13,
                0.0,
            )
            .map_err(err_str)?;
        let quartic_c_quad = (quad_val / lo - 1.0) * big_r;
        // Independent analytic reference: expanding exp(-R alpha x^4) in the
        // Gaussian moments <x^{4k}> = (4k-1)!!/R^{2k} gives
        // C(R) = sum_{k>=1} (-alpha)^k (4k-1)!! / (k! R^{k-1}),
        // whose k = 1 term is the engine's -3 alpha.
        let mut c_series = 0.0f64;
        let mut dfact = 1.0f64;
        let mut kfact = 1.0f64;
        let mut apow = 1.0f64;
        for k in 1..=6u32 {
            let kk = f64::from(k);
            dfact *= (4.0 * kk - 3.0) * (4.0 * kk - 1.0);
            kfact *= kk;
            apow *= -alpha;
            c_series += apow * dfact / (kfact * big_r.powi(k as i32 - 1));
        }
        ensure!(
            (quartic_c_quad - c_series).abs() < 1e-9,
            "quadrature-extracted quartic weight {quartic_c_quad:.12} misses the \
             moment-series value {c_series:.12}"
        );
        let secs = within_budget(start, 60.0)?;
        Ok(format!(
            "Gaussian correction {gauss_ntlo:.1e}; gamma ratio {gamma_c:.10} vs 1/12 with \
             R^2-scaled gap down to {last_scaled:.2e}; quartic ratio {quartic_c:.8} vs -0.03 \
             (quadrature extraction {quartic_c_quad:.8} vs moment series {c_series:.8}); \
             {secs:.2} s"
        ))
    })());
}

// Criterion 7: every special function with two independent evaluation routes
// agrees across its switchover, and the multipole sum matches its defining
// series.
#[test]
fn criterion_7_special_function_cross_checks() {
    report(7, "special-function two-method agreement", (|| {
        let start = Instant::now();
        let checks = specfun::two_method_checks();
        ensure!(!checks.is_empty(), "no two-method checks were produced");
        let mut worst = 0.0f64;
        let mut worst_name = "";
        for c in &checks {
            if c.rel_diff > worst {
                worst = c.rel_diff;
                worst_name = c.name;
            }
            ensure!(
                c.rel_diff <= 1e-11,
                "{} disagrees across methods at {}: rel {:.3e}",
                c.name, c.point, c.rel_diff
            );
        }
        let mut worst_series = 0.0f64;
        for &y in &[0.5, 3.0, 10.0, 30.0] {
            let closed = specfun::multipole_sum_a(y, false).map_err(err_str)?;
            // The defining series, summed term by term.
            let mut sum = 0.0;
            let mut pow = y * y / 2.0; // y^2 / 2!
            let mut l = 1.0f64;
            loop {
                sum += pow * l / (l + 1.0);
                l += 1.0;
                pow *= y * y / ((2.0 * l - 1.0) * (2.0 * l));
                if pow < 1e-18 * sum.abs() || l > 400.0 {
                    break;
                }
            }
            let w = rel(sum, closed);
            ensure!(
                w < 1e-13,
                "multipole closed form vs defining series at y = {y}: rel {w:.3e}"
            );
            worst_series = worst_series.max(w);
        }
        let secs = within_budget(start, 10.0)?;
        Ok(format!(
            "{} two-method checks agree to <= {worst:.2e} (worst: {worst_name}); \
             multipole series rel <= {worst_series:.2e} at y in {{0.5, 3, 10, 30}}; {secs:.2} s",
            checks.len()
        ))
    })());
}

// Criterion 8: the thermal-correction sweep is bit-for-bit reproducible
// across worker counts.
#[test]
fn criterion_8_deterministic_parallel_sweeps() {
    report(8, "worker-count determinism", (|| {
        let start = Instant::now();
        let exe = env!("CARGO_BIN_EXE_casimir");
        let dir = tempfile::tempdir().map_err(|e| format!("tempdir failed: {e}"))?;
        let mut outputs = Vec::new();
        for &workers in &[1usize, 8] {
            let path = dir.path().join(format!("fig3-w{workers}.csv"));
            let status = Command::new(exe)
                .args([
                    "fig3",
                    "--workers",
                    &workers.to_string(),
                    "--out",
                    path.to_str().unwrap(),
                ])
                .status()
                .map_err(|e| format!("failed to launch the binary: {e}"))?;
            ensure!(
                status.success(),
                "fig3 with {workers} workers exited with {status}"
            );
            outputs.push(std::fs::read(&path).map_err(|e| format!("read failed: {e}"))?);
        }
        ensure!(!outputs[0].is_empty(), "the sweep produced an empty file");
        ensure!(
            outputs[0] == outputs[1],
            "outputs differ between 1 and 8 workers ({} vs {} bytes)",
            outputs[0].len(),
            outputs[1].len()
        );
        let rows = outputs[0]
            .split(|&b| b == b'\n')
            .filter(|l| !l.is_empty() && l[0] != b'#')
            .count();
        let secs = within_budget(start, 120.0)?;
        Ok(format!(
            "fig3 output byte-identical for 1 and 8 workers ({} bytes, {rows} data rows); \
             {secs:.2} s",
            outputs[0].len()
        ))
    })());
}
