//! Self-contained special-function kernel.
//!
//! Every function is evaluated by two independent algorithms (series on one
//! side of a switchover, continued fraction / closed form / asymptotics on the
//! other); [`two_method_checks`] exposes the agreement at the switchover
//! points so the validation suite can assert it.

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use std::sync::OnceLock;

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const ZETA2: f64 = 1.644_934_066_848_226_4;
const ZETA3: f64 = 1.202_056_903_159_594_3;
const ZETA4: f64 = 1.082_323_233_711_138_2;

/// Requested evaluation accuracy for the adaptive pieces of the crate.
#[derive(Debug, Clone, Copy)]
pub struct Accuracy {
    pub rel_tol: f64,
    pub abs_floor: f64,
}

impl Default for Accuracy {
    fn default() -> Self {
        Accuracy { rel_tol: 1e-12, abs_floor: 1e-300 }
    }
}

impl Accuracy {
    pub fn new(rel_tol: f64, abs_floor: f64) -> Result<Self> {
        if !(rel_tol > 0.0 && rel_tol <= 1e-6) {
            return Err(Error::config(format!("rel_tol must lie in (0, 1e-6], got {rel_tol}")));
        }
        if !(abs_floor > 0.0) {
            return Err(Error::config(format!("abs_floor must be positive, got {abs_floor}")));
        }
        Ok(Accuracy { rel_tol, abs_floor })
    }
}

/// Riemann zeta(3).
pub fn zeta3() -> f64 {
    ZETA3
}

/// zeta(2) = pi^2/6, used by the trilogarithm expansion near z = 1.
pub fn zeta2() -> f64 {
    ZETA2
}

/// zeta(4) = pi^4/90.
pub fn zeta4() -> f64 {
    ZETA4
}

// ---------------------------------------------------------------------------
// Exponential integral E1
// ---------------------------------------------------------------------------

const E1_SWITCH: f64 = 1.5;

/// Power series E1(u) = -gamma - ln u + sum_{k>=1} (-1)^{k+1} u^k / (k k!),
/// accurate for small u.
fn e1_series(u: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..200 {
        let kf = k as f64;
        term *= -u / kf;
        let add = -term / kf;
        sum += add;
        if add.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    -EULER_GAMMA - u.ln() + sum
}

/// Modified Lentz evaluation of the continued fraction
/// e^u E1(u) = 1/(u+1- 1^2/(u+3- 2^2/(u+5- ...))), accurate for large u.
/// Returns the scaled value e^u E1(u).
fn e1_cf_scaled(u: f64) -> f64 {
    let mut b = u + 1.0;
    let mut c = 1e308;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..400 {
        let a = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

fn e1_domain(u: f64) -> Result<()> {
    if !(u > 0.0) {
        return Err(Error::domain(format!("exp_int_e1 requires u > 0, got {u}")));
    }
    Ok(())
}

/// Exponential integral E1(u) = int_1^inf e^{-u t}/t dt for u > 0.
pub fn exp_int_e1(u: f64) -> Result<f64> {
    e1_domain(u)?;
    if u < E1_SWITCH {
        Ok(e1_series(u))
    } else {
        Ok(e1_cf_scaled(u) * (-u).exp())
    }
}

/// Scaled exponential integral e^u E1(u); stays representable for large u,
/// where E1 itself underflows.
pub fn exp_int_e1_scaled(u: f64) -> Result<f64> {
    e1_domain(u)?;
    if u < E1_SWITCH {
        Ok(e1_series(u) * u.exp())
    } else {
        Ok(e1_cf_scaled(u))
    }
}

// ---------------------------------------------------------------------------
// Modified Bessel function K1
// ---------------------------------------------------------------------------

const K1_SWITCH: f64 = 2.0;

/// Ascending series with log term,
/// K1(z) = 1/z + ln(z/2) I1(z) - (z/4) sum_k [psi(k+1)+psi(k+2)] (z^2/4)^k / (k!(k+1)!),
/// accurate for small z.
fn k1_series(z: f64) -> f64 {
    let q = z * z / 4.0;
    let mut term = 1.0; // q^k / (k! (k+1)!)
    let mut psi1 = -EULER_GAMMA; // psi(k+1)
    let mut psi2 = 1.0 - EULER_GAMMA; // psi(k+2)
    let mut i1 = 0.0;
    let mut psum = 0.0;
    for k in 0..200 {
        i1 += term;
        let add = (psi1 + psi2) * term;
        psum += add;
        let kf = k as f64;
        term *= q / ((kf + 1.0) * (kf + 2.0));
        psi1 += 1.0 / (kf + 1.0);
        psi2 += 1.0 / (kf + 2.0);
        if term * (psi1 + psi2).abs() < 1e-18 * i1.abs().max(psum.abs()).max(1e-300) {
            break;
        }
    }
    i1 *= z / 2.0;
    1.0 / z + (z / 2.0).ln() * i1 - (z / 4.0) * psum
}

/// Steed/Temme continued fraction for z >= 2. Returns the scaled value e^z K1(z),
/// accurate to machine precision.
fn k1_cf2_scaled(z: f64) -> f64 {
    let a1 = 0.25; // 1/4 - mu^2 with mu = 0
    let mut b = 2.0 * (1.0 + z);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..10_000 {
        a -= 2.0 * (i as f64 - 1.0);
        c = -a * c / i as f64;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-16 {
            break;
        }
    }
    h *= a1;
    // e^z K0(z) = sqrt(pi/2z)/s, then the recurrence K1 = K0 (z + 1/2 - h)/z
    let k0_scaled = (std::f64::consts::PI / (2.0 * z)).sqrt() / s;
    k0_scaled * (z + 0.5 - h) / z
}

fn k1_domain(z: f64) -> Result<()> {
    if !(z > 0.0) {
        return Err(Error::domain(format!("bessel_k1 requires z > 0, got {z}")));
    }
    Ok(())
}

/// Modified Bessel function of the second kind K1(z) for z > 0.
/// Underflows gracefully to 0 for z beyond ~700; use [`bessel_k1_scaled`] there.
pub fn bessel_k1(z: f64) -> Result<f64> {
    k1_domain(z)?;
    if z < K1_SWITCH {
        Ok(k1_series(z))
    } else {
        Ok(k1_cf2_scaled(z) * (-z).exp())
    }
}

/// Scaled modified Bessel function e^z K1(z).
pub fn bessel_k1_scaled(z: f64) -> Result<f64> {
    k1_domain(z)?;
    if z < K1_SWITCH {
        Ok(k1_series(z) * z.exp())
    } else {
        Ok(k1_cf2_scaled(z))
    }
}

// ---------------------------------------------------------------------------
// Trilogarithm on [0, 1]
// ---------------------------------------------------------------------------

// Above this argument the direct series needs so many terms that rounding
// competes with the requested tolerance; switch to the expansion around z = 1.
const LI3_NEAR_ONE_Q: f64 = 1e-3;

/// Direct series Li3(z) = sum_k z^k/k^3, compensated summation.
fn li3_series(z: f64) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut zp = 1.0;
    for k in 1..2_000_000u64 {
        zp *= z;
        let kf = k as f64;
        let term = zp / (kf * kf * kf);
        // Kahan update keeps the long near-one sums at machine accuracy
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if term < 1e-17 * sum.max(1e-300) {
            break;
        }
    }
    sum
}

/// Expansion of Li3(e^{-q}) around q = 0:
/// zeta(3) - zeta(2) q + (3/2 - ln q) q^2/2 + q^3/12 - q^4/288 + q^6/86400 - ...
fn li3_near_one(q: f64) -> f64 {
    debug_assert!(q >= 0.0);
    if q == 0.0 {
        return ZETA3;
    }
    let q2 = q * q;
    ZETA3 - ZETA2 * q + (1.5 - q.ln()) * q2 / 2.0 + q2 * q / 12.0 - q2 * q2 / 288.0
        + q2 * q2 * q2 / 86400.0
}

/// Trilogarithm Li3(z) for z in [0, 1].
pub fn trilog(z: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&z) || z.is_nan() {
        return Err(Error::domain(format!("trilog requires z in [0, 1], got {z}")));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    let q = -z.ln();
    if q < LI3_NEAR_ONE_Q {
        Ok(li3_near_one(q))
    } else {
        Ok(li3_series(z))
    }
}

// ---------------------------------------------------------------------------
// Bernoulli numbers
// ---------------------------------------------------------------------------

fn bernoulli_table() -> &'static Vec<BigRational> {
    static TABLE: OnceLock<Vec<BigRational>> = OnceLock::new();
    TABLE.get_or_init(|| {
        // B_n from the defining recurrence sum_{k=0}^{n} C(n+1,k) B_k = 0, B_0 = 1
        let nmax = 40usize;
        let mut b: Vec<BigRational> = Vec::with_capacity(nmax + 1);
        b.push(BigRational::from_integer(BigInt::from(1)));
        for n in 1..=nmax {
            let mut acc = BigRational::zero();
            let mut binom = BigInt::from(1); // C(n+1, k), starting at k = 0
            for (k, bk) in b.iter().enumerate() {
                acc += BigRational::from_integer(binom.clone()) * bk;
                binom = binom * BigInt::from(n + 1 - k) / BigInt::from(k + 1);
            }
            // at k = n the running binom equals C(n+1,n) = n+1
            b.push(-acc / BigRational::from_integer(BigInt::from(n + 1)));
        }
        b
    })
}

/// Bernoulli number B_{2m} for 1 <= m <= 20, evaluated from the exact
/// rational recurrence.
pub fn bernoulli_2m(m: u32) -> Result<f64> {
    if !(1..=20).contains(&m) {
        return Err(Error::domain(format!("bernoulli_2m requires 1 <= m <= 20, got {m}")));
    }
    let b = &bernoulli_table()[2 * m as usize];
    b.to_f64().ok_or_else(|| Error::numeric("Bernoulli rational out of f64 range".to_string()))
}

// ---------------------------------------------------------------------------
// Zero-frequency multipole sum A(y)
// ---------------------------------------------------------------------------

// The closed form cancels heavily for small y where A(y) ~ y^2/4; the
// defining series is exact there and converges in a few terms.
const A_SERIES_SWITCH: f64 = 1.0;

/// Literal defining sum A(y) = sum_{l>=1} [l/(l+1)] y^{2l} / (2l)!.
fn multipole_series(y: f64) -> f64 {
    let y2 = y * y;
    let mut term = y2 / 2.0; // y^{2l}/(2l)! at l = 1
    let mut sum = 0.0;
    for l in 1..400u64 {
        let lf = l as f64;
        sum += lf / (lf + 1.0) * term;
        term *= y2 / ((2.0 * lf + 1.0) * (2.0 * lf + 2.0));
        if term < 1e-18 * sum.max(1e-300) {
            break;
        }
    }
    sum
}

/// Closed form A(y) = cosh y - (2/y) sinh y + (2/y^2)(cosh y - 1).
fn multipole_closed(y: f64) -> f64 {
    y.cosh() - 2.0 / y * y.sinh() + 2.0 / (y * y) * (y.cosh() - 1.0)
}

/// Closed form rewritten in e^{-y}-scaled hyperbolics: e^{-y} A(y) stays
/// bounded (limit 1/2) for arbitrarily large y.
fn multipole_closed_scaled(y: f64) -> f64 {
    let e2 = (-2.0 * y).exp();
    (1.0 + e2) / 2.0 - (1.0 - e2) / y + ((1.0 + e2) / 2.0 - (-y).exp()) * 2.0 / (y * y)
}

/// One-time guard: the closed form is a derived identity, so it is checked
/// against the literal series before first use.
fn multipole_self_test() -> std::result::Result<(), String> {
    for &y in &[0.5, 3.0, 10.0, 30.0] {
        let s = multipole_series(y);
        let c = multipole_closed(y);
        let rel = ((s - c) / s).abs();
        if rel > 1e-13 {
            return Err(format!(
                "multipole closed form disagrees with defining series at y={y}: \
                 series={s:e} closed={c:e} rel={rel:e}"
            ));
        }
    }
    Ok(())
}

/// Multipole sum A(y) of the zero-frequency TE kernel; `scaled` returns
/// e^{-y} A(y), valid up to y ~ 1e6 without overflow.
pub fn multipole_sum_a(y: f64, scaled: bool) -> Result<f64> {
    if !(y > 0.0) {
        return Err(Error::domain(format!("multipole_sum_a requires y > 0, got {y}")));
    }
    static SELF_TEST: OnceLock<std::result::Result<(), String>> = OnceLock::new();
    if let Err(msg) = SELF_TEST.get_or_init(multipole_self_test) {
        return Err(Error::numeric(msg.clone()));
    }
    let v = if y < A_SERIES_SWITCH {
        let a = multipole_series(y);
        if scaled {
            a * (-y).exp()
        } else {
            a
        }
    } else if scaled {
        multipole_closed_scaled(y)
    } else {
        multipole_closed(y)
    };
    Ok(v)
}

// ---------------------------------------------------------------------------
// Switchover agreement report
// ---------------------------------------------------------------------------

/// Two-method agreement record at a switchover point.
#[derive(Debug, Clone)]
pub struct TwoMethodCheck {
    pub name: &'static str,
    pub point: f64,
    pub method_a: f64,
    pub method_b: f64,
    pub rel_diff: f64,
}

fn check(name: &'static str, point: f64, a: f64, b: f64) -> TwoMethodCheck {
    let rel_diff = ((a - b) / a.abs().max(1e-300)).abs();
    TwoMethodCheck { name, point, method_a: a, method_b: b, rel_diff }
}

/// Evaluate every special function by both of its algorithms at the
/// switchover point. The validation suite asserts rel_diff <= 1e-11.
pub fn two_method_checks() -> Vec<TwoMethodCheck> {
    let u = E1_SWITCH;
    let z = K1_SWITCH;
    let zq = (-LI3_NEAR_ONE_Q).exp();
    let y = A_SERIES_SWITCH;
    vec![
        check("exp_int_e1 series vs continued fraction", u, e1_series(u), e1_cf_scaled(u) * (-u).exp()),
        check("bessel_k1 series vs continued fraction", z, k1_series(z), k1_cf2_scaled(z) * (-z).exp()),
        check("trilog series vs near-one expansion", zq, li3_series(zq), li3_near_one(LI3_NEAR_ONE_Q)),
        check("multipole_sum_a series vs closed form", y, multipole_series(y), multipole_closed(y)),
    ]
}
