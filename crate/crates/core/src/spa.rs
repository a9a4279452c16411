//! Saddle-point (Laplace) expansion of exponentially peaked integrals.
//!
//! Evaluates integrals of the form
//!
//! ```text
//! I(R) = \int g(x) exp(-R f(x)) d^d x
//! ```
//!
//! for large `R` around an interior non-degenerate minimum of `f`, to leading
//! order and to next-to-leading order in `1/R`. Derivatives of `f` and `g`
//! through fourth order are formed by Richardson-refined central differences,
//! so callers only supply plain evaluators.
//!
//! Also provides the eigenvalue spectrum of the cyclic second-difference form
//! that appears when a product of identical single-reflection factors is
//! expanded around its diagonal saddle.

use std::collections::HashMap;

use nalgebra::{Cholesky, DMatrix};

use crate::error::{Error, Result};

/// A saddle-point evaluation request: minimize `f`, weight by `g`.
///
/// `sp` must be an interior stationary point of `f` with positive definite
/// Hessian; [`validate`] checks both numerically. `large_param` is the
/// exponent scale `R`.
pub struct SaddleProblem<'a> {
    pub dim: usize,
    pub f: &'a dyn Fn(&[f64]) -> f64,
    pub g: &'a dyn Fn(&[f64]) -> f64,
    pub sp: Vec<f64>,
    pub large_param: f64,
}

impl<'a> SaddleProblem<'a> {
    pub fn new(
        dim: usize,
        f: &'a dyn Fn(&[f64]) -> f64,
        g: &'a dyn Fn(&[f64]) -> f64,
        sp: Vec<f64>,
        large_param: f64,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("saddle problem dimension must be at least 1"));
        }
        if sp.len() != dim {
            return Err(Error::config(format!(
                "saddle point has {} coordinates but dimension is {}",
                sp.len(),
                dim
            )));
        }
        if !(large_param.is_finite() && large_param > 0.0) {
            return Err(Error::config("large_param must be finite and positive"));
        }
        Ok(Self { dim, f, g, sp, large_param })
    }
}

/// Derivatives of `f` and `g` at the saddle point.
///
/// `third` and `fourth` are dense fully symmetric tensors in row-major
/// layout (`dim^3` and `dim^4` entries); every index permutation of an entry
/// holds the identical value by construction.
#[derive(Debug, Clone)]
pub struct DerivativeTensors {
    pub dim: usize,
    pub f_grad: Vec<f64>,
    pub hessian: DMatrix<f64>,
    pub third: Vec<f64>,
    pub fourth: Vec<f64>,
    pub g_val: f64,
    pub g_grad: Vec<f64>,
    pub g_hess: DMatrix<f64>,
}

#[inline]
fn i3(d: usize, i: usize, j: usize, k: usize) -> usize {
    (i * d + j) * d + k
}

#[inline]
fn i4(d: usize, i: usize, j: usize, k: usize, l: usize) -> usize {
    ((i * d + j) * d + k) * d + l
}

/// Central-difference stencil (offsets, coefficients) for one derivative
/// order at unit step.
fn stencil_1d(order: usize) -> (&'static [i32], &'static [f64]) {
    match order {
        1 => (&[-1, 1], &[-0.5, 0.5]),
        2 => (&[-1, 0, 1], &[1.0, -2.0, 1.0]),
        3 => (&[-2, -1, 1, 2], &[-0.5, 1.0, -1.0, 0.5]),
        4 => (&[-2, -1, 0, 1, 2], &[1.0, -4.0, 6.0, -4.0, 1.0]),
        _ => unreachable!("stencil order out of range"),
    }
}

/// One tensor-product stencil application for a mixed partial derivative.
///
/// `axes` lists the distinct coordinates involved, `orders` the derivative
/// order along each, `steps` the step size along each.
fn apply_stencils(
    func: &dyn Fn(&[f64]) -> f64,
    sp: &[f64],
    axes: &[usize],
    orders: &[usize],
    steps: &[f64],
) -> Result<f64> {
    let parts: Vec<(&[i32], &[f64])> = orders.iter().map(|&o| stencil_1d(o)).collect();
    let total: usize = parts.iter().map(|p| p.0.len()).product();
    let mut acc = 0.0;
    let mut pt = vec![0.0; sp.len()];
    for lin in 0..total {
        let mut rem = lin;
        pt.copy_from_slice(sp);
        let mut coeff = 1.0;
        for (a, &axis) in axes.iter().enumerate() {
            let n = parts[a].0.len();
            let pick = rem % n;
            rem /= n;
            pt[axis] += f64::from(parts[a].0[pick]) * steps[a];
            coeff *= parts[a].1[pick];
        }
        let v = func(&pt);
        if !v.is_finite() {
            return Err(Error::numeric(format!(
                "non-finite evaluation at {pt:?} while forming finite differences"
            )));
        }
        acc += coeff * v;
    }
    let mut denom = 1.0;
    for (a, &o) in orders.iter().enumerate() {
        denom *= steps[a].powi(o as i32);
    }
    Ok(acc / denom)
}

/// Mixed partial with two-stage Richardson refinement (h, 2h, 4h), lifting
/// the O(h^2) stencils to O(h^6).
fn refined_deriv(
    func: &dyn Fn(&[f64]) -> f64,
    sp: &[f64],
    axes: &[usize],
    orders: &[usize],
    base_steps: &[f64],
) -> Result<f64> {
    let eval = |scale: f64| -> Result<f64> {
        let steps: Vec<f64> = base_steps.iter().map(|h| h * scale).collect();
        apply_stencils(func, sp, axes, orders, &steps)
    };
    let d1 = eval(1.0)?;
    let d2 = eval(2.0)?;
    let d4 = eval(4.0)?;
    let r1 = (4.0 * d1 - d2) / 3.0;
    let r2 = (4.0 * d2 - d4) / 3.0;
    Ok((16.0 * r1 - r2) / 15.0)
}

/// Collapse a sorted multi-index into (distinct axes, per-axis orders).
fn group_sorted(indices: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut axes: Vec<usize> = Vec::with_capacity(indices.len());
    let mut ords: Vec<usize> = Vec::with_capacity(indices.len());
    for &i in indices {
        if axes.last() == Some(&i) {
            *ords.last_mut().expect("non-empty") += 1;
        } else {
            axes.push(i);
            ords.push(1);
        }
    }
    (axes, ords)
}

/// Numerically differentiate `f` and `g` of a saddle problem at its saddle
/// point, through fourth order for `f` and second order for `g`.
///
/// `step_scale` sets the base step `h_i = step_scale * max(1, |sp_i|)`;
/// values near 0.01 balance truncation against roundoff for smooth O(1)
/// functions. Any non-finite evaluation aborts with a numeric error naming
/// the offending point.
pub fn derivative_tensors(p: &SaddleProblem, step_scale: f64) -> Result<DerivativeTensors> {
    if !(step_scale.is_finite() && step_scale > 0.0 && step_scale <= 0.2) {
        return Err(Error::config(
            "step_scale must lie in (0, 0.2]; the stencil spans 8 base steps",
        ));
    }
    let d = p.dim;
    let sp = &p.sp;
    let h: Vec<f64> = sp.iter().map(|&c| step_scale * c.abs().max(1.0)).collect();
    let steps_for = |axes: &[usize]| -> Vec<f64> { axes.iter().map(|&a| h[a]).collect() };

    let mut f_grad = vec![0.0; d];
    for (i, gi) in f_grad.iter_mut().enumerate() {
        *gi = refined_deriv(p.f, sp, &[i], &[1], &[h[i]])?;
    }

    let mut hessian = DMatrix::zeros(d, d);
    let mut g_hess = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let (axes, ords) = group_sorted(&[i, j]);
            let steps = steps_for(&axes);
            let vf = refined_deriv(p.f, sp, &axes, &ords, &steps)?;
            let vg = refined_deriv(p.g, sp, &axes, &ords, &steps)?;
            hessian[(i, j)] = vf;
            hessian[(j, i)] = vf;
            g_hess[(i, j)] = vg;
            g_hess[(j, i)] = vg;
        }
    }

    let mut sorted3: HashMap<[usize; 3], f64> = HashMap::new();
    for i in 0..d {
        for j in i..d {
            for k in j..d {
                let (axes, ords) = group_sorted(&[i, j, k]);
                let v = refined_deriv(p.f, sp, &axes, &ords, &steps_for(&axes))?;
                sorted3.insert([i, j, k], v);
            }
        }
    }
    let mut third = vec![0.0; d * d * d];
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                let mut key = [i, j, k];
                key.sort_unstable();
                third[i3(d, i, j, k)] = sorted3[&key];
            }
        }
    }

    let mut sorted4: HashMap<[usize; 4], f64> = HashMap::new();
    for i in 0..d {
        for j in i..d {
            for k in j..d {
                for l in k..d {
                    let (axes, ords) = group_sorted(&[i, j, k, l]);
                    let v = refined_deriv(p.f, sp, &axes, &ords, &steps_for(&axes))?;
                    sorted4.insert([i, j, k, l], v);
                }
            }
        }
    }
    let mut fourth = vec![0.0; d * d * d * d];
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    let mut key = [i, j, k, l];
                    key.sort_unstable();
                    fourth[i4(d, i, j, k, l)] = sorted4[&key];
                }
            }
        }
    }

    let g_val = (p.g)(sp.as_slice());
    if !g_val.is_finite() {
        return Err(Error::numeric(format!(
            "non-finite weight evaluation at the saddle point {sp:?}"
        )));
    }
    let mut g_grad = vec![0.0; d];
    for (i, gi) in g_grad.iter_mut().enumerate() {
        *gi = refined_deriv(p.g, sp, &[i], &[1], &[h[i]])?;
    }

    Ok(DerivativeTensors { dim: d, f_grad, hessian, third, fourth, g_val, g_grad, g_hess })
}

/// Check that `sp` is a genuine non-degenerate minimum: the gradient of `f`
/// vanishes to `grad_tol` and the Hessian admits a Cholesky factorization.
pub fn validate(p: &SaddleProblem, t: &DerivativeTensors, grad_tol: f64) -> Result<()> {
    if !(grad_tol.is_finite() && grad_tol > 0.0) {
        return Err(Error::config("grad_tol must be finite and positive"));
    }
    let gnorm = t.f_grad.iter().map(|v| v * v).sum::<f64>().sqrt();
    if gnorm > grad_tol {
        return Err(Error::domain(format!(
            "stationarity violated at {:?}: |grad f| = {gnorm:.3e} exceeds tolerance {grad_tol:.3e}",
            p.sp
        )));
    }
    if Cholesky::new(t.hessian.clone()).is_none() {
        return Err(Error::numeric(
            "Hessian at the saddle point is not positive definite; a flat or unstable \
             direction requires a manifold-reduced treatment instead of this routine",
        ));
    }
    Ok(())
}

fn hessian_cholesky(t: &DerivativeTensors) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    Cholesky::new(t.hessian.clone()).ok_or_else(|| {
        Error::numeric(
            "Hessian at the saddle point is singular or not positive definite; the \
             quadratic approximation degenerates, use a manifold-reduced expansion",
        )
    })
}

/// Leading-order (Gaussian) saddle-point value
/// `(2 pi / R)^{d/2} exp(-R f(sp)) g(sp) / sqrt(det H)`.
pub fn lo_spa(p: &SaddleProblem, t: &DerivativeTensors) -> Result<f64> {
    let chol = hessian_cholesky(t)?;
    let det = chol.determinant();
    if !(det.is_finite() && det > 0.0) {
        return Err(Error::numeric(format!(
            "Hessian determinant {det:.3e} unusable for the Gaussian normalization"
        )));
    }
    let d = p.dim as f64;
    let r = p.large_param;
    let val = (2.0 * std::f64::consts::PI / r).powf(d / 2.0)
        * (-r * (p.f)(p.sp.as_slice())).exp()
        * t.g_val
        / det.sqrt();
    if !val.is_finite() {
        return Err(Error::numeric(
            "leading-order saddle value overflowed; rescale f by a constant offset",
        ));
    }
    Ok(val)
}

/// Next-to-leading-order correction `I_NTLO`, defined so that
/// `I(R) ~ I_LO + I_NTLO / R`.
///
/// The correction contracts the third and fourth derivative tensors of `f`
/// and the derivatives of `g` against the inverse Hessian:
///
/// ```text
/// I_NTLO = I_LO * [ (1/2) g_ij A_ij / g - (1/2) g_l f_ijk A_ij A_kl / g
///                   - (1/8) f_ijkl A_ij A_kl
///                   + (1/8) f_ijk f_lmn A_ij A_kn A_lm
///                   + (1/12) f_ijk f_lmn A_il A_jm A_kn ]
/// ```
///
/// with `A = H^{-1}` and summation over repeated indices.
pub fn ntlo_spa(p: &SaddleProblem, t: &DerivativeTensors) -> Result<f64> {
    if t.g_val == 0.0 {
        return Err(Error::domain(
            "weight function vanishes at the saddle point; the relative NTLO expansion is undefined",
        ));
    }
    let i_lo = lo_spa(p, t)?;
    let chol = hessian_cholesky(t)?;
    let a = chol.inverse();
    let d = p.dim;
    let g0 = t.g_val;

    let mut term_ghess = 0.0;
    for i in 0..d {
        for j in 0..d {
            term_ghess += t.g_hess[(i, j)] * a[(i, j)];
        }
    }

    let mut term_ggrad = 0.0;
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                let f3 = t.third[i3(d, i, j, k)];
                if f3 == 0.0 {
                    continue;
                }
                for l in 0..d {
                    term_ggrad += t.g_grad[l] * f3 * a[(i, j)] * a[(k, l)];
                }
            }
        }
    }

    let mut term_f4 = 0.0;
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    term_f4 += t.fourth[i4(d, i, j, k, l)] * a[(i, j)] * a[(k, l)];
                }
            }
        }
    }

    let mut term_a = 0.0;
    let mut term_b = 0.0;
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                let f3a = t.third[i3(d, i, j, k)];
                if f3a == 0.0 {
                    continue;
                }
                for l in 0..d {
                    for m in 0..d {
                        for n in 0..d {
                            let f3b = t.third[i3(d, l, m, n)];
                            if f3b == 0.0 {
                                continue;
                            }
                            term_a += f3a * f3b * a[(i, j)] * a[(k, n)] * a[(l, m)];
                            term_b += f3a * f3b * a[(i, l)] * a[(j, m)] * a[(k, n)];
                        }
                    }
                }
            }
        }
    }

    let c = 0.5 * term_ghess / g0 - 0.5 * term_ggrad / g0 - term_f4 / 8.0
        + term_a / 8.0
        + term_b / 12.0;
    Ok(i_lo * c)
}

/// One-dimensional NTLO correction through the explicit four-term formula
///
/// ```text
/// C = g''/(2 g f'') - f''' g'/(2 g f''^2) - f''''/(8 f''^2) + 5 f'''^2/(24 f''^3)
/// ```
///
/// This is an independent code path from the tensor contraction in
/// [`ntlo_spa`]; the two must agree to full precision for `dim == 1`.
pub fn ntlo_spa_1d(p: &SaddleProblem, t: &DerivativeTensors) -> Result<f64> {
    if p.dim != 1 {
        return Err(Error::config("explicit four-term formula applies to dim == 1 only"));
    }
    if t.g_val == 0.0 {
        return Err(Error::domain(
            "weight function vanishes at the saddle point; the relative NTLO expansion is undefined",
        ));
    }
    let i_lo = lo_spa(p, t)?;
    let f2 = t.hessian[(0, 0)];
    if f2 <= 0.0 {
        return Err(Error::numeric(
            "second derivative at the saddle point must be positive for a minimum",
        ));
    }
    let f3 = t.third[0];
    let f4 = t.fourth[0];
    let g0 = t.g_val;
    let g1 = t.g_grad[0];
    let g2 = t.g_hess[(0, 0)];
    let c = g2 / (2.0 * g0 * f2) - f3 * g1 / (2.0 * g0 * f2 * f2) - f4 / (8.0 * f2 * f2)
        + 5.0 * f3 * f3 / (24.0 * f2 * f2 * f2);
    Ok(i_lo * c)
}

/// Eigenvalues of the cyclic second-difference quadratic form of size `r`
/// scaled by `1/(2 kappa)`:
///
/// ```text
/// lambda_j = (2 / kappa) sin^2(pi j / r),   j = 0..r-1
/// ```
///
/// The zero mode `lambda_0 = 0` is exact: it is the overall translation of
/// the cyclic coordinates, which must be integrated out separately rather
/// than treated as a Gaussian direction.
pub fn circulant_eigenvalues(r: usize, kappa: f64) -> Result<Vec<f64>> {
    if r == 0 {
        return Err(Error::domain("cycle length must be at least 1"));
    }
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(Error::domain("kappa must be finite and positive"));
    }
    let mut out = Vec::with_capacity(r);
    for j in 0..r {
        if j == 0 {
            out.push(0.0);
        } else {
            let s = (std::f64::consts::PI * j as f64 / r as f64).sin();
            out.push(2.0 / kappa * s * s);
        }
    }
    Ok(out)
}
