//! The hypergeometric family `2F1(1, 1; 1 - α; x)` and the integrals
//!
//! ```text
//! I(u, α, β1, β2) = ∫_{β1}^{β2} z^{-1-α} (z - iu)^α dz
//! Ĩ(s, α, β1, β2) = ∫_{β1}^{β2} z^{-1-α} (z - s)^α dz
//! ```
//!
//! Everything is expressed through the single analytic kernel
//!
//! ```text
//! E(w) = ∫_0^w ((1 - t)^α - 1) / t dt,      w ∈ ℂ \ [1, ∞)
//! ```
//!
//! since the substitution `w = iu / z` turns `I` into
//! `log(β2/β1) + E(iu/β1) - E(iu/β2)`, and the antiderivative of the
//! `2F1(1,1;1-α;·)` closed form is `-E(1/x) - γ - ψ(-α) - Log(-1/x)`.
//!
//! `E` is evaluated by its Maclaurin series for `|w| <= 0.75`, by an expansion
//! in `1 - w` around the branch point, by an expansion in `1/w` for
//! `|w| >= 1.35` and by composite Gauss-Legendre in the remaining annulus.
//! Negative integer `α` has an elementary closed form.

use num_complex::Complex64;

use super::gamma::{digamma, EULER_GAMMA};
use super::quadrature::GaussLegendre;
use crate::error::{Error, Result};

const SERIES_RADIUS: f64 = 0.75;
const BRANCH_RADIUS: f64 = 0.5;
const ASYMPTOTIC_RADIUS: f64 = 1.35;
const HYP_SERIES_RADIUS: f64 = 0.8;
const HYP_REFLECT_RADIUS: f64 = 0.3;
const MAX_TERMS: usize = 5000;
const EPS: f64 = 1e-17;
const ANNULUS_PANELS: usize = 8;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn negative_integer(alpha: f64) -> Option<u32> {
    (alpha < 0.0 && alpha == alpha.round()).then(|| (-alpha) as u32)
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !alpha.is_finite() || alpha >= 1.0 || alpha == 0.0 {
        return Err(Error::param("alpha", format!("expected alpha in (0,1) or alpha < 0, got {alpha}")));
    }
    Ok(())
}

fn ln1p(z: Complex64) -> Complex64 {
    if z.norm() < 1e-4 {
        let z2 = z * z;
        z - z2 * 0.5 + z2 * z / 3.0 - z2 * z2 * 0.25
    } else {
        (z + 1.0).ln()
    }
}

fn expm1(z: Complex64) -> Complex64 {
    if z.norm() < 0.5 {
        let mut term = z;
        let mut sum = z;
        for k in 2..40 {
            term = term * z / k as f64;
            sum += term;
            if term.norm() < 1e-18 * sum.norm() {
                break;
            }
        }
        sum
    } else {
        z.exp() - 1.0
    }
}

/// `E(w) = ∫_0^w ((1 - t)^α - 1)/t dt` on the principal sheet.
pub fn power_log_integral(alpha: f64, w: Complex64) -> Result<Complex64> {
    check_alpha(alpha)?;
    if !w.re.is_finite() || !w.im.is_finite() {
        return Err(Error::Domain(format!("non-finite argument {w}")));
    }
    if w.im == 0.0 && w.re >= 1.0 {
        return Err(Error::Domain(format!("w = {} lies on the branch cut [1, ∞)", w.re)));
    }
    Ok(power_log_integral_unchecked(alpha, w))
}

fn power_log_integral_unchecked(alpha: f64, w: Complex64) -> Complex64 {
    if w == c(0.0, 0.0) {
        return w;
    }
    if let Some(m) = negative_integer(alpha) {
        return integer_closed_form(m, w);
    }
    let r = w.norm();
    if r <= SERIES_RADIUS {
        maclaurin(alpha, w)
    } else if (c(1.0, 0.0) - w).norm() <= BRANCH_RADIUS {
        branch_expansion(alpha, w)
    } else if r >= ASYMPTOTIC_RADIUS {
        inverse_expansion(alpha, w)
    } else {
        annulus_quadrature(alpha, w)
    }
}

// α = -m: ((1-t)^{-m} - 1)/t = Σ_{j=1}^{m} (1-t)^{-j}
fn integer_closed_form(m: u32, w: Complex64) -> Complex64 {
    let one_minus = c(1.0, 0.0) - w;
    let mut acc = -one_minus.ln();
    let inv = one_minus.inv();
    let mut pow = c(1.0, 0.0);
    for j in 2..=m {
        pow *= inv;
        acc += (pow - 1.0) / (j as f64 - 1.0);
    }
    acc
}

fn maclaurin(alpha: f64, w: Complex64) -> Complex64 {
    // (−α)_n / n! · w^n, summed with weight 1/n
    let mut term = w * (-alpha);
    let mut sum = term;
    for n in 1..MAX_TERMS {
        let nf = n as f64;
        term = term * w * ((nf - alpha) / (nf + 1.0));
        let add = term / (nf + 1.0);
        sum += add;
        if add.norm() <= EPS * sum.norm().max(1e-300) && n > 2 {
            break;
        }
    }
    sum
}

fn branch_expansion(alpha: f64, w: Complex64) -> Complex64 {
    // E(w) = -(ψ(α+1) + γ) - Σ_k [y^{α+k+1}/(α+k+1) - y^{k+1}/(k+1)],  y = 1 - w
    let y = c(1.0, 0.0) - w;
    let base = -(digamma(alpha + 1.0) + EULER_GAMMA);
    let mut frac_pow = (y.ln() * (alpha + 1.0)).exp();
    let mut int_pow = y;
    let mut sum = c(0.0, 0.0);
    for k in 0..MAX_TERMS {
        let kf = k as f64;
        let add = frac_pow / (alpha + kf + 1.0) - int_pow / (kf + 1.0);
        sum += add;
        if add.norm() <= EPS * sum.norm().max(1e-300) && k > 2 {
            break;
        }
        frac_pow *= y;
        int_pow *= y;
    }
    c(base, 0.0) - sum
}

fn inverse_expansion(alpha: f64, w: Complex64) -> Complex64 {
    // E(w) = -γ - ψ(-α) - Log(-w) + Σ_n C(α,n) (-w)^{α-n} / (α - n)
    let z = -w;
    let lz = z.ln();
    let lead = (lz * alpha).exp();
    let q = z.inv();
    let mut binom = 1.0;
    let mut qn = c(1.0, 0.0);
    let mut sum = c(0.0, 0.0);
    for n in 0..MAX_TERMS {
        let nf = n as f64;
        let add = qn * (binom / (alpha - nf));
        sum += add;
        if add.norm() <= EPS * sum.norm().max(1e-300) && n > 2 {
            break;
        }
        binom *= (alpha - nf) / (nf + 1.0);
        qn *= q;
    }
    c(-EULER_GAMMA - digamma(-alpha), 0.0) - lz + lead * sum
}

fn annulus_quadrature(alpha: f64, w: Complex64) -> Complex64 {
    let rule = GaussLegendre::n16();
    let h = 1.0 / ANNULUS_PANELS as f64;
    let mut acc = c(0.0, 0.0);
    for p in 0..ANNULUS_PANELS {
        let lo = p as f64 * h;
        acc += rule.integrate_complex(lo, lo + h, |tau| expm1(ln1p(-w * tau) * alpha) / tau);
    }
    acc
}

/// Real-argument version of [`power_log_integral`] for `w < 1`.
///
/// Runs entirely in real arithmetic so cumulant generating functions never
/// pick up spurious imaginary parts.
pub fn power_log_integral_real(alpha: f64, w: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !w.is_finite() || w >= 1.0 {
        return Err(Error::Domain(format!("w = {w} must be finite and < 1")));
    }
    if w == 0.0 {
        return Ok(0.0);
    }
    if let Some(m) = negative_integer(alpha) {
        let one_minus = 1.0 - w;
        let mut acc = -(-w).ln_1p();
        for j in 2..=m {
            acc += (one_minus.powi(1 - j as i32) - 1.0) / (j as f64 - 1.0);
        }
        return Ok(acc);
    }
    let value = if w.abs() <= SERIES_RADIUS {
        let mut term = -alpha * w;
        let mut sum = term;
        for n in 1..MAX_TERMS {
            let nf = n as f64;
            term *= w * (nf - alpha) / (nf + 1.0);
            let add = term / (nf + 1.0);
            sum += add;
            if add.abs() <= EPS * sum.abs() && n > 2 {
                break;
            }
        }
        sum
    } else if w > 0.0 {
        let y = 1.0 - w;
        let mut frac_pow = y.powf(alpha + 1.0);
        let mut int_pow = y;
        let mut sum = 0.0;
        for k in 0..MAX_TERMS {
            let kf = k as f64;
            let add = frac_pow / (alpha + kf + 1.0) - int_pow / (kf + 1.0);
            sum += add;
            if add.abs() <= EPS * sum.abs() && k > 2 {
                break;
            }
            frac_pow *= y;
            int_pow *= y;
        }
        -(digamma(alpha + 1.0) + EULER_GAMMA) - sum
    } else if w <= -ASYMPTOTIC_RADIUS {
        let z = -w;
        let q = 1.0 / z;
        let mut binom = 1.0;
        let mut qn = 1.0;
        let mut sum = 0.0;
        for n in 0..MAX_TERMS {
            let nf = n as f64;
            let add = qn * binom / (alpha - nf);
            sum += add;
            if add.abs() <= EPS * sum.abs() && n > 2 {
                break;
            }
            binom *= (alpha - nf) / (nf + 1.0);
            qn *= q;
        }
        -EULER_GAMMA - digamma(-alpha) - z.ln() + z.powf(alpha) * sum
    } else {
        let rule = GaussLegendre::n16();
        let h = 1.0 / ANNULUS_PANELS as f64;
        (0..ANNULUS_PANELS)
            .map(|p| {
                let lo = p as f64 * h;
                rule.integrate(lo, lo + h, |tau| (alpha * (-w * tau).ln_1p()).exp_m1() / tau)
            })
            .sum()
    };
    Ok(value)
}

fn hyp_series(alpha: f64, x: Complex64) -> Complex64 {
    let cc = 1.0 - alpha;
    let mut term = c(1.0, 0.0);
    let mut sum = term;
    for n in 0..MAX_TERMS {
        let nf = n as f64;
        term = term * x * ((nf + 1.0) / (cc + nf));
        sum += term;
        if term.norm() <= EPS * sum.norm() && n > 2 {
            break;
        }
    }
    sum
}

// 2F1(1, 1; 2 + α; y) for the 1 - x reflection
fn hyp_series_reflected(alpha: f64, y: Complex64) -> Complex64 {
    let cc = 2.0 + alpha;
    let mut term = c(1.0, 0.0);
    let mut sum = term;
    for n in 0..MAX_TERMS {
        let nf = n as f64;
        term = term * y * ((nf + 1.0) / (cc + nf));
        sum += term;
        if term.norm() <= EPS * sum.norm() && n > 2 {
            break;
        }
    }
    sum
}

// K(x) = -E(1/x) - γ - ψ(-α) - Log(-1/x); antiderivative of the 2F1 closed form
fn antiderivative_via_kernel(alpha: f64, w: Complex64) -> Complex64 {
    -power_log_integral_unchecked(alpha, w) - c(EULER_GAMMA + digamma(-alpha), 0.0) - (-w).ln()
}

/// Gauss hypergeometric function `2F1(1, 1; 1 - α; x)`, analytically continued
/// to `ℂ \ [1, ∞)`.
///
/// Uses the power series for `|x| <= 0.8`, the `1 - x` connection formula near
/// `x = 1` and otherwise the relation with the kernel `E(1/x)`.
pub fn hyp2f1_11(alpha: f64, x: Complex64) -> Result<Complex64> {
    check_alpha(alpha)?;
    if !x.re.is_finite() || !x.im.is_finite() {
        return Err(Error::Domain(format!("non-finite argument {x}")));
    }
    if x.im == 0.0 && x.re >= 1.0 {
        return Err(Error::Domain(format!("x = {} lies on the branch cut [1, ∞)", x.re)));
    }
    if x == c(0.0, 0.0) {
        return Ok(c(1.0, 0.0));
    }
    if x.norm() <= HYP_SERIES_RADIUS {
        return Ok(hyp_series(alpha, x));
    }
    let one_minus = c(1.0, 0.0) - x;
    if one_minus.norm() < HYP_REFLECT_RADIUS && negative_integer(alpha).is_none() {
        // Γ(c)Γ(c-a-b)/(Γ(c-a)Γ(c-b)) = α/(1+α),  Γ(c)Γ(a+b-c) = πα/sin(πα)
        let pi_a = std::f64::consts::PI * alpha;
        let regular = hyp_series_reflected(alpha, one_minus) * (alpha / (1.0 + alpha));
        let singular = (x.ln() * alpha).exp() * (one_minus.ln() * (-1.0 - alpha)).exp() * (pi_a / pi_a.sin());
        return Ok(regular + singular);
    }
    let w = x.inv();
    let k = antiderivative_via_kernel(alpha, w);
    let value = w * alpha * ((c(1.0, 0.0) - w).ln() * (-alpha - 1.0)).exp() * k;
    if !value.re.is_finite() || !value.im.is_finite() {
        return Err(Error::numerical("hyp2f1_11", format!("non-finite value at x = {x}, alpha = {alpha}")));
    }
    Ok(value)
}

// K(x) = (x/α)(1 - 1/x)^{α+1} 2F1(1,1;1-α;x)
fn antiderivative(alpha: f64, x: Complex64) -> Complex64 {
    if x.norm() <= HYP_SERIES_RADIUS {
        let w = x.inv();
        x / alpha * ((c(1.0, 0.0) - w).ln() * (alpha + 1.0)).exp() * hyp_series(alpha, x)
    } else {
        antiderivative_via_kernel(alpha, x.inv())
    }
}

fn check_betas(beta1: f64, beta2: f64) -> Result<()> {
    if !(beta1 > 0.0) || !beta1.is_finite() {
        return Err(Error::param("beta1", format!("must be positive, got {beta1}")));
    }
    if !(beta2 >= beta1) || !beta2.is_finite() {
        return Err(Error::param(
            "beta2",
            format!("must satisfy beta1 <= beta2, got beta1 = {beta1}, beta2 = {beta2}"),
        ));
    }
    Ok(())
}

/// `I(u, α, β1, β2) = ∫_{β1}^{β2} z^{-1-α}(z - iu)^α dz` through the
/// `2F1(1,1;1-α;-iβ/u)` closed form.
pub fn integral_i(u: f64, alpha: f64, beta1: f64, beta2: f64) -> Result<Complex64> {
    check_alpha(alpha)?;
    check_betas(beta1, beta2)?;
    if !u.is_finite() {
        return Err(Error::Domain(format!("u = {u} is not finite")));
    }
    if u == 0.0 {
        return Ok(c((beta2 / beta1).ln(), 0.0));
    }
    if beta1 == beta2 {
        return Ok(c(0.0, 0.0));
    }
    let x1 = c(0.0, -beta1 / u);
    let x2 = c(0.0, -beta2 / u);
    Ok(antiderivative(alpha, x2) - antiderivative(alpha, x1))
}

/// `Ĩ(s, α, β1, β2) = ∫_{β1}^{β2} z^{-1-α}(z - s)^α dz` for `s < β1`, evaluated
/// in real arithmetic.
pub fn integral_i_real(s: f64, alpha: f64, beta1: f64, beta2: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_betas(beta1, beta2)?;
    if !s.is_finite() || s >= beta1 {
        return Err(Error::Domain(format!("s = {s} must be below beta1 = {beta1} for the integral to exist")));
    }
    if s == 0.0 {
        return Ok((beta2 / beta1).ln());
    }
    if beta1 == beta2 {
        return Ok(0.0);
    }
    Ok((beta2 / beta1).ln() + power_log_integral_real(alpha, s / beta1)? - power_log_integral_real(alpha, s / beta2)?)
}
