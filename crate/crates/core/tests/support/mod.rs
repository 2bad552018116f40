//! Independent numerical oracles for the integration tests.
//!
//! Nothing here calls into the closed forms under test: integrals are done
//! with an adaptive Gauss-Kronrod rule straight from their definitions.
#![allow(dead_code)]

use num_complex::Complex64;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kron += s * WGK[j];
        if j % 2 == 1 {
            gauss += s * WG[j / 2];
        }
    }
    (kron * h, ((kron - gauss) * h).norm())
}

/// Globally adaptive Gauss-Kronrod: repeatedly bisects the interval with the
/// largest error estimate until the summed estimate meets the tolerance.
fn adaptive<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Complex64 {
    let (v, e) = gk15(f, a, b);
    let mut parts = vec![(a, b, v, e)];
    for _ in 0..20_000 {
        let total: Complex64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if err <= abs_tol.max(rel_tol * total.norm()) {
            return total;
        }
        let (idx, _) = parts.iter().enumerate().max_by(|x, y| x.1 .3.total_cmp(&y.1 .3)).unwrap();
        let (lo, hi, _, _) = parts.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(f, lo, mid);
        let (v2, e2) = gk15(f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
    panic!("oracle quadrature on [{a}, {b}] did not converge");
}

/// Adaptive Gauss-Kronrod (7/15) for complex integrands; converges when the
/// error estimate is below `tol` in absolute terms or `1e-13` relative.
pub fn integrate_c<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, tol: f64) -> Complex64 {
    adaptive(&f, a, b, tol, 1e-13)
}

/// Real version of [`integrate_c`].
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    adaptive(&|x| Complex64::new(f(x), 0.0), a, b, tol, 1e-13).re
}

/// Gamma function by Stirling's series with upward shift (independent of the
/// crate's Lanczos implementation); valid for non-pole arguments.
pub fn gamma_ref(x: f64) -> f64 {
    if x < 0.5 {
        return std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma_ref(1.0 - x));
    }
    let mut shift = 1.0;
    let mut z = x;
    while z < 20.0 {
        shift *= z;
        z += 1.0;
    }
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let series =
        inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 / 1188.0))));
    let ln = (z - 0.5) * z.ln() - z + 0.5 * (2.0 * std::f64::consts::PI).ln() + series;
    ln.exp() / shift
}

/// `∫_0^∞ x^k c e^{-βx} x^{-1-α} dx`, by quadrature in `s = log x`.
pub fn levy_moment(alpha: f64, beta: f64, c: f64, k: i32) -> f64 {
    let p = k as f64 - alpha;
    assert!(p > 0.0);
    let f = |s: f64| c * (p * s - beta * s.exp()).exp();
    let lo = -800.0 / p;
    let hi = (800.0 / beta).ln() + 1.0;
    let peak = (p / beta).ln();
    integrate(f, lo, peak, 1e-15) + integrate(f, peak, hi, 1e-15)
}

fn ln1p_c(z: Complex64) -> Complex64 {
    if z.norm() < 1e-3 {
        // alternating series, enough terms for full precision at |z| < 1e-3
        let mut term = z;
        let mut sum = Complex64::new(0.0, 0.0);
        for n in 1..8 {
            sum += term / n as f64;
            term *= -z;
        }
        sum
    } else {
        (z + 1.0).ln()
    }
}

fn expm1_c(z: Complex64) -> Complex64 {
    if z.norm() < 1e-2 {
        let mut term = z;
        let mut sum = z;
        for n in 2..12 {
            term = term * z / n as f64;
            sum += term;
        }
        sum
    } else {
        z.exp() - 1.0
    }
}

/// Lévy exponent of one leg, `cΓ(-α)((β - iu)^α - β^α)`, written as
/// `cΓ(-α)β^α expm1(α log1p(-iu/β))` to keep precision at small `u`.
pub fn psi_l_leg(u: f64, alpha: f64, beta: f64, c: f64) -> Complex64 {
    psi_l_leg_c(Complex64::new(u, 0.0), alpha, beta, c)
}

/// [`psi_l_leg`] at a complex argument with `Im w > -β`.
pub fn psi_l_leg_c(w: Complex64, alpha: f64, beta: f64, c: f64) -> Complex64 {
    if c == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let z = -Complex64::i() * w / beta;
    c * gamma_ref(-alpha) * beta.powf(alpha) * expm1_c(ln1p_c(z) * alpha)
}

#[derive(Clone, Copy, Debug)]
pub struct Leg {
    pub alpha: f64,
    pub beta: f64,
    pub c: f64,
}

/// `ψ_Z(u, t) = ∫_0^t ψ_L(u e^{-bs}) ds` for a bilateral driver.
pub fn psi_z_oracle(u: f64, t: f64, pos: Leg, neg: Leg, b: f64) -> Complex64 {
    psi_z_oracle_c(Complex64::new(u, 0.0), t, pos, neg, b)
}

/// [`psi_z_oracle`] at a complex argument inside the strip of analyticity.
pub fn psi_z_oracle_c(w: Complex64, t: f64, pos: Leg, neg: Leg, b: f64) -> Complex64 {
    let f = |s: f64| {
        let v = w * (-b * s).exp();
        psi_l_leg_c(v, pos.alpha, pos.beta, pos.c) + psi_l_leg_c(-v, neg.alpha, neg.beta, neg.c)
    };
    let scale = f(0.0).norm().max(1e-300) * t;
    integrate_c(f, 0.0, t, 1e-15 * scale)
}

/// Compound Poisson form `λt(∫_0^1 (βe^{bvt}/(βe^{bvt} - iu))^{-α} dv - 1)`
/// for a finite-activity leg, with `λ = ∫ν`.
pub fn psi_z_finite_oracle(u: f64, t: f64, leg: Leg, b: f64) -> Complex64 {
    psi_z_finite_oracle_c(Complex64::new(u, 0.0), t, leg, b)
}

pub fn psi_z_finite_oracle_c(w: Complex64, t: f64, leg: Leg, b: f64) -> Complex64 {
    if leg.c == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let lambda = levy_moment(leg.alpha, leg.beta, leg.c, 0);
    let f = |v: f64| {
        let bv = leg.beta * (b * v * t).exp();
        let ratio = Complex64::new(bv, 0.0) / (Complex64::new(bv, 0.0) - Complex64::i() * w);
        (ratio.ln() * (-leg.alpha)).exp()
    };
    lambda * t * (integrate_c(f, 0.0, 1.0, 1e-15) - 1.0)
}

/// Gil-Pelaez inversion `F(x) = 1/2 - (1/π) ∫_0^∞ Im(e^{-iux} φ(u))/u du`,
/// with `φ` tabulated once on Gauss-Legendre nodes over `[0, u_max]`.
pub struct GilPelaez {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    phi: Vec<Complex64>,
}

impl GilPelaez {
    pub fn new(phi: impl Fn(f64) -> Complex64, u_max: f64, panel: f64) -> Self {
        // 20-point Gauss-Legendre nodes computed by Newton iteration
        let n = 20;
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        for i in 0..n {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            loop {
                let (mut p0, mut p1) = (1.0, z);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
                let dz = p1 / dp;
                z -= dz;
                if dz.abs() < 1e-15 {
                    let (mut q0, mut q1) = (1.0, z);
                    for k in 2..=n {
                        let q2 = ((2 * k - 1) as f64 * z * q1 - (k - 1) as f64 * q0) / k as f64;
                        q0 = q1;
                        q1 = q2;
                    }
                    let dq = n as f64 * (z * q1 - q0) / (z * z - 1.0);
                    x[i] = z;
                    w[i] = 2.0 / ((1.0 - z * z) * dq * dq);
                    break;
                }
            }
        }
        let panels = (u_max / panel).ceil() as usize;
        let mut nodes = Vec::with_capacity(panels * n);
        let mut weights = Vec::with_capacity(panels * n);
        for p in 0..panels {
            let (a, b) = (p as f64 * panel, (p + 1) as f64 * panel);
            for j in 0..n {
                nodes.push(0.5 * (a + b) + 0.5 * (b - a) * x[j]);
                weights.push(0.5 * (b - a) * w[j]);
            }
        }
        let phi = nodes.iter().map(|&u| phi(u)).collect();
        GilPelaez { nodes, weights, phi }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for ((&u, &w), &p) in self.nodes.iter().zip(&self.weights).zip(&self.phi) {
            let e = Complex64::new(0.0, -u * x).exp() * p;
            acc += w * e.im / u;
        }
        0.5 - acc / std::f64::consts::PI
    }
}

/// Kolmogorov-Smirnov distance between a sorted sample and a CDF evaluated on
/// `points` evenly spaced sample quantiles. The returned bound adds the largest
/// CDF increment between consecutive evaluation points, so it dominates the
/// exact statistic.
pub fn ks_upper_bound(sorted: &[f64], cdf: impl Fn(f64) -> f64, points: usize) -> f64 {
    let n = sorted.len();
    let mut d: f64 = 0.0;
    let mut max_gap: f64 = 0.0;
    let mut prev_f: f64 = 0.0;
    for j in 1..=points {
        let idx = (j * n / points).min(n) - 1;
        let x = sorted[idx];
        let f = cdf(x);
        // empirical CDF just below and at x
        let below = sorted.partition_point(|&y| y < x) as f64 / n as f64;
        let at = sorted.partition_point(|&y| y <= x) as f64 / n as f64;
        d = d.max((at - f).abs()).max((f - below).abs());
        max_gap = max_gap.max(f - prev_f);
        prev_f = f;
    }
    max_gap = max_gap.max(1.0 - prev_f);
    d + max_gap
}
