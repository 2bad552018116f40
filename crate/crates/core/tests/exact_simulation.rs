mod support;

use support::{integrate, GilPelaez};
use tsou::model::{ou_cumulants, TimeGrid};
use tsou::rng::par_map_streams;
use tsou::simulation::{
    remainder_intensity, simulate_skeleton, CtsSampler, RemainderSampler, SkeletonSimulator, StepKernel,
};
use tsou::special::gamma;
use tsou::stats::{cumulants_with_se, ks_distance, mean_and_se};
use tsou::transition::TransitionLaw;
use tsou::{BctsParams, CtsParams, CumulantSet, RngStream, Scheme};

const SEED: u64 = 20_201;

fn assert_cumulants_within(est: &CumulantSet, se: &CumulantSet, want: &CumulantSet, label: &str) {
    for k in 0..4 {
        let (e, s, w) = (est.as_array()[k], se.as_array()[k], want.as_array()[k]);
        assert!((e - w).abs() <= 3.0 * s, "{label} k{}: est {e} ± {s}, analytic {w}", k + 1);
    }
}

fn cts_cumulant(alpha: f64, beta: f64, c: f64, k: i32) -> f64 {
    c * beta.powf(alpha - k as f64) * gamma(k as f64 - alpha)
}

#[test]
fn cts_sampler_reproduces_cumulants() {
    for &(alpha, beta, c) in &[(0.5, 1.5, 0.3), (0.9, 5.0, 2.0), (0.7, 20.0, 5.0), (0.2, 0.4, 0.05)] {
        let sampler = CtsSampler::new(alpha, beta, c).unwrap();
        let xs = par_map_streams(SEED, 0, 400_000, |r| sampler.sample(r));
        let (est, se) = cumulants_with_se(&xs, 100).unwrap();
        let want = CumulantSet::from_array([1, 2, 3, 4].map(|k| cts_cumulant(alpha, beta, c, k)));
        assert_cumulants_within(&est, &se, &want, &format!("CTS({alpha},{beta},{c})"));
    }
}

#[test]
fn remainder_mixture_matches_quadrature_cdf() {
    for &(alpha, a) in &[(0.5, (-0.5f64 / 12.0).exp()), (0.7, 0.3), (0.9, 0.02)] {
        let sampler = RemainderSampler::new(alpha, a).unwrap();
        let mut xs = par_map_streams(SEED, 0, 1_000_000, |r| sampler.sample(r));
        assert!(xs.iter().all(|v| (1.0..=1.0 / a).contains(v)));
        // tabulated CDF of (v^α - 1)/v on [1, 1/a]
        let density = |v: f64| (v.powf(alpha) - 1.0) / v;
        let n = 4000;
        let h = (1.0 / a - 1.0) / n as f64;
        let mut cum = vec![0.0; n + 1];
        for i in 0..n {
            let lo = 1.0 + i as f64 * h;
            cum[i + 1] = cum[i] + integrate(density, lo, lo + h, 1e-16);
        }
        let total = cum[n];
        let norm_ref = (1.0 - a.powf(alpha) + a.powf(alpha) * a.powf(alpha).ln()) / (alpha * a.powf(alpha));
        assert!((total / norm_ref - 1.0).abs() < 1e-10, "normalizer");
        let cdf = |v: f64| {
            let pos = ((v - 1.0) / h).clamp(0.0, n as f64 - 1e-9);
            let i = pos.floor() as usize;
            let lo = 1.0 + i as f64 * h;
            (cum[i] + integrate(density, lo, v.max(lo), 1e-16)) / total
        };
        let d = ks_distance(&mut xs, cdf);
        assert!(d < 0.002, "alpha={alpha} a={a}: KS {d}");
    }
}

#[test]
fn remainder_collapses_as_step_vanishes() {
    let a = 1.0 - 1e-6;
    let s = RemainderSampler::new(0.5, a).unwrap();
    let mut r = RngStream::new(SEED, 0);
    for _ in 0..1000 {
        assert!(s.sample(&mut r) - 1.0 <= 1.0 / a - 1.0);
    }
    let leg = CtsParams::new(0.5, 1.5, 0.3).unwrap();
    assert_eq!(remainder_intensity(&leg, 0.5, 0.0), 0.0);
}

fn z_cumulant_check(params: &BctsParams, dt: f64, n: usize, label: &str) {
    let kernel = StepKernel::new(params, dt, Scheme::Exact).unwrap();
    let xs = par_map_streams(SEED, 0, n, |r| kernel.sample_z(r));
    let (est, se) = cumulants_with_se(&xs, 100).unwrap();
    let want = ou_cumulants(params, 0.0, dt).unwrap();
    assert_cumulants_within(&est, &se, &want, label);
}

#[test]
fn infinite_activity_step_reproduces_cumulants() {
    let leg = CtsParams::new(0.5, 1.5, 0.3).unwrap();
    z_cumulant_check(&BctsParams::one_sided(leg, 0.5).unwrap(), 1.0 / 12.0, 1_000_000, "OU-CTS 0.5");
    z_cumulant_check(&BctsParams::cgmy(2.0, 15.0, 5.0, 0.7, 10.0).unwrap(), 30.0 / 360.0, 400_000, "CGMY fwd");
    z_cumulant_check(&BctsParams::cgmy(2.0, 15.0, 5.0, 0.3, 10.0).unwrap(), 1.0, 200_000, "CGMY long");
}

#[test]
fn finite_activity_step_reproduces_cumulants() {
    for &y in &[-0.5, -1.5, -2.5, -3.5] {
        let cgmy = BctsParams::cgmy(0.3, 0.5, 1.5, y, 0.5).unwrap();
        z_cumulant_check(&cgmy, 0.5, 1_000_000, &format!("CGMY Y={y}"));
        let cts = BctsParams::one_sided(CtsParams::new(y, 1.5, 0.3).unwrap(), 0.5).unwrap();
        z_cumulant_check(&cts, 1.0 / 12.0, 1_000_000, &format!("CTS alpha={y}"));
    }
}

#[test]
fn finite_activity_no_jump_probability() {
    // P(Z = 0) = P(N = 0) = exp(-λΔ)
    let leg = CtsParams::new(-1.5, 1.5, 0.3).unwrap();
    let p = BctsParams::one_sided(leg, 0.5).unwrap();
    let dt = 2.0;
    let kernel = StepKernel::new(&p, dt, Scheme::Exact).unwrap();
    let zeros = par_map_streams(SEED, 0, 200_000, |r| (kernel.sample_z(r) == 0.0) as u8 as f64);
    let (frac, se) = mean_and_se(&zeros).unwrap();
    let want = (-leg.jump_intensity().unwrap() * dt).exp();
    assert!((frac - want).abs() <= 3.0 * se, "{frac} ± {se} vs {want}");
}

#[test]
fn empirical_chf_matches_closed_form() {
    for params in
        [BctsParams::cgmy(2.0, 15.0, 5.0, 0.5, 10.0).unwrap(), BctsParams::cgmy(0.3, 0.5, 1.5, -1.5, 0.5).unwrap()]
    {
        let dt = 1.0 / 12.0;
        let kernel = StepKernel::new(&params, dt, Scheme::Exact).unwrap();
        let zs = par_map_streams(SEED, 0, 200_000, |r| kernel.sample_z(r));
        let law = TransitionLaw::new(params, dt).unwrap();
        for j in 1..=20 {
            let u = 0.25 * j as f64 * if params.pos.alpha > 0.0 { 4.0 } else { 1.0 };
            let re: Vec<f64> = zs.iter().map(|z| (u * z).cos()).collect();
            let im: Vec<f64> = zs.iter().map(|z| (u * z).sin()).collect();
            let (mr, sr) = mean_and_se(&re).unwrap();
            let (mi, si) = mean_and_se(&im).unwrap();
            let want = law.psi_z(u).unwrap().exp();
            assert!((mr - want.re).abs() <= 3.0 * sr.max(1e-12), "u={u} re {mr}±{sr} vs {}", want.re);
            assert!((mi - want.im).abs() <= 3.0 * si.max(1e-12), "u={u} im {mi}±{si} vs {}", want.im);
        }
    }
}

#[test]
fn skeleton_matches_chf_inversion() {
    let params = BctsParams::cgmy(2.0, 15.0, 5.0, 0.5, 10.0).unwrap();
    let days = 30;
    let sim = SkeletonSimulator::new(&params, TimeGrid::daily(days), Scheme::Exact).unwrap();
    let mut xs = par_map_streams(SEED, 0, 1_000_000, |r| {
        let mut path = vec![0.0; days + 1];
        sim.fill(0.0, r, &mut path);
        path[days]
    });
    let law = TransitionLaw::new(params, days as f64 / 360.0).unwrap();
    let gp = GilPelaez::new(|u| law.psi_z(u).unwrap().exp(), 6000.0, 0.5);
    xs.sort_by(f64::total_cmp);
    let d = support::ks_upper_bound(&xs, |x| gp.cdf(x), 4000);
    assert!(d < 0.002, "KS bound {d}");
}

#[test]
fn reproducible_and_positive() {
    let leg = CtsParams::new(0.5, 1.5, 0.3).unwrap();
    let p = BctsParams::one_sided(leg, 0.5).unwrap();
    let grid = TimeGrid::daily(40);
    let a = simulate_skeleton(&p, &grid, 0.2, Scheme::Exact, &mut RngStream::new(5, 9)).unwrap();
    let b = simulate_skeleton(&p, &grid, 0.2, Scheme::Exact, &mut RngStream::new(5, 9)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.values[0], 0.2);
    for w in a.values.windows(2) {
        assert!(w[1] >= w[0] * (-0.5f64 / 360.0).exp());
    }
}

#[test]
fn strong_mean_reversion_decorrelates_skeleton() {
    let p = BctsParams::cgmy(2.0, 15.0, 5.0, 0.5, 5000.0).unwrap();
    let grid = TimeGrid::daily(2);
    let sim = SkeletonSimulator::new(&p, grid, Scheme::Exact).unwrap();
    let pairs = par_map_streams(SEED, 0, 100_000, |r| {
        let mut path = [0.0; 3];
        sim.fill(0.0, r, &mut path);
        (path[1], path[2])
    });
    let n = pairs.len() as f64;
    let (m1, m2) = pairs.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0 / n, acc.1 + p.1 / n));
    let (mut cov, mut v1, mut v2) = (0.0, 0.0, 0.0);
    for (x, y) in &pairs {
        cov += (x - m1) * (y - m2);
        v1 += (x - m1) * (x - m1);
        v2 += (y - m2) * (y - m2);
    }
    let rho = cov / (v1 * v2).sqrt();
    assert!(rho.abs() < 3.0 / n.sqrt() + 1e-5, "lag-1 correlation {rho}");
}

#[test]
fn approx1_mean_gap_is_remainder_mean() {
    let params = BctsParams::one_sided(CtsParams::new(0.5, 5.0, 2.0).unwrap(), 10.0).unwrap();
    let dt = 1.0 / 360.0;
    let exact = StepKernel::new(&params, dt, Scheme::Exact).unwrap();
    let approx = StepKernel::new(&params, dt, Scheme::Approx1).unwrap();
    // E[X2] = E[Z] - E[X1]
    let leg = params.pos;
    let a = (-params.b * dt).exp();
    let c1 = leg.c * (1.0 - a.powf(leg.alpha)) / (leg.alpha * params.b);
    let mean_x1 = cts_cumulant(leg.alpha, leg.beta / a, c1, 1);
    let gap = ou_cumulants(&params, 0.0, dt).unwrap().k1 - mean_x1;
    assert!(gap > 0.0 && gap < mean_x1, "gap {gap} vs E[X1] {mean_x1}");
    let n = 1_000_000;
    let e = par_map_streams(SEED, 0, n, |r| exact.sample_z(r));
    let m = par_map_streams(SEED + 1, 0, n, |r| approx.sample_z(r));
    let (me, se_e) = mean_and_se(&e).unwrap();
    let (ma, se_a) = mean_and_se(&m).unwrap();
    let se = (se_e * se_e + se_a * se_a).sqrt();
    assert!((me - ma - gap).abs() <= 3.0 * se, "gap {} vs {gap} ± {se}", me - ma);
}

#[test]
fn splitting_keeps_sampling_exact_for_heavy_tempering() {
    // large β/a forces many pieces; acceptance is logged, mean checked
    let s = CtsSampler::new(0.9, 200.0, 2.0).unwrap();
    assert!(s.pieces() > 100);
    let xs = par_map_streams(SEED, 0, 100_000, |r| s.sample(r));
    let (m, se) = mean_and_se(&xs).unwrap();
    let want = cts_cumulant(0.9, 200.0, 2.0, 1);
    assert!((m - want).abs() <= 3.0 * se);
}
