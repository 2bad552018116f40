mod support;

use proptest::prelude::*;
use support::{integrate, levy_moment, psi_z_oracle, Leg};
use tsou::noa::{
    first_factor_chf, gamma1, gamma2, noa_factor_chf, simulate_noa_future, simulate_noa_paths, DeliveryPeriod, NoaSpec,
    StepFunction,
};
use tsou::simulation::{Scheme, StepKernel};
use tsou::stats::mean_and_se;
use tsou::{BctsParams, CtsParams, McConfig, RngStream, TimeGrid};

fn spot_driver() -> BctsParams {
    BctsParams::cgmy(2.0, 15.0, 5.0, 0.5, 10.0).unwrap()
}

fn second_driver() -> BctsParams {
    BctsParams::new(CtsParams::new(0.4, 6.0, 0.8).unwrap(), CtsParams::new(0.6, 8.0, 1.2).unwrap(), 1.0).unwrap()
}

fn leg(p: &CtsParams) -> Leg {
    Leg { alpha: p.alpha, beta: p.beta, c: p.c }
}

/// Loading as the period average of the instantaneous loading `γ1 e^{-b(T-u)}`.
fn loading_by_quadrature(u: f64, p: &DeliveryPeriod, g: f64, b: f64) -> f64 {
    integrate(|t| g * (-b * (t - u)).exp(), p.t1, p.t2, 1e-15) / p.length()
}

fn spec(gamma1_coeff: f64, gamma: StepFunction) -> NoaSpec {
    NoaSpec {
        period: DeliveryPeriod::new(0.5, 0.75).unwrap(),
        grid: TimeGrid::daily(90),
        f0: 40.0,
        gamma1_coeff,
        gamma,
    }
}

fn mc(n: usize, block: u64) -> McConfig {
    McConfig { n_paths: n, seed: 77, first_stream: block * 10_000_000 }
}

/// Variance of `F(t)` from Lévy-measure moments computed by quadrature.
fn variance_oracle(s: &NoaSpec, t: f64, l1: &BctsParams, l2: &BctsParams) -> f64 {
    let k2 = |p: &BctsParams| {
        [p.pos, p.neg].iter().filter(|l| l.c > 0.0).map(|l| levy_moment(l.alpha, l.beta, l.c, 2)).sum::<f64>()
    };
    let b = l1.b;
    let g1 = loading_by_quadrature(t, &s.period, s.gamma1_coeff, b);
    let g2 = s.gamma.average(&s.period);
    g1 * g1 * k2(l1) * (1.0 - (-2.0 * b * t).exp()) / (2.0 * b) + g2 * g2 * t * k2(l2)
}

#[test]
fn loading_matches_period_average() {
    let p = DeliveryPeriod::new(0.0, 1.0).unwrap();
    let v = gamma1(0.0, &p, 1.0, 0.5).unwrap();
    assert!((v - 0.78694).abs() < 5e-6, "{v}");
    assert!((v - loading_by_quadrature(0.0, &p, 1.0, 0.5)).abs() < 1e-14);
    for (u, t1, t2, g, b) in [(0.1, 0.5, 0.75, 1.3, 10.0), (0.0, 2.0, 2.01, 0.7, 0.2), (1.0, 1.0, 3.0, 2.0, 25.0)] {
        let p = DeliveryPeriod::new(t1, t2).unwrap();
        let a = gamma1(u, &p, g, b).unwrap();
        let q = loading_by_quadrature(u, &p, g, b);
        assert!((a - q).abs() <= 1e-13 * q, "{a} vs {q}");
    }
}

#[test]
fn loading_limits() {
    let short = DeliveryPeriod::new(0.5, 0.5 + 1e-13).unwrap();
    assert!((gamma1(0.2, &short, 1.5, 3.0).unwrap() - 1.5 * (-0.9f64).exp()).abs() < 1e-12);
    let p = DeliveryPeriod::new(0.5, 0.75).unwrap();
    assert!((gamma1(0.2, &p, 1.5, 1e-12).unwrap() - 1.5).abs() < 1e-11);
}

#[test]
fn second_loading_averages_gamma() {
    let p = DeliveryPeriod::new(0.25, 1.25).unwrap();
    assert!((gamma2(&p, &|_| 0.8).unwrap() - 0.8).abs() < 1e-14);
    assert!((gamma2(&p, &|u| 2.0 - u).unwrap() - (2.0 - 0.75)).abs() < 1e-13);
    let step = StepFunction::new(vec![0.1, 0.4, 0.9, 1.1], vec![9.0, 1.0, 0.5, 2.0, 0.25]).unwrap();
    let analytic = (0.15 * 1.0 + 0.5 * 0.5 + 0.2 * 2.0 + 0.15 * 0.25) / 1.0;
    assert!((step.average(&p) - analytic).abs() < 1e-15);
    assert!((gamma2(&p, &|u| step.value(u)).unwrap() - analytic).abs() < 1e-10);
}

#[test]
fn factor_chf_is_scaled_transition_chf() {
    let params = spot_driver();
    let p = DeliveryPeriod::new(0.5, 0.75).unwrap();
    for u in [-3.0, 0.5, 7.0] {
        assert_eq!(noa_factor_chf(u, 0.25, &p, 0.0, &params).unwrap(), tsou::Complex64::new(1.0, 0.0));
        let one = noa_factor_chf(u, 0.25, &p, 1.0, &params).unwrap();
        let oracle = psi_z_oracle(u, 0.25, leg(&params.pos), leg(&params.neg), params.b).exp();
        assert!((one - oracle).norm() < 1e-10);
        let scaled = noa_factor_chf(u, 0.25, &p, 0.6, &params).unwrap();
        let oracle = psi_z_oracle(0.6 * u, 0.25, leg(&params.pos), leg(&params.neg), params.b).exp();
        assert!((scaled - oracle).norm() < 1e-10);
    }
    let g = gamma1(0.25, &p, 1.2, params.b).unwrap();
    assert_eq!(
        first_factor_chf(2.0, 0.25, &p, 1.2, &params).unwrap(),
        noa_factor_chf(2.0, 0.25, &p, g, &params).unwrap()
    );
}

#[test]
fn factor_chf_matches_simulated_factor() {
    let params = spot_driver();
    let p = DeliveryPeriod::new(0.5, 0.75).unwrap();
    let (t, loading) = (0.2, 0.7);
    let kernel = StepKernel::new(&params, t, Scheme::Exact).unwrap();
    let mut rng = RngStream::new(3, 0);
    let draws: Vec<f64> = (0..200_000).map(|_| loading * kernel.sample_z(&mut rng)).collect();
    for u in [1.0, 4.0, 12.0] {
        let chf = noa_factor_chf(u, t, &p, loading, &params).unwrap();
        let (re, re_se) = mean_and_se(&draws.iter().map(|x| (u * x).cos()).collect::<Vec<_>>()).unwrap();
        let (im, im_se) = mean_and_se(&draws.iter().map(|x| (u * x).sin()).collect::<Vec<_>>()).unwrap();
        assert!((re - chf.re).abs() <= 3.0 * re_se, "u={u}: {re} vs {}", chf.re);
        assert!((im - chf.im).abs() <= 3.0 * im_se, "u={u}: {im} vs {}", chf.im);
    }
}

#[test]
fn path_starts_at_initial_future_and_is_flat_without_loadings() {
    let s = spec(1.2, StepFunction::constant(0.5));
    let mut rng = RngStream::new(1, 0);
    let path = simulate_noa_future(&s, &spot_driver(), &second_driver(), &mut rng).unwrap();
    assert_eq!(path.future[0], 40.0);
    assert_eq!(path.future.len(), 91);
    assert!(path.future.iter().any(|f| *f != 40.0));
    let flat = spec(0.0, StepFunction::constant(0.0));
    let path = simulate_noa_future(&flat, &spot_driver(), &second_driver(), &mut rng).unwrap();
    assert!(path.future.iter().all(|f| *f == 40.0));
}

#[test]
fn moments_and_factor_independence() {
    let (l1, l2) = (spot_driver(), second_driver());
    let s = spec(1.2, StepFunction::new(vec![0.6], vec![0.9, 0.4]).unwrap());
    let paths = simulate_noa_paths(&s, &l1, &l2, &mc(100_000, 0)).unwrap();
    for i in [1, 30, 90] {
        let t = s.grid.times()[i];
        let f: Vec<f64> = paths.iter().map(|p| p.future[i]).collect();
        let (mean, mean_se) = mean_and_se(&f).unwrap();
        assert!((mean - 40.0).abs() <= 3.0 * mean_se, "t={t}: mean {mean} ± {mean_se}");
        let sq: Vec<f64> = f.iter().map(|x| (x - 40.0).powi(2)).collect();
        let (var, var_se) = mean_and_se(&sq).unwrap();
        let oracle = variance_oracle(&s, t, &l1, &l2);
        assert!((s.variance(t, &l1, &l2).unwrap() - oracle).abs() <= 1e-10 * oracle);
        assert!((var - oracle).abs() <= 3.0 * var_se, "t={t}: var {var} ± {var_se} vs {oracle}");
        let cross: Vec<f64> = paths.iter().map(|p| p.factor1[i] * p.factor2[i]).collect();
        let (cov, cov_se) = mean_and_se(&cross).unwrap();
        assert!(cov.abs() <= 3.0 * cov_se, "t={t}: cov {cov} ± {cov_se}");
    }
}

#[test]
fn finite_activity_second_driver() {
    let l2 = BctsParams::cgmy(0.5, 3.0, 4.0, -0.5, 1.0).unwrap();
    let s = spec(0.0, StepFunction::constant(1.0));
    let paths = simulate_noa_paths(&s, &spot_driver(), &l2, &mc(100_000, 1)).unwrap();
    let f: Vec<f64> = paths.iter().map(|p| (p.future[90] - 40.0).powi(2)).collect();
    let (var, se) = mean_and_se(&f).unwrap();
    let oracle = variance_oracle(&s, 0.25, &spot_driver(), &l2);
    assert!((var - oracle).abs() <= 3.0 * se, "{var} ± {se} vs {oracle}");
}

#[test]
fn nearer_delivery_moves_more() {
    let (l1, l2) = (spot_driver(), second_driver());
    let near = spec(1.0, StepFunction::constant(0.0));
    let far = NoaSpec { period: DeliveryPeriod::new(0.75, 1.0).unwrap(), ..near.clone() };
    for t in [0.05, 0.2, 0.25] {
        assert!(near.variance(t, &l1, &l2).unwrap() > far.variance(t, &l1, &l2).unwrap());
    }
}

#[test]
fn runs_are_reproducible() {
    let s = spec(1.0, StepFunction::constant(0.3));
    let a = simulate_noa_paths(&s, &spot_driver(), &second_driver(), &mc(50, 2)).unwrap();
    let b = simulate_noa_paths(&s, &spot_driver(), &second_driver(), &mc(50, 2)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn invalid_inputs_are_rejected() {
    assert!(DeliveryPeriod::new(1.0, 1.0).is_err());
    assert!(DeliveryPeriod::new(-0.1, 1.0).is_err());
    let p = DeliveryPeriod::new(0.1, 0.2).unwrap();
    assert!(noa_factor_chf(1.0, 0.3, &p, 1.0, &spot_driver()).is_err());
    let late = NoaSpec { period: p, ..spec(1.0, StepFunction::constant(0.0)) };
    let mut rng = RngStream::new(0, 0);
    assert!(simulate_noa_future(&late, &spot_driver(), &second_driver(), &mut rng).is_err());
}

proptest! {
    #[test]
    fn loading_is_positive_and_decays_with_distance_to_delivery(
        u in 0.0f64..1.0,
        gap in 0.0f64..2.0,
        shift in 1e-3f64..2.0,
        len in 1e-3f64..1.0,
        g in 0.01f64..5.0,
        b in 1e-3f64..30.0,
    ) {
        let near = DeliveryPeriod::new(u + gap, u + gap + len).unwrap();
        let far = DeliveryPeriod::new(u + gap + shift, u + gap + shift + len).unwrap();
        let a = gamma1(u, &near, g, b).unwrap();
        let c = gamma1(u, &far, g, b).unwrap();
        prop_assert!(a > 0.0 && a <= g);
        prop_assert!(c < a);
    }

    #[test]
    fn step_average_matches_quadrature(
        breaks in proptest::collection::vec(0.0f64..2.0, 0..5),
        values in proptest::collection::vec(-3.0f64..3.0, 6),
        t1 in 0.0f64..1.0,
        len in 0.01f64..1.5,
    ) {
        let mut breaks = breaks;
        breaks.sort_by(|a, b| a.total_cmp(b));
        breaks.dedup();
        let values = values[..breaks.len() + 1].to_vec();
        let step = StepFunction::new(breaks, values).unwrap();
        let p = DeliveryPeriod::new(t1, t1 + len).unwrap();
        let q = gamma2(&p, &|u| step.value(u)).unwrap();
        prop_assert!((q - step.average(&p)).abs() < 1e-9);
    }
}
