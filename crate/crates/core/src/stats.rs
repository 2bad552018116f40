//! Sample statistics: compensated sums, k-statistics, batch-means standard
//! errors and the Kolmogorov-Smirnov distance.

use crate::error::{Error, Result};
use crate::model::CumulantSet;

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = NeumaierSum::default();
    xs.into_iter().for_each(|x| s.add(x));
    s.value()
}

/// Sample mean and its standard error.
pub fn mean_and_se(xs: &[f64]) -> Result<(f64, f64)> {
    let n = xs.len();
    if n < 2 {
        return Err(Error::Input(format!("need at least two samples, got {n}")));
    }
    let mean = compensated_sum(xs.iter().copied()) / n as f64;
    let var = compensated_sum(xs.iter().map(|x| (x - mean) * (x - mean))) / (n - 1) as f64;
    Ok((mean, (var / n as f64).sqrt()))
}

/// Unbiased k-statistics `k1..k4`.
pub fn k_statistics(xs: &[f64]) -> Result<CumulantSet> {
    let n = xs.len();
    if n < 4 {
        return Err(Error::Input(format!("k-statistics need at least four samples, got {n}")));
    }
    let nf = n as f64;
    let mean = compensated_sum(xs.iter().copied()) / nf;
    let (mut s2, mut s3, mut s4) = (NeumaierSum::default(), NeumaierSum::default(), NeumaierSum::default());
    for &x in xs {
        let d = x - mean;
        let d2 = d * d;
        s2.add(d2);
        s3.add(d2 * d);
        s4.add(d2 * d2);
    }
    let (m2, m3, m4) = (s2.value() / nf, s3.value() / nf, s4.value() / nf);
    let k2 = nf / (nf - 1.0) * m2;
    let k3 = nf * nf / ((nf - 1.0) * (nf - 2.0)) * m3;
    let k4 = nf * nf * ((nf + 1.0) * m4 - 3.0 * (nf - 1.0) * m2 * m2) / ((nf - 1.0) * (nf - 2.0) * (nf - 3.0));
    Ok(CumulantSet { k1: mean, k2, k3, k4 })
}

/// k-statistics of the full sample together with batch-means standard errors
/// (`batches` equal consecutive batches).
pub fn cumulants_with_se(xs: &[f64], batches: usize) -> Result<(CumulantSet, CumulantSet)> {
    if batches < 2 || xs.len() < 4 * batches {
        return Err(Error::Input(format!(
            "{} samples cannot be split into {batches} batches of at least four",
            xs.len()
        )));
    }
    let full = k_statistics(xs)?;
    let size = xs.len() / batches;
    let per_batch = xs.chunks_exact(size).take(batches).map(k_statistics).collect::<Result<Vec<_>>>()?;
    let mut se = [0.0; 4];
    for (j, slot) in se.iter_mut().enumerate() {
        let vals: Vec<f64> = per_batch.iter().map(|k| k.as_array()[j]).collect();
        // the full-sample estimate behaves like the average of the batch estimates
        *slot = mean_and_se(&vals)?.1;
    }
    Ok((full, CumulantSet::from_array(se)))
}

/// `sup_x |F_n(x) - F(x)|` for a sample, which is sorted in place.
pub fn ks_distance(xs: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let xs = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(xs), 2.0);
    }

    #[test]
    fn k_statistics_of_small_sample() {
        // exact values for {1,2,3,4,10}
        let k = k_statistics(&[1.0, 2.0, 3.0, 4.0, 10.0]).unwrap();
        assert!((k.k1 - 4.0).abs() < 1e-14);
        assert!((k.k2 - 12.5).abs() < 1e-12);
        // k3 = n^2 m3 / ((n-1)(n-2)) with m3 = 36
        assert!((k.k3 - 25.0 * 36.0 / 12.0).abs() < 1e-11);
    }

    #[test]
    fn ks_of_perfect_uniform_grid() {
        let mut xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let d = ks_distance(&mut xs, |x| x);
        assert!((d - 0.0005).abs() < 1e-12);
    }
}
