//! KL divergence, the random-distribution baseline and count noise.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use serde::Serialize;

use crate::error::{Error, Result};

/// Tolerance on the sum of a distribution.
pub const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ProbabilityDistribution {
    values: Vec<f64>,
}

impl ProbabilityDistribution {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidDistribution("empty".into()));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidDistribution(format!(
                "value {v} outside [0, 1]"
            )));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "sum {sum} differs from 1"
            )));
        }
        Ok(Self { values })
    }

    /// Scales nonnegative weights to unit sum.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidDistribution(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidDistribution("weights sum to zero".into()));
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn uniform(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidDistribution("empty".into()));
        }
        Ok(Self {
            values: vec![1.0 / d as f64; d],
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `max_k |p_k − 1/d|`.
    pub fn max_deviation_from_uniform(&self) -> f64 {
        let u = 1.0 / self.len() as f64;
        self.values
            .iter()
            .map(|p| (p - u).abs())
            .fold(0.0, f64::max)
    }
}

/// `Σ P_i log2(P_i / Q_i)` in bits.
pub fn kl_divergence(p: &ProbabilityDistribution, q: &ProbabilityDistribution) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::InvalidLength(format!("{} vs {}", p.len(), q.len())));
    }
    let mut sum = 0.0;
    for (index, (&pi, &qi)) in p.values.iter().zip(&q.values).enumerate() {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Err(Error::AbsoluteContinuityViolated { index });
        }
        sum += pi * (pi / qi).log2();
    }
    Ok(sum.max(0.0))
}

/// KL divergence from the uniform distribution, `log2 d − H(P)`.
pub fn kl_from_uniform(p: &ProbabilityDistribution) -> f64 {
    let q = ProbabilityDistribution::uniform(p.len()).expect("nonempty");
    kl_divergence(p, &q).expect("uniform has full support")
}

/// Seeded stream of flat-Dirichlet samples.
#[derive(Debug, Clone)]
pub struct SimplexSampler {
    rng: ChaCha8Rng,
}

impl SimplexSampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Normalized i.i.d. unit exponentials.
    pub fn sample(&mut self, d: usize) -> Result<ProbabilityDistribution> {
        if d == 0 {
            return Err(Error::InvalidDistribution("d must be >= 1".into()));
        }
        let draws: Vec<f64> = (0..d).map(|_| self.rng.sample::<f64, _>(Exp1)).collect();
        let total: f64 = draws.iter().sum();
        let mut values: Vec<f64> = draws.iter().map(|x| x / total).collect();
        if d == 1 {
            values[0] = 1.0;
        }
        Ok(ProbabilityDistribution { values })
    }
}

pub fn sample_uniform_simplex(d: usize, seed: u64) -> Result<ProbabilityDistribution> {
    SimplexSampler::new(seed).sample(d)
}

/// KL divergences from uniform of `samples` flat-Dirichlet draws.
pub fn random_kl_baseline(d: usize, samples: usize, seed: u64) -> Result<Vec<f64>> {
    let mut sampler = SimplexSampler::new(seed);
    (0..samples)
        .map(|_| sampler.sample(d).map(|p| kl_from_uniform(&p)))
        .collect()
}

/// Fraction of values strictly above `threshold`.
pub fn exceedance_fraction(values: &[f64], threshold: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    let above = values.iter().filter(|&&v| v > threshold).count();
    Ok(above as f64 / values.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoissonCounts {
    pub counts: Vec<u64>,
    pub frequencies: ProbabilityDistribution,
}

/// Independent Poisson counts with means `total_counts · P_i`.
pub fn poissonize(
    p: &ProbabilityDistribution,
    total_counts: u64,
    seed: u64,
) -> Result<PoissonCounts> {
    if total_counts == 0 {
        return Err(Error::OutOfRange("total_counts must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counts: Vec<u64> = p
        .values
        .iter()
        .map(|&pi| {
            let mean = pi * total_counts as f64;
            if mean > 0.0 {
                Poisson::new(mean)
                    .expect("positive finite mean")
                    .sample(&mut rng) as u64
            } else {
                0
            }
        })
        .collect();
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::NoCounts);
    }
    let frequencies = ProbabilityDistribution {
        values: counts.iter().map(|&c| c as f64 / total as f64).collect(),
    };
    Ok(PoissonCounts {
        counts,
        frequencies,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramBin {
    pub bin_left: f64,
    pub bin_right: f64,
    pub probability: f64,
}

pub const HISTOGRAM_BINS: usize = 100;

/// Normalized histogram of KL values on `[0, log2 d]`. Values at the upper
/// edge fall in the last bin; values outside the range are dropped.
pub fn kl_histogram(values: &[f64], d: usize, bins: usize) -> Result<Vec<HistogramBin>> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    if d < 2 || bins == 0 {
        return Err(Error::OutOfRange(format!(
            "histogram needs d >= 2 and bins >= 1, got d={d} bins={bins}"
        )));
    }
    let top = (d as f64).log2();
    let width = top / bins as f64;
    let mut counts = vec![0u64; bins];
    for &v in values {
        if !(0.0..=top).contains(&v) {
            continue;
        }
        let i = ((v / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    Ok(counts
        .iter()
        .enumerate()
        .map(|(i, &c)| HistogramBin {
            bin_left: i as f64 * width,
            bin_right: (i + 1) as f64 * width,
            probability: c as f64 / values.len() as f64,
        })
        .collect())
}

pub fn write_histogram_csv<W: Write>(bins: &[HistogramBin], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for b in bins {
        w.serialize(b)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn kl_examples() {
        for d in 2..8 {
            let u = ProbabilityDistribution::uniform(d).unwrap();
            assert_eq!(kl_divergence(&u, &u).unwrap(), 0.0);
            let mut point = vec![0.0; d];
            point[d / 2] = 1.0;
            let point = ProbabilityDistribution::new(point).unwrap();
            assert_abs_diff_eq!(
                kl_divergence(&point, &u).unwrap(),
                (d as f64).log2(),
                epsilon = 1e-12
            );
        }
        let p = ProbabilityDistribution::new(vec![0.75, 0.25]).unwrap();
        assert_abs_diff_eq!(kl_from_uniform(&p), 0.18872, epsilon = 1e-5);
        let q = ProbabilityDistribution::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(
            kl_divergence(&p, &q),
            Err(Error::AbsoluteContinuityViolated { index: 1 })
        );
        assert!(kl_divergence(&p, &ProbabilityDistribution::uniform(3).unwrap()).is_err());
    }

    #[test]
    fn distribution_validation() {
        assert!(ProbabilityDistribution::new(vec![]).is_err());
        assert!(ProbabilityDistribution::new(vec![0.5, 0.6]).is_err());
        assert!(ProbabilityDistribution::new(vec![1.5, -0.5]).is_err());
        let p = ProbabilityDistribution::from_weights(&[1.0, 3.0]).unwrap();
        assert_eq!(p.values(), &[0.25, 0.75]);
        assert!(ProbabilityDistribution::from_weights(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn simplex_samples() {
        assert_eq!(sample_uniform_simplex(1, 3).unwrap().values(), &[1.0]);
        let mut s = SimplexSampler::new(11);
        let mut mean0 = 0.0;
        let n = 100_000;
        for _ in 0..n {
            let p = s.sample(5).unwrap();
            assert_abs_diff_eq!(p.values().iter().sum::<f64>(), 1.0, epsilon = 1e-12);
            mean0 += p.values()[0];
        }
        assert_abs_diff_eq!(mean0 / n as f64, 0.2, epsilon = 0.005);
        assert_eq!(
            sample_uniform_simplex(4, 9).unwrap(),
            sample_uniform_simplex(4, 9).unwrap()
        );
    }

    #[test]
    fn exceedance_examples() {
        let kl = random_kl_baseline(4, 2000, 5).unwrap();
        assert_eq!(exceedance_fraction(&kl, 2.0).unwrap(), 0.0);
        assert_eq!(exceedance_fraction(&kl, 0.0).unwrap(), 1.0);
        assert_eq!(exceedance_fraction(&[], 0.0), Err(Error::EmptySample));
        assert_eq!(
            exceedance_fraction(&[1.0, 2.0, 3.0, 4.0], 2.0).unwrap(),
            0.5
        );
    }

    #[test]
    fn poisson_examples() {
        let p = ProbabilityDistribution::new(vec![0.5, 0.3, 0.2, 0.0]).unwrap();
        let c = poissonize(&p, 10_000_000, 1).unwrap();
        for (f, want) in c.frequencies.values().iter().zip(p.values()) {
            assert_abs_diff_eq!(f, want, epsilon = 1e-3);
        }
        assert_eq!(c.counts[3], 0);

        // variance ≈ mean over repeated draws
        let reps = 4000;
        let draws: Vec<f64> = (0..reps)
            .map(|s| poissonize(&p, 200, s).unwrap().counts[1] as f64)
            .collect();
        let mean = draws.iter().sum::<f64>() / reps as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        assert_abs_diff_eq!(mean, 60.0, epsilon = 1.0);
        assert!((var / mean - 1.0).abs() < 0.1, "{var} {mean}");
        assert!(poissonize(&p, 0, 1).is_err());
    }

    #[test]
    fn histogram_bins() {
        let h = kl_histogram(&[0.0, 0.5, 1.0, 1.0, 2.0], 2, 4).unwrap();
        assert_eq!(h.len(), 4);
        assert_eq!(h[0].probability, 0.2);
        assert_eq!(h[2].probability, 0.2);
        assert_eq!(h[3].probability, 0.4);
        assert_abs_diff_eq!(h[3].bin_right, 1.0);
        let mut buf = Vec::new();
        write_histogram_csv(&h, &mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("bin_left,bin_right,probability\n0.0,0.25,0.2\n"));
    }
}
