//! Sample statistics shared by the simulators and the CLI.

use serde::Serialize;

/// Mean and standard error of the uncensored samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub n: usize,
    pub censored: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub std_err: f64,
}

impl Summary {
    pub fn new(samples: &[f64], censored: usize) -> Self {
        let n = samples.len();
        let (mut mean, mut m2) = (0.0, 0.0);
        for (i, &x) in samples.iter().enumerate() {
            let delta = x - mean;
            mean += delta / (i + 1) as f64;
            m2 += delta * (x - mean);
        }
        let var = if n > 1 { m2 / (n - 1) as f64 } else { f64::NAN };
        Self {
            n,
            censored,
            mean: if n > 0 { mean } else { f64::NAN },
            std_dev: var.sqrt(),
            std_err: (var / n as f64).sqrt(),
        }
    }

    pub fn censored_fraction(&self) -> f64 {
        let total = self.n + self.censored;
        if total == 0 {
            0.0
        } else {
            self.censored as f64 / total as f64
        }
    }

    /// `|mean - target|` in units of the standard error.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.mean - target).abs() / self.std_err
    }
}

/// Empirical CDF of possibly censored samples; censored samples count in the
/// denominator only, so the curve ends at `1 - censored fraction`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ecdf {
    sorted: Vec<f64>,
    total: usize,
}

impl Ecdf {
    pub fn new(samples: &[f64], censored: usize) -> Self {
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Self {
            total: sorted.len() + censored,
            sorted,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        self.sorted.partition_point(|&x| x <= t) as f64 / self.total as f64
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    pub fn total(&self) -> usize {
        self.total
    }

    /// `(t, F(t))` at every sample, the ECDF's jump points.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.sorted
            .iter()
            .enumerate()
            .map(|(i, &t)| (t, (i + 1) as f64 / self.total as f64))
            .collect()
    }
}

/// `sup_{t >= t_min} |F_a(t) - F_b(t)|`.
pub fn sup_distance(a: &Ecdf, b: &Ecdf, t_min: f64) -> f64 {
    let mut best = (a.eval(t_min) - b.eval(t_min)).abs();
    for &t in a.samples().iter().chain(b.samples()) {
        if t >= t_min {
            best = best.max((a.eval(t) - b.eval(t)).abs());
        }
    }
    best
}

/// Two-sample Kolmogorov–Smirnov statistic and asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let (ea, eb) = (Ecdf::new(a, 0), Ecdf::new(b, 0));
    let d = sup_distance(&ea, &eb, f64::NEG_INFINITY);
    let ne = (a.len() * b.len()) as f64 / (a.len() + b.len()) as f64;
    let sq = ne.sqrt();
    (d, kolmogorov_q((sq + 0.12 + 0.11 / sq) * d))
}

/// Complementary Kolmogorov distribution `Q(x) = 2 sum (-1)^(k-1) exp(-2 k² x²)`.
pub fn kolmogorov_q(x: f64) -> f64 {
    if x < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// Fraction of all samples, censored included.
    pub fraction: f64,
}

/// Histogram over log-spaced bins covering the positive samples.
pub fn log_histogram(samples: &[f64], censored: usize, bins_per_decade: usize) -> Vec<HistogramBin> {
    let positive: Vec<f64> = samples.iter().copied().filter(|&t| t > 0.0).collect();
    if positive.is_empty() || bins_per_decade == 0 {
        return Vec::new();
    }
    let lo = positive.iter().copied().fold(f64::INFINITY, f64::min).log10().floor();
    let hi = positive.iter().copied().fold(0.0, f64::max).log10().ceil().max(lo + 1.0);
    let bins = ((hi - lo) as usize) * bins_per_decade;
    let width = 1.0 / bins_per_decade as f64;
    let mut counts = vec![0usize; bins];
    for t in positive {
        let i = ((t.log10() - lo) / width).floor() as usize;
        counts[i.min(bins - 1)] += 1;
    }
    let total = (samples.len() + censored) as f64;
    counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistogramBin {
            lo: 10f64.powf(lo + i as f64 * width),
            hi: 10f64.powf(lo + (i + 1) as f64 * width),
            count,
            fraction: count as f64 / total,
        })
        .collect()
}
