use serde::Serialize;

/// Sample mean with its standard error (sample standard deviation / √n).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

impl Estimate {
    /// Returns `None` for an empty sample. A single sample has zero
    /// standard error.
    pub fn from_samples<I: IntoIterator<Item = f64>>(samples: I) -> Option<Self> {
        let xs: Vec<f64> = samples.into_iter().collect();
        let n = xs.len();
        if n == 0 {
            return None;
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let se = if n < 2 {
            0.0
        } else {
            let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
            (ss / (n - 1) as f64 / n as f64).sqrt()
        };
        Some(Self { mean, se, n })
    }

    /// `|mean − target| / se`; infinite when the estimate is off target with
    /// zero spread.
    pub fn z_score(&self, target: f64) -> f64 {
        let d = (self.mean - target).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.se
        }
    }

    pub fn within_sigmas(&self, target: f64, sigmas: f64) -> bool {
        (self.mean - target).abs() <= sigmas * self.se
    }
}

/// Binomial standard error of a frequency `k / n`.
pub fn binomial_se(frequency: f64, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    (frequency * (1.0 - frequency) / n as f64).sqrt()
}
