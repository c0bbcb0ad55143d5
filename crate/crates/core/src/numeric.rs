//! Compensated accumulation for Monte Carlo aggregates.

/// Neumaier's variant of Kahan summation.
#[derive(Clone, Copy, Debug, Default)]
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

    pub fn sum(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Sample mean and standard error of the mean.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanStat {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

/// Two-pass mean and standard error; a single sample has zero error.
pub fn mean_stat(xs: &[f64]) -> MeanStat {
    let n = xs.len();
    if n == 0 {
        return MeanStat {
            mean: 0.0,
            stderr: 0.0,
            n,
        };
    }
    let mean = xs.iter().copied().collect::<NeumaierSum>().sum() / n as f64;
    let stderr = if n > 1 {
        let ss = xs.iter().map(|x| (x - mean) * (x - mean)).collect::<NeumaierSum>().sum();
        (ss / (n - 1) as f64 / n as f64).sqrt()
    } else {
        0.0
    };
    MeanStat { mean, stderr, n }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensates_cancellation() {
        let s: NeumaierSum = [1.0, 1e100, 1.0, -1e100].into_iter().collect();
        assert_eq!(s.sum(), 2.0);
    }

    #[test]
    fn constant_samples_have_zero_error() {
        let m = mean_stat(&[0.25; 10]);
        assert_eq!(m.mean, 0.25);
        assert_eq!(m.stderr, 0.0);
    }

    #[test]
    fn bernoulli_stderr() {
        let xs = [1.0, 0.0, 1.0, 0.0];
        let m = mean_stat(&xs);
        assert_eq!(m.mean, 0.5);
        // sample variance 1/3, stderr sqrt(1/12)
        assert!((m.stderr - (1.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }
}
