use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned Gaussian density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalGaussian {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

impl DiagonalGaussian {
    pub fn new(mean: Vec<f64>, var: Vec<f64>) -> Result<Self> {
        let g = DiagonalGaussian { mean, var };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mean.len() != self.var.len() || self.mean.is_empty() {
            return Err(Error::InvalidModel("gaussian mean and var lengths differ".into()));
        }
        if self.mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidModel("non-finite gaussian mean".into()));
        }
        if self.var.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidModel("gaussian variances must be positive".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        self.mean
            .iter()
            .zip(&self.var)
            .zip(x)
            .map(|((m, v), xi)| -0.5 * ((2.0 * PI * v).ln() + (xi - m) * (xi - m) / v))
            .sum()
    }
}

/// Product of independent per-dimension histograms with equal-width bins over
/// `[lo, hi]`. Zero density outside the support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Probability mass per bin, one row per dimension; each row sums to 1.
    pub masses: Vec<Vec<f64>>,
}

impl Histogram {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, masses: Vec<Vec<f64>>) -> Result<Self> {
        let h = Histogram { lo, hi, masses };
        h.validate()?;
        Ok(h)
    }

    /// Histogram of `samples` with `bins` bins per dimension. Empty bins get
    /// `pseudo_count` extra mass so the density is positive on the whole support.
    pub fn fit(samples: &[Vec<f64>], lo: Vec<f64>, hi: Vec<f64>, bins: usize, pseudo_count: f64) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidModel("histogram needs at least one bin".into()));
        }
        let mut counts = vec![vec![pseudo_count; bins]; lo.len()];
        for x in samples {
            for (d, row) in counts.iter_mut().enumerate() {
                let width = (hi[d] - lo[d]) / bins as f64;
                if x[d] >= lo[d] && x[d] <= hi[d] {
                    let b = (((x[d] - lo[d]) / width) as usize).min(bins - 1);
                    row[b] += 1.0;
                }
            }
        }
        let masses = counts
            .into_iter()
            .map(|row| {
                let total: f64 = row.iter().sum();
                row.into_iter().map(|c| c / total).collect()
            })
            .collect();
        Self::new(lo, hi, masses)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.lo.len();
        if d == 0 || self.hi.len() != d || self.masses.len() != d {
            return Err(Error::InvalidModel("histogram dimension mismatch".into()));
        }
        for k in 0..d {
            if !(self.lo[k].is_finite() && self.hi[k].is_finite() && self.lo[k] < self.hi[k]) {
                return Err(Error::InvalidModel(format!("histogram range {k} is empty")));
            }
            let row = &self.masses[k];
            if row.is_empty() || row.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
                return Err(Error::InvalidModel(format!("histogram masses {k} invalid")));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidModel(format!("histogram masses {k} sum to {total}")));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        let mut total = 0.0;
        for (k, &xk) in x.iter().enumerate().take(self.dim()) {
            let (lo, hi) = (self.lo[k], self.hi[k]);
            if !(lo..=hi).contains(&xk) {
                return f64::NEG_INFINITY;
            }
            let bins = self.masses[k].len();
            let width = (hi - lo) / bins as f64;
            let b = (((xk - lo) / width) as usize).min(bins - 1);
            total += (self.masses[k][b] / width).ln();
        }
        total
    }
}
