//! The Poisson Pólya urn: normalized independent Poisson counts conditioned on
//! a nonzero total.
//!
//! Two constructions are provided. [`ppu_sample_direct`] draws the Poisson
//! counts coordinate-wise and redraws the whole vector on a zero total.
//! [`ppu_sample_hier`] draws the total from a zero-truncated Poisson and then
//! scatters that many categorical draws; it is the independent oracle for the
//! direct form.

use rand::Rng;

use crate::error::{domain, Result};

use super::{poisson_sample, zero_truncated_poisson_sample, AliasTable};

/// One PPU draw in sparse form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PpuDraw {
    dim: usize,
    counts: Vec<(usize, u64)>,
    total: u64,
}

impl PpuDraw {
    /// Nonzero `(index, count)` pairs in ascending index order.
    pub fn counts(&self) -> &[(usize, u64)] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Nonzero `(index, count / total)` pairs.
    pub fn probs(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        let t = self.total as f64;
        self.counts.iter().map(move |&(i, c)| (i, c as f64 / t))
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (i, p) in self.probs() {
            out[i] = p;
        }
        out
    }
}

/// PPU(concentration) by independent Poisson draws, with full-vector
/// rejection whenever the total comes out zero.
pub fn ppu_sample_direct<R: Rng + ?Sized>(concentration: &[f64], rng: &mut R) -> Result<PpuDraw> {
    let mut sum = 0.0;
    for &c in concentration {
        if !(c >= 0.0) || !c.is_finite() {
            return Err(domain(format!("PPU concentration entries must be >= 0, got {c}")));
        }
        sum += c;
    }
    if !(sum > 0.0) {
        return Err(domain("PPU concentration sums to zero"));
    }
    let mut counts = Vec::new();
    loop {
        counts.clear();
        let mut total = 0;
        for (i, &c) in concentration.iter().enumerate() {
            let x = poisson_sample(c, rng)?;
            if x > 0 {
                counts.push((i, x));
                total += x;
            }
        }
        if total > 0 {
            return Ok(PpuDraw {
                dim: concentration.len(),
                counts,
                total,
            });
        }
    }
}

fn check_simplex(mean: &[f64]) -> Result<()> {
    if mean.is_empty() {
        return Err(domain("empty probability vector"));
    }
    if mean.iter().any(|&f| !(f >= 0.0) || !f.is_finite()) {
        return Err(domain("probability vector has negative or non-finite entries"));
    }
    let s: f64 = mean.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(domain(format!("probability vector sums to {s}")));
    }
    Ok(())
}

/// PPU(ϖ, F) through the hierarchical form: `π ~ Pois⁺(ϖ)`, then `π`
/// categorical draws from `F`, returned as a normalized histogram.
pub fn ppu_sample_hier<R: Rng + ?Sized>(total: f64, mean: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    if !(total > 0.0) || !total.is_finite() {
        return Err(domain(format!("PPU concentration must be > 0, got {total}")));
    }
    check_simplex(mean)?;
    let table = AliasTable::new(mean)?;
    let arrivals = zero_truncated_poisson_sample(total, rng)?;
    let mut hist = vec![0u64; mean.len()];
    for _ in 0..arrivals {
        hist[table.sample(rng)] += 1;
    }
    let n = arrivals as f64;
    Ok(hist.into_iter().map(|c| c as f64 / n).collect())
}

/// Large-ϖ mean and covariance of PPU(ϖ, F): mean `F`, variance
/// `F_i (1 - F_i) / ϖ`, covariance `-F_i F_j / ϖ`.
pub fn ppu_asymptotic_moments(total: f64, mean: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let p = mean.len();
    let mut cov = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in 0..p {
            cov[i][j] = if i == j {
                mean[i] * (1.0 - mean[i]) / total
            } else {
                -mean[i] * mean[j] / total
            };
        }
    }
    (mean.to_vec(), cov)
}
