//! Collapsed against uncollapsed Gibbs sampling on a bivariate T target with
//! unit scales and correlation ρ.
//!
//! The uncollapsed chain alternates `Φ | z ~ IG(3, zᵀΣ⁻¹z/2 + 2)` and
//! `z | Φ ~ N₂(0, ΦΣ)`. Integrating Φ out leaves a bivariate T with 4 degrees
//! of freedom (covariance 2Σ), whose coordinate conditionals are
//! `z₁ | z₂ ~ T(ρz₂, (0.8 + 0.2z₂²)(1 − ρ²), 5)`; the collapsed chain scans
//! those. As ρ → 1 the collapsed chain slows down without bound while the
//! uncollapsed one does not.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{domain, Result};
use crate::eval::ess;
use crate::rand_dist::{stream_rng, Gamma, StreamKind};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TDemoConfig {
    pub rho: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl TDemoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho.abs() < 1.0) {
            return Err(domain(format!("rho must lie in (-1, 1), got {}", self.rho)));
        }
        Ok(())
    }
}

fn student_t<R: Rng + ?Sized>(df: f64, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    let chi2 = 2.0 * Gamma::new(df / 2.0).expect("positive shape").sample(rng);
    z / (chi2 / df).sqrt()
}

/// Draw from `T(location, scale, df)`, i.e. `location + √scale · t_df`.
pub fn t_sample<R: Rng + ?Sized>(location: f64, scale: f64, df: f64, rng: &mut R) -> f64 {
    location + scale.sqrt() * student_t(df, rng)
}

/// One collapsed scan: `z₁ | z₂`, then `z₂ | z₁`.
pub fn t_collapsed_step<R: Rng + ?Sized>(z: (f64, f64), rho: f64, rng: &mut R) -> (f64, f64) {
    let shrink = 1.0 - rho * rho;
    let z1 = t_sample(rho * z.1, (0.8 + 0.2 * z.1 * z.1) * shrink, 5.0, rng);
    let z2 = t_sample(rho * z1, (0.8 + 0.2 * z1 * z1) * shrink, 5.0, rng);
    (z1, z2)
}

/// One uncollapsed scan; returns the Φ draw and the new `z`.
pub fn t_uncollapsed_step<R: Rng + ?Sized>(z: (f64, f64), rho: f64, rng: &mut R) -> (f64, (f64, f64)) {
    let shrink = 1.0 - rho * rho;
    let quad = (z.0 * z.0 - 2.0 * rho * z.0 * z.1 + z.1 * z.1) / shrink;
    let phi = (0.5 * quad + 2.0) / Gamma::new(3.0).expect("positive shape").sample(rng);
    let s = phi.sqrt();
    let e1: f64 = rng.sample(StandardNormal);
    let e2: f64 = rng.sample(StandardNormal);
    (phi, (s * e1, s * (rho * e1 + shrink.sqrt() * e2)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TSampler {
    Collapsed,
    Uncollapsed,
}

impl TSampler {
    pub fn name(self) -> &'static str {
        match self {
            TSampler::Collapsed => "collapsed",
            TSampler::Uncollapsed => "uncollapsed",
        }
    }
}

/// Runs one chain from the origin and returns its `z` draws.
pub fn t_chain(sampler: TSampler, config: &TDemoConfig) -> Result<Vec<(f64, f64)>> {
    config.validate()?;
    let bits = config.rho.to_bits();
    let rho_key = (bits >> 32) ^ (bits & 0xffff_ffff);
    let mut rng = stream_rng(config.seed, StreamKind::Demo, sampler as u64, rho_key);
    let mut z = (0.0, 0.0);
    Ok((0..config.iterations)
        .map(|_| {
            z = match sampler {
                TSampler::Collapsed => t_collapsed_step(z, config.rho, &mut rng),
                TSampler::Uncollapsed => t_uncollapsed_step(z, config.rho, &mut rng).1,
            };
            z
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TDemoRow {
    pub rho: f64,
    pub sampler: TSampler,
    /// ESS of the `z₁` trace.
    pub ess: f64,
    pub mean1: f64,
    pub mean2: f64,
    pub var1: f64,
    pub var2: f64,
    pub cov12: f64,
}

pub fn summarize(rho: f64, sampler: TSampler, draws: &[(f64, f64)]) -> TDemoRow {
    let n = draws.len() as f64;
    let mean1 = draws.iter().map(|z| z.0).sum::<f64>() / n;
    let mean2 = draws.iter().map(|z| z.1).sum::<f64>() / n;
    let (mut var1, mut var2, mut cov12) = (0.0, 0.0, 0.0);
    for z in draws {
        let (a, b) = (z.0 - mean1, z.1 - mean2);
        var1 += a * a;
        var2 += b * b;
        cov12 += a * b;
    }
    let trace: Vec<f64> = draws.iter().map(|z| z.0).collect();
    TDemoRow {
        rho,
        sampler,
        ess: ess(&trace),
        mean1,
        mean2,
        var1: var1 / n,
        var2: var2 / n,
        cov12: cov12 / n,
    }
}

/// Both samplers at every ρ, one chain each.
pub fn run_t_comparison(rhos: &[f64], iterations: usize, seed: u64) -> Result<Vec<TDemoRow>> {
    let mut rows = Vec::with_capacity(2 * rhos.len());
    for &rho in rhos {
        let config = TDemoConfig { rho, iterations, seed };
        for sampler in [TSampler::Collapsed, TSampler::Uncollapsed] {
            rows.push(summarize(rho, sampler, &t_chain(sampler, &config)?));
        }
    }
    Ok(rows)
}

pub const T_REPORT_HEADER: &str = "rho,sampler,ess,mean1,mean2,var1,var2,cov12";

pub fn write_t_report<W: Write>(mut out: W, rows: &[TDemoRow]) -> std::io::Result<()> {
    writeln!(out, "{T_REPORT_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{:.3},{:.6},{:.6},{:.6},{:.6},{:.6}",
            r.rho,
            r.sampler.name(),
            r.ess,
            r.mean1,
            r.mean2,
            r.var1,
            r.var2,
            r.cov12
        )?;
    }
    Ok(())
}
