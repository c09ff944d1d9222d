//! Poisson variates: an exact generic sampler, a zero-truncated variant, and
//! the alias-table cache for rates of the form `β + l`.

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Result};

use super::AliasTable;

/// Largest `l` served from alias tables by default.
pub const DEFAULT_CACHE_LIMIT: usize = 100;

/// Probability mass allowed beyond each cached table's support.
pub const TRUNCATION_TAIL_MASS: f64 = 1e-12;

const INVERSION_MAX_RATE: f64 = 10.0;

/// Exact Poisson(rate) variate.
///
/// Sequential-search inversion for `rate <= 10`, Hörmann's transformed
/// rejection with squeeze (PTRS) above.
pub fn poisson_sample<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> Result<u64> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(domain(format!("Poisson rate must be >= 0, got {rate}")));
    }
    Ok(if rate == 0.0 {
        0
    } else if rate <= INVERSION_MAX_RATE {
        inversion(rate, rng)
    } else {
        ptrs(rate, rng)
    })
}

fn inversion<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> u64 {
    let u: f64 = rng.random();
    let mut k = 0u64;
    let mut p = (-rate).exp();
    let mut cdf = p;
    // p == 0 guards against a cdf that saturates just below u
    while u > cdf && p > 0.0 {
        k += 1;
        p *= rate / k as f64;
        cdf += p;
    }
    k
}

fn ptrs<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> u64 {
    let slam = rate.sqrt();
    let loglam = rate.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = rng.random::<f64>() - 0.5;
        let v: f64 = rng.random();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + rate + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        if lhs <= -rate + k * loglam - ln_gamma(k + 1.0) {
            return k as u64;
        }
    }
}

/// Poisson(rate) conditioned on a positive outcome.
pub fn zero_truncated_poisson_sample<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> Result<u64> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(domain(format!("zero-truncated Poisson rate must be > 0, got {rate}")));
    }
    if rate > INVERSION_MAX_RATE {
        // P(0) < e^-10, rejection is cheap
        loop {
            let k = ptrs(rate, rng);
            if k > 0 {
                return Ok(k);
            }
        }
    }
    let u: f64 = rng.random();
    let mut k = 1u64;
    let mut p = rate * (-rate).exp() / -(-rate).exp_m1();
    let mut cdf = p;
    while u > cdf && p > 0.0 {
        k += 1;
        p *= rate / k as f64;
        cdf += p;
    }
    Ok(k)
}

/// Alias tables for Poisson(β + l), `l = 0..=L`, each truncated where the
/// remaining tail mass drops to [`TRUNCATION_TAIL_MASS`]. Counts above `L`
/// fall back to a rounded Gaussian with matching mean and variance.
#[derive(Debug, Clone)]
pub struct PoissonAliasCache {
    beta: f64,
    tables: Vec<AliasTable>,
}

impl PoissonAliasCache {
    pub fn new(beta: f64, limit: usize) -> Result<Self> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(domain(format!("cache rate offset must be >= 0, got {beta}")));
        }
        let tables = (0..=limit)
            .map(|l| AliasTable::new(&truncated_pmf(beta + l as f64)))
            .collect::<Result<_>>()?;
        Ok(Self { beta, tables })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Largest count served by an alias table.
    pub fn limit(&self) -> usize {
        self.tables.len() - 1
    }

    /// Support size of the table for count `l`.
    pub fn support(&self, l: usize) -> Option<usize> {
        self.tables.get(l).map(AliasTable::len)
    }

    /// Draw approximately from Poisson(β + l).
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, l: u64, rng: &mut R) -> u64 {
        match self.tables.get(l as usize) {
            Some(t) => t.sample(rng) as u64,
            None => {
                let rate = self.beta + l as f64;
                let z: f64 = rng.sample(StandardNormal);
                (rate + rate.sqrt() * z).round().max(0.0) as u64
            }
        }
    }
}

/// Poisson pmf on `0..=t`, with `t` the first point whose CDF reaches
/// `1 - TRUNCATION_TAIL_MASS`.
fn truncated_pmf(rate: f64) -> Vec<f64> {
    let mut p = (-rate).exp();
    let mut pmf = vec![p];
    let mut cdf = p;
    let mut k = 0.0;
    while 1.0 - cdf > TRUNCATION_TAIL_MASS {
        k += 1.0;
        p *= rate / k;
        pmf.push(p);
        cdf += p;
    }
    pmf
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypothesis::chi_square_two_sample;
    use crate::rand_dist::{stream_rng, StreamKind};

    fn mean_var(xs: &[u64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().map(|&x| x as f64).sum::<f64>() / n;
        let var = xs.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn zero_rate_and_domain() {
        let mut rng = stream_rng(1, StreamKind::Check, 0, 0);
        for _ in 0..100 {
            assert_eq!(poisson_sample(0.0, &mut rng).unwrap(), 0);
        }
        assert!(poisson_sample(-1.0, &mut rng).is_err());
        assert!(poisson_sample(f64::INFINITY, &mut rng).is_err());
        assert!(zero_truncated_poisson_sample(0.0, &mut rng).is_err());
    }

    #[test]
    fn small_rate_zero_frequency() {
        let mut rng = stream_rng(2, StreamKind::Check, 0, 0);
        let n = 1_000_000;
        let zeros = (0..n)
            .filter(|_| poisson_sample(0.01, &mut rng).unwrap() == 0)
            .count();
        let p0 = (-0.01f64).exp();
        let se = (p0 * (1.0 - p0) / n as f64).sqrt();
        assert!((zeros as f64 / n as f64 - p0).abs() < 3.0 * se);
    }

    #[test]
    fn moments_on_both_sides_of_the_switch() {
        for (seed, rate) in [(3u64, 5.0), (4, 10.5), (5, 37.0), (6, 1234.5)] {
            let mut rng = stream_rng(seed, StreamKind::Check, 0, 0);
            let n = 400_000;
            let xs: Vec<u64> = (0..n).map(|_| poisson_sample(rate, &mut rng).unwrap()).collect();
            let (mean, var) = mean_var(&xs);
            let se = (rate / n as f64).sqrt();
            assert!((mean - rate).abs() < 3.5 * se, "rate {rate}: mean {mean}");
            // Var(s^2) ~ (2 rate^2 + rate) / n
            let var_se = ((2.0 * rate * rate + rate) / n as f64).sqrt();
            assert!((var - rate).abs() < 4.0 * var_se, "rate {rate}: var {var}");
        }
    }

    #[test]
    fn ptrs_matches_pmf() {
        // chi-square of the PTRS branch against the exact pmf at rate 20
        let rate = 20.0;
        let mut rng = stream_rng(7, StreamKind::Check, 0, 0);
        let n = 200_000;
        let mut counts = vec![0usize; 60];
        for _ in 0..n {
            let k = poisson_sample(rate, &mut rng).unwrap() as usize;
            counts[k.min(59)] += 1;
        }
        let mut probs: Vec<f64> = (0..59)
            .map(|k| (-rate + k as f64 * f64::ln(rate) - ln_gamma(k as f64 + 1.0)).exp())
            .collect();
        probs.push(1.0 - probs.iter().sum::<f64>());
        let p = crate::hypothesis::chi_square_gof(&counts, &probs);
        assert!(p > 0.001, "p = {p}");
    }

    #[test]
    fn zero_truncated_unit_mass() {
        let mut rng = stream_rng(8, StreamKind::Check, 0, 0);
        let n = 200_000;
        let ones = (0..n)
            .filter(|_| zero_truncated_poisson_sample(0.1, &mut rng).unwrap() == 1)
            .count();
        let p1 = 0.1 * (-0.1f64).exp() / (1.0 - (-0.1f64).exp());
        assert!((p1 - 0.951).abs() < 1e-3);
        let se = (p1 * (1.0 - p1) / n as f64).sqrt();
        assert!((ones as f64 / n as f64 - p1).abs() < 3.0 * se);
        for _ in 0..1000 {
            assert!(zero_truncated_poisson_sample(50.0, &mut rng).unwrap() > 0);
        }
    }

    #[test]
    fn cache_truncation_mass() {
        let cache = PoissonAliasCache::new(0.01, DEFAULT_CACHE_LIMIT).unwrap();
        assert_eq!(cache.limit(), 100);
        for l in [0usize, 1, 7, 50, 100] {
            let pmf = truncated_pmf(0.01 + l as f64);
            let mass: f64 = pmf.iter().sum();
            assert!(1.0 - mass <= TRUNCATION_TAIL_MASS);
            assert_eq!(cache.support(l), Some(pmf.len()));
        }
    }

    #[test]
    fn cache_matches_exact_sampler_at_zero() {
        let cache = PoissonAliasCache::new(0.01, 100).unwrap();
        let mut r1 = stream_rng(9, StreamKind::Check, 0, 0);
        let mut r2 = stream_rng(9, StreamKind::Check, 0, 1);
        let n = 200_000;
        let a: Vec<u64> = (0..n).map(|_| cache.sample(0, &mut r1)).collect();
        let b: Vec<u64> = (0..n).map(|_| poisson_sample(0.01, &mut r2).unwrap()).collect();
        let p = chi_square_two_sample(&a, &b, 5);
        assert!(p > 0.001, "p = {p}");
    }

    #[test]
    fn cache_mid_and_gaussian_tail() {
        let cache = PoissonAliasCache::new(0.01, 100).unwrap();
        let mut rng = stream_rng(10, StreamKind::Check, 0, 0);
        let n = 200_000;
        let xs: Vec<u64> = (0..n).map(|_| cache.sample(50, &mut rng)).collect();
        let (mean, var) = mean_var(&xs);
        assert!((mean - 50.01).abs() < 3.5 * (50.01f64 / n as f64).sqrt());
        assert!((var / 50.01 - 1.0).abs() < 0.02);

        let n = 1_000_000;
        let xs: Vec<u64> = (0..n).map(|_| cache.sample(200, &mut rng)).collect();
        let (mean, var) = mean_var(&xs);
        assert!((mean / 200.01 - 1.0).abs() < 0.01, "mean {mean}");
        assert!((var / 200.01 - 1.0).abs() < 0.01, "var {var}");
    }
}
