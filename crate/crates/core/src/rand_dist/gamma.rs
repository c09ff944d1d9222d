//! Gamma variates by Marsaglia and Tsang's squeeze/rejection method, and
//! Dirichlet vectors as normalized Gammas.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{domain, Result};

/// Gamma(shape, 1) sampler with the per-shape constants precomputed.
///
/// Shapes below 1 are boosted: `G(a) = G(a + 1) · U^(1/a)`.
#[derive(Debug, Clone, Copy)]
pub struct Gamma {
    d: f64,
    c: f64,
    // 1/shape when the boost is active
    boost: Option<f64>,
}

impl Gamma {
    pub fn new(shape: f64) -> Result<Self> {
        if !(shape > 0.0) || !shape.is_finite() {
            return Err(domain(format!("gamma shape must be positive, got {shape}")));
        }
        let (base, boost) = if shape < 1.0 {
            (shape + 1.0, Some(1.0 / shape))
        } else {
            (shape, None)
        };
        let d = base - 1.0 / 3.0;
        Ok(Self {
            d,
            c: 1.0 / (9.0 * d).sqrt(),
            boost,
        })
    }

    #[inline]
    fn base<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let x: f64 = rng.sample(StandardNormal);
            let v = 1.0 + self.c * x;
            if v <= 0.0 {
                continue;
            }
            let v = v * v * v;
            let u: f64 = rng.random();
            let x2 = x * x;
            if u < 1.0 - 0.0331 * x2 * x2 {
                return self.d * v;
            }
            if u.ln() < 0.5 * x2 + self.d * (1.0 - v + v.ln()) {
                return self.d * v;
            }
        }
    }

    /// A Gamma(shape, 1) variate. For very small shapes the result can
    /// underflow to 0; use [`Gamma::sample_ln`] where that matters.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let g = self.base(rng);
        match self.boost {
            Some(inv) => g * open01(rng).powf(inv),
            None => g,
        }
    }

    /// Natural log of a Gamma(shape, 1) variate, without underflow.
    #[inline]
    pub fn sample_ln<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let g = self.base(rng).ln();
        match self.boost {
            Some(inv) => g + open01(rng).ln() * inv,
            None => g,
        }
    }
}

// uniform on (0, 1]
#[inline]
fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// Gamma(shape, scale) variate.
pub fn gamma_sample<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> Result<f64> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(domain(format!("gamma scale must be positive, got {scale}")));
    }
    Ok(Gamma::new(shape)?.sample(rng) * scale)
}

/// Dirichlet draw with the given concentration vector.
pub fn dirichlet_sample<R: Rng + ?Sized>(concentration: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    let mut out = vec![0.0; concentration.len()];
    dirichlet_sample_into(concentration, &mut out, rng)?;
    Ok(out)
}

/// Dirichlet draw written into `out`.
///
/// When every concentration is below 1 the Gammas are drawn and normalized in
/// log space, since all of them may otherwise underflow together.
pub fn dirichlet_sample_into<R: Rng + ?Sized>(
    concentration: &[f64],
    out: &mut [f64],
    rng: &mut R,
) -> Result<()> {
    if concentration.is_empty() {
        return Err(domain("empty Dirichlet concentration"));
    }
    assert_eq!(concentration.len(), out.len());
    let max_conc = concentration.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    if max_conc < 1.0 {
        let mut max_ln = f64::NEG_INFINITY;
        for (o, &a) in out.iter_mut().zip(concentration) {
            *o = Gamma::new(a)?.sample_ln(rng);
            max_ln = max_ln.max(*o);
        }
        for o in out.iter_mut() {
            *o = (*o - max_ln).exp();
        }
    } else {
        for (o, &a) in out.iter_mut().zip(concentration) {
            *o = Gamma::new(a)?.sample(rng);
        }
    }
    let total: f64 = out.iter().sum();
    for o in out.iter_mut() {
        *o /= total;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rand_dist::{stream_rng, StreamKind};

    fn moments(xs: &[f64]) -> (f64, f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let m3 = xs.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
        (mean, var, m3 / var.powf(1.5))
    }

    fn draws(shape: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = stream_rng(seed, StreamKind::Check, 0, 0);
        let g = Gamma::new(shape).unwrap();
        (0..n).map(|_| g.sample(&mut rng)).collect()
    }

    #[test]
    fn exponential_special_case() {
        let xs = draws(1.0, 1_000_000, 1);
        let (mean, var, _) = moments(&xs);
        let se = (var / xs.len() as f64).sqrt();
        assert!((mean - 1.0).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn small_shape_moments() {
        let xs = draws(0.01, 1_000_000, 2);
        let (mean, var, _) = moments(&xs);
        // Var of the sample mean is 0.01/n; sample variance is noisy because of
        // the heavy right tail (kurtosis 6/shape), so allow 10%.
        assert!((mean - 0.01).abs() < 3.0 * (0.01f64 / 1e6).sqrt(), "mean {mean}");
        assert!((var - 0.01).abs() < 0.1 * 0.01, "var {var}");
    }

    #[test]
    fn large_shape_is_nearly_symmetric() {
        let xs = draws(100.0, 1_000_000, 3);
        let (mean, _, skew) = moments(&xs);
        assert!((mean - 100.0).abs() < 0.1);
        assert!(skew.abs() < 0.25, "skew {skew}");
        // the exact skewness is 2/sqrt(100)
        assert!((skew - 0.2).abs() < 0.02, "skew {skew}");
    }

    #[test]
    fn scale_and_domain() {
        let mut rng = stream_rng(4, StreamKind::Check, 0, 0);
        assert!(gamma_sample(0.0, 1.0, &mut rng).is_err());
        assert!(gamma_sample(1.0, -1.0, &mut rng).is_err());
        assert!(gamma_sample(f64::NAN, 1.0, &mut rng).is_err());
        let n = 200_000;
        let mean = (0..n)
            .map(|_| gamma_sample(2.0, 3.0, &mut rng).unwrap())
            .sum::<f64>()
            / n as f64;
        assert!((mean - 6.0).abs() < 0.05, "{mean}");
    }

    #[test]
    fn dirichlet_uniform_means_and_simplex() {
        let mut rng = stream_rng(5, StreamKind::Check, 0, 0);
        let n = 100_000;
        let mut sums = [0.0; 3];
        for _ in 0..n {
            let x = dirichlet_sample(&[1.0, 1.0, 1.0], &mut rng).unwrap();
            assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(x.iter().all(|&v| v >= 0.0));
            for i in 0..3 {
                sums[i] += x[i];
            }
        }
        // Var(x_i) = (1/3)(2/3)/4
        let se = (2.0f64 / 36.0 / n as f64).sqrt();
        for s in sums {
            assert!((s / n as f64 - 1.0 / 3.0).abs() < 3.0 * se);
        }
    }

    #[test]
    fn dirichlet_two_input_variance() {
        let mut rng = stream_rng(6, StreamKind::Check, 0, 0);
        let n = 200_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| dirichlet_sample(&[500.0, 500.0], &mut rng).unwrap()[0])
            .collect();
        let (mean, var, _) = moments(&xs);
        let expect = 0.25 / 1001.0;
        assert!((mean - 0.5).abs() < 3.0 * (expect / n as f64).sqrt());
        assert!((var / expect - 1.0).abs() < 0.02, "var {var} vs {expect}");
    }

    #[test]
    fn dirichlet_tiny_concentrations_stay_on_simplex() {
        let mut rng = stream_rng(7, StreamKind::Check, 0, 0);
        for _ in 0..10_000 {
            let x = dirichlet_sample(&[0.001, 0.001, 0.001, 0.001], &mut rng).unwrap();
            assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(x.iter().all(|v| v.is_finite() && *v >= 0.0));
        }
        assert!(dirichlet_sample(&[1.0, 0.0], &mut rng).is_err());
        assert!(dirichlet_sample(&[], &mut rng).is_err());
    }
}
