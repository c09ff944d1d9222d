//! Goodness-of-fit and two-sample tests used by the statistical checks.

use std::collections::BTreeMap;

use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::erf::erfc;

const MIN_EXPECTED: f64 = 5.0;

/// A chi-square statistic with its degrees of freedom. Statistics of
/// independent tests add up, as do their degrees of freedom.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ChiSquare {
    pub stat: f64,
    pub df: f64,
}

impl ChiSquare {
    pub fn p_value(&self) -> f64 {
        if self.df <= 0.0 {
            return 1.0;
        }
        chi_square_sf(self.stat, self.df)
    }
}

impl std::ops::Add for ChiSquare {
    type Output = ChiSquare;

    fn add(self, o: ChiSquare) -> ChiSquare {
        ChiSquare {
            stat: self.stat + o.stat,
            df: self.df + o.df,
        }
    }
}

/// Pearson chi-square goodness of fit. Adjacent bins are pooled until each
/// expected count reaches 5. Returns the p-value.
pub fn chi_square_gof(observed: &[usize], probs: &[f64]) -> f64 {
    chi_square_gof_stat(observed, probs).p_value()
}

/// Statistic behind [`chi_square_gof`].
pub fn chi_square_gof_stat(observed: &[usize], probs: &[f64]) -> ChiSquare {
    assert_eq!(observed.len(), probs.len());
    let n: usize = observed.iter().sum();
    let total_p: f64 = probs.iter().sum();
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (&obs, &p) in observed.iter().zip(probs) {
        o += obs as f64;
        e += p / total_p * n as f64;
        if e >= MIN_EXPECTED {
            bins.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        match bins.last_mut() {
            Some(last) => {
                last.0 += o;
                last.1 += e;
            }
            None => bins.push((o, e)),
        }
    }
    if bins.len() < 2 {
        return ChiSquare::default();
    }
    let stat: f64 = bins.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    ChiSquare {
        stat,
        df: (bins.len() - 1) as f64,
    }
}

/// Chi-square test of homogeneity between two samples of integers. Values are
/// pooled in ascending order until every bin holds `min_count` observations
/// from the pooled sample. Returns the p-value.
pub fn chi_square_two_sample(a: &[u64], b: &[u64], min_count: usize) -> f64 {
    chi_square_two_sample_stat(a, b, min_count).p_value()
}

/// Statistic behind [`chi_square_two_sample`].
pub fn chi_square_two_sample_stat(a: &[u64], b: &[u64], min_count: usize) -> ChiSquare {
    let mut table: BTreeMap<u64, (f64, f64)> = BTreeMap::new();
    for &x in a {
        table.entry(x).or_default().0 += 1.0;
    }
    for &x in b {
        table.entry(x).or_default().1 += 1.0;
    }
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut cur = (0.0, 0.0);
    for (_, (ca, cb)) in table {
        cur.0 += ca;
        cur.1 += cb;
        if cur.0 + cur.1 >= min_count as f64 {
            bins.push(cur);
            cur = (0.0, 0.0);
        }
    }
    if cur.0 + cur.1 > 0.0 {
        match bins.last_mut() {
            Some(last) => {
                last.0 += cur.0;
                last.1 += cur.1;
            }
            None => bins.push(cur),
        }
    }
    if bins.len() < 2 {
        return ChiSquare::default();
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let n = na + nb;
    let stat: f64 = bins
        .iter()
        .map(|&(ca, cb)| {
            let row = ca + cb;
            let ea = row * na / n;
            let eb = row * nb / n;
            (ca - ea).powi(2) / ea + (cb - eb).powi(2) / eb
        })
        .sum();
    ChiSquare {
        stat,
        df: (bins.len() - 1) as f64,
    }
}

fn chi_square_sf(stat: f64, df: f64) -> f64 {
    ChiSquared::new(df).expect("df > 0").sf(stat)
}

/// Two-sample Kolmogorov–Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic p-value of a two-sample KS statistic. Conservative for
/// discrete data.
pub fn ks_p_value(d: f64, na: usize, nb: usize) -> f64 {
    let ne = (na * nb) as f64 / (na + nb) as f64;
    let sq = ne.sqrt();
    kolmogorov_sf((sq + 0.12 + 0.11 / sq) * d)
}

fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sided normal p-value for a z-score.
pub fn normal_two_sided(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2)
}
