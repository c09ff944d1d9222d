//! Statistical checks of the Poisson Pólya urn: convergence to the Dirichlet
//! as the concentration grows, large-concentration moments, and agreement of
//! the direct and hierarchical constructions.

use std::io::Write;

use crate::error::Result;
use crate::hypothesis::{chi_square_two_sample, ks_statistic};
use crate::rand_dist::{
    dirichlet_sample, ppu_asymptotic_moments, ppu_sample_direct, ppu_sample_hier, stream_rng, StreamKind,
};

/// Largest marginal KS distance between PPU(ϖF) and Dir(ϖF) at one ϖ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub total: f64,
    pub max_ks: f64,
}

/// Coordinate-wise marginal samples, `out[i][s]`.
fn marginals(dim: usize, draws: usize, mut draw: impl FnMut(&mut [f64]) -> Result<()>) -> Result<Vec<Vec<f64>>> {
    let mut out = vec![Vec::with_capacity(draws); dim];
    let mut x = vec![0.0; dim];
    for _ in 0..draws {
        draw(&mut x)?;
        for (col, &v) in out.iter_mut().zip(&x) {
            col.push(v);
        }
    }
    Ok(out)
}

fn direct_marginals(conc: &[f64], draws: usize, rng: &mut impl rand::Rng) -> Result<Vec<Vec<f64>>> {
    marginals(conc.len(), draws, |x| {
        let d = ppu_sample_direct(conc, rng)?;
        x.fill(0.0);
        for (i, p) in d.probs() {
            x[i] = p;
        }
        Ok(())
    })
}

/// KS distances between PPU and Dirichlet marginals at each concentration in
/// `totals`, `draws` samples per side.
pub fn ks_convergence(mean: &[f64], totals: &[f64], draws: usize, seed: u64) -> Result<Vec<ConvergenceRow>> {
    totals
        .iter()
        .enumerate()
        .map(|(c, &total)| {
            let conc: Vec<f64> = mean.iter().map(|f| f * total).collect();
            let mut rng = stream_rng(seed, StreamKind::Check, 100 + c as u64, 0);
            let ppu = direct_marginals(&conc, draws, &mut rng)?;
            let mut rng = stream_rng(seed, StreamKind::Check, 100 + c as u64, 1);
            let dir = marginals(conc.len(), draws, |x| {
                x.copy_from_slice(&dirichlet_sample(&conc, &mut rng)?);
                Ok(())
            })?;
            let max_ks = ppu.iter().zip(&dir).map(|(a, b)| ks_statistic(a, b)).fold(0.0, f64::max);
            Ok(ConvergenceRow { total, max_ks })
        })
        .collect()
}

/// Distances shrink across the sequence with at most one increase, and the
/// last one is below `threshold`.
pub fn convergence_passes(rows: &[ConvergenceRow], threshold: f64) -> bool {
    let increases = rows.windows(2).filter(|w| w[1].max_ks >= w[0].max_ks).count();
    increases <= 1 && rows.last().is_some_and(|r| r.max_ks < threshold)
}

/// Empirical against large-ϖ moments of PPU(ϖF).
#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    pub total: f64,
    pub draws: usize,
    pub mean: Vec<f64>,
    pub mean_emp: Vec<f64>,
    /// Monte Carlo standard error of each empirical mean.
    pub mean_se: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
    pub cov_emp: Vec<Vec<f64>>,
}

impl MomentReport {
    /// Means within `z` standard errors and every covariance entry within
    /// relative error `rel_tol`.
    pub fn passes(&self, z: f64, rel_tol: f64) -> bool {
        let p = self.mean.len();
        let means_ok = (0..p).all(|i| (self.mean_emp[i] - self.mean[i]).abs() < z * self.mean_se[i]);
        let cov_ok = (0..p).all(|i| (0..p).all(|j| self.cov_rel_err(i, j) < rel_tol));
        means_ok && cov_ok
    }

    pub fn cov_rel_err(&self, i: usize, j: usize) -> f64 {
        let t = self.cov[i][j];
        if t == 0.0 {
            self.cov_emp[i][j].abs()
        } else {
            ((self.cov_emp[i][j] - t) / t).abs()
        }
    }
}

pub fn ppu_moments(total: f64, mean: &[f64], draws: usize, seed: u64) -> Result<MomentReport> {
    let p = mean.len();
    let conc: Vec<f64> = mean.iter().map(|f| f * total).collect();
    let mut rng = stream_rng(seed, StreamKind::Check, 200, 0);
    let mut sum = vec![0.0; p];
    let mut cross = vec![vec![0.0; p]; p];
    let mut x = vec![0.0; p];
    for _ in 0..draws {
        let d = ppu_sample_direct(&conc, &mut rng)?;
        x.fill(0.0);
        for (i, v) in d.probs() {
            x[i] = v;
        }
        for i in 0..p {
            sum[i] += x[i];
            for j in 0..p {
                cross[i][j] += x[i] * x[j];
            }
        }
    }
    let n = draws as f64;
    let mean_emp: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let cov_emp: Vec<Vec<f64>> = (0..p)
        .map(|i| {
            (0..p)
                .map(|j| (cross[i][j] - n * mean_emp[i] * mean_emp[j]) / (n - 1.0))
                .collect()
        })
        .collect();
    let mean_se = (0..p).map(|i| (cov_emp[i][i] / n).sqrt()).collect();
    let (mean_th, cov) = ppu_asymptotic_moments(total, mean);
    Ok(MomentReport {
        total,
        draws,
        mean: mean_th,
        mean_emp,
        mean_se,
        cov,
        cov_emp,
    })
}

/// Per-coordinate homogeneity p-values between the direct and hierarchical
/// constructions.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceRow {
    pub total: f64,
    pub mean: Vec<f64>,
    pub p_values: Vec<f64>,
}

impl EquivalenceRow {
    pub fn min_p(&self) -> f64 {
        self.p_values.iter().copied().fold(1.0, f64::min)
    }
}

/// Both constructions return rational coordinates; identical ratios map to
/// identical doubles, and for values in [0, 1] the bit patterns sort like the
/// values, so the chi-square homogeneity test runs on exact value categories.
pub fn construction_equivalence(total: f64, mean: &[f64], draws: usize, seed: u64) -> Result<EquivalenceRow> {
    let conc: Vec<f64> = mean.iter().map(|f| f * total).collect();
    let case = (total.to_bits() >> 32) & 0xffff;
    let mut rng = stream_rng(seed, StreamKind::Check, 300, case);
    let direct = direct_marginals(&conc, draws, &mut rng)?;
    let mut rng = stream_rng(seed, StreamKind::Check, 301, case);
    let hier = marginals(mean.len(), draws, |x| {
        x.copy_from_slice(&ppu_sample_hier(total, mean, &mut rng)?);
        Ok(())
    })?;
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<u64>>();
    let p_values = direct
        .iter()
        .zip(&hier)
        .map(|(a, b)| chi_square_two_sample(&bits(a), &bits(b), 50))
        .collect();
    Ok(EquivalenceRow {
        total,
        mean: mean.to_vec(),
        p_values,
    })
}

/// Sizes and thresholds of the full suite.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteSettings {
    pub convergence_mean: Vec<f64>,
    pub convergence_totals: Vec<f64>,
    pub convergence_draws: usize,
    pub ks_threshold: f64,
    pub moment_total: f64,
    pub moment_mean: Vec<f64>,
    pub moment_draws: usize,
    pub moment_z: f64,
    pub moment_rel_tol: f64,
    pub equivalence_cases: Vec<(f64, Vec<f64>)>,
    pub equivalence_draws: usize,
    pub min_p: f64,
}

impl Default for SuiteSettings {
    fn default() -> Self {
        let third = 1.0 / 3.0;
        Self {
            convergence_mean: vec![0.2, 0.3, 0.5],
            convergence_totals: vec![10.0, 100.0, 1000.0, 10_000.0],
            convergence_draws: 100_000,
            ks_threshold: 0.02,
            moment_total: 1000.0,
            moment_mean: vec![0.2, 0.3, 0.5],
            moment_draws: 1_000_000,
            moment_z: 3.0,
            moment_rel_tol: 0.10,
            equivalence_cases: vec![
                (10.0, vec![third, third, third]),
                (100.0, vec![0.2, 0.3, 0.5]),
                (1000.0, vec![0.05, 0.05, 0.9]),
            ],
            equivalence_draws: 100_000,
            min_p: 0.001,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub settings: SuiteSettings,
    pub convergence: Vec<ConvergenceRow>,
    pub moments: MomentReport,
    pub equivalence: Vec<EquivalenceRow>,
}

impl SuiteReport {
    pub fn convergence_passed(&self) -> bool {
        convergence_passes(&self.convergence, self.settings.ks_threshold)
    }

    pub fn moments_passed(&self) -> bool {
        self.moments.passes(self.settings.moment_z, self.settings.moment_rel_tol)
    }

    pub fn equivalence_passed(&self) -> bool {
        self.equivalence.iter().all(|r| r.min_p() > self.settings.min_p)
    }

    pub fn passed(&self) -> bool {
        self.convergence_passed() && self.moments_passed() && self.equivalence_passed()
    }

    pub fn write_table<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let verdict = |ok: bool| if ok { "pass" } else { "FAIL" };
        writeln!(out, "convergence: max marginal KS distance, PPU vs Dirichlet")?;
        for r in &self.convergence {
            writeln!(out, "  total {:>8}  ks {:.5}", r.total, r.max_ks)?;
        }
        writeln!(out, "  {}", verdict(self.convergence_passed()))?;
        let m = &self.moments;
        writeln!(out, "moments at total {} over {} draws", m.total, m.draws)?;
        for i in 0..m.mean.len() {
            writeln!(
                out,
                "  mean[{i}] {:.6} expected {:.6} (se {:.2e})",
                m.mean_emp[i], m.mean[i], m.mean_se[i]
            )?;
        }
        for i in 0..m.mean.len() {
            for j in i..m.mean.len() {
                writeln!(
                    out,
                    "  cov[{i}][{j}] {:.4e} expected {:.4e} (rel err {:.3})",
                    m.cov_emp[i][j],
                    m.cov[i][j],
                    m.cov_rel_err(i, j)
                )?;
            }
        }
        writeln!(out, "  {}", verdict(self.moments_passed()))?;
        writeln!(out, "direct vs hierarchical construction, per-coordinate p-values")?;
        for r in &self.equivalence {
            let ps: Vec<String> = r.p_values.iter().map(|p| format!("{p:.4}")).collect();
            writeln!(out, "  total {:>6}  p {}", r.total, ps.join(" "))?;
        }
        writeln!(out, "  {}", verdict(self.equivalence_passed()))?;
        Ok(())
    }
}

pub fn run_ppu_suite(settings: SuiteSettings, seed: u64) -> Result<SuiteReport> {
    let convergence = ks_convergence(
        &settings.convergence_mean,
        &settings.convergence_totals,
        settings.convergence_draws,
        seed,
    )?;
    let moments = ppu_moments(settings.moment_total, &settings.moment_mean, settings.moment_draws, seed)?;
    let equivalence = settings
        .equivalence_cases
        .iter()
        .map(|(t, f)| construction_equivalence(*t, f, settings.equivalence_draws, seed))
        .collect::<Result<_>>()?;
    Ok(SuiteReport {
        settings,
        convergence,
        moments,
        equivalence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn convergence_rule() {
        let rows = |v: &[f64]| -> Vec<ConvergenceRow> {
            v.iter().map(|&max_ks| ConvergenceRow { total: 0.0, max_ks }).collect()
        };
        assert!(convergence_passes(&rows(&[0.1, 0.05, 0.02, 0.01]), 0.02));
        assert!(convergence_passes(&rows(&[0.1, 0.05, 0.06, 0.01]), 0.02));
        assert!(!convergence_passes(&rows(&[0.1, 0.11, 0.12, 0.01]), 0.02));
        assert!(!convergence_passes(&rows(&[0.1, 0.05, 0.03]), 0.02));
    }

    #[test]
    fn small_suite_runs() {
        let settings = SuiteSettings {
            convergence_draws: 2000,
            moment_draws: 20_000,
            equivalence_draws: 5000,
            ..Default::default()
        };
        let report = run_ppu_suite(settings, 3).unwrap();
        assert_eq!(report.convergence.len(), 4);
        assert!(report.convergence[0].max_ks > report.convergence[3].max_ks);
        assert!(report.equivalence_passed());
        let mut buf = Vec::new();
        report.write_table(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().contains("moments at total 1000"));
    }
}
