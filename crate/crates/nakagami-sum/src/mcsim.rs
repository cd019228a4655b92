//! Monte-Carlo simulator for equally correlated Nakagami-m envelopes: the
//! ground-truth oracle for the analytic moments, the fitted distribution, and
//! the EGC outage/BER formulas.
//!
//! Each envelope is built from 2·m_z Gaussian components per branch. Per
//! component index one standard Gaussian pair is shared across branches and
//! mixed into per-branch independent pairs with weight λ = ρ^{1/4}, so the
//! underlying Gaussian cross-correlation is √ρ and the resulting power
//! cross-correlation is exactly ρ. Sample i draws from ChaCha stream i of the
//! run's seed, which makes every estimate bit-identical regardless of how the
//! work is split across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::approx::{cdf_power, pdf_envelope, ApproxParams};
use crate::error::{Error, Result};
use crate::moments::ScenarioConfig;

/// Envelope samples for one scenario: `samples[i * L + k]` is branch k of
/// draw i.
#[derive(Debug, Clone)]
pub struct SampleBatch {
    pub samples: Vec<f64>,
    pub config: ScenarioConfig,
    pub seed: u64,
    pub n: usize,
}

impl SampleBatch {
    /// Envelope sums Z_i = Σ_k Z_{k,i}.
    pub fn envelope_sums(&self) -> Vec<f64> {
        let l = self.config.branches;
        self.samples.chunks_exact(l).map(|row| row.iter().sum()).collect()
    }
}

/// Sample moments of the envelope sum with standard errors, the realized mean
/// pairwise power correlation, and a normalized histogram of Z.
#[derive(Debug, Clone)]
pub struct EmpiricalStats {
    pub ez2_hat: f64,
    pub ez2_se: f64,
    pub ez4_hat: f64,
    pub ez4_se: f64,
    /// Mean off-diagonal pairwise power correlation (0 when L = 1).
    pub rho_hat: f64,
    pub histogram: Histogram,
}

/// Density histogram over [lo, hi] with uniform bins; integrates to one.
#[derive(Debug, Clone)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub densities: Vec<f64>,
}

impl Histogram {
    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.densities.len() as f64
    }

    /// Density of the bin containing `x` (zero outside the range).
    pub fn density_at(&self, x: f64) -> f64 {
        if x < self.lo || x > self.hi || self.densities.is_empty() {
            return 0.0;
        }
        let idx = ((x - self.lo) / self.bin_width()) as usize;
        self.densities[idx.min(self.densities.len() - 1)]
    }
}

/// An estimated probability with its standard error.
#[derive(Debug, Clone, Copy)]
pub struct ProbabilityEstimate {
    pub threshold: f64,
    pub value: f64,
    pub se: f64,
}

/// A simulated error rate with its standard error.
#[derive(Debug, Clone, Copy)]
pub struct BerSim {
    pub value: f64,
    pub se: f64,
    pub n_bits: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Modulation {
    CoherentBpsk,
    NoncoherentBfsk,
}

const BLOCK: usize = 1 << 14;

/// One standard-normal pair via Box-Muller.
#[inline]
fn normal_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let u1: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
    let u2: f64 = rng.gen();
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
    (r * c, r * s)
}

/// The RNG for sample index `i`: stream i of the seeded generator.
#[inline]
fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draw the L branch envelopes of one sample into `out`.
#[inline]
fn draw_envelopes(config: &ScenarioConfig, lambda: f64, rng: &mut ChaCha8Rng, out: &mut [f64]) {
    let l = config.branches;
    let mix = (1.0 - lambda * lambda).sqrt();
    out[..l].fill(0.0);
    for _comp in 0..config.m_z {
        let (shared_i, shared_q) = normal_pair(rng);
        for acc in out.iter_mut().take(l) {
            let (x, y) = normal_pair(rng);
            let g = lambda * shared_i + mix * x;
            let h = lambda * shared_q + mix * y;
            *acc += g * g + h * h;
        }
    }
    let scale = 1.0 / (2.0 * f64::from(config.m_z));
    for (acc, &power) in out.iter_mut().zip(&config.powers) {
        *acc = (power * scale * *acc).sqrt();
    }
}

/// Generate `n` correlated envelope draws. Deterministic in (config, n, seed)
/// and independent of the rayon schedule.
pub fn generate(config: &ScenarioConfig, n: usize, seed: u64) -> Result<SampleBatch> {
    config.validate()?;
    if n == 0 {
        return Err(Error::Config("sample count must be at least 1".into()));
    }
    let l = config.branches;
    let lambda = config.rho.powf(0.25);
    let mut samples = vec![0.0f64; n * l];
    samples
        .par_chunks_mut(BLOCK * l)
        .enumerate()
        .for_each(|(block, chunk)| {
            let start = block * BLOCK;
            for (j, row) in chunk.chunks_exact_mut(l).enumerate() {
                let mut rng = stream_rng(seed, (start + j) as u64);
                draw_envelopes(config, lambda, &mut rng, row);
            }
        });
    Ok(SampleBatch {
        samples,
        config: config.clone(),
        seed,
        n,
    })
}

/// Sample moments, realized correlation and a histogram for a batch.
pub fn empirical_stats(batch: &SampleBatch, bins: usize) -> Result<EmpiricalStats> {
    if batch.n < 100 {
        return Err(Error::Config(format!(
            "need at least 100 samples for estimates, got {}",
            batch.n
        )));
    }
    if bins < 10 {
        return Err(Error::Config(format!("need at least 10 bins, got {bins}")));
    }
    let l = batch.config.branches;
    let n = batch.n as f64;

    // Blockwise sums keep the reduction deterministic and accurate.
    #[derive(Clone, Default)]
    struct Acc {
        z2: f64,
        z4: f64,
        z8: f64,
        zmax: f64,
        branch_p: Vec<f64>,
        branch_p2: Vec<f64>,
        cross: Vec<f64>,
    }
    let blocks: Vec<Acc> = batch
        .samples
        .par_chunks(BLOCK * l)
        .map(|chunk| {
            let mut acc = Acc {
                branch_p: vec![0.0; l],
                branch_p2: vec![0.0; l],
                cross: vec![0.0; l * l],
                ..Acc::default()
            };
            for row in chunk.chunks_exact(l) {
                let z: f64 = row.iter().sum();
                let z2 = z * z;
                let z4 = z2 * z2;
                acc.z2 += z2;
                acc.z4 += z4;
                acc.z8 += z4 * z4;
                acc.zmax = acc.zmax.max(z);
                for i in 0..l {
                    let pi = row[i] * row[i];
                    acc.branch_p[i] += pi;
                    acc.branch_p2[i] += pi * pi;
                    for (j, &zj) in row.iter().enumerate().skip(i + 1) {
                        acc.cross[i * l + j] += pi * zj * zj;
                    }
                }
            }
            acc
        })
        .collect();

    let mut total = Acc {
        branch_p: vec![0.0; l],
        branch_p2: vec![0.0; l],
        cross: vec![0.0; l * l],
        ..Acc::default()
    };
    for b in &blocks {
        total.z2 += b.z2;
        total.z4 += b.z4;
        total.z8 += b.z8;
        total.zmax = total.zmax.max(b.zmax);
        for i in 0..l {
            total.branch_p[i] += b.branch_p[i];
            total.branch_p2[i] += b.branch_p2[i];
            for j in 0..l {
                total.cross[i * l + j] += b.cross[i * l + j];
            }
        }
    }

    let ez2_hat = total.z2 / n;
    let ez4_hat = total.z4 / n;
    // Jackknife standard error of a mean reduces to sqrt(var / n) with the
    // n-1 divisor; written out from the raw power sums.
    let var_z2 = (total.z4 / n - ez2_hat * ez2_hat) * n / (n - 1.0);
    let var_z4 = (total.z8 / n - ez4_hat * ez4_hat) * n / (n - 1.0);
    let ez2_se = (var_z2 / n).sqrt();
    let ez4_se = (var_z4 / n).sqrt();

    let mut rho_hat = 0.0;
    if l >= 2 {
        let mut pairs = 0.0;
        for i in 0..l {
            for j in (i + 1)..l {
                let mi = total.branch_p[i] / n;
                let mj = total.branch_p[j] / n;
                let vi = total.branch_p2[i] / n - mi * mi;
                let vj = total.branch_p2[j] / n - mj * mj;
                let cov = total.cross[i * l + j] / n - mi * mj;
                rho_hat += cov / (vi * vj).sqrt();
                pairs += 1.0;
            }
        }
        rho_hat /= pairs;
    }

    // Histogram of Z over [0, max]; total mass one by construction.
    let hi = total.zmax;
    let width = hi / bins as f64;
    let mut counts = vec![0u64; bins];
    for row in batch.samples.chunks_exact(l) {
        let z: f64 = row.iter().sum();
        let idx = ((z / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let densities = counts
        .iter()
        .map(|&c| c as f64 / (n * width))
        .collect();

    Ok(EmpiricalStats {
        ez2_hat,
        ez2_se,
        ez4_hat,
        ez4_se,
        rho_hat,
        histogram: Histogram {
            lo: 0.0,
            hi,
            densities,
        },
    })
}

/// Empirical outage: the fraction of samples whose combiner SNR
/// (ΣZ_k)²/(L N₀) falls at or below each threshold, with binomial standard
/// errors.
pub fn simulate_outage(
    config: &ScenarioConfig,
    n: usize,
    seed: u64,
    thresholds: &[f64],
) -> Result<Vec<ProbabilityEstimate>> {
    config.validate()?;
    if thresholds.iter().any(|&t| !(t >= 0.0)) {
        return Err(Error::Config("outage thresholds must be >= 0".into()));
    }
    let batch = generate(config, n, seed)?;
    let norm = 1.0 / (config.branches as f64 * config.noise_density);
    let snrs: Vec<f64> = batch.envelope_sums().iter().map(|z| z * z * norm).collect();
    let counts: Vec<u64> = thresholds
        .par_iter()
        .map(|&t| snrs.iter().filter(|&&snr| snr <= t).count() as u64)
        .collect();
    let nf = n as f64;
    Ok(thresholds
        .iter()
        .zip(counts)
        .map(|(&threshold, c)| {
            let p = c as f64 / nf;
            ProbabilityEstimate {
                threshold,
                value: p,
                se: (p * (1.0 - p) / nf).sqrt(),
            }
        })
        .collect())
}

/// Per-bit EGC error simulation. Coherent BPSK draws a matched-filter noise
/// sample per bit (error when it falls below -√(2γ)); non-coherent BFSK
/// averages the conditional error probability e^{-γ/2}/2 per realization,
/// which has the same expectation at a fraction of the variance.
pub fn simulate_ber(
    config: &ScenarioConfig,
    modulation: Modulation,
    n_bits: u64,
    seed: u64,
) -> Result<BerSim> {
    config.validate()?;
    if n_bits < 10_000 {
        return Err(Error::Config(format!(
            "need at least 1e4 bits for a BER estimate, got {n_bits}"
        )));
    }
    let l = config.branches;
    let lambda = config.rho.powf(0.25);
    let norm = 1.0 / (l as f64 * config.noise_density);
    let n_blocks = (n_bits as usize).div_ceil(BLOCK);

    // (sum of per-bit values, sum of squares) per block; bits are Bernoulli
    // for BPSK and conditional probabilities for BFSK.
    let block_sums: Vec<(f64, f64)> = (0..n_blocks)
        .into_par_iter()
        .map(|block| {
            let start = block * BLOCK;
            let stop = ((block + 1) * BLOCK).min(n_bits as usize);
            let mut row = vec![0.0f64; l];
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for i in start..stop {
                let mut rng = stream_rng(seed, i as u64);
                draw_envelopes(config, lambda, &mut rng, &mut row);
                let z: f64 = row.iter().sum();
                let snr = z * z * norm;
                let value = match modulation {
                    Modulation::CoherentBpsk => {
                        let (noise, _) = normal_pair(&mut rng);
                        if noise < -(2.0 * snr).sqrt() {
                            1.0
                        } else {
                            0.0
                        }
                    }
                    Modulation::NoncoherentBfsk => 0.5 * (-snr / 2.0).exp(),
                };
                sum += value;
                sum_sq += value * value;
            }
            (sum, sum_sq)
        })
        .collect();

    let nf = n_bits as f64;
    let (sum, sum_sq) = block_sums
        .iter()
        .fold((0.0, 0.0), |acc, b| (acc.0 + b.0, acc.1 + b.1));
    let mean = sum / nf;
    let var = (sum_sq / nf - mean * mean) * nf / (nf - 1.0);
    Ok(BerSim {
        value: mean,
        se: (var.max(0.0) / nf).sqrt(),
        n_bits,
    })
}

/// Kolmogorov-Smirnov distance between the empirical CDF of Z and the fitted
/// CDF evaluated over the sorted sample points.
///
/// Evaluating the Φ₂ form a million times would dominate the run, so the
/// fitted CDF is accumulated instead: Simpson panels of the envelope density
/// between consecutive order statistics, anchored at the first point by the
/// series/quadrature CDF and cross-checked against it at the median.
pub fn ks_distance(batch: &SampleBatch, p: &ApproxParams) -> Result<f64> {
    if batch.n < 10_000 {
        return Err(Error::Config(format!(
            "need at least 1e4 samples for a KS distance, got {}",
            batch.n
        )));
    }
    let mut sums = batch.envelope_sums();
    sums.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite envelope sums"));
    let n = sums.len();

    // Per-gap Simpson panels of f_R, then a sequential prefix accumulation.
    let panels: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let lo = if i == 0 { return 0.0 } else { sums[i - 1] };
            let hi = sums[i];
            let mid = 0.5 * (lo + hi);
            let flo = pdf_envelope(lo, p).unwrap_or(f64::NAN);
            let fmid = pdf_envelope(mid, p).unwrap_or(f64::NAN);
            let fhi = pdf_envelope(hi, p).unwrap_or(f64::NAN);
            (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)
        })
        .collect();

    let mut cdf = cdf_power(sums[0] * sums[0], p)?;
    let mut dist = 0.0f64;
    let nf = n as f64;
    for (i, panel) in panels.iter().enumerate() {
        cdf = (cdf + panel).min(1.0);
        if !cdf.is_finite() {
            return Err(Error::Convergence("KS accumulation went non-finite".into()));
        }
        let above = (i as f64 + 1.0) / nf - cdf;
        let below = cdf - i as f64 / nf;
        dist = dist.max(above.abs()).max(below.abs());
        if i == n / 2 {
            // Anchor check: the cumulative panels must still track the CDF.
            let direct = cdf_power(sums[i] * sums[i], p)?;
            if (direct - cdf).abs() > 1e-6 {
                return Err(Error::Convergence(format!(
                    "KS accumulation drifted from the CDF: {cdf} vs {direct}"
                )));
            }
        }
    }
    Ok(dist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::fit;
    use ::approx::assert_relative_eq;

    fn config(branches: usize, m_z: u32, rho: f64, powers: Vec<f64>) -> ScenarioConfig {
        ScenarioConfig::new(branches, m_z, rho, powers, 1.0).unwrap()
    }

    #[test]
    fn generation_is_reproducible() {
        let cfg = config(3, 2, 0.4, vec![1.0, 0.8, 0.64]);
        let a = generate(&cfg, 40_000, 7).unwrap();
        let b = generate(&cfg, 40_000, 7).unwrap();
        assert_eq!(a.samples, b.samples);
        // A different count reuses the same leading streams.
        let c = generate(&cfg, 1_000, 7).unwrap();
        assert_eq!(&a.samples[..1_000 * 3], &c.samples[..]);
        let d = generate(&cfg, 40_000, 8).unwrap();
        assert_ne!(a.samples, d.samples);
    }

    #[test]
    fn generation_is_independent_of_worker_count() {
        let cfg = config(2, 2, 0.3, vec![1.0, 0.7]);
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| generate(&cfg, 50_000, 99).unwrap());
        let many = rayon::ThreadPoolBuilder::new()
            .num_threads(8)
            .build()
            .unwrap()
            .install(|| generate(&cfg, 50_000, 99).unwrap());
        assert_eq!(single.samples, many.samples);
        let ber_one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| simulate_ber(&cfg, Modulation::NoncoherentBfsk, 50_000, 99).unwrap());
        let ber_many = rayon::ThreadPoolBuilder::new()
            .num_threads(8)
            .build()
            .unwrap()
            .install(|| simulate_ber(&cfg, Modulation::NoncoherentBfsk, 50_000, 99).unwrap());
        assert_eq!(ber_one.value.to_bits(), ber_many.value.to_bits());
    }

    #[test]
    fn rayleigh_power_normalizes() {
        // rho = 0, L = 1, m = 1: E[Z^2] = 1 within 5 standard errors.
        let cfg = config(1, 1, 0.0, vec![1.0]);
        let batch = generate(&cfg, 200_000, 11).unwrap();
        let stats = empirical_stats(&batch, 50).unwrap();
        assert!((stats.ez2_hat - 1.0).abs() <= 5.0 * stats.ez2_se);
    }

    #[test]
    fn nakagami_power_kurtosis() {
        // E[Z^4]/E[Z^2]^2 = 1 + 1/m for a single branch.
        let cfg = config(1, 2, 0.0, vec![1.0]);
        let batch = generate(&cfg, 200_000, 13).unwrap();
        let stats = empirical_stats(&batch, 50).unwrap();
        let ratio = stats.ez4_hat / (stats.ez2_hat * stats.ez2_hat);
        // Standard error of the ratio is dominated by the fourth moment.
        let se = stats.ez4_se / (stats.ez2_hat * stats.ez2_hat);
        assert!((ratio - 1.5).abs() <= 5.0 * se, "ratio {ratio}");
    }

    #[test]
    fn realized_power_correlation_matches_rho() {
        let cfg = config(4, 2, 0.5, vec![1.0; 4]);
        let batch = generate(&cfg, 200_000, 17).unwrap();
        let stats = empirical_stats(&batch, 50).unwrap();
        // SE of a correlation estimate is about (1 - rho^2)/sqrt(n).
        let se = (1.0 - 0.5f64 * 0.5) / (batch.n as f64).sqrt();
        assert!(
            (stats.rho_hat - 0.5).abs() <= 5.0 * se,
            "rho_hat = {}",
            stats.rho_hat
        );
    }

    #[test]
    fn branch_marginals_match_nakagami_moments() {
        let cfg = config(3, 2, 0.3, vec![1.0, 0.7, 0.49]);
        let batch = generate(&cfg, 200_000, 19).unwrap();
        let l = cfg.branches;
        let n = batch.n as f64;
        for k in 0..l {
            let (mut p1, mut p2, mut p4) = (0.0, 0.0, 0.0);
            for row in batch.samples.chunks_exact(l) {
                let p = row[k] * row[k];
                p1 += p;
                p2 += p * p;
                p4 += p * p * p * p;
            }
            let mean = p1 / n;
            let m2 = p2 / n;
            let se = ((m2 - mean * mean) / n).sqrt();
            assert!(
                (mean - cfg.powers[k]).abs() <= 5.0 * se,
                "branch {k}: mean-square {mean} vs {}",
                cfg.powers[k]
            );
            // E[Z^4] = Omega^2 (1 + 1/m) with m = 2.
            let expect4 = cfg.powers[k] * cfg.powers[k] * 1.5;
            let se4 = ((p4 / n - m2 * m2) / n).sqrt();
            assert!(
                (m2 - expect4).abs() <= 5.0 * se4,
                "branch {k}: fourth moment {m2} vs {expect4}"
            );
        }
    }

    #[test]
    fn estimator_homogeneity() {
        let cfg = config(2, 1, 0.2, vec![1.0, 1.0]);
        let batch = generate(&cfg, 20_000, 23).unwrap();
        let stats = empirical_stats(&batch, 40).unwrap();
        let c = 1.7f64;
        let mut scaled = batch.clone();
        for s in &mut scaled.samples {
            *s *= c;
        }
        let scaled_stats = empirical_stats(&scaled, 40).unwrap();
        assert_relative_eq!(
            scaled_stats.ez2_hat,
            c * c * stats.ez2_hat,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            scaled_stats.ez4_hat,
            c * c * c * c * stats.ez4_hat,
            max_relative = 1e-12
        );
    }

    #[test]
    fn histogram_integrates_to_one() {
        let cfg = config(2, 2, 0.4, vec![1.0, 0.5]);
        let batch = generate(&cfg, 50_000, 29).unwrap();
        let stats = empirical_stats(&batch, 64).unwrap();
        let mass: f64 = stats.histogram.densities.iter().sum::<f64>() * stats.histogram.bin_width();
        assert_relative_eq!(mass, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn outage_simulation_limits() {
        let cfg = config(2, 1, 0.3, vec![1.0, 1.0]);
        let est = simulate_outage(&cfg, 20_000, 31, &[0.0, 1e9]).unwrap();
        assert_eq!(est[0].value, 0.0);
        assert_eq!(est[1].value, 1.0);
    }

    #[test]
    fn ber_simulation_no_signal_limit() {
        // Vanishing SNR: both modulations sit at 1/2.
        let mut cfg = config(2, 1, 0.2, vec![1.0, 1.0]);
        cfg.noise_density = 1e9;
        let bpsk = simulate_ber(&cfg, Modulation::CoherentBpsk, 20_000, 37).unwrap();
        assert!((bpsk.value - 0.5).abs() <= 3.0 * bpsk.se.max(1e-4));
        let bfsk = simulate_ber(&cfg, Modulation::NoncoherentBfsk, 20_000, 37).unwrap();
        assert!((bfsk.value - 0.5).abs() <= 3.0 * bfsk.se.max(1e-6));
    }

    #[test]
    fn ber_simulation_matches_classical_rayleigh() {
        // L = 1, m = 1, gamma = 10 dB: P ~ 0.02327 (within 3 SE at 2e5 bits).
        let mut cfg = config(1, 1, 0.0, vec![1.0]);
        cfg.noise_density = 0.1;
        let sim = simulate_ber(&cfg, Modulation::CoherentBpsk, 200_000, 41).unwrap();
        let expected = 0.023_268_705_377_203_824;
        assert!(
            (sim.value - expected).abs() <= 3.0 * sim.se,
            "sim {} vs {expected} (se {})",
            sim.value,
            sim.se
        );
    }

    #[test]
    fn ks_distance_null_case() {
        // L = 1 batches come from the fitted law itself, so the distance obeys
        // the KS null distribution: <= 1.63/sqrt(n) at the 99th percentile.
        let cfg = config(1, 2, 0.0, vec![1.0]);
        let batch = generate(&cfg, 10_000, 43).unwrap();
        let p = fit(&cfg).unwrap();
        let d = ks_distance(&batch, &p).unwrap();
        assert!(d <= 1.63 / (batch.n as f64).sqrt(), "KS = {d}");
    }

    #[test]
    fn ks_distance_is_scale_invariant() {
        let cfg = config(2, 2, 0.3, vec![1.0, 0.8]);
        let batch = generate(&cfg, 10_000, 47).unwrap();
        let p = fit(&cfg).unwrap();
        let d1 = ks_distance(&batch, &p).unwrap();
        let c = 2.5f64;
        let mut scaled = batch.clone();
        for s in &mut scaled.samples {
            *s *= c;
        }
        let ps = ApproxParams::new(p.omega_r * c * c, p.m_r, p.branches, p.rho).unwrap();
        let d2 = ks_distance(&scaled, &ps).unwrap();
        assert!((d1 - d2).abs() <= 1e-9, "{d1} vs {d2}");
    }

    #[test]
    fn input_validation() {
        let cfg = config(2, 1, 0.2, vec![1.0, 1.0]);
        assert!(generate(&cfg, 0, 1).is_err());
        let batch = generate(&cfg, 200, 1).unwrap();
        assert!(empirical_stats(&batch, 5).is_err());
        let small = generate(&cfg, 99, 1);
        assert!(small.is_ok());
        assert!(empirical_stats(&small.unwrap(), 20).is_err());
        assert!(simulate_ber(&cfg, Modulation::CoherentBpsk, 100, 1).is_err());
        assert!(simulate_outage(&cfg, 100, 1, &[-1.0]).is_err());
    }
}
