//! Exact second and fourth moments of the equally correlated envelope sum and
//! the W cross-moment coefficients.
//!
//! Every W coefficient exists in three routes: an elementary/₂F₁ closed form
//! where one is known, the Lauricella F_A closed form, and a Gauss-Laguerre
//! quadrature of the defining integral. The quadrature is the independent
//! oracle: in debug builds the closed forms are checked against the F_A route
//! on every call.

use crate::error::{Error, Result};
use crate::hyperfn::{gammaln, gauss_2f1, kummer_1f1, lauricella_fa, SeriesControl};
use crate::quadrature::gauss_laguerre;

/// Maximum correlation accepted by configs: 1 - sqrt(rho) -> 0 makes the
/// fitted distribution singular.
pub const MAX_RHO: f64 = 0.999;

/// One fading scenario: `branches` equally correlated Nakagami-m envelopes
/// with per-branch average powers `powers`, integer fading parameter `m_z`,
/// common power correlation `rho`, and a noise density used by the SNR-domain
/// layers.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScenarioConfig {
    pub branches: usize,
    pub m_z: u32,
    pub rho: f64,
    pub powers: Vec<f64>,
    pub noise_density: f64,
}

impl ScenarioConfig {
    pub fn new(
        branches: usize,
        m_z: u32,
        rho: f64,
        powers: Vec<f64>,
        noise_density: f64,
    ) -> Result<Self> {
        let config = Self {
            branches,
            m_z,
            rho,
            powers,
            noise_density,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.branches == 0 {
            return Err(Error::Config("branch count must be at least 1".into()));
        }
        if self.m_z == 0 {
            return Err(Error::Config("fading parameter m_z must be at least 1".into()));
        }
        if !(self.rho >= 0.0 && self.rho <= MAX_RHO) {
            return Err(Error::Config(format!(
                "correlation must lie in [0, {MAX_RHO}], got {}",
                self.rho
            )));
        }
        if self.powers.len() != self.branches {
            return Err(Error::Config(format!(
                "expected {} branch powers, got {}",
                self.branches,
                self.powers.len()
            )));
        }
        if !self.powers.iter().all(|&p| p.is_finite() && p > 0.0) {
            return Err(Error::Config("branch powers must be positive and finite".into()));
        }
        if !(self.noise_density.is_finite() && self.noise_density > 0.0) {
            return Err(Error::Config("noise density must be positive and finite".into()));
        }
        Ok(())
    }
}

/// The exact moments E[Z²] and E[Z⁴] of the envelope sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentPair {
    pub ez2: f64,
    pub ez4: f64,
}

impl MomentPair {
    pub fn new(ez2: f64, ez4: f64) -> Result<Self> {
        if !(ez2 > 0.0 && ez2.is_finite()) {
            return Err(Error::Domain(format!("E[Z^2] must be positive, got {ez2}")));
        }
        if !(ez4 > ez2 * ez2) {
            return Err(Error::Domain(format!(
                "E[Z^4] = {ez4} must exceed E[Z^2]^2 = {}; the variance of Z^2 is degenerate",
                ez2 * ez2
            )));
        }
        Ok(Self { ez2, ez4 })
    }
}

/// a = sqrt(rho) / (1 - sqrt(rho)), the argument scale of the ₁F₁ factors.
pub fn correlation_to_a(rho: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::Domain(format!(
            "correlation must lie in [0, 1), got {rho}"
        )));
    }
    let sr = rho.sqrt();
    Ok(sr / (1.0 - sr))
}

/// The five partitions of 4 a W coefficient can take, in canonical
/// (descending) order.
const PARTITIONS: [&[usize]; 5] = [&[4], &[3, 1], &[2, 2], &[2, 1, 1], &[1, 1, 1, 1]];

fn canonical_partition(k: &[usize]) -> Result<Vec<usize>> {
    let mut part = k.to_vec();
    part.sort_unstable_by(|a, b| b.cmp(a));
    if part.iter().sum::<usize>() != 4 || part.contains(&0) {
        return Err(Error::Domain(format!(
            "unsupported partition {k:?}: parts must be positive and sum to 4"
        )));
    }
    debug_assert!(PARTITIONS.contains(&part.as_slice()));
    Ok(part)
}

fn check_w_args(m_z: u32, rho: f64) -> Result<()> {
    if m_z == 0 {
        return Err(Error::Domain("m_z must be a positive integer".into()));
    }
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::Domain(format!(
            "correlation must lie in [0, 1), got {rho}"
        )));
    }
    Ok(())
}

/// Product of Gamma(m + k_j/2) / Gamma(m) over the partition; this is the
/// exact value of W at rho = 0 and the leading factor everywhere else.
fn gamma_ratio_product(part: &[usize], m: f64) -> Result<f64> {
    let ln_gamma_m = gammaln(m)?;
    let mut ln = 0.0;
    for &kj in part {
        ln += gammaln(m + kj as f64 / 2.0)? - ln_gamma_m;
    }
    Ok(ln.exp())
}

/// W(k₁,…,k_N) through its Lauricella closed form: the Γ-ratio product times
/// ((1-√ρ)/(1+(N-1)√ρ))^m times F_A with N equal arguments √ρ/(1+(N-1)√ρ).
fn w_lauricella(part: &[usize], m_z: u32, rho: f64) -> Result<f64> {
    let m = f64::from(m_z);
    let nvar = part.len();
    let sr = rho.sqrt();
    let denom = 1.0 + (nvar as f64 - 1.0) * sr;
    let xarg = sr / denom;
    let b: Vec<f64> = part.iter().map(|&kj| m + kj as f64 / 2.0).collect();
    let c = vec![m; nvar];
    let x = vec![xarg; nvar];
    let fa = lauricella_fa(m, &b, &c, &x, SeriesControl::default())?;
    let prefactor = ((1.0 - sr) / denom).powf(m);
    Ok(gamma_ratio_product(part, m)? * prefactor * fa.linear_value())
}

/// W(k₁,…,k_N), dispatching to the elementary closed forms where they exist
/// and to the Lauricella route otherwise. Debug builds double-check the two
/// routes against each other.
pub fn w_coefficient(k: &[usize], m_z: u32, rho: f64) -> Result<f64> {
    check_w_args(m_z, rho)?;
    let part = canonical_partition(k)?;
    if rho == 0.0 {
        // a = 0 turns every 1F1 factor into unity analytically.
        return gamma_ratio_product(&part, f64::from(m_z));
    }
    let value = match part.as_slice() {
        [4] | [2, 2] | [3, 1] | [2, 1, 1] => w_closed_form(&part, m_z, rho)?,
        _ => w_lauricella(&part, m_z, rho)?,
    };
    #[cfg(debug_assertions)]
    {
        let alt = w_lauricella(&part, m_z, rho)?;
        debug_assert!(
            (value - alt).abs() <= 1e-8 * alt.abs(),
            "W{part:?} routes disagree: closed={value}, lauricella={alt}"
        );
    }
    Ok(value)
}

/// The J(m, a, p, q) kernel: the e^{-u}-weighted average of a pair of ₁F₁
/// factors, in its ₂F₁ closed form.
pub fn j_integral(m: f64, a: f64, p: i32, q: i32) -> Result<f64> {
    if !(m > 0.0) || !(a >= 0.0) {
        return Err(Error::Domain(format!(
            "J requires m > 0 and a >= 0, got m = {m}, a = {a}"
        )));
    }
    let z = -a * a / (1.0 + 2.0 * a);
    let f = gauss_2f1(
        m + p as f64 / 2.0,
        -q as f64 / 2.0,
        m,
        z,
        SeriesControl::default(),
    )?;
    Ok((1.0 + a).powf(p as f64 / 2.0)
        * ((1.0 + 2.0 * a) / (1.0 + a)).powf(q as f64 / 2.0)
        * f.linear_value())
}

/// The elementary closed forms: W(4), W(2,2) as polynomials in a, and
/// W(3,1), W(2,1,1) through the J kernel. W(1,1,1,1) has no such form.
pub fn w_closed_form(k: &[usize], m_z: u32, rho: f64) -> Result<f64> {
    check_w_args(m_z, rho)?;
    let part = canonical_partition(k)?;
    let m = f64::from(m_z);
    let a = correlation_to_a(rho)?;
    let ln_gamma_m = gammaln(m)?;
    match part.as_slice() {
        [4] => Ok(m * (1.0 + m) * (1.0 + a) * (1.0 + a)),
        [2, 2] => Ok(a * a * m + m * m * (1.0 + a) * (1.0 + a)),
        [3, 1] => {
            let scale = (gammaln(m + 1.5)? + gammaln(m + 0.5)? - 2.0 * ln_gamma_m).exp();
            Ok(scale * j_integral(m, a, 3, 1)?)
        }
        [2, 1, 1] => {
            let scale = m * (2.0 * (gammaln(m + 0.5)? - ln_gamma_m)).exp();
            let half = m + 0.5;
            let bracket = j_integral(m, a, 1, 1)?
                + a * half * half / (m * m) * j_integral(m + 1.0, a, 1, 1)?
                + a / (4.0 * m * m) * j_integral(m + 1.0, a, -1, -1)?
                - a * half / (m * m) * j_integral(m + 1.0, a, -1, 1)?;
            Ok(scale * bracket)
        }
        _ => Err(Error::Domain(format!(
            "no elementary closed form for W{part:?}"
        ))),
    }
}

/// Independent oracle: W(k₁,…,k_N) by Gauss-Laguerre quadrature of its
/// defining integral, doubling the node count from 64 until two successive
/// evaluations agree to 1e-10 relative (cap 1024).
pub fn w_quadrature(k: &[usize], m_z: u32, rho: f64) -> Result<f64> {
    check_w_args(m_z, rho)?;
    // The integrand is symmetric in the parts, so any ordering integrates to
    // the same value; keep the caller's order to exercise that symmetry.
    if k.iter().sum::<usize>() != 4 || k.contains(&0) {
        return Err(Error::Domain(format!(
            "unsupported partition {k:?}: parts must be positive and sum to 4"
        )));
    }
    let m = f64::from(m_z);
    let a = correlation_to_a(rho)?;
    let ctrl = SeriesControl::default();
    let scale = gamma_ratio_product(k, m)?;
    let ln_gamma_m = gammaln(m)?;

    let integrand = |u: f64| -> Result<f64> {
        let mut ln_product = 0.0;
        for &kj in k {
            // 1F1(-k/2, m; -a u), evaluated through the stable transformed
            // series; positive for every k in the partition.
            let f = kummer_1f1(-(kj as f64) / 2.0, m, -a * u, ctrl)?;
            ln_product += f.ln_value();
        }
        Ok(((m - 1.0) * u.ln() + ln_product).exp())
    };

    let mut previous: Option<f64> = None;
    let mut nodes = 64;
    while nodes <= 1024 {
        let rule = gauss_laguerre(nodes)?;
        let raw = if a == 0.0 {
            rule.integrate(|u| u.powi(m_z as i32 - 1))
        } else {
            rule.try_integrate(integrand)?
        };
        let value = scale * (raw.ln() - ln_gamma_m).exp();
        if let Some(prev) = previous {
            if (value - prev).abs() <= 1e-10 * value.abs() {
                return Ok(value);
            }
        }
        previous = Some(value);
        nodes *= 2;
    }
    Err(Error::Convergence(format!(
        "W{k:?} quadrature did not stabilize to 1e-10 by 1024 nodes"
    )))
}

/// E[Z²] of the envelope sum: ΣΩ_k plus the pairwise cross moments through
/// ₂F₁(-1/2, -1/2; m_z; ρ). Note the ₂F₁ argument is ρ itself, not √ρ.
pub fn second_moment(config: &ScenarioConfig) -> Result<f64> {
    config.validate()?;
    let m = f64::from(config.m_z);
    let direct: f64 = config.powers.iter().sum();
    if config.branches < 2 {
        return Ok(direct);
    }
    let mut cross = 0.0;
    for i in 0..config.branches {
        for j in (i + 1)..config.branches {
            cross += (config.powers[i] * config.powers[j]).sqrt();
        }
    }
    let gamma_factor = (2.0 * (gammaln(m + 0.5)? - gammaln(m)?)).exp() / m;
    let f21 = gauss_2f1(-0.5, -0.5, m, config.rho, SeriesControl::default())?;
    Ok(direct + 2.0 * gamma_factor * f21.linear_value() * cross)
}

/// E[Z⁴] of the envelope sum: the multinomial expansion weighted by the W
/// coefficients. All Ω-sums are evaluated directly (O(L⁴)); equal powers
/// collapse to closed multiplicities.
pub fn fourth_moment(config: &ScenarioConfig) -> Result<f64> {
    config.validate()?;
    let m = f64::from(config.m_z);
    let l = config.branches;
    let sr = config.rho.sqrt();
    let prefactor = ((1.0 - sr) / m).powi(2);

    let w4 = w_coefficient(&[4], config.m_z, config.rho)?;
    let w22 = if l >= 2 {
        w_coefficient(&[2, 2], config.m_z, config.rho)?
    } else {
        0.0
    };
    let w31 = if l >= 2 {
        w_coefficient(&[3, 1], config.m_z, config.rho)?
    } else {
        0.0
    };
    let w211 = if l >= 3 {
        w_coefficient(&[2, 1, 1], config.m_z, config.rho)?
    } else {
        0.0
    };
    let w1111 = if l >= 4 {
        w_coefficient(&[1, 1, 1, 1], config.m_z, config.rho)?
    } else {
        0.0
    };

    let powers = &config.powers;
    let equal = powers.windows(2).all(|w| w[0] == w[1]);
    let bracket = if equal {
        // Identical equipowered branches: the Ω-sums collapse to counts.
        let omega = powers[0];
        let lf = l as f64;
        omega
            * omega
            * (lf * w4
                + 3.0 * lf * (lf - 1.0) * w22
                + 4.0 * lf * (lf - 1.0) * w31
                + 6.0 * lf * (lf - 1.0) * (lf - 2.0) * w211
                + lf * (lf - 1.0) * (lf - 2.0) * (lf - 3.0) * w1111)
    } else {
        let sqrt_p: Vec<f64> = powers.iter().map(|&p| p.sqrt()).collect();
        let mut sum_sq = 0.0;
        for &p in powers {
            sum_sq += p * p;
        }
        let mut sum_pair = 0.0; // Σ_{i<j} Ω_i Ω_j
        let mut sum_31 = 0.0; // Σ_{i<j} (Ω_i^{3/2}Ω_j^{1/2} + Ω_i^{1/2}Ω_j^{3/2})
        for i in 0..l {
            for j in (i + 1)..l {
                sum_pair += powers[i] * powers[j];
                sum_31 += powers[i] * sqrt_p[i] * sqrt_p[j] + sqrt_p[i] * powers[j] * sqrt_p[j];
            }
        }
        let mut sum_211 = 0.0; // Σ_{m<i<j} (Ω_m + Ω_i + Ω_j) √(...)-style triple terms
        for a in 0..l {
            for i in (a + 1)..l {
                for j in (i + 1)..l {
                    sum_211 += powers[a] * sqrt_p[i] * sqrt_p[j]
                        + sqrt_p[a] * powers[i] * sqrt_p[j]
                        + sqrt_p[a] * sqrt_p[i] * powers[j];
                }
            }
        }
        let mut sum_1111 = 0.0; // Σ_{m<n<i<j} √(Ω_m Ω_n Ω_i Ω_j)
        for a in 0..l {
            for b in (a + 1)..l {
                for i in (b + 1)..l {
                    for j in (i + 1)..l {
                        sum_1111 += sqrt_p[a] * sqrt_p[b] * sqrt_p[i] * sqrt_p[j];
                    }
                }
            }
        }
        w4 * sum_sq
            + 6.0 * w22 * sum_pair
            + 4.0 * w31 * sum_31
            + 12.0 * w211 * sum_211
            + 24.0 * w1111 * sum_1111
    };
    Ok(prefactor * bracket)
}

/// Both exact moments, validated as a pair.
pub fn exact_moments(config: &ScenarioConfig) -> Result<MomentPair> {
    MomentPair::new(second_moment(config)?, fourth_moment(config)?)
}
