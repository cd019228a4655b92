//! The moment-matched equivalent distribution of the envelope sum: fitting
//! (Ω_R, m_R) from the exact moments, and the fitted PDF/CDF/MGF of the sum
//! and of its square.
//!
//! Densities are evaluated in log space throughout, since Γ(m_R L) and the
//! confluent factor overflow in linear scale for moderate m_R·L. The CDF has
//! two routes: a Φ₂ series (primary) and adaptive quadrature of the density
//! (fallback when the series cancels too heavily).

use crate::error::{Error, Result};
use crate::hyperfn::{gammaln, humbert_phi2, kummer_1f1, SeriesControl};
use crate::moments::{exact_moments, MomentPair, ScenarioConfig, MAX_RHO};
use crate::quadrature::adaptive_simpson;

/// Fitted equivalent-distribution parameters. `omega_r` is the per-component
/// power, `m_r` the (real-valued) equivalent fading parameter, and `branches`
/// and `rho` ride along from the scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxParams {
    pub omega_r: f64,
    pub m_r: f64,
    pub branches: usize,
    pub rho: f64,
}

impl ApproxParams {
    pub fn new(omega_r: f64, m_r: f64, branches: usize, rho: f64) -> Result<Self> {
        if !(omega_r > 0.0 && omega_r.is_finite()) {
            return Err(Error::Domain(format!("omega_R must be positive, got {omega_r}")));
        }
        if !(m_r > 0.0 && m_r.is_finite()) {
            return Err(Error::Domain(format!("m_R must be positive, got {m_r}")));
        }
        if branches == 0 {
            return Err(Error::Domain("branch count must be at least 1".into()));
        }
        if !(0.0..=MAX_RHO).contains(&rho) {
            return Err(Error::Domain(format!(
                "correlation must lie in [0, {MAX_RHO}], got {rho}"
            )));
        }
        Ok(Self {
            omega_r,
            m_r,
            branches,
            rho,
        })
    }

    pub(crate) fn l(&self) -> f64 {
        self.branches as f64
    }

    /// 1 + (L-1)√ρ, the correlated-factor scale of the MGF.
    pub(crate) fn u(&self) -> f64 {
        1.0 + (self.l() - 1.0) * self.rho.sqrt()
    }

    /// 1 - √ρ, the independent-factor scale of the MGF.
    pub(crate) fn v(&self) -> f64 {
        1.0 - self.rho.sqrt()
    }
}

/// Fit (Ω_R, m_R) by matching the second and fourth moments of the sum.
pub fn fit(config: &ScenarioConfig) -> Result<ApproxParams> {
    fit_from_moments(&exact_moments(config)?, config.branches, config.rho)
}

/// The fit given precomputed moments: Ω_R = E[Z²]/L and
/// m_R = (1+(L-1)ρ)/L · (E[Z²])² / (E[Z⁴] - (E[Z²])²).
pub fn fit_from_moments(pair: &MomentPair, branches: usize, rho: f64) -> Result<ApproxParams> {
    if branches == 0 {
        return Err(Error::Domain("branch count must be at least 1".into()));
    }
    let l = branches as f64;
    let variance = pair.ez4 - pair.ez2 * pair.ez2;
    if !(variance > 0.0) {
        return Err(Error::Domain(format!(
            "degenerate variance of Z^2: E[Z^4] - E[Z^2]^2 = {variance}"
        )));
    }
    let omega_r = pair.ez2 / l;
    let m_r = (1.0 + (l - 1.0) * rho) / l * pair.ez2 * pair.ez2 / variance;
    ApproxParams::new(omega_r, m_r, branches, rho)
}

/// MGF of the squared sum, M(s) = (1 - sΩ_R u/m_R)^{-m_R} (1 - sΩ_R v/m_R)^{-m_R(L-1)},
/// evaluated in log space. Defined for s below the nearer pole m_R/(Ω_R u).
pub fn mgf_power(s: f64, p: &ApproxParams) -> Result<f64> {
    let alpha = p.omega_r * p.u() / p.m_r;
    let beta = p.omega_r * p.v() / p.m_r;
    if !(s * alpha < 1.0) {
        return Err(Error::Domain(format!(
            "MGF argument {s} is at or beyond the nearer pole {}",
            1.0 / alpha
        )));
    }
    let ln = -p.m_r * (1.0 - s * alpha).ln() - p.m_r * (p.l() - 1.0) * (1.0 - s * beta).ln();
    Ok(ln.exp())
}

/// Density of the squared sum at `x >= 0` (log-space gamma-mixture form).
pub fn pdf_power(x: f64, p: &ApproxParams) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("density argument must be >= 0, got {x}")));
    }
    let c = p.m_r * p.l();
    if x == 0.0 {
        if c > 1.0 {
            return Ok(0.0);
        }
        if c == 1.0 {
            // Exponent zero: only the prefactor survives.
            let ln = c * (p.m_r / p.omega_r).ln()
                - gammaln(c)?
                - p.m_r * (p.l() - 1.0) * p.v().ln()
                - p.m_r * p.u().ln();
            return Ok(ln.exp());
        }
        return Ok(f64::INFINITY);
    }
    let lambda = p.m_r / (p.v() * p.omega_r);
    let mu = p.rho.sqrt() * c / (p.v() * p.u() * p.omega_r);
    let confluent = if mu == 0.0 {
        0.0
    } else {
        kummer_1f1(p.m_r, c, mu * x, SeriesControl::default())?.ln_value()
    };
    let ln = c * (p.m_r / p.omega_r).ln() + (c - 1.0) * x.ln()
        - gammaln(c)?
        - p.m_r * (p.l() - 1.0) * p.v().ln()
        - p.m_r * p.u().ln()
        - lambda * x
        + confluent;
    Ok(ln.exp())
}

/// Density of the envelope sum itself: f_R(r) = 2 r f_{R²}(r²).
pub fn pdf_envelope(r: f64, p: &ApproxParams) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::Domain(format!("envelope argument must be >= 0, got {r}")));
    }
    if r == 0.0 {
        // f_R(r) ~ r^{2 m_R L - 1} near the origin; resolve the limit rather
        // than evaluate 0 * f_{R^2}(0), which is 0 * inf for m_R L < 1.
        let c = p.m_r * p.l();
        return Ok(match 2.0 * c {
            e if e > 1.0 => 0.0,
            e if e < 1.0 => f64::INFINITY,
            _ => {
                let ln = c * (p.m_r / p.omega_r).ln()
                    - gammaln(c)?
                    - p.m_r * (p.l() - 1.0) * p.v().ln()
                    - p.m_r * p.u().ln();
                2.0 * ln.exp()
            }
        });
    }
    Ok(2.0 * r * pdf_power(r * r, p)?)
}

/// CDF of the squared sum. The Φ₂ series is primary; adaptive quadrature of
/// the density takes over when the series reports cancellation (large
/// arguments cancel like e^{|x|+|y|}).
pub fn cdf_power(t: f64, p: &ApproxParams) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("CDF argument must be >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    // Beyond ~34 the largest Φ₂ term exceeds 1e15 times the result and the
    // series route would refuse anyway; go straight to quadrature.
    let spread = t * p.m_r / p.omega_r * (1.0 / p.u() + 1.0 / p.v());
    if spread <= 34.0 {
        match cdf_power_series(t, p) {
            Ok(v) => return Ok(v),
            Err(Error::Cancellation(_)) | Err(Error::Convergence(_)) => {}
            Err(e) => return Err(e),
        }
    }
    cdf_power_quadrature(t, p)
}

/// The Φ₂-series route for the CDF of the squared sum.
pub fn cdf_power_series(t: f64, p: &ApproxParams) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("CDF argument must be >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let c = p.m_r * p.l();
    let x1 = p.m_r * t / (p.omega_r * p.u());
    let x2 = p.m_r * t / (p.omega_r * p.v());
    let phi = humbert_phi2(
        p.m_r,
        p.m_r * (p.l() - 1.0),
        1.0 + c,
        -x1,
        -x2,
        SeriesControl::default(),
    )?;
    let value = phi.linear_value();
    if !(value > 0.0) {
        return Err(Error::Cancellation(
            "Phi2 series for the CDF collapsed to a non-positive value".into(),
        ));
    }
    let ln = p.m_r * x1.ln() + p.m_r * (p.l() - 1.0) * x2.ln() - gammaln(1.0 + c)? + value.ln();
    Ok(ln.exp().clamp(0.0, 1.0))
}

/// The quadrature route for the CDF: adaptive Simpson over the density, with
/// the upper limit clipped to where the remaining tail mass is negligible.
pub fn cdf_power_quadrature(t: f64, p: &ApproxParams) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("CDF argument must be >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let upper = t.min(tail_cutoff(p));
    let f = |x: f64| pdf_power(x, p).unwrap_or(f64::NAN);
    let mass = adaptive_simpson(&f, 0.0, upper, 1e-12)?;
    Ok(mass.clamp(0.0, 1.0))
}

/// A point beyond which the density holds less than ~e^-60 of the mass: the
/// slowest decay rate of f_{R²} is m_R/(Ω_R u).
pub(crate) fn tail_cutoff(p: &ApproxParams) -> f64 {
    let rate = p.m_r / (p.omega_r * p.u());
    (p.m_r * p.l() + 60.0) / rate
}
