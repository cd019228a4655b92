//! Numerical integration support: Gauss-Laguerre rules built with the
//! Golub-Welsch algorithm, and an adaptive Simpson integrator for finite
//! intervals.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// A Gauss-Laguerre quadrature rule: approximates integrals of the form
/// `int_0^inf e^{-u} f(u) du` as a weighted sum over `n` nodes. Exact for
/// polynomial `f` of degree up to `2n - 1`.
#[derive(Debug, Clone)]
pub struct GaussLaguerre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLaguerre {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(
                "Gauss-Laguerre rule needs at least 2 nodes".into(),
            ));
        }
        // Jacobi matrix of the Laguerre recurrence (weight e^{-u} on [0, inf)):
        // diagonal 2i+1, off-diagonal coupling i+1. Eigenvalues are the nodes;
        // squared first eigenvector components (times mu_0 = 1) the weights.
        let mut diag: Vec<f64> = (0..n).map(|i| 2.0 * i as f64 + 1.0).collect();
        let mut off: Vec<f64> = (0..n).map(|i| i as f64 + 1.0).collect();
        let mut first = vec![0.0; n];
        first[0] = 1.0;
        tridiag_eigen_first_components(&mut diag, &mut off, &mut first)?;

        let mut pairs: Vec<(f64, f64)> = diag
            .into_iter()
            .zip(first.into_iter().map(|v| v * v))
            .collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite nodes"));
        Ok(Self {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `sum_i w_i f(x_i)`, i.e. `int_0^inf e^{-u} f(u) du`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Fallible variant of [`integrate`](Self::integrate).
    pub fn try_integrate<F: Fn(f64) -> Result<f64>>(&self, f: F) -> Result<f64> {
        let mut acc = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(x)?;
        }
        Ok(acc)
    }
}

/// Shared, cached rules: building a 1024-node rule costs O(n^2), so repeated
/// callers (the adaptive W-coefficient oracle) reuse one instance per size.
pub fn gauss_laguerre(n: usize) -> Result<Arc<GaussLaguerre>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLaguerre>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(rule) = cache.lock().expect("rule cache poisoned").get(&n) {
        return Ok(Arc::clone(rule));
    }
    let rule = Arc::new(GaussLaguerre::new(n)?);
    cache
        .lock()
        .expect("rule cache poisoned")
        .insert(n, Arc::clone(&rule));
    Ok(rule)
}

/// Implicit-QL eigensolver for a symmetric tridiagonal matrix that tracks only
/// the first component of each eigenvector (all Golub-Welsch needs). `diag`
/// holds the diagonal, `off[i]` couples rows i and i+1 (`off[n-1]` ignored),
/// and `first` must be seeded with the unit vector e_1. On return `diag` holds
/// the eigenvalues (unsorted) and `first` the first components.
fn tridiag_eigen_first_components(
    diag: &mut [f64],
    off: &mut [f64],
    first: &mut [f64],
) -> Result<()> {
    let n = diag.len();
    if n == 0 {
        return Ok(());
    }
    off[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if off[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 64 {
                return Err(Error::Convergence(
                    "tridiagonal QL iteration did not converge".into(),
                ));
            }
            let mut g = (diag[l + 1] - diag[l]) / (2.0 * off[l]);
            let mut r = g.hypot(1.0);
            g = diag[m] - diag[l] + off[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut i = m;
            let mut split = false;
            while i > l {
                i -= 1;
                let mut f = s * off[i];
                let b = c * off[i];
                r = f.hypot(g);
                off[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    off[m] = 0.0;
                    split = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
                f = first[i + 1];
                first[i + 1] = s * first[i] + c * f;
                first[i] = c * first[i] - s * f;
            }
            if split {
                continue;
            }
            diag[l] -= p;
            off[l] = g;
            off[m] = 0.0;
        }
    }
    Ok(())
}

/// Adaptive Simpson integration of `f` over `[a, b]` to absolute tolerance
/// `tol`. The interval is first split into uniform panels so that an
/// integrand concentrated far from the midpoint cannot fool the error
/// estimate, then each panel is refined adaptively. Errors if the recursion
/// cannot reach the tolerance.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::Domain(format!("bad integration interval [{a}, {b}]")));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("bad integration tolerance {tol}")));
    }
    if a == b {
        return Ok(0.0);
    }
    const PANELS: usize = 16;
    let h = (b - a) / PANELS as f64;
    let panel_tol = tol / PANELS as f64;
    let mut total = 0.0;
    for i in 0..PANELS {
        let lo = a + i as f64 * h;
        let hi = if i + 1 == PANELS { b } else { lo + h };
        let m = 0.5 * (lo + hi);
        let flo = f(lo);
        let fm = f(m);
        let fhi = f(hi);
        let whole = (hi - lo) / 6.0 * (flo + 4.0 * fm + fhi);
        total += simpson_step(f, lo, hi, flo, fm, fhi, whole, panel_tol, 56)?;
    }
    Ok(total)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    if !(flm.is_finite() && frm.is_finite()) {
        return Err(Error::Convergence(format!(
            "integrand is not finite inside [{a}, {b}]"
        )));
    }
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Convergence(
            "adaptive Simpson recursion depth exhausted".into(),
        ));
    }
    let half_tol = 0.5 * tol;
    let l = simpson_step(f, a, m, fa, flm, fm, left, half_tol, depth - 1)?;
    let r = simpson_step(f, m, b, fm, frm, fb, right, half_tol, depth - 1)?;
    Ok(l + r)
}
