//! Hypergeometric special functions backing the closed-form fading statistics:
//! log-gamma, Kummer ₁F₁, Gauss ₂F₁, Appell F₂, Humbert Φ₂ and the Lauricella
//! F_A function of up to four variables.
//!
//! All series are summed with term-ratio recurrences (never per-term gamma
//! quotients) and compensated Kahan accumulation. A multi-index series stops
//! once the largest term of a full index sweep stays below `rel_tol` times the
//! partial sum for three consecutive sweeps; single series use the same rule
//! term by term. Arguments outside the natural convergence region are mapped
//! back by the Kummer transformation (₁F₁, negative argument) and the Pfaff
//! transformation (₂F₁, negative argument). Results that would overflow in
//! linear scale come back as natural logarithms with `log_scaled` set.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};

/// Baseline relative tolerance for series truncation.
pub const BASE_REL_TOL: f64 = 1e-12;
/// Default cap on the number of terms per series index.
pub const DEFAULT_MAX_TERMS: usize = 10_000;

/// Truncation control shared by every series in this module.
#[derive(Debug, Clone, Copy)]
pub struct SeriesControl {
    pub rel_tol: f64,
    pub max_terms: usize,
}

impl SeriesControl {
    pub fn new(rel_tol: f64, max_terms: usize) -> Result<Self> {
        if !(rel_tol > 0.0 && rel_tol < 1.0) {
            return Err(Error::Domain(format!("rel_tol must be in (0, 1), got {rel_tol}")));
        }
        if max_terms == 0 {
            return Err(Error::Domain("max_terms must be at least 1".into()));
        }
        Ok(Self { rel_tol, max_terms })
    }
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self {
            rel_tol: default_rel_tol(),
            max_terms: DEFAULT_MAX_TERMS,
        }
    }
}

static DEFAULT_REL_TOL_BITS: AtomicU64 = AtomicU64::new(0);

/// Process-wide override of the default series tolerance (the CLI wires the
/// `NAKSUM_TOL` environment variable here). Zero bits mean "unset".
pub fn set_default_rel_tol(rel_tol: f64) -> Result<()> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::Domain(format!("rel_tol must be in (0, 1), got {rel_tol}")));
    }
    DEFAULT_REL_TOL_BITS.store(rel_tol.to_bits(), Ordering::Relaxed);
    Ok(())
}

fn default_rel_tol() -> f64 {
    match DEFAULT_REL_TOL_BITS.load(Ordering::Relaxed) {
        0 => BASE_REL_TOL,
        bits => f64::from_bits(bits),
    }
}

/// Outcome of a series evaluation. When `log_scaled` is set, `value` holds the
/// natural logarithm of the (positive) function value. A result is only ever
/// returned with `converged == true`; failures surface as errors.
#[derive(Debug, Clone, Copy)]
pub struct FnResult {
    pub value: f64,
    pub log_scaled: bool,
    pub terms_used: usize,
    pub converged: bool,
}

impl FnResult {
    fn plain(value: f64, terms_used: usize) -> Self {
        Self {
            value,
            log_scaled: false,
            terms_used,
            converged: true,
        }
    }

    /// The value in linear scale; may overflow to infinity if the result was
    /// log-scaled and genuinely exceeds the f64 range.
    pub fn linear_value(&self) -> f64 {
        if self.log_scaled {
            self.value.exp()
        } else {
            self.value
        }
    }

    /// The natural logarithm of the value (requires a positive value when the
    /// result is in linear scale).
    pub fn ln_value(&self) -> f64 {
        if self.log_scaled {
            self.value
        } else {
            self.value.ln()
        }
    }
}

// ---------------------------------------------------------------------------
// log-gamma
// ---------------------------------------------------------------------------

const LN_2_SQRT_E_OVER_PI: f64 = 0.620_782_237_635_245_2;
const LANCZOS_R: f64 = 10.900511;
const LANCZOS_DK: [f64; 11] = [
    2.485_740_891_387_535_5e-5,
    1.051_423_785_817_219_7,
    -3.456_870_972_220_162_5,
    4.512_277_094_668_948,
    -2.982_852_253_235_766_4,
    1.056_397_115_771_267,
    -1.954_287_731_916_458_7e-1,
    1.709_705_434_044_412e-2,
    -5.719_261_174_043_057e-4,
    4.633_994_733_599_057e-6,
    -2.719_949_084_886_077_2e-9,
];

/// Natural logarithm of the gamma function for positive arguments.
pub fn gammaln(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("gammaln requires x > 0, got {x}")));
    }
    // ln Gamma(x) = ln Gamma(x + 1) - ln x keeps the Lanczos sum in its
    // accurate range for small arguments.
    if x < 0.5 {
        return Ok(gammaln_core(x + 1.0) - x.ln());
    }
    Ok(gammaln_core(x))
}

fn gammaln_core(x: f64) -> f64 {
    let s = LANCZOS_DK
        .iter()
        .enumerate()
        .skip(1)
        .fold(LANCZOS_DK[0], |s, (k, dk)| s + dk / (x + k as f64 - 1.0));
    s.ln() + LN_2_SQRT_E_OVER_PI + (x - 0.5) * ((x - 0.5 + LANCZOS_R) / std::f64::consts::E).ln()
}

// ---------------------------------------------------------------------------
// series machinery
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Default)]
struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum
    }

    fn scale(&mut self, k: f64) {
        self.sum *= k;
        self.carry *= k;
    }
}

const RESCALE_LIMIT: f64 = 1e280;
const RESCALE_FACTOR: f64 = 1e-280;
const RESCALE_LN: f64 = 280.0 * std::f64::consts::LN_10; // -ln(RESCALE_FACTOR)

/// Double-double value (~31 significant digits): an unevaluated sum hi + lo.
/// The Φ₂ series with both arguments negative cancels like e^{|x|+|y|}, which
/// plain f64 accumulation cannot survive; terms and sums are therefore carried
/// in this representation.
#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    fn value(self) -> f64 {
        self.hi + self.lo
    }

    fn two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let v = s - a;
        let e = (a - (s - v)) + (b - v);
        Dd { hi: s, lo: e }
    }

    fn two_prod(a: f64, b: f64) -> Dd {
        let p = a * b;
        let e = a.mul_add(b, -p);
        Dd { hi: p, lo: e }
    }

    fn renorm(hi: f64, lo: f64) -> Dd {
        let s = hi + lo;
        Dd {
            hi: s,
            lo: (hi - s) + lo,
        }
    }

    fn add(self, other: Dd) -> Dd {
        let s = Dd::two_sum(self.hi, other.hi);
        Dd::renorm(s.hi, s.lo + self.lo + other.lo)
    }

    fn mul(self, other: Dd) -> Dd {
        let p = Dd::two_prod(self.hi, other.hi);
        Dd::renorm(p.hi, p.lo + self.hi * other.lo + self.lo * other.hi)
    }

    fn mul_f64(self, b: f64) -> Dd {
        let p = Dd::two_prod(self.hi, b);
        Dd::renorm(p.hi, p.lo + self.lo * b)
    }

    fn div(self, other: Dd) -> Dd {
        let q1 = self.hi / other.hi;
        let r = self.add(other.mul_f64(-q1));
        let q2 = r.value() / other.hi;
        Dd::renorm(q1, q2)
    }

    fn div_f64(self, b: f64) -> Dd {
        let q1 = self.hi / b;
        let r = self.add(Dd::two_prod(q1, -b));
        let q2 = r.value() / b;
        Dd::renorm(q1, q2)
    }
}

/// Above this argument the direct ₁F₁ series needs more terms than it is
/// worth; the large-argument asymptotic expansion takes over.
const ONEF1_ASYMPTOTIC_CUTOFF: f64 = 700.0;

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x.fract() == 0.0
}

/// Sums `t_0 + t_1 + ...` where `t_0 = first` and `t_{n+1} = t_n * ratio(n)`,
/// rescaling into log space if the running magnitude approaches overflow.
fn sum_ratio_series<R: FnMut(usize) -> f64>(
    first: f64,
    mut ratio: R,
    ctrl: SeriesControl,
    what: &str,
) -> Result<FnResult> {
    let mut acc = Kahan::default();
    let mut term = first;
    let mut ln_offset = 0.0;
    let mut streak = 0u32;
    for n in 0..ctrl.max_terms {
        acc.add(term);
        let sum = acc.value();
        if !sum.is_finite() {
            return Err(Error::Convergence(format!("{what}: series sum is not finite")));
        }
        if term == 0.0 {
            return finish_series(acc, ln_offset, n + 1, what);
        }
        if term.abs() <= ctrl.rel_tol * sum.abs() {
            streak += 1;
            if streak >= 3 {
                return finish_series(acc, ln_offset, n + 1, what);
            }
        } else {
            streak = 0;
        }
        if sum.abs() > RESCALE_LIMIT || term.abs() > RESCALE_LIMIT {
            acc.scale(RESCALE_FACTOR);
            term *= RESCALE_FACTOR;
            ln_offset += RESCALE_LN;
        }
        term *= ratio(n);
        if !term.is_finite() {
            return Err(Error::Convergence(format!("{what}: series term is not finite")));
        }
    }
    Err(Error::Convergence(format!(
        "{what}: no convergence within {} terms",
        ctrl.max_terms
    )))
}

fn finish_series(acc: Kahan, ln_offset: f64, terms: usize, what: &str) -> Result<FnResult> {
    let sum = acc.value();
    if ln_offset == 0.0 {
        return Ok(FnResult::plain(sum, terms));
    }
    if sum <= 0.0 {
        return Err(Error::Convergence(format!(
            "{what}: log-scaled series produced a non-positive sum"
        )));
    }
    Ok(FnResult {
        value: sum.ln() + ln_offset,
        log_scaled: true,
        terms_used: terms,
        converged: true,
    })
}

// ---------------------------------------------------------------------------
// Kummer confluent hypergeometric function
// ---------------------------------------------------------------------------

/// ₁F₁(a, b; z). Negative arguments are mapped through the Kummer
/// transformation `₁F₁(a,b;z) = e^z ₁F₁(b-a,b;-z)` (unless the series
/// terminates), and results too large for f64 come back log-scaled.
pub fn kummer_1f1(a: f64, b: f64, z: f64, ctrl: SeriesControl) -> Result<FnResult> {
    if is_nonpositive_integer(b) {
        return Err(Error::Domain(format!(
            "1F1 parameter b must not be a non-positive integer, got {b}"
        )));
    }
    if z == 0.0 {
        return Ok(FnResult::plain(1.0, 1));
    }
    if is_nonpositive_integer(a) {
        // Terminating polynomial; safe for arguments of either sign.
        return sum_ratio_series(
            1.0,
            |n| {
                let nf = n as f64;
                (a + nf) * z / ((b + nf) * (nf + 1.0))
            },
            ctrl,
            "1F1",
        );
    }
    if z > 0.0 {
        if z > ONEF1_ASYMPTOTIC_CUTOFF && a > 0.0 && b > 0.0 {
            return onef1_asymptotic(a, b, z);
        }
        return sum_ratio_series(
            1.0,
            |n| {
                let nf = n as f64;
                (a + nf) * z / ((b + nf) * (nf + 1.0))
            },
            ctrl,
            "1F1",
        );
    }
    // z < 0: e^z * 1F1(b - a, b; -z), whose series has eventually fixed sign.
    let inner = kummer_1f1(b - a, b, -z, ctrl)?;
    let terms = inner.terms_used;
    if !inner.log_scaled && inner.value <= 0.0 {
        // Sign information would be lost in log scale; combine linearly.
        if z < -700.0 {
            return Err(Error::Convergence(
                "1F1: cannot log-scale a non-positive transformed series".into(),
            ));
        }
        return Ok(FnResult::plain(z.exp() * inner.value, terms));
    }
    let ln = z + inner.ln_value();
    if ln.abs() > 700.0 {
        Ok(FnResult {
            value: ln,
            log_scaled: true,
            terms_used: terms,
            converged: true,
        })
    } else {
        Ok(FnResult::plain(ln.exp(), terms))
    }
}

/// Large-argument expansion ₁F₁(a,b;z) ~ Γ(b)/Γ(a) e^z z^{a-b} Σ_k
/// (b-a)_k (1-a)_k / (k! z^k), truncated at its smallest term. For the
/// arguments this crate reaches (z > 700, parameters of order ten) the
/// truncation error sits far below f64 resolution. Always log-scaled.
fn onef1_asymptotic(a: f64, b: f64, z: f64) -> Result<FnResult> {
    let mut sum = 1.0;
    let mut term = 1.0;
    let mut last_abs = f64::INFINITY;
    let mut terms = 1usize;
    for k in 0..64 {
        let kf = k as f64;
        term *= (b - a + kf) * (1.0 - a + kf) / ((kf + 1.0) * z);
        if term.abs() >= last_abs {
            break; // the asymptotic tail has started to grow
        }
        last_abs = term.abs();
        sum += term;
        terms += 1;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    if !(sum > 0.0) {
        return Err(Error::Convergence(
            "1F1: asymptotic expansion lost its sign".into(),
        ));
    }
    Ok(FnResult {
        value: gammaln(b)? - gammaln(a)? + z + (a - b) * z.ln() + sum.ln(),
        log_scaled: true,
        terms_used: terms,
        converged: true,
    })
}

// ---------------------------------------------------------------------------
// Gauss hypergeometric function
// ---------------------------------------------------------------------------

/// ₂F₁(a, b; c; z) for `z < 1`. Negative arguments are mapped into [0, 1) by
/// the Pfaff transformation `₂F₁(a,b;c;z) = (1-z)^{-b} ₂F₁(c-a,b;c;z/(z-1))`.
pub fn gauss_2f1(a: f64, b: f64, c: f64, z: f64, ctrl: SeriesControl) -> Result<FnResult> {
    if is_nonpositive_integer(c) {
        return Err(Error::Domain(format!(
            "2F1 parameter c must not be a non-positive integer, got {c}"
        )));
    }
    if z == 0.0 {
        return Ok(FnResult::plain(1.0, 1));
    }
    let series = |a: f64, b: f64, z: f64| {
        sum_ratio_series(
            1.0,
            move |n| {
                let nf = n as f64;
                (a + nf) * (b + nf) * z / ((c + nf) * (nf + 1.0))
            },
            ctrl,
            "2F1",
        )
    };
    if is_nonpositive_integer(a) || is_nonpositive_integer(b) {
        return series(a, b, z); // terminates for any argument
    }
    if z >= 1.0 {
        return Err(Error::Domain(format!(
            "2F1 argument outside reachable domain: z = {z}"
        )));
    }
    if z < 0.0 {
        let zp = z / (z - 1.0); // in (0, 1)
        let inner = series(c - a, b, zp)?;
        let scale = (1.0 - z).powf(-b);
        let value = scale * inner.linear_value();
        if !value.is_finite() {
            return Err(Error::Convergence(
                "2F1: Pfaff-transformed evaluation overflowed".into(),
            ));
        }
        return Ok(FnResult::plain(value, inner.terms_used));
    }
    series(a, b, z)
}

// ---------------------------------------------------------------------------
// Appell F2
// ---------------------------------------------------------------------------

/// Appell F₂(a; b₁, b₂; c₁, c₂; x, y), convergent for |x| + |y| < 1.
#[allow(clippy::too_many_arguments)] // the function's own parameter list
pub fn appell_f2(
    a: f64,
    b1: f64,
    b2: f64,
    c1: f64,
    c2: f64,
    x: f64,
    y: f64,
    ctrl: SeriesControl,
) -> Result<FnResult> {
    for (name, c) in [("c1", c1), ("c2", c2)] {
        if is_nonpositive_integer(c) {
            return Err(Error::Domain(format!(
                "F2 parameter {name} must not be a non-positive integer, got {c}"
            )));
        }
    }
    if x.abs() + y.abs() >= 1.0 {
        return Err(Error::Domain(format!(
            "F2 arguments outside convergence domain: |x| + |y| = {}",
            x.abs() + y.abs()
        )));
    }
    if x == 0.0 && y == 0.0 {
        return Ok(FnResult::plain(1.0, 1));
    }
    // Truncation thresholds sized so the discarded geometric tails stay below
    // rel_tol of the total: rows are cut relative to their own partial sum
    // (row errors then add up to ~rel_tol of the whole), the row sweep
    // relative to the full sum with the (1 - |x| - |y|) tail factor.
    let inner_tol = ctrl.rel_tol * (1.0 - y.abs()).max(1e-3);
    let outer_tol = ctrl.rel_tol * (1.0 - x.abs() - y.abs()).max(1e-3);
    let mut acc = Kahan::default();
    let mut row_head = 1.0; // T(m, 0)
    let mut row_streak = 0u32;
    let mut prev_row_max = f64::INFINITY;
    let mut total = 0usize;
    for m in 0..ctrl.max_terms {
        let mf = m as f64;
        let mut term = row_head;
        let mut row_sum = Kahan::default();
        let mut row_max = 0.0f64;
        let mut inner_streak = 0u32;
        let mut prev_abs = f64::INFINITY;
        let mut inner_done = false;
        for n in 0..ctrl.max_terms {
            let nf = n as f64;
            acc.add(term);
            row_sum.add(term);
            total += 1;
            let t_abs = term.abs();
            row_max = row_max.max(t_abs);
            if !acc.value().is_finite() {
                return Err(Error::Convergence("F2: series sum is not finite".into()));
            }
            // A term only counts toward the stop streak once the magnitude
            // profile is past its peak; rows start tiny and grow first.
            let scale = row_sum.value().abs().max(ctrl.rel_tol * acc.value().abs());
            if t_abs <= inner_tol * scale && t_abs <= prev_abs {
                inner_streak += 1;
                if inner_streak >= 3 {
                    inner_done = true;
                    break;
                }
            } else {
                inner_streak = 0;
            }
            prev_abs = t_abs;
            term *= (a + mf + nf) * (b2 + nf) * y / ((c2 + nf) * (nf + 1.0));
        }
        if !inner_done {
            return Err(Error::Convergence(format!(
                "F2: inner series exceeded {} terms",
                ctrl.max_terms
            )));
        }
        let sum_abs = acc.value().abs();
        if m >= 1 && row_max <= outer_tol * sum_abs && row_max <= prev_row_max {
            row_streak += 1;
            if row_streak >= 3 {
                return Ok(FnResult::plain(acc.value(), total));
            }
        } else {
            row_streak = 0;
        }
        prev_row_max = row_max;
        row_head *= (a + mf) * (b1 + mf) * x / ((c1 + mf) * (mf + 1.0));
        if !row_head.is_finite() {
            return Err(Error::Convergence("F2: row head is not finite".into()));
        }
    }
    Err(Error::Convergence(format!(
        "F2: no convergence within {} outer terms",
        ctrl.max_terms
    )))
}

// ---------------------------------------------------------------------------
// Humbert Phi2
// ---------------------------------------------------------------------------

/// Humbert Φ₂(b₁, b₂; c; x, y); entire in both arguments. Terms and partial
/// sums are carried in double-double precision because the alternating series
/// at negative arguments cancels like e^{|x|+|y|}. The largest intermediate
/// term is tracked, and the evaluation is rejected as cancelled when it
/// exceeds 1e15 times the result.
pub fn humbert_phi2(
    b1: f64,
    b2: f64,
    c: f64,
    x: f64,
    y: f64,
    ctrl: SeriesControl,
) -> Result<FnResult> {
    if is_nonpositive_integer(c) {
        return Err(Error::Domain(format!(
            "Phi2 parameter c must not be a non-positive integer, got {c}"
        )));
    }
    if x == 0.0 && y == 0.0 {
        return Ok(FnResult::plain(1.0, 1));
    }
    let mut acc = Dd::ZERO;
    let mut row_head = Dd::ONE; // T(m, 0) = (b1)_m x^m / ((c)_m m!)
    let mut row_streak = 0u32;
    let mut prev_row_max = f64::INFINITY;
    let mut total = 0usize;
    let mut max_term = 0.0f64;
    for m in 0..ctrl.max_terms {
        let mf = m as f64;
        let mut term = row_head;
        let mut row_max = 0.0f64;
        let mut inner_streak = 0u32;
        let mut prev_abs = f64::INFINITY;
        let mut inner_done = false;
        for n in 0..ctrl.max_terms {
            let nf = n as f64;
            acc = acc.add(term);
            total += 1;
            let t_abs = term.value().abs();
            row_max = row_max.max(t_abs);
            if !acc.value().is_finite() {
                return Err(Error::Convergence("Phi2: series sum is not finite".into()));
            }
            // Stop streaks only count past the magnitude peak of the row.
            if t_abs <= ctrl.rel_tol * acc.value().abs() && t_abs <= prev_abs {
                inner_streak += 1;
                if inner_streak >= 3 {
                    inner_done = true;
                    break;
                }
            } else {
                inner_streak = 0;
            }
            prev_abs = t_abs;
            // exact two-sums keep the recurrence factors at full precision
            term = term
                .mul(Dd::two_sum(b2, nf))
                .mul_f64(y)
                .div(Dd::two_sum(c, mf + nf))
                .div_f64(nf + 1.0);
        }
        if !inner_done {
            return Err(Error::Convergence(format!(
                "Phi2: inner series exceeded {} terms",
                ctrl.max_terms
            )));
        }
        max_term = max_term.max(row_max);
        if m >= 1 && row_max <= ctrl.rel_tol * acc.value().abs() && row_max <= prev_row_max {
            row_streak += 1;
            if row_streak >= 3 {
                let result = acc.value();
                if max_term > 1e15 * result.abs() {
                    return Err(Error::Cancellation(format!(
                        "Phi2: largest term {max_term:e} vastly exceeds result {result:e}"
                    )));
                }
                return Ok(FnResult::plain(result, total));
            }
        } else {
            row_streak = 0;
        }
        prev_row_max = row_max;
        row_head = row_head
            .mul(Dd::two_sum(b1, mf))
            .mul_f64(x)
            .div(Dd::two_sum(c, mf))
            .div_f64(mf + 1.0);
        if !row_head.value().is_finite() {
            return Err(Error::Convergence("Phi2: row head is not finite".into()));
        }
    }
    Err(Error::Convergence(format!(
        "Phi2: no convergence within {} outer terms",
        ctrl.max_terms
    )))
}

// ---------------------------------------------------------------------------
// Lauricella F_A
// ---------------------------------------------------------------------------

/// Lauricella F_A(a; b₁..b_N; c₁..c_N; x₁..x_N) for N in 1..=4, convergent for
/// Σ|xᵢ| < 1.
///
/// For non-negative arguments the N-fold series is summed by total degree: the
/// inner sum over a fixed degree K is the K-th Cauchy-product coefficient of
/// the per-variable series Σₙ (bᵢ)ₙ xᵢⁿ / ((cᵢ)ₙ n!), built by log-space
/// convolution so huge K stays representable. That keeps the slowly convergent
/// corner Σxᵢ → 1 at O(N·K²) cost instead of the K^N cost of nested loops.
/// Mixed-sign arguments fall back to nested summation.
pub fn lauricella_fa(
    a: f64,
    b: &[f64],
    c: &[f64],
    x: &[f64],
    ctrl: SeriesControl,
) -> Result<FnResult> {
    let nvar = x.len();
    if nvar == 0 || nvar > 4 {
        return Err(Error::Domain(format!(
            "F_A supports 1 to 4 variables, got {nvar}"
        )));
    }
    if b.len() != nvar || c.len() != nvar {
        return Err(Error::Domain(format!(
            "F_A parameter vectors must all have length {nvar}"
        )));
    }
    for &ci in c {
        if is_nonpositive_integer(ci) {
            return Err(Error::Domain(format!(
                "F_A parameter c must not be a non-positive integer, got {ci}"
            )));
        }
    }
    let radius: f64 = x.iter().map(|v| v.abs()).sum();
    if radius >= 1.0 {
        return Err(Error::Domain(format!(
            "F_A arguments outside convergence domain: sum |x_i| = {radius}"
        )));
    }
    if x.iter().all(|&v| v == 0.0) {
        return Ok(FnResult::plain(1.0, 1));
    }
    if a > 0.0 && x.iter().all(|&v| v >= 0.0) && b.iter().all(|&v| v > 0.0) {
        fa_by_degree(a, b, c, x, radius, ctrl)
    } else {
        fa_nested(a, b, c, x, ctrl)
    }
}

/// Positive-term path: F_A = Σ_K (a)_K s_K with s_K the degree-K coefficient
/// of Π_i Σ_n (b_i)_n x_i^n / ((c_i)_n n!), convolved in log space.
fn fa_by_degree(
    a: f64,
    b: &[f64],
    c: &[f64],
    x: &[f64],
    radius: f64,
    ctrl: SeriesControl,
) -> Result<FnResult> {
    // Geometric-tail-aware stop threshold: once terms decay like radius^K the
    // truncated tail is about term * radius / (1 - radius).
    let tail_factor = ((1.0 - radius) / radius.max(1e-3)).min(1.0);
    let stop_tol = ctrl.rel_tol * tail_factor;
    let ln_gamma_a = gammaln(a)?;
    let mut kmax = 64usize.min(ctrl.max_terms);
    loop {
        let mut ln_coeff = ln_coefficients(b[0], c[0], x[0], kmax);
        for i in 1..x.len() {
            let next = ln_coefficients(b[i], c[i], x[i], kmax);
            ln_coeff = ln_convolve(&ln_coeff, &next);
        }
        let mut acc = Kahan::default();
        let mut streak = 0u32;
        let mut prev_term = f64::INFINITY;
        let mut converged = false;
        let mut terms = 0usize;
        for (k, &ln_s) in ln_coeff.iter().enumerate() {
            let term = if ln_s == f64::NEG_INFINITY {
                0.0
            } else {
                (gammaln(a + k as f64)? - ln_gamma_a + ln_s).exp()
            };
            acc.add(term);
            terms = k + 1;
            if !acc.value().is_finite() {
                return Err(Error::Convergence("F_A: series sum is not finite".into()));
            }
            if k > 0 && term <= stop_tol * acc.value() && term <= prev_term {
                streak += 1;
                if streak >= 3 {
                    converged = true;
                    break;
                }
            } else {
                streak = 0;
            }
            prev_term = term;
        }
        if converged {
            return Ok(FnResult::plain(acc.value(), terms));
        }
        if kmax >= ctrl.max_terms {
            return Err(Error::Convergence(format!(
                "F_A: no convergence within {} degrees",
                ctrl.max_terms
            )));
        }
        kmax = (kmax * 2).min(ctrl.max_terms);
    }
}

/// ln of (b)_n x^n / ((c)_n n!) for n = 0..=kmax (x >= 0).
fn ln_coefficients(b: f64, c: f64, x: f64, kmax: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(kmax + 1);
    out.push(0.0);
    if x == 0.0 {
        out.resize(kmax + 1, f64::NEG_INFINITY);
        return out;
    }
    let ln_x = x.ln();
    let mut acc = 0.0;
    for n in 1..=kmax {
        let nf = n as f64;
        acc += (b + nf - 1.0).ln() - (c + nf - 1.0).ln() + ln_x - nf.ln();
        out.push(acc);
    }
    out
}

/// Log-space convolution of two positive coefficient sequences.
fn ln_convolve(p: &[f64], q: &[f64]) -> Vec<f64> {
    let len = p.len();
    let mut out = Vec::with_capacity(len);
    for k in 0..len {
        let mut max = f64::NEG_INFINITY;
        for j in 0..=k {
            let v = p[j] + q[k - j];
            if v > max {
                max = v;
            }
        }
        if max == f64::NEG_INFINITY {
            out.push(f64::NEG_INFINITY);
            continue;
        }
        let mut sum = 0.0;
        for j in 0..=k {
            sum += (p[j] + q[k - j] - max).exp();
        }
        out.push(max + sum.ln());
    }
    out
}

/// Nested-loop fallback for mixed-sign or non-positive-parameter cases.
fn fa_nested(a: f64, b: &[f64], c: &[f64], x: &[f64], ctrl: SeriesControl) -> Result<FnResult> {
    struct State<'s> {
        b: &'s [f64],
        c: &'s [f64],
        x: &'s [f64],
        a: f64,
        acc: Kahan,
        total: usize,
        budget: usize,
        rel_tol: f64,
        max_terms: usize,
    }

    // Returns the largest |term| seen in the subtree rooted at `level`.
    fn level_sum(st: &mut State<'_>, level: usize, prefix: f64, degree: usize) -> Result<f64> {
        let last = level + 1 == st.x.len();
        let mut term = prefix;
        let mut subtree_max = 0.0f64;
        let mut streak = 0u32;
        let mut prev_child_max = f64::INFINITY;
        for n in 0..st.max_terms {
            let child_max = if last {
                st.acc.add(term);
                st.total += 1;
                if st.total > st.budget {
                    return Err(Error::Convergence(
                        "F_A: nested summation exceeded its term budget".into(),
                    ));
                }
                term.abs()
            } else {
                level_sum(st, level + 1, term, degree + n)?
            };
            subtree_max = subtree_max.max(child_max);
            let sum_abs = st.acc.value().abs();
            // Count toward the stop streak only once the per-index magnitude
            // profile is past its peak.
            if child_max <= st.rel_tol * sum_abs && child_max <= prev_child_max {
                streak += 1;
                if streak >= 3 {
                    return Ok(subtree_max);
                }
            } else {
                streak = 0;
            }
            prev_child_max = child_max;
            let nf = n as f64;
            term *= (st.a + (degree + n) as f64) * (st.b[level] + nf) * st.x[level]
                / ((st.c[level] + nf) * (nf + 1.0));
            if !term.is_finite() {
                return Err(Error::Convergence("F_A: nested term is not finite".into()));
            }
        }
        Err(Error::Convergence(format!(
            "F_A: index {level} exceeded {} terms",
            st.max_terms
        )))
    }

    let mut st = State {
        b,
        c,
        x,
        a,
        acc: Kahan::default(),
        total: 0,
        budget: 20_000_000,
        rel_tol: ctrl.rel_tol,
        max_terms: ctrl.max_terms,
    };
    level_sum(&mut st, 0, 1.0, 0)?;
    if !st.acc.value().is_finite() {
        return Err(Error::Convergence("F_A: series sum is not finite".into()));
    }
    Ok(FnResult::plain(st.acc.value(), st.total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ::approx::assert_relative_eq;
    use proptest::prelude::*;

    fn ctrl() -> SeriesControl {
        SeriesControl {
            rel_tol: 1e-13,
            max_terms: 10_000,
        }
    }

    // -- gammaln ------------------------------------------------------------

    #[test]
    fn gammaln_matches_exact_factorials() {
        // Gamma(k) = (k-1)! gives an exact oracle for integer arguments.
        let mut factorial: f64 = 1.0;
        for k in 1..=20u32 {
            if k > 1 {
                factorial *= (k - 1) as f64;
            }
            let got = gammaln(k as f64).unwrap();
            let expected = factorial.ln();
            assert!(
                (got - expected).abs() <= 1e-14 * expected.abs().max(1.0),
                "k={k}: got {got}, expected {expected}"
            );
        }
    }

    #[test]
    fn gammaln_matches_half_integers() {
        // Gamma(k + 1/2) = sqrt(pi) (2k)! / (4^k k!)
        let sqrt_pi = std::f64::consts::PI.sqrt();
        let mut fact2k: f64 = 1.0; // (2k)!
        let mut factk: f64 = 1.0; // k!
        for k in 0..=15u32 {
            if k > 0 {
                fact2k *= (2 * k - 1) as f64 * (2 * k) as f64;
                factk *= k as f64;
            }
            let expected = (sqrt_pi * fact2k / (4f64.powi(k as i32) * factk)).ln();
            let got = gammaln(k as f64 + 0.5).unwrap();
            assert!(
                (got - expected).abs() <= 1e-13 * expected.abs().max(1.0),
                "k={k}: got {got}, expected {expected}"
            );
        }
    }

    #[test]
    fn gammaln_known_values() {
        assert!(gammaln(1.0).unwrap().abs() <= 1e-14);
        assert_relative_eq!(
            gammaln(0.5).unwrap(),
            0.572_364_942_924_699_97,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            gammaln(4.0).unwrap(),
            1.791_759_469_228_055,
            max_relative = 1e-14
        );
    }

    #[test]
    fn gammaln_rejects_nonpositive() {
        assert!(gammaln(0.0).is_err());
        assert!(gammaln(-1.5).is_err());
    }

    // -- 1F1 ------------------------------------------------------------------

    #[test]
    fn kummer_at_zero_is_one() {
        let r = kummer_1f1(3.7, 1.2, 0.0, ctrl()).unwrap();
        assert_eq!(r.linear_value(), 1.0);
        assert!(r.converged);
    }

    #[test]
    fn kummer_exponential_reduction() {
        // 1F1(1, 1; z) = e^z
        let r = kummer_1f1(1.0, 1.0, 2.0, ctrl()).unwrap();
        assert_relative_eq!(r.linear_value(), 7.389_056_098_930_65, max_relative = 1e-12);
    }

    #[test]
    fn kummer_terminating_polynomial() {
        // 1F1(-1, m; -a u) = 1 + a u / m
        let r = kummer_1f1(-1.0, 2.0, -3.0, ctrl()).unwrap();
        assert_relative_eq!(r.linear_value(), 2.5, max_relative = 1e-14);
        // 1F1(-2, m; z) = 1 - 2z/m + z^2/(m(m+1))
        let m = 3.0;
        let z = -4.0;
        let got = kummer_1f1(-2.0, m, z, ctrl()).unwrap().linear_value();
        let direct = 1.0 - 2.0 * z / m + z * z / (m * (m + 1.0));
        assert_relative_eq!(got, direct, max_relative = 1e-14);
    }

    #[test]
    fn kummer_log_scaled_large_argument() {
        // 1F1(1, 1; z) = e^z, so the log-scaled value must equal z itself.
        let r = kummer_1f1(1.0, 1.0, 800.0, ctrl()).unwrap();
        assert!(r.log_scaled);
        assert_relative_eq!(r.ln_value(), 800.0, max_relative = 1e-12);
        // 1F1(2, 1; z) = (1 + z) e^z
        let r = kummer_1f1(2.0, 1.0, 800.0, ctrl()).unwrap();
        assert_relative_eq!(r.ln_value(), 800.0 + 801f64.ln(), max_relative = 1e-12);
    }

    #[test]
    fn kummer_large_negative_argument_is_stable() {
        // 1F1(-1/2, m; -x) ~ sqrt(x) Gamma(m) / Gamma(m + 1/2) for large x.
        let m = 2.0;
        let x = 30_000.0;
        let r = kummer_1f1(-0.5, m, -x, ctrl()).unwrap();
        let asym = (gammaln(m).unwrap() - gammaln(m + 0.5).unwrap()).exp() * x.sqrt();
        assert_relative_eq!(r.linear_value(), asym, max_relative = 1e-3);
    }

    #[test]
    fn kummer_rejects_bad_b() {
        assert!(kummer_1f1(1.0, 0.0, 1.0, ctrl()).is_err());
        assert!(kummer_1f1(1.0, -3.0, 1.0, ctrl()).is_err());
    }

    #[test]
    fn kummer_reports_nonconvergence() {
        let tight = SeriesControl {
            rel_tol: 1e-13,
            max_terms: 4,
        };
        assert!(kummer_1f1(2.5, 1.5, 30.0, tight).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        // 1F1(a,b;z) = e^z 1F1(b-a, b; -z)
        #[test]
        fn kummer_transform_identity(
            a in -3.0f64..6.0,
            b in 0.5f64..10.0,
            z in -20.0f64..20.0,
        ) {
            prop_assume!(!is_nonpositive_integer(b));
            let lhs = kummer_1f1(a, b, z, ctrl()).unwrap().linear_value();
            let inner = kummer_1f1(b - a, b, -z, ctrl()).unwrap().linear_value();
            let rhs = z.exp() * inner;
            prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()).max(1e-30),
                "lhs={lhs}, rhs={rhs}");
        }
    }

    // -- 2F1 ------------------------------------------------------------------

    #[test]
    fn gauss_2f1_trivials() {
        assert_eq!(gauss_2f1(1.3, 0.7, 2.2, 0.0, ctrl()).unwrap().linear_value(), 1.0);
        // 2F1(a, b; a; z) = (1-z)^{-b}
        let r = gauss_2f1(3.0, 2.0, 3.0, 0.25, ctrl()).unwrap();
        assert_relative_eq!(r.linear_value(), 16.0 / 9.0, max_relative = 1e-13);
    }

    #[test]
    fn gauss_2f1_frozen_series_value() {
        // Independent oracle: direct unaccelerated summation at 1e-14 gave
        // 2F1(-0.5, -0.5; 2; 0.5) = 1.06394842297331094.
        let r = gauss_2f1(-0.5, -0.5, 2.0, 0.5, ctrl()).unwrap();
        assert_relative_eq!(r.linear_value(), 1.063_948_422_973_310_94, max_relative = 1e-13);
    }

    #[test]
    fn gauss_2f1_log_reduction() {
        // 2F1(1, 1; 2; z) = -ln(1 - z) / z
        let r = gauss_2f1(1.0, 1.0, 2.0, 0.3, ctrl()).unwrap();
        assert_relative_eq!(r.linear_value(), 1.188_916_479_795_774_8, max_relative = 1e-13);
    }

    #[test]
    fn gauss_2f1_negative_argument_far_out() {
        // Pfaff handles arguments far outside |z| < 1:
        // 2F1(1, 1; 2; z) = -ln(1-z)/z at z = -4.
        let r = gauss_2f1(1.0, 1.0, 2.0, -4.0, ctrl()).unwrap();
        assert_relative_eq!(r.linear_value(), -(5.0f64.ln()) / -4.0, max_relative = 1e-12);
    }

    #[test]
    fn gauss_2f1_rejects_unreachable() {
        assert!(gauss_2f1(0.5, 0.5, 1.5, 1.0, ctrl()).is_err());
        assert!(gauss_2f1(0.5, 0.5, 1.5, 2.0, ctrl()).is_err());
        assert!(gauss_2f1(0.5, 0.5, -2.0, 0.5, ctrl()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        // Direct series and Pfaff-transformed evaluations agree. Parameters
        // stay moderate so the direct alternating reference itself keeps the
        // digits the comparison asks for.
        #[test]
        fn gauss_2f1_pfaff_identity(
            a in 0.2f64..3.0,
            b in 0.2f64..3.0,
            c in 0.8f64..8.0,
            z in -0.9f64..0.5,
        ) {
            prop_assume!(z != 0.0);
            let direct = sum_ratio_series(
                1.0,
                |n| {
                    let nf = n as f64;
                    (a + nf) * (b + nf) * z / ((c + nf) * (nf + 1.0))
                },
                ctrl(),
                "2F1 direct",
            ).unwrap().linear_value();
            let transformed = gauss_2f1(a, b, c, z, ctrl()).unwrap().linear_value();
            prop_assert!((direct - transformed).abs() <= 1e-10 * direct.abs().max(1.0));
        }

        // 2F1(a, b; a; z) = (1 - z)^{-b}
        #[test]
        fn gauss_2f1_elementary_reduction(
            a in 0.5f64..6.0,
            b in 0.2f64..4.0,
            z in -0.8f64..0.8,
        ) {
            let got = gauss_2f1(a, b, a, z, ctrl()).unwrap().linear_value();
            let expected = (1.0 - z).powf(-b);
            prop_assert!((got - expected).abs() <= 1e-12 * expected.abs().max(1.0));
        }
    }

    // -- F2 -------------------------------------------------------------------

    #[test]
    fn appell_f2_trivial_and_frozen() {
        assert_eq!(
            appell_f2(1.0, 2.0, 3.0, 1.5, 2.5, 0.0, 0.0, ctrl()).unwrap().linear_value(),
            1.0
        );
        // Reduction: F2(1; 1, 1; 2, 2; 0.3, 0) = 2F1(1, 1; 2; 0.3)
        let r = appell_f2(1.0, 1.0, 1.0, 2.0, 2.0, 0.3, 0.0, ctrl()).unwrap();
        assert_relative_eq!(r.linear_value(), 1.188_916_479_795_774_8, max_relative = 1e-12);
        // Frozen value from the brute-force double series oracle.
        let r = appell_f2(1.0, 0.5, 1.0, 1.5, 2.0, -0.2, 0.1, ctrl()).unwrap();
        assert_relative_eq!(r.linear_value(), 0.987_696_361_512_725_77, max_relative = 1e-12);
    }

    #[test]
    fn appell_f2_rejects_outside_domain() {
        assert!(matches!(
            appell_f2(1.0, 1.0, 1.0, 2.0, 2.0, 0.6, 0.5, ctrl()),
            Err(Error::Domain(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        // Setting y = 0 reduces F2 to 2F1 in (a, b1; c1). Parameters stay
        // moderate so the direct alternating series at x < 0 keeps enough
        // digits to compare against the Pfaff-transformed route.
        #[test]
        fn appell_f2_single_variable_reduction(
            a in 0.5f64..4.0,
            b1 in 0.5f64..4.0,
            b2 in 0.5f64..5.0,
            c1 in 0.8f64..8.0,
            c2 in 0.6f64..8.0,
            x in -0.6f64..0.8,
        ) {
            let f2 = appell_f2(a, b1, b2, c1, c2, x, 0.0, ctrl()).unwrap().linear_value();
            let f21 = gauss_2f1(a, b1, c1, x, ctrl()).unwrap().linear_value();
            prop_assert!((f2 - f21).abs() <= 1e-11 * f21.abs().max(1.0));
        }
    }

    // -- Phi2 -----------------------------------------------------------------

    #[test]
    fn humbert_phi2_trivial_and_frozen() {
        assert_eq!(
            humbert_phi2(1.0, 2.0, 3.0, 0.0, 0.0, ctrl()).unwrap().linear_value(),
            1.0
        );
        // Phi2(1, 1; 1; 0, -1) = 1F1(1, 1; -1) = e^{-1}
        let r = humbert_phi2(1.0, 1.0, 1.0, 0.0, -1.0, ctrl()).unwrap();
        assert_relative_eq!(r.linear_value(), (-1.0f64).exp(), max_relative = 1e-12);
        // Frozen value from the brute-force double series oracle.
        let r = humbert_phi2(2.0, 2.0, 5.0, -0.5, -1.0, ctrl()).unwrap();
        assert_relative_eq!(r.linear_value(), 0.555_328_550_074_840_06, max_relative = 1e-13);
    }

    #[test]
    fn humbert_phi2_flags_catastrophic_cancellation() {
        // Deep in the tail both arguments are huge and negative and the series
        // cancels to oblivion; the evaluation must refuse rather than lie.
        let r = humbert_phi2(2.0, 6.0, 9.0, -300.0, -900.0, ctrl());
        assert!(matches!(r, Err(Error::Cancellation(_)) | Err(Error::Convergence(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        // Setting x = 0 reduces Phi2 to 1F1 in (b2; c).
        #[test]
        fn humbert_phi2_single_variable_reduction(
            b1 in 0.5f64..5.0,
            b2 in 0.5f64..5.0,
            c in 0.6f64..8.0,
            y in -4.0f64..4.0,
        ) {
            let phi = humbert_phi2(b1, b2, c, 0.0, y, ctrl()).unwrap().linear_value();
            let f11 = kummer_1f1(b2, c, y, ctrl()).unwrap().linear_value();
            prop_assert!((phi - f11).abs() <= 1e-10 * f11.abs() + 1e-12);
        }
    }

    // -- F_A ------------------------------------------------------------------

    #[test]
    fn lauricella_trivials() {
        let r = lauricella_fa(1.5, &[1.0, 2.0], &[2.0, 3.0], &[0.0, 0.0], ctrl()).unwrap();
        assert_eq!(r.linear_value(), 1.0);
        // N = 1 elementary reduction: F_A(2; 4; 2; 0.3) = (0.7)^{-4}
        let r = lauricella_fa(2.0, &[4.0], &[2.0], &[0.3], ctrl()).unwrap();
        assert_relative_eq!(r.linear_value(), 4.164_931_278_633_904, max_relative = 1e-12);
    }

    #[test]
    fn lauricella_rejects_bad_shapes() {
        assert!(lauricella_fa(1.0, &[], &[], &[], ctrl()).is_err());
        assert!(lauricella_fa(1.0, &[1.0; 5], &[1.0; 5], &[0.1; 5], ctrl()).is_err());
        assert!(lauricella_fa(1.0, &[1.0, 1.0], &[1.0], &[0.1, 0.1], ctrl()).is_err());
        assert!(lauricella_fa(1.0, &[1.0, 1.0], &[1.0, 1.0], &[0.6, 0.5], ctrl()).is_err());
    }

    #[test]
    fn lauricella_degree_path_matches_nested_path() {
        // Same series, two very different summation orders.
        let b = [2.5, 1.5, 2.0];
        let c = [2.0, 2.0, 2.0];
        let x = [0.2, 0.15, 0.1];
        let fast = fa_by_degree(2.0, &b, &c, &x, x.iter().sum(), ctrl()).unwrap();
        let slow = fa_nested(2.0, &b, &c, &x, ctrl()).unwrap();
        assert_relative_eq!(fast.linear_value(), slow.linear_value(), max_relative = 1e-11);
    }

    #[test]
    fn lauricella_handles_slow_corner() {
        // Sum of arguments 0.971: the nested path would need ~1e10 terms.
        let sr = 0.8f64.sqrt();
        let xi = sr / (1.0 + 3.0 * sr);
        let b = [4.5; 4];
        let c = [4.0; 4];
        let x = [xi; 4];
        let r = lauricella_fa(4.0, &b, &c, &x, ctrl()).unwrap();
        assert!(r.converged);
        assert!(r.linear_value().is_finite() && r.linear_value() > 1.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        // F_A with one variable is 2F1 pointwise.
        #[test]
        fn lauricella_n1_equals_2f1(
            a in 0.5f64..5.0,
            b in 0.5f64..5.0,
            c in 0.6f64..8.0,
            x in 0.0f64..0.9,
        ) {
            let fa = lauricella_fa(a, &[b], &[c], &[x], ctrl()).unwrap().linear_value();
            let f21 = gauss_2f1(a, b, c, x, ctrl()).unwrap().linear_value();
            prop_assert!((fa - f21).abs() <= 1e-12 * f21.abs().max(1.0));
        }

        // Zeroing trailing variables drops them from the series.
        #[test]
        fn lauricella_marginalizes_zero_arguments(
            a in 0.5f64..4.0,
            b1 in 0.5f64..4.0,
            b2 in 0.5f64..4.0,
            c1 in 0.6f64..6.0,
            c2 in 0.6f64..6.0,
            x in 0.0f64..0.8,
        ) {
            let two = lauricella_fa(a, &[b1, b2], &[c1, c2], &[x, 0.0], ctrl()).unwrap().linear_value();
            let one = lauricella_fa(a, &[b1], &[c1], &[x], ctrl()).unwrap().linear_value();
            prop_assert!((two - one).abs() <= 1e-11 * one.abs().max(1.0));
        }
    }
}
