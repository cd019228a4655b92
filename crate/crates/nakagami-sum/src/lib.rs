//! Statistics of sums of equally correlated Nakagami-m fading envelopes.
//!
//! The library fits a closed-form equivalent distribution to the sum of `L`
//! equally correlated Nakagami-m envelopes by matching its second and fourth
//! moments, and evaluates equal-gain-combining (EGC) receiver outage
//! probability and average bit error rates from that fit. A built-in
//! Monte-Carlo simulator for correlated Nakagami channels serves as the
//! ground-truth oracle for everything the closed forms claim.
//!
//! Module map:
//!
//! * [`hyperfn`] — the hypergeometric special functions the closed forms need
//!   (gamma, ₁F₁, ₂F₁, Appell F₂, Humbert Φ₂, Lauricella F_A).
//! * [`quadrature`] — Gauss-Laguerre rules and an adaptive Simpson integrator.
//! * [`moments`] — exact E[Z²], E[Z⁴] of the envelope sum and the W
//!   cross-moment coefficients, both in closed form and as a quadrature oracle.
//! * [`approx`] — the moment-matched fit (Ω_R, m_R) and the fitted PDF/CDF/MGF.
//! * [`egc`] — SNR-domain mapping, outage probability and BER formulas.
//! * [`mcsim`] — deterministic correlated-fading Monte-Carlo simulator.
//! * [`cli`] — the batch front-end behind the `nakagami-sum` binary.

// Guards written as `!(x > 0.0)` are deliberate: they reject NaN along with
// the out-of-domain values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approx;
pub mod cli;
pub mod egc;
pub mod error;
pub mod hyperfn;
pub mod mcsim;
pub mod moments;
pub mod quadrature;

pub use error::{Error, Result};
