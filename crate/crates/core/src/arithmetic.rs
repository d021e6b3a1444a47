//! Frequency arithmetic: continued fractions, the Liouville exponent and resonances.
//!
//! The continued fraction of a double is computed exactly: a finite double is a dyadic
//! rational, so Euclid's algorithm on its integer numerator and denominator has no
//! rounding. Coefficients beyond the precision of the double are still exact for the
//! double, which is why denominators above [`PRECISION_Q`] carry a warning.

use serde::{Deserialize, Serialize};

use crate::error::{HarperError, Result};

/// Hard cap on convergent denominators.
pub const DENOMINATOR_CAP: u64 = 1_000_000_000;
/// Denominators above this are beyond what double arithmetic on `k alpha` resolves.
pub const PRECISION_Q: u64 = 10_000_000;
/// Largest supported continued-fraction depth.
pub const MAX_DEPTH: usize = 200;
/// Largest horizon accepted by [`find_resonances`].
pub const MAX_RESONANCE_HORIZON: u64 = 1_000_000;
/// Largest horizon scanned exhaustively by [`beta_estimate`].
pub const BRUTE_FORCE_CAP: u64 = 100_000;

/// Distance from `x` to the nearest integer, in `[0, 1/2]`.
#[must_use]
pub fn torus_norm(x: f64) -> f64 {
    (x - x.round()).abs()
}

/// Representative of `x mod 1` in `[-1/2, 1/2]`.
#[must_use]
pub fn centered(x: f64) -> f64 {
    x - x.round()
}

/// Signed fractional part of `k alpha` in `[-1/2, 1/2]`, with the product rounding error
/// recovered by a fused multiply-add.
#[must_use]
pub fn frac_mul(k: i64, alpha: f64) -> f64 {
    let kf = k as f64;
    let hi = kf * alpha;
    let lo = kf.mul_add(alpha, -hi);
    centered(centered(hi) + lo)
}

/// `|| shift - k alpha ||` on the circle.
#[must_use]
pub fn rotation_distance(shift: f64, k: i64, alpha: f64) -> f64 {
    torus_norm(centered(shift) - frac_mul(k, alpha))
}

/// Exact dyadic form `num / den` of a finite double in `(0, 1)`.
#[must_use]
pub fn dyadic(alpha: f64) -> Option<(u128, u128)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return None;
    }
    let bits = alpha.to_bits();
    let exp_bits = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, exp) = if exp_bits == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp_bits - 1075) };
    let mut num = u128::from(mant);
    let mut shift = -exp;
    while num % 2 == 0 && shift > 0 {
        num /= 2;
        shift -= 1;
    }
    if shift > 127 {
        return None;
    }
    Some((num, 1u128 << shift))
}

/// A frequency with its continued-fraction data.
///
/// Serialises as the flat record `{value, cf_coeffs, convergents, beta_hat, truncated}`;
/// `convergents[j] = [p_{j+1}, q_{j+1}]` for the coefficients `a_1..a_D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frequency {
    pub value: f64,
    pub cf_coeffs: Vec<u64>,
    pub convergents: Vec<[u64; 2]>,
    pub beta_hat: f64,
    pub truncated: bool,
}

impl Frequency {
    /// Continued-fraction depth `D`.
    #[must_use]
    pub fn depth(&self) -> usize {
        self.cf_coeffs.len()
    }

    /// Denominators `q_1..q_D`.
    pub fn denominators(&self) -> impl Iterator<Item = u64> + '_ {
        self.convergents.iter().map(|c| c[1])
    }

    /// True when some stored denominator exceeds [`PRECISION_Q`].
    #[must_use]
    pub fn precision_warning(&self) -> bool {
        self.denominators().any(|q| q > PRECISION_Q)
    }

    /// The golden-mean frequency `(sqrt 5 - 1) / 2` expanded to `depth` coefficients.
    pub fn golden(depth: usize) -> Result<Self> {
        continued_fraction((5f64.sqrt() - 1.0) / 2.0, depth)
    }

    /// The finite continued fraction `[0; a_1, ..., a_D]`.
    pub fn from_coefficients(coeffs: &[u64]) -> Result<Self> {
        if coeffs.is_empty() || coeffs.len() > MAX_DEPTH {
            return Err(HarperError::invalid(format!(
                "need between 1 and {MAX_DEPTH} coefficients, got {}",
                coeffs.len()
            )));
        }
        if coeffs.contains(&0) || coeffs == [1] {
            return Err(HarperError::invalid("coefficients must be positive and value must lie in (0, 1)"));
        }
        let convergents = convergents_of(coeffs)?;
        let [p, q] = *convergents.last().expect("nonempty");
        let value = p as f64 / q as f64;
        let beta_hat = deepest_beta(value, &convergents, u64::MAX);
        Ok(Self { value, cf_coeffs: coeffs.to_vec(), convergents, beta_hat, truncated: false })
    }
}

fn convergents_of(coeffs: &[u64]) -> Result<Vec<[u64; 2]>> {
    let (mut p_prev, mut q_prev) = (1u128, 0u128);
    let (mut p, mut q) = (0u128, 1u128);
    let mut out = Vec::with_capacity(coeffs.len());
    for &a in coeffs {
        let a = u128::from(a);
        let (pn, qn) = (a * p + p_prev, a * q + q_prev);
        if qn > u128::from(DENOMINATOR_CAP) {
            return Err(HarperError::invalid(format!("convergent denominator {qn} exceeds cap {DENOMINATOR_CAP}")));
        }
        p_prev = p;
        q_prev = q;
        p = pn;
        q = qn;
        out.push([p as u64, q as u64]);
    }
    Ok(out)
}

/// `-ln ||q_j alpha|| / q_j` at the deepest index `j <= D-1` with `q_j <= horizon`,
/// using only reliably resolved denominators. Zero when none qualifies.
fn deepest_beta(alpha: f64, convergents: &[[u64; 2]], horizon: u64) -> f64 {
    let d = convergents.len();
    if d < 2 {
        return 0.0;
    }
    convergents[..d - 1]
        .iter()
        .rev()
        .map(|c| c[1])
        .find(|&q| q <= horizon && q <= PRECISION_Q)
        .map_or(0.0, |q| log_ratio(alpha, q))
}

fn log_ratio(alpha: f64, k: u64) -> f64 {
    let norm = torus_norm(frac_mul(k as i64, alpha));
    if norm == 0.0 {
        f64::INFINITY
    } else {
        -norm.ln() / k as f64
    }
}

/// Continued-fraction expansion of `alpha` to `depth` coefficients.
///
/// Stops early (with `truncated = true`) when the double is exhausted or the next
/// denominator would exceed [`DENOMINATOR_CAP`].
pub fn continued_fraction(alpha: f64, depth: usize) -> Result<Frequency> {
    if !alpha.is_finite() || !(alpha > 0.0 && alpha < 1.0) {
        return Err(HarperError::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if depth == 0 || depth > MAX_DEPTH {
        return Err(HarperError::invalid(format!("depth must lie in 1..={MAX_DEPTH}, got {depth}")));
    }
    let (num, den) = dyadic(alpha).ok_or_else(|| HarperError::invalid("alpha is too small to expand exactly"))?;
    // Euclid on den/num = 1/alpha.
    let (mut top, mut bottom) = (den, num);
    let mut coeffs = Vec::with_capacity(depth);
    let (mut q_prev, mut q) = (0u128, 1u128);
    let mut truncated = false;
    while coeffs.len() < depth {
        let a = top / bottom;
        let rem = top % bottom;
        let qn = a * q + q_prev;
        if qn > u128::from(DENOMINATOR_CAP) {
            truncated = true;
            break;
        }
        coeffs.push(a as u64);
        q_prev = q;
        q = qn;
        if rem == 0 {
            truncated = coeffs.len() < depth;
            break;
        }
        // Fractional remainder below 1e-14 means the next quotient is noise-dominated.
        if (rem as f64) < 1e-14 * (bottom as f64) && coeffs.len() < depth {
            truncated = true;
            break;
        }
        top = bottom;
        bottom = rem;
    }
    let convergents = convergents_of(&coeffs)?;
    let beta_hat = deepest_beta(alpha, &convergents, u64::MAX);
    Ok(Frequency { value: alpha, cf_coeffs: coeffs, convergents, beta_hat, truncated })
}

/// Frequency whose convergents grow like `q_{k+1} ~ exp(target * q_k)`.
///
/// The coefficients are `a_1 = 1` and `a_{k+1} = max(1, ceil((e^{target q_k} - q_{k-1}) / q_k))`,
/// so `q_{k+1}` is the least admissible denominator at or above `e^{target q_k}`. The value
/// continues with the golden tail `[..., a_D, 1, 1, 1, ...]` so it stays irrational.
pub fn liouville_frequency(target: f64, depth: usize) -> Result<Frequency> {
    if !(target > 0.0 && target <= 5.0) {
        return Err(HarperError::invalid(format!("target beta must lie in (0, 5], got {target}")));
    }
    if !(1..=12).contains(&depth) {
        return Err(HarperError::invalid(format!("depth must lie in 1..=12, got {depth}")));
    }
    let mut coeffs = vec![1u64];
    let (mut q_prev, mut q) = (1u64, 1u64);
    let mut truncated = false;
    while coeffs.len() < depth {
        let want = (target * q as f64).exp();
        let a = ((want - q_prev as f64) / q as f64).ceil().max(1.0);
        let qn = a * q as f64 + q_prev as f64;
        if !qn.is_finite() || qn > DENOMINATOR_CAP as f64 {
            truncated = true;
            break;
        }
        let a = a as u64;
        coeffs.push(a);
        let qn = a * q + q_prev;
        q_prev = q;
        q = qn;
    }
    let golden = (1.0 + 5f64.sqrt()) / 2.0;
    let x = coeffs.iter().rev().fold(golden, |tail, &a| a as f64 + 1.0 / tail);
    let value = 1.0 / x;
    let convergents = convergents_of(&coeffs)?;
    let beta_hat = deepest_beta(value, &convergents, u64::MAX);
    Ok(Frequency { value, cf_coeffs: coeffs, convergents, beta_hat, truncated })
}

/// Liouville-exponent estimates at a horizon `K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaEstimate {
    /// `-ln ||q_j alpha|| / q_j` at the deepest informative convergent `q_j <= K`.
    pub estimate: f64,
    /// Maximum of the ratio over `k = 1` and all convergent denominators `<= K`.
    pub max_over_convergents: f64,
    /// Maximum of the ratio over every `1 <= k <= min(K, BRUTE_FORCE_CAP)`.
    pub max_over_all_k: f64,
    /// Denominator used for [`BetaEstimate::estimate`].
    pub deepest_denominator: u64,
    pub horizon: u64,
}

/// Estimates `beta(alpha)` from the convergents up to `horizon`.
///
/// Requires at least two convergents and `horizon >= q_2`.
pub fn beta_estimate(freq: &Frequency, horizon: u64) -> Result<BetaEstimate> {
    if freq.depth() < 2 {
        return Err(HarperError::invalid("beta estimate needs at least two convergents"));
    }
    let q2 = freq.convergents[1][1];
    if horizon < q2 {
        return Err(HarperError::HorizonTooSmall { given: horizon, minimum: q2 });
    }
    let alpha = freq.value;
    let d = freq.depth();
    let informative = &freq.convergents[..d - 1];
    let deepest = informative.iter().rev().map(|c| c[1]).find(|&q| q <= horizon).unwrap_or(1);
    let estimate = log_ratio(alpha, deepest);
    let max_over_convergents = std::iter::once(1)
        .chain(freq.denominators().filter(|&q| q <= horizon))
        .map(|q| log_ratio(alpha, q))
        .fold(f64::NEG_INFINITY, f64::max);
    let max_over_all_k = (1..=horizon.min(BRUTE_FORCE_CAP))
        .map(|k| log_ratio(alpha, k))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(BetaEstimate { estimate, max_over_convergents, max_over_all_k, deepest_denominator: deepest, horizon })
}

/// Table of `||k alpha||` and `||k alpha|| e^{3/2 beta_hat k}` for `1 <= k <= K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallDivisorProfile {
    pub beta_hat: f64,
    /// Rows `(k, ||k alpha||, scaled)`.
    pub rows: Vec<(u64, f64, f64)>,
    /// Minimum of the scaled column.
    pub c_hat: f64,
}

pub fn small_divisor_profile(freq: &Frequency, horizon: u64) -> Result<SmallDivisorProfile> {
    if horizon == 0 || horizon > MAX_RESONANCE_HORIZON {
        return Err(HarperError::invalid(format!("horizon must lie in 1..={MAX_RESONANCE_HORIZON}")));
    }
    let beta = freq.beta_hat;
    let mut rows = Vec::with_capacity(horizon as usize);
    let mut c_hat = f64::INFINITY;
    for k in 1..=horizon {
        let norm = torus_norm(frac_mul(k as i64, freq.value));
        if norm == 0.0 {
            return Err(HarperError::RationalFrequency { k: k as i64 });
        }
        let scaled = norm * (1.5 * beta * k as f64).exp();
        c_hat = c_hat.min(scaled);
        rows.push((k, norm, scaled));
    }
    Ok(SmallDivisorProfile { beta_hat: beta, rows, c_hat })
}

/// Default resonance threshold `epsilon_0 = 10 beta_hat`.
#[must_use]
pub fn default_epsilon0(freq: &Frequency) -> f64 {
    10.0 * freq.beta_hat
}

/// Position of the resonance following the last one found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NextResonance {
    At(i64),
    /// No further resonance up to this horizon.
    Beyond(u64),
}

/// The `epsilon_0`-resonances of a phase up to a horizon, ordered by `|n|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceSet {
    pub theta: f64,
    pub epsilon0: f64,
    pub horizon: u64,
    pub resonances: Vec<i64>,
    /// `||2 theta - n alpha||` for each resonance.
    pub distances: Vec<f64>,
}

impl ResonanceSet {
    /// Resonance scale `|n_j|` for the `j`-th resonance (`j = 0` is the zero scale).
    #[must_use]
    pub fn scale(&self, j: usize) -> Option<u64> {
        if j == 0 {
            Some(0)
        } else {
            self.resonances.get(j - 1).map(|n| n.unsigned_abs())
        }
    }

    /// The resonance after the `j`-th one, or the horizon sentinel.
    #[must_use]
    pub fn next(&self, j: usize) -> NextResonance {
        self.resonances.get(j).map_or(NextResonance::Beyond(self.horizon), |&n| NextResonance::At(n))
    }

    /// The last resonance with `|n| <= bound`.
    #[must_use]
    pub fn last_within(&self, bound: u64) -> Option<i64> {
        self.resonances.iter().rev().copied().find(|n| n.unsigned_abs() <= bound)
    }
}

/// Finds every `n` with `||2 theta - n alpha|| <= e^{-epsilon0 |n|}` that attains the
/// minimum of `||2 theta - k alpha||` over `|k| <= |n|`.
///
/// For equal `|n|` the positive index is tested first. `n = 0` is never reported.
pub fn find_resonances(theta: f64, freq: &Frequency, epsilon0: f64, horizon: u64) -> Result<ResonanceSet> {
    if horizon > MAX_RESONANCE_HORIZON {
        return Err(HarperError::invalid(format!("horizon {horizon} exceeds {MAX_RESONANCE_HORIZON}")));
    }
    if !(epsilon0 >= 0.0) || !theta.is_finite() {
        return Err(HarperError::invalid("epsilon0 must be nonnegative and theta finite"));
    }
    let alpha = freq.value;
    let two_theta = centered(2.0 * centered(theta));
    let mut running = torus_norm(two_theta);
    let mut resonances = Vec::new();
    let mut distances = Vec::new();
    for m in 1..=horizon as i64 {
        let bound = (-epsilon0 * m as f64).exp();
        let dp = rotation_distance(two_theta, m, alpha);
        let dm = rotation_distance(two_theta, -m, alpha);
        running = running.min(dp).min(dm);
        for (n, dist) in [(m, dp), (-m, dm)] {
            if dist <= running && dist <= bound {
                resonances.push(n);
                distances.push(dist);
            }
        }
    }
    Ok(ResonanceSet { theta, epsilon0, horizon, resonances, distances })
}
