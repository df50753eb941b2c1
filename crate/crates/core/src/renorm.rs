//! Renormalisation certificates: triple validation, the quadratic threshold
//! and the `q_{t+1} = (2k - 3) q_t^2 + k eta_t` recursion.

use num_rational::BigRational;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dist::{moments, DistError, DistSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RenormParams {
    pub alpha: f64,
    pub beta: f64,
    pub k: u64,
    pub n: u64,
}

#[derive(Debug, Error)]
pub enum RenormError {
    #[error("(alpha, beta, k) = ({alpha}, {beta}, {k}) is not renormalisable")]
    NotRenormalisable { alpha: f64, beta: f64, k: u64 },
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// Whether `0 < alpha <= 1/4`, `beta > 1`, `beta + alpha beta < 2 - 3 alpha`
/// and `alpha (k - 3) > 2 beta (1 - alpha)`, decided in exact arithmetic on
/// the given floating-point values.
pub fn is_renormalisable(alpha: f64, beta: f64, k: u64) -> bool {
    let (Some(a), Some(b)) = (BigRational::from_float(alpha), BigRational::from_float(beta)) else {
        return false;
    };
    let r = |x: i64| BigRational::from_integer(x.into());
    let kk = BigRational::from_integer(k.into());
    a > r(0)
        && a <= r(1) / r(4)
        && b > r(1)
        && &b + &a * &b < r(2) - r(3) * &a
        && &a * (kk - r(3)) > r(2) * &b * (r(1) - &a)
}

/// `c = (var_r + var_b)(beta + 1)^2 / ((mu_r + mu_b)^2 (beta - 1)^2)`.
pub fn compute_c(mu_r: f64, mu_b: f64, var_r: f64, var_b: f64, beta: f64) -> Result<f64, DistError> {
    if !(var_r.is_finite() && var_b.is_finite()) {
        return Err(DistError::InfiniteMoment("variance".into()));
    }
    if !(mu_r > 0.0 && mu_b > 0.0 && beta > 1.0) {
        return Err(DistError::Domain(format!("need positive means and beta > 1, got {mu_r}, {mu_b}, {beta}")));
    }
    let ratio = (beta + 1.0) / (beta - 1.0);
    let mu = mu_r + mu_b;
    Ok((var_r + var_b) * ratio * ratio / (mu * mu))
}

/// Largest root of `x = (2k - 3) x^2 + k c / n`, if real.
pub fn renorm2_root(k: u64, c: f64, n: u64) -> Option<f64> {
    let a = 2.0 * k as f64 - 3.0;
    let disc = 1.0 - 4.0 * a * k as f64 * c / n as f64;
    if disc < 0.0 {
        return None;
    }
    Some((1.0 + disc.sqrt()) / (2.0 * a))
}

/// Schedule of the atypicality probabilities `eta_t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum EtaModel {
    /// `eta_t = eta0 * ratio^t`.
    Geometric { eta0: f64, ratio: f64 },
    /// Explicit values; past the end, `eta_t` continues geometrically from the
    /// last value with factor `tail_ratio`.
    Schedule { values: Vec<f64>, tail_ratio: f64 },
}

impl EtaModel {
    /// The Chebyshev model `eta_t = c / (k^t n)`.
    pub fn chebyshev(c: f64, k: u64, n: u64) -> Self {
        EtaModel::Geometric { eta0: c / n as f64, ratio: 1.0 / k as f64 }
    }

    pub fn eta(&self, t: u64) -> f64 {
        match self {
            EtaModel::Geometric { eta0, ratio } => eta0 * ratio.powf(t as f64),
            EtaModel::Schedule { values, tail_ratio } => match values.get(t as usize) {
                Some(v) => *v,
                None => {
                    let last = values.last().copied().unwrap_or(0.0);
                    last * tail_ratio.powf((t as usize + 1 - values.len()) as f64)
                }
            },
        }
    }

    /// Bound on `eta_{s+1} / eta_s` for `s >= t`.
    fn decay_from(&self, t: u64) -> f64 {
        match self {
            EtaModel::Geometric { ratio, .. } => *ratio,
            EtaModel::Schedule { values, tail_ratio } => {
                let mut r = *tail_ratio;
                for s in t as usize..values.len().saturating_sub(1) {
                    let (a, b) = (values[s], values[s + 1]);
                    r = r.max(if a > 0.0 {
                        b / a
                    } else if b > 0.0 {
                        f64::INFINITY
                    } else {
                        0.0
                    });
                }
                r
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            EtaModel::Geometric { eta0, ratio } => format!("eta_t = {eta0:e} * {ratio}^t"),
            EtaModel::Schedule { values, tail_ratio } => {
                format!("{} explicit values, then geometric with ratio {tail_ratio}", values.len())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QRecursion {
    pub sequence: Vec<f64>,
    pub converged: bool,
    /// Step at which the geometric tail bound was established.
    pub certified_at: Option<u64>,
    /// Upper bound on `sum_t q_t` when converged, else the partial sum.
    pub sum_bound: f64,
}

/// Iterates `q_{t+1} = (2k - 3) q_t^2 + k eta_t` for at most `steps` steps.
///
/// At step `t`, with `rho = max(r, 1/2)` for `r` the decay of `eta` from `t`
/// on and `B = max(q_t, 2 k eta_t / rho)`, the condition `(2k - 3) B <= rho / 2`
/// gives `q_s <= B rho^(s - t)` for every `s >= t` by induction. The recursion
/// is reported converged once that holds and `q_t < 1e-30` or the budget ends.
pub fn q_recursion(q0: f64, eta: &EtaModel, k: u64, steps: u64) -> QRecursion {
    let a = 2.0 * k as f64 - 3.0;
    let kf = k as f64;
    let mut seq = vec![q0];
    let mut partial = 0.0;
    let mut cert: Option<(u64, f64)> = None;
    let mut q = q0;
    for t in 0..=steps {
        let e = eta.eta(t);
        if cert.is_none() {
            let rho = eta.decay_from(t).max(0.5);
            let b = q.max(2.0 * kf * e / rho);
            if rho < 1.0 && a * b <= rho / 2.0 {
                cert = Some((t, partial + b / (1.0 - rho)));
            }
        }
        if cert.is_some() && q < 1e-30 || t == steps || !(q <= 1.0) {
            break;
        }
        partial += q;
        q = a * q * q + kf * e;
        seq.push(q);
    }
    match cert {
        Some((t, bound)) => QRecursion { sequence: seq, converged: true, certified_at: Some(t), sum_bound: bound },
        None => {
            let sum = seq.iter().sum();
            QRecursion { sequence: seq, converged: false, certified_at: None, sum_bound: sum }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    BlueWinCertified,
    NotCertified,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputHashes {
    pub red: String,
    pub blue: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub params: RenormParams,
    pub red: String,
    pub blue: String,
    pub c: f64,
    #[serde(rename = "Q", serialize_with = "crate::json::opt_f64_or_label")]
    pub q_threshold: Option<f64>,
    /// Badness rate asserted by the caller; the verdict is conditional on it.
    pub q_input: f64,
    pub eta_model: String,
    pub q_sequence: Vec<f64>,
    pub converged: bool,
    #[serde(serialize_with = "crate::json::f64_or_label")]
    pub sum_bound: f64,
    pub verdict: Verdict,
    /// `log10` probability attached by the Monte Carlo estimate, if any.
    #[serde(serialize_with = "crate::json::opt_f64_or_label")]
    pub confidence: Option<f64>,
    pub version: String,
    pub input_hashes: InputHashes,
}

fn sha256_hex(text: &str) -> String {
    format!("{:x}", Sha256::digest(text.as_bytes()))
}

/// Recursion steps embedded in a certificate.
pub const CERT_STEPS: u64 = 200;

/// Blue-win certificate for `(red, blue)` given the asserted badness `q_input`.
pub fn certify(
    params: RenormParams,
    red: &DistSpec,
    blue: &DistSpec,
    q_input: f64,
    confidence: Option<f64>,
) -> Result<Certificate, RenormError> {
    let RenormParams { alpha, beta, k, n } = params;
    if !is_renormalisable(alpha, beta, k) || n == 0 {
        return Err(RenormError::NotRenormalisable { alpha, beta, k });
    }
    let (mu_r, var_r) = moments(red)?;
    let (mu_b, var_b) = moments(blue)?;
    let c = compute_c(mu_r, mu_b, var_r, var_b, beta)?;
    let q_threshold = renorm2_root(k, c, n);
    let eta = EtaModel::chebyshev(c, k, n);
    let rec = q_recursion(q_input, &eta, k, CERT_STEPS);
    let certified = q_threshold.is_some_and(|q| q_input <= q) && rec.converged;
    let (red_text, blue_text) = (red.to_string(), blue.to_string());
    Ok(Certificate {
        params,
        input_hashes: InputHashes { red: sha256_hex(&red_text), blue: sha256_hex(&blue_text) },
        red: red_text,
        blue: blue_text,
        c,
        q_threshold,
        q_input,
        eta_model: format!("chebyshev: {}", eta.describe()),
        q_sequence: rec.sequence,
        converged: rec.converged,
        sum_bound: rec.sum_bound,
        verdict: if certified { Verdict::BlueWinCertified } else { Verdict::NotCertified },
        confidence,
        version: env!("CARGO_PKG_VERSION").to_string(),
    })
}
