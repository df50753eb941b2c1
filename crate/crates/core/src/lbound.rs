//! Evolution of the `(a_t, lambda_t)` bounds in the ℓ-bounding argument and an
//! empirical check of the red-content domination it relies on.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::exec::Exec;
use crate::verify::{Status, VerificationReport, Witness};

/// Default threshold excess bound `eps0`.
pub const EPS0: f64 = 0.01;

/// Red bounds are Pareto with parameter `a`, blue bounds `1 + eps + Exp(lambda)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LBoundState {
    pub a: f64,
    pub lambda: f64,
    pub eps: f64,
    #[serde(rename = "Lambda")]
    pub big_lambda: f64,
    pub t: u64,
}

impl LBoundState {
    pub fn new(a: f64, lambda: f64, eps: f64, big_lambda: f64) -> Self {
        LBoundState { a, lambda, eps, big_lambda, t: 0 }
    }

    /// `a <= 1 - delta`, `lambda >= Lambda / (1 - delta)` and
    /// `eps < min(delta / 2, eps0, 1/10)`.
    pub fn is_admissible(&self, delta: f64, eps0: f64) -> bool {
        self.a <= 1.0 - delta
            && self.lambda >= self.big_lambda / (1.0 - delta)
            && self.eps > 0.0
            && self.eps < (delta / 2.0).min(eps0).min(0.1)
    }
}

/// One step: returns the next state with the blue recolouring probability
/// `zeta = 1 - exp(-eps/lambda)` and the red-ended recolouring probability
/// `xi = eps (2a + 2 Lambda zeta + 2 + eps) / (a + Lambda zeta + 1 + eps)^2`.
pub fn evolve_step(s: &LBoundState) -> (LBoundState, f64, f64) {
    let LBoundState { a, lambda, eps, big_lambda, t } = *s;
    let zeta = -(-eps / lambda).exp_m1();
    let lz = big_lambda * zeta;
    let d = a + lz + 1.0 + eps;
    let xi = eps * (2.0 * a + 2.0 * lz + 2.0 + eps) / (d * d);
    let next = LBoundState {
        a: (a + lz) / (1.0 + eps),
        lambda: lambda / ((1.0 - xi) * (1.0 + eps)),
        eps,
        big_lambda,
        t: t + 1,
    };
    (next, zeta, xi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub t: u64,
    pub a: f64,
    pub lambda: f64,
    pub zeta: f64,
    pub xi: f64,
}

/// The first `steps` steps from `s0`; `zeta` and `xi` are those of the step
/// leaving row `t`.
pub fn trajectory(s0: &LBoundState, steps: u64) -> Vec<TrajectoryRow> {
    let mut s = *s0;
    let mut rows = Vec::with_capacity(steps as usize);
    for _ in 0..steps {
        let (next, zeta, xi) = evolve_step(&s);
        rows.push(TrajectoryRow { t: s.t, a: s.a, lambda: s.lambda, zeta, xi });
        s = next;
    }
    rows
}

pub fn write_trajectory_csv<W: Write>(rows: &[TrajectoryRow], w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "a", "lambda", "zeta", "xi"])?;
    for r in rows {
        out.write_record([
            r.t.to_string(),
            r.a.to_string(),
            r.lambda.to_string(),
            r.zeta.to_string(),
            r.xi.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// `(eps / lambda_next) (1 + eps^2/2) / (eps^2/2)`: bound on
/// `sum_{t > T} eps / lambda_t` when `lambda` grows by `1 + eps^2/2` per step.
pub fn survival_tail_bound(eps: f64, lambda_next: f64) -> f64 {
    let g = eps * eps / 2.0;
    eps / lambda_next * (1.0 + g) / g
}

/// [`certify_trajectory_with`] at the default `eps0`.
pub fn certify_trajectory(s0: &LBoundState, delta: f64, max_steps: u64) -> VerificationReport {
    certify_trajectory_with(s0, delta, EPS0, max_steps)
}

/// Follows the trajectory until it reaches an admissible state `s_T` whose
/// successor satisfies [`survival_tail_bound`] `< 1`. From an admissible state
/// every later state stays admissible with `lambda` growing by at least
/// `1 + eps^2/2`; each simulated step re-checks both facts.
pub fn certify_trajectory_with(s0: &LBoundState, delta: f64, eps0: f64, max_steps: u64) -> VerificationReport {
    let name = "lbound_trajectory";
    let desc = format!(
        "a0 = {}, lambda0 = {}, eps = {}, Lambda = {}, delta = {delta}",
        s0.a, s0.lambda, s0.eps, s0.big_lambda
    );
    let growth = 1.0 + s0.eps * s0.eps / 2.0;
    let mut s = *s0;
    let mut admissible_seen = false;
    let mut min_slack = f64::INFINITY;
    for step in 0..=max_steps {
        if s.a > 1.0 - delta {
            return VerificationReport::falsified(
                name,
                desc,
                Witness::new(&["t", "a"], vec![s.t as f64, s.a], format!("a_t exceeds 1 - delta = {}", 1.0 - delta)),
            )
            .with_processed(step);
        }
        if step == max_steps {
            break;
        }
        let admissible = s.is_admissible(delta, eps0);
        let (next, _, _) = evolve_step(&s);
        let ratio = next.lambda / s.lambda;
        if admissible {
            admissible_seen = true;
            min_slack = min_slack.min(ratio - growth);
            if ratio < growth || next.a > 1.0 - delta {
                return VerificationReport::falsified(
                    name,
                    desc,
                    Witness::new(
                        &["t", "a", "lambda"],
                        vec![s.t as f64, s.a, s.lambda],
                        "one-step invariant fails at an admissible state",
                    ),
                )
                .with_processed(step);
            }
            let tail = survival_tail_bound(s.eps, next.lambda);
            if tail < 1.0 {
                let mut r = VerificationReport::verified(
                    name,
                    format!("{desc}; admissible with tail sum bound {tail:.6} after T = {}", s.t),
                    min_slack.min(1.0 - tail),
                );
                r.processed = step + 1;
                return r;
            }
        }
        s = next;
    }
    let why = if admissible_seen { "tail sum still >= 1" } else { "no admissible state reached" };
    let mut r = VerificationReport::inconclusive(name, format!("{desc}; step budget {max_steps} exhausted, {why}"));
    r.processed = max_steps;
    r.status = Status::Inconclusive;
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DominationPoint {
    pub x: f64,
    pub empirical: f64,
    pub analytic: f64,
    /// `empirical - analytic`.
    pub excess: f64,
    pub std_err: f64,
    /// `excess / std_err`, or 0 when the excess is not positive.
    pub sigmas: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominationReport {
    pub a: f64,
    pub eps: f64,
    #[serde(rename = "Lambda")]
    pub big_lambda: f64,
    pub samples: u64,
    pub points: Vec<DominationPoint>,
    pub max_excess: f64,
    pub max_sigmas: f64,
}

const BLOCK: u64 = 1 << 16;

/// `2^ceil(log2 Y) * sum_{i <= Y} X_i` with `Y ~ Geom(eps)` and `X_i ~ G(a)`.
fn sample_merged<R: Rng>(a: f64, eps: f64, rng: &mut R) -> f64 {
    let mut y = 1u64;
    while rng.random::<f64>() < eps {
        y += 1;
    }
    let s: f64 = (0..y).map(|_| (a + 1.0) / (1.0 - rng.random::<f64>()).sqrt() - a).sum();
    y.next_power_of_two() as f64 * s
}

/// Compares the empirical tail of the merged red content against the Pareto
/// tail `(a + Lambda eps + 1)^2 / (a + Lambda eps + x)^2` at each grid point.
/// Samples are drawn in blocks of `2^16`, block `b` from stream `b`.
pub fn reddom_empirical(
    a: f64,
    eps: f64,
    big_lambda: f64,
    samples: u64,
    grid: &[f64],
    seed: u64,
    exec: Exec,
) -> DominationReport {
    let blocks = samples.div_ceil(BLOCK);
    let counts = exec.map_range(blocks, |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(b);
        let m = BLOCK.min(samples - b * BLOCK);
        let mut c = vec![0u64; grid.len()];
        for _ in 0..m {
            let z = sample_merged(a, eps, &mut rng);
            for (ci, &x) in c.iter_mut().zip(grid) {
                *ci += (z >= x) as u64;
            }
        }
        c
    });
    let a2 = a + big_lambda * eps;
    let n = samples as f64;
    let points: Vec<DominationPoint> = grid
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let hits: u64 = counts.iter().map(|c| c[i]).sum();
            let empirical = hits as f64 / n;
            let analytic = if x <= 1.0 { 1.0 } else { ((a2 + 1.0) / (a2 + x)).powi(2) };
            let excess = empirical - analytic;
            let std_err = (analytic * (1.0 - analytic) / n).sqrt();
            let sigmas = if excess <= 0.0 {
                0.0
            } else if std_err > 0.0 {
                excess / std_err
            } else {
                f64::INFINITY
            };
            DominationPoint { x, empirical, analytic, excess, std_err, sigmas }
        })
        .collect();
    let max_excess = points.iter().map(|p| p.excess).fold(f64::NEG_INFINITY, f64::max);
    let max_sigmas = points.iter().map(|p| p.sigmas).fold(0.0, f64::max);
    DominationReport { a, eps, big_lambda, samples, points, max_excess, max_sigmas }
}
