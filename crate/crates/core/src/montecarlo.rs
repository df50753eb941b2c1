//! Deterministic Monte Carlo over random windows.
//!
//! A window is `R_1, B_1, ..., R_n, B_n`. Trial `i` draws from a ChaCha8
//! stream keyed by `(master_seed, i)`, and segment `j` of the window starts at
//! word offset `j << 24` of that stream, so every draw is a pure function of
//! `(master_seed, i, j)` whatever the thread layout.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dist::{sample, DistSpec};
use crate::exec::Exec;
use crate::interval::{ColoredInterval, Colour, IntervalError, StackCloser};

const SEGMENT_STRIDE_BITS: u32 = 24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialReport {
    pub trial_index: u64,
    pub good: bool,
    pub window_length: f64,
    pub closure_segment_count: usize,
    /// A tie or non-positive draw made the closure ill-defined.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConfidenceBound {
    pub q_star: f64,
    /// `log10 P(Bin(trials - degenerate, q_star) <= bad)`.
    #[serde(serialize_with = "crate::json::f64_or_label")]
    pub log10_prob: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QEstimate {
    pub trials: u64,
    pub good: u64,
    pub bad: u64,
    pub degenerate: u64,
    /// `bad / (trials - degenerate)`.
    #[serde(serialize_with = "crate::json::f64_or_label")]
    pub q_hat: f64,
    pub confidence_bound: ConfidenceBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TypicalityEstimate {
    pub trials: u64,
    pub atypical: u64,
    pub eta_hat: f64,
    /// Two-sided 95% Clopper-Pearson interval for the atypical rate.
    pub ci: (f64, f64),
}

/// One window experiment: distributions, size, goodness parameter and target colour.
#[derive(Debug, Clone, Copy)]
pub struct Experiment<'a> {
    pub red: &'a DistSpec,
    pub blue: &'a DistSpec,
    pub n: u64,
    pub alpha: f64,
    pub target: Colour,
    pub master_seed: u64,
    pub exec: Exec,
}

impl<'a> Experiment<'a> {
    /// Blue target, parallel execution.
    pub fn new(red: &'a DistSpec, blue: &'a DistSpec, n: u64, alpha: f64, master_seed: u64) -> Self {
        Experiment { red, blue, n, alpha, target: Colour::Blue, master_seed, exec: Exec::Parallel }
    }

    pub fn target(mut self, target: Colour) -> Self {
        self.target = target;
        self
    }

    pub fn exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    fn draws(&self, trial_index: u64) -> impl Iterator<Item = f64> + '_ {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(trial_index);
        (0..2 * self.n).map(move |j| {
            rng.set_word_pos((j as u128) << SEGMENT_STRIDE_BITS);
            let spec = if j % 2 == 0 { self.red } else { self.blue };
            sample(spec, &mut rng)
        })
    }

    /// Window `trial_index` itself, red first.
    pub fn window(&self, trial_index: u64) -> Result<ColoredInterval<f64>, IntervalError> {
        ColoredInterval::new(Colour::Red, self.draws(trial_index).collect())
    }

    /// Closure and goodness of window `trial_index`.
    pub fn run(&self, trial_index: u64) -> TrialReport {
        let mut closer = StackCloser::with_capacity(Colour::Red, 64);
        let mut total = 0.0;
        let mut invalid = false;
        for len in self.draws(trial_index) {
            invalid |= !(len > 0.0 && len.is_finite());
            total += len;
            closer.push(len);
        }
        let closed = if invalid { None } else { closer.finish().ok() };
        match closed {
            Some(c) => {
                let g = c.central_segment(self.alpha, self.target);
                TrialReport {
                    trial_index,
                    good: g.good,
                    window_length: g.total_length,
                    closure_segment_count: c.len(),
                    degenerate: false,
                }
            }
            None => TrialReport {
                trial_index,
                good: false,
                window_length: total,
                closure_segment_count: 0,
                degenerate: true,
            },
        }
    }

    /// Reports for trials `0..trials`, in index order.
    pub fn reports(&self, trials: u64) -> Vec<TrialReport> {
        self.exec.map_range(trials, |i| self.run(i))
    }

    pub fn estimate(&self, trials: u64, q_star: f64) -> QEstimate {
        aggregate(&self.reports(trials), q_star)
    }

    /// Total length of window `trial_index`, without the closure.
    pub fn window_length(&self, trial_index: u64) -> f64 {
        self.draws(trial_index).sum()
    }

    /// Rate at which the window length falls outside `(l, beta * l)`.
    pub fn typicality(&self, l: f64, beta: f64, trials: u64) -> TypicalityEstimate {
        let flags = self.exec.map_range(trials, |i| {
            let w = self.window_length(i);
            !(l < w && w < beta * l)
        });
        let atypical = flags.iter().filter(|&&f| f).count() as u64;
        TypicalityEstimate {
            trials,
            atypical,
            eta_hat: atypical as f64 / trials as f64,
            ci: clopper_pearson(trials, atypical, 0.95),
        }
    }
}

/// Summarises trial reports; degenerate trials are counted but excluded from
/// the badness rate.
pub fn aggregate(reports: &[TrialReport], q_star: f64) -> QEstimate {
    let trials = reports.len() as u64;
    let degenerate = reports.iter().filter(|r| r.degenerate).count() as u64;
    let good = reports.iter().filter(|r| !r.degenerate && r.good).count() as u64;
    let valid = trials - degenerate;
    let bad = valid - good;
    let q_hat = if valid == 0 { f64::NAN } else { bad as f64 / valid as f64 };
    QEstimate {
        trials,
        good,
        bad,
        degenerate,
        q_hat,
        confidence_bound: ConfidenceBound { q_star, log10_prob: binomial_tail(valid, bad, q_star) },
    }
}

/// Blue-target trial `trial_index`.
pub fn run_trial(
    red: &DistSpec,
    blue: &DistSpec,
    n: u64,
    alpha: f64,
    master_seed: u64,
    trial_index: u64,
) -> TrialReport {
    Experiment::new(red, blue, n, alpha, master_seed).run(trial_index)
}

/// Blue-target badness estimate over trials `0..trials`.
pub fn estimate_q(
    red: &DistSpec,
    blue: &DistSpec,
    n: u64,
    alpha: f64,
    trials: u64,
    master_seed: u64,
    q_star: f64,
) -> QEstimate {
    Experiment::new(red, blue, n, alpha, master_seed).estimate(trials, q_star)
}

/// Estimate of `P(|C| not in (l, beta l))` over trials `0..trials`.
pub fn typicality_rate(
    red: &DistSpec,
    blue: &DistSpec,
    n: u64,
    l: f64,
    beta: f64,
    trials: u64,
    master_seed: u64,
) -> TypicalityEstimate {
    Experiment::new(red, blue, n, 0.0, master_seed).typicality(l, beta, trials)
}

fn ln_choose(n: u64, k: u64) -> f64 {
    libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0)
}

/// `ln sum_{j in range} P(Bin(n, q) = j)`, compensated.
fn ln_mass(n: u64, q: f64, range: std::ops::RangeInclusive<u64>) -> f64 {
    let (lq, lp) = (q.ln(), (-q).ln_1p());
    let terms: Vec<f64> = range.map(|j| ln_choose(n, j) + j as f64 * lq + (n - j) as f64 * lp).collect();
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for t in &terms {
        let (s2, e) = crate::rigor::two_sum(s, (t - m).exp());
        s = s2;
        c += e;
    }
    m + (s + c).ln()
}

/// `log10 P(Bin(n, q) <= k)`.
///
/// Sums the lower tail directly when `k` is below the mean and otherwise takes
/// `log1p` of the negated upper tail, so the result keeps full relative
/// accuracy near 0 as well.
pub fn binomial_tail(n: u64, k: u64, q: f64) -> f64 {
    if k >= n || q <= 0.0 {
        return 0.0;
    }
    if q >= 1.0 {
        return f64::NEG_INFINITY;
    }
    let ln10 = std::f64::consts::LN_10;
    if (k as f64) < n as f64 * q {
        ln_mass(n, q, 0..=k) / ln10
    } else {
        let upper = ln_mass(n, q, k + 1..=n).exp();
        (-upper).ln_1p() / ln10
    }
}

/// Two-sided Clopper-Pearson interval at level `conf` for `k` successes in `n`.
pub fn clopper_pearson(n: u64, k: u64, conf: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let tail = (1.0 - conf) / 2.0;
    // P(Bin(n, p) <= m) is decreasing in p; find where it crosses `target`.
    let solve = |m: u64, target: f64| {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if binomial_tail(n, m, mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let lower = if k == 0 { 0.0 } else { solve(k - 1, (1.0 - tail).log10()) };
    let upper = if k == n { 1.0 } else { solve(k, tail.log10()) };
    (lower, upper)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DominancePoint {
    pub x: f64,
    pub tail_x: f64,
    pub tail_y: f64,
    /// `tail_y - tail_x`; positive values count against `X >= Y`.
    pub excess: f64,
    pub std_err: f64,
    /// `excess / std_err`, or 0 when the excess is not positive.
    pub sigmas: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceComparison {
    pub x: String,
    pub y: String,
    pub samples: u64,
    pub points: Vec<DominancePoint>,
    pub max_sigmas: f64,
    /// Sigma level above which an excess counts as a violation.
    pub threshold_sigmas: f64,
    pub consistent: bool,
}

const DOMINANCE_BLOCK: u64 = 1 << 16;

/// Empirical test of `X >= Y` in the tail order: compares `P(X >= x)` and
/// `P(Y >= x)` from `samples` independent draws of each at every grid point.
/// Block `b` of `X` uses stream `2b`, block `b` of `Y` stream `2b + 1`.
pub fn compare_dominance(
    x: &DistSpec,
    y: &DistSpec,
    samples: u64,
    grid: &[f64],
    seed: u64,
    threshold_sigmas: f64,
    exec: Exec,
) -> DominanceComparison {
    let blocks = samples.div_ceil(DOMINANCE_BLOCK);
    let counts = exec.map_range(blocks, |b| {
        let m = DOMINANCE_BLOCK.min(samples - b * DOMINANCE_BLOCK);
        let mut c = vec![(0u64, 0u64); grid.len()];
        for (stream, spec) in [(2 * b, x), (2 * b + 1, y)] {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream);
            for _ in 0..m {
                let v = sample(spec, &mut rng);
                for (ci, &g) in c.iter_mut().zip(grid) {
                    let hit = (v >= g) as u64;
                    if stream % 2 == 0 {
                        ci.0 += hit;
                    } else {
                        ci.1 += hit;
                    }
                }
            }
        }
        c
    });
    let n = samples as f64;
    let points: Vec<DominancePoint> = grid
        .iter()
        .enumerate()
        .map(|(i, &g)| {
            let hx: u64 = counts.iter().map(|c| c[i].0).sum();
            let hy: u64 = counts.iter().map(|c| c[i].1).sum();
            let (tx, ty) = (hx as f64 / n, hy as f64 / n);
            let excess = ty - tx;
            let std_err = ((tx * (1.0 - tx) + ty * (1.0 - ty)) / n).sqrt();
            let sigmas = if excess <= 0.0 {
                0.0
            } else if std_err > 0.0 {
                excess / std_err
            } else {
                f64::INFINITY
            };
            DominancePoint { x: g, tail_x: tx, tail_y: ty, excess, std_err, sigmas }
        })
        .collect();
    let max_sigmas = points.iter().map(|p| p.sigmas).fold(0.0, f64::max);
    DominanceComparison {
        x: x.to_string(),
        y: y.to_string(),
        samples,
        points,
        max_sigmas,
        threshold_sigmas,
        consistent: max_sigmas < threshold_sigmas,
    }
}

/// Writes reports as CSV with a header row.
pub fn write_trials_csv<W: Write>(reports: &[TrialReport], w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["trial_index", "good", "window_length", "segments", "degenerate"])?;
    for r in reports {
        out.write_record([
            r.trial_index.to_string(),
            r.good.to_string(),
            r.window_length.to_string(),
            r.closure_segment_count.to_string(),
            r.degenerate.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
