//! Rectangle subdivision for
//! `P(X1 + X2 >= x/2) / P(X1 >= x) - 1 + delta <= 2 (x - 1) Lambda / ((a + 1)(a + x))`
//! with `X_i ~ G(a)` i.i.d., on `a in [0, 1]`, `x >= 4`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Leaf, Status, VerificationReport, VerifyError, Witness};
use crate::exec::Exec;
use crate::rigor::Iv;

fn one() -> Iv {
    Iv::point(1.0)
}

/// Enclosure of `P(X >= x) = (a + 1)^2 / (a + x)^2` for `X ~ G(a)`.
pub fn pareto_tail_iv(a: f64, x: f64) -> Iv {
    let (ai, xi) = (Iv::point(a), Iv::point(x));
    ai.add(one()).div(ai.add(xi)).sqr()
}

/// Enclosure of `P(X1 + X2 >= x/2)` from its closed form, for `x >= 4`.
pub fn conv_tail_iv(a: f64, x: f64) -> Iv {
    let (ai, xi) = (Iv::point(a), Iv::point(x));
    let aa = ai.add(one());
    let f = ai.scale(4.0).add(xi);
    let g = ai.scale(2.0).add(xi).sub(Iv::point(2.0));
    let h = aa.scale(2.0);
    let num = aa.sqr().scale(8.0).mul(f.sqr().add(aa.scale(6.0).mul(xi.sub(Iv::point(4.0)))));
    let t1 = num.div(f.powi(3).mul(g));
    let ratio = g.div(h);
    // The log is of a quantity >= 1; clip the enclosure's rounding below 0.
    let ln = ratio.ln();
    let ln = Iv::new(ln.lo.max(0.0), ln.hi.max(0.0));
    let t2 = aa.powi(4).scale(192.0).div(f.powi(4)).mul(ln);
    let s = t1.add(t2);
    Iv::new(s.lo.max(0.0), s.hi.min(1.0).max(s.lo.max(0.0)))
}

/// `P(X1 + X2 >= x/2)` for `X_i ~ G(a)`, `a in [0, 1]`, `x >= 4`.
pub fn conv_tail_closed_form(a: f64, x: f64) -> Result<f64, VerifyError> {
    if !(x >= 4.0 && x.is_finite()) {
        return Err(VerifyError::Domain(format!("x = {x} must be at least 4")));
    }
    if !(0.0..=1.0).contains(&a) {
        return Err(VerifyError::Domain(format!("a = {a} must lie in [0, 1]")));
    }
    if x == 4.0 {
        // X1 + X2 >= 2 surely.
        return Ok(1.0);
    }
    let aa = a + 1.0;
    let f = 4.0 * a + x;
    let g = 2.0 * a + x - 2.0;
    let t1 = 8.0 * aa * aa * (f * f + 6.0 * aa * (x - 4.0)) / (f * f * f * g);
    let t2 = 192.0 * aa.powi(4) / f.powi(4) * (g / (2.0 * a + 2.0)).ln();
    Ok((t1 + t2).clamp(0.0, 1.0))
}

/// Parameters of a subdivision run.
#[derive(Debug, Clone, Copy)]
pub struct E1Config {
    pub big_lambda: f64,
    pub delta: f64,
    pub a_range: (f64, f64),
    pub x_range: (f64, f64),
    pub max_depth: u32,
    pub min_width: f64,
    /// Random interior points re-checked per certified leaf.
    pub audit_points: u32,
    pub record_leaves: bool,
    pub exec: Exec,
}

impl E1Config {
    pub fn new(big_lambda: f64, delta: f64) -> Self {
        E1Config {
            big_lambda,
            delta,
            a_range: (0.0, 1.0),
            x_range: (4.0, 100.0),
            max_depth: 60,
            min_width: 1e-9,
            audit_points: 10,
            record_leaves: false,
            exec: Exec::Parallel,
        }
    }

    /// Enclosures of both sides at a point.
    fn sides(&self, a: f64, x: f64) -> (Iv, Iv) {
        let lhs = conv_tail_iv(a, x).div(pareto_tail_iv(a, x)).sub(one()).add(Iv::point(self.delta));
        (lhs, self.rhs(a, x))
    }

    fn rhs(&self, a: f64, x: f64) -> Iv {
        let (ai, xi) = (Iv::point(a), Iv::point(x));
        xi.sub(one()).scale(2.0).scale(self.big_lambda).div(ai.add(one()).mul(ai.add(xi)))
    }

    /// Upper bound of the left side and lower bound of the right side over a
    /// rectangle, from monotonicity in `a` and `x`.
    fn rect_bounds(&self, r: &Rect) -> (f64, f64) {
        let lhs = conv_tail_iv(r.a2, r.x1).div(pareto_tail_iv(r.a1, r.x2)).sub(one()).add(Iv::point(self.delta));
        (lhs.hi, self.rhs(r.a2, r.x1).lo)
    }

    /// Rigorous pointwise violation at `(a, x)`.
    fn violated(&self, a: f64, x: f64) -> Option<Witness> {
        let (lhs, rhs) = self.sides(a, x);
        (lhs.lo > rhs.hi).then(|| {
            Witness::new(&["a", "x"], vec![a, x], format!("left side >= {:.12}, right side <= {:.12}", lhs.lo, rhs.hi))
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct Rect {
    a1: f64,
    a2: f64,
    x1: f64,
    x2: f64,
    depth: u32,
}

enum Outcome {
    Certified(Leaf),
    Split(Rect, Rect),
    Falsified(Witness),
    Stuck(Rect),
}

fn process(cfg: &E1Config, r: &Rect) -> Outcome {
    let (lhs_hi, rhs_lo) = cfg.rect_bounds(r);
    let margin = rhs_lo - lhs_hi;
    if margin >= 0.0 {
        return Outcome::Certified(Leaf { a1: r.a1, a2: r.a2, x1: r.x1, x2: r.x2, margin });
    }
    let centre = (0.5 * (r.a1 + r.a2), 0.5 * (r.x1 + r.x2));
    for (a, x) in [(r.a2, r.x1), centre] {
        if let Some(w) = cfg.violated(a, x) {
            return Outcome::Falsified(w);
        }
    }
    let (wa, wx) = (r.a2 - r.a1, r.x2 - r.x1);
    let span_a = (cfg.a_range.1 - cfg.a_range.0).max(f64::MIN_POSITIVE);
    let span_x = (cfg.x_range.1 - cfg.x_range.0).max(f64::MIN_POSITIVE);
    let can_a = wa >= cfg.min_width && centre.0 > r.a1 && centre.0 < r.a2;
    let can_x = wx >= cfg.min_width && centre.1 > r.x1 && centre.1 < r.x2;
    if r.depth >= cfg.max_depth || !(can_a || can_x) {
        return Outcome::Stuck(*r);
    }
    let split_a = can_a && (!can_x || wa / span_a >= wx / span_x);
    let d = r.depth + 1;
    if split_a {
        Outcome::Split(Rect { a2: centre.0, depth: d, ..*r }, Rect { a1: centre.0, depth: d, ..*r })
    } else {
        Outcome::Split(Rect { x2: centre.1, depth: d, ..*r }, Rect { x1: centre.1, depth: d, ..*r })
    }
}

/// Re-checks random interior points of a certified leaf.
fn audit(cfg: &E1Config, leaf: &Leaf) -> Option<Witness> {
    let seed = leaf.a1.to_bits() ^ leaf.x1.to_bits().rotate_left(29) ^ leaf.a2.to_bits().rotate_left(13);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..cfg.audit_points {
        let a = leaf.a1 + (leaf.a2 - leaf.a1) * rng.random::<f64>();
        let x = leaf.x1 + (leaf.x2 - leaf.x1) * rng.random::<f64>();
        if let Some(mut w) = cfg.violated(a, x) {
            w.note = format!("spot audit of a certified leaf: {}", w.note);
            return Some(w);
        }
    }
    None
}

/// Subdivision over `a_range x x_range`, processed breadth first; each level
/// is mapped in parallel and merged in order, so the rectangle tree does not
/// depend on the thread count.
pub fn verify_e1_with(cfg: &E1Config) -> VerificationReport {
    let name = "e1_subdivision";
    let desc = format!(
        "Lambda = {}, delta = {}, a in [{}, {}], x in [{}, {}]",
        cfg.big_lambda, cfg.delta, cfg.a_range.0, cfg.a_range.1, cfg.x_range.0, cfg.x_range.1
    );
    let mut frontier =
        vec![Rect { a1: cfg.a_range.0, a2: cfg.a_range.1, x1: cfg.x_range.0, x2: cfg.x_range.1, depth: 0 }];
    let mut processed = 0u64;
    let mut leaves = Vec::new();
    let mut leaf_count = 0u64;
    let mut slack = f64::INFINITY;
    let mut stuck: Option<Rect> = None;
    while !frontier.is_empty() {
        processed += frontier.len() as u64;
        let outcomes = cfg.exec.map_slice(&frontier, |r| {
            let o = process(cfg, r);
            let audit_witness = match &o {
                Outcome::Certified(leaf) => audit(cfg, leaf),
                _ => None,
            };
            (o, audit_witness)
        });
        let mut next = Vec::new();
        let mut falsified = None;
        for (o, audit_witness) in outcomes {
            if falsified.is_none() {
                falsified = audit_witness;
            }
            match o {
                Outcome::Certified(leaf) => {
                    leaf_count += 1;
                    slack = slack.min(leaf.margin);
                    if cfg.record_leaves {
                        leaves.push(leaf);
                    }
                }
                Outcome::Split(l, r) => {
                    next.push(l);
                    next.push(r);
                }
                Outcome::Falsified(w) => {
                    if falsified.is_none() {
                        falsified = Some(w);
                    }
                }
                Outcome::Stuck(r) => {
                    stuck.get_or_insert(r);
                }
            }
        }
        if let Some(w) = falsified {
            let mut rep = VerificationReport::falsified(name, desc, w).with_processed(processed);
            rep.leaves = leaves;
            return rep;
        }
        frontier = next;
    }
    let mut rep = match stuck {
        Some(r) => {
            let mut rep = VerificationReport::inconclusive(
                name,
                format!(
                    "{desc}; undecided rectangle [{}, {}] x [{}, {}] at the depth or width limit",
                    r.a1, r.a2, r.x1, r.x2
                ),
            );
            rep.witness = Some(Witness::new(&["a", "x"], vec![r.a2, r.x1], "undecided rectangle corner"));
            rep
        }
        None => VerificationReport::verified(name, format!("{desc}; {leaf_count} leaves"), slack),
    };
    rep.processed = processed;
    rep.slack = slack;
    rep.leaves = leaves;
    rep
}

/// Subdivision with default limits over the given ranges.
pub fn verify_e1(big_lambda: f64, delta: f64, a_range: (f64, f64), x_range: (f64, f64)) -> VerificationReport {
    let mut cfg = E1Config::new(big_lambda, delta);
    cfg.a_range = a_range;
    cfg.x_range = x_range;
    verify_e1_with(&cfg)
}

/// Large-`x` case: for `x >= x0 >= 100` and `a in [0, 1]` the ratio is at most
/// `8 + 176/(x - 2) + 192/x^3 <= 10` (decreasing in `x`) while the right side
/// is at least `(x - 1) Lambda / (x + 1)` (increasing in `x`). Both bounds are
/// checked at `x0`. If the right-side bound fails, the inequality itself is
/// evaluated at `(a, x0)` for `a in {0, 1}` to look for a violation.
pub fn verify_e1_largex(big_lambda: f64, x0: f64) -> Result<VerificationReport, VerifyError> {
    verify_e1_largex_delta(big_lambda, x0, 1e-10)
}

pub fn verify_e1_largex_delta(big_lambda: f64, x0: f64, delta: f64) -> Result<VerificationReport, VerifyError> {
    if !(x0 >= 100.0 && x0.is_finite()) {
        return Err(VerifyError::Domain(format!("x0 = {x0} must be at least 100")));
    }
    if !(0.0..=1.0).contains(&delta) {
        return Err(VerifyError::Domain(format!("delta = {delta} must lie in [0, 1]")));
    }
    let name = "e1_large_x";
    let desc = format!("Lambda = {big_lambda}, x >= {x0}");
    let xi = Iv::point(x0);
    let ratio = Iv::point(8.0).add(Iv::point(176.0).div(xi.sub(Iv::point(2.0)))).add(Iv::point(192.0).div(xi.powi(3)));
    let rhs = xi.sub(one()).scale(big_lambda).div(xi.add(one()));
    let ratio_ok = ratio.hi <= 10.0;
    let rhs_ok = rhs.lo >= 10.0;
    if ratio_ok && rhs_ok {
        let slack = (10.0 - ratio.hi).min(rhs.lo - 10.0);
        return Ok(VerificationReport::verified(
            name,
            format!("{desc}; ratio bound {:.6} <= 10 <= {:.6}", ratio.hi, rhs.lo),
            slack,
        )
        .with_processed(2));
    }
    let cfg = E1Config { delta, ..E1Config::new(big_lambda, delta) };
    for a in [1.0, 0.0] {
        if let Some(w) = cfg.violated(a, x0) {
            return Ok(VerificationReport::falsified(name, desc, w).with_processed(2));
        }
    }
    let mut r = VerificationReport::inconclusive(
        name,
        format!(
            "{desc}; closed-form bounds fail (ratio <= {:.6}, right side >= {:.6}) without a pointwise violation",
            ratio.hi, rhs.lo
        ),
    );
    r.processed = 2;
    r.status = Status::Inconclusive;
    Ok(r)
}
