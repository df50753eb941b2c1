//! Dominance chains `x_{i+1} = -Lambda ln P(X >= x_i + 1)` and the base
//! certificates that start them.

use num_rational::BigRational;
use num_traits::ToPrimitive;

use super::{Status, VerificationReport, Witness};
use crate::dist::{geom_compound_uniform_tail, DistError, TailMethod, TailValue};
use crate::rigor::{down, up, Iv};

/// Iterates `x_{i+1} = -Lambda ln T(x_i + 1)` with `T` the rigorous lower
/// bound of `P(X >= .)`, rounded upwards.
///
/// Given `P(X >= x + 1) >= e^{-x/Lambda}` for `x >= x0`, each link extends it
/// to `[x_{i+1}, x_i]`. Verified once some `x_n < floor` with the sequence
/// strictly decreasing; falsified at the first non-decreasing link.
pub fn dominance_chain<F>(
    tail_of_x: F,
    big_lambda: f64,
    x0: f64,
    floor: f64,
    max_iters: u64,
) -> Result<VerificationReport, DistError>
where
    F: Fn(f64) -> Result<TailValue, DistError>,
{
    let name = "dominance_chain";
    let desc = format!("Lambda = {big_lambda}, x0 = {x0}, floor = {floor}");
    let mut chain = vec![x0];
    let mut x = x0;
    let mut slack = f64::INFINITY;
    for i in 0..max_iters {
        if x < floor {
            let mut r = VerificationReport::verified(name, format!("{desc}; reached {x} after {i} links"), slack);
            r.processed = i;
            r.chain = chain;
            return Ok(r);
        }
        let t = tail_of_x(up(x + 1.0))?;
        let next = if t.ln_lower == f64::NEG_INFINITY {
            f64::INFINITY
        } else {
            Iv::point(-t.ln_lower).scale(big_lambda).hi.max(0.0)
        };
        chain.push(next);
        if !(next < x) {
            let mut r = VerificationReport::falsified(
                name,
                desc,
                Witness::new(&["i", "x_i", "x_next"], vec![i as f64, x, next], "chain does not decrease"),
            );
            r.processed = i + 1;
            r.chain = chain;
            return Ok(r);
        }
        slack = slack.min((x - next) / big_lambda);
        x = next;
    }
    if x < floor {
        let mut r = VerificationReport::verified(name, format!("{desc}; reached {x}"), slack);
        r.processed = max_iters;
        r.chain = chain;
        return Ok(r);
    }
    let mut r =
        VerificationReport::inconclusive(name, format!("{desc}; iteration budget {max_iters} exhausted at {x}"));
    r.processed = max_iters;
    r.slack = slack;
    r.chain = chain;
    Ok(r)
}

/// `ceil(y)` for `y = 2x / (a + b)` in exact arithmetic.
fn exact_ceil_ratio(x: f64, a: f64, b: f64) -> Option<f64> {
    let num = BigRational::from_float(2.0 * x)?;
    let den = BigRational::from_float(a)? + BigRational::from_float(b)?;
    (num / den).ceil().to_integer().to_f64()
}

/// Lower bound `1/2 P(Y >= 2x/(a+b)) = 1/2 p^(ceil(2x/(a+b)) - 1)` on
/// `P(U_1 + ... + U_Y >= x)` for `Y ~ Geom(p)`, `U_i ~ U[a, b]`. The returned
/// enclosure is of the bound itself.
pub fn geom_half_bound(p: f64, a: f64, b: f64, x: f64) -> TailValue {
    let m = if x <= 0.0 { 0.0 } else { exact_ceil_ratio(x, a, b).unwrap_or(f64::INFINITY).max(1.0) - 1.0 };
    if m == 0.0 {
        return TailValue::point(0.5, TailMethod::Exact);
    }
    if p == 0.0 {
        return TailValue::zero(TailMethod::Exact);
    }
    let ln = Iv::point(p).ln().scale(m).sub(Iv::point(2.0).ln());
    TailValue::from_ln(ln.lo, ln.hi, TailMethod::ClosedForm)
}

/// A base certificate at `big_lambda`, valid for `x >= x_base`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedBase {
    pub big_lambda: f64,
    pub x_base: f64,
    pub report: VerificationReport,
}

impl LiftedBase {
    /// `P(X >= y)` enclosure `t` tightened below by `e^{-(y-1)/Lambda'}` where
    /// the certificate applies.
    pub fn tighten(&self, y: f64, t: TailValue) -> TailValue {
        let x = Iv::point(y).sub(Iv::point(1.0));
        if !(x.lo >= self.x_base) {
            return t;
        }
        let ln = x.div(Iv::point(self.big_lambda)).neg().lo;
        if ln <= t.ln_lower {
            return t;
        }
        debug_assert!(ln <= t.ln_upper, "certified lower bound above the enclosure at {y}");
        TailValue::from_ln(ln, t.ln_upper.max(ln), t.method)
    }
}

/// `X = c0 + U_1 + ... + U_Y` with `Y ~ Geom(p)` on `{1, 2, ...}` and
/// `U_i ~ U[a, b]`, `0 <= a < b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeomCompound {
    pub p: f64,
    pub a: f64,
    pub b: f64,
    pub c0: f64,
}

impl GeomCompound {
    /// Rigorous enclosure of `P(S >= s)` for the sum part `S`.
    pub fn sum_tail(&self, s: f64) -> TailValue {
        geom_compound_uniform_tail(self.p, self.a, self.b, s)
    }

    /// `P(X >= y)`; the sum argument is rounded up, which only lowers the
    /// lower bound.
    pub fn tail(&self, y: f64) -> TailValue {
        self.sum_tail(up(y - self.c0))
    }

    /// Enclosure of `p E[e^{U/Lambda}] = p Lambda (e^{b/Lambda} - e^{a/Lambda}) / (b - a)`.
    pub fn renewal_growth(&self, big_lambda: f64) -> Iv {
        let l = Iv::point(big_lambda);
        let eb = Iv::point(self.b).div(l).exp();
        let ea = Iv::point(self.a).div(l).exp();
        eb.sub(ea).mul(l).div(Iv::point(self.b).sub(Iv::point(self.a))).scale(self.p)
    }

    /// Checks `ln(1/2) + (2s/(a+b)) ln p >= -x/Lambda` at `x0`, with
    /// `s = x + 1 - c0`, and that this bound decays no faster than
    /// `e^{-x/Lambda}`. Since the ceiling only raises the half-geometric
    /// bound, `P(X >= x + 1) >= e^{-x/Lambda}` then holds on `[x0, inf)`.
    pub fn half_geometric_base(&self, big_lambda: f64, x0: f64) -> VerificationReport {
        let name = "base_half_geometric";
        let desc = format!("x >= {x0}");
        let ln_p = Iv::point(self.p).ln();
        let width = Iv::point(self.a).add(Iv::point(self.b));
        let rate = ln_p.neg().scale(2.0).div(width);
        let target = Iv::point(1.0).div(Iv::point(big_lambda));
        let s0 = Iv::point(x0).add(Iv::point(1.0).sub(Iv::point(self.c0)));
        let ln_bound = s0.scale(2.0).div(width).mul(ln_p).sub(Iv::point(2.0).ln());
        let need = Iv::point(x0).div(Iv::point(big_lambda)).neg();
        let margin = ln_bound.lo - need.hi;
        if rate.hi <= target.lo && margin >= 0.0 && s0.lo > 0.0 {
            let mut r = VerificationReport::verified(name, desc, margin.min(target.lo - rate.hi));
            r.processed = 1;
            return r;
        }
        let mut r = VerificationReport::inconclusive(
            name,
            format!("{desc}; decay rate {:.6} vs 1/Lambda {:.6}, log-margin at x0 {margin:.4}", rate.hi, target.lo),
        );
        r.processed = 1;
        r.slack = margin;
        r
    }

    /// Renewal certificate at `x0`. For `s > b`,
    /// `T(s) = P(S >= s) = p E[T(s - U)]`; if `p E[e^{U/Lambda}] > 1` and
    /// `T >= g` on `[s0 - b, s0]` with `g(s) = e^{(1 - c0 - s)/Lambda}`, then
    /// `T >= g` on `[s0 - b, inf)`, i.e. `P(X >= x + 1) >= e^{-x/Lambda}` for
    /// `x >= x0 - b`. The window is split into pieces `[u, v]` and each is
    /// checked as `T(v) >= g(u)`, bisecting failures up to `max_depth` times.
    pub fn renewal_base(&self, big_lambda: f64, x0: f64, pieces: u32, max_depth: u32) -> VerificationReport {
        let name = "base_renewal";
        let desc = format!("x >= {x0}");
        let growth = self.renewal_growth(big_lambda);
        if !(growth.lo > 1.0) {
            let mut r = VerificationReport::inconclusive(
                name,
                format!("{desc}; p E[e^(U/Lambda)] >= {} is not > 1", growth.lo),
            );
            r.slack = growth.lo - 1.0;
            return r;
        }
        let s0 = down(x0 + 1.0 - self.c0);
        let start = down(s0 - self.b);
        if !(start >= 0.0) {
            return VerificationReport::inconclusive(name, format!("{desc}; window starts below 0"));
        }
        let l = Iv::point(big_lambda);
        let ln_g = |u: f64| Iv::point(1.0).sub(Iv::point(self.c0)).sub(Iv::point(u)).div(l).hi;
        let mut stack: Vec<(f64, f64, u32)> = (0..pieces)
            .rev()
            .map(|i| {
                let u = start + (s0 - start) * i as f64 / pieces as f64;
                let v = if i + 1 == pieces { s0 } else { start + (s0 - start) * (i + 1) as f64 / pieces as f64 };
                (u, v, 0)
            })
            .collect();
        let mut checked = 0u64;
        let mut slack = f64::INFINITY;
        while let Some((u, v, depth)) = stack.pop() {
            checked += 1;
            let t = self.sum_tail(v);
            let margin = t.ln_lower - ln_g(u);
            if margin >= 0.0 {
                slack = slack.min(margin);
                continue;
            }
            let mid = 0.5 * (u + v);
            if depth >= max_depth || !(u < mid && mid < v) {
                let mut r = VerificationReport::inconclusive(
                    name,
                    format!("{desc}; window piece [{u}, {v}] fails with log-margin {margin:.4}"),
                );
                r.processed = checked;
                r.slack = margin;
                r.witness = Some(Witness::new(&["s_lo", "s_hi"], vec![u, v], "undecided window piece"));
                return r;
            }
            stack.push((mid, v, depth + 1));
            stack.push((u, mid, depth + 1));
        }
        let mut r = VerificationReport::verified(
            name,
            format!("{desc}; growth factor >= {:.6}, window [{start}, {s0}]", growth.lo),
            slack.min(growth.lo - 1.0),
        );
        r.processed = checked;
        r
    }

    /// Largest `Lambda' = Lambda (1 + 2^-j)`, `j = 3..=20`, with a base
    /// certificate at or below `x0`. It gives `P(X >= x + 1) >= e^{-x/Lambda'}`
    /// for `x` beyond the returned base point, which beats loose direct
    /// enclosures far out in the tail.
    pub fn lifted_base(&self, big_lambda: f64, x0: f64, floor: f64) -> Option<LiftedBase> {
        (3..=20).find_map(|j| {
            let lifted = up(big_lambda * (1.0 + 0.5f64.powi(j)));
            let (report, x_base) = self.certify_base(lifted, x0, floor);
            (report.status == Status::Verified).then_some(LiftedBase { big_lambda: lifted, x_base, report })
        })
    }

    /// Base certificate for the chain: the half-geometric bound at `x0`, else
    /// a renewal window at `x0`, else renewal windows at `x0 / 2^j` for
    /// `j = 1, 2, ...` while above `floor`. Returns the report and the base point.
    pub fn certify_base(&self, big_lambda: f64, x0: f64, floor: f64) -> (VerificationReport, f64) {
        let mut attempts = Vec::new();
        let half = self.half_geometric_base(big_lambda, x0);
        if half.status == Status::Verified {
            return (VerificationReport::all_of("base", format!("half-geometric at {x0}"), vec![half]), x0);
        }
        attempts.push(half);
        let mut x = x0;
        while x > floor.max(self.b) {
            let r = self.renewal_base(big_lambda, x, 64, 24);
            if r.status == Status::Verified {
                let desc = format!("renewal at {x} (requested {x0})");
                let mut rep = VerificationReport::all_of("base", desc, vec![r]);
                rep.processed += attempts.iter().map(|a| a.processed).sum::<u64>();
                rep.sub_checks.splice(0..0, attempts);
                rep.status = Status::Verified;
                return (rep, x);
            }
            attempts.push(r);
            x /= 2.0;
        }
        let mut rep = VerificationReport::all_of("base", format!("no base certificate at or below {x0}"), attempts);
        rep.status = Status::Inconclusive;
        rep.witness = None;
        (rep, x0)
    }
}
