//! Case analysis for red lengths `1` against blue lengths `U[0, 1 + gamma]`,
//! after the first two rounds of recolouring.
//!
//! Red side (`p = 1`): `G(a)` dominates the blue law `B(gamma)` and the red law
//! `R(gamma)` dominates `F(Lambda)`. Blue side (`p = 1 - c/gamma`): `G(a)`
//! dominates `R_p(gamma)` and `B_p(gamma)` dominates `F(Lambda)`.

use super::chain::{dominance_chain, GeomCompound};
use super::{Status, VerificationReport, VerifyError, Witness};
use crate::dist::{tail, toy_blue, toy_red};
use crate::interval::Colour;
use crate::rigor::Iv;

/// Default `Lambda`.
pub const TOY_LAMBDA: f64 = 13.06207;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyConfig {
    pub gamma: f64,
    pub side: Colour,
    /// `q gamma` on the blue side; ignored on the red side.
    pub c: f64,
    pub a: f64,
    pub big_lambda: f64,
    pub x0: f64,
    pub floor: f64,
    pub max_iters: u64,
    /// Bands checked one by one before the closed-form tail argument.
    pub band_terms: u64,
}

impl ToyConfig {
    pub fn new(gamma: f64, side: Colour, c: f64, a: f64) -> Self {
        let (x0, floor) = match side {
            Colour::Red => (2000.0, 1.0),
            Colour::Blue => (1e6, 2.0),
        };
        ToyConfig { gamma, side, c, a, big_lambda: TOY_LAMBDA, x0, floor, max_iters: 1_000_000, band_terms: 64 }
    }
}

fn iv(x: f64) -> Iv {
    Iv::point(x)
}

/// `lhs <= rhs` over enclosures: verified when `lhs.hi <= rhs.lo`, falsified
/// when `lhs.lo > rhs.hi`.
fn le_check(name: &str, desc: String, lhs: Iv, rhs: Iv) -> VerificationReport {
    let r = if lhs.hi <= rhs.lo {
        VerificationReport::verified(name, desc, rhs.lo - lhs.hi)
    } else if lhs.lo > rhs.hi {
        let w = Witness::new(&["lhs", "rhs"], vec![lhs.lo, rhs.hi], "inequality fails");
        VerificationReport::falsified(name, desc, w)
    } else {
        VerificationReport::inconclusive(name, format!("{desc}; enclosures overlap"))
    };
    r.with_processed(1)
}

/// Checks `upper_tail(k) <= lower_pareto(k)` for `k = 1..=terms`, then for all
/// larger `k` through `h(k) <= bound`, where `h(terms + 1) <= bound` and
/// `h(k + 1) <= h(k)` for `k > terms` follow from `step(terms + 1) <= 1`.
fn band_check(
    name: &str,
    terms: u64,
    pair: impl Fn(u64) -> (Iv, Iv),
    tail_h: impl Fn(u64) -> Iv,
    tail_bound: Iv,
    step: impl Fn(u64) -> Iv,
) -> VerificationReport {
    let mut slack = f64::INFINITY;
    for k in 1..=terms {
        let (x_tail, y_tail) = pair(k);
        if x_tail.lo > y_tail.hi {
            let w = Witness::new(&["k"], vec![k as f64], format!("band tail {} exceeds {}", x_tail.lo, y_tail.hi));
            return VerificationReport::falsified(name, format!("bands k <= {terms}"), w).with_processed(k);
        }
        if x_tail.hi > y_tail.lo {
            return VerificationReport::inconclusive(name, format!("band {k} undecided")).with_processed(k);
        }
        slack = slack.min(y_tail.lo - x_tail.hi);
    }
    let kk = terms + 1;
    let h = tail_h(kk);
    let s = step(kk);
    if h.hi <= tail_bound.lo && s.hi <= 1.0 {
        VerificationReport::verified(name, format!("bands 1..{terms} directly, k > {terms} by monotone bound"), slack)
            .with_processed(terms + 1)
    } else {
        VerificationReport::inconclusive(name, format!("tail argument for k > {terms} undecided"))
            .with_processed(terms + 1)
    }
}

fn chain_part(
    cfg: &ToyConfig,
    model: GeomCompound,
    spec: &crate::dist::DistSpec,
) -> Result<Vec<VerificationReport>, VerifyError> {
    let (base, x_base) = model.certify_base(cfg.big_lambda, cfg.x0, cfg.floor);
    if base.status != Status::Verified {
        return Ok(vec![base]);
    }
    // The base holds on [x_base, inf), which contains [x0, inf). Above x_base
    // the direct enclosures may be too loose for the chain to descend, so a
    // certificate at a larger Lambda supplies the tail there.
    let start = cfg.x0.max(x_base);
    let lifted = if x_base < start { model.lifted_base(cfg.big_lambda, start, cfg.floor) } else { None };
    let mut chain = dominance_chain(
        |y| {
            let t = tail(spec, y)?;
            Ok(lifted.as_ref().map_or(t, |l| l.tighten(y, t)))
        },
        cfg.big_lambda,
        start,
        cfg.floor,
        cfg.max_iters,
    )?;
    chain.description = format!("{}; base holds from {x_base}", chain.description);
    let mut parts = vec![base];
    if let Some(l) = lifted {
        let mut r = l.report;
        r.name = "base_lifted".into();
        r.description = format!("Lambda' = {}: {}", l.big_lambda, r.description);
        parts.push(r);
    }
    parts.push(chain);
    Ok(parts)
}

fn red_side(cfg: &ToyConfig) -> Result<VerificationReport, VerifyError> {
    let (g, a) = (cfg.gamma, cfg.a);
    let (gi, ai) = (iv(g), iv(a));
    let one = iv(1.0);
    let mut parts = Vec::new();

    // G(a) dominates B(gamma): density on [1, 1 + gamma].
    let blue_density = one.div(gi.mul(one.add(gi)));
    let pareto_density = iv(2.0).div(ai.add(one));
    parts.push(le_check(
        "blue_density_1",
        format!(
            "G(a) density <= 2/(a+1) = {:.6} <= blue density {:.6} on [1, 1+gamma]",
            pareto_density.hi, blue_density.lo
        ),
        pareto_density,
        blue_density,
    ));

    // Bands [2k-1+k gamma, 2k+1+(k+1) gamma]: P(X >= x) <= (gamma/(1+gamma))^k.
    let r = gi.div(one.add(gi));
    let a1sq = ai.add(one).sqr();
    let two_g = iv(2.0).add(gi);
    parts.push(band_check(
        "blue_bands",
        cfg.band_terms,
        |k| {
            let x_tail = r.powi(k as i32);
            let end = ai.add(iv((2 * k + 1) as f64)).add(iv((k + 1) as f64).mul(gi));
            (x_tail, a1sq.div(end.sqr()))
        },
        |k| r.powi(k as i32).mul(iv((k + 1) as f64).sqr()),
        a1sq.div(two_g.sqr()),
        |k| r.mul(iv((k + 2) as f64).div(iv((k + 1) as f64)).sqr()),
    ));

    // R(gamma) dominates F(Lambda).
    let spec = toy_red(g, 1.0);
    let model = GeomCompound { p: 1.0 / (1.0 + g), a: 1.0, b: 2.0, c0: 1.0 };
    parts.extend(chain_part(cfg, model, &spec)?);

    // For x <= 1, P(X >= x + 1) = 1 since X >= 2.
    let t = tail(&spec, 2.0)?;
    let desc = "P(X >= 2) = 1 covers [0, 1]";
    parts.push(if t.lower >= 1.0 {
        VerificationReport::verified("red_unit_range", desc, f64::INFINITY).with_processed(1)
    } else {
        VerificationReport::inconclusive("red_unit_range", format!("{desc}; lower bound {}", t.lower)).with_processed(1)
    });

    Ok(VerificationReport::all_of(
        "toy_red",
        format!("red wins: gamma = {g}, a = {a}, Lambda = {}", cfg.big_lambda),
        parts,
    ))
}

fn blue_side(cfg: &ToyConfig) -> Result<VerificationReport, VerifyError> {
    let (g, a, c) = (cfg.gamma, cfg.a, cfg.c);
    let (gi, ai, ci) = (iv(g), iv(a), iv(c));
    let one = iv(1.0);
    let mut parts = Vec::new();
    let a1sq = ai.add(one).sqr();

    // G(a) dominates R_p(gamma): [1, 2] via the atom at 1.
    parts.push(le_check(
        "red_atom",
        "P(X > 1) = 1/(c+1) <= (a+1)^2/(a+2)^2".into(),
        one.div(ci.add(one)),
        a1sq.div(ai.add(iv(2.0)).sqr()),
    ));
    // [2, 3]: density comparison.
    parts.push(le_check(
        "red_density_2_3",
        "2(a+1)^2/(a+2)^3 <= gamma/((c+1)(1+gamma))".into(),
        a1sq.scale(2.0).div(ai.add(iv(2.0)).powi(3)),
        gi.div(ci.add(one).mul(one.add(gi))),
    ));
    // Bands [2k+1, 2k+3]: P(X >= x) <= 1/((c+1)(1+gamma)^k), P(Y >= x) >= (a+1)^2/(a+2k+3)^2.
    let base = one.add(gi);
    parts.push(band_check(
        "red_bands",
        cfg.band_terms,
        |k| {
            let x_tail = one.div(ci.add(one).mul(base.powi(k as i32)));
            (x_tail, a1sq.div(ai.add(iv((2 * k + 3) as f64)).sqr()))
        },
        |k| iv((k + 2) as f64).sqr().div(base.powi(k as i32)),
        ci.add(one).mul(a1sq).scale(0.25),
        |k| iv((k + 3) as f64).div(iv((k + 2) as f64)).sqr().div(base),
    ));

    // B_p(gamma) dominates F(Lambda).
    let p = 1.0 - c / g;
    let spec = toy_blue(g, p);
    let crate::dist::DistSpec::Shift(_, inner) = &spec else { unreachable!("toy blue is a shift") };
    let crate::dist::DistSpec::Compound(z, _) = inner.as_ref() else { unreachable!("toy blue is a compound") };
    let crate::dist::DistSpec::Geom(pg) = z.as_ref() else { unreachable!("toy blue count is geometric") };
    let model = GeomCompound { p: *pg, a: 2.0, b: 2.0 + g, c0: -1.0 };
    parts.extend(chain_part(cfg, model, &spec)?);

    // [0, 2]: the blue density on [1, 3] is below e^{-2/Lambda}/Lambda.
    let l = iv(cfg.big_lambda);
    parts.push(le_check(
        "blue_density_0_2",
        "(c+1)/((1+gamma) gamma) <= e^(-2/Lambda)/Lambda".into(),
        ci.add(one).div(one.add(gi).mul(gi)),
        iv(-2.0).div(l).exp().div(l),
    ));

    Ok(VerificationReport::all_of(
        "toy_blue",
        format!("blue wins: gamma = {g}, c = {c}, a = {a}, Lambda = {}", cfg.big_lambda),
        parts,
    ))
}

pub fn verify_toy_with(cfg: &ToyConfig) -> Result<VerificationReport, VerifyError> {
    if !(cfg.a >= 0.0 && cfg.a < 1.0) {
        return Err(VerifyError::PreconditionFailed(format!("a = {} must lie in [0, 1)", cfg.a)));
    }
    if !(cfg.gamma > 0.0 && cfg.gamma.is_finite()) {
        return Err(VerifyError::PreconditionFailed(format!("gamma = {} must be positive", cfg.gamma)));
    }
    match cfg.side {
        Colour::Red => red_side(cfg),
        Colour::Blue => {
            if !(cfg.c > 1.25) {
                return Err(VerifyError::PreconditionFailed(format!("c = {} must exceed 5/4", cfg.c)));
            }
            if !(cfg.gamma > cfg.c) {
                return Err(VerifyError::PreconditionFailed(format!(
                    "gamma = {} must exceed c = {}",
                    cfg.gamma, cfg.c
                )));
            }
            blue_side(cfg)
        }
    }
}

/// Full case analysis with default `Lambda`, base point and floor.
pub fn verify_toy(gamma: f64, side: Colour, c: Option<f64>, a: f64) -> Result<VerificationReport, VerifyError> {
    let c = match side {
        Colour::Red => 0.0,
        Colour::Blue => c.ok_or_else(|| VerifyError::PreconditionFailed("blue side needs c".into()))?,
    };
    verify_toy_with(&ToyConfig::new(gamma, side, c, a))
}
