//! Shared test helpers: a brute-force closure oracle and random colourings.

#![allow(dead_code)]

use std::collections::BTreeSet;

use coalesce::interval::{ColoredInterval, Colour};
use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Q = Ratio<i64>;

/// A segment during brute-force evolution: length and the original indices
/// it covers.
#[derive(Clone, Debug)]
struct Seg {
    len: Q,
    lo: usize,
    hi: usize,
}

/// Final lengths and per-segment recolour counts.
pub type Outcome = (Vec<Q>, Vec<u32>);

fn explore(segs: Vec<Seg>, counts: Vec<u32>, out: &mut BTreeSet<(Vec<Q>, Vec<u32>)>) {
    let movable: Vec<usize> = (1..segs.len().saturating_sub(1))
        .filter(|&i| segs[i].len < segs[i - 1].len && segs[i].len < segs[i + 1].len)
        .collect();
    if movable.is_empty() {
        out.insert((segs.iter().map(|s| s.len).collect(), counts));
        return;
    }
    for i in movable {
        let mut c = counts.clone();
        for ck in &mut c[segs[i].lo..=segs[i].hi] {
            *ck += 1;
        }
        let merged =
            Seg { len: segs[i - 1].len + segs[i].len + segs[i + 1].len, lo: segs[i - 1].lo, hi: segs[i + 1].hi };
        let mut next = Vec::with_capacity(segs.len() - 2);
        next.extend_from_slice(&segs[..i - 1]);
        next.push(merged);
        next.extend_from_slice(&segs[i + 2..]);
        explore(next, c, out);
    }
}

/// Follows every complete recolouring order. Returns the common outcome, or
/// every distinct outcome when they disagree.
pub fn brute_force(lengths: &[Q]) -> Result<Outcome, Vec<Outcome>> {
    let segs = lengths.iter().enumerate().map(|(i, &len)| Seg { len, lo: i, hi: i }).collect();
    let mut out = BTreeSet::new();
    explore(segs, vec![0; lengths.len()], &mut out);
    if out.len() == 1 {
        Ok(out.into_iter().next().unwrap())
    } else {
        Err(out.into_iter().collect())
    }
}

/// Whether any interior segment of the final state is a weak local minimum
/// tied with a neighbour, which the engine reports as degenerate.
pub fn has_tie(lengths: &[Q]) -> bool {
    (1..lengths.len().saturating_sub(1)).any(|i| {
        let (p, l, n) = (lengths[i - 1], lengths[i], lengths[i + 1]);
        l <= p && l <= n && (l == p || l == n)
    })
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn colour<R: Rng>(r: &mut R) -> Colour {
    if r.random::<bool>() {
        Colour::Red
    } else {
        Colour::Blue
    }
}

/// Rational length `p / q` with `p` up to `max_num` and `q` in `1..=12`.
pub fn rational_len<R: Rng>(r: &mut R, max_num: i64) -> Q {
    Q::new(r.random_range(1..=max_num), r.random_range(1..=12))
}

/// Random colouring with `1..=max_segments` rational lengths.
pub fn random_colouring<R: Rng>(r: &mut R, max_segments: usize, max_num: i64) -> ColoredInterval<Q> {
    let m = r.random_range(1..=max_segments);
    let lengths = (0..m).map(|_| rational_len(r, max_num)).collect();
    ColoredInterval::new(colour(r), lengths).unwrap()
}

/// Red-ended colouring with `2j + 1` segments, `j < max_pairs`, integer lengths.
pub fn red_ended<R: Rng>(r: &mut R, max_pairs: usize, max_len: i64) -> ColoredInterval<Q> {
    let j = r.random_range(0..max_pairs);
    let lengths = (0..2 * j + 1).map(|_| Q::from_integer(r.random_range(1..=max_len))).collect();
    ColoredInterval::new(Colour::Red, lengths).unwrap()
}

/// Red-ended colouring with `2j + 1` rational segments, `j < max_pairs`.
pub fn red_ended_rational<R: Rng>(r: &mut R, max_pairs: usize, max_num: i64) -> ColoredInterval<Q> {
    let j = r.random_range(0..max_pairs);
    let lengths = (0..2 * j + 1).map(|_| rational_len(r, max_num)).collect();
    ColoredInterval::new(Colour::Red, lengths).unwrap()
}

pub fn blue(len: Q) -> ColoredInterval<Q> {
    ColoredInterval::new(Colour::Blue, vec![len]).unwrap()
}

/// Whether lengths rise weakly and then fall weakly.
pub fn unimodal<T: PartialOrd>(l: &[T]) -> bool {
    let mut i = 0;
    while i + 1 < l.len() && l[i] <= l[i + 1] {
        i += 1;
    }
    while i + 1 < l.len() && l[i + 1] <= l[i] {
        i += 1;
    }
    i + 1 >= l.len()
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// Piecewise-polynomial CDF of a sum of `k` uniforms, held as values at
/// Chebyshev–Lobatto nodes on each unit piece.
pub struct PiecewiseCdf {
    k: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    values: Vec<Vec<f64>>,
}

const NODES: usize = 20;

impl PiecewiseCdf {
    pub fn first() -> Self {
        let nodes: Vec<f64> =
            (0..NODES).map(|i| 0.5 - 0.5 * (std::f64::consts::PI * i as f64 / (NODES - 1) as f64).cos()).collect();
        let weights = (0..NODES)
            .map(|i| {
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                if i == 0 || i == NODES - 1 {
                    s * 0.5
                } else {
                    s
                }
            })
            .collect();
        let values = vec![nodes.clone()];
        PiecewiseCdf { k: 1, nodes, weights, values }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= self.k as f64 {
            return 1.0;
        }
        let j = (x.floor() as usize).min(self.k - 1);
        let t = x - j as f64;
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..NODES {
            let d = t - self.nodes[i];
            if d == 0.0 {
                return self.values[j][i];
            }
            let w = self.weights[i] / d;
            num += w * self.values[j][i];
            den += w;
        }
        num / den
    }

    /// `F_{k+1}(x) = int_{x-1}^{x} F_k(t) dt`, split at the integer between.
    pub fn next(&self, gl: &[(f64, f64)]) -> Self {
        let integrate = |a: f64, b: f64| -> f64 {
            if b <= a {
                return 0.0;
            }
            let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
            gl.iter().map(|&(u, w)| w * self.eval(m + h * u)).sum::<f64>() * h
        };
        let k = self.k + 1;
        let values = (0..k)
            .map(|j| {
                self.nodes
                    .iter()
                    .map(|&t| {
                        let x = j as f64 + t;
                        let s = x.floor();
                        integrate(x - 1.0, s) + integrate(s, x)
                    })
                    .collect()
            })
            .collect();
        PiecewiseCdf { k, nodes: self.nodes.clone(), weights: self.weights.clone(), values }
    }
}

/// `P(Bin(n, q) <= k)` in exact arithmetic.
pub fn exact_lower_tail(n: u64, k: u64, q: &BigRational) -> BigRational {
    let one = BigRational::one();
    let mut sum = BigRational::zero();
    let mut binom = BigInt::one();
    for j in 0..=k {
        let term = BigRational::from_integer(binom.clone()) * pow(q, j) * pow(&(&one - q), n - j);
        sum += term;
        binom = binom * BigInt::from(n - j) / BigInt::from(j + 1);
    }
    sum
}

pub fn pow(x: &BigRational, e: u64) -> BigRational {
    (0..e).fold(BigRational::one(), |acc, _| acc * x)
}
