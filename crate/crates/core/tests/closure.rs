//! Closure engine against the brute-force oracle, plus structural properties.

mod common;

use coalesce::interval::{ColoredInterval, Colour, IntervalError, LEntry};
use common::{blue, brute_force, random_colouring, red_ended, rng, unimodal, Q};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn oracle_agrees_on_random_colourings() {
    let mut r = rng(11);
    let (mut checked, mut ties) = (0, 0);
    for _ in 0..3000 {
        let c = random_colouring(&mut r, 8, 40);
        let oracle = brute_force(c.lengths()).expect("all complete orders reach the same state");
        match c.closure() {
            Ok((closed, trace)) => {
                assert_eq!(closed.lengths(), &oracle.0[..], "{c:?}");
                assert_eq!(trace.counts, oracle.1, "{c:?}");
                assert_eq!(c.recolour_counts().unwrap().counts, oracle.1);
                checked += 1;
            }
            Err(IntervalError::DegenerateTie { .. }) => ties += 1,
            Err(e) => panic!("{e}"),
        }
    }
    // Small numerators make ties common enough to exercise both branches.
    assert!(checked > 2000 && ties > 0, "checked {checked}, ties {ties}");
}

#[test]
fn oracle_handles_textbook_case() {
    let q = |v: i64| Q::from_integer(v);
    // R:2, B:1, R:3 closes to one red segment.
    let out = brute_force(&[q(2), q(1), q(3)]).unwrap();
    assert_eq!(out, (vec![q(6)], vec![0, 1, 0]));
}

#[test]
fn embedding_never_lowers_counts() {
    let mut r = rng(12);
    let mut compared = 0;
    for _ in 0..2000 {
        let c = random_colouring(&mut r, 6, 1_000_000);
        let Ok(inner) = c.recolour_counts() else { continue };
        let left_len = r.random_range(0..4usize);
        let right_len = r.random_range(0..4usize);
        let mut lengths: Vec<Q> = (0..left_len).map(|_| common::rational_len(&mut r, 1_000_000)).collect();
        lengths.extend_from_slice(c.lengths());
        lengths.extend((0..right_len).map(|_| common::rational_len(&mut r, 1_000_000)));
        let first = if left_len % 2 == 0 { c.first_colour() } else { c.first_colour().flip() };
        let big = ColoredInterval::new(first, lengths).unwrap();
        let Ok(outer) = big.recolour_counts() else { continue };
        for (i, &k) in inner.counts.iter().enumerate() {
            assert!(k <= outer.counts[left_len + i], "{c:?} inside {big:?}");
        }
        compared += 1;
    }
    assert!(compared > 1500);
}

#[test]
fn lbound_update_is_sound() {
    let mut r = rng(13);
    for _ in 0..500 {
        // Alternating red-ended / blue entries with exact bounds, then updated
        // bounds checked against the true merged segments.
        let m = r.random_range(1..8usize);
        let mut state = Vec::new();
        for i in 0..2 * m - 1 {
            if i % 2 == 0 {
                let c = red_ended(&mut r, 3, 1000);
                let seg = to_f64(&c);
                let Ok(rc) = c.red_content() else { continue };
                state.push(LEntry::red(seg, f64_of(rc) * (1.0 + r.random::<f64>())));
            } else {
                let len = r.random_range(1..1000) as f64;
                state.push(LEntry::blue(len, len * r.random::<f64>()));
            }
        }
        if state.windows(2).any(|w| w[0].colour == w[1].colour) {
            continue;
        }
        let ell0 = r.random_range(1..400) as f64;
        let Ok(next) = coalesce::interval::lbound_update(&state, ell0) else { continue };
        for e in &next {
            match e.colour {
                Colour::Red => {
                    if let Ok(rc) = e.segment.red_content() {
                        assert!(e.bound >= rc * (1.0 - 1e-12), "bound {} < red content {rc}", e.bound);
                    }
                }
                Colour::Blue => {
                    let (closed, _) = match e.segment.closure() {
                        Ok(c) => c,
                        Err(_) => continue,
                    };
                    assert!(closed.len() == 1, "merged blue run did not close to one blue segment");
                    assert!(e.bound <= closed.total_length() * (1.0 + 1e-12));
                }
            }
        }
    }
}

fn f64_of(q: Q) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

fn to_f64(c: &ColoredInterval<Q>) -> ColoredInterval<f64> {
    ColoredInterval::new(c.first_colour(), c.lengths().iter().map(|&q| f64_of(q)).collect()).unwrap()
}

fn lengths_strategy() -> impl Strategy<Value = (bool, Vec<f64>)> {
    (any::<bool>(), prop::collection::vec(1e-3f64..1e3, 1..200))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn closure_is_idempotent_and_closed((red, l) in lengths_strategy()) {
        let c = ColoredInterval::new(if red { Colour::Red } else { Colour::Blue }, l).unwrap();
        if let Ok((closed, _)) = c.closure() {
            prop_assert!(closed.is_closed());
            prop_assert!(unimodal(closed.lengths()));
            let (again, trace) = closed.closure().unwrap();
            prop_assert_eq!(&again, &closed);
            prop_assert!(trace.counts.iter().all(|&k| k == 0));
        }
    }

    #[test]
    fn stack_pass_matches_engine((red, l) in lengths_strategy()) {
        let c = ColoredInterval::new(if red { Colour::Red } else { Colour::Blue }, l).unwrap();
        if let (Ok((a, _)), Ok(b)) = (c.closure(), c.stack_closure()) {
            prop_assert_eq!(a.first_colour(), b.first_colour());
            prop_assert_eq!(a.len(), b.len());
            for (x, y) in a.lengths().iter().zip(b.lengths()) {
                prop_assert!((x - y).abs() <= 1e-9 * x.abs());
            }
        }
    }

    #[test]
    fn exact_length_is_conserved(nums in prop::collection::vec((1i64..10_000, 1i64..13), 1..60), red in any::<bool>()) {
        let l: Vec<Q> = nums.iter().map(|&(p, q)| Q::new(p, q)).collect();
        let total: Q = l.iter().copied().sum();
        let c = ColoredInterval::new(if red { Colour::Red } else { Colour::Blue }, l).unwrap();
        if let Ok((closed, trace)) = c.closure() {
            prop_assert_eq!(closed.total_length(), total);
            // A segment keeps its colour iff it was recoloured an even number of times.
            let mut pos = 0usize;
            for (colour, len) in closed.segments() {
                let mut acc = Q::from_integer(0);
                while acc < len {
                    let orig = c.colour_of(pos);
                    let flipped = trace.counts[pos] % 2 == 1;
                    prop_assert_eq!(if flipped { orig.flip() } else { orig }, colour);
                    acc += c.lengths()[pos];
                    pos += 1;
                }
            }
        }
    }

    #[test]
    fn joined_red_content_at_most_twice_parts(a in 0u64..u64::MAX, b in 1i64..5000) {
        let mut r = rng(a);
        let (cm, cp) = (red_ended(&mut r, 4, 5000), red_ended(&mut r, 4, 5000));
        let joined = cm.concat(&blue(Q::from_integer(b))).concat(&cp);
        if let (Ok(x), Ok(y), Ok(z)) = (joined.red_content(), cm.red_content(), cp.red_content()) {
            prop_assert!(x <= (y + z) * Q::from_integer(2));
        }
    }
}
