//! Outward-rounded enclosures for floating-point evaluation.
//!
//! Every arithmetic step rounds to nearest and then widens the result by
//! [`WIDEN_ULPS`] units in the last place in each direction. Library
//! transcendental functions are accurate to a few ulps, so the widening keeps
//! the true value inside the enclosure.

/// Number of ulps each intermediate result is widened by.
pub const WIDEN_ULPS: u32 = 4;

/// `x` moved `n` representable values towards negative infinity.
pub fn down_by(mut x: f64, n: u32) -> f64 {
    for _ in 0..n {
        x = x.next_down();
    }
    x
}

/// `x` moved `n` representable values towards positive infinity.
pub fn up_by(mut x: f64, n: u32) -> f64 {
    for _ in 0..n {
        x = x.next_up();
    }
    x
}

pub fn down(x: f64) -> f64 {
    down_by(x, WIDEN_ULPS)
}

pub fn up(x: f64) -> f64 {
    up_by(x, WIDEN_ULPS)
}

/// Size of one ulp at `x`.
pub fn ulp(x: f64) -> f64 {
    let a = x.abs();
    a.next_up() - a
}

/// `a + b` as an unevaluated sum `s + e` with `s = fl(a + b)`.
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

/// Closed interval `[lo, hi]` of reals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Iv {
    pub lo: f64,
    pub hi: f64,
}

#[allow(clippy::should_implement_trait)]
impl Iv {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "inverted interval [{lo}, {hi}]");
        Iv { lo, hi }
    }

    /// Degenerate interval holding a value that is exactly representable.
    pub fn point(x: f64) -> Self {
        Iv { lo: x, hi: x }
    }

    /// Enclosure of a value computed with round-to-nearest.
    pub fn approx(x: f64) -> Self {
        Iv { lo: down(x), hi: up(x) }
    }

    pub fn add(self, o: Iv) -> Iv {
        Iv::new(down(self.lo + o.lo), up(self.hi + o.hi))
    }

    pub fn sub(self, o: Iv) -> Iv {
        Iv::new(down(self.lo - o.hi), up(self.hi - o.lo))
    }

    pub fn mul(self, o: Iv) -> Iv {
        let c = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi];
        let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Iv::new(down(lo), up(hi))
    }

    /// Division by an interval that does not contain zero.
    pub fn div(self, o: Iv) -> Iv {
        assert!(o.lo > 0.0 || o.hi < 0.0, "division by interval containing zero");
        let c = [self.lo / o.lo, self.lo / o.hi, self.hi / o.lo, self.hi / o.hi];
        let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Iv::new(down(lo), up(hi))
    }

    pub fn scale(self, c: f64) -> Iv {
        self.mul(Iv::point(c))
    }

    pub fn sqr(self) -> Iv {
        if self.lo >= 0.0 {
            Iv::new(down(self.lo * self.lo), up(self.hi * self.hi))
        } else {
            self.mul(self)
        }
    }

    pub fn powi(self, n: i32) -> Iv {
        assert!(self.lo >= 0.0, "powi of an interval with negative part");
        let mut r = Iv::point(1.0);
        for _ in 0..n {
            r = r.mul(self);
        }
        r
    }

    /// Natural logarithm of a positive interval.
    pub fn ln(self) -> Iv {
        assert!(self.lo > 0.0, "ln of non-positive interval");
        Iv::new(down(self.lo.ln()), up(self.hi.ln()))
    }

    pub fn exp(self) -> Iv {
        Iv::new(down(self.lo.exp()).max(0.0), up(self.hi.exp()))
    }

    pub fn sqrt(self) -> Iv {
        assert!(self.lo >= 0.0, "sqrt of negative interval");
        Iv::new(down(self.lo.sqrt()).max(0.0), up(self.hi.sqrt()))
    }

    pub fn neg(self) -> Iv {
        Iv::new(-self.hi, -self.lo)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Rigorous `ln(sum exp(v_i))` accumulator over terms given by enclosures.
#[derive(Debug, Clone)]
pub struct LogSum {
    shift: f64,
    lo: f64,
    hi: f64,
    terms: u32,
}

impl Default for LogSum {
    fn default() -> Self {
        LogSum { shift: f64::NEG_INFINITY, lo: 0.0, hi: 0.0, terms: 0 }
    }
}

impl LogSum {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `exp(v)` for some `v` in `[v_lo, v_hi]`.
    pub fn add(&mut self, v_lo: f64, v_hi: f64) {
        if v_hi == f64::NEG_INFINITY {
            return;
        }
        if v_hi > self.shift {
            if self.shift > f64::NEG_INFINITY {
                let f = Iv::approx(self.shift - v_hi).exp();
                self.lo = down(self.lo * f.lo);
                self.hi = up(self.hi * f.hi);
            }
            self.shift = v_hi;
        }
        let lo = if v_lo == f64::NEG_INFINITY { 0.0 } else { down(down(v_lo - self.shift).exp()) };
        let hi = up(up(v_hi - self.shift).exp());
        self.lo = down(self.lo + lo.max(0.0));
        self.hi = up(self.hi + hi);
        self.terms += 1;
    }

    /// Enclosure of the logarithm of the accumulated sum.
    pub fn ln(&self) -> (f64, f64) {
        if self.shift == f64::NEG_INFINITY {
            return (f64::NEG_INFINITY, f64::NEG_INFINITY);
        }
        let lo = if self.lo > 0.0 { down(down(self.lo.ln()) + self.shift) } else { f64::NEG_INFINITY };
        let hi = up(up(self.hi.ln()) + self.shift);
        (lo, hi)
    }

    pub fn is_empty(&self) -> bool {
        self.terms == 0
    }
}
