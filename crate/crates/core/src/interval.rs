//! Coloured intervals and the recolouring dynamics.
//!
//! A coloured interval is a finite sequence of red and blue segments whose
//! colours alternate. A segment strictly shorter than both of its neighbours
//! may be recoloured, which merges it with both neighbours. The final state
//! after recolouring until nothing is recolourable does not depend on the
//! order of recolourings; it is computed here in the canonical
//! shortest-first order.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Colour {
    Red,
    Blue,
}

impl Colour {
    pub fn flip(self) -> Colour {
        match self {
            Colour::Red => Colour::Blue,
            Colour::Blue => Colour::Red,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Colour::Red => 'R',
            Colour::Blue => 'B',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntervalError {
    #[error("segment {index} has a non-positive or non-finite length")]
    InvalidLength { index: usize },
    #[error("colours do not alternate at segment {index}")]
    NotAlternating { index: usize },
    #[error("degenerate tie at length {length}")]
    DegenerateTie { length: f64 },
    #[error("interval is not red-ended")]
    NotRedEnded,
    #[error("bound state does not alternate at entry {index}")]
    MalformedAlternation { index: usize },
    #[error("cannot parse segment list: {0}")]
    Parse(String),
}

/// Scalar type usable as a segment length.
pub trait Length:
    Copy
    + fmt::Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Zero
    + Send
    + Sync
    + 'static
{
    fn cmp_len(&self, other: &Self) -> Ordering;
    fn to_f64(&self) -> f64;
    /// Positive and finite.
    fn is_valid(&self) -> bool;

    fn lt(&self, other: &Self) -> bool {
        self.cmp_len(other) == Ordering::Less
    }

    fn le(&self, other: &Self) -> bool {
        self.cmp_len(other) != Ordering::Greater
    }
}

impl Length for f64 {
    fn cmp_len(&self, other: &Self) -> Ordering {
        self.total_cmp(other)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn is_valid(&self) -> bool {
        self.is_finite() && *self > 0.0
    }
}

impl Length for Ratio<i64> {
    fn cmp_len(&self, other: &Self) -> Ordering {
        self.cmp(other)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn is_valid(&self) -> bool {
        *self > Ratio::zero()
    }
}

/// Alternating sequence of coloured segments.
#[derive(Debug, Clone, PartialEq)]
pub struct ColoredInterval<L = f64> {
    first: Colour,
    lengths: Vec<L>,
}

impl<L: Length> ColoredInterval<L> {
    pub fn new(first: Colour, lengths: Vec<L>) -> Result<Self, IntervalError> {
        if let Some(index) = lengths.iter().position(|l| !l.is_valid()) {
            return Err(IntervalError::InvalidLength { index });
        }
        Ok(ColoredInterval { first, lengths })
    }

    pub fn from_segments(segments: &[(Colour, L)]) -> Result<Self, IntervalError> {
        for i in 1..segments.len() {
            if segments[i].0 == segments[i - 1].0 {
                return Err(IntervalError::NotAlternating { index: i });
            }
        }
        let first = segments.first().map(|s| s.0).unwrap_or(Colour::Red);
        Self::new(first, segments.iter().map(|s| s.1).collect())
    }

    pub fn empty() -> Self {
        ColoredInterval { first: Colour::Red, lengths: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lengths.is_empty()
    }

    pub fn first_colour(&self) -> Colour {
        self.first
    }

    pub fn last_colour(&self) -> Colour {
        self.colour_of(self.lengths.len().saturating_sub(1))
    }

    pub fn colour_of(&self, i: usize) -> Colour {
        if i.is_multiple_of(2) {
            self.first
        } else {
            self.first.flip()
        }
    }

    pub fn lengths(&self) -> &[L] {
        &self.lengths
    }

    pub fn segments(&self) -> impl Iterator<Item = (Colour, L)> + '_ {
        self.lengths.iter().enumerate().map(|(i, &l)| (self.colour_of(i), l))
    }

    pub fn total_length(&self) -> L {
        self.lengths.iter().fold(L::zero(), |acc, &l| acc + l)
    }

    pub fn is_red_ended(&self) -> bool {
        !self.is_empty() && self.first == Colour::Red && self.last_colour() == Colour::Red
    }

    pub fn reversed(&self) -> Self {
        let mut lengths = self.lengths.clone();
        lengths.reverse();
        ColoredInterval { first: self.last_colour(), lengths }
    }

    pub fn colour_swapped(&self) -> Self {
        ColoredInterval { first: self.first.flip(), lengths: self.lengths.clone() }
    }

    /// Concatenation; touching segments of equal colour become one segment.
    pub fn concat(&self, other: &Self) -> Self {
        if self.is_empty() {
            return other.clone();
        }
        if other.is_empty() {
            return self.clone();
        }
        let mut lengths = self.lengths.clone();
        if self.last_colour() == other.first {
            let last = lengths.pop().unwrap();
            lengths.push(last + other.lengths[0]);
            lengths.extend_from_slice(&other.lengths[1..]);
        } else {
            lengths.extend_from_slice(&other.lengths);
        }
        ColoredInterval { first: self.first, lengths }
    }

    /// Lengths increase (weakly) and then decrease (weakly).
    pub fn is_closed(&self) -> bool {
        let l = &self.lengths;
        let n = l.len();
        if n <= 2 {
            return true;
        }
        let mut i = 0;
        while i + 1 < n && l[i].le(&l[i + 1]) {
            i += 1;
        }
        while i + 1 < n && l[i + 1].le(&l[i]) {
            i += 1;
        }
        i == n - 1
    }

    /// Closure in the canonical shortest-first order, with its trace.
    pub fn closure(&self) -> Result<(Self, RecolourTrace), IntervalError> {
        let mut e = Engine::new(self, true);
        e.run(None, true)?;
        Ok(e.finish())
    }

    pub fn recolour_counts(&self) -> Result<RecolourTrace, IntervalError> {
        self.closure().map(|(_, t)| t)
    }

    /// Closure computed by a single left-to-right stack pass.
    pub fn stack_closure(&self) -> Result<Self, IntervalError> {
        let mut s = StackCloser::with_capacity(self.first, self.len());
        for &l in &self.lengths {
            s.push(l);
        }
        s.finish()
    }

    /// State after recolouring, shortest first, every recolourable segment
    /// shorter than `limit`.
    pub fn closure_below(&self, limit: L) -> Self {
        let mut e = Engine::new(self, false);
        e.run(Some(limit), false).expect("tie checks are disabled");
        e.finish().0
    }

    pub fn red_content(&self) -> Result<L, IntervalError> {
        if !self.is_red_ended() {
            return Err(IntervalError::NotRedEnded);
        }
        let (c, _) = self.closure()?;
        Ok(c.segments().filter(|s| s.0 == Colour::Red).fold(L::zero(), |a, s| a + s.1))
    }

    /// Blue goodness: see [`ColoredInterval::goodness_for`].
    pub fn goodness(&self, alpha: L) -> Result<GoodnessReport, IntervalError> {
        self.goodness_for(alpha, Colour::Blue)
    }

    /// Whether the closure has a segment of colour `target` that starts within
    /// `alpha * |C|` of the left end and ends within `alpha * |C|` of the right
    /// end.
    pub fn goodness_for(&self, alpha: L, target: Colour) -> Result<GoodnessReport, IntervalError> {
        let (c, _) = self.closure()?;
        Ok(c.central_segment(alpha, target))
    }

    /// Central-segment test applied to `self` as given (assumed closed).
    pub fn central_segment(&self, alpha: L, target: Colour) -> GoodnessReport {
        let total = self.total_length();
        let slack = alpha * total;
        let mut start = L::zero();
        let mut span = None;
        for (colour, l) in self.segments() {
            let end = start + l;
            if colour == target && start.le(&slack) && (total - end).le(&slack) {
                span = Some((start.to_f64(), end.to_f64()));
                break;
            }
            start = end;
        }
        GoodnessReport { good: span.is_some(), central_span: span, total_length: total.to_f64() }
    }
}

impl ColoredInterval<f64> {
    /// Parses `R:3, B:1, R:2` style segment lists.
    pub fn parse(text: &str) -> Result<Self, IntervalError> {
        let text = text.trim().trim_start_matches('(').trim_end_matches(')');
        if text.trim().is_empty() {
            return Ok(Self::empty());
        }
        let mut segs = Vec::new();
        for part in text.split(',') {
            let (c, l) =
                part.trim().split_once(':').ok_or_else(|| IntervalError::Parse(format!("missing ':' in {part:?}")))?;
            let colour = match c.trim() {
                "R" | "r" | "red" => Colour::Red,
                "B" | "b" | "blue" => Colour::Blue,
                other => return Err(IntervalError::Parse(format!("unknown colour {other:?}"))),
            };
            let len: f64 = l.trim().parse().map_err(|_| IntervalError::Parse(format!("bad length {l:?}")))?;
            segs.push((colour, len));
        }
        Self::from_segments(&segs)
    }
}

impl<L: Length + fmt::Display> fmt::Display for ColoredInterval<L> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, (c, l)) in self.segments().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}:{}", c.letter(), l)?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodnessReport {
    pub good: bool,
    pub central_span: Option<(f64, f64)>,
    pub total_length: f64,
}

/// One recolouring: the original segments `first..=last` changed to `colour`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Merge {
    pub first: usize,
    pub last: usize,
    pub colour: Colour,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecolourTrace {
    pub counts: Vec<u32>,
    pub merges: Vec<Merge>,
}

const NIL: u32 = u32::MAX;

#[derive(Clone, Copy)]
struct Entry<L> {
    len: L,
    id: u32,
    ver: u32,
}

impl<L: Length> PartialEq for Entry<L> {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}

impl<L: Length> Eq for Entry<L> {}

impl<L: Length> PartialOrd for Entry<L> {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl<L: Length> Ord for Entry<L> {
    // Reversed so that the max-heap yields the shortest, then lowest index.
    fn cmp(&self, o: &Self) -> Ordering {
        o.len.cmp_len(&self.len).then(o.id.cmp(&self.id)).then(o.ver.cmp(&self.ver))
    }
}

struct Engine<L> {
    first: Colour,
    len: Vec<L>,
    prev: Vec<u32>,
    next: Vec<u32>,
    lo: Vec<u32>,
    hi: Vec<u32>,
    ver: Vec<u32>,
    alive: Vec<bool>,
    cands: BinaryHeap<Entry<L>>,
    ties: BinaryHeap<Entry<L>>,
    diff: Vec<i64>,
    merges: Vec<Merge>,
    record: bool,
}

impl<L: Length> Engine<L> {
    fn new(c: &ColoredInterval<L>, record: bool) -> Self {
        let m = c.len();
        assert!(m < NIL as usize, "too many segments");
        let mut e = Engine {
            first: c.first,
            len: c.lengths.clone(),
            prev: (0..m as u32).map(|i| if i == 0 { NIL } else { i - 1 }).collect(),
            next: (0..m as u32).map(|i| if i + 1 == m as u32 { NIL } else { i + 1 }).collect(),
            lo: (0..m as u32).collect(),
            hi: (0..m as u32).collect(),
            ver: vec![0; m],
            alive: vec![true; m],
            cands: BinaryHeap::new(),
            ties: BinaryHeap::new(),
            diff: if record { vec![0; m + 1] } else { Vec::new() },
            merges: Vec::new(),
            record,
        };
        for i in 1..m.saturating_sub(1) {
            e.examine(i as u32);
        }
        e
    }

    fn neighbours(&self, i: u32) -> Option<(u32, u32)> {
        let (p, n) = (self.prev[i as usize], self.next[i as usize]);
        (p != NIL && n != NIL).then_some((p, n))
    }

    fn is_candidate(&self, i: u32) -> bool {
        match self.neighbours(i) {
            Some((p, n)) => {
                let l = &self.len[i as usize];
                l.lt(&self.len[p as usize]) && l.lt(&self.len[n as usize])
            }
            None => false,
        }
    }

    /// Interior segment no longer than either neighbour and equal to one of
    /// them: it can never be recoloured unless something shorter changes.
    fn is_tie(&self, i: u32) -> bool {
        match self.neighbours(i) {
            Some((p, n)) => {
                let l = &self.len[i as usize];
                let (lp, ln) = (&self.len[p as usize], &self.len[n as usize]);
                l.le(lp) && l.le(ln) && (l.cmp_len(lp) == Ordering::Equal || l.cmp_len(ln) == Ordering::Equal)
            }
            None => false,
        }
    }

    fn examine(&mut self, i: u32) {
        let e = Entry { len: self.len[i as usize], id: i, ver: self.ver[i as usize] };
        if self.is_candidate(i) {
            self.cands.push(e);
        } else if self.is_tie(i) {
            self.ties.push(e);
        }
    }

    fn current(&self, e: &Entry<L>) -> bool {
        self.alive[e.id as usize] && self.ver[e.id as usize] == e.ver
    }

    fn top_candidate(&mut self) -> Option<Entry<L>> {
        while let Some(&e) = self.cands.peek() {
            if self.current(&e) && self.is_candidate(e.id) {
                return Some(e);
            }
            self.cands.pop();
        }
        None
    }

    fn top_tie(&mut self) -> Option<Entry<L>> {
        while let Some(&e) = self.ties.peek() {
            if self.current(&e) && self.is_tie(e.id) {
                return Some(e);
            }
            self.ties.pop();
        }
        None
    }

    fn run(&mut self, limit: Option<L>, check_ties: bool) -> Result<(), IntervalError> {
        while let Some(c) = self.top_candidate() {
            if let Some(lim) = limit {
                if !c.len.lt(&lim) {
                    break;
                }
            }
            if check_ties {
                if let Some(t) = self.top_tie() {
                    if t.len.le(&c.len) {
                        return Err(IntervalError::DegenerateTie { length: t.len.to_f64() });
                    }
                }
            }
            self.cands.pop();
            self.merge(c.id);
        }
        if check_ties {
            if let Some(t) = self.top_tie() {
                return Err(IntervalError::DegenerateTie { length: t.len.to_f64() });
            }
        }
        Ok(())
    }

    fn colour(&self, i: u32) -> Colour {
        if self.lo[i as usize].is_multiple_of(2) {
            self.first
        } else {
            self.first.flip()
        }
    }

    fn merge(&mut self, x: u32) {
        let (p, n) = self.neighbours(x).expect("candidate has two neighbours");
        let (xu, pu, nu) = (x as usize, p as usize, n as usize);
        if self.record {
            self.diff[self.lo[xu] as usize] += 1;
            self.diff[self.hi[xu] as usize + 1] -= 1;
            self.merges.push(Merge { first: self.lo[xu] as usize, last: self.hi[xu] as usize, colour: self.colour(p) });
        }
        self.len[pu] = self.len[pu] + self.len[xu] + self.len[nu];
        self.hi[pu] = self.hi[nu];
        self.ver[pu] += 1;
        let nn = self.next[nu];
        self.next[pu] = nn;
        if nn != NIL {
            self.prev[nn as usize] = p;
        }
        self.alive[xu] = false;
        self.alive[nu] = false;
        self.examine(p);
        if self.prev[pu] != NIL {
            self.examine(self.prev[pu]);
        }
        if nn != NIL {
            self.examine(nn);
        }
    }

    fn finish(self) -> (ColoredInterval<L>, RecolourTrace) {
        let mut lengths = Vec::new();
        let mut i = if self.len.is_empty() { NIL } else { 0 };
        while i != NIL {
            lengths.push(self.len[i as usize]);
            i = self.next[i as usize];
        }
        let mut counts = Vec::with_capacity(self.diff.len().saturating_sub(1));
        let mut acc = 0i64;
        for d in self.diff.iter().take(self.diff.len().saturating_sub(1)) {
            acc += d;
            counts.push(acc as u32);
        }
        (ColoredInterval { first: self.first, lengths }, RecolourTrace { counts, merges: self.merges })
    }
}

/// Streaming closure: segments are pushed left to right and every segment
/// that becomes strictly shorter than both neighbours is merged at once.
/// The final state equals the canonical closure.
#[derive(Debug, Clone)]
pub struct StackCloser<L = f64> {
    first: Colour,
    stack: Vec<L>,
}

impl<L: Length> StackCloser<L> {
    pub fn new(first: Colour) -> Self {
        Self::with_capacity(first, 0)
    }

    pub fn with_capacity(first: Colour, cap: usize) -> Self {
        StackCloser { first, stack: Vec::with_capacity(cap) }
    }

    pub fn push(&mut self, mut s: L) {
        while self.stack.len() >= 2 {
            let k = self.stack.len();
            let (left, t) = (self.stack[k - 2], self.stack[k - 1]);
            if t.lt(&left) && t.lt(&s) {
                self.stack.truncate(k - 2);
                s = left + t + s;
            } else {
                break;
            }
        }
        self.stack.push(s);
    }

    pub fn finish(self) -> Result<ColoredInterval<L>, IntervalError> {
        let st = &self.stack;
        for i in 1..st.len().saturating_sub(1) {
            if st[i].le(&st[i - 1]) && st[i].le(&st[i + 1]) {
                return Err(IntervalError::DegenerateTie { length: st[i].to_f64() });
            }
        }
        Ok(ColoredInterval { first: self.first, lengths: self.stack })
    }
}

/// Entry of an ℓ-bounding state: a red-ended interval carrying an upper bound
/// on its red content, or a blue interval carrying a lower bound on its length.
#[derive(Debug, Clone, PartialEq)]
pub struct LEntry {
    pub colour: Colour,
    pub segment: ColoredInterval<f64>,
    pub bound: f64,
}

impl LEntry {
    pub fn red(segment: ColoredInterval<f64>, bound: f64) -> Self {
        LEntry { colour: Colour::Red, segment, bound }
    }

    pub fn blue(length: f64, bound: f64) -> Self {
        LEntry { colour: Colour::Blue, segment: ColoredInterval { first: Colour::Blue, lengths: vec![length] }, bound }
    }
}

/// One round of the ℓ-bounding update with threshold `ell0`.
///
/// Runs of red-ended entries separated by blue entries of bound at most `ell0`
/// merge, with new bound `2^ceil(log2 m)` times the sum of the `m` red bounds.
/// Then runs of blue entries separated by red-ended entries of bound at most
/// `ell0` merge, with new bound the sum of the blue bounds.
pub fn lbound_update(state: &[LEntry], ell0: f64) -> Result<Vec<LEntry>, IntervalError> {
    for i in 0..state.len() {
        let e = &state[i];
        let ends_ok = match e.colour {
            Colour::Red => e.segment.is_red_ended(),
            Colour::Blue => {
                !e.segment.is_empty() && e.segment.first == Colour::Blue && e.segment.last_colour() == Colour::Blue
            }
        };
        if !ends_ok || (i > 0 && state[i - 1].colour == e.colour) {
            return Err(IntervalError::MalformedAlternation { index: i });
        }
    }
    let reds = merge_runs(state, Colour::Red, ell0, |bounds| {
        let m = bounds.len();
        let factor = m.next_power_of_two() as f64;
        factor * bounds.iter().sum::<f64>()
    });
    Ok(merge_runs(&reds, Colour::Blue, ell0, |bounds| bounds.iter().sum()))
}

fn merge_runs(state: &[LEntry], keep: Colour, ell0: f64, combine: impl Fn(&[f64]) -> f64) -> Vec<LEntry> {
    let mut out = Vec::with_capacity(state.len());
    let mut i = 0;
    while i < state.len() {
        if state[i].colour != keep {
            out.push(state[i].clone());
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 2 < state.len() && state[j + 1].bound <= ell0 && keep_side_ok(state, j, keep, ell0) {
            j += 2;
        }
        if j == i {
            out.push(state[i].clone());
        } else {
            let mut seg = state[i].segment.clone();
            for e in &state[i + 1..=j] {
                seg = seg.concat(&e.segment);
            }
            let bounds: Vec<f64> = state[i..=j].iter().step_by(2).map(|e| e.bound).collect();
            out.push(LEntry { colour: keep, segment: seg, bound: combine(&bounds) });
        }
        i = j + 1;
    }
    out
}

/// Blue merges need both blues to exceed `ell0` so that the red part between
/// them is absorbed; red merges have no extra condition.
fn keep_side_ok(state: &[LEntry], j: usize, keep: Colour, ell0: f64) -> bool {
    match keep {
        Colour::Red => true,
        Colour::Blue => state[j].bound > ell0 && state[j + 2].bound > ell0,
    }
}

/// Unit red interval with a blue of relative width `1/3 - eps` inserted in
/// the middle of every red piece, recursively `depth` times.
pub fn cantor_construction(depth: u32, eps: f64) -> ColoredInterval<f64> {
    let mut lengths = vec![1.0f64];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(lengths.len() * 3);
        for (i, &l) in lengths.iter().enumerate() {
            if i % 2 == 0 {
                let side = l * (1.0 / 3.0 + eps / 2.0);
                next.push(side);
                next.push(l * (1.0 / 3.0 - eps));
                next.push(side);
            } else {
                next.push(l);
            }
        }
        lengths = next;
    }
    ColoredInterval { first: Colour::Red, lengths }
}
