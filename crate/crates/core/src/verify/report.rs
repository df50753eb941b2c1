//! Three-valued verification reports.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Verified,
    Falsified,
    Inconclusive,
}

impl Status {
    /// Process exit code: 0, 1 or 2.
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Verified => 0,
            Status::Falsified => 1,
            Status::Inconclusive => 2,
        }
    }

    /// Verified only if every part is; falsified if any part is.
    pub fn combine(self, other: Status) -> Status {
        use Status::*;
        match (self, other) {
            (Falsified, _) | (_, Falsified) => Falsified,
            (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
            _ => Verified,
        }
    }
}

/// Point or index where a check failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    /// Coordinate names, e.g. `["a", "x"]` or `["step"]`.
    pub coords: Vec<String>,
    pub point: Vec<f64>,
    pub note: String,
}

impl Witness {
    pub fn new(coords: &[&str], point: Vec<f64>, note: impl Into<String>) -> Self {
        Witness { coords: coords.iter().map(|s| s.to_string()).collect(), point, note: note.into() }
    }
}

/// Leaf rectangle `[a1, a2] x [x1, x2]` with its certified margin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Leaf {
    pub a1: f64,
    pub a2: f64,
    pub x1: f64,
    pub x2: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub name: String,
    pub status: Status,
    pub description: String,
    /// Rectangles processed, chain links, or steps taken.
    pub processed: u64,
    pub witness: Option<Witness>,
    /// Smallest margin observed among the certified pieces.
    #[serde(serialize_with = "crate::json::f64_or_label")]
    pub slack: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub chain: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub leaves: Vec<Leaf>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sub_checks: Vec<VerificationReport>,
}

impl VerificationReport {
    pub fn new(name: impl Into<String>, status: Status, description: impl Into<String>) -> Self {
        VerificationReport {
            name: name.into(),
            status,
            description: description.into(),
            processed: 0,
            witness: None,
            slack: f64::INFINITY,
            chain: Vec::new(),
            leaves: Vec::new(),
            sub_checks: Vec::new(),
        }
    }

    pub fn verified(name: impl Into<String>, description: impl Into<String>, slack: f64) -> Self {
        let mut r = Self::new(name, Status::Verified, description);
        r.slack = slack;
        r
    }

    pub fn falsified(name: impl Into<String>, description: impl Into<String>, witness: Witness) -> Self {
        let mut r = Self::new(name, Status::Falsified, description);
        r.witness = Some(witness);
        r
    }

    pub fn inconclusive(name: impl Into<String>, description: impl Into<String>) -> Self {
        Self::new(name, Status::Inconclusive, description)
    }

    pub fn with_processed(mut self, n: u64) -> Self {
        self.processed = n;
        self
    }

    /// Report whose status combines those of `parts`; the first falsifying
    /// part supplies the witness.
    pub fn all_of(name: impl Into<String>, description: impl Into<String>, parts: Vec<VerificationReport>) -> Self {
        let status = parts.iter().fold(Status::Verified, |s, p| s.combine(p.status));
        let mut r = Self::new(name, status, description);
        r.slack = parts.iter().map(|p| p.slack).fold(f64::INFINITY, f64::min);
        r.processed = parts.iter().map(|p| p.processed).sum();
        r.witness = parts.iter().find(|p| p.status == Status::Falsified).and_then(|p| p.witness.clone());
        r.sub_checks = parts;
        r
    }
}
