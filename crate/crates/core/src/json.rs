//! JSON helpers shared by the report types.

use serde::Serializer;

/// Writes finite values as numbers and non-finite ones as `"inf"`, `"-inf"`
/// or `"nan"`, which plain JSON cannot represent.
pub fn f64_or_label<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else if x.is_nan() {
        s.serialize_str("nan")
    } else if *x > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

/// [`f64_or_label`] for optional values.
pub fn opt_f64_or_label<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => f64_or_label(v, s),
        None => s.serialize_none(),
    }
}
