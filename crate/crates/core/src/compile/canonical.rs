//! Deterministic JSON output for bundle indices.
//!
//! Floats are rounded to 9 significant digits before serialization, object
//! keys are sorted (serde_json's default map), output is pretty-printed with
//! a trailing newline.

use serde::Serialize;
use serde_json::Value;

pub const SIGNIFICANT_DIGITS: usize = 9;

/// `x` rounded to 9 significant digits; `-0.0` becomes `0.0`.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    let s = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let r: f64 = s.parse().expect("formatted float parses");
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// JSON number for a float, with pinned precision. Non-finite values map to
/// `null`.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(round_sig(x))
        .map(Value::Number)
        .unwrap_or(Value::Null)
}

/// Re-rounds every float inside an arbitrary JSON value.
pub fn canonicalize(value: Value) -> Value {
    match value {
        Value::Number(n) if n.is_f64() => num(n.as_f64().expect("f64 number")),
        Value::Array(items) => Value::Array(items.into_iter().map(canonicalize).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, canonicalize(v))).collect()),
        other => other,
    }
}

/// Serializes `value` into canonical bytes.
pub fn to_canonical_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let v = canonicalize(serde_json::to_value(value).expect("index serializes to JSON"));
    let mut out = serde_json::to_vec_pretty(&v).expect("JSON value serializes");
    out.push(b'\n');
    out
}
