//! Deterministic JSON and number formatting.
//!
//! Floats are written with 17 significant digits in exponent form so that
//! every value round-trips bit-exactly. Object keys come out sorted because
//! `serde_json::Map` is ordered.

use serde_json::{Map, Number, Value};

/// 17 significant digits, e.g. `2.5000000000000000e-1`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "Infinity" } else { "-Infinity" }.to_string()
    } else {
        format!("{v:.16e}")
    }
}

/// Parses the output of [`fmt_f64`] (and any ordinary float literal).
pub fn parse_f64(s: &str) -> Option<f64> {
    match s.trim() {
        "NaN" => Some(f64::NAN),
        "Infinity" => Some(f64::INFINITY),
        "-Infinity" => Some(f64::NEG_INFINITY),
        t => t.parse().ok(),
    }
}

/// JSON value of a float; non-finite values become strings.
pub fn float(v: f64) -> Value {
    match Number::from_f64(v) {
        Some(n) => Value::Number(n),
        None => Value::String(fmt_f64(v)),
    }
}

pub fn float_array(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| float(x)).collect())
}

/// Pretty printer with two-space indentation and fixed float formatting.
pub fn to_string(value: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, value, 0);
    out.push('\n');
    out
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn write_number(out: &mut String, n: &Number) {
    if let Some(i) = n.as_i64() {
        out.push_str(&i.to_string());
    } else if let Some(u) = n.as_u64() {
        out.push_str(&u.to_string());
    } else {
        out.push_str(&fmt_f64(n.as_f64().unwrap_or(f64::NAN)));
    }
}

fn write_value(out: &mut String, value: &Value, level: usize) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&fmt_f64(n.as_f64().unwrap_or(f64::NAN)));
            } else {
                write_number(out, n);
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("strings serialize")),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
            } else if items.iter().all(|v| !matches!(v, Value::Array(_) | Value::Object(_))) {
                out.push('[');
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_value(out, v, level);
                }
                out.push(']');
            } else {
                out.push_str("[\n");
                for (i, v) in items.iter().enumerate() {
                    indent(out, level + 1);
                    write_value(out, v, level + 1);
                    if i + 1 < items.len() {
                        out.push(',');
                    }
                    out.push('\n');
                }
                indent(out, level);
                out.push(']');
            }
        }
        Value::Object(map) => write_object(out, map, level),
    }
}

fn write_object(out: &mut String, map: &Map<String, Value>, level: usize) {
    if map.is_empty() {
        out.push_str("{}");
        return;
    }
    out.push_str("{\n");
    let len = map.len();
    for (i, (k, v)) in map.iter().enumerate() {
        indent(out, level + 1);
        out.push_str(&serde_json::to_string(k).expect("keys serialize"));
        out.push_str(": ");
        write_value(out, v, level + 1);
        if i + 1 < len {
            out.push(',');
        }
        out.push('\n');
    }
    indent(out, level);
    out.push('}');
}

/// Reads a float that may have been written as a string by [`float`].
pub fn value_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => parse_f64(s),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0] {
            let s = fmt_f64(v);
            assert_eq!(parse_f64(&s), Some(v));
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.chars().filter(|c| c.is_ascii_digit()).count(), 17);
        }
    }

    #[test]
    fn output_is_valid_json_with_sorted_keys() {
        let v = serde_json::json!({"b": 0.1, "a": [1, 2.5], "c": {"z": null, "y": "s"}});
        let s = to_string(&v);
        assert!(s.find("\"a\"").unwrap() < s.find("\"b\"").unwrap());
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["b"].as_f64(), Some(0.1));
    }
}
