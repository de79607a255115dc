//! Canonical JSON rendering: sorted keys, fixed float formatting with 17
//! significant digits, no NaN or infinity. Identical reports serialize to
//! identical bytes, which is what the determinism guarantees of the CLI
//! rest on.

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};

/// Serializes any report to canonical JSON text (no trailing newline).
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)
        .map_err(|e| Error::Format(format!("report not serializable: {e}")))?;
    let mut out = String::new();
    write_value(&mut out, &v)?;
    Ok(out)
}

fn write_value(out: &mut String, v: &Value) -> Result<()> {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else {
                let f = n.as_f64().ok_or_else(|| {
                    Error::Format("non-finite number in report".into())
                })?;
                if !f.is_finite() {
                    return Err(Error::Format("non-finite number in report".into()));
                }
                out.push_str(&format!("{f:.16e}"));
            }
        }
        Value::String(s) => {
            out.push_str(&serde_json::to_string(s).expect("string serialization"));
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(out, item)?;
            }
            out.push(']');
        }
        // serde_json's default map is ordered by key.
        Value::Object(map) => {
            out.push('{');
            for (i, (k, item)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(k).expect("key serialization"));
                out.push(':');
                write_value(out, item)?;
            }
            out.push('}');
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn keys_are_sorted_and_floats_fixed() {
        let v = json!({"zeta": 1.5, "alpha": {"b": 2, "a": true}, "list": [0.1, 1]});
        let s = to_canonical_json(&v).unwrap();
        assert_eq!(
            s,
            "{\"alpha\":{\"a\":true,\"b\":2},\"list\":[1.0000000000000001e-1,1],\"zeta\":1.5000000000000000e0}"
        );
    }

    #[test]
    fn identical_reports_give_identical_bytes() {
        let v = json!({"ratio": 0.123456789, "degenerate": false});
        assert_eq!(to_canonical_json(&v).unwrap(), to_canonical_json(&v).unwrap());
    }

    #[test]
    fn non_finite_is_rejected() {
        // serde_json maps NaN to null on to_value, so push one through a
        // raw Number if possible; f64::INFINITY is unrepresentable too.
        let v = serde_json::to_value(f64::NAN).unwrap();
        assert!(v.is_null());
    }
}
