//! Error type and deterministic JSON/CSV number formatting.

use serde::Serialize;
use serde_json::{Map, Number, Value};
use serde_value::Value as Raw;
use thiserror::Error;

use qthermo::QError;

/// Significant digits kept in every serialized number.
pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] QError),
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{0}")]
    Usage(String),
    #[error("non-finite value at {0}")]
    NonFinite(String),
}

impl CliError {
    /// 2 for domain and input errors, 3 for solver non-convergence.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_nonconvergence() => 3,
            _ => 2,
        }
    }
}

/// Rounds to [`SIGNIFICANT_DIGITS`] significant digits; `-0` becomes `0`.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().unwrap_or(x)
}

/// Rounded shortest decimal form of a finite number, for CSV cells.
pub fn csv_number(x: f64) -> String {
    if x.is_finite() {
        format!("{}", round_sig(x))
    } else {
        String::new()
    }
}

/// Serializes `v` with rounded numbers, rejecting NaN and infinities.
pub fn to_json<T: Serialize + ?Sized>(v: &T) -> Result<Value, CliError> {
    let raw = serde_value::to_value(v).map_err(|e| CliError::Usage(format!("serialization: {e}")))?;
    convert(&raw, "$")
}

fn float(x: f64, path: &str) -> Result<Value, CliError> {
    if !x.is_finite() {
        return Err(CliError::NonFinite(path.to_string()));
    }
    Number::from_f64(round_sig(x))
        .map(Value::Number)
        .ok_or_else(|| CliError::NonFinite(path.to_string()))
}

fn key_string(k: &Raw) -> String {
    match k {
        Raw::String(s) => s.clone(),
        Raw::Char(c) => c.to_string(),
        Raw::U8(n) => n.to_string(),
        Raw::U16(n) => n.to_string(),
        Raw::U32(n) => n.to_string(),
        Raw::U64(n) => n.to_string(),
        Raw::I8(n) => n.to_string(),
        Raw::I16(n) => n.to_string(),
        Raw::I32(n) => n.to_string(),
        Raw::I64(n) => n.to_string(),
        other => format!("{other:?}"),
    }
}

fn convert(v: &Raw, path: &str) -> Result<Value, CliError> {
    Ok(match v {
        Raw::Bool(b) => Value::Bool(*b),
        Raw::U8(n) => Value::from(*n),
        Raw::U16(n) => Value::from(*n),
        Raw::U32(n) => Value::from(*n),
        Raw::U64(n) => Value::from(*n),
        Raw::I8(n) => Value::from(*n),
        Raw::I16(n) => Value::from(*n),
        Raw::I32(n) => Value::from(*n),
        Raw::I64(n) => Value::from(*n),
        Raw::F32(x) => float(f64::from(*x), path)?,
        Raw::F64(x) => float(*x, path)?,
        Raw::Char(c) => Value::String(c.to_string()),
        Raw::String(s) => Value::String(s.clone()),
        Raw::Unit | Raw::Option(None) => Value::Null,
        Raw::Option(Some(inner)) | Raw::Newtype(inner) => convert(inner, path)?,
        Raw::Seq(items) => Value::Array(
            items
                .iter()
                .enumerate()
                .map(|(i, x)| convert(x, &format!("{path}[{i}]")))
                .collect::<Result<_, _>>()?,
        ),
        Raw::Map(entries) => {
            let mut map = Map::new();
            for (k, x) in entries {
                let key = key_string(k);
                let child = convert(x, &format!("{path}.{key}"))?;
                map.insert(key, child);
            }
            Value::Object(map)
        }
        Raw::Bytes(b) => Value::Array(b.iter().map(|x| Value::from(*x)).collect()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_keeps_twelve_digits() {
        assert_eq!(round_sig(0.1 + 0.2), 0.3);
        assert_eq!(round_sig(-0.0), 0.0);
        assert_eq!(round_sig(1.234_567_890_123_4e-7), 1.234_567_890_12e-7);
    }

    #[test]
    fn non_finite_values_are_rejected() {
        assert!(matches!(to_json(&vec![1.0, f64::NAN]), Err(CliError::NonFinite(p)) if p == "$[1]"));
        assert!(to_json(&Some(f64::INFINITY)).is_err());
        assert_eq!(to_json(&None::<f64>).unwrap(), Value::Null);
    }
}
