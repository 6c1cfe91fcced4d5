//! Serialization helpers shared by every report type.

use serde::Serializer;

use crate::scalar::Scalar;

/// Serializes a real as a JSON number, or as `"inf"`, `"-inf"`, `"nan"`
/// when it is not finite.
pub fn real<S: Scalar, Ser: Serializer>(x: &S, ser: Ser) -> Result<Ser::Ok, Ser::Error> {
    let v = x.as_f64();
    if v.is_finite() {
        ser.serialize_f64(v)
    } else {
        ser.serialize_str(&fmt_real(v))
    }
}

pub fn reals<S: Scalar, Ser: Serializer>(xs: &[S], ser: Ser) -> Result<Ser::Ok, Ser::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = ser.serialize_seq(Some(xs.len()))?;
    for x in xs {
        seq.serialize_element(&Real(*x))?;
    }
    seq.end()
}

/// Wrapper giving any scalar the [`real`] serialization.
#[derive(Clone, Copy, Debug)]
pub struct Real<S>(pub S);

impl<S: Scalar> serde::Serialize for Real<S> {
    fn serialize<Ser: Serializer>(&self, ser: Ser) -> Result<Ser::Ok, Ser::Error> {
        real(&self.0, ser)
    }
}

/// Text form used in CSV cells and JSON strings.
pub fn fmt_real(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_finite_values_become_strings() {
        assert_eq!(serde_json::to_string(&Real(f64::NEG_INFINITY)).unwrap(), "\"-inf\"");
        assert_eq!(serde_json::to_string(&Real(0.5_f32)).unwrap(), "0.5");
        assert_eq!(fmt_real(1.25), "1.25");
    }
}
