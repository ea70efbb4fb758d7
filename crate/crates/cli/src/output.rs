//! Byte-stable JSON: floats are always written with 17 significant digits.

use std::io;

use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter};

pub const SCHEMA: &str = "betti-lab/1";

struct FixedFloats;

impl Formatter for FixedFloats {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Compact JSON with fixed float formatting and a trailing newline.
pub fn to_json<S: Serialize>(value: &S) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloats);
    value.serialize(&mut ser).expect("JSON values always serialize");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

/// Same, but via `CompactFormatter`; kept for cache files where the
/// shortest round-trip form is preferable.
pub fn to_json_roundtrip<S: Serialize>(value: &S) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, CompactFormatter);
    value.serialize(&mut ser).expect("JSON values always serialize");
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_seventeen_digits() {
        assert_eq!(to_json(&serde_json::json!({"a": 0.1, "b": 2})), "{\"a\":1.0000000000000001e-1,\"b\":2}\n");
        let back: serde_json::Value = serde_json::from_str(&to_json(&serde_json::json!([1.0 / 3.0]))).unwrap();
        assert_eq!(back[0].as_f64().unwrap(), 1.0 / 3.0);
    }
}
