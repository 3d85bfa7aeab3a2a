//! JSON and CSV number formatting.
//!
//! All exported files print doubles with 17 significant digits so values
//! round-trip bit-exactly and repeated runs diff byte-identically.

use serde::Serialize;
use serde_json::ser::Formatter;
use std::io;

/// 17 significant digits: one leading digit plus 16 after the point.
pub fn fmt_f64(x: f64) -> String {
    debug_assert!(x.is_finite(), "non-finite value in output: {x}");
    format!("{x:.16e}")
}

struct SigDigitFormatter;

impl Formatter for SigDigitFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Serialize any value to JSON with the 17-digit float policy.
pub fn to_json_string<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut out = Vec::with_capacity(256);
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigDigitFormatter);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(out).expect("serde_json emits UTF-8"))
}
