//! Deterministic machine-readable output: JSON records with every float
//! printed to 17 significant digits, and CSV streams with the same format.

use spinsemi::Complex64;

/// 17 significant digits, locale-free.
pub fn fnum(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn json_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

pub fn angles_json(theta: f64, phi: f64) -> String {
    format!("{{\"theta\":{},\"phi\":{}}}", fnum(theta), fnum(phi))
}

pub fn complex_json(z: Complex64) -> String {
    format!("{{\"re\":{},\"im\":{}}}", fnum(z.re), fnum(z.im))
}
