//! Number formatting shared by the CSV writers.

/// Formats `x` with 12 significant digits, `.` as decimal separator and no
/// trailing zeros. Very large or very small magnitudes switch to exponent form.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let exponent = x.abs().log10().floor() as i32;
    if !(-5..15).contains(&exponent) {
        let s = format!("{x:.11e}");
        let (mantissa, exp) = s.split_once('e').expect("exponent form");
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    let decimals = (11 - exponent).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
