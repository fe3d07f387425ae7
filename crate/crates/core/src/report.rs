//! Deterministic numeric rendering shared by the library and the CLI.

/// Formats a value with a fixed number of significant decimal digits.
///
/// Plain decimal notation, no exponent: reports stay byte-stable across
/// runs and are trivially diffable. Zero renders with the same digit
/// count as everything else.
pub fn format_significant(value: f64, digits: usize) -> String {
    assert!(digits > 0);
    if value == 0.0 || !value.is_finite() {
        // -0.0 collapses to 0.
        if !value.is_finite() {
            return value.to_string();
        }
        return format!("{:.*}", digits - 1, 0.0);
    }
    let magnitude = value.abs().log10().floor() as i64;
    // Digits left of the decimal point: magnitude+1 when >= 1, else the
    // leading zeros eat into nothing and all significant digits go right.
    let decimals = (digits as i64 - 1 - magnitude).max(0) as usize;
    let rendered = format!("{value:.decimals$}");
    // Rounding can bump the magnitude (9.99 -> 10.0); re-run once so the
    // digit count stays exact.
    let reparsed: f64 = rendered.parse().unwrap_or(value);
    if reparsed != 0.0 {
        let new_magnitude = reparsed.abs().log10().floor() as i64;
        if new_magnitude != magnitude {
            let decimals = (digits as i64 - 1 - new_magnitude).max(0) as usize;
            return format!("{reparsed:.decimals$}");
        }
    }
    rendered
}

/// Twelve significant digits, the report convention.
pub fn format_value(value: f64) -> String {
    format_significant(value, 12)
}
