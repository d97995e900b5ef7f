//! Output formatting shared by the emitters: stable 6-significant-digit
//! floating-point rendering so re-runs are byte-identical.

/// Formats with `digits` significant digits, plain decimal for moderate
/// exponents and scientific notation otherwise.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let exp = x.abs().log10().floor() as i32;
    let decimals = digits as i32 - 1 - exp;
    if (-4..=9).contains(&exp) && decimals >= 0 {
        format!("{:.*}", decimals as usize, x)
    } else {
        format!("{:.*e}", digits - 1, x)
    }
}

/// Default rendering for CSV cells.
pub fn g6(x: f64) -> String {
    fmt_sig(x, 6)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(g6(1.4524321987), "1.45243");
        assert_eq!(g6(-0.41094567), "-0.410946");
        assert_eq!(g6(0.0), "0");
        assert_eq!(g6(123456.789), "123457");
        assert_eq!(g6(0.000123456789), "0.000123457");
        assert_eq!(g6(1.23456789e12), "1.23457e12");
        assert_eq!(g6(f64::INFINITY), "inf");
    }

    #[test]
    fn deterministic() {
        for i in 0..1000 {
            let x = (i as f64) * 0.137 - 3.0;
            assert_eq!(g6(x), g6(x));
        }
    }
}
