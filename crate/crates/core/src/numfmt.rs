/// Formats `v` with 12 significant digits, fixed notation for moderate
/// magnitudes and exponent notation otherwise. Parses back with `str::parse`.
pub fn sig(v: f64) -> String {
    const DIGITS: i32 = 12;
    if !v.is_finite() {
        return format!("{v}");
    }
    let v = if v == 0.0 { 0.0 } else { v };
    let mag = if v == 0.0 { 0 } else { v.abs().log10().floor() as i32 };
    if (-4..DIGITS).contains(&mag) {
        let decimals = (DIGITS - 1 - mag).max(0) as usize;
        format!("{v:.decimals$}")
    } else {
        format!("{:.*e}", (DIGITS - 1) as usize, v)
    }
}

#[cfg(test)]
mod tests {
    use super::sig;

    #[test]
    fn keeps_twelve_digits() {
        assert_eq!(sig(150.0), "150.000000000");
        assert_eq!(sig(-12.0), "-12.0000000000");
        assert_eq!(sig(0.0), "0.00000000000");
        assert_eq!(sig(-0.0), "0.00000000000");
        assert_eq!(sig(1.5e-7), "1.50000000000e-7");
        for v in [144.712345678912, -0.00123456789012, 3.0e15] {
            let back: f64 = sig(v).parse().unwrap();
            assert!((back - v).abs() <= 1e-11 * v.abs());
        }
    }
}
