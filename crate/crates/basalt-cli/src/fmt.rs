//! Stable float formatting for CSV output: six significant digits, '.'
//! decimal separator, fixed notation for exponents in [-4, 6) and
//! scientific notation outside. Byte-identical across runs and platforms.

pub fn sig6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.5e}")
    }
}

/// Compact parameter formatting for file names and identifier columns.
pub fn compact(x: f64) -> String {
    let s = format!("{x}");
    s.replace('.', "p")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats_are_stable() {
        assert_eq!(sig6(0.105028), "0.105028");
        assert_eq!(sig6(99.9999), "99.9999");
        assert_eq!(sig6(467.105), "467.105");
        assert_eq!(sig6(5.87032e-11), "5.87032e-11");
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(f64::NAN), "nan");
        assert_eq!(sig6(1.0), "1.00000");
        assert_eq!(sig6(-0.25), "-0.250000");
        assert_eq!(sig6(123456.0), "123456");
        assert_eq!(sig6(1234567.0), "1.23457e6");
    }
}
