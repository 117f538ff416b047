//! Number formatting shared by every table.

/// `x` rounded to four significant digits.
pub fn ratio(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let digits = |v: f64| (3 - v.abs().log10().floor() as i32).max(0) as usize;
    let first = format!("{x:.prec$}", prec = digits(x));
    let rounded: f64 = first.parse().expect("formatted float parses");
    if digits(rounded) == digits(x) {
        return if digits(x) == 0 { integer_sig4(x) } else { first };
    }
    let prec = digits(rounded);
    if prec == 0 {
        integer_sig4(x)
    } else {
        format!("{x:.prec$}")
    }
}

fn integer_sig4(x: f64) -> String {
    let mag = x.abs().log10().floor() as i32;
    let scale = 10f64.powi(mag - 3);
    format!("{:.0}", (x / scale).round() * scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_significant_digits() {
        assert_eq!(ratio(9.56921), "9.569");
        assert_eq!(ratio(1.0), "1.000");
        assert_eq!(ratio(0.90512), "0.9051");
        assert_eq!(ratio(12.3456), "12.35");
        assert_eq!(ratio(0.000123456), "0.0001235");
        assert_eq!(ratio(9.99961), "10.00");
        assert_eq!(ratio(123456.0), "123500");
        assert_eq!(ratio(0.0), "0");
    }
}
