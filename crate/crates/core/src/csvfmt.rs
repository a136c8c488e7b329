//! Fixed number formatting for every CSV and report the toolkit writes.

/// Nine significant digits in scientific notation.
pub fn num(x: f64) -> String {
    format!("{:.8e}", x)
}

/// Joins already formatted cells into one CSV line (no trailing newline).
pub fn row(cells: &[f64]) -> String {
    cells.iter().map(|&c| num(c)).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(num(1.0), "1.00000000e0");
        assert_eq!(num(-2.5e-7), "-2.50000000e-7");
        assert_eq!(num(123456789.123), "1.23456789e8");
        assert_eq!(row(&[1.0, 2.0]), "1.00000000e0,2.00000000e0");
    }
}
