//! Locale-independent number formatting shared by the CSV/JSON writers.

/// 17 significant digits, fixed notation for moderate magnitudes.
pub fn f64_sig17(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if (-5..16).contains(&mag) {
        let decimals = (16 - mag).max(0) as usize;
        let s = format!("{x:.decimals$}");
        trim_zeros(&s)
    } else {
        format!("{x:.16e}")
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats() {
        assert_eq!(f64_sig17(0.0), "0");
        assert_eq!(f64_sig17(1.5), "1.5");
        assert_eq!(f64_sig17(1.170820393249937), "1.170820393249937");
        assert_eq!(f64_sig17(0.1), "0.10000000000000001");
        assert_eq!(f64_sig17(-2.5e-9), "-2.5000000000000001e-9");
        assert_eq!(f64_sig17(1e20), "1.0000000000000000e20");
    }
}
