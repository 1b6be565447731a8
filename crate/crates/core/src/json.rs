//! Number formatting shared by every JSON artifact.

/// Rounds to 12 significant digits so serialized reals are stable across
/// runs and platforms. Negative zero is folded to zero.
pub fn sig12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x.is_finite() { 0.0 } else { x };
    }
    let r: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

pub(crate) fn ser_sig12<S: serde::Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(sig12(*x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounds_to_twelve_digits() {
        assert_eq!(sig12(std::f64::consts::PI).to_string(), "3.14159265359");
        assert_eq!(sig12(-0.0), 0.0);
        assert_eq!(sig12(1.0 / 3.0).to_string(), "0.333333333333");
        assert_eq!(sig12(1e-20 / 3.0), 3.33333333333e-21);
    }
}
