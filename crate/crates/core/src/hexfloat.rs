//! Bit-exact text encoding of `f64` in C99 `%a` style (`0x1.8p+1`).

use crate::error::{Error, Result};

pub fn format_hex(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    let sign = if x.is_sign_negative() { "-" } else { "" };
    if x.is_infinite() {
        return format!("{sign}inf");
    }
    let bits = x.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    if biased == 0 && frac == 0 {
        return format!("{sign}0x0p+0");
    }
    let (lead, exp) = if biased == 0 { (0, -1022) } else { (1, biased - 1023) };
    let mut digits = format!("{frac:013x}");
    while digits.ends_with('0') {
        digits.pop();
    }
    let dot = if digits.is_empty() { "" } else { "." };
    format!("{sign}0x{lead}{dot}{digits}p{exp:+}")
}

pub fn parse_hex(s: &str) -> Result<f64> {
    let bad = || Error::Parse(format!("invalid hex float {s:?}"));
    let t = s.trim();
    let (negative, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let signed = |v: f64| if negative { -v } else { v };
    match body.to_ascii_lowercase().as_str() {
        "inf" | "infinity" => return Ok(signed(f64::INFINITY)),
        "nan" => return Ok(f64::NAN),
        _ => {}
    }
    let body = body.strip_prefix("0x").or_else(|| body.strip_prefix("0X")).ok_or_else(bad)?;
    let (mantissa, exp) = body.split_once(['p', 'P']).ok_or_else(bad)?;
    let exp: i64 = exp.parse().map_err(|_| bad())?;
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    let mut m: u128 = 0;
    let mut scale: i64 = exp;
    let mut sticky = false;
    for (i, ch) in int_part.chars().chain(frac_part.chars()).enumerate() {
        let digit = ch.to_digit(16).ok_or_else(bad)? as u128;
        if i >= int_part.len() {
            scale -= 4;
        }
        if m >> 120 == 0 {
            m = (m << 4) | digit;
        } else {
            // Mantissa already holds far more than 53 bits; keep only
            // whether anything nonzero was dropped, and the magnitude.
            sticky |= digit != 0;
            scale += 4;
        }
    }
    if m == 0 {
        return Ok(signed(0.0));
    }
    Ok(signed(round_to_f64(m, scale, sticky).ok_or_else(|| Error::Parse(format!("{s:?} overflows f64")))?))
}

/// Correctly rounded (ties to even) `m * 2^scale`; `sticky` marks nonzero
/// bits already discarded below `m`.
fn round_to_f64(m: u128, scale: i64, sticky: bool) -> Option<f64> {
    let nb = i64::from(128 - m.leading_zeros());
    let top = nb - 1 + scale;
    let precision = if top >= -1022 { 53 } else { 53 - (-1022 - top) };
    let shift = nb - precision;
    let (mut q, mut k) = (m, scale);
    if shift > 0 {
        if shift > 127 {
            q = 0;
        } else {
            let half = 1u128 << (shift - 1);
            let rem = m & ((half << 1) - 1);
            q = m >> shift;
            if rem > half || (rem == half && (sticky || q & 1 == 1)) {
                q += 1;
            }
        }
        k += shift;
    }
    if q == 0 {
        return Some(0.0);
    }
    let qb = i64::from(128 - q.leading_zeros());
    if qb - 1 + k > 1023 {
        return None;
    }
    // q has at most 54 bits, so the conversion is exact; scale in two exact
    // steps to keep intermediates normal.
    let mut x = q as f64;
    let first = k.clamp(-1000, 1000);
    x *= 2f64.powi(first as i32);
    x *= 2f64.powi((k - first) as i32);
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_encodings() {
        assert_eq!(format_hex(3.0), "0x1.8p+1");
        assert_eq!(format_hex(1.0), "0x1p+0");
        assert_eq!(format_hex(-0.1), "-0x1.999999999999ap-4");
        assert_eq!(format_hex(0.0), "0x0p+0");
        assert_eq!(format_hex(-0.0), "-0x0p+0");
        assert_eq!(format_hex(f64::MIN_POSITIVE), "0x1p-1022");
        assert_eq!(format_hex(f64::from_bits(1)), "0x0.0000000000001p-1022");
        assert_eq!(format_hex(f64::MAX), "0x1.fffffffffffffp+1023");
        assert_eq!(format_hex(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn parses_loose_forms() {
        assert_eq!(parse_hex("0x1.8p+1").unwrap(), 3.0);
        assert_eq!(parse_hex(" 0X18P-3 ").unwrap(), 3.0);
        assert_eq!(parse_hex("0x.8p1").unwrap(), 1.0);
        assert_eq!(parse_hex("+0x3p0").unwrap(), 3.0);
        assert_eq!(parse_hex("-0x0p+0").unwrap().to_bits(), (-0.0f64).to_bits());
        assert!(parse_hex("nan").unwrap().is_nan());
        assert_eq!(parse_hex("-inf").unwrap(), f64::NEG_INFINITY);
        // 2^-1075 is exactly half the smallest subnormal: ties to even (zero).
        assert_eq!(parse_hex("0x1p-1075").unwrap(), 0.0);
        assert_eq!(parse_hex("0x1.0000001p-1075").unwrap(), f64::from_bits(1));
        assert_eq!(parse_hex("0x1.00000000000008p+0").unwrap(), 1.0);
        assert_eq!(parse_hex("0x1.00000000000018p+0").unwrap(), 1.0 + 2.0 * f64::EPSILON);
        assert_eq!(parse_hex("0x1.000000000000080000000000000000000001p+0").unwrap(), 1.0 + f64::EPSILON);
        assert_eq!(parse_hex("0x1.fffffffffffff8p+1023").ok(), None);
        for s in ["", "0x", "0xp1", "1.5", "0x1.8", "0x1.gp0", "0x1p", "--0x1p0"] {
            assert!(parse_hex(s).is_err(), "{s}");
        }
    }

    proptest! {
        #[test]
        fn round_trips_every_bit_pattern(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            let y = parse_hex(&format_hex(x)).unwrap();
            if x.is_nan() {
                prop_assert!(y.is_nan());
            } else {
                prop_assert_eq!(x.to_bits(), y.to_bits());
            }
        }

        #[test]
        fn agrees_with_exact_scaling(m in 1u64..(1 << 53), e in -1074i32..971) {
            let s = format!("0x{m:x}p{e}");
            let expect = m as f64 * 2f64.powi(e.max(-1000)) * 2f64.powi(e - e.max(-1000));
            prop_assert_eq!(parse_hex(&s).unwrap(), expect);
        }
    }
}
