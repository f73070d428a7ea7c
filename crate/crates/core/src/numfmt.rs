//! Decimal rendering of results.

/// Shortest-round-trip width for `f64`.
pub const F64_DIGITS: usize = 17;

/// `x` with 17 significant digits in positional notation; `nan`/`inf` for
/// non-finite values.
pub fn sig17(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let s = format!("{:.*e}", F64_DIGITS - 1, x);
    round_decimal_string(&s, F64_DIGITS).unwrap_or(s)
}

/// Rounds a decimal string like `-1.2345e+1` to `digits` significant digits
/// and renders it positionally.
pub fn round_decimal_string(s: &str, digits: usize) -> Option<String> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (mantissa, exp) = match body.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i64>().ok()?),
        None => (body, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    let mut all: Vec<u8> = int_part.bytes().chain(frac_part.bytes()).collect();
    if all.iter().any(|c| !c.is_ascii_digit()) || all.is_empty() {
        return None;
    }
    // Position of the decimal point relative to the start of `all`.
    let mut point = int_part.len() as i64 + exp;
    let lead = all.iter().position(|&c| c != b'0');
    let Some(lead) = lead else {
        return Some("0".into());
    };
    all.drain(..lead);
    point -= lead as i64;

    let mut kept: Vec<u8> = all.iter().take(digits).map(|c| c - b'0').collect();
    kept.resize(digits, 0);
    if all.len() > digits && all[digits] >= b'5' {
        let mut i = digits;
        loop {
            if i == 0 {
                kept.insert(0, 1);
                kept.pop();
                point += 1;
                break;
            }
            i -= 1;
            if kept[i] == 9 {
                kept[i] = 0;
            } else {
                kept[i] += 1;
                break;
            }
        }
    }
    let text: String = kept.iter().map(|d| (b'0' + d) as char).collect();
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    if point <= 0 {
        out.push_str("0.");
        out.extend(std::iter::repeat('0').take((-point) as usize));
        out.push_str(&text);
    } else if point as usize >= text.len() {
        out.push_str(&text);
        out.extend(std::iter::repeat('0').take(point as usize - text.len()));
    } else {
        out.push_str(&text[..point as usize]);
        out.push('.');
        out.push_str(&text[point as usize..]);
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_rounding() {
        assert_eq!(round_decimal_string("1.23456e+0", 3).unwrap(), "1.23");
        assert_eq!(round_decimal_string("1.23556e+0", 3).unwrap(), "1.24");
        assert_eq!(round_decimal_string("9.996e+1", 3).unwrap(), "100");
        assert_eq!(round_decimal_string("-2.5e-3", 2).unwrap(), "-0.0025");
        assert_eq!(round_decimal_string("4.5e+3", 1).unwrap(), "5000");
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [4.349345046141503, 1e-13, -0.1, 12345.678, 3.0] {
            let s = sig17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(sig17(0.5), "0.50000000000000000");
        assert_eq!(sig17(f64::NAN), "nan");
    }
}
