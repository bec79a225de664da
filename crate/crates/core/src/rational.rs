//! Exact rational helpers: parsing `p/q` strings, rendering, and the
//! 12-significant-digit decimal convenience form used by the emitters.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

/// Integer as a rational.
pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `num / den` as a rational. Panics if `den == 0`.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn from_usize(n: usize) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `"7"`, `"-3/4"`, `"6/5"` or a finite decimal such as `"2.2"`.
pub fn parse(text: &str) -> Option<Rational> {
    let s = text.trim();
    if s.is_empty() {
        return None;
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Rational::new(n, d));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let negative = whole.starts_with('-');
        let whole_digits = whole.trim_start_matches(['-', '+']);
        if !whole_digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let digits: BigInt = format!("{whole_digits}{frac}").parse().ok()?;
        let den = BigInt::from(10u32).pow(frac.len() as u32);
        let value = Rational::new(digits, den);
        return Some(if negative { -value } else { value });
    }
    s.parse::<BigInt>().ok().map(Rational::from_integer)
}

/// Renders `p/q`, or a bare integer when the denominator is one.
pub fn render(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Exact value rounded to 12 significant digits (round half to even),
/// printed in plain positional notation with trailing zeros removed.
pub fn decimal(q: &Rational) -> String {
    decimal_sig(q, 12)
}

pub fn decimal_sig(q: &Rational, digits: u32) -> String {
    if q.is_zero() {
        return "0".to_string();
    }
    let negative = q.is_negative();
    let x = q.abs();
    let ten = BigInt::from(10u32);

    // exponent e with 10^e <= x < 10^(e+1)
    let mut e: i64 = x.numer().to_string().len() as i64 - x.denom().to_string().len() as i64;
    loop {
        let lo = pow10(e);
        if x < lo {
            e -= 1;
            continue;
        }
        if x >= pow10(e + 1) {
            e += 1;
            continue;
        }
        break;
    }

    // scale so that the integer part carries exactly `digits` digits
    let shift = digits as i64 - 1 - e;
    let scaled = &x * pow10(shift);
    let mut n = round_half_even(&scaled);
    // rounding may carry into an extra digit (e.g. 9.999... -> 10.00...)
    let mut shift = shift;
    if n.to_string().len() as u32 > digits {
        n = round_half_even(&(Rational::from_integer(n) / Rational::from_integer(ten.clone())));
        shift -= 1;
    }

    let mut s = n.to_string();
    let out = if shift <= 0 {
        s.push_str(&"0".repeat((-shift) as usize));
        s
    } else {
        let shift = shift as usize;
        if s.len() <= shift {
            s = format!("{}{}", "0".repeat(shift - s.len() + 1), s);
        }
        let (int_part, frac_part) = s.split_at(s.len() - shift);
        let frac_part = frac_part.trim_end_matches('0');
        if frac_part.is_empty() {
            int_part.to_string()
        } else {
            format!("{int_part}.{frac_part}")
        }
    };
    if negative {
        format!("-{out}")
    } else {
        out
    }
}

fn pow10(e: i64) -> Rational {
    let ten = BigInt::from(10u32);
    if e >= 0 {
        Rational::from_integer(ten.pow(e as u32))
    } else {
        Rational::new(BigInt::one(), ten.pow((-e) as u32))
    }
}

fn round_half_even(x: &Rational) -> BigInt {
    let (q, r) = x.numer().div_mod_floor(x.denom());
    let twice = &r * 2u32;
    match twice.cmp(x.denom()) {
        std::cmp::Ordering::Less => q,
        std::cmp::Ordering::Greater => q + 1u32,
        std::cmp::Ordering::Equal => {
            if q.is_even() {
                q
            } else {
                q + 1u32
            }
        }
    }
}

pub fn min(a: &Rational, b: &Rational) -> Rational {
    if a <= b {
        a.clone()
    } else {
        b.clone()
    }
}
