//! Exact rational numbers and the bridges between them and floating point.
//!
//! Every probability, LP weight and Bell coefficient in the crate is a [`Rat`].
//! Text form is `"num/den"` in lowest terms, or just `"num"` when the
//! denominator is one.

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::{Error, Result};

pub type Rat = BigRational;

pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Canonical text form: lowest terms, positive denominator, no `/1`.
pub fn format_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `"p/q"`, `"p"`, or a finite decimal such as `"-0.125"` or `"1e-3"`.
pub fn parse_rat(s: &str) -> Result<Rat> {
    let t = s.trim();
    let bad = || Error::Input(format!("not a rational number: {s:?}"));
    if t.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(Error::Input(format!("zero denominator in {s:?}")));
        }
        return Ok(Rat::new(n, d));
    }
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => {
            let e: i32 = t[i + 1..].parse().map_err(|_| bad())?;
            (&t[..i], e)
        }
        None => (t, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all: BigInt = format!("{int_part}{frac_part}0").parse::<BigInt>().map_err(|_| bad())? / 10;
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    let mut value = if scale >= 0 {
        Rat::from_integer(all * num_traits::pow(ten, scale as usize))
    } else {
        Rat::new(all, num_traits::pow(ten, (-scale) as usize))
    };
    if neg {
        value = -value;
    }
    Ok(value)
}

pub fn to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // numerator or denominator overflowed f64; divide in scaled integers
        let shift = r.numer().bits().max(r.denom().bits()).saturating_sub(1000);
        let n = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
        let d = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Exact value of a finite `f64`.
pub fn from_f64_exact(v: f64) -> Option<Rat> {
    Rat::from_float(v)
}

/// Best rational approximation of `x` with denominator at most `max_den`
/// (continued-fraction convergents and semiconvergents).
pub fn best_approximation(x: &Rat, max_den: &BigInt) -> Rat {
    if x.denom() <= max_den {
        return x.clone();
    }
    let floor = x.floor();
    let frac = x - &floor;
    // convergents h/k of frac, starting from 1/0 and 0/1
    let (mut h0, mut k0) = (BigInt::one(), BigInt::zero());
    let (mut h1, mut k1) = (BigInt::zero(), BigInt::one());
    let mut rem = frac.clone();
    loop {
        if rem.is_zero() {
            break;
        }
        let inv = rem.recip();
        let a = inv.floor().to_integer();
        let k2 = &a * &k1 + &k0;
        if &k2 > max_den {
            // largest semiconvergent that still fits
            let t = (max_den - &k0) / &k1;
            let hs = &t * &h1 + &h0;
            let ks = &t * &k1 + &k0;
            let semi = Rat::new(hs, ks);
            let conv = Rat::new(h1.clone(), k1.clone());
            let best = if (&semi - &frac).abs() < (&conv - &frac).abs() { semi } else { conv };
            return best + floor;
        }
        let h2 = &a * &h1 + &h0;
        h0 = std::mem::replace(&mut h1, h2);
        k0 = std::mem::replace(&mut k1, k2);
        rem = inv - Rat::from_integer(a);
    }
    Rat::new(h1, k1) + floor
}

/// Simplest rational within relative distance `rel_tol` of `x` (x > 0),
/// found by walking the convergents of `x`.
pub fn approximate_relative(x: &Rat, rel_tol: &Rat) -> Rat {
    let tol = x.abs() * rel_tol;
    let floor = x.floor();
    let frac = x - &floor;
    let (mut h0, mut k0) = (BigInt::one(), BigInt::zero());
    let (mut h1, mut k1) = (BigInt::zero(), BigInt::one());
    if frac <= tol {
        return floor;
    }
    let mut rem = frac.clone();
    loop {
        if rem.is_zero() {
            return x.clone();
        }
        let inv = rem.recip();
        let a = inv.floor().to_integer();
        let h2 = &a * &h1 + &h0;
        let k2 = &a * &k1 + &k0;
        let candidate = Rat::new(h2.clone(), k2.clone()) + &floor;
        if (&candidate - x).abs() <= tol {
            return candidate;
        }
        h0 = std::mem::replace(&mut h1, h2);
        k0 = std::mem::replace(&mut k1, k2);
        rem = inv - Rat::from_integer(a);
    }
}

/// Fixed-point real arithmetic on `BigInt` mantissas scaled by `2^bits`.
/// Used to evaluate irrational constants far beyond `f64` precision before
/// they are frozen into rationals.
#[derive(Clone, Debug)]
pub struct Fixed {
    pub mantissa: BigInt,
    pub bits: u32,
}

impl Fixed {
    pub fn from_rat(r: &Rat, bits: u32) -> Fixed {
        let scaled = r * Rat::from_integer(BigInt::one() << bits);
        Fixed { mantissa: scaled.floor().to_integer(), bits }
    }

    pub fn to_rat(&self) -> Rat {
        Rat::new(self.mantissa.clone(), BigInt::one() << self.bits)
    }

    fn one(bits: u32) -> BigInt {
        BigInt::one() << bits
    }

    fn mul(&self, other: &Fixed) -> Fixed {
        Fixed { mantissa: (&self.mantissa * &other.mantissa) >> self.bits, bits: self.bits }
    }

    /// Square root of a nonnegative rational, truncated.
    pub fn sqrt_rat(r: &Rat, bits: u32) -> Fixed {
        // floor(sqrt(r * 2^(2 bits)))
        let scaled = r * Rat::from_integer(BigInt::one() << (2 * bits));
        let n = scaled.floor().to_integer();
        let root = match n.sign() {
            Sign::Minus => BigInt::zero(),
            _ => BigInt::from_biguint(Sign::Plus, n.magnitude().sqrt()),
        };
        Fixed { mantissa: root, bits }
    }

    /// ln 2 = sum_{k>=1} 1 / (k 2^k).
    pub fn ln2(bits: u32) -> Fixed {
        let work = bits + 16;
        let one = Self::one(work);
        let mut sum = BigInt::zero();
        let mut k = 1u32;
        loop {
            let term = &one / (BigInt::from(k) << k);
            if term.is_zero() {
                break;
            }
            sum += term;
            k += 1;
        }
        Fixed { mantissa: sum >> 16, bits }
    }

    /// e^t for 0 <= t, by halving until t < 1, a Taylor series, and squaring back.
    pub fn exp(&self) -> Fixed {
        let work = self.bits + 64;
        let mut t = Fixed { mantissa: self.mantissa.clone() << 64, bits: work };
        let one = Self::one(work);
        let mut halvings = 0u32;
        while t.mantissa > one {
            t.mantissa >>= 1;
            halvings += 1;
        }
        let mut sum = one.clone();
        let mut term = one.clone();
        let mut k = 1u32;
        loop {
            term = ((&term * &t.mantissa) >> work) / BigInt::from(k);
            if term.is_zero() {
                break;
            }
            sum += &term;
            k += 1;
        }
        let mut acc = Fixed { mantissa: sum, bits: work };
        for _ in 0..halvings {
            acc = acc.mul(&acc);
        }
        Fixed { mantissa: acc.mantissa >> 64, bits: self.bits }
    }
}

/// A rationalized irrational constant together with a bound on its error.
#[derive(Clone, Debug, PartialEq)]
pub struct Rationalized {
    pub value: Rat,
    /// Upper bound on |value - true value|.
    pub abs_error_bound: Rat,
}

/// 2^(sqrt(radicand) * factor) for rational `radicand >= 0` and `factor >= 0`,
/// rationalized to relative precision `rel_tol`.
pub fn pow2_of_sqrt(radicand: &Rat, factor: &Rat, rel_tol: &Rat) -> Rationalized {
    let bits = 256u32;
    let root = Fixed::sqrt_rat(radicand, bits);
    let exponent = root.mul(&Fixed::from_rat(factor, bits));
    let ln2 = Fixed::ln2(bits);
    let hi_precision = exponent.mul(&ln2).exp().to_rat();
    // each fixed-point step truncates by at most a few units in the last place,
    // amplified by the exponential; 2^-200 covers the chain for exponents < 2^40
    let fixed_err = Rat::new(BigInt::one(), BigInt::one() << 200u32) * &hi_precision;
    let value = approximate_relative(&hi_precision, rel_tol);
    let abs_error_bound = (&value - &hi_precision).abs() + fixed_err;
    Rationalized { value, abs_error_bound }
}

pub fn is_power_of_two(n: usize) -> bool {
    n >= 1 && n.is_power_of_two()
}

/// ceil(log2(n)) for n >= 1.
pub fn ceil_log2(n: u128) -> u32 {
    if n <= 1 {
        0
    } else {
        128 - (n - 1).leading_zeros()
    }
}

pub fn big_pow2(k: u32) -> BigInt {
    BigInt::one() << k
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_text() {
        assert_eq!(format_rat(&rat(2, 4)), "1/2");
        assert_eq!(format_rat(&rat(4, 2)), "2");
        assert_eq!(format_rat(&rat(-3, 6)), "-1/2");
        assert_eq!(format_rat(&rat(0, 5)), "0");
    }

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rat("3/6").unwrap(), rat(1, 2));
        assert_eq!(parse_rat("-7").unwrap(), int(-7));
        assert_eq!(parse_rat("0.25").unwrap(), rat(1, 4));
        assert_eq!(parse_rat("-1.5e-1").unwrap(), rat(-3, 20));
        assert_eq!(parse_rat(".5").unwrap(), rat(1, 2));
        assert_eq!(parse_rat("2e3").unwrap(), int(2000));
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("abc").is_err());
        assert!(parse_rat("").is_err());
    }

    #[test]
    fn best_approximation_of_pi_digits() {
        let pi = parse_rat("3.14159265358979").unwrap();
        assert_eq!(best_approximation(&pi, &BigInt::from(10)), rat(22, 7));
        assert_eq!(best_approximation(&pi, &BigInt::from(200)), rat(355, 113));
    }

    #[test]
    fn ln2_and_exp() {
        let ln2 = to_f64(&Fixed::ln2(128).to_rat());
        assert!((ln2 - std::f64::consts::LN_2).abs() < 1e-15);
        let e = to_f64(&Fixed::from_rat(&int(1), 128).exp().to_rat());
        assert!((e - std::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn pow2_sqrt_matches_float() {
        let r = pow2_of_sqrt(&int(3), &rat(1, 2), &rat(1, 1_000_000_000_000_000));
        let expect = 2f64.powf(3f64.sqrt() / 2.0);
        assert!((to_f64(&r.value) - expect).abs() < 1e-14);
        assert!(r.abs_error_bound <= &r.value * rat(1, 1_000_000_000_000_000) * int(2));
    }

    #[test]
    fn ceil_log2_values() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(3), 2);
        assert_eq!(ceil_log2(4), 2);
        assert_eq!(ceil_log2(5), 3);
    }
}
