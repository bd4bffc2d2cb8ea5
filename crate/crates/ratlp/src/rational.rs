//! Arbitrary-precision rationals and the small helpers the solver needs.

use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

/// Exact rational number. The denominator is always positive and coprime to
/// the numerator.
pub type Rational = num_rational::BigRational;

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Least common multiple of the denominators of `values` (1 for an empty
/// slice).
pub fn denominator_lcm<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

/// Formats as `p/q`, including `/1` for integers.
pub fn to_fraction_string(v: &Rational) -> String {
    format!("{}/{}", v.numer(), v.denom())
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational literal `{0}`")]
pub struct ParseRationalError(pub String);

/// Parses `p`, `-p` or `p/q`.
pub fn parse_rational(text: &str) -> Result<Rational, ParseRationalError> {
    let err = || ParseRationalError(text.to_string());
    let text = text.trim();
    match text.split_once('/') {
        Some((n, d)) => {
            let n = BigInt::from_str(n.trim()).map_err(|_| err())?;
            let d = BigInt::from_str(d.trim()).map_err(|_| err())?;
            if d.is_zero() {
                return Err(err());
            }
            Ok(Rational::new(n, d))
        }
        None => BigInt::from_str(text)
            .map(Rational::from_integer)
            .map_err(|_| err()),
    }
}

/// Scales a row of rationals to coprime integers with the same sign pattern.
pub fn primitive_integer_row(values: &[Rational]) -> Vec<BigInt> {
    let l = denominator_lcm(values);
    let ints: Vec<BigInt> = values
        .iter()
        .map(|v| (v * Rational::from_integer(l.clone())).to_integer())
        .collect();
    let g = ints
        .iter()
        .fold(BigInt::zero(), |acc, v| acc.gcd(v));
    if g.is_zero() || g.is_one() {
        return ints;
    }
    ints.into_iter().map(|v| v / &g).collect()
}

pub fn is_integral(v: &Rational) -> bool {
    v.is_integer()
}

pub fn abs(v: &Rational) -> Rational {
    v.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format() {
        assert_eq!(parse_rational("3/6").unwrap(), ratio(1, 2));
        assert_eq!(parse_rational("-4").unwrap(), rat(-4));
        assert_eq!(to_fraction_string(&ratio(-2, 4)), "-1/2");
        assert_eq!(to_fraction_string(&rat(3)), "3/1");
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn lcm_of_denominators() {
        let vals = [ratio(1, 2), ratio(2, 3), rat(5)];
        assert_eq!(denominator_lcm(&vals), BigInt::from(6));
        assert_eq!(denominator_lcm(&[]), BigInt::from(1));
    }

    #[test]
    fn primitive_rows() {
        let row = [ratio(1, 2), ratio(-3, 2), rat(0)];
        assert_eq!(
            primitive_integer_row(&row),
            vec![BigInt::from(1), BigInt::from(-3), BigInt::from(0)]
        );
    }
}
