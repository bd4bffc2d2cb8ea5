//! Tableau scalar: a reduced `i64` fraction that falls back to an arbitrary
//! precision rational on overflow.

use std::cmp::Ordering;
use std::ops::{Div, DivAssign, Mul, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::rational::Rational;

#[derive(Debug, Clone)]
pub(crate) enum Q {
    /// Numerator and positive denominator, coprime.
    Small(i64, i64),
    Big(Rational),
}

impl Q {
    pub fn zero() -> Q {
        Q::Small(0, 1)
    }

    pub fn one() -> Q {
        Q::Small(1, 1)
    }

    fn from_i128(n: i128, d: i128) -> Q {
        let (mut n, mut d) = (n, d);
        if d < 0 {
            n = -n;
            d = -d;
        }
        let g = n.gcd(&d);
        if g > 1 {
            n /= g;
            d /= g;
        }
        match (i64::try_from(n), i64::try_from(d)) {
            (Ok(a), Ok(b)) => Q::Small(a, b),
            _ => Q::Big(Rational::new_raw(BigInt::from(n), BigInt::from(d))),
        }
    }

    fn from_big(r: Rational) -> Q {
        match (r.numer().to_i64(), r.denom().to_i64()) {
            (Some(n), Some(d)) => Q::Small(n, d),
            _ => Q::Big(r),
        }
    }

    pub fn from_rational(r: &Rational) -> Q {
        Q::from_big(r.clone())
    }

    pub fn to_rational(&self) -> Rational {
        match self {
            Q::Small(n, d) => Rational::new_raw(BigInt::from(*n), BigInt::from(*d)),
            Q::Big(r) => r.clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Q::Small(n, _) => *n == 0,
            Q::Big(r) => r.is_zero(),
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Q::Small(n, d) => *n == 1 && *d == 1,
            Q::Big(r) => r.is_one(),
        }
    }

    pub fn is_positive(&self) -> bool {
        match self {
            Q::Small(n, _) => *n > 0,
            Q::Big(r) => r.is_positive(),
        }
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Q::Small(n, _) => *n < 0,
            Q::Big(r) => r.is_negative(),
        }
    }

    fn combine(
        &self,
        other: &Q,
        small: impl Fn(i128, i128, i128, i128) -> (i128, i128),
        big: impl Fn(Rational, Rational) -> Rational,
    ) -> Q {
        match (self, other) {
            (Q::Small(a, b), Q::Small(c, d)) => {
                let (n, d) = small(*a as i128, *b as i128, *c as i128, *d as i128);
                Q::from_i128(n, d)
            }
            _ => Q::from_big(big(self.to_rational(), other.to_rational())),
        }
    }
}

impl PartialEq for Q {
    fn eq(&self, other: &Q) -> bool {
        match (self, other) {
            (Q::Small(a, b), Q::Small(c, d)) => a == c && b == d,
            _ => self.to_rational() == other.to_rational(),
        }
    }
}

impl Eq for Q {}

impl PartialOrd for Q {
    fn partial_cmp(&self, other: &Q) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Q {
    fn cmp(&self, other: &Q) -> Ordering {
        match (self, other) {
            (Q::Small(a, b), Q::Small(c, d)) => (*a as i128 * *d as i128).cmp(&(*c as i128 * *b as i128)),
            _ => self.to_rational().cmp(&other.to_rational()),
        }
    }
}

impl<'a> Sub<&'a Q> for &'a Q {
    type Output = Q;
    fn sub(self, o: &Q) -> Q {
        self.combine(o, |a, b, c, d| (a * d - c * b, b * d), |x, y| x - y)
    }
}

impl<'a> Mul<&'a Q> for &'a Q {
    type Output = Q;
    fn mul(self, o: &Q) -> Q {
        self.combine(o, |a, b, c, d| (a * c, b * d), |x, y| x * y)
    }
}

impl<'a> Div<&'a Q> for &'a Q {
    type Output = Q;
    fn div(self, o: &Q) -> Q {
        assert!(!o.is_zero(), "division by zero");
        self.combine(o, |a, b, c, d| (a * d, b * c), |x, y| x / y)
    }
}

impl SubAssign<Q> for Q {
    fn sub_assign(&mut self, o: Q) {
        *self = &*self - &o;
    }
}

impl DivAssign<&Q> for Q {
    fn div_assign(&mut self, o: &Q) {
        *self = &*self / o;
    }
}

impl Neg for &Q {
    type Output = Q;
    fn neg(self) -> Q {
        match self {
            Q::Small(n, d) if *n != i64::MIN => Q::Small(-n, *d),
            _ => Q::from_big(-self.to_rational()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;
    use proptest::prelude::*;

    fn big(n: i64, d: i64) -> Rational {
        ratio(n, d)
    }

    proptest! {
        #[test]
        fn agrees_with_bigrational(a in any::<i64>(), b in 1i64..=i64::MAX, c in any::<i64>(), d in 1i64..=i64::MAX) {
            let (x, y) = (big(a, b), big(c, d));
            let (qx, qy) = (Q::from_rational(&x), Q::from_rational(&y));
            prop_assert_eq!((&qx - &qy).to_rational(), &x - &y);
            prop_assert_eq!((&qx * &qy).to_rational(), &x * &y);
            if !y.is_zero() {
                prop_assert_eq!((&qx / &qy).to_rational(), &x / &y);
            }
            prop_assert_eq!(qx.cmp(&qy), x.cmp(&y));
            prop_assert_eq!((-&qx).to_rational(), -x);
        }
    }

    #[test]
    fn overflow_promotes() {
        let m = Q::Small(i64::MAX, 1);
        let p = &m * &m;
        assert!(matches!(p, Q::Big(_)));
        assert_eq!(p.to_rational(), big(i64::MAX, 1) * big(i64::MAX, 1));
        assert!(matches!(&p / &m, Q::Small(i64::MAX, 1)));
    }
}
