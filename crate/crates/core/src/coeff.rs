//! Coefficient fields for the polynomial engine.
//!
//! Exact work uses [`Q`]; the numeric charts reuse the same algorithms over `f64`.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Arithmetic needed by the engine, by reference to avoid cloning big integers.
pub trait Coeff: Clone + PartialEq + Debug + Send + Sync + 'static {
    /// True when arithmetic is exact, so cancellations produce literal zeros.
    const EXACT: bool;
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn add_ref(&self, o: &Self) -> Self;
    fn sub_ref(&self, o: &Self) -> Self;
    fn mul_ref(&self, o: &Self) -> Self;
    fn div_ref(&self, o: &Self) -> Self;
    fn neg_ref(&self) -> Self;
    fn add_assign_ref(&mut self, o: &Self);
    fn from_q(q: &Q) -> Self;
    fn from_i64(i: i64) -> Self;
    fn to_f64(&self) -> f64;
}

impl Coeff for Q {
    const EXACT: bool = true;
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add_ref(&self, o: &Self) -> Self {
        self + o
    }
    fn sub_ref(&self, o: &Self) -> Self {
        self - o
    }
    fn mul_ref(&self, o: &Self) -> Self {
        self * o
    }
    fn div_ref(&self, o: &Self) -> Self {
        self / o
    }
    fn neg_ref(&self) -> Self {
        -self
    }
    fn add_assign_ref(&mut self, o: &Self) {
        *self += o;
    }
    fn from_q(q: &Q) -> Self {
        q.clone()
    }
    fn from_i64(i: i64) -> Self {
        qi(i)
    }
    fn to_f64(&self) -> f64 {
        q_to_f64(self)
    }
}

impl Coeff for f64 {
    const EXACT: bool = false;
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn add_ref(&self, o: &Self) -> Self {
        self + o
    }
    fn sub_ref(&self, o: &Self) -> Self {
        self - o
    }
    fn mul_ref(&self, o: &Self) -> Self {
        self * o
    }
    fn div_ref(&self, o: &Self) -> Self {
        self / o
    }
    fn neg_ref(&self) -> Self {
        -self
    }
    fn add_assign_ref(&mut self, o: &Self) {
        *self += o;
    }
    fn from_q(q: &Q) -> Self {
        q_to_f64(q)
    }
    fn from_i64(i: i64) -> Self {
        i as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

/// Correctly scaled conversion that survives numerators beyond the f64 range.
pub fn q_to_f64(x: &Q) -> f64 {
    if let (Some(n), Some(d)) = (x.numer().to_f64(), x.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    let nb = x.numer().bits() as i64;
    let db = x.denom().bits() as i64;
    let shift = nb - db - 60;
    let (n, d) = if shift > 0 {
        (x.numer().clone(), x.denom().clone() << shift as usize)
    } else {
        (x.numer().clone() << (-shift) as usize, x.denom().clone())
    };
    let r = (&n / &d).to_f64().unwrap_or(0.0);
    r * 2f64.powi(shift as i32)
}

/// Best rational approximation with denominator at most `max_den` (continued fractions).
pub fn rationalize(x: f64, max_den: u64) -> Q {
    if x == 0.0 || !x.is_finite() {
        return <Q as Zero>::zero();
    }
    let neg = x < 0.0;
    let mut v = x.abs();
    let (mut p0, mut q0, mut p1, mut q1) = (0u128, 1u128, 1u128, 0u128);
    for _ in 0..64 {
        let a = v.floor();
        if a > 1e18 {
            break;
        }
        let a = a as u128;
        let p2 = a * p1 + p0;
        let q2 = a * q1 + q0;
        if q2 > max_den as u128 {
            break;
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        let frac = v - a as f64;
        if frac < 1e-300 || (p1 as f64 / q1 as f64 - x.abs()).abs() <= f64::EPSILON * x.abs() {
            break;
        }
        v = 1.0 / frac;
    }
    let r = Q::new(BigInt::from(p1), BigInt::from(q1));
    if neg {
        -r
    } else {
        r
    }
}

/// Exact rational cube root, if one exists.
pub fn exact_cbrt(x: &Q) -> Option<Q> {
    if x.is_negative() {
        return exact_cbrt(&-x).map(|r| -r);
    }
    let n = x.numer().cbrt();
    let d = x.denom().cbrt();
    if &(&n * &n * &n) == x.numer() && &(&d * &d * &d) == x.denom() {
        Some(Q::new(n, d))
    } else {
        None
    }
}

pub fn q_to_string(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn q_from_str(s: &str) -> Option<Q> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                None
            } else {
                Some(Q::new(n, d))
            }
        }
        None => s.parse::<BigInt>().ok().map(Q::from_integer),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationalize_simple() {
        assert_eq!(rationalize(0.25, 1000), q(1, 4));
        assert_eq!(rationalize(-1.5, 1000), q(-3, 2));
        let r = rationalize(std::f64::consts::PI, 1000);
        assert_eq!(r, q(355, 113));
    }

    #[test]
    fn cube_roots() {
        assert_eq!(exact_cbrt(&q(8, 27)), Some(q(2, 3)));
        assert_eq!(exact_cbrt(&qi(2)), None);
        assert_eq!(exact_cbrt(&qi(-64)), Some(qi(-4)));
    }

    #[test]
    fn string_round_trip() {
        for x in [q(3, 32), qi(-7), q(-8, 7195)] {
            assert_eq!(q_from_str(&q_to_string(&x)), Some(x));
        }
    }

    #[test]
    fn huge_rational_to_f64() {
        let big = Q::new(BigInt::from(10).pow(400), BigInt::from(10).pow(399) * 4);
        assert!((q_to_f64(&big) - 2.5).abs() < 1e-15);
    }
}
