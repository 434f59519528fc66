//! The lattice `M = Z^2`, its dual `N`, and exact planar points.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_integer::Integer;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::Rational;

/// An element `(a, b)` of the character lattice `M`; `z^m = z1^a z2^b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct LatticeVec {
    pub a: i64,
    pub b: i64,
}

/// An element `(c, d)` of the dual lattice `N = Hom(M, Z)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct DualVec {
    pub c: i64,
    pub d: i64,
}

impl LatticeVec {
    pub const ZERO: LatticeVec = LatticeVec { a: 0, b: 0 };

    pub const fn new(a: i64, b: i64) -> Self {
        LatticeVec { a, b }
    }

    pub fn is_zero(self) -> bool {
        self.a == 0 && self.b == 0
    }

    /// The primitive normal `n` with `<m, n> = 0` and `{m, n}` positively
    /// oriented, i.e. `m` rotated a quarter turn counterclockwise. Primitive
    /// whenever `m` is.
    pub fn normal(self) -> DualVec {
        DualVec {
            c: -self.b,
            d: self.a,
        }
    }

    /// Counterclockwise quarter turn, kept in `M`.
    pub fn rot90(self) -> LatticeVec {
        LatticeVec {
            a: -self.b,
            b: self.a,
        }
    }

    pub fn gcd(self) -> i64 {
        self.a.gcd(&self.b)
    }

    pub fn is_primitive(self) -> bool {
        self.gcd() == 1
    }

    /// Compares by counterclockwise angle from the positive first axis, then
    /// by length. The zero vector sorts first.
    pub fn angle_cmp(&self, other: &Self) -> Ordering {
        match (self.is_zero(), other.is_zero()) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        angle_from(LatticeVec::new(1, 0), *self, *other).then_with(|| {
            (self.a * self.a + self.b * self.b).cmp(&(other.a * other.a + other.b * other.b))
        })
    }
}

/// Orders two nonzero vectors by the counterclockwise angle they make with
/// `base`, angles taken in `[0, 2π)`.
pub fn angle_from(base: LatticeVec, u: LatticeVec, w: LatticeVec) -> Ordering {
    let half = |v: LatticeVec| {
        let cr = det(base, v);
        if cr > 0 || (cr == 0 && dot(base, v) > 0) {
            0
        } else {
            1
        }
    };
    half(u).cmp(&half(w)).then_with(|| 0.cmp(&det(u, w)))
}

pub fn det(u: LatticeVec, v: LatticeVec) -> i64 {
    u.a * v.b - u.b * v.a
}

pub fn dot(u: LatticeVec, v: LatticeVec) -> i64 {
    u.a * v.a + u.b * v.b
}

impl DualVec {
    pub const fn new(c: i64, d: i64) -> Self {
        DualVec { c, d }
    }

    pub fn is_zero(self) -> bool {
        self.c == 0 && self.d == 0
    }

    /// The same coordinates read as an element of `M` (flat-metric identification).
    pub fn as_lattice(self) -> LatticeVec {
        LatticeVec {
            a: self.c,
            b: self.d,
        }
    }
}

/// The natural pairing `<m, n> = a c + b d`.
pub fn pair(m: LatticeVec, n: DualVec) -> i64 {
    m.a * n.c + m.b * n.d
}

/// Splits `m = g * m0` with `m0` primitive and `g > 0`.
pub fn primitive_part(m: LatticeVec) -> Result<(LatticeVec, i64)> {
    if m.is_zero() {
        return Err(Error::ZeroVector);
    }
    let g = m.gcd();
    Ok((LatticeVec::new(m.a / g, m.b / g), g))
}

impl Add for LatticeVec {
    type Output = LatticeVec;
    fn add(self, o: LatticeVec) -> LatticeVec {
        LatticeVec::new(self.a + o.a, self.b + o.b)
    }
}

impl Sub for LatticeVec {
    type Output = LatticeVec;
    fn sub(self, o: LatticeVec) -> LatticeVec {
        LatticeVec::new(self.a - o.a, self.b - o.b)
    }
}

impl Neg for LatticeVec {
    type Output = LatticeVec;
    fn neg(self) -> LatticeVec {
        LatticeVec::new(-self.a, -self.b)
    }
}

impl Mul<i64> for LatticeVec {
    type Output = LatticeVec;
    fn mul(self, k: i64) -> LatticeVec {
        LatticeVec::new(self.a * k, self.b * k)
    }
}

impl Neg for DualVec {
    type Output = DualVec;
    fn neg(self) -> DualVec {
        DualVec::new(-self.c, -self.d)
    }
}

impl fmt::Display for LatticeVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.a, self.b)
    }
}

impl fmt::Display for DualVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.c, self.d)
    }
}

/// A point of `M_R` with exact rational coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    pub x: Rational,
    pub y: Rational,
}

impl Point {
    pub fn new(x: Rational, y: Rational) -> Self {
        Point { x, y }
    }

    pub fn origin() -> Self {
        Point::new(Rational::zero(), Rational::zero())
    }

    pub fn from_ints(x: i64, y: i64) -> Self {
        Point::new(
            Rational::from_integer(x.into()),
            Rational::from_integer(y.into()),
        )
    }

    /// `self + s * v`.
    pub fn offset(&self, v: LatticeVec, s: &Rational) -> Point {
        Point::new(
            &self.x + s * Rational::from_integer(v.a.into()),
            &self.y + s * Rational::from_integer(v.b.into()),
        )
    }

    /// `<self - origin, n>` for an integral covector.
    pub fn pair_rel(&self, origin: &Point, n: DualVec) -> Rational {
        (&self.x - &origin.x) * Rational::from_integer(n.c.into())
            + (&self.y - &origin.y) * Rational::from_integer(n.d.into())
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (
            crate::series::rational_to_f64(&self.x),
            crate::series::rational_to_f64(&self.y),
        )
    }

    /// Parses `x,y` where each coordinate is an integer or `p/q`.
    pub fn parse(s: &str) -> Result<Point> {
        let mut it = s.split(',');
        let (Some(x), Some(y), None) = (it.next(), it.next(), it.next()) else {
            return Err(Error::parse(
                0,
                format!("expected a point `x,y`, got `{s}`"),
            ));
        };
        Ok(Point::new(parse_rational(x)?, parse_rational(y)?))
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.x, self.y)
    }
}

/// Parses an integer, a fraction `p/q`, or a terminating decimal.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::parse(0, format!("not a rational number: `{s}`"));
    if let Some((p, q)) = s.split_once('/') {
        let p: num_bigint::BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: num_bigint::BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(p, q));
    }
    if let Some((ip, fp)) = s.split_once('.') {
        let neg = ip.trim_start().starts_with('-');
        let ipart: num_bigint::BigInt = if ip.is_empty() || ip == "-" {
            Zero::zero()
        } else {
            ip.parse().map_err(|_| bad())?
        };
        if fp.is_empty() || !fp.bytes().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let fnum: num_bigint::BigInt = fp.parse().map_err(|_| bad())?;
        let den = num_traits::pow(num_bigint::BigInt::from(10), fp.len());
        let frac = Rational::new(fnum, den);
        let whole = Rational::from_integer(ipart.abs());
        let v = whole + frac;
        return Ok(if neg { -v } else { v });
    }
    let p: num_bigint::BigInt = s.parse().map_err(|_| bad())?;
    Ok(Rational::from_integer(p))
}

/// Parses `x1,y1;x2,y2;...`; the empty string gives no points.
pub fn parse_points(s: &str) -> Result<Vec<Point>> {
    s.split(';')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(Point::parse)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairing_examples() {
        assert_eq!(pair(LatticeVec::new(1, 0), DualVec::new(1, 0)), 1);
        assert_eq!(pair(LatticeVec::new(1, 0), DualVec::new(0, 1)), 0);
        assert_eq!(pair(LatticeVec::new(2, 3), DualVec::new(-1, 2)), 4);
    }

    #[test]
    fn primitive_examples() {
        assert_eq!(
            primitive_part(LatticeVec::new(2, 4)).unwrap(),
            (LatticeVec::new(1, 2), 2)
        );
        assert_eq!(
            primitive_part(LatticeVec::new(1, 0)).unwrap(),
            (LatticeVec::new(1, 0), 1)
        );
        assert_eq!(
            primitive_part(LatticeVec::new(-3, -6)).unwrap(),
            (LatticeVec::new(-1, -2), 3)
        );
        assert!(matches!(
            primitive_part(LatticeVec::ZERO),
            Err(Error::ZeroVector)
        ));
    }

    #[test]
    fn normal_is_positively_oriented() {
        for m in [
            LatticeVec::new(1, 0),
            LatticeVec::new(0, 1),
            LatticeVec::new(-2, 3),
        ] {
            let n = m.normal();
            assert_eq!(pair(m, n), 0);
            assert!(det(m, n.as_lattice()) > 0);
        }
        assert_eq!(LatticeVec::new(1, 0).normal(), DualVec::new(0, 1));
        assert_eq!(LatticeVec::new(0, 1).normal(), DualVec::new(-1, 0));
        assert_eq!(LatticeVec::new(1, 1).normal(), DualVec::new(-1, 1));
    }

    #[test]
    fn angle_order() {
        let mut v = vec![
            LatticeVec::new(0, -1),
            LatticeVec::new(-1, 0),
            LatticeVec::new(1, 1),
            LatticeVec::new(1, 0),
            LatticeVec::new(0, 1),
            LatticeVec::new(2, 0),
        ];
        v.sort_by(LatticeVec::angle_cmp);
        assert_eq!(
            v,
            vec![
                LatticeVec::new(1, 0),
                LatticeVec::new(2, 0),
                LatticeVec::new(1, 1),
                LatticeVec::new(0, 1),
                LatticeVec::new(-1, 0),
                LatticeVec::new(0, -1),
            ]
        );
    }

    #[test]
    fn rationals_parse() {
        assert_eq!(
            parse_rational("3/6").unwrap(),
            Rational::new(1.into(), 2.into())
        );
        assert_eq!(
            parse_rational("-0.25").unwrap(),
            Rational::new((-1).into(), 4.into())
        );
        assert_eq!(
            parse_rational("7").unwrap(),
            Rational::from_integer(7.into())
        );
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
        let pts = parse_points("1,2; -1/3,0.5").unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[1].x, Rational::new((-1).into(), 3.into()));
    }
}
