//! Generators shared by the integration tests.

#![allow(dead_code)]

use num_bigint::BigInt;
use proptest::prelude::*;
use scattering_core::{
    LatticeVec, LieElement, LieTerm, Markers, Monomial, Point, Rational, TruncatedSeries,
};

pub fn q(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn pt(x: (i64, i64), y: (i64, i64)) -> Point {
    Point::new(q(x.0, x.1), q(y.0, y.1))
}

pub fn rational() -> impl Strategy<Value = Rational> {
    (-4i64..=4, 1i64..=3).prop_map(|(n, d)| q(n, d))
}

pub fn nonzero_rational() -> impl Strategy<Value = Rational> {
    (prop_oneof![-4i64..=-1, 1i64..=4], 1i64..=3).prop_map(|(n, d)| q(n, d))
}

/// Monomials `t^k u_S z^m` with small exponents over two markers.
pub fn monomial(min_degree: u32, order: u32) -> impl Strategy<Value = Monomial> {
    (-2i64..=2, -2i64..=2, 0..order, 0u64..4)
        .prop_filter("below the minimum degree", move |&(_, _, t, s)| {
            t + s.count_ones() >= min_degree
        })
        .prop_map(|(a, b, t, s)| {
            Monomial::z(a, b)
                .with_t(t)
                .with_markers(Markers::from_bits(s << 1))
        })
}

pub fn series(order: u32, min_degree: u32) -> impl Strategy<Value = TruncatedSeries> {
    prop::collection::vec((monomial(min_degree, order), rational()), 0..5)
        .prop_map(move |terms| TruncatedSeries::from_terms(order, terms))
}

/// A unit `1 + (nilpotent)`.
pub fn unit(order: u32) -> impl Strategy<Value = TruncatedSeries> {
    series(order, 1).prop_map(move |n| TruncatedSeries::one(order).checked_add(&n).unwrap())
}

fn primitive_dir() -> impl Strategy<Value = LatticeVec> {
    (-2i64..=2, -2i64..=2)
        .prop_filter("zero", |&(a, b)| (a, b) != (0, 0))
        .prop_map(|(a, b)| LatticeVec::new(a, b))
}

/// Elements of the full Lie algebra of positive filtration degree.
pub fn lie_element(order: u32) -> impl Strategy<Value = LieElement> {
    let term = (nonzero_rational(), monomial(1, order), primitive_dir())
        .prop_filter("constant exponent", |t| !t.1.m.is_zero());
    prop::collection::vec(term, 0..4).prop_map(move |ts| {
        LieElement::from_terms(
            order,
            ts.into_iter().map(|(c, m, n)| {
                LieTerm::new(c, m, scattering_core::DualVec::new(n.a, n.b)).unwrap()
            }),
        )
    })
}

/// Elements of the tropical vertex algebra, `z^m ∂_n` with `n ⊥ m`, and no
/// markers so that the third-order BCH formula is exact mod `t^4`.
pub fn vertex_element(order: u32) -> impl Strategy<Value = LieElement> {
    prop::collection::vec(
        (nonzero_rational(), primitive_dir(), 1i64..=2, 1..order),
        0..3,
    )
    .prop_map(move |ts| {
        LieElement::from_terms(
            order,
            ts.into_iter().map(|(c, d, k, t)| {
                let mono = Monomial::z(k * d.a, k * d.b).with_t(t);
                LieTerm::new(c, mono, d.normal()).unwrap()
            }),
        )
    })
}

/// `(1 + t z^m)^k` with `k` small: a wall function with order-1 leading term.
pub fn binomial_wall(order: u32, m: LatticeVec, k: i64) -> TruncatedSeries {
    TruncatedSeries::parse(order, &format!("1 + t z^({},{})", m.a, m.b))
        .unwrap()
        .pow(k)
        .unwrap()
}
