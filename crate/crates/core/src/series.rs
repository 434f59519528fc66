//! Truncated formal series over `Q` in lattice monomials `z^m`, a deformation
//! parameter `t` (dropped from degree `order` on) and square-zero marker
//! variables `u_1, ..., u_64`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::lattice::{parse_rational, LatticeVec};
use crate::Rational;

/// A squarefree set of marker indices, `i` stored in bit `i - 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct Markers(u64);

impl Markers {
    pub const EMPTY: Markers = Markers(0);

    pub fn single(i: usize) -> Result<Markers> {
        if !(1..=64).contains(&i) {
            return Err(Error::InvalidInput(format!(
                "marker index {i} outside 1..=64"
            )));
        }
        Ok(Markers(1 << (i - 1)))
    }

    pub fn from_indices(idx: impl IntoIterator<Item = usize>) -> Result<Markers> {
        let mut bits = 0u64;
        for i in idx {
            let s = Markers::single(i)?;
            if bits & s.0 != 0 {
                return Err(Error::InvalidInput(format!("marker u{i} repeated")));
            }
            bits |= s.0;
        }
        Ok(Markers(bits))
    }

    pub fn from_bits(bits: u64) -> Markers {
        Markers(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> u32 {
        self.0.count_ones()
    }

    pub fn contains(self, i: usize) -> bool {
        (1..=64).contains(&i) && self.0 & (1 << (i - 1)) != 0
    }

    pub fn intersects(self, other: Markers) -> bool {
        self.0 & other.0 != 0
    }

    /// Product of marker monomials; `None` when an index repeats (`u_i^2 = 0`).
    pub fn join(self, other: Markers) -> Option<Markers> {
        (!self.intersects(other)).then_some(Markers(self.0 | other.0))
    }

    pub fn union(self, other: Markers) -> Markers {
        Markers(self.0 | other.0)
    }

    pub fn indices(self) -> impl Iterator<Item = usize> {
        (0..64)
            .filter(move |b| self.0 & (1 << b) != 0)
            .map(|b| b + 1)
    }
}

impl Ord for Markers {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.indices().cmp(other.indices()))
    }
}

impl PartialOrd for Markers {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// `z^m t^j u_S` with unit coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Monomial {
    pub m: LatticeVec,
    pub t: u32,
    pub markers: Markers,
}

impl Monomial {
    pub const ONE: Monomial = Monomial {
        m: LatticeVec::ZERO,
        t: 0,
        markers: Markers::EMPTY,
    };

    pub fn new(m: LatticeVec, t: u32, markers: Markers) -> Self {
        Monomial { m, t, markers }
    }

    pub fn z(a: i64, b: i64) -> Self {
        Monomial::new(LatticeVec::new(a, b), 0, Markers::EMPTY)
    }

    pub fn with_t(mut self, t: u32) -> Self {
        self.t = t;
        self
    }

    pub fn with_markers(mut self, markers: Markers) -> Self {
        self.markers = markers;
        self
    }

    /// Filtration degree: `t`-order plus number of markers.
    pub fn degree(&self) -> u32 {
        self.t + self.markers.len()
    }

    pub fn is_one(&self) -> bool {
        *self == Monomial::ONE
    }

    /// Product, or `None` when a marker repeats.
    pub fn mul(&self, other: &Monomial) -> Option<Monomial> {
        Some(Monomial {
            m: self.m + other.m,
            t: self.t + other.t,
            markers: self.markers.join(other.markers)?,
        })
    }

    /// Same `t` and markers, exponent `m` dropped.
    pub fn coefficient_part(&self) -> Monomial {
        Monomial {
            m: LatticeVec::ZERO,
            ..*self
        }
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.t
            .cmp(&other.t)
            .then_with(|| self.markers.cmp(&other.markers))
            .then_with(|| self.m.angle_cmp(&other.m))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        match self.t {
            0 => {}
            1 => parts.push("t".to_string()),
            j => parts.push(format!("t^{j}")),
        }
        if !self.markers.is_empty() {
            let idx: Vec<String> = self.markers.indices().map(|i| i.to_string()).collect();
            parts.push(format!("u{{{}}}", idx.join(",")));
        }
        if !self.m.is_zero() {
            parts.push(format!("z^({},{})", self.m.a, self.m.b));
        }
        if parts.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", parts.join(" "))
        }
    }
}

/// An element of `Q[M][t]/(t^order)` with square-zero markers; stored terms
/// never vanish and never reach `t^order`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TruncatedSeries {
    order: u32,
    terms: BTreeMap<Monomial, Rational>,
}

impl TruncatedSeries {
    pub fn zero(order: u32) -> Self {
        assert!(order >= 1, "truncation order must be positive");
        TruncatedSeries {
            order,
            terms: BTreeMap::new(),
        }
    }

    pub fn try_zero(order: u32) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidInput(
                "truncation order must be positive".into(),
            ));
        }
        Ok(Self::zero(order))
    }

    pub fn one(order: u32) -> Self {
        Self::constant(order, Rational::one())
    }

    pub fn constant(order: u32, c: Rational) -> Self {
        Self::term(order, c, Monomial::ONE)
    }

    pub fn term(order: u32, c: Rational, mono: Monomial) -> Self {
        let mut s = Self::zero(order);
        s.add_term(mono, c);
        s
    }

    /// `z^m` as a series.
    pub fn monomial(order: u32, mono: Monomial) -> Self {
        Self::term(order, Rational::one(), mono)
    }

    pub fn from_terms(order: u32, terms: impl IntoIterator<Item = (Monomial, Rational)>) -> Self {
        let mut s = Self::zero(order);
        for (mono, c) in terms {
            s.add_term(mono, c);
        }
        s
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn terms(&self) -> impl ExactSizeIterator<Item = (&Monomial, &Rational)> + '_ {
        self.terms.iter()
    }

    /// Number of nonzero terms; [`is_zero`](Self::is_zero) is the emptiness test.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, mono: &Monomial) -> Rational {
        self.terms.get(mono).cloned().unwrap_or_else(Rational::zero)
    }

    /// Accumulates `c * mono`, dropping it if beyond the truncation.
    pub fn add_term(&mut self, mono: Monomial, c: Rational) {
        if mono.t >= self.order || c.is_zero() {
            return;
        }
        match self.terms.entry(mono) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    fn check_order(&self, other: &Self) -> Result<()> {
        if self.order != other.order {
            return Err(Error::OrderMismatch(self.order, other.order));
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check_order(other)?;
        Ok(self.add_unchecked(other))
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.check_order(other)?;
        Ok(self.add_unchecked(&other.neg_ref()))
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check_order(other)?;
        Ok(self.mul_unchecked(other))
    }

    fn add_unchecked(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (mono, c) in &other.terms {
            out.add_term(*mono, c.clone());
        }
        out
    }

    fn mul_unchecked(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.order);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                if m1.t + m2.t >= self.order {
                    continue;
                }
                if let Some(mono) = m1.mul(m2) {
                    out.add_term(mono, c1 * c2);
                }
            }
        }
        out
    }

    fn neg_ref(&self) -> Self {
        TruncatedSeries {
            order: self.order,
            terms: self.terms.iter().map(|(m, c)| (*m, -c)).collect(),
        }
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero(self.order);
        }
        TruncatedSeries {
            order: self.order,
            terms: self.terms.iter().map(|(m, x)| (*m, x * c)).collect(),
        }
    }

    /// Multiplies every term by `c * mono`.
    pub fn mul_term(&self, c: &Rational, mono: &Monomial) -> Self {
        let mut out = Self::zero(self.order);
        for (m, x) in &self.terms {
            if let Some(p) = m.mul(mono) {
                out.add_term(p, x * c);
            }
        }
        out
    }

    /// Keeps only terms of `t`-order below `order` (which must not exceed the current one).
    pub fn truncate(&self, order: u32) -> Self {
        assert!(order >= 1);
        let mut out = Self::zero(order);
        for (m, c) in &self.terms {
            out.add_term(*m, c.clone());
        }
        out
    }

    /// Smallest filtration degree among the terms.
    pub fn min_degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).min()
    }

    /// The terms of filtration degree exactly `k`.
    pub fn degree_part(&self, k: u32) -> Self {
        TruncatedSeries {
            order: self.order,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.degree() == k)
                .map(|(m, c)| (*m, c.clone()))
                .collect(),
        }
    }

    /// Keeps only terms for which `keep` holds.
    pub fn filter(&self, mut keep: impl FnMut(&Monomial, &Rational) -> bool) -> Self {
        TruncatedSeries {
            order: self.order,
            terms: self
                .terms
                .iter()
                .filter(|(m, c)| keep(m, c))
                .map(|(m, c)| (*m, c.clone()))
                .collect(),
        }
    }

    /// Sets the markers in `mask` to zero.
    pub fn kill_markers(&self, mask: Markers) -> Self {
        self.filter(|m, _| !m.markers.intersects(mask))
    }

    /// Every term has positive filtration degree.
    pub fn is_nilpotent(&self) -> bool {
        self.terms.keys().all(|m| m.degree() >= 1)
    }

    /// Of the form `1 + (nilpotent)`.
    pub fn is_unit_one(&self) -> bool {
        self.coeff(&Monomial::ONE).is_one()
            && self.terms.keys().all(|m| m.is_one() || m.degree() >= 1)
    }

    pub fn markers_used(&self) -> Markers {
        self.terms
            .keys()
            .fold(Markers::EMPTY, |acc, m| acc.union(m.markers))
    }

    pub fn max_t(&self) -> u32 {
        self.terms.keys().map(|m| m.t).max().unwrap_or(0)
    }

    /// `exp(f)` for nilpotent `f`.
    pub fn exp(&self) -> Result<Self> {
        if !self.is_nilpotent() {
            return Err(Error::NotNilpotent(self.to_string()));
        }
        let mut out = Self::one(self.order);
        let mut power = Self::one(self.order);
        let mut k = 1u64;
        loop {
            power = power
                .mul_unchecked(self)
                .scale(&Rational::new(One::one(), k.into()));
            if power.is_zero() {
                break;
            }
            out = out.add_unchecked(&power);
            k += 1;
        }
        Ok(out)
    }

    /// `log(g)` for `g = 1 + (nilpotent)`.
    pub fn log(&self) -> Result<Self> {
        if !self.is_unit_one() {
            return Err(Error::NotUnit(self.to_string()));
        }
        let g = self.add_unchecked(&Self::one(self.order).neg_ref());
        let mut out = Self::zero(self.order);
        let mut power = Self::one(self.order);
        let mut k = 1i64;
        loop {
            power = power.mul_unchecked(&g);
            if power.is_zero() {
                break;
            }
            let c = Rational::new(if k % 2 == 1 { 1 } else { -1 }.into(), k.into());
            out = out.add_unchecked(&power.scale(&c));
            k += 1;
        }
        Ok(out)
    }

    /// Inverse of `c * z^m * (1 + nilpotent)` for a nonzero rational `c`.
    pub fn inverse(&self) -> Result<Self> {
        let lead: Vec<_> = self.terms.iter().filter(|(m, _)| m.degree() == 0).collect();
        let [(lead_m, lead_c)] = lead.as_slice() else {
            return Err(Error::NotUnit(self.to_string()));
        };
        let lead_inv = Rational::one() / *lead_c;
        let shift = Monomial::new(-lead_m.m, 0, Markers::EMPTY);
        let normalized = self.mul_term(&lead_inv, &shift);
        let g = normalized.add_unchecked(&Self::one(self.order).neg_ref());
        let mut out = Self::one(self.order);
        let mut power = Self::one(self.order);
        loop {
            power = power.mul_unchecked(&g).neg_ref();
            if power.is_zero() {
                break;
            }
            out = out.add_unchecked(&power);
        }
        Ok(out.mul_term(&lead_inv, &shift))
    }

    /// Integer power; negative exponents require a unit.
    pub fn pow(&self, e: i64) -> Result<Self> {
        if e < 0 {
            return self.inverse()?.pow(-e);
        }
        let mut base = self.clone();
        let mut out = Self::one(self.order);
        let mut e = e as u64;
        while e > 0 {
            if e & 1 == 1 {
                out = out.mul_unchecked(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_unchecked(&base);
            }
        }
        Ok(out)
    }

    /// Multiplies by `z^m`.
    pub fn shift(&self, m: LatticeVec) -> Self {
        TruncatedSeries {
            order: self.order,
            terms: self
                .terms
                .iter()
                .map(|(mono, c)| {
                    (
                        Monomial {
                            m: mono.m + m,
                            ..*mono
                        },
                        c.clone(),
                    )
                })
                .collect(),
        }
    }

    /// Multiplies each term by an integer weight depending on its monomial.
    pub fn weight_by(&self, mut w: impl FnMut(&Monomial) -> i64) -> Self {
        let mut out = Self::zero(self.order);
        for (m, c) in &self.terms {
            out.add_term(*m, c * Rational::from_integer(w(m).into()));
        }
        out
    }

    /// Laurent-polynomial rendering in `x = z^(1,0)`, `y = z^(0,1)`, e.g. `x + y + t/(xy)`.
    pub fn to_xy_string(&self) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            if i == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let c = c.abs();
            let mut num = String::new();
            match m.t {
                0 => {}
                1 => num.push('t'),
                j => num.push_str(&format!("t^{j}")),
            }
            for i in m.markers.indices() {
                num.push_str(&format!("u{i}"));
            }
            let var = |name: char, e: i64| match e.abs() {
                1 => name.to_string(),
                k => format!("{name}^{k}"),
            };
            let mut den = String::new();
            let mut den_factors = 0;
            for (name, e) in [('x', m.m.a), ('y', m.m.b)] {
                if e > 0 {
                    num.push_str(&var(name, e));
                } else if e < 0 {
                    den.push_str(&var(name, e));
                    den_factors += 1;
                }
            }
            let coeff_str = if c.is_integer() {
                c.numer().to_string()
            } else {
                format!("({c})")
            };
            if num.is_empty() {
                out.push_str(&coeff_str);
            } else {
                if !c.is_one() {
                    out.push_str(&coeff_str);
                }
                out.push_str(&num);
            }
            if !den.is_empty() {
                if den_factors > 1 {
                    out.push_str(&format!("/({den})"));
                } else {
                    out.push_str(&format!("/{den}"));
                }
            }
        }
        out
    }

    /// Parses the canonical text form produced by `Display`.
    pub fn parse(order: u32, s: &str) -> Result<Self> {
        let mut out = Self::try_zero(order)?;
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::parse(0, "empty series"));
        }
        for (sign, body) in split_terms(s)? {
            let (c, mono) = parse_term(body)?;
            out.add_term(mono, if sign { -c } else { c });
        }
        Ok(out)
    }
}

fn split_terms(s: &str) -> Result<Vec<(bool, &str)>> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0usize;
    let mut neg = false;
    let bytes = s.as_bytes();
    let mut i = 0;
    // leading sign
    while i < bytes.len() && bytes[i].is_ascii_whitespace() {
        i += 1;
    }
    if i < bytes.len() && (bytes[i] == b'-' || bytes[i] == b'+') {
        neg = bytes[i] == b'-';
        i += 1;
        start = i;
    }
    while i < bytes.len() {
        match bytes[i] {
            b'(' | b'{' => depth += 1,
            b')' | b'}' => depth -= 1,
            b'+' | b'-' if depth == 0 => {
                // a sign right after `^` belongs to an exponent
                let prev = s[..i].trim_end();
                if !prev.ends_with('^') {
                    let body = s[start..i].trim();
                    if body.is_empty() {
                        return Err(Error::parse(0, format!("dangling sign in `{s}`")));
                    }
                    out.push((neg, body));
                    neg = bytes[i] == b'-';
                    start = i + 1;
                }
            }
            _ => {}
        }
        if depth < 0 {
            return Err(Error::parse(0, format!("unbalanced brackets in `{s}`")));
        }
        i += 1;
    }
    let body = s[start..].trim();
    if body.is_empty() || depth != 0 {
        return Err(Error::parse(0, format!("malformed series `{s}`")));
    }
    out.push((neg, body));
    Ok(out)
}

fn parse_term(body: &str) -> Result<(Rational, Monomial)> {
    let bad = |msg: String| Error::parse(0, msg);
    let mut c = Rational::one();
    let mut mono = Monomial::ONE;
    let mut seen_coeff = false;
    for tok in body
        .split(|ch: char| ch.is_whitespace() || ch == '*')
        .filter(|t| !t.is_empty())
    {
        if tok == "t" {
            mono.t += 1;
        } else if let Some(e) = tok.strip_prefix("t^") {
            let e: u32 = e
                .parse()
                .map_err(|_| bad(format!("bad t exponent `{tok}`")))?;
            mono.t += e;
        } else if let Some(rest) = tok.strip_prefix("u{") {
            let inner = rest
                .strip_suffix('}')
                .ok_or_else(|| bad(format!("bad marker set `{tok}`")))?;
            let idx: Vec<usize> = inner
                .split(',')
                .filter(|x| !x.trim().is_empty())
                .map(|x| x.trim().parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad(format!("bad marker set `{tok}`")))?;
            let mk = Markers::from_indices(idx).map_err(|e| bad(e.to_string()))?;
            mono.markers = mono
                .markers
                .join(mk)
                .ok_or_else(|| bad(format!("repeated marker in `{body}`")))?;
        } else if let Some(rest) = tok.strip_prefix("z^(") {
            let inner = rest
                .strip_suffix(')')
                .ok_or_else(|| bad(format!("bad exponent `{tok}`")))?;
            let (a, b) = inner
                .split_once(',')
                .ok_or_else(|| bad(format!("bad exponent `{tok}`")))?;
            let a: i64 = a
                .trim()
                .parse()
                .map_err(|_| bad(format!("bad exponent `{tok}`")))?;
            let b: i64 = b
                .trim()
                .parse()
                .map_err(|_| bad(format!("bad exponent `{tok}`")))?;
            mono.m = mono.m + LatticeVec::new(a, b);
        } else if !seen_coeff {
            c = parse_rational(tok).map_err(|_| bad(format!("unexpected token `{tok}`")))?;
            seen_coeff = true;
        } else {
            return Err(bad(format!("unexpected token `{tok}`")));
        }
    }
    Ok((c, mono))
}

impl fmt::Display for TruncatedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            let c = c.abs();
            if m.is_one() {
                write!(f, "{c}")?;
            } else if c.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{c} {m}")?;
            }
        }
        Ok(())
    }
}

impl Add for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn add(self, rhs: &TruncatedSeries) -> TruncatedSeries {
        self.checked_add(rhs).expect("series orders must agree")
    }
}

impl Sub for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn sub(self, rhs: &TruncatedSeries) -> TruncatedSeries {
        self.checked_sub(rhs).expect("series orders must agree")
    }
}

impl Mul for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn mul(self, rhs: &TruncatedSeries) -> TruncatedSeries {
        self.checked_mul(rhs).expect("series orders must agree")
    }
}

impl Neg for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn neg(self) -> TruncatedSeries {
        self.neg_ref()
    }
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    let n = r.numer().to_f64().unwrap_or(f64::NAN);
    let d = r.denom().to_f64().unwrap_or(f64::NAN);
    if n.is_finite() && d.is_finite() {
        n / d
    } else {
        // very large numerators/denominators: scale down first
        let shift = r.numer().bits().max(r.denom().bits()).saturating_sub(1000);
        let n: BigInt = r.numer() >> shift;
        let d: BigInt = r.denom() >> shift;
        n.to_f64().unwrap_or(0.0) / d.to_f64().unwrap_or(1.0)
    }
}
