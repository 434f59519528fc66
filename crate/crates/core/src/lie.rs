//! Log derivations `f ∂_n` and the automorphisms of the truncated torus they
//! exponentiate to.
//!
//! The derivation `z^m ∂_n` acts by `z^p ↦ <p, n> z^{m+p}`. Its Lie bracket
//! is the commutator of derivations,
//! `[z^m ∂_n, z^m' ∂_n'] = z^{m+m'} ∂_{<m',n> n' - <m,n'> n}`.
//! Automorphisms are stored as the images of `z1 = z^(1,0)` and `z2 = z^(0,1)`;
//! `compose(a, b)` is `a ∘ b`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::lattice::{pair, primitive_part, DualVec, LatticeVec};
use crate::series::{Monomial, TruncatedSeries};
use crate::Rational;

/// A single term `coeff · z^m t^j u_S ∂_n` with `n` primitive.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LieTerm {
    pub coeff: Rational,
    pub mono: Monomial,
    pub n: DualVec,
}

impl LieTerm {
    pub fn new(coeff: Rational, mono: Monomial, n: DualVec) -> Result<Self> {
        if mono.m.is_zero() {
            return Err(Error::InvalidInput(format!(
                "Lie term with trivial exponent: {mono}"
            )));
        }
        if mono.degree() == 0 {
            return Err(Error::InvalidInput(format!(
                "Lie term of filtration order 0: {mono}"
            )));
        }
        if n.is_zero() {
            return Err(Error::InvalidInput("Lie term with zero direction".into()));
        }
        let (n0, g) = primitive_part(n.as_lattice())?;
        Ok(LieTerm {
            coeff: coeff * Rational::from_integer(g.into()),
            mono,
            n: DualVec::new(n0.a, n0.b),
        })
    }

    /// Membership in the tropical vertex subalgebra: `<m, n> = 0`.
    pub fn in_vertex_algebra(&self) -> bool {
        pair(self.mono.m, self.n) == 0
    }

    /// Writes `z^mono ∂_v` for a rational vector `v` as `coeff · z^mono ∂_n`.
    /// For exponents perpendicular to `v` the direction is the positively
    /// oriented normal of the primitive exponent, so the sign lives in `coeff`.
    pub fn from_vector(mono: Monomial, v: &[Rational; 2]) -> Option<LieTerm> {
        if v[0].is_zero() && v[1].is_zero() {
            return None;
        }
        let m = mono.m;
        let perpendicular = !m.is_zero()
            && (&v[0] * Rational::from_integer(m.a.into())
                + &v[1] * Rational::from_integer(m.b.into()))
            .is_zero();
        if perpendicular {
            let (m0, _) = primitive_part(m).ok()?;
            let n = m0.normal();
            let nn = Rational::from_integer((n.c * n.c + n.d * n.d).into());
            let coeff = (&v[0] * Rational::from_integer(n.c.into())
                + &v[1] * Rational::from_integer(n.d.into()))
                / nn;
            return Some(LieTerm { coeff, mono, n });
        }
        let l = v[0].denom().lcm(v[1].denom());
        let w0 = (&v[0] * Rational::from_integer(l.clone())).to_integer();
        let w1 = (&v[1] * Rational::from_integer(l.clone())).to_integer();
        let g = w0.gcd(&w1);
        let n = DualVec::new(i64::try_from(&w0 / &g).ok()?, i64::try_from(&w1 / &g).ok()?);
        Some(LieTerm {
            coeff: Rational::new(g, l),
            mono,
            n,
        })
    }

    fn vector(&self) -> [Rational; 2] {
        [
            &self.coeff * Rational::from_integer(self.n.c.into()),
            &self.coeff * Rational::from_integer(self.n.d.into()),
        ]
    }
}

impl fmt::Display for LieTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} d{}", self.coeff, self.mono, self.n)
    }
}

/// A finite sum of log derivations, truncated at `t^order`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LieElement {
    order: u32,
    terms: BTreeMap<Monomial, [Rational; 2]>,
}

impl LieElement {
    pub fn zero(order: u32) -> Self {
        assert!(order >= 1);
        LieElement {
            order,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_terms(order: u32, terms: impl IntoIterator<Item = LieTerm>) -> Self {
        let mut x = Self::zero(order);
        for t in terms {
            let v = t.vector();
            x.add_vector(t.mono, &v);
        }
        x
    }

    /// `f ∂_n` for a series `f`; constant terms of `f` are ignored.
    pub fn from_series(f: &TruncatedSeries, n: DualVec) -> Self {
        let mut x = Self::zero(f.order());
        for (mono, c) in f.terms() {
            if mono.is_one() {
                continue;
            }
            let v = [
                c * Rational::from_integer(n.c.into()),
                c * Rational::from_integer(n.d.into()),
            ];
            x.add_vector(*mono, &v);
        }
        x
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub(crate) fn add_vector(&mut self, mono: Monomial, v: &[Rational; 2]) {
        if mono.t >= self.order || (v[0].is_zero() && v[1].is_zero()) {
            return;
        }
        let e = self
            .terms
            .entry(mono)
            .or_insert_with(|| [Rational::zero(), Rational::zero()]);
        e[0] += &v[0];
        e[1] += &v[1];
        if e[0].is_zero() && e[1].is_zero() {
            self.terms.remove(&mono);
        }
    }

    /// Terms in canonical monomial order.
    pub fn terms(&self) -> Vec<LieTerm> {
        self.terms
            .iter()
            .filter_map(|(m, v)| LieTerm::from_vector(*m, v))
            .collect()
    }

    pub fn vectors(&self) -> impl Iterator<Item = (&Monomial, &[Rational; 2])> {
        self.terms.iter()
    }

    fn check_order(&self, other: &Self) -> Result<()> {
        if self.order != other.order {
            return Err(Error::OrderMismatch(self.order, other.order));
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check_order(other)?;
        let mut out = self.clone();
        for (m, v) in &other.terms {
            out.add_vector(*m, v);
        }
        Ok(out)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        let mut out = Self::zero(self.order);
        for (m, v) in &self.terms {
            out.add_vector(*m, &[&v[0] * c, &v[1] * c]);
        }
        out
    }

    pub fn neg(&self) -> Self {
        self.scale(&-Rational::one())
    }

    /// The bilinear extension of the bracket on monomial derivations.
    pub fn bracket(&self, other: &Self) -> Result<Self> {
        self.check_order(other)?;
        let mut out = Self::zero(self.order);
        for (m1, v1) in &self.terms {
            for (m2, v2) in &other.terms {
                if m1.t + m2.t >= self.order {
                    continue;
                }
                let Some(mono) = m1.mul(m2) else { continue };
                // <m2, v1> v2 - <m1, v2> v1
                let p21 = pair_q(m2.m, v1);
                let p12 = pair_q(m1.m, v2);
                let v = [&p21 * &v2[0] - &p12 * &v1[0], &p21 * &v2[1] - &p12 * &v1[1]];
                out.add_vector(mono, &v);
            }
        }
        Ok(out)
    }

    /// Every term satisfies `m ≠ 0` and `<m, n> = 0`.
    pub fn in_vertex_algebra(&self) -> bool {
        self.terms
            .iter()
            .all(|(m, v)| !m.m.is_zero() && pair_q(m.m, v).is_zero())
    }

    pub fn min_degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).min()
    }

    pub fn degree_part(&self, k: u32) -> Self {
        LieElement {
            order: self.order,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.degree() == k)
                .map(|(m, v)| (*m, v.clone()))
                .collect(),
        }
    }

    pub fn truncate(&self, order: u32) -> Self {
        let mut out = Self::zero(order);
        for (m, v) in &self.terms {
            out.add_vector(*m, v);
        }
        out
    }

    /// The derivation applied to a series.
    pub fn apply(&self, f: &TruncatedSeries) -> TruncatedSeries {
        let mut out = TruncatedSeries::zero(f.order());
        for (p, c) in f.terms() {
            for (mono, v) in &self.terms {
                let w = pair_q(p.m, v);
                if w.is_zero() {
                    continue;
                }
                if let Some(q) = p.mul(mono) {
                    out.add_term(q, c * w);
                }
            }
        }
        out
    }

    /// `exp(x)(f) = Σ x^k(f) / k!`; terminates because every term of a Lie
    /// element raises the filtration.
    pub fn exp_apply(&self, f: &TruncatedSeries) -> Result<TruncatedSeries> {
        if self.terms.keys().any(|m| m.degree() == 0) {
            return Err(Error::NotNilpotent(self.to_string()));
        }
        let mut out = f.clone();
        let mut cur = f.clone();
        let mut k = 1u64;
        loop {
            cur = self.apply(&cur).scale(&Rational::new(One::one(), k.into()));
            if cur.is_zero() {
                return Ok(out);
            }
            out = &out + &cur;
            k += 1;
        }
    }

    /// The automorphism `exp(x)`; only elements of the vertex subalgebra are accepted.
    pub fn exp_action(&self) -> Result<Automorphism> {
        if !self.in_vertex_algebra() {
            return Err(Error::NotInVertexAlgebra(self.to_string()));
        }
        self.exp_any()
    }

    pub(crate) fn exp_any(&self) -> Result<Automorphism> {
        let [z1, z2] = Automorphism::generators(self.order);
        Ok(Automorphism {
            order: self.order,
            images: [self.exp_apply(&z1)?, self.exp_apply(&z2)?],
        })
    }
}

fn pair_q(m: LatticeVec, v: &[Rational; 2]) -> Rational {
    &v[0] * Rational::from_integer(m.a.into()) + &v[1] * Rational::from_integer(m.b.into())
}

impl fmt::Display for LieElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms = self.terms();
        if terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in terms.iter().enumerate() {
            let neg = t.coeff.is_negative();
            if i > 0 {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            } else if neg {
                write!(f, "-")?;
            }
            write!(f, "{} {} d{}", t.coeff.abs(), t.mono, t.n)?;
        }
        Ok(())
    }
}

/// Third-order Baker-Campbell-Hausdorff series
/// `x + y + [x,y]/2 + [x,[x,y]]/12 - [y,[x,y]]/12`.
pub fn bch3(x: &LieElement, y: &LieElement) -> Result<LieElement> {
    let xy = x.bracket(y)?;
    let half = Rational::new(1.into(), 2.into());
    let twelfth = Rational::new(1.into(), 12.into());
    x.checked_add(y)?
        .checked_add(&xy.scale(&half))?
        .checked_add(&x.bracket(&xy)?.scale(&twelfth))?
        .checked_add(&y.bracket(&xy)?.scale(&-twelfth))
}

/// A ring automorphism of the truncated torus, stored as the images of
/// `z1` and `z2`, each `z_i` times a unit congruent to 1 in positive
/// filtration.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Automorphism {
    order: u32,
    images: [TruncatedSeries; 2],
}

impl Automorphism {
    fn generators(order: u32) -> [TruncatedSeries; 2] {
        [
            TruncatedSeries::monomial(order, Monomial::z(1, 0)),
            TruncatedSeries::monomial(order, Monomial::z(0, 1)),
        ]
    }

    pub fn identity(order: u32) -> Self {
        Automorphism {
            order,
            images: Self::generators(order),
        }
    }

    /// Validates the images `z_i · (1 + nilpotent)`.
    pub fn from_images(img1: TruncatedSeries, img2: TruncatedSeries) -> Result<Self> {
        if img1.order() != img2.order() {
            return Err(Error::OrderMismatch(img1.order(), img2.order()));
        }
        for (img, e) in [
            (&img1, LatticeVec::new(1, 0)),
            (&img2, LatticeVec::new(0, 1)),
        ] {
            if !img.shift(-e).is_unit_one() {
                return Err(Error::InvalidInput(format!(
                    "image of z^{e} is not z^{e} times a unit congruent to 1: {img}"
                )));
            }
        }
        Ok(Automorphism {
            order: img1.order(),
            images: [img1, img2],
        })
    }

    pub(crate) fn from_images_unchecked(images: [TruncatedSeries; 2]) -> Self {
        Automorphism {
            order: images[0].order(),
            images,
        }
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn images(&self) -> &[TruncatedSeries; 2] {
        &self.images
    }

    pub fn is_identity(&self) -> bool {
        self.images == Self::generators(self.order)
    }

    /// Applies the automorphism to a series by substitution.
    pub fn apply(&self, f: &TruncatedSeries) -> Result<TruncatedSeries> {
        if f.order() != self.order {
            return Err(Error::OrderMismatch(self.order, f.order()));
        }
        let units = [
            self.images[0].shift(LatticeVec::new(-1, 0)),
            self.images[1].shift(LatticeVec::new(0, -1)),
        ];
        let mut cache: [HashMap<i64, TruncatedSeries>; 2] = [HashMap::new(), HashMap::new()];
        let mut groups: BTreeMap<LatticeVec, TruncatedSeries> = BTreeMap::new();
        for (mono, c) in f.terms() {
            groups
                .entry(mono.m)
                .or_insert_with(|| TruncatedSeries::zero(self.order))
                .add_term(mono.coefficient_part(), c.clone());
        }
        let mut out = TruncatedSeries::zero(self.order);
        for (p, coeffs) in groups {
            let mut prod = coeffs;
            for (i, e) in [p.a, p.b].into_iter().enumerate() {
                if e == 0 {
                    continue;
                }
                if !cache[i].contains_key(&e) {
                    let pw = units[i].pow(e)?;
                    cache[i].insert(e, pw);
                }
                prod = &prod * &cache[i][&e];
            }
            out = &out + &prod.shift(p);
        }
        Ok(out)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Automorphism) -> Result<Automorphism> {
        if self.order != other.order {
            return Err(Error::OrderMismatch(self.order, other.order));
        }
        Ok(Automorphism {
            order: self.order,
            images: [self.apply(&other.images[0])?, self.apply(&other.images[1])?],
        })
    }

    pub fn invert(&self) -> Result<Automorphism> {
        self.log_derivation()?.neg().exp_any()
    }

    /// The unique derivation `x` with `exp(x) = self`, from
    /// `log(θ) = Σ (-1)^{k+1} (θ - 1)^k / k` evaluated on the generators.
    pub fn log_derivation(&self) -> Result<LieElement> {
        self.log_derivation_upto(None)
    }

    /// `log_derivation` modulo filtration degree `max_degree + 1`.
    pub(crate) fn log_derivation_upto(&self, max_degree: Option<u32>) -> Result<LieElement> {
        let cut = |s: TruncatedSeries| match max_degree {
            Some(k) => s.filter(|m, _| m.degree() <= k),
            None => s,
        };
        let mut out = LieElement::zero(self.order);
        let gens = Self::generators(self.order);
        let mut logs = Vec::with_capacity(2);
        for g in &gens {
            let mut acc = TruncatedSeries::zero(self.order);
            let mut cur = g.clone();
            let mut k = 1i64;
            loop {
                cur = cut(&self.apply(&cur)? - &cur);
                if cur.is_zero() {
                    break;
                }
                let c = Rational::new(if k % 2 == 1 { 1 } else { -1 }.into(), k.into());
                acc = &acc + &cur.scale(&c);
                k += 1;
                if k > 4096 {
                    return Err(Error::Internal("automorphism is not unipotent".into()));
                }
            }
            logs.push(acc);
        }
        let g1 = logs[0].shift(LatticeVec::new(-1, 0));
        let g2 = logs[1].shift(LatticeVec::new(0, -1));
        let (g1, g2) = (cut(g1), cut(g2));
        let mut monos: Vec<Monomial> = g1.terms().map(|(m, _)| *m).collect();
        monos.extend(g2.terms().map(|(m, _)| *m));
        monos.sort();
        monos.dedup();
        for m in monos {
            out.add_vector(m, &[g1.coeff(&m), g2.coeff(&m)]);
        }
        Ok(out)
    }
}

impl fmt::Display for Automorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "z^(1,0) -> {}", self.images[0])?;
        write!(f, "z^(0,1) -> {}", self.images[1])
    }
}
