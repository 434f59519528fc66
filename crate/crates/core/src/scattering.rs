//! Walls, scattering diagrams, path-ordered products and order-by-order
//! completion.
//!
//! Conventions used throughout:
//!
//! * a wall with primitive direction `m` has normal `n = (-m.b, m.a)`, so
//!   `{m, n}` is positively oriented;
//! * a small counterclockwise loop around a point crosses the walls through
//!   it in angular order, starting from a fixed generic base direction;
//! * a crossing from the side where `<x - base, n> < 0` to the side where it
//!   is positive has sign `+1`;
//! * crossing wall `w` with sign `s` acts by `z^p ↦ z^p f_w^{s·a·<p, n>}`,
//!   where `a = +1` for walls whose exponents point along `m` (outgoing) and
//!   `a = -1` for walls whose exponents point along `-m` (incoming);
//! * later crossings act after earlier ones: the product along a path is
//!   `θ_k ∘ ... ∘ θ_1`.
//!
//! With these choices the pentagon diagram is consistent.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::lattice::{angle_from, pair, primitive_part, DualVec, LatticeVec, Point};
use crate::lie::{Automorphism, LieElement};
use crate::par;
use crate::series::{Monomial, TruncatedSeries};
use crate::Rational;

/// Default base direction for angular sorting; it is not a primitive
/// direction of any wall that appears in practice.
pub const DEFAULT_BASE_DIRECTION: LatticeVec = LatticeVec::new(997, -1);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WallKind {
    Line,
    Ray,
}

/// Whether the wall's exponents point along its direction or against it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Align {
    Outgoing,
    Incoming,
}

impl Align {
    pub fn sign(self) -> i64 {
        match self {
            Align::Outgoing => 1,
            Align::Incoming => -1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Wall {
    m: LatticeVec,
    base: Point,
    kind: WallKind,
    align: Align,
    f: TruncatedSeries,
    n: DualVec,
}

impl Wall {
    /// Builds a wall, checking that `m` is primitive and that `f` is
    /// `1 + Σ c z^{k m0}` with `k ≥ 1`, `m0 = ±m` as given by `align`, and
    /// every non-constant term of positive filtration degree.
    pub fn new(
        m: LatticeVec,
        base: Point,
        kind: WallKind,
        align: Align,
        f: TruncatedSeries,
    ) -> Result<Wall> {
        if m.is_zero() || !m.is_primitive() {
            return Err(Error::InvalidWall(format!(
                "direction {m} is not primitive"
            )));
        }
        let m0 = m * align.sign();
        for (mono, c) in f.terms() {
            if mono.is_one() {
                if !c.is_one() {
                    return Err(Error::InvalidWall(format!("constant term of {f} is not 1")));
                }
                continue;
            }
            if mono.degree() == 0 {
                return Err(Error::InvalidWall(format!(
                    "term {mono} of {f} has filtration degree 0"
                )));
            }
            let along = pair(mono.m, m0.normal()) == 0 && mono.m.a * m0.a + mono.m.b * m0.b > 0;
            if !along {
                return Err(Error::InvalidWall(format!(
                    "term {mono} of {f} is not a positive power of z^{m0}"
                )));
            }
        }
        if f.coeff(&Monomial::ONE).is_zero() {
            return Err(Error::InvalidWall(format!("constant term of {f} is not 1")));
        }
        Ok(Wall {
            m,
            base,
            kind,
            align,
            f,
            n: m.normal(),
        })
    }

    pub fn line(m: LatticeVec, base: Point, f: TruncatedSeries) -> Result<Wall> {
        Wall::new(m, base, WallKind::Line, Align::Outgoing, f)
    }

    pub fn ray(m: LatticeVec, base: Point, align: Align, f: TruncatedSeries) -> Result<Wall> {
        Wall::new(m, base, WallKind::Ray, align, f)
    }

    pub fn direction(&self) -> LatticeVec {
        self.m
    }

    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn kind(&self) -> WallKind {
        self.kind
    }

    pub fn align(&self) -> Align {
        self.align
    }

    pub fn function(&self) -> &TruncatedSeries {
        &self.f
    }

    pub fn normal(&self) -> DualVec {
        self.n
    }

    pub fn order(&self) -> u32 {
        self.f.order()
    }

    /// The primitive direction of the exponents of `f`.
    pub fn exponent_direction(&self) -> LatticeVec {
        self.m * self.align.sign()
    }

    pub fn is_trivial(&self) -> bool {
        self.f.len() == 1 && self.f.coeff(&Monomial::ONE).is_one()
    }

    pub fn with_function(&self, f: TruncatedSeries) -> Result<Wall> {
        Wall::new(self.m, self.base.clone(), self.kind, self.align, f)
    }

    /// The same wall with its function truncated at `t^order`.
    pub fn truncate(&self, order: u32) -> Wall {
        Wall {
            f: self.f.truncate(order),
            ..self.clone()
        }
    }

    /// `<x - base, m> / |m|^2`: the position of the projection of `x` along the wall.
    pub fn param(&self, x: &Point) -> Rational {
        let mm = Rational::from_integer((self.m.a * self.m.a + self.m.b * self.m.b).into());
        x.pair_rel(&self.base, DualVec::new(self.m.a, self.m.b)) / mm
    }

    /// Signed offset `<x - base, n>`; zero on the line carrying the wall.
    pub fn side(&self, x: &Point) -> Rational {
        x.pair_rel(&self.base, self.n)
    }

    pub fn contains(&self, x: &Point) -> bool {
        self.side(x).is_zero()
            && match self.kind {
                WallKind::Line => true,
                WallKind::Ray => !self.param(x).is_negative(),
            }
    }

    /// The exponent of `f` in the image of `z^p` when crossing with sign `sign`.
    pub fn crossing_exponent(&self, p: LatticeVec, sign: i64) -> i64 {
        sign * self.align.sign() * pair(p, self.n)
    }

    /// Applies the crossing automorphism with sign `sign` to a series,
    /// discarding terms of filtration degree above `max_degree` if given.
    pub fn act(
        &self,
        sign: i64,
        g: &TruncatedSeries,
        max_degree: Option<u32>,
    ) -> Result<TruncatedSeries> {
        if g.order() != self.f.order() {
            return Err(Error::OrderMismatch(self.f.order(), g.order()));
        }
        let cut = |s: TruncatedSeries| match max_degree {
            Some(k) => s.filter(|m, _| m.degree() <= k),
            None => s,
        };
        let mut groups: BTreeMap<i64, TruncatedSeries> = BTreeMap::new();
        for (mono, c) in g.terms() {
            let e = self.crossing_exponent(mono.m, sign);
            groups
                .entry(e)
                .or_insert_with(|| TruncatedSeries::zero(g.order()))
                .add_term(*mono, c.clone());
        }
        let f = cut(self.f.clone());
        let mut out = TruncatedSeries::zero(g.order());
        let mut powers: HashMap<i64, TruncatedSeries> = HashMap::new();
        for (e, part) in groups {
            if e == 0 {
                out = &out + &part;
                continue;
            }
            let pe = match powers.entry(e) {
                std::collections::hash_map::Entry::Occupied(o) => o.into_mut(),
                std::collections::hash_map::Entry::Vacant(v) => v.insert(cut(f.pow(e)?)),
            };
            out = &out + &cut(&part * &*pe);
        }
        Ok(out)
    }

    /// The crossing automorphism with sign `sign` as an automorphism.
    pub fn automorphism(&self, sign: i64) -> Result<Automorphism> {
        let id = Automorphism::identity(self.order());
        let [a, b] = id.images();
        Ok(Automorphism::from_images_unchecked([
            self.act(sign, a, None)?,
            self.act(sign, b, None)?,
        ]))
    }

    /// `log f ∂_{a n}`, the log of the sign `+1` crossing automorphism.
    pub fn log_derivation(&self) -> Result<LieElement> {
        Ok(LieElement::from_series(&self.f.log()?, self.n)
            .scale(&Rational::from_integer(self.align.sign().into())))
    }

    /// Merge key: walls with equal keys have the same support and alignment.
    fn support_key(&self) -> (WallKind, LatticeVec, Align, Point) {
        let base = match self.kind {
            WallKind::Ray => self.base.clone(),
            WallKind::Line => {
                // the point of the line closest to the origin
                let nn = Rational::from_integer((self.n.c * self.n.c + self.n.d * self.n.d).into());
                let c = self.base.pair_rel(&Point::origin(), self.n) / nn;
                Point::new(
                    &c * Rational::from_integer(self.n.c.into()),
                    &c * Rational::from_integer(self.n.d.into()),
                )
            }
        };
        (self.kind, self.m, self.align, base)
    }
}

impl fmt::Display for Wall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            WallKind::Line => "line",
            WallKind::Ray => "ray",
        };
        let align = match self.align {
            Align::Outgoing => "out",
            Align::Incoming => "in",
        };
        write!(f, "{kind} {} {} {align} {}", self.m, self.base, self.f)
    }
}

/// One crossing of a small counterclockwise loop.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Crossing {
    /// Index of the wall in the diagram.
    pub wall: usize,
    /// `+1` from the `n`-negative to the `n`-positive side, `-1` otherwise.
    pub sign: i64,
    /// The half-line direction crossed (`±m`).
    pub half: LatticeVec,
}

/// One singular point at which the path-ordered product is not the identity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConsistencyFailure {
    pub point: Point,
    pub log: LieElement,
    /// The lowest filtration degree of `log`.
    pub degree: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConsistencyCertificate {
    pub consistent: bool,
    pub checked: Vec<Point>,
    pub failures: Vec<ConsistencyFailure>,
}

impl fmt::Display for ConsistencyCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.checked.len();
        let points = if n == 1 { "point" } else { "points" };
        if self.consistent {
            return write!(f, "consistent ({n} singular {points} checked)");
        }
        writeln!(
            f,
            "inconsistent at {} of {n} singular {points}",
            self.failures.len()
        )?;
        for (i, fail) in self.failures.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(
                f,
                "  at {}: first failure at degree {}: log = {}",
                fail.point, fail.degree, fail.log
            )?;
        }
        Ok(())
    }
}

/// Support segment of a wall as reported by [`ScatteringDiagram::support`].
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Segment {
    pub kind: WallKind,
    pub base: Point,
    pub direction: LatticeVec,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScatteringDiagram {
    order: u32,
    walls: Vec<Wall>,
    excluded: Vec<Point>,
}

impl ScatteringDiagram {
    pub fn empty(order: u32) -> Self {
        assert!(order >= 1, "truncation order must be positive");
        ScatteringDiagram {
            order,
            walls: Vec::new(),
            excluded: Vec::new(),
        }
    }

    pub fn new(order: u32, walls: Vec<Wall>, excluded: Vec<Point>) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidInput(
                "truncation order must be positive".into(),
            ));
        }
        for w in &walls {
            if w.order() != order {
                return Err(Error::OrderMismatch(order, w.order()));
            }
        }
        Ok(ScatteringDiagram {
            order,
            walls,
            excluded,
        })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn walls(&self) -> &[Wall] {
        &self.walls
    }

    pub fn excluded(&self) -> &[Point] {
        &self.excluded
    }

    pub fn push(&mut self, w: Wall) -> Result<()> {
        if w.order() != self.order {
            return Err(Error::OrderMismatch(self.order, w.order()));
        }
        self.walls.push(w);
        Ok(())
    }

    pub fn with_excluded(mut self, excluded: Vec<Point>) -> Self {
        self.excluded = excluded;
        self
    }

    pub fn is_excluded(&self, p: &Point) -> bool {
        self.excluded.contains(p)
    }

    pub fn support(&self) -> Vec<Segment> {
        let mut out: Vec<Segment> = self
            .walls
            .iter()
            .filter(|w| !w.is_trivial())
            .map(|w| {
                let (_, m, _, base) = w.support_key();
                Segment {
                    kind: w.kind,
                    base: if w.kind == WallKind::Line {
                        base
                    } else {
                        w.base.clone()
                    },
                    direction: m,
                }
            })
            .collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn on_support(&self, x: &Point) -> bool {
        self.walls.iter().any(|w| !w.is_trivial() && w.contains(x))
    }

    /// Ray endpoints and transversal intersections of wall supports,
    /// deduplicated and sorted.
    pub fn singular_points(&self) -> Vec<Point> {
        let walls: Vec<&Wall> = self.walls.iter().filter(|w| !w.is_trivial()).collect();
        let mut pts: Vec<Point> = walls
            .iter()
            .filter(|w| w.kind == WallKind::Ray)
            .map(|w| w.base.clone())
            .collect();
        for (i, w1) in walls.iter().enumerate() {
            for w2 in &walls[i + 1..] {
                if let Some(p) = intersection(w1, w2) {
                    pts.push(p);
                }
            }
        }
        pts.sort();
        pts.dedup();
        pts
    }

    pub fn crossing_sequence(&self, p: &Point) -> Result<Vec<Crossing>> {
        self.crossing_sequence_from(p, DEFAULT_BASE_DIRECTION)
    }

    /// Walls met by a small counterclockwise loop around `p`, starting just
    /// after the direction `base`.
    pub fn crossing_sequence_from(&self, p: &Point, base: LatticeVec) -> Result<Vec<Crossing>> {
        if !self.singular_points().contains(p) {
            return Err(Error::NotSingular(p.to_string()));
        }
        Ok(self.crossings_at(p, base))
    }

    fn crossings_at(&self, p: &Point, base: LatticeVec) -> Vec<Crossing> {
        let mut out = Vec::new();
        for (i, w) in self.walls.iter().enumerate() {
            if w.is_trivial() || !w.contains(p) {
                continue;
            }
            let at_base = w.kind == WallKind::Ray && w.param(p).is_zero();
            out.push(Crossing {
                wall: i,
                sign: 1,
                half: w.m,
            });
            if !at_base {
                out.push(Crossing {
                    wall: i,
                    sign: -1,
                    half: -w.m,
                });
            }
        }
        out.sort_by(|x, y| {
            if x.half == y.half {
                Ordering::Equal
            } else {
                angle_from(base, x.half, y.half)
            }
        });
        out
    }

    fn product_of(&self, seq: &[Crossing], max_degree: Option<u32>) -> Result<Automorphism> {
        let mut images = Automorphism::identity(self.order).images().clone();
        for c in seq {
            let w = &self.walls[c.wall];
            images = [
                w.act(c.sign, &images[0], max_degree)?,
                w.act(c.sign, &images[1], max_degree)?,
            ];
        }
        Ok(Automorphism::from_images_unchecked(images))
    }

    /// `θ_γ` for a small counterclockwise loop around the singular point `p`.
    pub fn path_ordered_product(&self, p: &Point) -> Result<Automorphism> {
        self.path_ordered_product_from(p, DEFAULT_BASE_DIRECTION)
    }

    pub fn path_ordered_product_from(&self, p: &Point, base: LatticeVec) -> Result<Automorphism> {
        let seq = self.crossing_sequence_from(p, base)?;
        self.product_of(&seq, None)
    }

    /// The walls crossed by the straight path from `from` to `to`, in order,
    /// with their signs. Crossing a singular point is an error.
    pub fn path_crossings(&self, from: &Point, to: &Point) -> Result<Vec<Crossing>> {
        let v = (&to.x - &from.x, &to.y - &from.y);
        let mut hits: Vec<(Rational, Crossing)> = Vec::new();
        for (i, w) in self.walls.iter().enumerate() {
            if w.is_trivial() {
                continue;
            }
            let s0 = w.side(from);
            let s1 = w.side(to);
            if s0.is_zero() || s1.is_zero() {
                if w.contains(from) || w.contains(to) {
                    return Err(Error::OnSupport(format!("path endpoint lies on wall {w}")));
                }
                continue;
            }
            if s0.is_positive() == s1.is_positive() {
                continue;
            }
            let tau = &s0 / (&s0 - &s1);
            let x = Point::new(&from.x + &tau * &v.0, &from.y + &tau * &v.1);
            if !w.contains(&x) {
                continue;
            }
            if w.kind == WallKind::Ray && w.param(&x).is_zero() {
                return Err(Error::PathThroughSingular(x.to_string()));
            }
            let sign = if s1.is_positive() { 1 } else { -1 };
            hits.push((
                tau,
                Crossing {
                    wall: i,
                    sign,
                    half: w.m,
                },
            ));
        }
        hits.sort_by(|a, b| a.0.cmp(&b.0));
        for pair in hits.windows(2) {
            if pair[0].0 == pair[1].0 {
                let w1 = &self.walls[pair[0].1.wall];
                let w2 = &self.walls[pair[1].1.wall];
                if w1.m != w2.m && w1.m != -w2.m {
                    let x = Point::new(&from.x + &pair[0].0 * &v.0, &from.y + &pair[0].0 * &v.1);
                    return Err(Error::PathThroughSingular(x.to_string()));
                }
            }
        }
        Ok(hits.into_iter().map(|(_, c)| c).collect())
    }

    /// The composite of the crossing automorphisms along a straight path.
    pub fn path_product(&self, from: &Point, to: &Point) -> Result<Automorphism> {
        let seq = self.path_crossings(from, to)?;
        self.product_of(&seq, None)
    }

    /// Applies the crossings of a straight path to a series, in order.
    pub fn transport(
        &self,
        g: &TruncatedSeries,
        from: &Point,
        to: &Point,
    ) -> Result<TruncatedSeries> {
        let mut out = g.clone();
        for c in self.path_crossings(from, to)? {
            out = self.walls[c.wall].act(c.sign, &out, None)?;
        }
        Ok(out)
    }

    /// Checks `θ_γ = Id` at every singular point that is not excluded.
    pub fn is_consistent(&self) -> Result<ConsistencyCertificate> {
        self.is_consistent_from(DEFAULT_BASE_DIRECTION)
    }

    pub fn is_consistent_from(&self, base: LatticeVec) -> Result<ConsistencyCertificate> {
        let checked: Vec<Point> = self
            .singular_points()
            .into_iter()
            .filter(|p| !self.is_excluded(p))
            .collect();
        let results = par::try_map(&checked, |p| {
            let theta = self.product_of(&self.crossings_at(p, base), None)?;
            if theta.is_identity() {
                return Ok(None);
            }
            let log = theta.log_derivation()?;
            let degree = log.min_degree().unwrap_or(0);
            Ok(Some(ConsistencyFailure {
                point: p.clone(),
                log,
                degree,
            }))
        })?;
        let failures: Vec<ConsistencyFailure> = results.into_iter().flatten().collect();
        Ok(ConsistencyCertificate {
            consistent: failures.is_empty(),
            checked,
            failures,
        })
    }

    /// Completes the diagram by adding rays. Rays are incoming when every
    /// wall of the input is incoming, outgoing otherwise.
    pub fn complete(&self) -> Result<ScatteringDiagram> {
        let align =
            if !self.walls.is_empty() && self.walls.iter().all(|w| w.align == Align::Incoming) {
                Align::Incoming
            } else {
                Align::Outgoing
            };
        self.complete_with(align)
    }

    /// Kontsevich-Soibelman completion: for each filtration degree `k`, at
    /// every non-excluded singular point, the degree-`k` part of `log θ_γ`
    /// is cancelled by rays leaving the point. Added rays at a common point
    /// with a common direction are merged.
    pub fn complete_with(&self, align: Align) -> Result<ScatteringDiagram> {
        let markers = self
            .walls
            .iter()
            .fold(crate::series::Markers::EMPTY, |acc, w| {
                acc.union(w.f.markers_used())
            });
        let max_degree = self.order - 1 + markers.len();
        let mut d = self.clone();
        let n_initial = d.walls.len();
        let mut added: BTreeMap<(Point, LatticeVec), usize> = BTreeMap::new();
        for k in 1..=max_degree {
            let points: Vec<Point> = d
                .singular_points()
                .into_iter()
                .filter(|p| !d.is_excluded(p))
                .collect();
            let residues = par::try_map(&points, |p| {
                let seq = d.crossings_at(p, DEFAULT_BASE_DIRECTION);
                let theta = d.product_of(&seq, Some(k))?;
                let log = theta.log_derivation_upto(Some(k))?;
                if let Some(low) = log.min_degree() {
                    if low < k {
                        return Err(Error::Internal(format!(
                            "residue of degree {low} at {p} survived completion through degree {}",
                            k - 1
                        )));
                    }
                }
                Ok(log.degree_part(k))
            })?;
            for (p, residue) in points.iter().zip(residues) {
                let mut by_direction: BTreeMap<LatticeVec, TruncatedSeries> = BTreeMap::new();
                for (mono, v) in residue.vectors() {
                    let perpendicular = !mono.m.is_zero()
                        && (&v[0] * Rational::from_integer(mono.m.a.into())
                            + &v[1] * Rational::from_integer(mono.m.b.into()))
                        .is_zero();
                    if !perpendicular {
                        return Err(Error::NonPerpendicularResidue {
                            point: p.to_string(),
                            term: format!("{mono} d({}, {})", v[0], v[1]),
                        });
                    }
                    let (m0, _) = primitive_part(mono.m)?;
                    let dir = m0 * align.sign();
                    let n = dir.normal();
                    let nn = Rational::from_integer((n.c * n.c + n.d * n.d).into());
                    let lambda = (&v[0] * Rational::from_integer(n.c.into())
                        + &v[1] * Rational::from_integer(n.d.into()))
                        / nn;
                    // the new ray is crossed with sign +1 and acts by
                    // exp(a log f ∂_n); it must cancel λ z^mono ∂_n
                    let c = -lambda * Rational::from_integer(align.sign().into());
                    by_direction
                        .entry(dir)
                        .or_insert_with(|| TruncatedSeries::zero(d.order))
                        .add_term(*mono, c);
                }
                for (dir, g) in by_direction {
                    if g.is_zero() {
                        continue;
                    }
                    let key = (p.clone(), dir);
                    match added.get(&key) {
                        Some(&i) => {
                            let f = &d.walls[i].f + &g;
                            d.walls[i] = d.walls[i].with_function(f)?;
                        }
                        None => {
                            let f = &TruncatedSeries::one(d.order) + &g;
                            added.insert(key, d.walls.len());
                            d.walls
                                .push(Wall::new(dir, p.clone(), WallKind::Ray, align, f)?);
                        }
                    }
                }
            }
            if d.walls.len() > n_initial + 100_000 {
                return Err(Error::NonTermination(format!(
                    "more than 100000 rays added by degree {k}"
                )));
            }
        }
        d.walls.retain(|w| !w.is_trivial());
        Ok(d)
    }

    /// The diagram with every function truncated at `t^order`.
    pub fn truncate(&self, order: u32) -> ScatteringDiagram {
        let order = order.min(self.order);
        ScatteringDiagram {
            order,
            walls: self
                .walls
                .iter()
                .map(|w| w.truncate(order))
                .filter(|w| !w.is_trivial())
                .collect(),
            excluded: self.excluded.clone(),
        }
    }

    /// Sets the markers in `mask` to zero in every wall function.
    pub fn kill_markers(&self, mask: crate::series::Markers) -> ScatteringDiagram {
        ScatteringDiagram {
            order: self.order,
            walls: self
                .walls
                .iter()
                .map(|w| Wall {
                    f: w.f.kill_markers(mask),
                    ..w.clone()
                })
                .filter(|w| !w.is_trivial())
                .collect(),
            excluded: self.excluded.clone(),
        }
    }

    /// Merges walls with the same support and alignment (multiplying their
    /// functions), drops trivial walls and sorts the rest deterministically.
    pub fn canonical(&self) -> ScatteringDiagram {
        let mut groups: BTreeMap<(WallKind, LatticeVec, Align, Point), Wall> = BTreeMap::new();
        for w in &self.walls {
            let key = w.support_key();
            match groups.get_mut(&key) {
                Some(g) => g.f = &g.f * &w.f,
                None => {
                    let mut w = w.clone();
                    w.base = key.3.clone();
                    groups.insert(key, w);
                }
            }
        }
        let mut walls: Vec<Wall> = groups.into_values().filter(|w| !w.is_trivial()).collect();
        walls.sort_by(wall_cmp);
        let mut excluded = self.excluded.clone();
        excluded.sort();
        excluded.dedup();
        ScatteringDiagram {
            order: self.order,
            walls,
            excluded,
        }
    }

    /// Equality as diagrams after truncating both at `t^order` and merging.
    pub fn equivalent_mod(&self, other: &ScatteringDiagram, order: u32) -> bool {
        let a = self.truncate(order).canonical();
        let b = other.truncate(order).canonical();
        a.order == b.order && a.walls == b.walls
    }

    /// Walls of `self` not present among the first `n` walls: the rays added by completion.
    pub fn added_since(&self, n: usize) -> &[Wall] {
        &self.walls[n.min(self.walls.len())..]
    }
}

fn wall_cmp(a: &Wall, b: &Wall) -> Ordering {
    a.kind
        .cmp(&b.kind)
        .then_with(|| a.base.cmp(&b.base))
        .then_with(|| a.m.angle_cmp(&b.m))
        .then_with(|| a.align.cmp(&b.align))
        .then_with(|| a.f.to_string().cmp(&b.f.to_string()))
}

/// The transversal intersection point of two wall supports, if any.
fn intersection(w1: &Wall, w2: &Wall) -> Option<Point> {
    let det = w1.m.a * w2.m.b - w1.m.b * w2.m.a;
    if det == 0 {
        return None;
    }
    // base1 + s m1 = base2 + u m2
    let dx = &w2.base.x - &w1.base.x;
    let dy = &w2.base.y - &w1.base.y;
    let det_q = Rational::from_integer(det.into());
    let s = (&dx * Rational::from_integer(w2.m.b.into())
        - &dy * Rational::from_integer(w2.m.a.into()))
        / &det_q;
    let u = (&dx * Rational::from_integer(w1.m.b.into())
        - &dy * Rational::from_integer(w1.m.a.into()))
        / &det_q;
    if (w1.kind == WallKind::Ray && s.is_negative())
        || (w2.kind == WallKind::Ray && u.is_negative())
    {
        return None;
    }
    Some(w1.base.offset(w1.m, &s))
}

impl fmt::Display for ScatteringDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::format::write_diagram(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(order: u32, text: &str) -> TruncatedSeries {
        TruncatedSeries::parse(order, text).unwrap()
    }

    fn two_lines(order: u32, f1: &str, f2: &str) -> ScatteringDiagram {
        let o = Point::origin();
        ScatteringDiagram::new(
            order,
            vec![
                Wall::line(LatticeVec::new(1, 0), o.clone(), s(order, f1)).unwrap(),
                Wall::line(LatticeVec::new(0, 1), o, s(order, f2)).unwrap(),
            ],
            vec![],
        )
        .unwrap()
    }

    fn pentagon(order: u32) -> ScatteringDiagram {
        let mut d = two_lines(order, "1 + t z^(1,0)", "1 + t z^(0,1)");
        d.push(
            Wall::ray(
                LatticeVec::new(1, 1),
                Point::origin(),
                Align::Outgoing,
                s(order, "1 + t^2 z^(1,1)"),
            )
            .unwrap(),
        )
        .unwrap();
        d
    }

    #[test]
    fn singular_points_examples() {
        let d = two_lines(3, "1 + t z^(1,0)", "1 + t z^(0,1)");
        assert_eq!(d.singular_points(), vec![Point::origin()]);
        let r = ScatteringDiagram::new(
            3,
            vec![Wall::ray(
                LatticeVec::new(1, 1),
                Point::from_ints(2, 3),
                Align::Outgoing,
                s(3, "1 + t z^(1,1)"),
            )
            .unwrap()],
            vec![],
        )
        .unwrap();
        assert_eq!(r.singular_points(), vec![Point::from_ints(2, 3)]);
        let mut d2 = two_lines(3, "1 + t z^(1,0)", "1 + t z^(0,1)");
        d2.push(
            Wall::ray(
                LatticeVec::new(1, 1),
                Point::from_ints(1, 1),
                Align::Outgoing,
                s(3, "1 + t z^(1,1)"),
            )
            .unwrap(),
        )
        .unwrap();
        assert_eq!(
            d2.singular_points(),
            vec![Point::origin(), Point::from_ints(1, 1)]
        );
    }

    #[test]
    fn crossing_sequences() {
        let d = two_lines(3, "1 + t z^(1,0)", "1 + t z^(0,1)");
        let seq = d.crossing_sequence(&Point::origin()).unwrap();
        assert_eq!(seq.len(), 4);
        for w in seq.windows(2) {
            assert_ne!(w[0].wall, w[1].wall);
        }
        assert_eq!(
            pentagon(3)
                .crossing_sequence(&Point::origin())
                .unwrap()
                .len(),
            5
        );
        assert!(matches!(
            d.crossing_sequence(&Point::from_ints(1, 1)),
            Err(Error::NotSingular(_))
        ));
    }

    #[test]
    fn pentagon_is_consistent() {
        for order in 1..=8 {
            let cert = pentagon(order).is_consistent().unwrap();
            assert!(cert.consistent, "order {order}: {cert}");
        }
    }

    #[test]
    fn two_bare_lines_fail_at_degree_two() {
        let d = two_lines(4, "1 + t z^(1,0)", "1 + t z^(0,1)");
        let cert = d.is_consistent().unwrap();
        assert!(!cert.consistent);
        assert_eq!(cert.failures.len(), 1);
        assert_eq!(cert.failures[0].degree, 2);
        let lead = cert.failures[0].log.degree_part(2);
        assert_eq!(lead.len(), 1);
        let term = &lead.terms()[0];
        assert_eq!(term.mono, Monomial::z(1, 1).with_t(2));
        assert_eq!(term.n, DualVec::new(-1, 1));
        assert_eq!(term.coeff.abs(), Rational::one());
    }

    #[test]
    fn pentagon_completion() {
        let d = two_lines(8, "1 + t z^(1,0)", "1 + t z^(0,1)");
        let c = d.complete().unwrap();
        let added = c.added_since(2);
        assert_eq!(added.len(), 1);
        assert_eq!(added[0].direction(), LatticeVec::new(1, 1));
        assert_eq!(added[0].function(), &s(8, "1 + t^2 z^(1,1)"));
        assert!(c.is_consistent().unwrap().consistent);
    }

    #[test]
    fn single_wall_is_already_complete() {
        let d = ScatteringDiagram::new(
            4,
            vec![Wall::line(
                LatticeVec::new(1, 0),
                Point::origin(),
                s(4, "1 + t z^(1,0)"),
            )
            .unwrap()],
            vec![],
        )
        .unwrap();
        assert_eq!(d.complete().unwrap(), d);
        assert!(d.is_consistent().unwrap().consistent);
        assert!(
            ScatteringDiagram::empty(3)
                .is_consistent()
                .unwrap()
                .consistent
        );
    }

    #[test]
    fn line_crossed_twice_is_identity() {
        let mut d = ScatteringDiagram::empty(4);
        d.push(
            Wall::line(
                LatticeVec::new(2, 1),
                Point::from_ints(0, 1),
                s(4, "1 + t z^(2,1)"),
            )
            .unwrap(),
        )
        .unwrap();
        d.push(
            Wall::ray(
                LatticeVec::new(1, 0),
                Point::from_ints(-2, 0),
                Align::Outgoing,
                s(4, "1 + t z^(1,0)"),
            )
            .unwrap(),
        )
        .unwrap();
        // (-2, 0) lies on the line through (0,1) with direction (2,1)
        assert!(d.singular_points().contains(&Point::from_ints(-2, 0)));
        let theta = d.path_ordered_product(&Point::from_ints(-2, 0)).unwrap();
        assert!(!theta.is_identity());
    }

    #[test]
    fn wall_validation() {
        let o = Point::origin();
        assert!(Wall::line(LatticeVec::new(2, 0), o.clone(), s(3, "1 + t z^(1,0)")).is_err());
        assert!(Wall::line(LatticeVec::new(1, 0), o.clone(), s(3, "1 + t z^(0,1)")).is_err());
        assert!(Wall::line(LatticeVec::new(1, 0), o.clone(), s(3, "1 + t z^(-1,0)")).is_err());
        assert!(Wall::ray(
            LatticeVec::new(1, 0),
            o.clone(),
            Align::Incoming,
            s(3, "1 + t z^(-1,0)")
        )
        .is_ok());
        assert!(Wall::line(LatticeVec::new(1, 0), o.clone(), s(3, "1 + z^(1,0)")).is_err());
        assert!(Wall::line(LatticeVec::new(1, 0), o, s(3, "2 + t z^(1,0)")).is_err());
    }

    #[test]
    fn verdict_is_base_direction_independent() {
        let bare = two_lines(5, "1 + t z^(1,0)", "1 + t z^(0,1)");
        let done = bare.complete().unwrap();
        for base in [
            LatticeVec::new(997, -1),
            LatticeVec::new(-3, 7),
            LatticeVec::new(5, 11),
        ] {
            assert!(!bare.is_consistent_from(base).unwrap().consistent);
            assert!(done.is_consistent_from(base).unwrap().consistent);
        }
    }
}
