//! Leading-order sum-over-trees solution of `Φ = Π - ½ H[Φ, Φ]`.
//!
//! Terms carry a support label instead of a differential form. The bracket
//! of two line or ray supported terms lives at the transversal intersection
//! point of their supports, and the propagator `H` pushes a point-supported
//! term onto the ray from that point in the direction of its exponent.
//!
//! The bracket of supported terms carries the orientation factor
//! `-sign(det(m_a, m_b))`, where `m_a`, `m_b` are the support directions. With
//! it, `-½ Σ_{(a,b)}` over ordered pairs reproduces the rays added by
//! completion at order `t^2` (the pentagon gives `+t^2 z^(1,1) ∂_(-1,1)` on the
//! diagonal ray, the log of `1 + t^2 z^(1,1)`).

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::lattice::{det, primitive_part, LatticeVec, Point};
use crate::lie::{LieElement, LieTerm};
use crate::par;
use crate::scattering::{Align, ScatteringDiagram, Wall, WallKind};
use crate::series::{Monomial, TruncatedSeries};
use crate::Rational;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SupportLabel {
    Line { base: Point, direction: LatticeVec },
    Ray { base: Point, direction: LatticeVec },
    Point(Point),
}

impl SupportLabel {
    fn direction(&self) -> Option<LatticeVec> {
        match self {
            SupportLabel::Line { direction, .. } | SupportLabel::Ray { direction, .. } => {
                Some(*direction)
            }
            SupportLabel::Point(_) => None,
        }
    }

    /// The same support with a line's base moved to its point closest to
    /// the origin, so that equal supports have equal labels.
    fn canonical(&self) -> SupportLabel {
        match self {
            SupportLabel::Line { base, direction } => {
                let n = direction.normal();
                let nn = Rational::from_integer((n.c * n.c + n.d * n.d).into());
                let c = base.pair_rel(&Point::origin(), n) / nn;
                SupportLabel::Line {
                    base: Point::new(
                        &c * Rational::from_integer(n.c.into()),
                        &c * Rational::from_integer(n.d.into()),
                    ),
                    direction: *direction,
                }
            }
            other => other.clone(),
        }
    }
}

impl fmt::Display for SupportLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SupportLabel::Line { base, direction } => write!(f, "line {base} + R{direction}"),
            SupportLabel::Ray { base, direction } => write!(f, "ray {base} + R>=0{direction}"),
            SupportLabel::Point(p) => write!(f, "point {p}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SupportedTerm {
    pub lie: LieTerm,
    pub support: SupportLabel,
}

impl SupportedTerm {
    /// Checks that line and ray supported terms are parallel to their
    /// support and lie in the vertex subalgebra.
    pub fn new(lie: LieTerm, support: SupportLabel) -> Result<Self> {
        if let Some(d) = support.direction() {
            if d.is_zero() || !d.is_primitive() {
                return Err(Error::InvalidInput(format!(
                    "support direction {d} is not primitive"
                )));
            }
            if det(d, lie.mono.m) != 0 || !lie.in_vertex_algebra() {
                return Err(Error::InvalidInput(format!(
                    "term {lie} does not fit its support {support}"
                )));
            }
        }
        Ok(SupportedTerm { lie, support })
    }

    /// The terms of `log θ_w` of a wall, supported on the wall.
    pub fn from_wall(w: &Wall) -> Result<Vec<SupportedTerm>> {
        let support = match w.kind() {
            WallKind::Line => SupportLabel::Line {
                base: w.base().clone(),
                direction: w.direction(),
            },
            WallKind::Ray => SupportLabel::Ray {
                base: w.base().clone(),
                direction: w.direction(),
            },
        };
        Ok(w.log_derivation()?
            .terms()
            .into_iter()
            .map(|lie| SupportedTerm {
                lie,
                support: support.clone(),
            })
            .collect())
    }

    pub fn degree(&self) -> u32 {
        self.lie.mono.degree()
    }
}

impl fmt::Display for SupportedTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} on {}", self.lie, self.support)
    }
}

fn intersection(a: &SupportLabel, b: &SupportLabel) -> Option<Point> {
    let (ba, da, ray_a) = match a {
        SupportLabel::Line { base, direction } => (base, *direction, false),
        SupportLabel::Ray { base, direction } => (base, *direction, true),
        SupportLabel::Point(_) => return None,
    };
    let (bb, db, ray_b) = match b {
        SupportLabel::Line { base, direction } => (base, *direction, false),
        SupportLabel::Ray { base, direction } => (base, *direction, true),
        SupportLabel::Point(_) => return None,
    };
    let d = det(da, db);
    if d == 0 {
        return None;
    }
    let dq = Rational::from_integer(d.into());
    let dx = &bb.x - &ba.x;
    let dy = &bb.y - &ba.y;
    let s = (&dx * Rational::from_integer(db.b.into()) - &dy * Rational::from_integer(db.a.into()))
        / &dq;
    let u = (&dx * Rational::from_integer(da.b.into()) - &dy * Rational::from_integer(da.a.into()))
        / &dq;
    if (ray_a && s.is_negative()) || (ray_b && u.is_negative()) {
        return None;
    }
    Some(ba.offset(da, &s))
}

fn bracket_terms(a: &LieTerm, b: &LieTerm, order: u32) -> Option<LieTerm> {
    let x = LieElement::from_terms(order, [a.clone()]);
    let y = LieElement::from_terms(order, [b.clone()]);
    x.bracket(&y).ok()?.terms().into_iter().next()
}

/// `-sign(det(m_a, m_b)) [a, b]` supported at the transversal intersection
/// of the supports; `None` when the supports are parallel or disjoint or
/// the bracket vanishes.
pub fn bracket_supported(
    a: &SupportedTerm,
    b: &SupportedTerm,
    order: u32,
) -> Option<SupportedTerm> {
    let p = intersection(&a.support, &b.support)?;
    let (da, db) = (a.support.direction()?, b.support.direction()?);
    let mut lie = bracket_terms(&a.lie, &b.lie, order)?;
    if det(da, db) > 0 {
        lie.coeff = -lie.coeff;
    }
    Some(SupportedTerm {
        lie,
        support: SupportLabel::Point(p),
    })
}

/// Moves a point-supported term onto the ray from the point in the
/// direction of its exponent.
pub fn propagate(term: &SupportedTerm) -> Result<SupportedTerm> {
    let SupportLabel::Point(p) = &term.support else {
        return Err(Error::NotPointSupported(term.to_string()));
    };
    let (m0, _) = primitive_part(term.lie.mono.m)?;
    Ok(SupportedTerm {
        lie: term.lie.clone(),
        support: SupportLabel::Ray {
            base: p.clone(),
            direction: m0,
        },
    })
}

type TermKey = (SupportLabel, Monomial);

/// Sums terms with the same support and monomial.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct TermSum {
    terms: BTreeMap<TermKey, [Rational; 2]>,
}

impl TermSum {
    fn add(&mut self, t: &SupportedTerm) {
        let v = [
            &t.lie.coeff * Rational::from_integer(t.lie.n.c.into()),
            &t.lie.coeff * Rational::from_integer(t.lie.n.d.into()),
        ];
        let key = (t.support.canonical(), t.lie.mono);
        let e = self
            .terms
            .entry(key.clone())
            .or_insert_with(|| [Rational::zero(), Rational::zero()]);
        e[0] += &v[0];
        e[1] += &v[1];
        if e[0].is_zero() && e[1].is_zero() {
            self.terms.remove(&key);
        }
    }

    fn to_terms(&self) -> Vec<SupportedTerm> {
        self.terms
            .iter()
            .filter_map(|((s, m), v)| {
                LieTerm::from_vector(*m, v).map(|lie| SupportedTerm {
                    lie,
                    support: s.clone(),
                })
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MCSolution {
    pub order: u32,
    pub input: Vec<SupportedTerm>,
    /// `Φ - Π` by filtration degree.
    pub corrections: BTreeMap<u32, Vec<SupportedTerm>>,
}

impl MCSolution {
    pub fn all_corrections(&self) -> Vec<SupportedTerm> {
        self.corrections.values().flatten().cloned().collect()
    }

    pub fn is_trivial(&self) -> bool {
        self.corrections.is_empty()
    }

    /// Per-degree listing in canonical order.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("order {}\n", self.order));
        out.push_str("input:\n");
        for t in &self.input {
            out.push_str(&format!("  {t}\n"));
        }
        if self.corrections.is_empty() {
            out.push_str("no corrections\n");
        }
        for (k, terms) in &self.corrections {
            out.push_str(&format!("degree {k}:\n"));
            for t in terms {
                out.push_str(&format!("  {t}\n"));
            }
        }
        out
    }
}

/// Iterates `Φ ← Π - ½ Σ_{(a,b)} H(bracket(a, b))` over ordered pairs of
/// terms of `Φ` until it stabilizes modulo the truncation.
pub fn solve(input: &[SupportedTerm], order: u32) -> Result<MCSolution> {
    for t in input {
        if matches!(t.support, SupportLabel::Point(_)) {
            return Err(Error::InvalidInput(format!(
                "input term {t} is point supported"
            )));
        }
        if t.degree() == 0 {
            return Err(Error::InvalidInput(format!(
                "input term {t} has filtration degree 0"
            )));
        }
        if t.lie.mono.t >= order {
            return Err(Error::InvalidInput(format!(
                "input term {t} is beyond the truncation"
            )));
        }
    }
    let mut pi = TermSum::default();
    for t in input {
        pi.add(t);
    }
    let mut phi = pi.clone();
    let half = Rational::new((-1).into(), 2.into());
    let mut iterations = 0usize;
    loop {
        let terms = phi.to_terms();
        let rows = par::try_map(&terms, |a| {
            let mut out = Vec::new();
            for b in &terms {
                if let Some(c) = bracket_supported(a, b, order) {
                    let mut r = propagate(&c)?;
                    r.lie.coeff *= &half;
                    out.push(r);
                }
            }
            Ok(out)
        })?;
        let mut next = pi.clone();
        for r in rows.iter().flatten() {
            next.add(r);
        }
        if next == phi {
            break;
        }
        phi = next;
        iterations += 1;
        if iterations > 4096 {
            return Err(Error::NonTermination(
                "Maurer-Cartan iteration did not stabilize".into(),
            ));
        }
    }
    let mut delta = phi;
    for t in input {
        let mut neg = t.clone();
        neg.lie.coeff = -neg.lie.coeff;
        delta.add(&neg);
    }
    let mut corrections: BTreeMap<u32, Vec<SupportedTerm>> = BTreeMap::new();
    for t in delta.to_terms() {
        corrections.entry(t.degree()).or_default().push(t);
    }
    Ok(MCSolution {
        order,
        input: input.to_vec(),
        corrections,
    })
}

/// Groups terms by support into walls with `log f = Σ <v, n> / |n|^2 z^m`.
fn walls_of(terms: &[SupportedTerm], order: u32) -> Result<Vec<Wall>> {
    let mut groups: BTreeMap<SupportLabel, TruncatedSeries> = BTreeMap::new();
    for t in terms {
        let d = t
            .support
            .direction()
            .ok_or_else(|| Error::NotPointSupported(t.to_string()))?;
        let n = d.normal();
        if !t.lie.in_vertex_algebra() || det(d, t.lie.mono.m) != 0 {
            return Err(Error::NonPerpendicularResidue {
                point: t.support.to_string(),
                term: t.lie.to_string(),
            });
        }
        // <v, n> / |n|^2 with v = coeff · t.n
        let nn = Rational::from_integer((n.c * n.c + n.d * n.d).into());
        let vn = Rational::from_integer((t.lie.n.c * n.c + t.lie.n.d * n.d).into());
        let mut c = &t.lie.coeff * vn / nn;
        // incoming terms act through the opposite normal
        let along = t.lie.mono.m.a * d.a + t.lie.mono.m.b * d.b > 0;
        if !along {
            c = -c;
        }
        groups
            .entry(t.support.canonical())
            .or_insert_with(|| TruncatedSeries::zero(order))
            .add_term(t.lie.mono, c);
    }
    let mut walls = Vec::new();
    for (support, log_f) in groups {
        if log_f.is_zero() {
            continue;
        }
        let first = log_f
            .terms()
            .next()
            .map(|(m, _)| m.m)
            .unwrap_or(LatticeVec::ZERO);
        let (kind, base, d) = match support {
            SupportLabel::Line { base, direction } => (WallKind::Line, base, direction),
            SupportLabel::Ray { base, direction } => (WallKind::Ray, base, direction),
            SupportLabel::Point(_) => unreachable!("point supports are rejected above"),
        };
        let align = if first.a * d.a + first.b * d.b > 0 {
            Align::Outgoing
        } else {
            Align::Incoming
        };
        walls.push(Wall::new(d, base, kind, align, log_f.exp()?)?);
    }
    Ok(walls)
}

/// The scattering diagram of a solution: the input walls plus one ray per
/// ray support of the corrections.
pub fn diagram_of(sol: &MCSolution) -> Result<ScatteringDiagram> {
    let mut walls = walls_of(&sol.input, sol.order)?;
    walls.extend(walls_of(&sol.all_corrections(), sol.order)?);
    ScatteringDiagram::new(sol.order, walls, vec![])
}

/// The input terms of a diagram's walls.
pub fn input_of(d: &ScatteringDiagram) -> Result<Vec<SupportedTerm>> {
    let mut out = Vec::new();
    for w in d.walls() {
        out.extend(SupportedTerm::from_wall(w)?);
    }
    Ok(out)
}

/// A rooted unordered binary tree with leaves labelled by input indices.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Tree {
    Leaf(usize),
    Node(Box<Tree>, Box<Tree>),
}

impl Tree {
    pub fn leaves(&self) -> usize {
        match self {
            Tree::Leaf(_) => 1,
            Tree::Node(a, b) => a.leaves() + b.leaves(),
        }
    }
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tree::Leaf(i) => write!(f, "L{i}"),
            Tree::Node(a, b) => write!(f, "[{a},{b}]"),
        }
    }
}

/// Every tree with a nonzero value, by increasing filtration degree. A
/// leaf is an input term; a vertex with distinct children `T1`, `T2` has
/// value `-H(bracket(T1, T2))`, the two orderings of `-½ Σ` combined.
pub fn enumerate_trees(input: &[SupportedTerm], order: u32) -> Result<Vec<(Tree, SupportedTerm)>> {
    let markers = input.iter().fold(crate::series::Markers::EMPTY, |acc, t| {
        acc.union(t.lie.mono.markers)
    });
    let max_degree = order.saturating_sub(1) + markers.len();
    let mut by_degree: BTreeMap<u32, Vec<(Tree, SupportedTerm)>> = BTreeMap::new();
    for (i, t) in input.iter().enumerate() {
        by_degree
            .entry(t.degree())
            .or_default()
            .push((Tree::Leaf(i), t.clone()));
    }
    let min_degree = match by_degree.keys().next() {
        Some(&d) => d,
        None => return Ok(Vec::new()),
    };
    let mut d = min_degree;
    while d <= max_degree {
        let mut new = Vec::new();
        for d1 in min_degree..=d / 2 {
            let d2 = d - d1;
            let (Some(l1), Some(l2)) = (by_degree.get(&d1), by_degree.get(&d2)) else {
                continue;
            };
            for (i, (t1, v1)) in l1.iter().enumerate() {
                let start = if d1 == d2 { i + 1 } else { 0 };
                for (t2, v2) in &l2[start..] {
                    if v1.lie.mono.t + v2.lie.mono.t >= order {
                        continue;
                    }
                    if let Some(c) = bracket_supported(v1, v2, order) {
                        let mut r = propagate(&c)?;
                        r.lie.coeff = -r.lie.coeff;
                        new.push((Tree::Node(Box::new(t1.clone()), Box::new(t2.clone())), r));
                    }
                }
            }
        }
        if !new.is_empty() {
            by_degree.entry(d).or_default().extend(new);
        }
        d += 1;
    }
    Ok(by_degree.into_values().flatten().collect())
}

/// Sum of the values of the trees with at least two leaves, by degree; equal
/// to the corrections of [`solve`].
pub fn tree_corrections(trees: &[(Tree, SupportedTerm)]) -> BTreeMap<u32, Vec<SupportedTerm>> {
    let mut sum = TermSum::default();
    for (t, v) in trees {
        if t.leaves() >= 2 {
            sum.add(v);
        }
    }
    let mut out: BTreeMap<u32, Vec<SupportedTerm>> = BTreeMap::new();
    for t in sum.to_terms() {
        out.entry(t.degree()).or_default().push(t);
    }
    out
}

pub fn dump_trees(trees: &[(Tree, SupportedTerm)]) -> String {
    let mut out = String::new();
    for (t, v) in trees {
        out.push_str(&format!("{t}: {v}\n"));
    }
    out
}

/// Whether `m` lies in the open cone spanned by `m1` and `m2`.
pub fn strictly_inside_cone(m: LatticeVec, m1: LatticeVec, m2: LatticeVec) -> bool {
    let d = det(m1, m2);
    if d == 0 {
        return false;
    }
    // m = a m1 + b m2 with a = det(m, m2)/d, b = det(m1, m)/d
    let a = det(m, m2) * d.signum();
    let b = det(m1, m) * d.signum();
    a > 0 && b > 0
}

/// The solve/complete comparison reported by the CLI.
pub fn matches_completion(input: &ScatteringDiagram, up_to: u32) -> Result<bool> {
    let order = up_to.min(input.order());
    let d = input.truncate(order);
    let sol = solve(&input_of(&d)?, order)?;
    let mc = diagram_of(&sol)?;
    let done = d.complete()?;
    Ok(mc.equivalent_mod(&done, order))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::DualVec;
    use num_traits::One;

    fn s(order: u32, text: &str) -> TruncatedSeries {
        TruncatedSeries::parse(order, text).unwrap()
    }

    fn pentagon_input(order: u32) -> ScatteringDiagram {
        ScatteringDiagram::new(
            order,
            vec![
                Wall::line(
                    LatticeVec::new(1, 0),
                    Point::origin(),
                    s(order, "1 + t z^(1,0)"),
                )
                .unwrap(),
                Wall::line(
                    LatticeVec::new(0, 1),
                    Point::origin(),
                    s(order, "1 + t z^(0,1)"),
                )
                .unwrap(),
            ],
            vec![],
        )
        .unwrap()
    }

    fn line_term(c: i64, m: (i64, i64), t: u32, dir: (i64, i64)) -> SupportedTerm {
        let d = LatticeVec::new(dir.0, dir.1);
        SupportedTerm::new(
            LieTerm::new(
                Rational::from_integer(c.into()),
                Monomial::z(m.0, m.1).with_t(t),
                d.normal(),
            )
            .unwrap(),
            SupportLabel::Line {
                base: Point::origin(),
                direction: d,
            },
        )
        .unwrap()
    }

    #[test]
    fn bracket_supported_examples() {
        let h = line_term(1, (1, 0), 1, (1, 0));
        let v = line_term(1, (0, 1), 1, (0, 1));
        let b = bracket_supported(&h, &v, 4).unwrap();
        assert_eq!(b.support, SupportLabel::Point(Point::origin()));
        assert_eq!(b.lie.mono, Monomial::z(1, 1).with_t(2));
        assert_eq!(b.lie.n, DualVec::new(-1, 1));
        assert_eq!(b.lie.coeff.abs(), Rational::one());
        let mut h2 = h.clone();
        h2.support = SupportLabel::Line {
            base: Point::from_ints(0, 1),
            direction: LatticeVec::new(1, 0),
        };
        assert!(bracket_supported(&h, &h2, 4).is_none());
        let h3 = line_term(1, (2, 0), 1, (1, 0));
        assert!(bracket_supported(&h, &h3, 4).is_none());
    }

    #[test]
    fn propagate_examples() {
        let h = line_term(1, (1, 0), 1, (1, 0));
        let v = line_term(1, (0, 1), 1, (0, 1));
        let r = propagate(&bracket_supported(&h, &v, 4).unwrap()).unwrap();
        assert_eq!(
            r.support,
            SupportLabel::Ray {
                base: Point::origin(),
                direction: LatticeVec::new(1, 1)
            }
        );
        let p = SupportedTerm {
            lie: LieTerm::new(
                Rational::one(),
                Monomial::z(2, 2).with_t(2),
                DualVec::new(-1, 1),
            )
            .unwrap(),
            support: SupportLabel::Point(Point::from_ints(3, 4)),
        };
        assert_eq!(
            propagate(&p).unwrap().support,
            SupportLabel::Ray {
                base: Point::from_ints(3, 4),
                direction: LatticeVec::new(1, 1)
            }
        );
        assert!(matches!(propagate(&h), Err(Error::NotPointSupported(_))));
    }

    #[test]
    fn pentagon_solution_at_t3() {
        let input = input_of(&pentagon_input(3)).unwrap();
        let sol = solve(&input, 3).unwrap();
        let all = sol.all_corrections();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].lie.mono, Monomial::z(1, 1).with_t(2));
        assert_eq!(all[0].lie.coeff, Rational::one());
        assert_eq!(
            all[0].support,
            SupportLabel::Ray {
                base: Point::origin(),
                direction: LatticeVec::new(1, 1)
            }
        );
        let mc = diagram_of(&sol).unwrap();
        assert!(mc.equivalent_mod(&pentagon_input(3).complete().unwrap(), 3));
    }

    #[test]
    fn single_and_parallel_walls_have_no_corrections() {
        let one = ScatteringDiagram::new(
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
        let sol = solve(&input_of(&one).unwrap(), 4).unwrap();
        assert!(sol.is_trivial());
        assert!(diagram_of(&sol).unwrap().equivalent_mod(&one, 4));
        let mut two = one.clone();
        two.push(
            Wall::line(
                LatticeVec::new(1, 0),
                Point::from_ints(0, 1),
                s(4, "1 + t z^(1,0)"),
            )
            .unwrap(),
        )
        .unwrap();
        assert!(solve(&input_of(&two).unwrap(), 4).unwrap().is_trivial());
    }

    #[test]
    fn trees_match_solve() {
        for order in 2..=5 {
            let input = input_of(&pentagon_input(order)).unwrap();
            let trees = enumerate_trees(&input, order).unwrap();
            let sol = solve(&input, order).unwrap();
            assert_eq!(tree_corrections(&trees), sol.corrections, "order {order}");
        }
        let input = input_of(&pentagon_input(3)).unwrap();
        let trees = enumerate_trees(&input, 3).unwrap();
        let internal: Vec<_> = trees.iter().filter(|(t, _)| t.leaves() >= 2).collect();
        assert_eq!(internal.len(), 1);
        assert_eq!(
            trees.iter().filter(|(t, _)| t.leaves() == 1).count(),
            input.len()
        );
    }

    #[test]
    fn cone_predicate() {
        let (e1, e2) = (LatticeVec::new(1, 0), LatticeVec::new(0, 1));
        assert!(strictly_inside_cone(LatticeVec::new(1, 1), e1, e2));
        assert!(strictly_inside_cone(LatticeVec::new(1, 1), e2, e1));
        assert!(!strictly_inside_cone(LatticeVec::new(1, 0), e1, e2));
        assert!(!strictly_inside_cone(LatticeVec::new(-1, 1), e1, e2));
    }
}
