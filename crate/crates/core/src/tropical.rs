//! Toric fans, tropical disks, the diagram of a fan with marked points, and
//! the perturbed superpotential computed by broken lines.
//!
//! A fan ray `m_j` with support number `λ_j` contributes the monomial
//! `t^{λ_j} z^{m_j}`. A marked point `P_i` contributes incoming rays
//! `P_i - R_{≥0} m_j` with functions `1 + u_i t^{λ_j} z^{m_j}`; the square-zero
//! marker `u_i` records that a disk passes through `P_i` at most once.
//!
//! Broken lines travel in the direction `-p` of their carried monomial
//! `c z^p`. Crossing a wall they either continue unchanged or replace
//! `c z^p` by one term of its image under the crossing automorphism.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::lattice::{det, primitive_part, LatticeVec, Point};
use crate::par;
use crate::scattering::{Align, ScatteringDiagram, Wall, WallKind};
use crate::series::{Markers, Monomial, TruncatedSeries};
use crate::Rational;

/// A complete toric surface fan with support numbers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fan {
    rays: Vec<LatticeVec>,
    support: Vec<u32>,
}

impl Fan {
    /// Validates and sorts the rays counterclockwise; `support[j]` stays
    /// attached to `rays[j]`.
    pub fn new(rays: Vec<LatticeVec>, support: Vec<u32>) -> Result<Fan> {
        if rays.len() != support.len() {
            return Err(Error::InvalidFan(format!(
                "{} rays but {} support numbers",
                rays.len(),
                support.len()
            )));
        }
        if rays.len() < 3 {
            return Err(Error::InvalidFan(
                "a complete fan needs at least 3 rays".into(),
            ));
        }
        for m in &rays {
            if m.is_zero() || !m.is_primitive() {
                return Err(Error::InvalidFan(format!("ray {m} is not primitive")));
            }
        }
        let mut pairs: Vec<(LatticeVec, u32)> = rays.into_iter().zip(support).collect();
        pairs.sort_by(|a, b| a.0.angle_cmp(&b.0));
        for i in 0..pairs.len() {
            let (u, w) = (pairs[i].0, pairs[(i + 1) % pairs.len()].0);
            if u == w || (det(u, w) == 0 && u.a * w.a + u.b * w.b > 0) {
                return Err(Error::InvalidFan(format!("rays {u} and {w} coincide")));
            }
            if det(u, w) <= 0 {
                return Err(Error::InvalidFan(format!(
                    "rays {u} and {w} are not consecutive rays of a complete fan"
                )));
            }
        }
        let (rays, support) = pairs.into_iter().unzip();
        Ok(Fan { rays, support })
    }

    /// The projective plane with the standard moment polytope, `λ = (0,0,1)`.
    pub fn p2() -> Fan {
        Fan::new(
            vec![
                LatticeVec::new(1, 0),
                LatticeVec::new(0, 1),
                LatticeVec::new(-1, -1),
            ],
            vec![0, 0, 1],
        )
        .expect("valid fan")
    }

    /// `P^1 × P^1` with `λ = (0,0,1,1)`.
    pub fn p1xp1() -> Fan {
        Fan::new(
            vec![
                LatticeVec::new(1, 0),
                LatticeVec::new(0, 1),
                LatticeVec::new(-1, 0),
                LatticeVec::new(0, -1),
            ],
            vec![0, 0, 1, 1],
        )
        .expect("valid fan")
    }

    pub fn rays(&self) -> &[LatticeVec] {
        &self.rays
    }

    pub fn support(&self) -> &[u32] {
        &self.support
    }

    /// The monomial `t^{λ_j} z^{m_j}` of ray `j`.
    pub fn monomial(&self, j: usize) -> Monomial {
        Monomial::new(self.rays[j], self.support[j], Markers::EMPTY)
    }

    /// Nonnegative integer weights `w` with `Σ w_j m_j = p` and
    /// `Σ w_j λ_j = t`, when there is exactly one such `w`.
    pub fn unique_decomposition(&self, p: LatticeVec, t: u32) -> Option<Vec<u32>> {
        let bound = (p.a.abs() + p.b.abs()) as u32 + t * 2 + 2 * self.rays.len() as u32 + 4;
        let mut found: Vec<Vec<u32>> = Vec::new();
        let mut w = vec![0u32; self.rays.len()];
        fn rec(
            fan: &Fan,
            j: usize,
            rem: LatticeVec,
            rem_t: i64,
            budget: u32,
            w: &mut Vec<u32>,
            found: &mut Vec<Vec<u32>>,
        ) {
            if found.len() > 1 {
                return;
            }
            if j == fan.rays.len() {
                if rem.is_zero() && rem_t == 0 {
                    found.push(w.clone());
                }
                return;
            }
            for k in 0..=budget {
                let lam = fan.support[j] as i64 * k as i64;
                if lam > rem_t {
                    break;
                }
                w[j] = k;
                rec(
                    fan,
                    j + 1,
                    rem - fan.rays[j] * k as i64,
                    rem_t - lam,
                    budget - k,
                    w,
                    found,
                );
            }
            w[j] = 0;
        }
        rec(self, 0, p, t as i64, bound, &mut w, &mut found);
        match found.len() {
            1 => found.pop(),
            _ => None,
        }
    }
}

/// `Σ_j t^{λ_j} z^{m_j}`.
pub fn hori_vafa(fan: &Fan, order: u32) -> TruncatedSeries {
    let mut w = TruncatedSeries::zero(order);
    for j in 0..fan.rays.len() {
        w.add_term(fan.monomial(j), Rational::one());
    }
    w
}

/// `(x ∂W/∂x, y ∂W/∂y)`.
pub fn log_derivatives(w: &TruncatedSeries) -> (TruncatedSeries, TruncatedSeries) {
    (w.weight_by(|m| m.m.a), w.weight_by(|m| m.m.b))
}

/// Where an edge of a tropical disk ends.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EdgeEnd {
    Vertex(usize),
    Infinity,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiskEdge {
    pub from: usize,
    pub to: EdgeEnd,
    /// Primitive direction from `from` towards `to`; zero for marked edges.
    pub direction: LatticeVec,
    pub weight: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiskVertex {
    pub position: Point,
    /// The stop vertex `V_out`, exempt from balancing.
    pub is_stop: bool,
}

/// A marked tropical disk: a graph in the plane with a stop vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TropicalDisk {
    pub vertices: Vec<DiskVertex>,
    pub edges: Vec<DiskEdge>,
    /// Indices of the marked edges, one per marked point.
    pub markings: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VertexBalance {
    Balanced,
    Unbalanced(LatticeVec),
    Exempt,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BalancingReport {
    pub balanced: bool,
    pub vertices: Vec<VertexBalance>,
}

impl TropicalDisk {
    /// Checks the weight/marking rule: weight 0 exactly on marked edges,
    /// which are unbounded and constant.
    pub fn validate(&self) -> Result<()> {
        for (i, e) in self.edges.iter().enumerate() {
            let marked = self.markings.contains(&i);
            if marked != (e.weight == 0) {
                return Err(Error::InvalidInput(format!(
                    "edge {i}: weight 0 must mark exactly the marked edges"
                )));
            }
            if marked && (e.to != EdgeEnd::Infinity || !e.direction.is_zero()) {
                return Err(Error::InvalidInput(format!(
                    "marked edge {i} must be constant and unbounded"
                )));
            }
            if !marked && !e.direction.is_primitive() {
                return Err(Error::InvalidInput(format!(
                    "edge {i} direction is not primitive"
                )));
            }
        }
        Ok(())
    }

    /// `Σ w(E) m_E = 0` at every vertex except the stop vertex, with `m_E`
    /// pointing away from the vertex.
    pub fn check_balancing(&self) -> BalancingReport {
        let mut sums = vec![LatticeVec::ZERO; self.vertices.len()];
        for e in &self.edges {
            let v = e.direction * e.weight as i64;
            sums[e.from] = sums[e.from] + v;
            if let EdgeEnd::Vertex(j) = e.to {
                sums[j] = sums[j] - v;
            }
        }
        let vertices: Vec<VertexBalance> = self
            .vertices
            .iter()
            .zip(sums)
            .map(|(v, s)| {
                if v.is_stop {
                    VertexBalance::Exempt
                } else if s.is_zero() {
                    VertexBalance::Balanced
                } else {
                    VertexBalance::Unbalanced(s)
                }
            })
            .collect();
        BalancingReport {
            balanced: vertices
                .iter()
                .all(|v| !matches!(v, VertexBalance::Unbalanced(_))),
            vertices,
        }
    }

    /// `2 (N - d)` with `N` the number of non-constant unbounded edges and
    /// `d` the number of marked points.
    pub fn maslov_index(&self) -> i64 {
        let n = self
            .edges
            .iter()
            .filter(|e| e.to == EdgeEnd::Infinity && e.weight > 0)
            .count() as i64;
        2 * (n - self.markings.len() as i64)
    }
}

/// The Maslov index 0 disk swept out by an initial ray: an unbounded edge
/// along `m_j` through the marked point and a stop on the ray.
pub fn initial_wall_disk(wall: &Wall) -> Result<TropicalDisk> {
    let terms: Vec<&Monomial> = wall
        .function()
        .terms()
        .map(|(m, _)| m)
        .filter(|m| !m.is_one())
        .collect();
    let [mono] = terms.as_slice() else {
        return Err(Error::InvalidInput(format!(
            "{wall} is not an initial wall"
        )));
    };
    if wall.kind() != WallKind::Ray || wall.align() != Align::Incoming || mono.markers.len() != 1 {
        return Err(Error::InvalidInput(format!(
            "{wall} is not an initial wall"
        )));
    }
    let (m, w) = primitive_part(mono.m)?;
    let d = wall.direction();
    let p = wall.base().clone();
    let stop = p.offset(d, &Rational::one());
    Ok(TropicalDisk {
        vertices: vec![
            DiskVertex {
                position: p,
                is_stop: false,
            },
            DiskVertex {
                position: stop,
                is_stop: true,
            },
        ],
        edges: vec![
            DiskEdge {
                from: 0,
                to: EdgeEnd::Infinity,
                direction: m,
                weight: w as u32,
            },
            DiskEdge {
                from: 0,
                to: EdgeEnd::Vertex(1),
                direction: d,
                weight: w as u32,
            },
            DiskEdge {
                from: 0,
                to: EdgeEnd::Infinity,
                direction: LatticeVec::ZERO,
                weight: 0,
            },
        ],
        markings: vec![2],
    })
}

fn check_generic(fan: &Fan, points: &[Point]) -> Result<()> {
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            if p == q {
                return Err(Error::Degenerate(format!("point {p} is repeated")));
            }
            for m in fan.rays() {
                let dx = &q.x - &p.x;
                let dy = &q.y - &p.y;
                let cross = &dx * Rational::from_integer(m.b.into())
                    - &dy * Rational::from_integer(m.a.into());
                if cross.is_zero() {
                    return Err(Error::Degenerate(format!(
                        "{p} and {q} lie on a line with fan direction {m}"
                    )));
                }
            }
        }
    }
    if points.len() > 64 {
        return Err(Error::InvalidInput(
            "at most 64 marked points are supported".into(),
        ));
    }
    Ok(())
}

/// Incoming rays `P_i - R_{≥0} m_j` with functions `1 + u_i t^{λ_j} z^{m_j}`,
/// with the points excluded from consistency.
pub fn initial_diagram(fan: &Fan, points: &[Point], order: u32) -> Result<ScatteringDiagram> {
    check_generic(fan, points)?;
    let mut d = ScatteringDiagram::empty(order).with_excluded(points.to_vec());
    for (i, p) in points.iter().enumerate() {
        let u = Markers::single(i + 1)?;
        for j in 0..fan.rays().len() {
            let mono = fan.monomial(j).with_markers(u);
            if mono.t >= order {
                continue;
            }
            let f = &TruncatedSeries::one(order) + &TruncatedSeries::monomial(order, mono);
            d.push(Wall::ray(-fan.rays()[j], p.clone(), Align::Incoming, f)?)?;
        }
    }
    Ok(d)
}

/// The diagram `D(Σ; P_1, ..., P_k)`: the union of the Maslov index 0 disk
/// loci, consistent away from the marked points.
///
/// Besides the initial rays, a disk with `d ≥ 2` marked points can have its
/// last marked point at `P_i`: every broken line ending at `P_i` in the
/// diagram with `u_i = 0` continues past `P_i` as a Maslov index 0 disk.
/// Those loci are the rays `P_i - R_{≥0} p` with functions `1 + u_i c z^p`.
/// They are added and the diagram re-completed until nothing changes.
pub fn scattering_diagram(fan: &Fan, points: &[Point], order: u32) -> Result<ScatteringDiagram> {
    let mut seeds = initial_diagram(fan, points, order)?;
    let mut d = seeds.complete()?;
    for _ in 0..=points.len() {
        let mut next = ScatteringDiagram::empty(order).with_excluded(points.to_vec());
        for (i, p) in points.iter().enumerate() {
            let u = Markers::single(i + 1)?;
            let reduced = d.kill_markers(u);
            let w = potential_on(fan, &reduced, p)?;
            let mut by_direction: BTreeMap<LatticeVec, TruncatedSeries> = BTreeMap::new();
            for (mono, c) in w.terms() {
                if mono.m.is_zero() {
                    continue;
                }
                let (p0, _) = primitive_part(mono.m)?;
                let Some(marked) = mono.markers.join(u) else {
                    continue;
                };
                by_direction
                    .entry(p0)
                    .or_insert_with(|| TruncatedSeries::one(order))
                    .add_term(mono.with_markers(marked), c.clone());
            }
            for (p0, f) in by_direction {
                next.push(Wall::ray(-p0, p.clone(), Align::Incoming, f)?)?;
            }
        }
        if next.canonical() == seeds.canonical() {
            return Ok(d);
        }
        seeds = next;
        d = seeds.complete()?;
    }
    Err(Error::NonTermination(
        "marked-point rays did not stabilize".into(),
    ))
}

/// The diagram of the initial rays completed directly, without the rays
/// of disks through several marked points.
pub fn completed_initial_diagram(
    fan: &Fan,
    points: &[Point],
    order: u32,
) -> Result<ScatteringDiagram> {
    initial_diagram(fan, points, order)?.complete()
}

/// One bend of a broken line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bend {
    /// Index of the wall in the diagram.
    pub wall: usize,
    pub point: Point,
    /// The monomial picked from the wall-crossing image, and its coefficient.
    pub term: Monomial,
    pub coeff: Rational,
}

/// A segment of a broken line: the monomial it carries, traversed in
/// direction `-exponent` from `start` (or from infinity) to `end`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BrokenSegment {
    pub coeff: Rational,
    pub mono: Monomial,
    pub start: Option<Point>,
    pub end: Point,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BrokenLine {
    /// The fan ray the line comes in along.
    pub ray: usize,
    /// Bends in order of travel.
    pub bends: Vec<Bend>,
    pub endpoint: Point,
    pub coeff: Rational,
    pub mono: Monomial,
}

impl BrokenLine {
    pub fn segments(&self, fan: &Fan) -> Vec<BrokenSegment> {
        let mut out = Vec::new();
        let mut mono = fan.monomial(self.ray);
        let mut coeff = Rational::one();
        let mut start = None;
        for b in &self.bends {
            out.push(BrokenSegment {
                coeff: coeff.clone(),
                mono,
                start: start.clone(),
                end: b.point.clone(),
            });
            mono = mono.mul(&b.term).expect("bend terms are compatible");
            coeff *= &b.coeff;
            start = Some(b.point.clone());
        }
        out.push(BrokenSegment {
            coeff,
            mono,
            start,
            end: self.endpoint.clone(),
        });
        out
    }

    /// `(N, d)` of the disk this line decorates to: the unbounded edges
    /// recovered from the final exponent and `t`-degree, and the markers.
    pub fn disk_data(&self, fan: &Fan) -> Option<(u32, u32)> {
        let w = fan.unique_decomposition(self.mono.m, self.mono.t)?;
        Some((w.iter().sum(), self.mono.markers.len()))
    }

    pub fn maslov_index(&self, fan: &Fan) -> Option<i64> {
        self.disk_data(fan).map(|(n, d)| 2 * (n as i64 - d as i64))
    }
}

impl fmt::Display for BrokenLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ray {} ", self.ray)?;
        for b in &self.bends {
            write!(f, "-> bend at {} by {} {} ", b.point, b.coeff, b.term)?;
        }
        write!(f, "-> {} {} at {}", self.coeff, self.mono, self.endpoint)
    }
}

struct Search<'a> {
    fan: &'a Fan,
    d: &'a ScatteringDiagram,
    order: u32,
    powers: std::sync::Mutex<HashMap<(usize, i64), TruncatedSeries>>,
}

impl Search<'_> {
    fn power(&self, wall: usize, e: i64) -> Result<TruncatedSeries> {
        if let Some(p) = self.powers.lock().expect("cache lock").get(&(wall, e)) {
            return Ok(p.clone());
        }
        let p = self.d.walls()[wall].function().pow(e)?;
        self.powers
            .lock()
            .expect("cache lock")
            .insert((wall, e), p.clone());
        Ok(p)
    }

    /// Walks backwards from `x` along `+p` and collects every broken line
    /// whose remaining part carries `mono` at `x`.
    #[allow(clippy::too_many_arguments)]
    fn walk(
        &self,
        x: &Point,
        mono: Monomial,
        coeff: &Rational,
        bends: &mut Vec<Bend>,
        q: &Point,
        final_mono: Monomial,
        out: &mut Vec<BrokenLine>,
    ) -> Result<()> {
        let p = mono.m;
        if let Some(j) = (0..self.fan.rays().len()).find(|&j| self.fan.monomial(j) == mono) {
            let mut b = bends.clone();
            b.reverse();
            out.push(BrokenLine {
                ray: j,
                bends: b,
                endpoint: q.clone(),
                coeff: coeff.clone(),
                mono: final_mono,
            });
        }
        if mono.degree() == 0 {
            return Ok(());
        }
        let mut hits: Vec<(Rational, usize)> = Vec::new();
        for (i, w) in self.d.walls().iter().enumerate() {
            let np = crate::lattice::pair(p, w.normal());
            if np == 0 || w.is_trivial() {
                continue;
            }
            let s = -w.side(x) / Rational::from_integer(np.into());
            if !s.is_positive() {
                continue;
            }
            let y = x.offset(p, &s);
            if w.kind() == WallKind::Ray {
                let r = w.param(&y);
                if r.is_negative() {
                    continue;
                }
                if r.is_zero() {
                    return Err(Error::Degenerate(format!(
                        "broken line through the ray base {y}"
                    )));
                }
            }
            hits.push((s, i));
        }
        hits.sort();
        for pair in hits.windows(2) {
            if pair[0].0 == pair[1].0 {
                let (a, b) = (&self.d.walls()[pair[0].1], &self.d.walls()[pair[1].1]);
                if a.direction() != b.direction() && a.direction() != -b.direction() {
                    let y = x.offset(p, &pair[0].0);
                    return Err(Error::Degenerate(format!(
                        "broken line through the singular point {y}"
                    )));
                }
            }
        }
        for (s, i) in hits {
            let w = &self.d.walls()[i];
            let y = x.offset(p, &s);
            let e = -w.align().sign() * crate::lattice::pair(p, w.normal()).abs();
            let fe = self.power(i, e)?;
            for (tau, c) in fe.terms() {
                if tau.is_one()
                    || tau.t > mono.t
                    || (tau.markers.bits() & !mono.markers.bits()) != 0
                {
                    continue;
                }
                let prev = Monomial::new(
                    p - tau.m,
                    mono.t - tau.t,
                    Markers::from_bits(mono.markers.bits() & !tau.markers.bits()),
                );
                if prev.m.is_zero() {
                    continue;
                }
                bends.push(Bend {
                    wall: i,
                    point: y.clone(),
                    term: *tau,
                    coeff: c.clone(),
                });
                self.walk(&y, prev, &(coeff * c), bends, q, final_mono, out)?;
                bends.pop();
            }
        }
        Ok(())
    }

    /// Monomials a broken line can carry: fan monomials times products of
    /// wall terms.
    fn candidates(&self) -> Vec<Monomial> {
        let mut wall_terms: BTreeSet<Monomial> = BTreeSet::new();
        for w in self.d.walls() {
            for (m, _) in w.function().terms() {
                if !m.is_one() {
                    wall_terms.insert(*m);
                }
            }
        }
        let mut seen: BTreeSet<Monomial> = BTreeSet::new();
        let mut frontier: Vec<Monomial> = (0..self.fan.rays().len())
            .map(|j| self.fan.monomial(j))
            .filter(|m| m.t < self.order)
            .collect();
        while let Some(m) = frontier.pop() {
            if !seen.insert(m) {
                continue;
            }
            for w in &wall_terms {
                if let Some(n) = m.mul(w) {
                    if n.t < self.order && !seen.contains(&n) {
                        frontier.push(n);
                    }
                }
            }
        }
        seen.into_iter().filter(|m| !m.m.is_zero()).collect()
    }
}

/// All broken lines ending at `q`, in a deterministic order.
pub fn broken_lines(fan: &Fan, d: &ScatteringDiagram, q: &Point) -> Result<Vec<BrokenLine>> {
    if d.on_support(q) {
        return Err(Error::OnSupport(q.to_string()));
    }
    let search = Search {
        fan,
        d,
        order: d.order(),
        powers: std::sync::Mutex::new(HashMap::new()),
    };
    let candidates = search.candidates();
    let found = par::try_map(&candidates, |mono| {
        let mut out = Vec::new();
        search.walk(
            q,
            *mono,
            &Rational::one(),
            &mut Vec::new(),
            q,
            *mono,
            &mut out,
        )?;
        Ok(out)
    })?;
    Ok(found.into_iter().flatten().collect())
}

fn potential_on(fan: &Fan, d: &ScatteringDiagram, q: &Point) -> Result<TruncatedSeries> {
    let mut w = TruncatedSeries::zero(d.order());
    for l in broken_lines(fan, d, q)? {
        w.add_term(l.mono, l.coeff);
    }
    Ok(w)
}

/// Outcome of comparing `W(Q_-)` with `θ_γ(W(Q_+))`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WallCrossingReport {
    pub holds: bool,
    /// Number of walls crossed by the straight path.
    pub crossed: usize,
    /// Whether one of them is a ray added by completion.
    pub crossed_scattered: bool,
    pub transported: TruncatedSeries,
    pub direct: TruncatedSeries,
}

/// A fan with marked points and the completed diagram they determine.
#[derive(Clone, Debug)]
pub struct Superpotential {
    fan: Fan,
    points: Vec<Point>,
    diagram: ScatteringDiagram,
    initial: ScatteringDiagram,
}

impl Superpotential {
    pub fn new(fan: &Fan, points: &[Point], order: u32) -> Result<Self> {
        Ok(Superpotential {
            fan: fan.clone(),
            points: points.to_vec(),
            diagram: scattering_diagram(fan, points, order)?,
            initial: initial_diagram(fan, points, order)?,
        })
    }

    pub fn fan(&self) -> &Fan {
        &self.fan
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn diagram(&self) -> &ScatteringDiagram {
        &self.diagram
    }

    pub fn initial(&self) -> &ScatteringDiagram {
        &self.initial
    }

    /// Whether wall `i` of the diagram is one of the initial rays.
    pub fn is_initial_wall(&self, i: usize) -> bool {
        let w = &self.diagram.walls()[i];
        self.initial.walls().contains(w)
    }

    pub fn broken_lines(&self, q: &Point) -> Result<Vec<BrokenLine>> {
        broken_lines(&self.fan, &self.diagram, q)
    }

    /// `W_k(Q)`, the sum of the final monomials of the broken lines ending at `Q`.
    pub fn potential(&self, q: &Point) -> Result<TruncatedSeries> {
        potential_on(&self.fan, &self.diagram, q)
    }

    pub fn wall_crossing_check(
        &self,
        q_plus: &Point,
        q_minus: &Point,
    ) -> Result<WallCrossingReport> {
        let crossings = self.diagram.path_crossings(q_plus, q_minus)?;
        let w_plus = self.potential(q_plus)?;
        let direct = self.potential(q_minus)?;
        let transported = self.diagram.transport(&w_plus, q_plus, q_minus)?;
        Ok(WallCrossingReport {
            holds: transported == direct,
            crossed: crossings.len(),
            crossed_scattered: crossings.iter().any(|c| !self.is_initial_wall(c.wall)),
            transported,
            direct,
        })
    }
}

pub fn perturbed_potential(
    fan: &Fan,
    points: &[Point],
    q: &Point,
    order: u32,
) -> Result<TruncatedSeries> {
    Superpotential::new(fan, points, order)?.potential(q)
}

pub fn wall_crossing_check(
    fan: &Fan,
    points: &[Point],
    q_plus: &Point,
    q_minus: &Point,
    order: u32,
) -> Result<bool> {
    Ok(Superpotential::new(fan, points, order)?
        .wall_crossing_check(q_plus, q_minus)?
        .holds)
}
