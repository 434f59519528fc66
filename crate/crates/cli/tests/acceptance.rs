//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! test harness so the lines are always printed.
//!
//! Every comparison of series, diagrams and automorphisms is exact equality
//! of rationals; the only numeric tolerances are the runtime limits below.
//! Randomized inputs come from fixed seeds.

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scattering_core::lattice::{det, parse_rational};
use scattering_core::lie::bch3;
use scattering_core::mctrees::{diagram_of, input_of, solve, strictly_inside_cone};
use scattering_core::tropical::{hori_vafa, initial_wall_disk, EdgeEnd, Fan, Superpotential};
use scattering_core::{
    Error, LatticeVec, LieElement, LieTerm, Markers, Monomial, Point, Rational, ScatteringDiagram,
    TruncatedSeries, Wall, WallKind,
};

/// Runtime limits, wall-clock, in the build profile the suite runs under.
const PENTAGON_LIMIT: Duration = Duration::from_secs(1);
const SCALE_LIMIT: Duration = Duration::from_secs(30);
const MC_LIMIT: Duration = Duration::from_secs(10);
const WALL_CROSSING_LIMIT: Duration = Duration::from_secs(60);

/// Truncation orders fixed by the criteria.
const PENTAGON_ORDER: u32 = 8;
const SCALE_ORDER: u32 = 6;
const MC_ORDER: u32 = 3;
const WALL_CROSSING_ORDER: u32 = 4;
const BCH_ORDER: u32 = 4;

const CONE_TRIALS: usize = 20;
const MC_TRIALS: usize = 10;
const WALL_CROSSING_PAIRS: usize = 10;
const CHAMBER_TRIALS: usize = 5;
const ALGEBRA_TRIALS: usize = 40;

const SEED: u64 = 20_240_611;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn q(n: i64, d: i64) -> Rational {
    parse_rational(&format!("{n}/{d}")).unwrap()
}

fn rand_q(rng: &mut ChaCha8Rng, num: i64, den: i64) -> Rational {
    q(rng.gen_range(-num..=num), den)
}

fn rand_nonzero_q(rng: &mut ChaCha8Rng) -> Rational {
    let n = rng.gen_range(1..=4) * if rng.gen_bool(0.5) { 1 } else { -1 };
    q(n, rng.gen_range(1..=3))
}

fn rand_primitive(rng: &mut ChaCha8Rng, r: i64) -> LatticeVec {
    loop {
        let v = LatticeVec::new(rng.gen_range(-r..=r), rng.gen_range(-r..=r));
        if !v.is_zero() && v.is_primitive() {
            return v;
        }
    }
}

fn rand_transversal_pair(rng: &mut ChaCha8Rng) -> (LatticeVec, LatticeVec) {
    loop {
        let (m1, m2) = (rand_primitive(rng, 2), rand_primitive(rng, 2));
        if det(m1, m2) != 0 {
            return (m1, m2);
        }
    }
}

fn binomial(order: u32, m: LatticeVec, k: i64) -> TruncatedSeries {
    TruncatedSeries::parse(order, &format!("1 + t z^({},{})", m.a, m.b))
        .unwrap()
        .pow(k)
        .unwrap()
}

fn two_lines(
    order: u32,
    f1: (LatticeVec, TruncatedSeries),
    f2: (LatticeVec, TruncatedSeries),
) -> ScatteringDiagram {
    let walls = vec![
        Wall::line(f1.0, Point::origin(), f1.1).unwrap(),
        Wall::line(f2.0, Point::origin(), f2.1).unwrap(),
    ];
    ScatteringDiagram::new(order, walls, vec![]).unwrap()
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn timed(limit: Duration, start: Instant) -> Result<String, String> {
    let el = start.elapsed();
    ensure(el < limit, || format!("took {el:.2?}, limit {limit:?}"))?;
    Ok(format!("{el:.2?} < {limit:?}"))
}

// 1
fn pentagon() -> Outcome {
    let start = Instant::now();
    let n = PENTAGON_ORDER;
    let d = two_lines(
        n,
        (LatticeVec::new(1, 0), binomial(n, LatticeVec::new(1, 0), 1)),
        (LatticeVec::new(0, 1), binomial(n, LatticeVec::new(0, 1), 1)),
    );
    let done = d.complete().map_err(e)?;
    let added = done.added_since(2);
    ensure(added.len() == 1, || format!("{} rays added", added.len()))?;
    let ray = &added[0];
    ensure(
        ray.kind() == WallKind::Ray
            && ray.direction() == LatticeVec::new(1, 1)
            && ray.base() == &Point::origin(),
        || format!("added {ray}"),
    )?;
    let expected = TruncatedSeries::parse(n, "1 + t^2 z^(1,1)").unwrap();
    ensure(ray.function() == &expected, || {
        format!("ray function {}", ray.function())
    })?;
    let cert = done.is_consistent().map_err(e)?;
    ensure(cert.consistent, || cert.to_string())?;
    Ok(format!(
        "one ray (1,1) with 1 + t^2 z^(1,1), consistent mod t^{n}, {}",
        timed(PENTAGON_LIMIT, start)?
    ))
}

// 2
fn scale() -> Outcome {
    let start = Instant::now();
    let n = SCALE_ORDER;
    let d = two_lines(
        n,
        (LatticeVec::new(1, 0), binomial(n, LatticeVec::new(1, 0), 2)),
        (LatticeVec::new(0, 1), binomial(n, LatticeVec::new(0, 1), 2)),
    );
    let done = d.complete().map_err(e)?;
    let cert = done.is_consistent().map_err(e)?;
    ensure(cert.consistent, || cert.to_string())?;
    // the certificate's verdict re-derived directly: θ_γ = Id at every singular point
    for p in done.singular_points() {
        let theta = done.path_ordered_product(&p).map_err(e)?;
        ensure(theta.is_identity(), || format!("θ_γ ≠ Id at {p}"))?;
    }
    Ok(format!(
        "{} rays added, θ_γ = Id at {} singular point(s) mod t^{n}, {}",
        done.walls().len() - 2,
        cert.checked.len(),
        timed(SCALE_LIMIT, start)?
    ))
}

// 3
fn cone_confinement(rng: &mut ChaCha8Rng) -> Outcome {
    let n = 5;
    let mut rays = 0;
    for trial in 0..CONE_TRIALS {
        let (m1, m2) = rand_transversal_pair(rng);
        let (k1, k2) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
        let d = two_lines(n, (m1, binomial(n, m1, k1)), (m2, binomial(n, m2, k2)));
        let done = d.complete().map_err(e)?;
        for w in done.added_since(2) {
            rays += 1;
            ensure(strictly_inside_cone(w.direction(), m1, m2), || {
                format!(
                    "trial {trial}: ray {} outside cone({m1}, {m2})",
                    w.direction()
                )
            })?;
        }
    }
    Ok(format!(
        "{CONE_TRIALS} inputs, {rays} added rays, all strictly inside the cone"
    ))
}

// 4
fn mc_equivalence(rng: &mut ChaCha8Rng) -> Outcome {
    let start = Instant::now();
    let n = MC_ORDER;
    let mut inputs = vec![two_lines(
        n,
        (LatticeVec::new(1, 0), binomial(n, LatticeVec::new(1, 0), 1)),
        (LatticeVec::new(0, 1), binomial(n, LatticeVec::new(0, 1), 1)),
    )];
    for _ in 0..MC_TRIALS {
        let (m1, m2) = rand_transversal_pair(rng);
        let f = |rng: &mut ChaCha8Rng, m: LatticeVec| {
            let mut s = TruncatedSeries::one(n);
            s.add_term(Monomial::new(m, 1, Markers::EMPTY), rand_nonzero_q(rng));
            s.add_term(Monomial::new(m * 2, 2, Markers::EMPTY), rand_q(rng, 4, 3));
            s
        };
        inputs.push(two_lines(n, (m1, f(rng, m1)), (m2, f(rng, m2))));
    }
    let mut corrections = 0;
    for (i, d) in inputs.iter().enumerate() {
        let sol = solve(&input_of(d).map_err(e)?, n).map_err(e)?;
        corrections += sol.all_corrections().len();
        let mc = diagram_of(&sol).map_err(e)?;
        let done = d.complete().map_err(e)?;
        ensure(mc.equivalent_mod(&done, n), || {
            format!("input {i}: trees give\n{mc}completion gives\n{done}")
        })?;
    }
    Ok(format!(
        "pentagon + {MC_TRIALS} random inputs agree mod t^{n} ({corrections} corrections), {}",
        timed(MC_LIMIT, start)?
    ))
}

// 5
fn hori_vafa_cli() -> Outcome {
    // the k = 0 diagram is empty: one chamber, probed in each cone of the fan
    let mut probes = 0;
    for at in ["2,1", "1,3", "-3,1/2", "-1/5,-4", "7/3,-2", "-9,-9"] {
        let o = scatter(&["potential", "--fan", "p2", "--at", at]);
        let out = String::from_utf8_lossy(&o.stdout);
        ensure(
            o.status.code() == Some(0) && out == "x + y + t/(xy)\n",
            || format!("at {at}: exit {:?}, output {out:?}", o.status.code()),
        )?;
        probes += 1;
    }
    Ok(format!("`x + y + t/(xy)` at {probes} points"))
}

fn rand_points(rng: &mut ChaCha8Rng, k: usize) -> Vec<Point> {
    (0..k)
        .map(|_| Point::new(rand_q(rng, 60, 17), rand_q(rng, 60, 19)))
        .collect()
}

/// A superpotential for `k` random generic points at the given order.
fn rand_superpotential(
    rng: &mut ChaCha8Rng,
    k: usize,
    order: u32,
) -> Result<Superpotential, String> {
    for _ in 0..100 {
        match Superpotential::new(&Fan::p2(), &rand_points(rng, k), order) {
            Ok(sp) => return Ok(sp),
            Err(Error::Degenerate(_)) => continue,
            Err(err) => return Err(err.to_string()),
        }
    }
    Err("no generic configuration found".into())
}

/// Points on either side of wall `i`, near its base.
fn across(sp: &Superpotential, i: usize, s: &Rational, eps: &Rational) -> (Point, Point) {
    let w = &sp.diagram().walls()[i];
    let mid = w.base().offset(w.direction(), s);
    let n = w.normal().as_lattice();
    (mid.offset(n, eps), mid.offset(n, &-eps.clone()))
}

fn rand_probe(rng: &mut ChaCha8Rng) -> Point {
    Point::new(rand_q(rng, 150, 23), rand_q(rng, 150, 29))
}

/// Non-generic queries (on a wall, through a singular point or a ray base)
/// are redrawn; anything else is an error.
fn generic<T>(r: scattering_core::Result<T>) -> Result<Option<T>, String> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::OnSupport(_) | Error::PathThroughSingular(_) | Error::Degenerate(_)) => Ok(None),
        Err(err) => Err(err.to_string()),
    }
}

// 6
fn wall_crossing(rng: &mut ChaCha8Rng) -> Outcome {
    let start = Instant::now();
    let mut summary = Vec::new();
    let mut scattered_total = 0;
    let mut collided = 0;
    for k in [1, 2] {
        let mut pairs = 0;
        let mut scattered = 0;
        let mut configs = 0;
        while pairs < WALL_CROSSING_PAIRS {
            configs += 1;
            ensure(configs <= 20, || format!("k={k}: only {pairs} pairs found"))?;
            let sp = rand_superpotential(rng, k, WALL_CROSSING_ORDER)?;
            let mut candidates = Vec::new();
            // one pair straddling every non-initial wall, then random probes
            for i in 0..sp.diagram().walls().len() {
                if !sp.is_initial_wall(i) {
                    candidates.push(across(&sp, i, &q(rng.gen_range(1..=9), 7), &q(1, 97)));
                }
            }
            for _ in 0..4 {
                candidates.push((rand_probe(rng), rand_probe(rng)));
            }
            for (a, b) in candidates {
                if pairs == WALL_CROSSING_PAIRS {
                    break;
                }
                let Some(r) = generic(sp.wall_crossing_check(&a, &b))? else {
                    continue;
                };
                if r.crossed == 0 {
                    continue;
                }
                ensure(r.holds, || {
                    format!(
                        "k={k} {a} -> {b}: θ_γ(W(Q+)) = {} but W(Q-) = {}",
                        r.transported, r.direct
                    )
                })?;
                pairs += 1;
                scattered += r.crossed_scattered as usize;
                // walls born where two rays collide, as opposed to rays from marked points
                let crossings = sp.diagram().path_crossings(&a, &b).map_err(e)?;
                collided += crossings
                    .iter()
                    .any(|c| !sp.points().contains(sp.diagram().walls()[c.wall].base()))
                    as usize;
            }
        }
        scattered_total += scattered;
        summary.push(format!(
            "k={k}: {pairs} pairs ({scattered} across scattered walls)"
        ));
    }
    ensure(scattered_total > 0, || {
        "no pair crossed a scattered wall".into()
    })?;
    ensure(collided > 0, || {
        "no pair crossed a ray born at a collision".into()
    })?;
    Ok(format!(
        "{}, {collided} across collision rays, mod t^{WALL_CROSSING_ORDER}, {}",
        summary.join(", "),
        timed(WALL_CROSSING_LIMIT, start)?
    ))
}

// 7
fn chamber_constancy(rng: &mut ChaCha8Rng) -> Outcome {
    let mut trials = 0;
    let mut attempts = 0;
    while trials < CHAMBER_TRIALS {
        attempts += 1;
        ensure(attempts <= 200, || format!("only {trials} trials found"))?;
        let k = 1 + trials % 2;
        let sp = rand_superpotential(rng, k, WALL_CROSSING_ORDER)?;
        let a = rand_probe(rng);
        let b = Point::new(&a.x + rand_q(rng, 20, 31), &a.y + rand_q(rng, 20, 37));
        if a == b {
            continue;
        }
        let Some(crossed) = generic(sp.diagram().path_crossings(&a, &b))? else {
            continue;
        };
        if !crossed.is_empty() {
            continue;
        }
        let (Some(wa), Some(wb)) = (generic(sp.potential(&a))?, generic(sp.potential(&b))?) else {
            continue;
        };
        ensure(wa == wb, || format!("W({a}) = {wa} but W({b}) = {wb}"))?;
        trials += 1;
    }
    Ok(format!("{trials} same-chamber pairs agree exactly"))
}

// 8
fn degenerations(rng: &mut ChaCha8Rng) -> Outcome {
    let (mut potentials, mut lines, mut disks) = (0, 0, 0);
    for k in [1, 2] {
        let sp = rand_superpotential(rng, k, WALL_CROSSING_ORDER)?;
        let all = Markers::from_indices(1..=k).map_err(e)?;
        let w0 = hori_vafa(&Fan::p2(), WALL_CROSSING_ORDER);
        let mut probes = 0;
        while probes < 6 {
            let q = rand_probe(rng);
            let Some(w) = generic(sp.potential(&q))? else {
                continue;
            };
            ensure(w.kill_markers(all) == w0, || {
                format!("k={k} at {q}: W|u=0 = {}", w.kill_markers(all))
            })?;
            for line in sp.broken_lines(&q).map_err(e)? {
                let mi = line.maslov_index(sp.fan());
                ensure(mi == Some(2), || {
                    format!("broken line {line} has Maslov index {mi:?}")
                })?;
                lines += 1;
            }
            probes += 1;
            potentials += 1;
        }
        for w in sp.initial().walls() {
            let disk = initial_wall_disk(w).map_err(e)?;
            disk.validate().map_err(e)?;
            let n = disk
                .edges
                .iter()
                .filter(|e| e.to == EdgeEnd::Infinity && e.weight > 0)
                .count();
            ensure(
                n == 1 && disk.markings.len() == 1 && disk.maslov_index() == 0,
                || {
                    format!(
                        "initial wall {w}: N={n}, d={}, MI={}",
                        disk.markings.len(),
                        disk.maslov_index()
                    )
                },
            )?;
            ensure(disk.check_balancing().balanced, || {
                format!("disk of {w} is unbalanced")
            })?;
            disks += 1;
        }
    }
    Ok(format!("{potentials} potentials reduce to W_0, {lines} disks of MI 2, {disks} initial walls are N=1 d=1 MI-0 disks"))
}

fn rand_vertex_element(rng: &mut ChaCha8Rng) -> LieElement {
    let terms = (0..rng.gen_range(1..=3)).map(|_| {
        let d = rand_primitive(rng, 2);
        let k = rng.gen_range(1..=2);
        let mono = Monomial::new(d * k, rng.gen_range(1..BCH_ORDER), Markers::EMPTY);
        LieTerm::new(rand_nonzero_q(rng), mono, d.normal()).unwrap()
    });
    LieElement::from_terms(BCH_ORDER, terms.collect::<Vec<_>>())
}

fn rand_lie_element(rng: &mut ChaCha8Rng) -> LieElement {
    let terms = (0..rng.gen_range(1..=3)).map(|_| {
        let m = rand_primitive(rng, 2) * rng.gen_range(1..=2);
        let markers = Markers::from_bits(rng.gen_range(0u64..4) << 1);
        let t = rng.gen_range(u32::from(markers.is_empty())..BCH_ORDER);
        let n = rand_primitive(rng, 2);
        LieTerm::new(
            rand_nonzero_q(rng),
            Monomial::new(m, t, markers),
            scattering_core::DualVec::new(n.a, n.b),
        )
        .unwrap()
    });
    LieElement::from_terms(BCH_ORDER, terms.collect::<Vec<_>>())
}

// 9
fn algebra(rng: &mut ChaCha8Rng) -> Outcome {
    for i in 0..ALGEBRA_TRIALS {
        let (x, y, z) = (
            rand_lie_element(rng),
            rand_lie_element(rng),
            rand_lie_element(rng),
        );
        let xy = x.bracket(&y).map_err(e)?;
        ensure(
            xy.checked_add(&y.bracket(&x).map_err(e)?)
                .map_err(e)?
                .is_zero(),
            || format!("trial {i}: [x,y] ≠ -[y,x]"),
        )?;
        let jac = x
            .bracket(&y.bracket(&z).map_err(e)?)
            .and_then(|a| a.checked_add(&y.bracket(&z.bracket(&x)?)?))
            .and_then(|a| a.checked_add(&z.bracket(&xy)?))
            .map_err(e)?;
        ensure(jac.is_zero(), || format!("trial {i}: Jacobi sum {jac}"))?;

        let (a, b) = (rand_vertex_element(rng), rand_vertex_element(rng));
        let ga = a.exp_action().map_err(e)?;
        ensure(ga.log_derivation().map_err(e)? == a, || {
            format!("trial {i}: log exp {a} ≠ {a}")
        })?;
        let gb = b.exp_action().map_err(e)?;
        let composed = ga.compose(&gb).map_err(e)?;
        let via_bch = bch3(&a, &b).and_then(|c| c.exp_action()).map_err(e)?;
        ensure(composed == via_bch, || {
            format!("trial {i}: exp(a)∘exp(b) ≠ exp(BCH(a,b)) for a = {a}, b = {b}")
        })?;
        let f = TruncatedSeries::parse(BCH_ORDER, "1 + t z^(1,-1)").unwrap();
        ensure(f.log().and_then(|l| l.exp()).map_err(e)? == f, || {
            "exp log ≠ id".into()
        })?;
    }
    Ok(format!("{ALGEBRA_TRIALS} trials: antisymmetry, Jacobi, log∘exp = id, BCH = composition mod t^{BCH_ORDER}"))
}

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
        .to_str()
        .unwrap()
        .to_owned()
}

fn scatter(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_scatter"))
        .args(args)
        .output()
        .expect("run scatter")
}

// 10
fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(e)?;
    let out = |name: &str| dir.path().join(name).to_str().unwrap().to_owned();
    let pent = data("pentagon.diag");
    let squared = data("squared.diag");
    let done = out("done.diag");
    let commands: Vec<Vec<String>> = vec![
        vec![
            "complete".into(),
            pent.clone(),
            "--out".into(),
            done.clone(),
        ],
        vec!["complete".into(), squared.clone()],
        vec!["check".into(), pent.clone()],
        vec!["check".into(), done.clone()],
        vec![
            "potential".into(),
            "--points".into(),
            "1/3,2/7;-9/5,13/11".into(),
            "--at".into(),
            "1,1".into(),
            "--details".into(),
        ],
        vec![
            "potential".into(),
            "--points".into(),
            "1/3,2/7;-9/5,13/11".into(),
            "--from".into(),
            "1,-3".into(),
            "--to".into(),
            "-3,-1".into(),
        ],
        vec!["mctrees".into(), pent.clone(), "--trees".into()],
        vec![
            "plot".into(),
            "diagram".into(),
            done.clone(),
            "--out".into(),
            out("d.svg"),
        ],
        vec![
            "plot".into(),
            "marked".into(),
            "--points".into(),
            "1/3,2/7;-9/5,13/11".into(),
        ],
        vec![
            "plot".into(),
            "amoeba".into(),
            "--poly".into(),
            "1 + z^(1,0) + z^(0,1)".into(),
            "--seed".into(),
            "11".into(),
            "--samples".into(),
            "1500".into(),
        ],
    ];
    let mut files_compared = 0;
    for cmd in &commands {
        let args: Vec<&str> = cmd.iter().map(String::as_str).collect();
        let out_file = args
            .iter()
            .position(|a| *a == "--out")
            .map(|i| args[i + 1].to_owned());
        let mut runs = Vec::new();
        for sequential in [false, false, true] {
            let mut a = args.clone();
            if sequential {
                a.insert(0, "--sequential");
            }
            let o = scatter(&a);
            let file = out_file
                .as_ref()
                .map(|p| std::fs::read(p).unwrap_or_default());
            runs.push((o.status.code(), o.stdout, o.stderr, file));
        }
        ensure(runs.windows(2).all(|w| w[0] == w[1]), || {
            format!("`scatter {}` is not reproducible", args.join(" "))
        })?;
        files_compared += out_file.is_some() as usize;
    }
    Ok(format!(
        "{} commands byte-identical over 2 parallel runs and 1 sequential run ({files_compared} output files)",
        commands.len()
    ))
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let criteria: Vec<(&str, Outcome)> = vec![
        ("pentagon completion", pentagon()),
        ("completion at scale", scale()),
        ("cone confinement", cone_confinement(&mut rng)),
        (
            "Maurer-Cartan = completion mod t^3",
            mc_equivalence(&mut rng),
        ),
        ("Hori-Vafa reproduction", hori_vafa_cli()),
        ("wall-crossing identity", wall_crossing(&mut rng)),
        ("chamber constancy", chamber_constancy(&mut rng)),
        ("degeneration checks", degenerations(&mut rng)),
        ("algebra suite", algebra(&mut rng)),
        ("determinism", determinism()),
    ];
    let mut failed = Vec::new();
    for (i, (name, outcome)) in criteria.iter().enumerate() {
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria pass", criteria.len());
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
