//! Line-based text formats.
//!
//! Diagram files:
//!
//! ```text
//! # comment
//! order 8
//! excluded 1/2,3
//! wall kind=line dir=(1,0) base=0,0 align=out n=(0,1) fn=1 + t z^(1,0)
//! wall kind=ray dir=(1,1) base=0,0 align=out fn=1 + t^2 z^(1,1)
//! ```
//!
//! `n=` is optional on input and checked when present. Fan files hold one
//! ray per line, `ray a,b lambda L`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::lattice::{DualVec, LatticeVec, Point};
use crate::scattering::{Align, ScatteringDiagram, Wall, WallKind};
use crate::series::TruncatedSeries;
use crate::tropical::Fan;

pub fn write_diagram(d: &ScatteringDiagram) -> String {
    let mut out = String::new();
    writeln!(out, "order {}", d.order()).unwrap();
    for p in d.excluded() {
        writeln!(out, "excluded {p}").unwrap();
    }
    for w in d.walls() {
        writeln!(out, "{}", write_wall(w)).unwrap();
    }
    out
}

pub fn write_wall(w: &Wall) -> String {
    let kind = match w.kind() {
        WallKind::Line => "line",
        WallKind::Ray => "ray",
    };
    let align = match w.align() {
        Align::Outgoing => "out",
        Align::Incoming => "in",
    };
    format!(
        "wall kind={kind} dir={} base={} align={align} n={} fn={}",
        w.direction(),
        w.base(),
        w.normal(),
        w.function()
    )
}

fn parse_vec(s: &str, line: usize) -> Result<LatticeVec> {
    let inner = s
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| Error::parse(line, format!("expected `(a,b)`, got `{s}`")))?;
    let (a, b) = inner
        .split_once(',')
        .ok_or_else(|| Error::parse(line, format!("expected `(a,b)`, got `{s}`")))?;
    let a = a
        .trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("bad integer `{a}`")))?;
    let b = b
        .trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("bad integer `{b}`")))?;
    Ok(LatticeVec::new(a, b))
}

pub fn parse_diagram(text: &str) -> Result<ScatteringDiagram> {
    parse_diagram_with_order(text, None)
}

/// Parses a diagram, reading every wall function at truncation order
/// `order` instead of the file's own when given.
pub fn parse_diagram_with_order(
    text: &str,
    order_override: Option<u32>,
) -> Result<ScatteringDiagram> {
    if order_override == Some(0) {
        return Err(Error::InvalidInput(
            "truncation order must be positive".into(),
        ));
    }
    let mut order = None;
    let mut excluded = Vec::new();
    let mut walls = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let (head, rest) = l.split_once(char::is_whitespace).unwrap_or((l, ""));
        let rest = rest.trim();
        match head {
            "order" => {
                if order.is_some() {
                    return Err(Error::parse(line, "duplicate `order` line"));
                }
                let n: u32 = rest
                    .parse()
                    .map_err(|_| Error::parse(line, format!("bad order `{rest}`")))?;
                if n == 0 {
                    return Err(Error::parse(line, "order must be positive"));
                }
                order = Some(order_override.unwrap_or(n));
            }
            "excluded" => excluded.push(Point::parse(rest).map_err(|e| e.at_line(line))?),
            "wall" => {
                let n =
                    order.ok_or_else(|| Error::parse(line, "`order` must come before walls"))?;
                walls.push(parse_wall(rest, n, line)?);
            }
            other => return Err(Error::parse(line, format!("unknown directive `{other}`"))),
        }
    }
    let order = order.ok_or_else(|| Error::parse(0, "missing `order` line"))?;
    ScatteringDiagram::new(order, walls, excluded)
}

fn parse_wall(s: &str, order: u32, line: usize) -> Result<Wall> {
    let (fields, f) = s
        .split_once("fn=")
        .ok_or_else(|| Error::parse(line, "wall without `fn=`"))?;
    let (mut kind, mut dir, mut base, mut align, mut n) = (None, None, None, None, None);
    for tok in fields.split_whitespace() {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| Error::parse(line, format!("expected key=value, got `{tok}`")))?;
        match k {
            "kind" => {
                kind = Some(match v {
                    "line" => WallKind::Line,
                    "ray" => WallKind::Ray,
                    _ => return Err(Error::parse(line, format!("unknown wall kind `{v}`"))),
                })
            }
            "dir" => dir = Some(parse_vec(v, line)?),
            "base" => base = Some(Point::parse(v).map_err(|e| e.at_line(line))?),
            "align" => {
                align = Some(match v {
                    "out" => Align::Outgoing,
                    "in" => Align::Incoming,
                    _ => return Err(Error::parse(line, format!("unknown alignment `{v}`"))),
                })
            }
            "n" => n = Some(parse_vec(v, line)?),
            _ => return Err(Error::parse(line, format!("unknown wall field `{k}`"))),
        }
    }
    let missing = |name: &str| Error::parse(line, format!("wall without `{name}=`"));
    let f = TruncatedSeries::parse(order, f.trim()).map_err(|e| e.at_line(line))?;
    let w = Wall::new(
        dir.ok_or_else(|| missing("dir"))?,
        base.ok_or_else(|| missing("base"))?,
        kind.ok_or_else(|| missing("kind"))?,
        align.unwrap_or(Align::Outgoing),
        f,
    )
    .map_err(|e| Error::parse(line, e.to_string()))?;
    if let Some(n) = n {
        if DualVec::new(n.a, n.b) != w.normal() {
            return Err(Error::parse(
                line,
                format!("normal {n} does not match direction {}", w.direction()),
            ));
        }
    }
    Ok(w)
}

pub fn write_fan(fan: &Fan) -> String {
    let mut out = String::new();
    for (m, l) in fan.rays().iter().zip(fan.support()) {
        writeln!(out, "ray {},{} lambda {l}", m.a, m.b).unwrap();
    }
    out
}

pub fn parse_fan(text: &str) -> Result<Fan> {
    let mut rays = Vec::new();
    let mut support = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = l.split_whitespace().collect();
        let ["ray", v, "lambda", lam] = toks.as_slice() else {
            return Err(Error::parse(
                line,
                format!("expected `ray a,b lambda L`, got `{l}`"),
            ));
        };
        let v = v.trim_start_matches('(').trim_end_matches(')');
        let m = parse_vec(&format!("({v})"), line)?;
        let lam: u32 = lam
            .parse()
            .map_err(|_| Error::parse(line, format!("bad support number `{lam}`")))?;
        rays.push(m);
        support.push(lam);
    }
    Fan::new(rays, support)
}
