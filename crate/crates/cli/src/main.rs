//! `scatter`: completion, consistency certificates, superpotentials,
//! Maurer-Cartan trees and SVG plots.
//!
//! Exit codes: 0 success, 1 input error, 2 internal invariant violation,
//! 3 checked-property failure.

mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use scattering_core::format::{parse_diagram_with_order, parse_fan, write_diagram};
use scattering_core::lattice::parse_points;
use scattering_core::mctrees::{diagram_of, dump_trees, enumerate_trees, input_of, solve};
use scattering_core::tropical::{log_derivatives, Fan, Superpotential};
use scattering_core::{Error, Point, TruncatedSeries};

use crate::svg::Bounds;

#[derive(Parser, Debug)]
#[command(
    name = "scatter",
    version,
    about = "Scattering diagrams in the tropical vertex group"
)]
struct Cli {
    /// Run every computation on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Complete a diagram by adding rays and certify the result.
    Complete(DiagramArgs),
    /// Check consistency at every singular point of a diagram.
    Check(DiagramArgs),
    /// The perturbed superpotential at a point, or the wall-crossing check between two points.
    Potential(PotentialArgs),
    /// Solve the Maurer-Cartan equation by trees and compare with completion.
    Mctrees(MctreesArgs),
    /// Write an SVG picture.
    Plot(PlotArgs),
}

#[derive(Args, Debug)]
struct DiagramArgs {
    /// Diagram file.
    input: PathBuf,
    /// Truncation order; overrides the file's.
    #[arg(long)]
    order: Option<u32>,
    /// Output path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PotentialArgs {
    /// Fan file, or one of the built-in names `p2`, `p1xp1`.
    #[arg(long, default_value = "p2")]
    fan: String,
    /// Marked points `x1,y1;x2,y2;...`.
    #[arg(long, default_value = "", allow_hyphen_values = true)]
    points: String,
    /// Evaluate `W` at this point.
    #[arg(long, allow_hyphen_values = true)]
    at: Option<String>,
    /// Start of the wall-crossing path.
    #[arg(long, requires = "to", allow_hyphen_values = true)]
    from: Option<String>,
    /// End of the wall-crossing path.
    #[arg(long, requires = "from", allow_hyphen_values = true)]
    to: Option<String>,
    #[arg(long, default_value_t = 4)]
    order: u32,
    /// Also print the canonical form and `x dW/dx`, `y dW/dy`.
    #[arg(long)]
    details: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MctreesArgs {
    input: PathBuf,
    #[arg(long, default_value_t = 3)]
    order: u32,
    /// Also list every tree with its value.
    #[arg(long)]
    trees: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PlotArgs {
    #[command(subcommand)]
    what: PlotWhat,
}

#[derive(Subcommand, Debug)]
enum PlotWhat {
    /// A diagram file.
    Diagram {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// `xmin,ymin,xmax,ymax`.
        #[arg(long, allow_hyphen_values = true)]
        bounds: Option<String>,
    },
    /// The diagram of a fan with marked points.
    Marked {
        #[arg(long, default_value = "p2")]
        fan: String,
        #[arg(long, allow_hyphen_values = true)]
        points: String,
        #[arg(long, default_value_t = 3)]
        order: u32,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        bounds: Option<String>,
    },
    /// The amoeba `(log_t |z1|, log_t |z2|)` of a Laurent polynomial.
    Amoeba {
        /// Laurent polynomial, e.g. `1 + z^(1,0) + z^(0,1)`.
        #[arg(long)]
        poly: String,
        #[arg(long, default_value_t = std::f64::consts::E)]
        tbase: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4000)]
        samples: usize,
        #[arg(long, default_value = "-6,-6,6,6", allow_hyphen_values = true)]
        bounds: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// A failed run: exit code and message.
struct Failure {
    code: u8,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Internal(_)
            | Error::NonTermination(_)
            | Error::NonPerpendicularResidue { .. } => 2,
            _ => 1,
        };
        Failure {
            code,
            msg: e.to_string(),
        }
    }
}

fn input_error(msg: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        msg: msg.into(),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| input_error(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_diagram(
    path: &Path,
    order: Option<u32>,
) -> Result<scattering_core::ScatteringDiagram, Failure> {
    let text = read(path)?;
    parse_diagram_with_order(&text, order)
        .map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn load_fan(name: &str) -> Result<Fan, Failure> {
    match name {
        "p2" => Ok(Fan::p2()),
        "p1xp1" => Ok(Fan::p1xp1()),
        path => {
            let text = read(Path::new(path))?;
            parse_fan(&text).map_err(|e| input_error(format!("{path}: {e}")))
        }
    }
}

fn point(s: &str) -> Result<Point, Failure> {
    Point::parse(s).map_err(|e| input_error(format!("point `{s}`: {e}")))
}

fn cmd_complete(a: &DiagramArgs) -> Result<u8, Failure> {
    let d = load_diagram(&a.input, a.order)?;
    let done = d.complete()?;
    let cert = done.is_consistent()?;
    let mut text = write_diagram(&done);
    for line in cert.to_string().lines() {
        text.push_str(&format!("# {line}\n"));
    }
    emit(&a.out, &text)?;
    if cert.consistent {
        Ok(0)
    } else {
        eprintln!("completed diagram failed certification:\n{cert}");
        Ok(2)
    }
}

fn cmd_check(a: &DiagramArgs) -> Result<u8, Failure> {
    let d = load_diagram(&a.input, a.order)?;
    let cert = d.is_consistent()?;
    emit(&a.out, &format!("{cert}\n"))?;
    Ok(if cert.consistent { 0 } else { 3 })
}

fn cmd_potential(a: &PotentialArgs) -> Result<u8, Failure> {
    if a.order == 0 {
        return Err(input_error("--order must be positive"));
    }
    let fan = load_fan(&a.fan)?;
    let points = parse_points(&a.points).map_err(|e| input_error(format!("--points: {e}")))?;
    let sp = Superpotential::new(&fan, &points, a.order)?;
    let mut text = String::new();
    let mut code = 0;
    if let (Some(from), Some(to)) = (&a.from, &a.to) {
        let report = sp.wall_crossing_check(&point(from)?, &point(to)?)?;
        let scattered = if report.crossed_scattered {
            ", including a scattered wall"
        } else {
            ""
        };
        if report.holds {
            text.push_str(&format!(
                "wall-crossing identity holds mod t^{} ({} walls crossed{scattered})\n",
                a.order, report.crossed
            ));
        } else {
            text.push_str(&format!("wall-crossing identity FAILS mod t^{}\n", a.order));
            text.push_str(&format!("transported: {}\n", report.transported));
            text.push_str(&format!("direct:      {}\n", report.direct));
            code = 3;
        }
    }
    if let Some(at) = &a.at {
        let w = sp.potential(&point(at)?)?;
        text.push_str(&format!("{}\n", w.to_xy_string()));
        if a.details {
            let (dx, dy) = log_derivatives(&w);
            text.push_str(&format!("canonical: {w}\n"));
            text.push_str(&format!("x dW/dx = {}\n", dx.to_xy_string()));
            text.push_str(&format!("y dW/dy = {}\n", dy.to_xy_string()));
        }
    }
    if a.at.is_none() && a.from.is_none() {
        return Err(input_error("give --at or --from/--to"));
    }
    emit(&a.out, &text)?;
    Ok(code)
}

/// Equality with completion is asserted through `t^2`; beyond that the
/// comparison is a diagnostic only.
const MC_ASSERTED_ORDER: u32 = 3;

fn cmd_mctrees(a: &MctreesArgs) -> Result<u8, Failure> {
    if a.order == 0 {
        return Err(input_error("--order must be positive"));
    }
    let d = load_diagram(&a.input, Some(a.order))?;
    let input = input_of(&d)?;
    let sol = solve(&input, a.order)?;
    let mc = diagram_of(&sol)?;
    let mut text = sol.dump();
    if a.trees {
        text.push_str("trees:\n");
        text.push_str(&dump_trees(&enumerate_trees(&input, a.order)?));
    }
    text.push_str("diagram:\n");
    text.push_str(&write_diagram(&mc));
    let done = d.complete()?;
    let k = a.order.min(MC_ASSERTED_ORDER);
    let matches = mc.equivalent_mod(&done, k);
    text.push_str(&format!(
        "{} completion mod t^{k}\n",
        if matches { "matches" } else { "differs from" }
    ));
    if a.order > MC_ASSERTED_ORDER {
        let full = mc.equivalent_mod(&done, a.order);
        text.push_str(&format!(
            "diagnostic: {} completion mod t^{}\n",
            if full { "matches" } else { "differs from" },
            a.order
        ));
    }
    emit(&a.out, &text)?;
    Ok(if matches { 0 } else { 3 })
}

fn bounds(s: &Option<String>) -> Result<Option<Bounds>, Failure> {
    s.as_deref()
        .map(Bounds::parse)
        .transpose()
        .map_err(input_error)
}

fn cmd_plot(a: &PlotArgs) -> Result<u8, Failure> {
    match &a.what {
        PlotWhat::Diagram {
            input,
            out,
            bounds: b,
        } => {
            let d = load_diagram(input, None)?;
            let title = format!("diagram {}", input.display());
            emit(out, &svg::diagram_svg(&d, bounds(b)?, &title))?;
        }
        PlotWhat::Marked {
            fan,
            points,
            order,
            out,
            bounds: b,
        } => {
            if *order == 0 {
                return Err(input_error("--order must be positive"));
            }
            let fan = load_fan(fan)?;
            let pts = parse_points(points).map_err(|e| input_error(format!("--points: {e}")))?;
            let d = scattering_core::tropical::scattering_diagram(&fan, &pts, *order)?;
            emit(
                out,
                &svg::diagram_svg(&d, bounds(b)?, "diagram of marked points"),
            )?;
        }
        PlotWhat::Amoeba {
            poly,
            tbase,
            seed,
            samples,
            bounds: b,
            out,
        } => {
            if !(tbase.is_finite() && *tbase > 1.0) {
                return Err(input_error(format!("--tbase must exceed 1, got {tbase}")));
            }
            let p =
                TruncatedSeries::parse(1, poly).map_err(|e| input_error(format!("--poly: {e}")))?;
            if p.terms().any(|(m, _)| m.degree() > 0) {
                return Err(input_error(
                    "--poly must be a Laurent polynomial in z without t or markers",
                ));
            }
            if p.len() < 2 {
                return Err(input_error(
                    "--poly needs at least two terms to have a zero set",
                ));
            }
            let b = Bounds::parse(b).map_err(input_error)?;
            emit(out, &svg::amoeba_svg(&p, *tbase, &b, *samples, *seed))?;
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if cli.sequential {
        scattering_core::par::set_parallel(false);
    }
    let result = match &cli.command {
        Command::Complete(a) => cmd_complete(a),
        Command::Check(a) => cmd_check(a),
        Command::Potential(a) => cmd_potential(a),
        Command::Mctrees(a) => cmd_mctrees(a),
        Command::Plot(a) => cmd_plot(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
