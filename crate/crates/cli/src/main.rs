//! `corrdyn`: command-line access to the correspondence toolkit.

mod check;
mod config;

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use corrdyn::corr::{cov_images, critical_data, orbit_tree, OrbitOptions};
use corrdyn::klein::validate_klein;
use corrdyn::measure::{
    discrepancy, invariance_residual, kernel_features, read_atoms_csv, transport, write_atoms_csv,
    Coalesce, KernelSpec, TransportOptions,
};
use corrdyn::periodic::{
    graph_iterate, periodic_points, superstable_parameters, Method, PeriodicOptions, Region,
};
use corrdyn::render::{
    encode_pgm, encode_ppm, render_limit_set_with, Palette, RenderOptions, Viewport,
    DEFAULT_MAX_STEPS,
};
use corrdyn::{AtomicMeasure, CorrContext, Direction, KleinPair, Side, SpherePoint, WeightedImage};
use num_complex::Complex64;

use config::Settings;

/// Bad input from the user: exit status 2.
#[derive(Debug)]
pub struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// A complex number written `re` or `re,im`.
#[derive(Clone, Copy, Debug)]
struct Param(Complex64);

impl FromStr for Param {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let bad = || format!("expected `re` or `re,im`, got {s:?}");
        let (re, im) = s.split_once(',').unwrap_or((s, "0"));
        let re: f64 = re.trim().parse().map_err(|_| bad())?;
        let im: f64 = im.trim().parse().map_err(|_| bad())?;
        if !(re.is_finite() && im.is_finite()) {
            return Err(bad());
        }
        Ok(Param(Complex64::new(re, im)))
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.0.re, self.0.im)
    }
}

/// Atom merging: `off`, `auto`, or a chordal radius.
#[derive(Clone, Copy, Debug)]
struct CoalesceArg(Coalesce);

impl FromStr for CoalesceArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "off" => Ok(CoalesceArg(Coalesce::Off)),
            "auto" => Ok(CoalesceArg(Coalesce::Auto)),
            _ => match s.parse::<f64>() {
                Ok(e) if e > 0.0 && e.is_finite() => Ok(CoalesceArg(Coalesce::Eps(e))),
                _ => Err(format!(
                    "expected off, auto or a positive radius, got {s:?}"
                )),
            },
        }
    }
}

impl fmt::Display for CoalesceArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Coalesce::Off => f.write_str("off"),
            Coalesce::Auto => f.write_str("auto"),
            Coalesce::Eps(e) => write!(f, "{e}"),
        }
    }
}

/// Pixel dimensions written `N` or `WxH`.
#[derive(Clone, Copy, Debug)]
struct Pixels(usize, usize);

impl FromStr for Pixels {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let bad = || format!("expected N or WxH with positive sizes, got {s:?}");
        let (w, h) = s.split_once('x').unwrap_or((s, s));
        let w: usize = w.parse().map_err(|_| bad())?;
        let h: usize = h.parse().map_err(|_| bad())?;
        if w == 0 || h == 0 {
            return Err(bad());
        }
        Ok(Pixels(w, h))
    }
}

impl fmt::Display for Pixels {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.0, self.1)
    }
}

#[derive(Parser)]
#[command(
    name = "corrdyn",
    version,
    about = "Dynamics of the correspondences F_a"
)]
struct Cli {
    /// File of `key=value` lines supplying defaults for any flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct ParamArg {
    /// The parameter `a`, as `re` or `re,im` (default 4).
    #[arg(long, allow_hyphen_values = true)]
    a: Option<Param>,
}

#[derive(Args, Clone)]
struct OrbitArgs {
    #[command(flatten)]
    param: ParamArg,
    /// Starting point, `re,im` or `inf`.
    #[arg(long, allow_hyphen_values = true)]
    z: Option<SpherePoint>,
    /// Number of steps.
    #[arg(long)]
    n: Option<u32>,
    /// off, auto, or a chordal merge radius.
    #[arg(long)]
    coalesce: Option<CoalesceArg>,
    /// Write the atoms here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the images of a point under the covering relation.
    Cov {
        #[arg(long, allow_hyphen_values = true)]
        z: Option<SpherePoint>,
    },
    /// Images of a point under F_a, or the n-step orbit measure.
    Forward(OrbitArgs),
    /// Preimages of a point under F_a, or the n-step orbit measure.
    Backward(OrbitArgs),
    /// Transport, compare and test atomic measures.
    #[command(subcommand)]
    Measure(MeasureCmd),
    /// Render a limit set as PPM (or PGM for a `.pgm` path).
    Limitset {
        #[command(flatten)]
        param: ParamArg,
        /// minus or plus.
        #[arg(long)]
        side: Option<Side>,
        /// Viewport center, `re,im`.
        #[arg(long, allow_hyphen_values = true)]
        center: Option<Param>,
        /// Viewport width in the plane.
        #[arg(long)]
        width: Option<f64>,
        /// `N` or `WxH`.
        #[arg(long)]
        pixels: Option<Pixels>,
        #[arg(long)]
        n_max: Option<u32>,
        /// 2x2 samples per pixel.
        #[arg(long)]
        supersample: Option<bool>,
        #[arg(long)]
        palette: Option<Palette>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Periodic points of F_a of period dividing n, as CSV.
    Periodic {
        #[command(flatten)]
        param: ParamArg,
        #[arg(long)]
        n: Option<u32>,
        /// resultant, newton or both.
        #[arg(long)]
        method: Option<Method>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the graph of F_a^n in BiPoly text form.
        #[arg(long)]
        dump_poly: Option<PathBuf>,
    },
    /// Parameters where the critical point -1 has period dividing n, as CSV.
    Superstable {
        #[arg(long)]
        n: Option<u32>,
        /// Seeds per side of the search grid.
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Checks on the Klein combination pair.
    #[command(subcommand)]
    Klein(KleinCmd),
    /// Print the ramification data of the graph.
    Critical {
        #[command(flatten)]
        param: ParamArg,
    },
    /// Run the invariant suite; nonzero exit on any failure.
    Check {
        #[command(flatten)]
        param: ParamArg,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Subcommand)]
enum MeasureCmd {
    /// Transport a Dirac mass or an atom file n steps.
    Evolve {
        #[command(flatten)]
        param: ParamArg,
        #[arg(long, allow_hyphen_values = true)]
        z: Option<SpherePoint>,
        /// Atom CSV to start from instead of a Dirac mass.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        n: Option<u32>,
        /// forward or backward.
        #[arg(long)]
        direction: Option<Direction>,
        #[arg(long)]
        coalesce: Option<CoalesceArg>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Kernel discrepancy between two atom files.
    Compare {
        #[arg(long)]
        left: Option<PathBuf>,
        #[arg(long)]
        right: Option<PathBuf>,
        /// Number of Fibonacci centers.
        #[arg(long)]
        centers: Option<usize>,
        #[arg(long)]
        bandwidth: Option<f64>,
        /// Also write the left measure's features as CSV.
        #[arg(long)]
        features_out: Option<PathBuf>,
    },
    /// Discrepancy between a measure and one transport step of it.
    Residual {
        #[command(flatten)]
        param: ParamArg,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        direction: Option<Direction>,
    },
}

#[derive(Subcommand)]
enum KleinCmd {
    /// Monte-Carlo check of disjointness, coverage and the involution.
    Validate {
        #[command(flatten)]
        param: ParamArg,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn context(s: &mut Settings, p: &ParamArg) -> Result<CorrContext> {
    let a = s.get("a", p.a, Param(Complex64::new(4.0, 0.0)))?;
    CorrContext::new(a.0).map_err(|e| usage(e.to_string()))
}

/// Context for commands that need the Klein pair, so `|a - 4| <= 3`.
fn klein_context(s: &mut Settings, p: &ParamArg) -> Result<(CorrContext, KleinPair)> {
    let ctx = context(s, p)?;
    let pair = KleinPair::supported(&ctx).map_err(|e| usage(e.to_string()))?;
    Ok((ctx, pair))
}

/// Opens an output before any long computation, so a bad path fails fast.
fn create(path: &Path) -> Result<BufWriter<File>> {
    let f =
        File::create(path).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?;
    Ok(BufWriter::new(f))
}

fn open_atoms(path: &Path) -> Result<AtomicMeasure> {
    let f = File::open(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    read_atoms_csv(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))
}

fn finish(mut out: BufWriter<File>, path: &Path) -> Result<()> {
    out.flush()
        .with_context(|| format!("writing {}", path.display()))
}

fn print_image(img: &WeightedImage) {
    println!("re,im,at_infinity,multiplicity");
    for (p, m) in img.weighted() {
        match p {
            SpherePoint::Finite(z) => println!("{:?},{:?},0,{m}", z.re, z.im),
            SpherePoint::Infinity => println!("inf,inf,1,{m}"),
        }
    }
}

fn orbit(s: &mut Settings, args: &OrbitArgs, dir: Direction) -> Result<()> {
    let ctx = context(s, &args.param)?;
    let z = s.need("z", args.z)?;
    let n = s.get("n", args.n, 1)?;
    let coalesce = s.get("coalesce", args.coalesce, CoalesceArg(Coalesce::Off))?;
    s.note("direction", dir);
    let out = s.path("out", args.out.as_ref())?;
    let writer = out.as_deref().map(create).transpose()?;
    let opts = OrbitOptions {
        coalesce: coalesce.0,
        ..OrbitOptions::default()
    };
    let mu = orbit_tree(&ctx, z, n, dir, opts)?;
    match writer {
        Some(mut w) => {
            write_atoms_csv(&mu, &s.header(), &mut w)?;
            let path = out.unwrap();
            finish(w, &path)?;
            println!(
                "{} atoms, mass {} -> {}",
                mu.len(),
                mu.mass(),
                path.display()
            );
        }
        None => write_atoms_csv(&mu, &s.header(), std::io::stdout().lock())?,
    }
    Ok(())
}

fn measure(s: &mut Settings, cmd: &MeasureCmd) -> Result<()> {
    match cmd {
        MeasureCmd::Evolve {
            param,
            z,
            input,
            n,
            direction,
            coalesce,
            out,
        } => {
            let ctx = context(s, param)?;
            let input = s.path("input", input.as_ref())?;
            let start = match input {
                Some(path) => open_atoms(&path)?,
                None => AtomicMeasure::dirac(s.need("z", *z)?),
            };
            let n = s.get("n", *n, 10)?;
            let dir = s.get("direction", *direction, Direction::Backward)?;
            let coalesce = s.get("coalesce", *coalesce, CoalesceArg(Coalesce::Auto))?;
            let out = s.need_path("out", out.as_ref())?;
            let mut w = create(&out)?;
            let opts = TransportOptions {
                coalesce: coalesce.0,
                ..TransportOptions::default()
            };
            let t = Instant::now();
            let mu = transport(&ctx, &start, n, dir, opts)?;
            write_atoms_csv(&mu, &s.header(), &mut w)?;
            finish(w, &out)?;
            println!(
                "{} atoms, mass {} in {:.2?} -> {}",
                mu.len(),
                mu.mass(),
                t.elapsed(),
                out.display()
            );
        }
        MeasureCmd::Compare {
            left,
            right,
            centers,
            bandwidth,
            features_out,
        } => {
            let left = s.need_path("left", left.as_ref())?;
            let right = s.need_path("right", right.as_ref())?;
            let count = s.get("centers", *centers, 256)?;
            let bw = s.get("bandwidth", *bandwidth, 0.15)?;
            let spec = KernelSpec::fibonacci(count, bw).map_err(|e| usage(e.to_string()))?;
            let feats = s.path("features_out", features_out.as_ref())?;
            let writer = feats.as_deref().map(create).transpose()?;
            let (mu, nu) = (open_atoms(&left)?, open_atoms(&right)?);
            if let Some(mut w) = writer {
                s.write_header(&mut w)?;
                kernel_features(&mu, &spec).write_csv(&mut w)?;
                finish(w, feats.as_deref().unwrap())?;
            }
            println!("{}", discrepancy(&mu, &nu, &spec));
        }
        MeasureCmd::Residual {
            param,
            input,
            direction,
        } => {
            let ctx = context(s, param)?;
            let input = s.need_path("input", input.as_ref())?;
            let dir = s.get("direction", *direction, Direction::Backward)?;
            let mu = open_atoms(&input)?;
            println!("{}", invariance_residual(&ctx, &mu, dir)?);
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn limitset(
    s: &mut Settings,
    param: &ParamArg,
    side: Option<Side>,
    center: Option<Param>,
    width: Option<f64>,
    pixels: Option<Pixels>,
    n_max: Option<u32>,
    supersample: Option<bool>,
    palette: Option<Palette>,
    out: Option<&PathBuf>,
) -> Result<()> {
    let (_, pair) = klein_context(s, param)?;
    let side = s.get("side", side, Side::Minus)?;
    let center = s.get("center", center, Param(Complex64::new(-0.5, 0.0)))?;
    let width = s.get("width", width, 4.0)?;
    let pixels = s.get("pixels", pixels, Pixels(1024, 1024))?;
    let max_steps = s.get("n_max", n_max, DEFAULT_MAX_STEPS)?;
    if max_steps == 0 {
        return Err(usage("--n-max must be at least 1"));
    }
    let supersample = s.get("supersample", supersample, false)?;
    let palette = s.get("palette", palette, Palette::Escape)?;
    let out = s.need_path("out", out)?;
    let viewport =
        Viewport::new(center.0, width, pixels.0, pixels.1).map_err(|e| usage(e.to_string()))?;
    let mut w = create(&out)?;
    let t = Instant::now();
    let grid = render_limit_set_with(
        &pair,
        side,
        &viewport,
        RenderOptions {
            max_steps,
            supersample,
        },
    );
    let bytes = if out.extension().is_some_and(|e| e == "pgm") {
        encode_pgm(&grid, palette)
    } else {
        encode_ppm(&grid, palette)
    };
    w.write_all(&bytes)?;
    finish(w, &out)?;
    let inside = grid.inside_mask().iter().filter(|&&b| b).count();
    let slow = grid.slow.iter().filter(|&&b| b).count();
    println!(
        "{}x{} in {:.2?}: {inside} inside ({slow} slow) -> {}",
        pixels.0,
        pixels.1,
        t.elapsed(),
        out.display()
    );
    Ok(())
}

fn periodic(
    s: &mut Settings,
    param: &ParamArg,
    n: Option<u32>,
    method: Option<Method>,
    out: Option<&PathBuf>,
    dump: Option<&PathBuf>,
) -> Result<()> {
    let ctx = context(s, param)?;
    let n = s.get("n", n, 1)?;
    if n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    let method = s.get("method", method, Method::Both)?;
    let out = s.need_path("out", out)?;
    let dump = s.path("dump_poly", dump)?;
    let mut w = create(&out)?;
    let dump_writer = dump.as_deref().map(create).transpose()?;
    let t = Instant::now();
    let rep = periodic_points(&ctx, n, method, &PeriodicOptions::default())?;
    s.write_header(&mut w)?;
    writeln!(w, "re,im,at_infinity,multiplicity,side,verified")?;
    for p in &rep.points {
        let (re, im, inf) = match p.point {
            SpherePoint::Finite(z) => (format!("{:?}", z.re), format!("{:?}", z.im), 0),
            SpherePoint::Infinity => ("inf".into(), "inf".into(), 1),
        };
        writeln!(
            w,
            "{re},{im},{inf},{},{},{}",
            p.multiplicity,
            p.side,
            u8::from(p.verified)
        )?;
    }
    finish(w, &out)?;
    if let Some(mut dw) = dump_writer {
        graph_iterate(&ctx, n)?.write_text(&mut dw)?;
        finish(dw, dump.as_deref().unwrap())?;
    }
    let expected = 1u64 << (n + 1);
    println!(
        "period {n}: {} distinct points, total multiplicity {} of {expected} in {:.2?} -> {}",
        rep.count_distinct,
        rep.total_multiplicity,
        t.elapsed(),
        out.display()
    );
    if !rep.complete() {
        anyhow::bail!("verified multiplicities fall short of {expected}");
    }
    Ok(())
}

fn superstable(
    s: &mut Settings,
    n: Option<u32>,
    grid: Option<usize>,
    out: Option<&PathBuf>,
) -> Result<()> {
    let n = s.get("n", n, 1)?;
    if n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    let grid = s.get("grid", grid, 30)?;
    let out = s.need_path("out", out)?;
    let mut w = create(&out)?;
    let found = superstable_parameters(n, grid, Region::default());
    s.write_header(&mut w)?;
    writeln!(w, "re,im,residual,critical_verified")?;
    for p in &found {
        writeln!(
            w,
            "{:?},{:?},{:e},{}",
            p.a.re,
            p.a.im,
            p.residual,
            u8::from(p.critical_verified)
        )?;
    }
    finish(w, &out)?;
    let total: u32 = found.iter().map(|p| p.multiplicity).sum();
    let expected = 1u32 << (n - 1);
    println!(
        "{} parameters, total multiplicity {total} of {expected} -> {}",
        found.len(),
        out.display()
    );
    if total < expected {
        println!("shortfall: {} missing", expected - total);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let mut s = Settings::load(cli.config.as_deref())?;
    let threads = s.opt("threads", cli.threads)?;
    if let Some(t) = threads {
        if t == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("configuring the thread pool")?;
    }
    // Thread count never changes results, so it stays out of the headers.
    s.effective.remove("threads");
    match &cli.cmd {
        Cmd::Cov { z } => {
            let z = s.need("z", *z)?;
            print_image(&cov_images(z));
        }
        Cmd::Forward(args) => orbit(&mut s, args, Direction::Forward)?,
        Cmd::Backward(args) => orbit(&mut s, args, Direction::Backward)?,
        Cmd::Measure(m) => measure(&mut s, m)?,
        Cmd::Limitset {
            param,
            side,
            center,
            width,
            pixels,
            n_max,
            supersample,
            palette,
            out,
        } => limitset(
            &mut s,
            param,
            *side,
            *center,
            *width,
            *pixels,
            *n_max,
            *supersample,
            *palette,
            out.as_ref(),
        )?,
        Cmd::Periodic {
            param,
            n,
            method,
            out,
            dump_poly,
        } => periodic(&mut s, param, *n, *method, out.as_ref(), dump_poly.as_ref())?,
        Cmd::Superstable { n, grid, out } => superstable(&mut s, *n, *grid, out.as_ref())?,
        Cmd::Klein(KleinCmd::Validate {
            param,
            samples,
            seed,
        }) => {
            let (ctx, _) = klein_context(&mut s, param)?;
            let samples = s.get("samples", *samples, 10_000)?;
            let seed = s.get("seed", *seed, 0)?;
            let rep = validate_klein(&ctx, samples, seed)?;
            print!("{rep}");
            if !rep.all_ok() {
                anyhow::bail!("Klein validation failed");
            }
        }
        Cmd::Critical { param } => {
            let ctx = context(&mut s, param)?;
            let d = critical_data(&ctx);
            let pairs = |v: &[(SpherePoint, SpherePoint)]| {
                v.iter()
                    .map(|(z, w)| format!("({z}) -> ({w})"))
                    .collect::<Vec<_>>()
                    .join("  ")
            };
            let points = |v: &[SpherePoint]| {
                v.iter()
                    .map(|p| format!("({p})"))
                    .collect::<Vec<_>>()
                    .join("  ")
            };
            println!("A1  {}", pairs(&d.a1));
            println!("A2  {}", pairs(&d.a2));
            println!("B1  {}", points(&d.b1));
            println!("B2  {}", points(&d.b2));
        }
        Cmd::Check { param, seed } => {
            let (ctx, _) = klein_context(&mut s, param)?;
            let seed = s.get("seed", *seed, 0)?;
            let mut failed = 0;
            for g in check::run(&ctx, seed) {
                match g.failure {
                    None => println!("PASS {}", g.name),
                    Some(why) => {
                        failed += 1;
                        println!("FAIL {}: {why}", g.name);
                    }
                }
            }
            if failed > 0 {
                anyhow::bail!("{failed} invariant group(s) failed");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<UsageError>().is_some() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
