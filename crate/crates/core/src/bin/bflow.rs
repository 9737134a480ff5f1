//! Scenario runner: `bflow run | validate | render | scan`.

use branchflow::io::render::{render_gray, render_overlay, render_signed, RenderStyle};
use branchflow::io::{parse_scenario_with_overrides, read_grid, run_scenario, GridData, Scenario};
use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "bflow", version, about = "Branched flow and superwire experiments from scenario files")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario and write its artifacts and manifest.
    Run {
        scenario: PathBuf,
        /// Output directory [default: runs/<scenario name>].
        #[arg(long, env = "BFLOW_OUT_DIR")]
        out: Option<PathBuf>,
        #[arg(long, env = "BFLOW_THREADS")]
        threads: Option<usize>,
        /// Dotted `key=value` override, e.g. `numerics.dt=0.005`; repeatable.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Parse and validate a scenario, reporting every problem.
    Validate { scenario: PathBuf },
    /// Render a grid file to a PGM/PPM image.
    Render {
        grid: PathBuf,
        #[arg(long, default_value = "gray-density")]
        style: RenderStyle,
        /// Background grid for `overlay-potential`.
        #[arg(long)]
        background: Option<PathBuf>,
        /// Image path [default: grid path with .pgm or .ppm].
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a stability or retention scenario over a different (a, q) lattice.
    Scan {
        scenario: PathBuf,
        /// `aMIN:aMAX:N,qMIN:qMAX:M`
        #[arg(long)]
        grid: String,
        #[arg(long, env = "BFLOW_OUT_DIR")]
        out: Option<PathBuf>,
        #[arg(long, env = "BFLOW_THREADS")]
        threads: Option<usize>,
    },
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn load(path: &Path, overrides: &[String]) -> Result<Scenario, ExitCode> {
    let text = std::fs::read_to_string(path).map_err(|e| fail(format!("{}: {e}", path.display())))?;
    parse_scenario_with_overrides(&text, overrides).map_err(|errs| {
        eprintln!("{}: {} problem(s)", path.display(), errs.0.len());
        for e in &errs.0 {
            eprintln!("  {e}");
        }
        ExitCode::from(2)
    })
}

fn set_threads(n: Option<usize>) {
    if let Some(n) = n {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
}

fn execute(s: &Scenario, out: Option<PathBuf>) -> ExitCode {
    let dir = out.unwrap_or_else(|| Path::new("runs").join(&s.name));
    match run_scenario(s, &dir) {
        Ok(m) => {
            for (k, v) in &m.metrics {
                println!("{k} = {v}");
            }
            for w in &m.warnings {
                eprintln!("warning: {w}");
            }
            for f in &m.failures {
                eprintln!("check failed: {f}");
            }
            println!("wrote {} artifacts to {} in {:.1} s", m.artifacts.len(), dir.display(), m.wall_time_s);
            if m.passed { ExitCode::SUCCESS } else { ExitCode::from(1) }
        }
        Err(e) => fail(e),
    }
}

/// `aMIN:aMAX:N,qMIN:qMAX:M` as scenario overrides.
fn scan_overrides(spec: &str) -> Result<Vec<String>, String> {
    let parts: Vec<&str> = spec.split(',').collect();
    let [a, q] = parts.as_slice() else {
        return Err(format!("expected aMIN:aMAX:N,qMIN:qMAX:M, got {spec:?}"));
    };
    let axis = |s: &str| -> Result<(f64, f64, usize), String> {
        let f: Vec<&str> = s.split(':').collect();
        let bad = || format!("bad axis {s:?}; expected MIN:MAX:N");
        let [lo, hi, n] = f.as_slice() else { return Err(bad()) };
        Ok((lo.parse().map_err(|_| bad())?, hi.parse().map_err(|_| bad())?, n.parse().map_err(|_| bad())?))
    };
    let (a0, a1, na) = axis(a)?;
    let (q0, q1, nq) = axis(q)?;
    Ok(vec![
        format!("scan.a=[{a0:?}, {a1:?}]"),
        format!("scan.q=[{q0:?}, {q1:?}]"),
        format!("scan.resolution=[{na}, {nq}]"),
    ])
}

fn render(grid: &Path, style: RenderStyle, background: Option<PathBuf>, out: Option<PathBuf>) -> ExitCode {
    let (h, data) = match read_grid(grid) {
        Ok(x) => x,
        Err(e) => return fail(e),
    };
    let values = match (&data, style) {
        (GridData::C128(z), RenderStyle::GrayDensity | RenderStyle::OverlayPotential) => z.iter().map(|z| z.norm_sqr()).collect(),
        _ => data.real(),
    };
    let img = match style {
        RenderStyle::GrayDensity => render_gray(&values, h.nx, h.ny),
        RenderStyle::SignedRedblue => render_signed(&values, h.nx, h.ny),
        RenderStyle::OverlayPotential => {
            let Some(bg) = background else { return fail("overlay-potential needs --background <grid-file>") };
            match read_grid(&bg) {
                Ok((bh, bd)) if (bh.nx, bh.ny) == (h.nx, h.ny) => render_overlay(&values, &bd.real(), h.nx, h.ny),
                Ok(_) => return fail("background grid has a different shape"),
                Err(e) => return fail(e),
            }
        }
    };
    let ext = if style == RenderStyle::GrayDensity { "pgm" } else { "ppm" };
    let path = out.unwrap_or_else(|| grid.with_extension(ext));
    if let Err(e) = std::fs::write(&path, &img.bytes) {
        return fail(format!("{}: {e}", path.display()));
    }
    println!("wrote {} (range {:?}, {} NaN pixels)", path.display(), img.range, img.nan_pixels);
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().cmd {
        Cmd::Run { scenario, out, threads, overrides } => {
            set_threads(threads);
            match load(&scenario, &overrides) {
                Ok(s) => execute(&s, out),
                Err(code) => code,
            }
        }
        Cmd::Validate { scenario } => match load(&scenario, &[]) {
            Ok(s) => {
                println!("{}: ok ({})", scenario.display(), s.kind.name());
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
        Cmd::Render { grid, style, background, out } => render(&grid, style, background, out),
        Cmd::Scan { scenario, grid, out, threads } => {
            set_threads(threads);
            let overrides = match scan_overrides(&grid) {
                Ok(o) => o,
                Err(e) => return fail(e),
            };
            match load(&scenario, &overrides) {
                Ok(s) if s.scan.is_none() => fail(format!("{} is not a stability or retention scan", s.kind.name())),
                Ok(s) => execute(&s, out),
                Err(code) => code,
            }
        }
    }
}
