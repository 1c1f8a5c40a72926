//! `osgood`: command-line driver for the verification laboratory.
//!
//! Reports are JSON and go to stdout; with an output directory (`--out`, or
//! the `OSGOOD_OUT_DIR` environment variable) they are also written there.
//! Grid and table exports are CSV (or JSON where noted) and go to the
//! output directory when one is set, stdout otherwise.
//!
//! Exit codes: 0 when every requested check passes, 2 when a check fails,
//! 1 for usage and runtime errors.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use osgood_lab::carleman::{self, CarlemanProbeConfig, TestFamily};
use osgood_lab::dyadic::{self, CoefficientMatrix, CommutatorProbeConfig, DyadicPartition, GridField};
use osgood_lab::modulus::{check_concavity_consequences, osgood_integral, Modulus};
use osgood_lab::mollify::{verify_mollifier_bounds, MollifierKernel, MollifyFamily};
use osgood_lab::pliss::{
    export_construction, verify_cmu_regularity, verify_conditions, verify_pde, ExportFormat, GridSpec, Orientation,
    PdeCheckConfig, PlissConstruction,
};
use osgood_lab::report::{merge, VerificationReport};
use osgood_lab::suite;
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(name = "osgood", version, about = "Backward-uniqueness verification laboratory")]
struct Cli {
    /// Directory for reports and exports
    #[arg(long, global = true, env = "OSGOOD_OUT_DIR")]
    out: Option<PathBuf>,
    /// Seed for every randomized check
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Moduli of continuity
    #[command(subcommand)]
    Mu(MuCmd),
    /// Carleman weight tables and the weighted-estimate probe
    #[command(subcommand)]
    Weight(WeightCmd),
    /// Littlewood–Paley decomposition on periodic grids
    #[command(subcommand)]
    Lp(LpCmd),
    /// Time mollification bounds
    #[command(subcommand)]
    Mollify(MollifyCmd),
    /// The non-uniqueness example for a non-Osgood modulus
    #[command(subcommand)]
    Pliss(PlissCmd),
    /// Full verification suite
    All,
}

#[derive(Subcommand, Debug)]
enum MuCmd {
    /// List builtin modulus names
    List,
    /// Evaluate μ(s)
    Eval {
        #[arg(long)]
        name: String,
        #[arg(long)]
        s: f64,
    },
    /// Integral of 1/μ and Osgood classification
    Osgood {
        #[arg(long)]
        name: String,
        #[arg(long, default_value_t = 1e-12)]
        floor: f64,
    },
    /// Monotonicity and concavity consequences
    Check {
        #[arg(long)]
        name: String,
        #[arg(long, default_value_t = 64)]
        samples: usize,
    },
}

#[derive(Args, Debug)]
struct TableArgs {
    #[arg(long, default_value = "linear")]
    mu: String,
    #[arg(long, default_value_t = 1e3)]
    t_max: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Subcommand, Debug)]
enum WeightCmd {
    /// Tabulate φ, Φ, Φ′, Φ″ as CSV
    Build(TableArgs),
    /// Evaluate φ(t), Φ(τ) and the weight exp((2/γ)Φ(γ(T−t)))
    Eval {
        #[command(flatten)]
        table: TableArgs,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long, default_value_t = 0.5)]
        horizon: f64,
    },
    /// Table self-checks (identity residual, monotonicity)
    Check(TableArgs),
    /// Weighted-estimate probe on a sampled test family
    Probe {
        #[arg(long, default_value = "sin2-cos")]
        family: String,
    },
}

#[derive(Subcommand, Debug)]
enum LpCmd {
    /// Write one dyadic block of a seeded random field as CSV
    Decompose {
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 256)]
        resolution: usize,
        #[arg(long, default_value_t = 0)]
        nu: usize,
    },
    /// Reconstruction, almost-orthogonality and Bernstein checks
    Check {
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 1024)]
        resolution: usize,
        #[arg(long, default_value_t = 50)]
        fields: usize,
    },
    /// Commutator growth across resolutions
    Probe,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FamilyArg {
    Sawtooth,
    PlissL,
    Constant,
    Linear,
}

#[derive(Subcommand, Debug)]
enum MollifyCmd {
    /// Sweep dyadic ε in [eps-min, eps-max] and fit the bound constants
    Check {
        #[arg(long, default_value = "sqrt")]
        mu: String,
        #[arg(long, value_enum, default_value = "sawtooth")]
        family: FamilyArg,
        #[arg(long, default_value_t = 1.0 / 16384.0)]
        eps_min: f64,
        #[arg(long, default_value_t = 1.0 / 16.0)]
        eps_max: f64,
        /// segments of the example when the family is pliss-l
        #[arg(long, default_value_t = 200)]
        segments: usize,
    },
}

#[derive(Args, Debug)]
struct BuildArgs {
    #[arg(long, default_value = "sqrt")]
    mu: String,
    /// `auto` or an integer
    #[arg(long, default_value = "auto")]
    k0: String,
    #[arg(long)]
    segments: Option<usize>,
    /// Use the reflected-time view (support t >= 0)
    #[arg(long)]
    reflected: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum PlissCmd {
    /// Build the sequences and print a summary
    Build(BuildArgs),
    /// Evaluate the solution and coefficients at one point
    Eval {
        #[command(flatten)]
        build: BuildArgs,
        #[arg(long, allow_hyphen_values = true)]
        t: f64,
        #[arg(long, allow_hyphen_values = true)]
        x1: f64,
        #[arg(long, allow_hyphen_values = true)]
        x2: f64,
    },
    /// Verify the parameter conditions, the PDE and the regularity of l
    Verify {
        #[command(flatten)]
        build: BuildArgs,
        /// pairs sampled for the regularity check
        #[arg(long, default_value_t = 100_000)]
        pairs: usize,
        /// random points for the residual check
        #[arg(long, default_value_t = 100_000)]
        points: usize,
    },
    /// Evaluate on a tensor grid `t0:t1:nt,x0:x1:nx,y0:y1:ny`
    Export {
        #[command(flatten)]
        build: BuildArgs,
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
    },
}

/// Outcome of a command: a report to judge, or plain data.
enum Outcome {
    Report(VerificationReport, &'static str),
    Done,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Normal output goes to `stdout`, diagnostics to
/// `stderr`.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
                return 1;
            }
            let _ = write!(stdout, "{}", e.render());
            return 0;
        }
    };
    let mut io = Io { out: stdout, err: stderr };
    match run(&cli, &mut io) {
        Ok(true) => 0,
        Ok(false) => 2,
        Err(e) => {
            let _ = writeln!(io.err, "error: {e:#}");
            1
        }
    }
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

fn run(cli: &Cli, io: &mut Io) -> Result<bool> {
    if let Some(dir) = &cli.out {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let out = cli.out.as_deref();
    match dispatch(cli, out, io)? {
        Outcome::Report(rep, stem) => {
            let json = rep.to_json();
            if let Some(dir) = out {
                write_atomic(&dir.join(format!("{stem}-report.json")), |w| Ok(w.write_all(json.as_bytes())?))?;
            }
            print_text(io, &json)?;
            for row in rep.failures() {
                writeln!(
                    io.err,
                    "FAIL {}::{} measured {} (threshold {})",
                    row.module, row.check_id, row.measured, row.threshold
                )?;
            }
            Ok(rep.all_passed())
        }
        Outcome::Done => Ok(true),
    }
}

/// Writes through a temporary file in the target directory, so a failure
/// midway leaves no partial output behind.
fn write_atomic<F>(path: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = std::io::BufWriter::new(tmp.as_file_mut());
        body(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Data goes to `dir/file` when an output directory is set, stdout otherwise.
fn emit_data<F>(out: Option<&Path>, io: &mut Io, file: &str, body: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    match out {
        Some(dir) => {
            let path = dir.join(file);
            write_atomic(&path, body)?;
            writeln!(io.err, "wrote {}", path.display())?;
            Ok(())
        }
        None => {
            body(&mut *io.out)?;
            Ok(io.out.flush()?)
        }
    }
}

fn print_json<T: Serialize>(io: &mut Io, value: &T) -> Result<()> {
    print_text(io, &serde_json::to_string_pretty(value)?)
}

fn print_text(io: &mut Io, text: &str) -> Result<()> {
    writeln!(io.out, "{text}")?;
    Ok(io.out.flush()?)
}

fn modulus(name: &str) -> Result<Modulus> {
    Modulus::from_name(name).with_context(|| format!("unknown modulus `{name}` (try `osgood mu list`)"))
}

fn construction(b: &BuildArgs) -> Result<PlissConstruction> {
    let mu = modulus(&b.mu)?;
    let k0 = match b.k0.as_str() {
        "auto" => None,
        s => Some(s.parse::<u64>().with_context(|| format!("--k0 must be `auto` or an integer, got `{s}`"))?),
    };
    let orientation = if b.reflected {
        Orientation::ReflectedTime
    } else {
        Orientation::ConstructionTime
    };
    Ok(PlissConstruction::new(&mu, k0, b.segments, orientation)?)
}

fn dispatch(cli: &Cli, out: Option<&Path>, io: &mut Io) -> Result<Outcome> {
    let seed = cli.seed;
    Ok(match &cli.command {
        Command::Mu(cmd) => match cmd {
            MuCmd::List => {
                print_text(io, &Modulus::builtin_names().join("\n"))?;
                Outcome::Done
            }
            MuCmd::Eval { name, s } => {
                let mu = modulus(name)?;
                if !(0.0..=1.0).contains(s) {
                    bail!("s = {s} outside [0, 1]");
                }
                print_json(io, &serde_json::json!({ "name": mu.name(), "s": s, "value": mu.eval(*s) }))?;
                Outcome::Done
            }
            MuCmd::Osgood { name, floor } => {
                let mu = modulus(name)?;
                let oi = osgood_integral(&mu, *floor)?;
                let mut rep = VerificationReport::new();
                rep.flag("modulus", "osgood_classification", "osgood-condition", oi.classification == mu.osgood_class());
                rep.detail("integral", oi.value)
                    .detail("abs_err", oi.abs_err)
                    .detail("diagnostic", oi.diagnostic)
                    .detail("floor", *floor);
                rep.note(&format!("classification: {}", oi.classification));
                Outcome::Report(rep.with_provenance(seed, &(name, floor)), "mu-osgood")
            }
            MuCmd::Check { name, samples } => {
                if *samples < 16 {
                    bail!("--samples must be at least 16");
                }
                let mu = modulus(name)?;
                let rep = check_concavity_consequences(&mu, *samples);
                Outcome::Report(rep.with_provenance(seed, &(name, samples)), "mu-check")
            }
        },
        Command::Weight(cmd) => match cmd {
            WeightCmd::Build(a) => {
                let wt = carleman::weight_table(&modulus(&a.mu)?, a.t_max, a.tol)?;
                emit_data(out, io, "weight-table.csv", |w| Ok(carleman::write_table_csv(&wt, w)?))?;
                Outcome::Done
            }
            WeightCmd::Eval { table, t, gamma, horizon } => {
                let wt = carleman::weight_table(&modulus(&table.mu)?, table.t_max, table.tol)?;
                let phi = wt.phi_at(*t)?;
                let big = wt.big_phi_at(phi)?;
                let mut v = serde_json::json!({
                    "mu": table.mu, "t": t, "phi": phi,
                    "Phi": big.value, "Phi1": big.d1, "Phi2": big.d2,
                });
                if let Some(g) = gamma {
                    let s = t.min(*horizon);
                    v["weight_t"] = serde_json::json!(s);
                    v["weight"] = serde_json::json!(carleman::weight_value(&wt, *g, *horizon, s)?);
                }
                print_json(io, &v)?;
                Outcome::Done
            }
            WeightCmd::Check(a) => {
                let wt = carleman::weight_table(&modulus(&a.mu)?, a.t_max, a.tol)?;
                let rep = carleman::verify_table(&wt, seed)?;
                Outcome::Report(rep.with_provenance(seed, &(&a.mu, a.t_max, a.tol)), "weight-check")
            }
            WeightCmd::Probe { family } => {
                let fam = TestFamily::parse(family)
                    .with_context(|| format!("unknown family `{family}` (sin2-cos, const-time, zero)"))?;
                let cfg = CarlemanProbeConfig::standard(fam);
                let mu = modulus("linear")?;
                let wt = carleman::weight_table(&mu, (cfg.required_tau() + 1.0).exp(), 1e-10)?;
                let coeffs = CoefficientMatrix::identity(cfg.dim, cfg.resolution)?;
                let probe = carleman::probe_carleman(&cfg, &wt, &coeffs)?;
                let mut rep = VerificationReport::new();
                rep.flag("carleman", "probe_feasible", "weighted-estimate-probe", probe.feasible);
                if let Some(c) = probe.constant {
                    rep.detail("constant", c);
                }
                if let Some(g) = probe.gamma0 {
                    rep.detail("gamma0", g);
                }
                rep.note(&probe.verdict);
                rep.flag("carleman", "probe_ratio_monotone", "weighted-estimate-probe", probe.ratio_nondecreasing);
                for row in &probe.rows {
                    if let Some(r) = row.ratio_half {
                        rep.detail(&format!("ratio@gamma={}", row.gamma), r);
                    }
                }
                Outcome::Report(rep.with_provenance(seed, &cfg), "weight-probe")
            }
        },
        Command::Lp(cmd) => match cmd {
            LpCmd::Decompose { dim, resolution, nu } => {
                let part = DyadicPartition::for_resolution(*dim, *resolution)?;
                if *nu > part.nu_max {
                    bail!("--nu {nu} exceeds the largest block {} at this resolution", part.nu_max);
                }
                let band = (1u64 << part.nu_max) as f64;
                let u = GridField::random_band_limited(*dim, *resolution, -1.0, band, seed)?;
                let block = dyadic::lp_block(&part, &u, *nu)?;
                emit_data(out, io, &format!("lp-block-{nu}.csv"), |w| Ok(block.write_csv(w)?))?;
                Outcome::Done
            }
            LpCmd::Check { dim, resolution, fields } => {
                let rep = dyadic::verify_lp(seed, *dim, *resolution, *fields)?;
                Outcome::Report(rep.with_provenance(seed, &(dim, resolution, fields)), "lp-check")
            }
            LpCmd::Probe => {
                let cfg = CommutatorProbeConfig::standard();
                let rep = dyadic::probe_commutator_bound(&cfg)?;
                Outcome::Report(rep.with_provenance(seed, &cfg.resolutions), "lp-probe")
            }
        },
        Command::Mollify(MollifyCmd::Check {
            mu,
            family,
            eps_min,
            eps_max,
            segments,
        }) => {
            if !(*eps_min > 0.0 && eps_min <= eps_max && *eps_max <= 0.5) {
                bail!("need 0 < eps-min <= eps-max <= 1/2");
            }
            let (hi, lo) = ((-eps_min.log2()).floor() as i32, (-eps_max.log2()).ceil() as i32);
            let eps = osgood_lab::mollify::dyadic_eps(lo, hi);
            if eps.is_empty() {
                bail!("no dyadic ε in [{eps_min}, {eps_max}]");
            }
            let fam = match family {
                FamilyArg::Sawtooth => MollifyFamily::Sawtooth,
                FamilyArg::PlissL => MollifyFamily::PlissL { segments: *segments },
                FamilyArg::Constant => MollifyFamily::Constant(1.0),
                FamilyArg::Linear => MollifyFamily::Linear,
            };
            let rep = verify_mollifier_bounds(&fam, &modulus(mu)?, &MollifierKernel::standard(), &eps)?;
            Outcome::Report(rep, "mollify-check")
        }
        Command::Pliss(cmd) => match cmd {
            PlissCmd::Build(b) => {
                let pc = construction(b)?;
                let s = &pc.seqs;
                let n = s.last_index();
                print_json(io, &serde_json::json!({
                    "modulus": s.mu.name(),
                    "k0": s.k0,
                    "segments": s.segments,
                    "orientation": pc.orientation,
                    "horizon": pc.horizon(),
                    "window": pc.window(),
                    "a": &s.a[1..=n], "r": &s.r[1..=n], "z": &s.z[1..=n],
                    "q": &s.q[1..=n], "p": &s.p[1..=n],
                }))?;
                Outcome::Done
            }
            PlissCmd::Eval { build, t, x1, x2 } => {
                let pc = construction(build)?;
                print_json(io, &pc.eval_solution(*t, *x1, *x2)?)?;
                Outcome::Done
            }
            PlissCmd::Verify { build, pairs, points } => {
                let pc = construction(build)?;
                let cfg = PdeCheckConfig {
                    residual_points: *points,
                    l_samples: *points,
                    seed,
                    ..PdeCheckConfig::default()
                };
                let mut parts = vec![verify_conditions(&pc), verify_pde(&pc, &cfg)];
                parts.push(verify_cmu_regularity(&pc, *pairs, seed));
                let rep = merge(parts)?;
                let config = (&build.mu, &build.k0, build.segments, build.reflected, pairs, cfg);
                Outcome::Report(rep.with_provenance(seed, &config), "pliss-verify")
            }
            PlissCmd::Export { build, grid, format } => {
                let pc = construction(build)?;
                let spec: GridSpec = grid.parse()?;
                let (fmt, ext) = match format {
                    FormatArg::Csv => (ExportFormat::Csv, "csv"),
                    FormatArg::Json => (ExportFormat::Json, "json"),
                };
                // reject grids beyond the horizon before touching any file
                for t in spec.t.points() {
                    pc.eval_l(t)?;
                }
                emit_data(out, io, &format!("pliss-grid.{ext}"), |w| {
                    export_construction(&pc, &spec, fmt, w)?;
                    Ok(())
                })?;
                Outcome::Done
            }
        },
        Command::All => {
            let rep = suite::run_all(seed)?;
            Outcome::Report(rep, "all")
        }
    })
}

#[cfg(test)]
mod tests;
