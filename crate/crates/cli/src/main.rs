//! `lgi-sim`: sweeps of the three-time correlator K3 over the qutrit
//! precession model (exact or Monte Carlo), compilation of evolution
//! unitaries into two-level laser pulses, and violation statistics.

mod angles;
mod manifest;
mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use lgi_core::{
    compile, compile_epsilon, embed4, exact_sweep, k3_exact, reconstruct, run_sweep,
    sigma_violation, write_pulse_file, ComplexMatrix, ExperimentConfig, NoiseModel,
    PrecessionModel, PulseSequence, SweepResult, UpdateRule, DEFAULT_SHOTS,
};

const SEED_ENV: &str = "LGI_SIM_SEED";

#[derive(Parser)]
#[command(
    name = "lgi-sim",
    version,
    about = "Leggett-Garg qutrit simulator and pulse compiler"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep K3 over inter-measurement angles and write CSV/JSON (+SVG).
    Sweep(SweepArgs),
    /// Compile an evolution unitary into a two-level pulse program.
    Compile(CompileArgs),
    /// Standard deviations by which a K3 value exceeds a bound.
    Violation(ViolationArgs),
}

#[derive(Args)]
struct SweepArgs {
    /// JSON config file; command-line flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// Update rule: luders | vonneumann
    #[arg(long)]
    rule: Option<String>,
    /// Number of sweep points (endpoints included)
    #[arg(long)]
    points: Option<usize>,
    /// Angle range start:end, each in radians or as 'Xpi' (default 0:2pi)
    #[arg(long)]
    range: Option<String>,
    /// Exact density-matrix sweep instead of shot sampling
    #[arg(long, conflicts_with_all = ["shots", "noise_init", "noise_op", "noise_flip"])]
    exact: bool,
    /// Shots per correlator pair (default 10000)
    #[arg(long)]
    shots: Option<u64>,
    /// Preparation fidelity (default 0.994)
    #[arg(long)]
    noise_init: Option<f64>,
    /// Per-evolution-block fidelity (default 0.98)
    #[arg(long)]
    noise_op: Option<f64>,
    /// Per-shelving-readout flip probability (default 0)
    #[arg(long)]
    noise_flip: Option<f64>,
    /// RNG seed (falls back to $LGI_SIM_SEED, then 0)
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default lgi-out)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also render sweep.svg
    #[arg(long)]
    svg: bool,
    /// Worker threads (default: number of processors)
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFileConfig {
    rule: Option<String>,
    points: Option<usize>,
    range: Option<String>,
    exact: Option<bool>,
    shots: Option<u64>,
    noise: Option<NoiseFileConfig>,
    seed: Option<u64>,
    svg: Option<bool>,
    jobs: Option<usize>,
    out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoiseFileConfig {
    init_fidelity: Option<f64>,
    op_fidelity: Option<f64>,
    readout_flip: Option<f64>,
}

#[derive(Args)]
struct CompileArgs {
    /// Precession angle of the target unitary, radians or 'Xpi'
    #[arg(long, conflicts_with = "matrix")]
    epsilon: Option<String>,
    /// File with a 3x3 unitary: 9 row-major entries as 18 floats (re im)
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Rabi frequency in Hz; Omega_R = 2 pi x this (default 8000)
    #[arg(long, default_value_t = 8000.0)]
    rabi: f64,
    /// Pulse file to write (default pulses.txt)
    #[arg(long, default_value = "pulses.txt")]
    out: PathBuf,
}

#[derive(Args)]
struct ViolationArgs {
    #[arg(long)]
    k3: f64,
    #[arg(long)]
    stderr: f64,
    /// Bound to compare against (default: the Lueders bound)
    #[arg(long, default_value_t = 1.5)]
    bound: f64,
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sweep(args) => cmd_sweep(args),
        Command::Compile(args) => cmd_compile(args),
        Command::Violation(args) => cmd_violation(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn parse_rule(text: &str) -> Result<UpdateRule> {
    match text.to_ascii_lowercase().as_str() {
        "luders" => Ok(UpdateRule::Luders),
        "vonneumann" => Ok(UpdateRule::VonNeumann),
        other => bail!("unknown rule '{other}' (expected luders or vonneumann)"),
    }
}

enum SweepMode {
    Exact,
    Shots(u64),
}

struct SweepSettings {
    rule: UpdateRule,
    points: usize,
    range: (f64, f64),
    mode: SweepMode,
    noise: NoiseModel,
    seed: u64,
    out: PathBuf,
    svg: bool,
    jobs: Option<usize>,
}

fn resolve_sweep(args: &SweepArgs) -> Result<SweepSettings> {
    let file: SweepFileConfig = match &args.config {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text)
                .with_context(|| format!("parsing config {}", path.display()))?
        }
        None => SweepFileConfig::default(),
    };

    let rule_text = args
        .rule
        .clone()
        .or(file.rule)
        .ok_or_else(|| anyhow!("--rule is required (luders or vonneumann)"))?;
    let rule = parse_rule(&rule_text)?;

    let points = args.points.or(file.points).unwrap_or(31);
    if points == 0 {
        bail!("--points must be at least 1");
    }
    let range_text = args
        .range
        .clone()
        .or(file.range)
        .unwrap_or_else(|| "0:2pi".to_string());
    let range = angles::parse_range(&range_text)?;

    let mode = if args.exact {
        SweepMode::Exact
    } else if let Some(n) = args.shots {
        SweepMode::Shots(n)
    } else if file.exact.unwrap_or(false) {
        SweepMode::Exact
    } else {
        SweepMode::Shots(file.shots.unwrap_or(DEFAULT_SHOTS))
    };

    let base = NoiseModel::default();
    let file_noise = file.noise.unwrap_or_default();
    let noise = NoiseModel::new(
        args.noise_init
            .or(file_noise.init_fidelity)
            .unwrap_or(base.init_fidelity),
        args.noise_op
            .or(file_noise.op_fidelity)
            .unwrap_or(base.op_fidelity),
        args.noise_flip
            .or(file_noise.readout_flip)
            .unwrap_or(base.readout_flip),
    )
    .map_err(|e| anyhow!("{e}"))?;

    let env_seed = match std::env::var(SEED_ENV) {
        Ok(v) => Some(
            v.parse::<u64>()
                .with_context(|| format!("parsing {SEED_ENV}='{v}'"))?,
        ),
        Err(_) => None,
    };
    let seed = args.seed.or(env_seed).or(file.seed).unwrap_or(0);

    Ok(SweepSettings {
        rule,
        points,
        range,
        mode,
        noise,
        seed,
        out: args
            .out
            .clone()
            .or(file.out)
            .unwrap_or_else(|| PathBuf::from("lgi-out")),
        svg: args.svg || file.svg.unwrap_or(false),
        jobs: args.jobs.or(file.jobs),
    })
}

fn in_pool<T: Send>(jobs: Option<usize>, work: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .context("building worker pool")?;
            Ok(pool.install(work))
        }
        None => Ok(work()),
    }
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let started = Instant::now();
    let settings = resolve_sweep(&args)?;
    let grid = angles::grid(settings.range, settings.points);

    let result: SweepResult = match settings.mode {
        SweepMode::Exact => {
            in_pool(settings.jobs, || exact_sweep(settings.rule, &grid))?
                .map_err(|e| anyhow!("{e}"))?
        }
        SweepMode::Shots(shots) => {
            let config = ExperimentConfig::new(
                settings.rule,
                grid.clone(),
                shots,
                settings.noise,
                settings.seed,
            )
            .map_err(|e| anyhow!("{e}"))?;
            in_pool(settings.jobs, || run_sweep(&config))?.map_err(|e| anyhow!("{e}"))?
        }
    };

    fs::create_dir_all(&settings.out)
        .with_context(|| format!("creating {}", settings.out.display()))?;
    let csv_path = settings.out.join("sweep.csv");
    let json_path = settings.out.join("sweep.json");
    fs::write(&csv_path, result.to_csv())?;
    fs::write(&json_path, result.to_json())?;
    let mut outputs = vec![
        csv_path.display().to_string(),
        json_path.display().to_string(),
    ];

    if settings.svg {
        let model = PrecessionModel::qutrit(1.0).map_err(|e| anyhow!("{e}"))?;
        let curve: Vec<(f64, f64)> = angles::grid(settings.range, 601)
            .into_iter()
            .map(|x| {
                k3_exact(&model, x, settings.rule)
                    .map(|r| (x, r.k3))
                    .map_err(|e| anyhow!("{e}"))
            })
            .collect::<Result<_>>()?;
        let svg_path = settings.out.join("sweep.svg");
        fs::write(&svg_path, svg::render_sweep(&result, &curve))?;
        outputs.push(svg_path.display().to_string());
    }

    let (best, best_x) = result
        .points
        .iter()
        .map(|p| (p.k3, p.tau_angle))
        .fold((f64::MIN, 0.0), |acc, v| if v.0 > acc.0 { v } else { acc });

    let mut man = manifest::RunManifest::new(
        "sweep",
        serde_json::json!({
            "rule": settings.rule.name(),
            "points": settings.points,
            "range_rad": [settings.range.0, settings.range.1],
            "mode": match settings.mode {
                SweepMode::Exact => serde_json::json!("exact"),
                SweepMode::Shots(n) => serde_json::json!({"shots": n}),
            },
            "noise": settings.noise,
            "seed": settings.seed,
            "svg": settings.svg,
            "jobs": settings.jobs,
            "out": settings.out.display().to_string(),
        }),
    );
    man.outputs = outputs;
    man.wall_seconds = started.elapsed().as_secs_f64();
    manifest::write_atomic(&settings.out.join("manifest.json"), &man)?;

    println!(
        "wrote {} sweep points to {} (max K3 = {:.4} at Omega*tau = {:.4} rad = {:.3} pi)",
        result.points.len(),
        settings.out.display(),
        best,
        best_x,
        best_x / std::f64::consts::PI
    );
    Ok(())
}

fn read_matrix_file(path: &Path) -> Result<ComplexMatrix> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut values = Vec::with_capacity(18);
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("");
        for token in line.split_whitespace() {
            values.push(
                token
                    .parse::<f64>()
                    .with_context(|| format!("bad number '{token}' in {}", path.display()))?,
            );
        }
    }
    if values.len() != 18 {
        bail!(
            "matrix file {} holds {} floats, expected 18 (9 row-major re/im pairs)",
            path.display(),
            values.len()
        );
    }
    ComplexMatrix::from_fn(3, |r, c| {
        let k = 2 * (3 * r + c);
        lgi_core::Complex64::new(values[k], values[k + 1])
    })
    .map_err(|e| anyhow!("{e}"))
}

fn cmd_compile(args: CompileArgs) -> Result<()> {
    let started = Instant::now();
    if !(args.rabi.is_finite() && args.rabi > 0.0) {
        bail!("--rabi must be a positive frequency in Hz");
    }
    let rabi_rad = 2.0 * std::f64::consts::PI * args.rabi;

    let (seq, source): (PulseSequence, serde_json::Value) = match (&args.epsilon, &args.matrix) {
        (Some(text), None) => {
            let eps = angles::parse_angle(text)?;
            let seq = compile_epsilon(eps, rabi_rad).map_err(|e| anyhow!("{e}"))?;
            (seq, serde_json::json!({ "epsilon_rad": eps }))
        }
        (None, Some(path)) => {
            let target = read_matrix_file(path)?;
            let seq = compile(&target, rabi_rad).map_err(|e| anyhow!("{e}"))?;
            (
                seq,
                serde_json::json!({ "matrix_file": path.display().to_string() }),
            )
        }
        _ => bail!("exactly one of --epsilon or --matrix is required"),
    };

    let residual = reconstruct(&seq)
        .max_abs_diff(&embed4(seq.target()).map_err(|e| anyhow!("{e}"))?)
        .map_err(|e| anyhow!("{e}"))?;
    fs::write(&args.out, write_pulse_file(&seq))
        .with_context(|| format!("writing {}", args.out.display()))?;

    let mut man = manifest::RunManifest::new(
        "compile",
        serde_json::json!({
            "source": source,
            "rabi_hz": args.rabi,
            "rabi_rad_per_s": rabi_rad,
            "out": args.out.display().to_string(),
        }),
    );
    man.outputs = vec![args.out.display().to_string()];
    man.wall_seconds = started.elapsed().as_secs_f64();
    let manifest_path = args.out.with_extension("manifest.json");
    manifest::write_atomic(&manifest_path, &man)?;

    println!(
        "compiled {} pulses to {} (reconstruction residual {:.3e}, total duration {:.6e} s)",
        seq.len(),
        args.out.display(),
        residual,
        seq.total_duration()
    );
    Ok(())
}

fn cmd_violation(args: ViolationArgs) -> Result<()> {
    let sigma = sigma_violation(args.k3, args.stderr, args.bound).map_err(|e| anyhow!("{e}"))?;
    println!("{sigma:.2}\u{3c3}");
    Ok(())
}
