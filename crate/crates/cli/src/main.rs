use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use calibcodec::calibration::detect_boundary;
use calibcodec::codec::{CodedFrame, EncodeStats, EntropyParams, FrameCodec};
use calibcodec::drift::{self, DriftModel, Experiment, Rectify};
use calibcodec::latent_source::{generate, LatentFrame};
use calibcodec::pgc::{self, PgcConfig};
use calibcodec::{Dims, Epsilon, Profile, SigmaGrid, SkipConfig, SymbolAlphabet};

/// Exit code for a run that completed but whose outcome is a failure
/// (undecodable frame, failed gradient check).
const EXIT_FAILED_OUTCOME: u8 = 3;

#[derive(Parser)]
#[command(name = "calibcodec", version, about = "Drift-tolerant latent entropy coding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic latent frame (LTNT file).
    Gen(GenArgs),
    /// Encode a latent frame into a CPNC container.
    Encode(EncodeArgs),
    /// Decode a CPNC container with (optionally drifted) decoder parameters.
    Decode(DecodeArgs),
    /// Failure rates under simulated cross-platform drift (CSV).
    Drift(DriftArgs),
    /// Calibration set sizes and coordinate bit costs per epsilon (CSV).
    CalibStats(CalibStatsArgs),
    /// Gradient check of the index constraint and its effect on calibration.
    PgcCheck(PgcCheckArgs),
}

#[derive(Args)]
struct GridArgs {
    #[arg(long, default_value_t = SigmaGrid::DEFAULT_SIGMA_MIN)]
    sigma_min: f32,
    #[arg(long, default_value_t = SigmaGrid::DEFAULT_SIGMA_MAX)]
    sigma_max: f32,
    #[arg(long, default_value_t = SigmaGrid::DEFAULT_LEVELS)]
    levels: u8,
}

impl GridArgs {
    fn codec(&self) -> Result<FrameCodec> {
        let grid = SigmaGrid::new(self.sigma_min, self.sigma_max, self.levels)?;
        Ok(FrameCodec::new(grid, SymbolAlphabet::default())?)
    }
}

#[derive(Args)]
struct PgcArgs {
    /// Kernel standard deviation.
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    /// Mask threshold.
    #[arg(long, default_value_t = 0.3)]
    eta: f64,
    /// Loss weight.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 200)]
    steps: usize,
    #[arg(long, default_value_t = 0.05)]
    lr: f64,
}

impl PgcArgs {
    fn rectify(&self) -> Result<Rectify> {
        let pgc = PgcConfig {
            delta: self.delta,
            eta: self.eta,
            beta: self.beta,
        };
        pgc.validate()?;
        Ok(Rectify {
            pgc,
            steps: self.steps,
            lr: self.lr,
        })
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "192x48x80")]
    dims: Dims,
    /// `uniform` or `fixed=<sigma>`.
    #[arg(long, default_value = "uniform")]
    profile: Profile,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct EncodeArgs {
    /// LTNT input; alternatively generate one from --seed.
    #[arg(long, conflicts_with = "seed")]
    input: Option<PathBuf>,
    #[arg(long, required_unless_present = "input")]
    seed: Option<u64>,
    #[arg(long, default_value = "192x48x80")]
    dims: Dims,
    #[arg(long, default_value = "uniform")]
    profile: Profile,
    /// Calibration precision, in (0, 0.1].
    #[arg(long, default_value = "1e-4", value_parser = parse_epsilon)]
    epsilon: Epsilon,
    /// Disable calibration.
    #[arg(long)]
    no_cit: bool,
    /// Smallest level that is still coded.
    #[arg(long, default_value_t = 0, conflicts_with = "skip_threshold")]
    skip_level: u8,
    /// Skip levels whose reconstruction scale is below this value.
    #[arg(long)]
    skip_threshold: Option<f64>,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct DecodeArgs {
    #[arg(long = "in", alias = "input")]
    input: PathBuf,
    /// Decoder-side parameters (LTNT; only mu and sigma are used).
    #[arg(long, conflicts_with = "seed")]
    params: Option<PathBuf>,
    /// Regenerate decoder parameters from this seed; dims come from the frame.
    #[arg(long, required_unless_present = "params")]
    seed: Option<u64>,
    #[arg(long, default_value = "uniform")]
    profile: Profile,
    /// Uniform noise bound on the decoder's continuous index.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Uniform noise bound on the decoder's means.
    #[arg(long, default_value_t = 0.0)]
    mu_noise: f64,
    #[arg(long, default_value_t = 0)]
    noise_seed: u64,
    /// Noise of exactly +-bound at every element.
    #[arg(long)]
    adversarial: bool,
    /// Write the reconstruction as LTNT (decoder mu and sigma, decoded y).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct DriftArgs {
    #[arg(long, default_value_t = 96)]
    frames: usize,
    #[arg(long, default_value = "192x48x80")]
    dims: Dims,
    #[arg(long, default_value = "uniform")]
    profile: Profile,
    /// Seed of the first frame.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5e-5)]
    noise: f64,
    #[arg(long, default_value_t = 0.0)]
    mu_noise: f64,
    #[arg(long, default_value_t = 0)]
    noise_seed: u64,
    /// One CSV row per value; comma separated.
    #[arg(long, default_value = "1e-4", value_delimiter = ',', value_parser = parse_epsilon)]
    epsilon: Vec<Epsilon>,
    #[arg(long)]
    no_cit: bool,
    #[arg(long)]
    adversarial: bool,
    /// Rectify indices (both ends) before coding.
    #[arg(long)]
    rectify: bool,
    #[arg(long, default_value_t = 0)]
    skip_level: u8,
    #[command(flatten)]
    pgc: PgcArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct CalibStatsArgs {
    #[arg(long, default_value = "1e-4,1e-3,1e-2", value_delimiter = ',', value_parser = parse_epsilon)]
    epsilon: Vec<Epsilon>,
    #[arg(long, default_value_t = 8)]
    frames: usize,
    #[arg(long, default_value = "192x48x80")]
    dims: Dims,
    #[arg(long, default_value = "uniform")]
    profile: Profile,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Add rows for rectified index fields.
    #[arg(long)]
    rectify: bool,
    #[command(flatten)]
    pgc: PgcArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct PgcCheckArgs {
    #[arg(long, default_value_t = 10_000)]
    points: usize,
    /// Central-difference step.
    #[arg(long, default_value_t = 1e-6)]
    step: f64,
    /// Distance kept from kinks and mask edges.
    #[arg(long, default_value_t = 1e-2)]
    margin: f64,
    /// Pass threshold on the relative error.
    #[arg(long, default_value_t = 1e-5)]
    tolerance: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Field used for the before/after calibration comparison.
    #[arg(long, default_value = "16x48x80")]
    dims: Dims,
    #[arg(long, default_value = "1e-3", value_parser = parse_epsilon)]
    epsilon: Epsilon,
    #[command(flatten)]
    pgc: PgcArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    json: bool,
}

fn parse_epsilon(s: &str) -> std::result::Result<Epsilon, String> {
    let v: f32 = s.trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
    Epsilon::new(v).map_err(|e| e.to_string())
}

fn print_json(v: &serde_json::Value) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn gen(a: &GenArgs) -> Result<ExitCode> {
    let frame = generate(a.seed, a.dims, &a.profile)?;
    frame
        .save(&a.out)
        .with_context(|| format!("writing {}", a.out.display()))?;
    if a.json {
        print_json(&json!({
            "path": a.out,
            "dims": a.dims.to_string(),
            "elements": a.dims.len(),
            "checksum": format!("{:08x}", frame.checksum()),
        }))?;
    } else {
        println!(
            "wrote {} ({}, checksum {:08x})",
            a.out.display(),
            a.dims,
            frame.checksum()
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn stats_text(s: &EncodeStats) -> String {
    format!(
        "elements={} payload_bits={} calibration_count={} calibration_bits={} bit_width={} skip_ratio={:.4} escaped={} total_bits={} estimated_payload_bits={:.1}",
        s.elements,
        s.payload_bits,
        s.calibration_count,
        s.calibration_bits,
        s.calibration_bit_width,
        s.skip_ratio,
        s.escaped,
        s.total_bits,
        s.estimated_payload_bits
    )
}

fn encode(a: &EncodeArgs) -> Result<ExitCode> {
    let frame = match (&a.input, a.seed) {
        (Some(p), _) => LatentFrame::load(p).with_context(|| format!("reading {}", p.display()))?,
        (None, Some(seed)) => generate(seed, a.dims, &a.profile)?,
        (None, None) => bail!("need --input or --seed"),
    };
    let codec = a.grid.codec()?;
    let skip = match a.skip_threshold {
        Some(t) => SkipConfig::from_threshold(t, codec.grid())?,
        None => SkipConfig::from_level(a.skip_level, codec.grid())?,
    };
    let eps = (!a.no_cit).then_some(a.epsilon);
    let params = EntropyParams::from_frame(&frame, codec.grid())?;
    let (coded, stats) = codec.encode(&frame.y, &params, eps, skip)?;
    std::fs::write(&a.out, coded.to_bytes()).with_context(|| format!("writing {}", a.out.display()))?;
    eprintln!("{}", stats_text(&stats));
    if a.json {
        print_json(&serde_json::to_value(stats)?)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn load_coded(path: &Path) -> Result<CodedFrame> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    CodedFrame::from_bytes(&bytes).with_context(|| format!("parsing {}", path.display()))
}

fn decode(a: &DecodeArgs) -> Result<ExitCode> {
    let coded = load_coded(&a.input)?;
    let h = coded.header;
    let codec = FrameCodec::new(h.grid()?, SymbolAlphabet::default())?;
    let frame = match (&a.params, a.seed) {
        (Some(p), _) => LatentFrame::load(p).with_context(|| format!("reading {}", p.display()))?,
        (None, Some(seed)) => generate(seed, h.dims, &a.profile)?,
        (None, None) => bail!("need --params or --seed"),
    };
    let drift = DriftModel {
        index_noise_bound: a.noise,
        mu_noise_bound: a.mu_noise,
        seed: a.noise_seed,
        adversarial: a.adversarial,
    };
    drift.validate()?;
    let params = EntropyParams::from_frame(&frame, codec.grid())?;
    let params = drift.perturb(&params, 0, f64::from(codec.grid().max_level()));
    let out = codec.decode(&coded, &params)?;
    let ok = out.status.is_ok();
    if ok {
        if let Some(path) = &a.out {
            let recon = LatentFrame {
                dims: h.dims,
                mu: params.mu.iter().map(|&m| m as f32).collect(),
                sigma: frame.sigma.clone(),
                y: out.reconstruct(&params.mu),
            };
            recon
                .save(path)
                .with_context(|| format!("writing {}", path.display()))?;
        }
    }
    if a.json {
        print_json(&json!({
            "status": if ok { "ok" } else { "fail" },
            "detail": out.status,
            "elements": h.dims.len(),
            "calibration_count": coded.calibration.count,
        }))?;
    } else if ok {
        println!("status: ok");
    } else {
        println!(
            "status: fail ({})",
            serde_json::to_value(out.status)?.as_str().unwrap_or("?")
        );
    }
    Ok(if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAILED_OUTCOME)
    })
}

fn drift_cmd(a: &DriftArgs) -> Result<ExitCode> {
    let codec = a.grid.codec()?;
    let drift = DriftModel {
        index_noise_bound: a.noise,
        mu_noise_bound: a.mu_noise,
        seed: a.noise_seed,
        adversarial: a.adversarial,
    };
    let mut exp = Experiment {
        frames: a.frames,
        dims: a.dims,
        profile: a.profile,
        seed: a.seed,
        epsilon: None,
        drift,
        skip: SkipConfig::from_level(a.skip_level, codec.grid())?,
        rectify: if a.rectify { Some(a.pgc.rectify()?) } else { None },
    };
    let eps: Vec<Option<Epsilon>> = if a.no_cit {
        vec![None]
    } else {
        a.epsilon.iter().copied().map(Some).collect()
    };
    let mut reports = Vec::new();
    let mut out = std::io::stdout().lock();
    for (i, e) in eps.into_iter().enumerate() {
        exp.epsilon = e;
        let r = drift::run_experiment(&exp, &codec)?;
        if a.json {
            reports.push(json!({
                "noise_bound": a.noise,
                "epsilon": e.map(Epsilon::get),
                "adversarial": a.adversarial,
                "rectified": a.rectify,
                "report": r,
            }));
        } else {
            drift::write_report_csv(&mut out, &exp, &r, i == 0)?;
        }
    }
    drop(out);
    if a.json {
        print_json(&serde_json::Value::Array(reports))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn calib_stats(a: &CalibStatsArgs) -> Result<ExitCode> {
    let codec = a.grid.codec()?;
    let rectify = if a.rectify { Some(a.pgc.rectify()?) } else { None };
    let rows = drift::sweep_epsilon(&a.epsilon, a.frames, a.dims, &a.profile, a.seed, rectify, &codec)?;
    let reductions: Vec<(f32, f64)> = rows
        .chunks(2)
        .filter(|c| c.len() == 2 && c[1].rectified && c[0].mean_count > 0.0)
        .map(|c| (c[0].epsilon, 100.0 * (1.0 - c[1].mean_count / c[0].mean_count)))
        .collect();
    if a.json {
        print_json(&json!({
            "rows": rows,
            "reductions": reductions
                .iter()
                .map(|(e, r)| json!({"epsilon": e, "reduction_pct": r}))
                .collect::<Vec<_>>(),
        }))?;
    } else {
        drift::write_sweep_csv(std::io::stdout().lock(), &rows)?;
        for (e, r) in reductions {
            eprintln!("epsilon {e}: rectification reduces |C_b| by {r:.1}%");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn pgc_check(a: &PgcCheckArgs) -> Result<ExitCode> {
    let codec = a.grid.codec()?;
    let r = a.pgc.rectify()?;
    let max = f64::from(codec.grid().max_level());
    let check = pgc::gradient_check(&r.pgc, a.points, a.seed, a.step, a.margin, max)?;
    let pass = check.max_relative_error < a.tolerance;

    let frame = generate(a.seed, a.dims, &Profile::for_grid(codec.grid()))?;
    let raw = EntropyParams::from_frame(&frame, codec.grid())?.index;
    let rect = pgc::rectify(&raw, &r.pgc, r.steps, r.lr, max)?;
    let (loss_before, _) = pgc::pgc_loss(&raw, &r.pgc);
    let (loss_after, _) = pgc::pgc_loss(&rect, &r.pgc);
    let before = detect_boundary(&raw, a.dims, a.epsilon, codec.grid())?.len();
    let after = detect_boundary(&rect, a.dims, a.epsilon, codec.grid())?.len();
    let reduction = if before > 0 {
        100.0 * (1.0 - after as f64 / before as f64)
    } else {
        0.0
    };
    if a.json {
        print_json(&json!({
            "gradient_check": check,
            "pass": pass,
            "epsilon": a.epsilon.get(),
            "loss_before": r.pgc.beta * loss_before,
            "loss_after": r.pgc.beta * loss_after,
            "count_before": before,
            "count_after": after,
            "reduction_pct": reduction,
        }))?;
    } else {
        println!(
            "gradient check: {} ({} points, h={:e}, max relative error {:.3e} at I={:.6}, tolerance {:e})",
            if pass { "pass" } else { "FAIL" },
            check.points,
            check.step,
            check.max_relative_error,
            check.worst_at,
            a.tolerance
        );
        println!("epsilon,loss_before,loss_after,count_before,count_after,reduction_pct");
        println!(
            "{},{},{},{before},{after},{reduction:.2}",
            a.epsilon.get(),
            r.pgc.beta * loss_before,
            r.pgc.beta * loss_after
        );
    }
    Ok(if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAILED_OUTCOME)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Gen(a) => gen(a),
        Command::Encode(a) => encode(a),
        Command::Decode(a) => decode(a),
        Command::Drift(a) => drift_cmd(a),
        Command::CalibStats(a) => calib_stats(a),
        Command::PgcCheck(a) => pgc_check(a),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
