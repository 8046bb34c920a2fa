use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use qis_core::hdr::{fuse, tone_map, tone_map_scene, ExposureStack, FusionConfig, Weighting};
use qis_core::io::{
    read_display, read_scene, read_sum, write_csv, write_display, write_flux, write_flux_map, write_sum, RunConfig,
    DEFAULT_C_MAX, DEFAULT_GAMMA,
};
use qis_core::metrics::{
    combined_snr_curve, default_theta_axis, geometric_bracket, log_axis, psnr, snr_curve, BracketExposure,
    SensorConfig,
};
use qis_core::scenes::{landscape, ramp};
use qis_core::sensor::{capture, ExposureConfig};
use std::error::Error;
use std::path::PathBuf;
use std::process::ExitCode;

type Res<T> = Result<T, Box<dyn Error>>;

/// Quanta image sensor simulation and HDR reconstruction.
#[derive(Parser, Debug)]
#[command(name = "qis", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exposure-referred SNR curves over a log-spaced photon-count axis, as CSV.
    SnrCurve(SnrCurveArgs),
    /// Capture a scene with one exposure setting and write the per-pixel sums.
    Simulate(SimulateArgs),
    /// Fuse one or more simulated exposures into a flux estimate and display image.
    Reconstruct(ReconstructArgs),
    /// Print the PSNR between two 8-bit PGM images.
    Compare(CompareArgs),
    /// Capture, fuse and tone-map as described by a run-config file.
    Run(RunArgs),
    /// Write one of the built-in test scenes.
    MakeScene(MakeSceneArgs),
}

#[derive(Args, Debug)]
struct SnrCurveArgs {
    /// Counter capacity L of a sensor row (repeatable, paired with --frames in order).
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    capacity: Vec<u32>,
    /// Frames T of a sensor row (repeatable).
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    frames: Vec<u32>,
    /// Jots per side K, applied to the nearest preceding --capacity (default 1).
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    oversample: Vec<u32>,
    /// Add a combined row per sensor for an exposure bracket:
    /// RATIOxCOUNT (e.g. 4x5) or a comma list of scales (e.g. 1,0.25,0.0625).
    #[arg(long, value_name = "BRACKET", value_parser = parse_bracket)]
    combine: Option<Bracket>,
    /// Add the three single-exposure rows of the CIS vs QIS comparison.
    #[arg(long)]
    compare_preset: bool,
    /// Capacity used for the 2-bit QIS row of --compare-preset.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    two_bit_capacity: u32,
    /// Lower end of the photon-count axis.
    #[arg(long, default_value_t = 1e-2, value_parser = positive_f64)]
    theta_min: f64,
    /// Upper end of the photon-count axis.
    #[arg(long, default_value_t = 1e6, value_parser = positive_f64)]
    theta_max: f64,
    /// Points on the axis.
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u32).range(2..))]
    points: u32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// PGM (P5) or QISF scene.
    #[arg(long)]
    scene: PathBuf,
    /// Flux of the brightest PGM pixel, photons per second.
    #[arg(long, default_value_t = DEFAULT_C_MAX, value_parser = positive_f64)]
    cmax: f64,
    /// Frame integration time, seconds.
    #[arg(long, value_parser = positive_f64)]
    tau: f64,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    capacity: u32,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    frames: u32,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    oversample: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output QISF file; the config is written next to it as <out>.cfg.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum WeightArg {
    Snr2,
    Snr,
}

#[derive(Args, Debug)]
struct FusionArgs {
    /// Gaussian smoothing of each exposure's sums before inversion (0 disables).
    #[arg(long, default_value_t = 0.0, value_parser = non_negative_f64)]
    denoise_sigma: f64,
    #[arg(long, value_enum, default_value_t = WeightArg::Snr2)]
    weight: WeightArg,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
    max_iters: u32,
    #[arg(long, default_value_t = 1e-4, value_parser = positive_f64)]
    rel_tol: f64,
    #[arg(long, default_value_t = 0.995, value_parser = positive_f64)]
    saturation_margin: f64,
}

impl FusionArgs {
    fn config(&self) -> FusionConfig {
        FusionConfig {
            max_iters: self.max_iters,
            rel_tol: self.rel_tol,
            denoise_sigma: self.denoise_sigma,
            saturation_margin: self.saturation_margin,
            weighting: match self.weight {
                WeightArg::Snr2 => Weighting::SnrSquared,
                WeightArg::Snr => Weighting::Snr,
            },
        }
    }
}

#[derive(Args, Debug)]
struct ReconstructArgs {
    /// Comma-separated QISF sum files written by `simulate`.
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    inputs: Vec<PathBuf>,
    #[command(flatten)]
    fusion: FusionArgs,
    /// Output flux estimate (QISF).
    #[arg(long)]
    out: PathBuf,
    /// Output tone-mapped display image (PGM).
    #[arg(long)]
    display: PathBuf,
    /// Flux mapped to display white.
    #[arg(long, default_value_t = DEFAULT_C_MAX, value_parser = positive_f64)]
    cmax: f64,
    #[arg(long, default_value_t = DEFAULT_GAMMA, value_parser = positive_f64)]
    gamma: f64,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[arg(long)]
    reference: PathBuf,
    #[arg(long)]
    test: PathBuf,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Run-config file (key = value lines).
    #[arg(long)]
    config: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SceneKind {
    /// 8-bit high-contrast landscape, written as PGM.
    Landscape,
    /// Horizontal flux ramp from 1e3 to --cmax, written as QISF.
    Ramp,
}

#[derive(Args, Debug)]
struct MakeSceneArgs {
    #[arg(long, value_enum)]
    kind: SceneKind,
    #[arg(long, default_value_t = 256, value_parser = clap::value_parser!(u32).range(2..))]
    size: u32,
    #[arg(long, default_value_t = DEFAULT_C_MAX, value_parser = positive_f64)]
    cmax: f64,
    #[arg(long)]
    out: PathBuf,
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(v) => Err(format!("expected a finite value > 0, got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

fn non_negative_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
        Ok(v) => Err(format!("expected a finite value >= 0, got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

/// Exposure scales relative to the base exposure.
#[derive(Clone, Debug, PartialEq)]
struct Bracket(Vec<f64>);

/// `RATIOxCOUNT` gives scales `ratio^0, ratio^-1, …`; otherwise a comma list.
fn parse_bracket(s: &str) -> Result<Bracket, String> {
    if let Some((ratio, count)) = s.split_once(['x', 'X']) {
        let ratio = positive_f64(ratio.trim())?;
        let count: usize = count
            .trim()
            .parse()
            .map_err(|_| format!("bad exposure count in '{s}'"))?;
        if count == 0 {
            return Err("bracket needs at least one exposure".into());
        }
        return Ok(Bracket(geometric_bracket(1, 1, 1, ratio, count).iter().map(|e| e.scale).collect()));
    }
    s.split(',').map(|v| positive_f64(v.trim())).collect::<Result<_, _>>().map(Bracket)
}

/// Rows of `snr-curve`, with each `--oversample` bound to the closest
/// `--capacity` before it on the command line.
fn sensor_rows(args: &SnrCurveArgs, matches: &ArgMatches) -> Res<Vec<SensorConfig>> {
    let mut rows = Vec::new();
    if args.compare_preset {
        rows.push(SensorConfig::new(4000, 1, 1, "CIS"));
        rows.push(SensorConfig::new(1, 1000, 2, "QIS 1-bit"));
        rows.push(SensorConfig::new(args.two_bit_capacity, 333, 2, "QIS 2-bit"));
    }
    if args.capacity.len() != args.frames.len() {
        return Err(usage(format!(
            "{} --capacity but {} --frames; they must come in pairs",
            args.capacity.len(),
            args.frames.len()
        )));
    }
    let cap_at: Vec<usize> = matches.indices_of("capacity").map(Iterator::collect).unwrap_or_default();
    let mut oversample = vec![None; args.capacity.len()];
    if let Some(k_at) = matches.indices_of("oversample") {
        for (k, at) in args.oversample.iter().zip(k_at) {
            let owner = cap_at
                .iter()
                .rposition(|&c| c < at)
                .ok_or_else(|| usage("--oversample must follow a --capacity".into()))?;
            if oversample[owner].replace(*k).is_some() {
                return Err(usage("more than one --oversample for one --capacity".into()));
            }
        }
    }
    for ((cap, frames), k) in args.capacity.iter().zip(&args.frames).zip(oversample) {
        let k = k.unwrap_or(1);
        rows.push(SensorConfig::new(*cap, *frames, k, format!("L{cap}_T{frames}_K{k}")));
    }
    if rows.is_empty() {
        return Err(usage("no sensor given: use --capacity/--frames or --compare-preset".into()));
    }
    Ok(rows)
}

#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl Error for UsageError {}

fn usage(msg: String) -> Box<dyn Error> {
    Box::new(UsageError(msg))
}

fn cmd_snr_curve(args: &SnrCurveArgs, matches: &ArgMatches) -> Res<()> {
    let rows = sensor_rows(args, matches)?;
    if args.theta_max <= args.theta_min {
        return Err(usage("--theta-max must exceed --theta-min".into()));
    }
    let axis = if (args.theta_min, args.theta_max, args.points) == (1e-2, 1e6, 200) {
        default_theta_axis()
    } else {
        log_axis(args.theta_min, args.theta_max, args.points as usize)?
    };
    let mut curve = snr_curve(&rows, &axis)?;
    if let Some(Bracket(scales)) = &args.combine {
        for row in &rows {
            let bracket: Vec<BracketExposure> = scales
                .iter()
                .map(|&scale| BracketExposure {
                    capacity: row.capacity,
                    frames: row.frames,
                    oversample: row.oversample,
                    scale,
                })
                .collect();
            curve.push_row(format!("{} combined", row.label), combined_snr_curve(&bracket, &axis)?)?;
        }
    }
    write_csv(&args.out, &curve)?;
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> Res<()> {
    let scene = read_scene(&args.scene, args.cmax)?;
    let cfg = ExposureConfig::new(args.tau, args.capacity, args.frames, args.oversample, args.seed)?;
    write_sum(&args.out, &capture(&scene, &cfg)?)?;
    Ok(())
}

fn cmd_reconstruct(args: &ReconstructArgs) -> Res<()> {
    let fusion = args.fusion.config();
    fusion.validate().map_err(|e| usage(e.to_string()))?;
    let sums = args.inputs.iter().map(read_sum).collect::<Result<Vec<_>, _>>()?;
    let estimate = fuse(&ExposureStack::from_sums(&sums)?, &fusion)?;
    write_flux(&args.out, &estimate)?;
    write_display(&args.display, &tone_map(&estimate, args.cmax, args.gamma)?)?;
    Ok(())
}

fn cmd_compare(args: &CompareArgs) -> Res<()> {
    let value = psnr(&read_display(&args.reference)?, &read_display(&args.test)?)?;
    if value.is_infinite() {
        println!("inf");
    } else {
        println!("{value:.2}");
    }
    Ok(())
}

fn cmd_run(args: &RunArgs) -> Res<()> {
    let rc = RunConfig::read(&args.config)?;
    let scene = read_scene(&rc.scene, rc.c_max)?;
    let sums = rc
        .exposures
        .iter()
        .map(|cfg| capture(&scene, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let estimate = fuse(&ExposureStack::from_sums(&sums)?, &rc.fusion)?;
    let display = tone_map(&estimate, rc.c_max, rc.gamma)?;
    let reference = tone_map_scene(&scene, rc.c_max, rc.gamma)?;
    write_flux(&rc.out_flux, &estimate)?;
    write_display(&rc.out_display, &display)?;
    if let Some(path) = &rc.out_reference {
        write_display(path, &reference)?;
    }
    let value = psnr(&reference, &display)?;
    if value.is_infinite() {
        println!("psnr inf");
    } else {
        println!("psnr {value:.2}");
    }
    Ok(())
}

fn cmd_make_scene(args: &MakeSceneArgs) -> Res<()> {
    let size = args.size as usize;
    match args.kind {
        SceneKind::Landscape => write_display(&args.out, &landscape(size))?,
        SceneKind::Ramp => write_flux_map(&args.out, &ramp(size, size, 1e3, args.cmax))?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let matches = match Cli::command().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let result = match &cli.command {
        Command::SnrCurve(a) => cmd_snr_curve(a, matches.subcommand_matches("snr-curve").expect("subcommand")),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Reconstruct(a) => cmd_reconstruct(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Run(a) => cmd_run(a),
        Command::MakeScene(a) => cmd_make_scene(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
