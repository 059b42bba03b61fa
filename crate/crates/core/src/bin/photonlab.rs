use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::builder::PossibleValuesParser;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use photonlab::correlator::{
    analytic_g2, build_histogram, normalize_g2, pulse_integrated_g2, G2Model, HistogramMode, HistogramSettings,
    DEFAULT_BIN_WIDTH_PS, DEFAULT_RANGE_PS,
};
use photonlab::detection::{FringeTrace, TraceSample};
use photonlab::experiment::{
    extract_visibility_with, run_combined_detailed, sweep_visibility, ExperimentConfig, VisibilityOptions,
};
use photonlab::export::{self, sha256_hex, to_json_pretty, write_files};
use photonlab::io::read_timestamp_file;
use photonlab::optics::{LineShape, SpectralLine};
use photonlab::stream::{secs_to_ps, Tag};
use photonlab::{presets, Error, EventStream};

const OUTPUT_HELP: &str = "\
Output files (every file carries the configuration hash):
  config.json      {config_hash, seed, config}: the configuration that ran
  summary.json     g2_zero, verdict, visibility and click counts
  histogram.csv    '# config_hash: <hex>' then columns tau_ps,counts
  g2.csv           '# config_hash: <hex>' then columns tau_ps,g2,stderr
  fringe.csv       '# config_hash: <hex>' then columns window_start_s,counts
  *.svg            plots of the tables above, hash in an XML comment
  channel_[ab].csv with --timestamps: one click time (ps) per line

Exit codes: 0 success, 2 malformed input, 3 invalid values or failed analysis.";

#[derive(Parser)]
#[command(
    name = "photonlab",
    version,
    about = "Photon-statistics simulator: coincidence histograms and interference fringes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a combined experiment and write the result bundle.
    #[command(after_help = OUTPUT_HELP)]
    Simulate(SimulateArgs),
    /// Build a coincidence histogram and g² from two timestamp files.
    #[command(after_help = "\
Input: the binary PHTS format or CSV with one picosecond timestamp per line
('#' lines ignored). Timestamps must be nondecreasing.

Output files: histogram.csv (tau_ps,counts), g2.csv (tau_ps,g2,stderr),
matching SVG plots and summary.json. Each embeds a hash of the inputs and
settings.")]
    Correlate(CorrelateArgs),
    /// Fringe visibility: sweep the interferometer delay or fit a trace file.
    #[command(after_help = "\
Sweep output columns: delay_m,tau_s,visibility,stderr,expected
Trace output columns: visibility,stderr,neighborhoods
A trace file has columns window_start_s,counts as written by simulate.")]
    Visibility(VisibilityArgs),
    /// Print closed-form g²(τ) and/or visibility values as CSV.
    #[command(after_help = "\
Output columns: tau_s, then g2 when --model is given, then visibility when
--line is given. With --integrated the pulse-integrated g²(0) of a pulsed
model is printed instead (model,pulse_integrated_g2).")]
    Oracle(OracleArgs),
    /// Parse and validate a configuration without running it.
    ValidateConfig(ValidateArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct ConfigSource {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Bundled configuration.
    #[arg(long, value_parser = PossibleValuesParser::new(presets::names()))]
    preset: Option<String>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    source: ConfigSource,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Master seed; overrides the configuration.
    #[arg(long, env = "PHOTONLAB_SEED")]
    seed: Option<u64>,
    /// Also write the click times of both detectors.
    #[arg(long)]
    timestamps: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    StartStop,
    AllPairs,
}

impl From<ModeArg> for HistogramMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::StartStop => HistogramMode::StartStop,
            ModeArg::AllPairs => HistogramMode::AllPairs,
        }
    }
}

#[derive(Args)]
struct CorrelateArgs {
    /// Start channel timestamps.
    a: PathBuf,
    /// Stop channel timestamps.
    b: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_BIN_WIDTH_PS)]
    bin_width_ps: u64,
    #[arg(long, default_value_t = DEFAULT_RANGE_PS)]
    range_ps: u64,
    #[arg(long, value_enum, default_value = "start-stop")]
    mode: ModeArg,
    /// Measurement duration; defaults to the latest timestamp in either file.
    #[arg(long)]
    duration_ps: Option<u64>,
}

#[derive(Args)]
struct VisibilityArgs {
    #[command(flatten)]
    source: ConfigSource,
    /// Center path differences to sweep, meters.
    #[arg(
        long,
        value_delimiter = ',',
        allow_negative_numbers = true,
        conflicts_with = "trace",
        required_unless_present = "trace"
    )]
    delays_m: Vec<f64>,
    /// Fit a fringe trace file using the scan and line of the configuration.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, env = "PHOTONLAB_SEED")]
    seed: Option<u64>,
    /// Write the table to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Coherent,
    Thermal,
    TwoLevelCw,
    Pulsed,
    Fock,
}

#[derive(Clone, Copy, ValueEnum)]
enum ShapeArg {
    Lorentzian,
    Gaussian,
    Delta,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, value_enum, required_unless_present = "line")]
    model: Option<ModelArg>,
    /// Delays, seconds.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    tau: Vec<f64>,
    #[arg(long)]
    integrated: bool,
    #[arg(long, default_value_t = 1e-8)]
    coherence_time: f64,
    #[arg(long, default_value_t = 1e8)]
    pump_rate: f64,
    #[arg(long, default_value_t = 1e8)]
    decay_rate: f64,
    #[arg(long, default_value_t = 13.2e-9)]
    rep_period: f64,
    #[arg(long, default_value_t = 1e-9)]
    lifetime: f64,
    #[arg(long, default_value_t = 1.0)]
    emission_prob: f64,
    #[arg(long, default_value_t = 0.0)]
    reexcitation_prob: f64,
    #[arg(long, default_value_t = 3e-9)]
    reexcitation_delay: f64,
    /// Photons per pulse for the Fock model.
    #[arg(long, default_value_t = 1)]
    n: u32,
    /// Spectral line shape for visibility values.
    #[arg(long, value_enum)]
    line: Option<ShapeArg>,
    /// Line half-width, rad/s.
    #[arg(long, default_value_t = 1e11)]
    linewidth: f64,
    #[arg(long, default_value_t = 700.0)]
    wavelength_nm: f64,
}

#[derive(Args)]
struct ValidateArgs {
    /// Configuration file.
    #[arg(required_unless_present_any = ["preset", "schema"])]
    config: Option<PathBuf>,
    #[arg(long, value_parser = PossibleValuesParser::new(presets::names()), conflicts_with = "config")]
    preset: Option<String>,
    /// Print the configuration JSON Schema and exit.
    #[arg(long)]
    schema: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let outcome = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Correlate(a) => correlate(a),
        Command::Visibility(a) => visibility(a),
        Command::Oracle(a) => oracle(a),
        Command::ValidateConfig(a) => validate_config(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 3 })
        }
    }
}

fn load_config(path: Option<&Path>, preset: Option<&str>) -> photonlab::Result<ExperimentConfig> {
    match (path, preset) {
        (Some(p), _) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::from(e).context(p.display().to_string()))?;
            ExperimentConfig::from_json(&text).map_err(|e| e.context(p.display().to_string()))
        }
        (None, Some(name)) => presets::preset(name).expect("preset names are validated by the parser"),
        (None, None) => unreachable!("argument group requires one source"),
    }
}

fn simulate(args: SimulateArgs) -> photonlab::Result<()> {
    let mut cfg = load_config(args.source.config.as_deref(), args.source.preset.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let run = run_combined_detailed(&cfg)?;
    let mut files = export::render_bundle(&run.result)?;
    if args.timestamps {
        let hash = &run.result.provenance.config_hash;
        files.push(("channel_a.csv", timestamps_csv(&run.channel_a, hash)));
        files.push(("channel_b.csv", timestamps_csv(&run.channel_b, hash)));
    }
    write_files(&args.out, &files)?;
    let s = &run.result.summary;
    eprintln!(
        "g2(0) = {:.4} ± {:.4} ({:?}), visibility = {}; wrote {} files to {}",
        s.g2_zero,
        s.g2_zero_stderr,
        s.verdict,
        s.visibility.map_or("n/a".into(), |v| format!("{v:.4}")),
        files.len(),
        args.out.display()
    );
    Ok(())
}

fn timestamps_csv(stream: &EventStream, hash: &str) -> String {
    let mut s = format!("# config_hash: {hash}\n# duration_ps: {}\n", stream.duration_ps());
    for &t in stream.times() {
        let _ = writeln!(s, "{t}");
    }
    s
}

fn correlate(args: CorrelateArgs) -> photonlab::Result<()> {
    let fa = read_timestamp_file(&args.a)?;
    let fb = read_timestamp_file(&args.b)?;
    let last = fa.last_time().into_iter().chain(fb.last_time()).max().unwrap_or(0);
    let duration = args.duration_ps.unwrap_or(last);
    let a = EventStream::from_times(fa.times, Tag::Signal, duration)
        .map_err(|e| e.context(args.a.display().to_string()))?;
    let b = EventStream::from_times(fb.times, Tag::Signal, duration)
        .map_err(|e| e.context(args.b.display().to_string()))?;
    let settings = HistogramSettings::new(args.bin_width_ps, args.range_ps, args.mode.into());
    settings.validate()?;
    let digest = |p: &Path| -> photonlab::Result<String> { Ok(sha256_hex(&std::fs::read(p)?)) };
    let hash = sha256_hex(
        serde_json::to_string(&json!({
            "inputs": [digest(&args.a)?, digest(&args.b)?],
            "histogram": settings,
            "duration_ps": duration,
        }))?
        .as_bytes(),
    );
    let h = build_histogram(&a, &b, &settings)?;
    let mut files = vec![
        (export::HISTOGRAM_CSV, export::histogram_csv(&h, &hash)),
        (export::HISTOGRAM_SVG, export::histogram_svg(&h, &hash)),
    ];
    let summary = match normalize_g2(&h) {
        Ok(g2) => {
            let (g0, s0) = (g2.center().g2, g2.center().stderr);
            let mean = g2.mean();
            files.push((export::G2_CSV, export::g2_csv(&g2, &hash)));
            files.push((export::G2_SVG, export::g2_svg(&g2, &hash)));
            json!({"config_hash": hash, "clicks_a": a.len(), "clicks_b": b.len(), "duration_ps": duration,
                   "coincidences": h.total(), "g2_mean": mean, "g2_zero": g0, "g2_zero_stderr": s0, "warning": null})
        }
        Err(e) => {
            eprintln!("warning: {e}; only the histogram is written");
            json!({"config_hash": hash, "clicks_a": a.len(), "clicks_b": b.len(), "duration_ps": duration,
                   "coincidences": h.total(), "g2_mean": null, "g2_zero": null, "g2_zero_stderr": null,
                   "warning": e.to_string()})
        }
    };
    files.push((export::SUMMARY_JSON, to_json_pretty(&summary)?));
    write_files(&args.out, &files)?;
    Ok(())
}

fn emit(out: Option<&Path>, text: String) -> photonlab::Result<()> {
    match out {
        Some(p) => export::atomic_write(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn visibility(args: VisibilityArgs) -> photonlab::Result<()> {
    let mut cfg = load_config(args.source.config.as_deref(), args.source.preset.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let hash = cfg.hash();
    let mut text = format!("# config_hash: {hash}\n");
    if let Some(path) = &args.trace {
        let trace = read_trace(path)?;
        let opts = VisibilityOptions {
            bootstrap_resamples: cfg.analysis.bootstrap_resamples,
            seed: cfg.seed,
            ..VisibilityOptions::default()
        };
        let fit = extract_visibility_with(&trace, &cfg.scan, &cfg.line, &opts)?;
        text.push_str("visibility,stderr,neighborhoods\n");
        let _ = writeln!(text, "{},{},{}", fit.visibility, fit.stderr, fit.neighborhoods);
    } else {
        let points = sweep_visibility(&cfg, &args.delays_m)?;
        text.push_str("delay_m,tau_s,visibility,stderr,expected\n");
        for p in points {
            let _ = writeln!(
                text,
                "{},{},{},{},{}",
                p.delay_m, p.tau_s, p.visibility, p.stderr, p.expected
            );
        }
    }
    emit(args.out.as_deref(), text)
}

fn read_trace(path: &Path) -> photonlab::Result<FringeTrace> {
    let ctx = |e: Error| e.context(path.display().to_string());
    let text = std::fs::read_to_string(path).map_err(|e| ctx(e.into()))?;
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("window_start_s") {
            continue;
        }
        let bad = || {
            ctx(Error::Format(format!(
                "line {}: expected 'window_start_s,counts'",
                n + 1
            )))
        };
        let (t, c) = line.split_once(',').ok_or_else(bad)?;
        let t: f64 = t.trim().parse().map_err(|_| bad())?;
        let c: u64 = c.trim().parse().map_err(|_| bad())?;
        rows.push((secs_to_ps(t), c));
    }
    if rows.len() < 2 {
        return Err(ctx(Error::Format("a trace needs at least two windows".into())));
    }
    let window_ps = rows[1].0.saturating_sub(rows[0].0);
    if window_ps == 0 {
        return Err(ctx(Error::Format("window start times must increase".into())));
    }
    Ok(FringeTrace {
        window_ps,
        samples: rows
            .into_iter()
            .map(|(start_ps, counts)| TraceSample { start_ps, counts })
            .collect(),
    })
}

fn oracle(args: OracleArgs) -> photonlab::Result<()> {
    let model = args.model.map(|m| match m {
        ModelArg::Coherent => G2Model::Coherent,
        ModelArg::Thermal => G2Model::Thermal {
            coherence_time_s: args.coherence_time,
        },
        ModelArg::TwoLevelCw => G2Model::TwoLevelCw {
            pump_rate: args.pump_rate,
            decay_rate: args.decay_rate,
        },
        ModelArg::Pulsed => G2Model::Pulsed {
            rep_period_s: args.rep_period,
            lifetime_s: args.lifetime,
            emission_prob: args.emission_prob,
            reexcitation_prob: args.reexcitation_prob,
            reexcitation_delay_s: args.reexcitation_delay,
        },
        ModelArg::Fock => G2Model::Fock {
            n: args.n,
            rep_period_s: args.rep_period,
            lifetime_s: args.lifetime,
        },
    });
    if args.integrated {
        let m = model.ok_or_else(|| Error::config("--integrated needs --model"))?;
        print!("model,pulse_integrated_g2\n{},{}\n", m.name(), pulse_integrated_g2(&m)?);
        return Ok(());
    }
    if args.tau.is_empty() {
        return Err(Error::config("--tau needs at least one delay"));
    }
    let line = match args.line {
        None => None,
        Some(shape) => {
            let shape = match shape {
                ShapeArg::Lorentzian => LineShape::Lorentzian,
                ShapeArg::Gaussian => LineShape::Gaussian,
                ShapeArg::Delta => LineShape::Delta,
            };
            let l = SpectralLine {
                center_wavelength_nm: args.wavelength_nm,
                shape,
                linewidth: args.linewidth,
            };
            l.validate()?;
            Some(l)
        }
    };
    let mut text = String::from("tau_s");
    if model.is_some() {
        text.push_str(",g2");
    }
    if line.is_some() {
        text.push_str(",visibility");
    }
    text.push('\n');
    for &tau in &args.tau {
        let _ = write!(text, "{tau}");
        if let Some(m) = &model {
            let _ = write!(text, ",{}", analytic_g2(m, tau));
        }
        if let Some(l) = &line {
            let _ = write!(text, ",{}", l.visibility(tau.abs()));
        }
        text.push('\n');
    }
    print!("{text}");
    Ok(())
}

fn validate_config(args: ValidateArgs) -> photonlab::Result<()> {
    if args.schema {
        print!("{}", presets::SCHEMA);
        return Ok(());
    }
    let cfg = load_config(args.config.as_deref(), args.preset.as_deref())?;
    cfg.validate()?;
    println!("ok {}", cfg.hash());
    Ok(())
}
