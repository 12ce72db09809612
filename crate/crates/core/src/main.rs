//! `hprobe`: command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data failure
//! (including some mixtures failing to score), 3 environment failure (files,
//! external processes).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;

use inharmonic_probe::eval::{evaluate_manifest, separate_manifest, EvalOptions};
use inharmonic_probe::metrics::score_separation;
use inharmonic_probe::mixture::{build_dataset, mix, plan_dataset, DatasetConfig, LengthPolicy, Manifest};
use inharmonic_probe::render::{curve_png, render_stft, spectrogram_csv, spectrogram_png};
use inharmonic_probe::separate::{builtin, ExternalSeparator, Precomputed, SeparationInput, Separator};
use inharmonic_probe::signal::{read_wav, read_wav_canonical, write_wav, Seed, Waveform};
use inharmonic_probe::speech::{jitter_directory, jitter_speech_with, JitterSidecar, SpeechJitterConfig};
use inharmonic_probe::sweep::{run_sweep, SweepConfig};
use inharmonic_probe::tone::{build_scenario, ScenarioKind, ScenarioParams};
use inharmonic_probe::toy::{write_toy_corpus, ToyKind};
use inharmonic_probe::{Error, VERSION};

/// `println!` that tolerates a closed stdout (e.g. piped into `head`).
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_ENV: u8 = 3;

#[derive(Parser)]
#[command(
    name = "hprobe",
    version,
    about = "Probe how much a speech separator relies on harmonicity"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Print what would be done and write nothing.
    #[arg(long, global = true)]
    dry_run: bool,
    /// More logging (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a probe stimulus: sources, mixture, spectrogram image and CSV grid.
    Scenario(ScenarioArgs),
    /// Jitter the harmonics of a speech file, or of every .wav under a directory.
    Jitter(JitterArgs),
    /// Mix two files at given gains.
    Mix(MixArgs),
    /// Build a two-talker dataset with a manifest.
    BuildDataset(DatasetArgs),
    /// Run a separator on one mixture or on every mixture of a manifest.
    Separate(SeparateArgs),
    /// Score a separator, or precomputed estimates, on a manifest.
    Eval(EvalArgs),
    /// SDRi as a function of the jitter bound over matched datasets.
    Sweep(SweepArgs),
    /// Write a small synthetic corpus for smoke runs.
    ToyCorpus(ToyArgs),
}

#[derive(Args)]
struct SepArgs {
    /// Built-in separator: oracle-irm or harmonic-comb.
    #[arg(long)]
    separator: Option<String>,
    /// External separator command, e.g. "python sep.py {input_wav} {output_dir}".
    #[arg(long, conflicts_with = "separator")]
    command: Option<String>,
    /// Scratch directory for external separators.
    #[arg(long)]
    sep_work_dir: Option<PathBuf>,
}

impl SepArgs {
    fn build(&self, default: &str, scratch: &Path) -> Result<Box<dyn Separator>, Error> {
        match &self.command {
            Some(t) => Ok(Box::new(ExternalSeparator::new(
                t,
                self.sep_work_dir.clone().unwrap_or_else(|| scratch.to_path_buf()),
            )?)),
            None => builtin(self.separator.as_deref().unwrap_or(default)),
        }
    }

    fn is_set(&self) -> bool {
        self.separator.is_some() || self.command.is_some()
    }
}

#[derive(Args)]
struct ScenarioArgs {
    /// alternating, speech-plus-tone, overlap, missing-fundamental or synchronous.
    kind: Option<String>,
    /// TOML scenario recipe; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// F0 of the two sources, e.g. 110,210.
    #[arg(long)]
    f0: Option<String>,
    #[arg(long, alias = "J")]
    jitter: Option<f64>,
    /// harmonic (control) or inharmonic (probe).
    #[arg(long)]
    mode: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Speech file for speech-plus-tone.
    #[arg(long)]
    speech: Option<PathBuf>,
    #[command(flatten)]
    sep: SepArgs,
    #[arg(long, default_value = "scenario_out")]
    out: PathBuf,
}

#[derive(Args)]
struct JitterArgs {
    /// Jitter bound J in [0, 1).
    #[arg(long = "J", alias = "jitter")]
    bound: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// TOML with `[f0]` and `[harmonic]` analysis settings.
    #[arg(long)]
    config: Option<PathBuf>,
    input: PathBuf,
    output: PathBuf,
}

#[derive(Args)]
struct MixArgs {
    a: PathBuf,
    b: PathBuf,
    output: PathBuf,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    gain_a_db: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    gain_b_db: f64,
    /// pad or truncate.
    #[arg(long, default_value = "pad")]
    length: String,
    /// Also write the scaled references here as ref_a.wav / ref_b.wav.
    #[arg(long)]
    refs_dir: Option<PathBuf>,
}

#[derive(Args)]
struct DatasetArgs {
    /// TOML dataset config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, env = "HPROBE_CORPUS")]
    corpus: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "J", alias = "jitter")]
    jitter: Option<f64>,
    /// HH, HI or II.
    #[arg(long)]
    condition: Option<String>,
    #[arg(long)]
    num_mixtures: Option<usize>,
    #[arg(long)]
    pairing_seed: Option<u64>,
    #[arg(long)]
    jitter_seed: Option<u64>,
    /// Sets both seeds unless they are given separately.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    speaker_pattern: Option<String>,
}

#[derive(Args)]
struct SeparateArgs {
    /// A mixture .wav, or a manifest with --manifest.
    input: PathBuf,
    out_dir: PathBuf,
    #[arg(long)]
    manifest: bool,
    /// References for oracle separators on a single mixture.
    #[arg(long, num_args = 2, value_names = ["REF_A", "REF_B"])]
    refs: Option<Vec<PathBuf>>,
    #[command(flatten)]
    sep: SepArgs,
}

#[derive(Args)]
struct EvalArgs {
    manifest: PathBuf,
    /// Directory of `<id>_src1.wav` / `<id>_src2.wav` estimates (or of the mixtures).
    estimates: Option<PathBuf>,
    #[command(flatten)]
    sep: SepArgs,
    /// Report path (default: next to the manifest).
    #[arg(long)]
    report: Option<PathBuf>,
    /// Keep the estimates the separator produced.
    #[arg(long)]
    save_estimates: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// TOML sweep config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, env = "HPROBE_CORPUS")]
    corpus: Option<PathBuf>,
    #[arg(long)]
    work_dir: Option<PathBuf>,
    /// Comma-separated jitter bounds.
    #[arg(long = "J", alias = "jitters")]
    jitters: Option<String>,
    /// Comma-separated conditions.
    #[arg(long)]
    conditions: Option<String>,
    #[arg(long)]
    num_mixtures: Option<usize>,
    #[arg(long)]
    pairing_seed: Option<u64>,
    #[arg(long)]
    jitter_seed: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    speaker_pattern: Option<String>,
    #[command(flatten)]
    sep: SepArgs,
    /// Report path (default: <work_dir>/sweep.json).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Line plot of SDRi against J, one file per condition (`<stem>_<cond>.png`).
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args)]
struct ToyArgs {
    out: PathBuf,
    /// speech or tones.
    #[arg(long, default_value = "speech")]
    kind: String,
    #[arg(long, default_value_t = 10)]
    speakers: usize,
    #[arg(long, default_value_t = 5)]
    per_speaker: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Outcome of a command that ran to completion.
enum Done {
    Ok,
    /// Some records failed; the run still produced its outputs.
    Partial,
}

type CmdResult = Result<Done, Error>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .init();
    let ctx = Ctx {
        jobs: cli.jobs,
        dry_run: cli.dry_run,
    };
    let result = match cli.command {
        Command::Scenario(a) => cmd_scenario(&ctx, a),
        Command::Jitter(a) => cmd_jitter(&ctx, a),
        Command::Mix(a) => cmd_mix(&ctx, a),
        Command::BuildDataset(a) => cmd_build_dataset(&ctx, a),
        Command::Separate(a) => cmd_separate(&ctx, a),
        Command::Eval(a) => cmd_eval(&ctx, a),
        Command::Sweep(a) => cmd_sweep(&ctx, a),
        Command::ToyCorpus(a) => cmd_toy(&ctx, a),
    };
    match result {
        Ok(Done::Ok) => ExitCode::SUCCESS,
        Ok(Done::Partial) => ExitCode::from(EXIT_DATA),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidParameter(_) => EXIT_USAGE,
        e if e.is_environmental() => EXIT_ENV,
        _ => EXIT_DATA,
    }
}

struct Ctx {
    jobs: Option<usize>,
    dry_run: bool,
}

impl Ctx {
    /// Applies `--jobs` to the global pool for commands that parallelize internally.
    fn init_pool(&self) {
        if let Some(n) = self.jobs {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
    }
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

/// Reads an optional TOML file into a table, applies flag overrides, and
/// deserializes the result.
fn load_config<T: DeserializeOwned>(
    path: Option<&Path>,
    overrides: Vec<(&str, Option<toml::Value>)>,
) -> Result<T, Error> {
    let mut table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| io_err(p, e))?;
            text.parse::<toml::Table>()
                .map_err(|e| usage(format!("{}: {e}", p.display())))?
        }
        None => toml::Table::new(),
    };
    for (k, v) in overrides {
        if let Some(v) = v {
            table.insert(k.to_string(), v);
        }
    }
    toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| usage(e.to_string()))
}

fn tv_path(p: &Option<PathBuf>) -> Option<toml::Value> {
    p.as_ref()
        .map(|p| toml::Value::String(p.to_string_lossy().into_owned()))
}

fn tv_str(s: &Option<String>) -> Option<toml::Value> {
    s.clone().map(toml::Value::String)
}

fn tv_float(x: Option<f64>) -> Option<toml::Value> {
    x.map(toml::Value::Float)
}

fn tv_int<T: TryInto<i64>>(x: Option<T>) -> Option<toml::Value> {
    x.and_then(|v| v.try_into().ok()).map(toml::Value::Integer)
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, Error> {
    s.split(',')
        .map(|p| p.trim().parse::<T>().map_err(|_| usage(format!("bad {what} '{p}'"))))
        .collect()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

fn render_pair(wav: &Waveform, dir: &Path, stem: &str) -> Result<(), Error> {
    let spec = render_stft(wav)?;
    spectrogram_png(&spec, &dir.join(format!("{stem}.png")))?;
    spectrogram_csv(&spec, &dir.join(format!("{stem}.csv")))
}

fn cmd_scenario(ctx: &Ctx, a: ScenarioArgs) -> CmdResult {
    if a.kind.is_none() && a.config.is_none() {
        return Err(usage("give a scenario kind or --config"));
    }
    let kind = a.kind.as_deref().map(str::parse::<ScenarioKind>).transpose()?;
    let f0 = match &a.f0 {
        Some(s) => {
            let v: Vec<f64> = parse_list(s, "f0")?;
            if v.len() != 2 {
                return Err(usage("--f0 takes two values, e.g. 110,210"));
            }
            Some(toml::Value::Array(v.into_iter().map(toml::Value::Float).collect()))
        }
        None => None,
    };
    let mode = a
        .mode
        .as_deref()
        .map(str::parse::<inharmonic_probe::tone::Mode>)
        .transpose()?;
    let params: ScenarioParams = load_config(
        a.config.as_deref(),
        vec![
            ("kind", kind.map(|k| toml::Value::String(k.name().into()))),
            ("f0", f0),
            ("jitter", tv_float(a.jitter)),
            ("mode", mode.map(|m| toml::Value::try_from(m).expect("mode serializes"))),
        ],
    )?;
    let seed = Seed(a.seed);
    let speech = a.speech.as_deref().map(read_wav).transpose()?;
    let sep = if a.sep.is_set() {
        Some(a.sep.build("harmonic-comb", &a.out.join("external"))?)
    } else {
        None
    };
    if ctx.dry_run {
        say!("scenario {} seed {} -> {}", params.kind.name(), seed.0, a.out.display());
        say!("{}", params.to_toml());
        if let Some(s) = &sep {
            say!("separator: {}", s.name());
        }
        return Ok(Done::Ok);
    }
    let s = build_scenario(&params, seed, speech.as_ref())?;
    std::fs::create_dir_all(&a.out).map_err(|e| io_err(&a.out, e))?;
    write_wav(a.out.join("mixture.wav"), &s.mixture)?;
    write_wav(a.out.join("source_a.wav"), &s.source_a)?;
    write_wav(a.out.join("source_b.wav"), &s.source_b)?;
    render_pair(&s.mixture, &a.out, "mixture")?;
    let mut separation = serde_json::Value::Null;
    if let Some(sep) = &sep {
        let input = SeparationInput {
            id: "mixture",
            mixture: &s.mixture,
            mixture_path: None,
            references: Some((&s.source_a, &s.source_b)),
        };
        let est = sep.separate(&input)?;
        for (k, e) in est.iter().enumerate() {
            let stem = format!("estimate_{}", k + 1);
            write_wav(a.out.join(format!("{stem}.wav")), e)?;
            render_pair(e, &a.out, &stem)?;
        }
        let score = score_separation(&est, &[s.source_a.clone(), s.source_b.clone()], &s.mixture)?;
        say!(
            "{}: SDRi {:.2} dB (per source {:.2}, {:.2})",
            sep.name(),
            score.mean_sdri,
            score.sdri[0],
            score.sdri[1]
        );
        separation = json!({ "separator": sep.name(), "score": score });
    }
    write_json(
        &a.out.join("scenario.json"),
        &json!({
            "toolkit_version": VERSION,
            "seed": seed,
            "params": params,
            "info": s.info,
            "separation": separation,
        }),
    )?;
    say!("wrote {}", a.out.display());
    Ok(Done::Ok)
}

fn cmd_jitter(ctx: &Ctx, a: JitterArgs) -> CmdResult {
    let cfg: SpeechJitterConfig = load_config(a.config.as_deref(), vec![])?;
    let seed = Seed(a.seed);
    if !(0.0..1.0).contains(&a.bound) {
        return Err(usage(format!("--J must lie in [0, 1), got {}", a.bound)));
    }
    if a.input.is_dir() {
        if ctx.dry_run {
            let files = inharmonic_probe::speech::list_wavs(&a.input)?;
            say!(
                "jitter {} files at J = {} seed {} -> {}",
                files.len(),
                a.bound,
                seed.0,
                a.output.display()
            );
            for f in files {
                say!("  {}", f.display());
            }
            return Ok(Done::Ok);
        }
        ctx.init_pool();
        let report = jitter_directory(&a.input, &a.output, a.bound, seed, &cfg)?;
        say!("jittered {} files", report.written.len());
        for f in &report.failed {
            eprintln!("failed: {}: {}", f.source, f.error);
        }
        write_json(&a.output.join("jitter_report.json"), &report)?;
        return Ok(if report.failed.is_empty() {
            Done::Ok
        } else {
            Done::Partial
        });
    }
    if ctx.dry_run {
        say!(
            "jitter {} at J = {} seed {} -> {}",
            a.input.display(),
            a.bound,
            seed.0,
            a.output.display()
        );
        return Ok(Done::Ok);
    }
    let wav = read_wav_canonical(&a.input)?;
    let j = jitter_speech_with(&wav, a.bound, seed, &cfg)?;
    write_wav(&a.output, &j.output)?;
    let sidecar = JitterSidecar {
        source: a.input.to_string_lossy().into_owned(),
        bound: a.bound,
        base_seed: seed,
        seed,
        offsets: j.profile.offsets.clone(),
        median_f0: j.median_f0,
        voiced_fraction: j.voiced_fraction,
        nyquist_dropped: j.nyquist_dropped,
        toolkit_version: VERSION.into(),
    };
    write_json(&a.output.with_extension("jitter.json"), &sidecar)?;
    say!(
        "wrote {} ({} harmonics, median F0 {})",
        a.output.display(),
        j.max_harmonics,
        j.median_f0.map_or("-".into(), |f| format!("{f:.1} Hz"))
    );
    Ok(Done::Ok)
}

fn cmd_mix(ctx: &Ctx, a: MixArgs) -> CmdResult {
    let policy: LengthPolicy = toml::Value::String(a.length.clone())
        .try_into()
        .map_err(|_| usage(format!("--length must be pad or truncate, got '{}'", a.length)))?;
    if ctx.dry_run {
        say!(
            "mix {} ({:+} dB) + {} ({:+} dB) -> {}",
            a.a.display(),
            a.gain_a_db,
            a.b.display(),
            a.gain_b_db,
            a.output.display()
        );
        return Ok(Done::Ok);
    }
    let wa = read_wav_canonical(&a.a)?;
    let wb = read_wav_canonical(&a.b)?;
    let m = mix(&wa, &wb, a.gain_a_db, a.gain_b_db, policy)?;
    write_wav(&a.output, &m.mixture)?;
    if let Some(dir) = &a.refs_dir {
        write_wav(dir.join("ref_a.wav"), &m.ref_a)?;
        write_wav(dir.join("ref_b.wav"), &m.ref_b)?;
    }
    write_json(
        &a.output.with_extension("mix.json"),
        &json!({
            "toolkit_version": VERSION,
            "source_a": a.a,
            "source_b": a.b,
            "gain_a_db": a.gain_a_db,
            "gain_b_db": a.gain_b_db,
            "length": policy,
            "scale": m.scale,
        }),
    )?;
    say!("wrote {} (scale {:.4})", a.output.display(), m.scale);
    Ok(Done::Ok)
}

fn dataset_config(a: &DatasetArgs) -> Result<DatasetConfig, Error> {
    load_config(
        a.config.as_deref(),
        vec![
            ("corpus", tv_path(&a.corpus)),
            ("out_dir", tv_path(&a.out)),
            ("jitter", tv_float(a.jitter)),
            (
                "condition",
                tv_str(&a.condition.as_ref().map(|c| c.to_ascii_uppercase().replace("IH", "HI"))),
            ),
            ("num_mixtures", tv_int(a.num_mixtures)),
            ("pairing_seed", tv_int(a.pairing_seed.or(a.seed))),
            ("jitter_seed", tv_int(a.jitter_seed.or(a.seed))),
            ("speaker_pattern", tv_str(&a.speaker_pattern)),
        ],
    )
}

fn cmd_build_dataset(ctx: &Ctx, a: DatasetArgs) -> CmdResult {
    let cfg = dataset_config(&a)?;
    if ctx.dry_run {
        let m = plan_dataset(&cfg)?;
        say!(
            "{} mixtures, condition {}, J = {}, corpus {} ({} files, {} speakers) -> {}",
            m.records.len(),
            m.header.condition,
            m.header.jitter,
            m.header.corpus.root,
            m.header.corpus.num_files,
            m.header.corpus.num_speakers,
            cfg.out_dir.display()
        );
        for r in &m.records {
            say!(
                "{} {} {:+.2} dB | {} {:+.2} dB | {}",
                r.id,
                r.source_a,
                r.gain_a_db,
                r.source_b,
                r.gain_b_db,
                r.condition
            );
        }
        return Ok(Done::Ok);
    }
    ctx.init_pool();
    let m = build_dataset(&cfg)?;
    say!("wrote {} mixtures to {}", m.records.len(), cfg.out_dir.display());
    Ok(Done::Ok)
}

fn cmd_separate(ctx: &Ctx, a: SeparateArgs) -> CmdResult {
    let sep = a.sep.build("harmonic-comb", &a.out_dir.join("external"))?;
    if a.manifest {
        let manifest = Manifest::load(&a.input)?;
        if ctx.dry_run {
            say!(
                "{} on {} mixtures -> {}",
                sep.name(),
                manifest.records.len(),
                a.out_dir.display()
            );
            return Ok(Done::Ok);
        }
        let outcomes = separate_manifest(&manifest, sep.as_ref(), &a.out_dir, ctx.jobs)?;
        let failed: Vec<_> = outcomes.iter().filter(|o| o.error.is_some()).collect();
        for f in &failed {
            eprintln!("failed: {}: {}", f.id, f.error.as_deref().unwrap_or_default());
        }
        say!(
            "separated {} of {} mixtures",
            outcomes.len() - failed.len(),
            outcomes.len()
        );
        return Ok(if failed.is_empty() { Done::Ok } else { Done::Partial });
    }
    if ctx.dry_run {
        say!("{} on {} -> {}", sep.name(), a.input.display(), a.out_dir.display());
        return Ok(Done::Ok);
    }
    let mixture = read_wav_canonical(&a.input)?;
    let refs = match &a.refs {
        Some(v) => Some((read_wav_canonical(&v[0])?, read_wav_canonical(&v[1])?)),
        None => None,
    };
    let stem = a
        .input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "mixture".into());
    let input = SeparationInput {
        id: &stem,
        mixture: &mixture,
        mixture_path: Some(&a.input),
        references: refs.as_ref().map(|(x, y)| (x, y)),
    };
    let est = sep.separate(&input)?;
    for (k, e) in est.iter().enumerate() {
        write_wav(a.out_dir.join(format!("{stem}_src{}.wav", k + 1)), e)?;
    }
    say!(
        "wrote {}_src1.wav and {}_src2.wav to {}",
        stem,
        stem,
        a.out_dir.display()
    );
    Ok(Done::Ok)
}

fn cmd_eval(ctx: &Ctx, a: EvalArgs) -> CmdResult {
    let manifest = Manifest::load(&a.manifest)?;
    let sep: Box<dyn Separator> = match &a.estimates {
        Some(dir) if a.sep.is_set() => {
            return Err(usage(format!(
                "give either an estimates directory ({}) or a separator, not both",
                dir.display()
            )))
        }
        Some(dir) => Box::new(Precomputed::new(dir)),
        None => a
            .sep
            .build("harmonic-comb", &std::env::temp_dir().join("hprobe-external"))?,
    };
    let report_path = a.report.clone().unwrap_or_else(|| {
        a.manifest
            .with_file_name(format!("eval_{}.jsonl", sanitize(&sep.name())))
    });
    if ctx.dry_run {
        say!(
            "evaluate {} on {} mixtures from {} -> {}",
            sep.name(),
            manifest.records.len(),
            a.manifest.display(),
            report_path.display()
        );
        return Ok(Done::Ok);
    }
    let report = evaluate_manifest(
        &manifest,
        &a.manifest,
        sep.as_ref(),
        &EvalOptions {
            jobs: ctx.jobs,
            estimates_dir: a.save_estimates.clone(),
        },
    )?;
    report.write(&report_path)?;
    say!("{}", report.table().trim_end());
    say!("report: {}", report_path.display());
    let scored = report.summary.total - report.summary.failed;
    if scored == 0 && report.records.iter().any(|r| r.environmental) {
        let first = report.records.iter().find_map(|r| r.error.as_deref()).unwrap_or("?");
        return Err(Error::External(format!(
            "no mixture could be scored; first failure: {first}"
        )));
    }
    Ok(if report.summary.failed == 0 {
        Done::Ok
    } else {
        Done::Partial
    })
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn cmd_sweep(ctx: &Ctx, a: SweepArgs) -> CmdResult {
    let jitters = a
        .jitters
        .as_deref()
        .map(|s| parse_list::<f64>(s, "jitter bound"))
        .transpose()?
        .map(|v| toml::Value::Array(v.into_iter().map(toml::Value::Float).collect()));
    let conditions = a
        .conditions
        .as_deref()
        .map(|s| parse_list::<inharmonic_probe::mixture::DatasetCondition>(s, "condition"))
        .transpose()?
        .map(|v| toml::Value::Array(v.into_iter().map(|c| toml::Value::String(c.to_string())).collect()));
    let cfg: SweepConfig = load_config(
        a.config.as_deref(),
        vec![
            ("corpus", tv_path(&a.corpus)),
            ("work_dir", tv_path(&a.work_dir)),
            ("jitters", jitters),
            ("conditions", conditions),
            ("num_mixtures", tv_int(a.num_mixtures)),
            ("pairing_seed", tv_int(a.pairing_seed.or(a.seed))),
            ("jitter_seed", tv_int(a.jitter_seed.or(a.seed))),
            ("speaker_pattern", tv_str(&a.speaker_pattern)),
        ],
    )?;
    let sep = a.sep.build("harmonic-comb", &cfg.work_dir.join("external"))?;
    let out = a.out.clone().unwrap_or_else(|| cfg.work_dir.join("sweep.json"));
    if ctx.dry_run {
        say!(
            "sweep {} over {} -> {}",
            sep.name(),
            cfg.corpus.display(),
            out.display()
        );
        for (j, c) in cfg.cells()? {
            say!("  J = {j:.3} {c}: {} mixtures", cfg.num_mixtures);
        }
        return Ok(Done::Ok);
    }
    ctx.init_pool();
    let report = run_sweep(&cfg, sep.as_ref(), ctx.jobs)?;
    report.write(&out)?;
    say!("{}", report.table().trim_end());
    say!("report: {}", out.display());
    if let Some(plot) = &a.plot {
        let stem = plot
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "sweep".into());
        let conditions: std::collections::BTreeSet<_> = report.points.iter().map(|p| p.condition.to_string()).collect();
        for c in conditions {
            let curve = report.curve(c.parse()?);
            if curve.is_empty() {
                continue;
            }
            let path = plot.with_file_name(format!("{stem}_{c}.png"));
            curve_png(&curve, &path)?;
            say!("plot: {}", path.display());
        }
    }
    Ok(if report.points.iter().all(|p| p.complete) {
        Done::Ok
    } else {
        Done::Partial
    })
}

fn cmd_toy(ctx: &Ctx, a: ToyArgs) -> CmdResult {
    let kind: ToyKind = a.kind.parse()?;
    if ctx.dry_run {
        say!(
            "{} {:?} utterances ({} speakers x {}) -> {}",
            a.speakers * a.per_speaker,
            kind,
            a.speakers,
            a.per_speaker,
            a.out.display()
        );
        return Ok(Done::Ok);
    }
    let files = write_toy_corpus(&a.out, kind, a.speakers, a.per_speaker, Seed(a.seed))?;
    say!("wrote {} files to {}", files.len(), a.out.display());
    Ok(Done::Ok)
}
