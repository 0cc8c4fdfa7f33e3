use clap::{Parser, Subcommand, ValueEnum};
use relu_moments::clumping::{self, Adversary};
use relu_moments::harness::{
    emit_report, end_to_end_instance, parse_report, run_experiment, run_learner, run_learner_on, ExperimentConfig, InstanceSpec,
    LearnerSpec, Profile, ReportFormat, SuiteId,
};
use relu_moments::moments::{estimate_moments, estimate_moments_raw};
use relu_moments::network::{gen_instance, sample_labeled, to_abs_form, AbsNetwork, InstanceKind, ReluNetwork};
use relu_moments::powersum::{powersum_witness, PowerSumInstance, POWERSUM_C};
use relu_moments::random::{derive_seed, rng, unit_vector};
use relu_moments::scales::{find_gapped_scale, project, scale_trace, ScaleParams};
use relu_moments::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "relu-moments", version, about = "Seeded experiments for moment-based ReLU network learning")]
struct Cli {
    /// TOML experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Replaces every seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_parser = parse_profile)]
    profile: Option<Profile>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a network from the configured generator.
    Generate {
        #[arg(long, value_parser = parse_kind)]
        kind: Option<InstanceKind>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        d: Option<usize>,
    },
    /// Estimate `T_ℓ` from fresh samples and dump it in the tensor text format.
    EstimateMoments {
        #[arg(long, default_value_t = 2)]
        order: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Raw Hermite correlation without the `1/(2c_ℓ)` normalisation.
        #[arg(long)]
        raw: bool,
    },
    /// Evaluate the power-sum bound on instances read one per line.
    PowersumCheck {
        input: PathBuf,
        #[arg(long, default_value_t = POWERSUM_C)]
        c: f64,
    },
    /// Play the clumping game on vectors read one per line.
    ClumpSim {
        input: PathBuf,
        /// Defaults to the strategy threshold for each vector's length.
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long, value_enum, default_value_t = Noise::None)]
        adversary: Noise,
        /// Perturbation size; defaults to `1/(100k)`.
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Dump the scale descent for the configured instance along a seeded direction.
    ScalesTrace {
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
    },
    /// Run the learner on the configured instance or a file written by `generate`.
    Learn {
        #[arg(long)]
        instance: Option<PathBuf>,
    },
    /// Run acceptance suites by name or number; all configured suites when none given.
    Suite {
        suites: Vec<String>,
        #[arg(long, value_parser = parse_format)]
        format: Option<ReportFormat>,
    },
    /// Re-emit a saved JSON report, checking its schema version.
    Report {
        input: PathBuf,
        #[arg(long, value_parser = parse_format)]
        format: Option<ReportFormat>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Noise {
    None,
    Subtract,
    DropLow,
    Random,
}

fn parse_profile(s: &str) -> Result<Profile> {
    s.parse()
}

fn parse_format(s: &str) -> Result<ReportFormat> {
    s.parse()
}

fn parse_kind(s: &str) -> Result<InstanceKind> {
    Ok(serde_json::from_value(serde_json::Value::String(s.to_string()))?)
}

/// What `generate` writes and `learn --instance` reads.
#[derive(Serialize, Deserialize)]
struct InstanceFile {
    spec: InstanceSpec,
    network: ReluNetwork,
    abs_form: AbsNetwork,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::from_toml_str(&std::fs::read_to_string(p)?)?,
        None => ExperimentConfig::new(0, Profile::Ci),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
        if let Some(i) = cfg.instance.as_mut() {
            i.seed = s;
        }
        if let Some(l) = cfg.learner.as_mut() {
            l.seed = s;
        }
    }
    if let Some(p) = cli.profile {
        cfg.profile = p;
    }
    Ok(cfg)
}

fn instance_of(cfg: &ExperimentConfig) -> InstanceSpec {
    cfg.instance.clone().unwrap_or_else(|| end_to_end_instance(0, cfg.seed, 0.0))
}

fn read_input(path: &Path) -> Result<String> {
    if path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        Ok(std::fs::read_to_string(path)?)
    }
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, bytes)?,
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

fn json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

/// Lines that are neither blank nor `#` comments, with 1-based numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_floats(line: usize, s: &str) -> Result<Vec<f64>> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| Error::Parse { line, msg: format!("bad number {t:?}") }))
        .collect()
}

/// `v=… q=… k_close=… alpha=… beta=… gamma=… tau=… r=…`, lists comma-separated.
fn parse_powersum(line: usize, s: &str) -> Result<PowerSumInstance> {
    let mut inst = PowerSumInstance { v: vec![], q: vec![], k_close: 0, alpha: 0.0, beta: 0.0, gamma: 0.0, tau: 0.0, r: 0.0 };
    let scalar = |v: &str| v.parse::<f64>().map_err(|_| Error::Parse { line, msg: format!("bad number {v:?}") });
    for tok in s.split_whitespace() {
        let (key, val) = tok.split_once('=').ok_or_else(|| Error::Parse { line, msg: format!("expected key=value, got {tok:?}") })?;
        match key {
            "v" => inst.v = parse_floats(line, val)?,
            "q" => inst.q = parse_floats(line, val)?,
            "k_close" => inst.k_close = val.parse().map_err(|_| Error::Parse { line, msg: format!("bad k_close {val:?}") })?,
            "alpha" => inst.alpha = scalar(val)?,
            "beta" => inst.beta = scalar(val)?,
            "gamma" => inst.gamma = scalar(val)?,
            "tau" => inst.tau = scalar(val)?,
            "r" => inst.r = scalar(val)?,
            _ => return Err(Error::Parse { line, msg: format!("unknown key {key:?}") }),
        }
    }
    inst.validate().map_err(|e| Error::Parse { line, msg: e.to_string() })?;
    Ok(inst)
}

#[derive(Serialize)]
struct ClumpRun {
    line: usize,
    input: Vec<f64>,
    moves: usize,
    move_bound: f64,
    violations: usize,
    transcript: clumping::Transcript,
}

#[derive(Serialize)]
struct ScalesDump {
    g: Vec<f64>,
    params: ScaleParams,
    projection: relu_moments::scales::Projection,
    trace: Vec<relu_moments::scales::TraceStep>,
    first_gap: Option<relu_moments::scales::GapRecord>,
}

fn run(cli: Cli) -> Result<bool> {
    let cfg = load_config(&cli)?;
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Generate { kind, k, d } => {
            let mut spec = instance_of(&cfg);
            spec.kind = kind.unwrap_or(spec.kind);
            spec.k = k.unwrap_or(spec.k);
            spec.d = d.unwrap_or(spec.d);
            let network = gen_instance(spec.kind, spec.k, spec.d, spec.budget, &spec.params(), spec.seed)?;
            let abs_form = to_abs_form(&network, spec.budget);
            write_output(out, &json(&InstanceFile { spec, network, abs_form })?)?;
        }
        Command::EstimateMoments { order, samples, raw } => {
            let spec = instance_of(&cfg);
            let net = spec.build()?;
            let set = sample_labeled(&net, *samples, spec.noise_variance, derive_seed(spec.seed, 3))?;
            let t = if *raw { estimate_moments_raw(&set, *order)? } else { estimate_moments(&set, *order)? };
            write_output(out, t.to_text().as_bytes())?;
        }
        Command::PowersumCheck { input, c } => {
            let text = read_input(input)?;
            let mut csv = String::from("line,ell,value,bound,holds\n");
            let mut all = true;
            for (line, s) in content_lines(&text) {
                let w = powersum_witness(&parse_powersum(line, s)?, *c)?;
                all &= w.holds();
                csv.push_str(&format!("{line},{},{:e},{:e},{}\n", w.ell, w.value, w.bound, w.holds()));
            }
            write_output(out, csv.as_bytes())?;
            return Ok(all);
        }
        Command::ClumpSim { input, tau, adversary, delta } => {
            let text = read_input(input)?;
            let mut runs = Vec::new();
            for (line, s) in content_lines(&text) {
                let w = parse_floats(line, s)?;
                let k = w.len().saturating_sub(1).max(1);
                let tau = tau.unwrap_or_else(|| clumping::default_tau(k));
                let delta = delta.unwrap_or(1.0 / (100.0 * k as f64));
                let mut adv = match adversary {
                    Noise::None => None,
                    Noise::Subtract => Some(Adversary::SubtractDelta),
                    Noise::DropLow => Some(Adversary::DropLow),
                    Noise::Random => Some(Adversary::random(derive_seed(cfg.seed, line as u64))),
                };
                let transcript = match adv.as_mut() {
                    None => clumping::play_noiseless(w.clone(), tau),
                    Some(a) => clumping::play_noisy(w.clone(), tau, a, delta),
                }
                .map_err(|e| Error::Parse { line, msg: e.to_string() })?;
                runs.push(ClumpRun {
                    line,
                    input: w,
                    moves: transcript.move_count(),
                    move_bound: clumping::move_bound(k),
                    violations: transcript.violations(),
                    transcript,
                });
            }
            write_output(out, &json(&runs)?)?;
            return Ok(runs.iter().all(|r| r.violations == 0));
        }
        Command::ScalesTrace { eps } => {
            let spec = instance_of(&cfg);
            let net = to_abs_form(&spec.build()?, spec.budget);
            let params = ScaleParams::desk(*eps, spec.d, spec.k, spec.budget)?;
            let g = unit_vector(&mut rng(derive_seed(cfg.seed, 4)), spec.d);
            let projection = project(&net, &g)?;
            let dump = ScalesDump {
                trace: scale_trace(&projection, &params)?,
                first_gap: find_gapped_scale(&projection, &params)?,
                g,
                params,
                projection,
            };
            write_output(out, &json(&dump)?)?;
        }
        Command::Learn { instance } => {
            let (spec, target) = match instance {
                Some(p) => {
                    let file: InstanceFile = serde_json::from_str(&read_input(p)?)?;
                    let target = ReluNetwork::new(file.network.dim(), file.network.neurons().to_vec())?;
                    (file.spec, Some(target))
                }
                None => (instance_of(&cfg), None),
            };
            let learner = cfg.learner.clone().unwrap_or_else(|| LearnerSpec::seeded(cfg.seed)).build(&spec)?;
            let summary = match target {
                Some(t) => run_learner_on(t, &spec, &learner)?,
                None => run_learner(&spec, &learner)?,
            };
            write_output(out, &json(&summary)?)?;
        }
        Command::Suite { suites, format } => {
            let mut cfg = cfg.clone();
            if !suites.is_empty() {
                cfg.suites = suites.iter().map(|s| SuiteId::parse(s).map(|id| id.name().to_string())).collect::<Result<_>>()?;
            }
            if cfg.suites.is_empty() && cli.config.is_none() {
                cfg.suites = SuiteId::ALL.iter().map(|id| id.name().to_string()).collect();
            }
            let report = run_experiment(&cfg)?;
            let format = format.or(cfg.output.format).unwrap_or(ReportFormat::Json);
            let bytes = emit_report(&report, format)?;
            match out.map(Path::to_path_buf).or_else(|| cfg.output.report.as_ref().map(PathBuf::from)) {
                Some(p) => std::fs::write(p, &bytes)?,
                None => std::io::stdout().write_all(&bytes)?,
            }
            return Ok(report.passed);
        }
        Command::Report { input, format } => {
            let report = parse_report(read_input(input)?.as_bytes())?;
            write_output(out, &emit_report(&report, format.unwrap_or(ReportFormat::Json))?)?;
            return Ok(report.passed);
        }
    }
    Ok(true)
}
