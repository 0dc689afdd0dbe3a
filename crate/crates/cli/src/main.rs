use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use polyembed::algebra::{qualitative_report, validate_report, QualitativeConfig, DEFAULT_SEED};
use polyembed::embedding::{embed, Embedding};
use polyembed::fixtures::{run_fixture, Fixture};
use polyembed::simulation::{euler_discretize, integrate_network, integrate_poly, verify_with, IntegratorConfig};
use polyembed::systems::spec::{
    network_to_value, parse_input_signal, parse_network, parse_poly_system, poly_system_to_value,
};
use polyembed::systems::{InputSignal, Network, Trajectory};
use polyembed::{Coeff, Rational};
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "polyembed", version, about = "Polynomial embeddings of ODE-RNNs and ODE-LSTMs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Args, Debug, Clone)]
struct Opts {
    /// Seed for every randomized procedure.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// RK4 step size.
    #[arg(long, global = true, default_value_t = 1e-3)]
    step: f64,
    /// Integration horizon.
    #[arg(long, global = true, default_value_t = 1.0)]
    horizon: f64,
    /// Lie bracket and Lie derivative depth (default: embedding dimension).
    #[arg(long, global = true)]
    depth: Option<usize>,
    /// Monomial degree of the sampled reachability test.
    #[arg(long, global = true, default_value_t = 2)]
    degree: usize,
    /// Number of reachability samples (default: twice the monomial count plus 20).
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Exact rational coefficients instead of doubles.
    #[arg(long, global = true)]
    exact: bool,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write the artifact here instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Json,
    Text,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compile a network spec into its polynomial embedding.
    Embed { spec: PathBuf },
    /// Embed and reduce a network spec.
    Reduce { spec: PathBuf },
    /// Integrate a network or polynomial-system spec.
    Simulate {
        spec: PathBuf,
        /// Input signal JSON (default: letter 0 throughout).
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Compare a network trajectory with the trajectory of its embedding.
    Verify {
        spec: PathBuf,
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Accessibility, observability and reachability report for a network.
    Check { spec: PathBuf },
    /// Explicit Euler trace of an ODE-LSTM.
    Discretize {
        spec: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
        /// Comma-separated letter indices, one per step.
        #[arg(long, value_delimiter = ',', default_value = "0")]
        letters: Vec<usize>,
    },
    /// Materialize a worked example and run its assertions.
    Example {
        /// 1, 2, 3, 4, remark or linear.
        name: String,
        /// Run only this check.
        #[arg(long)]
        check: Option<String>,
        /// Directory for the spec and expected artifacts.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
enum Failure {
    Input(anyhow::Error),
    Runtime(anyhow::Error),
    Assertion(String),
}

impl From<polyembed::Error> for Failure {
    fn from(e: polyembed::Error) -> Self {
        if e.is_input_error() {
            Failure::Input(e.into())
        } else {
            Failure::Runtime(e.into())
        }
    }
}

type Outcome<T> = Result<T, Failure>;

fn input_err(e: anyhow::Error) -> Failure {
    Failure::Input(e)
}

fn read(path: &Path) -> Outcome<String> {
    fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(input_err)
}

fn config_echo(command: &str, opts: &Opts, extra: Value) -> Value {
    let mut v = json!({
        "command": command,
        "seed": opts.seed,
        "step": opts.step,
        "horizon": opts.horizon,
        "depth": opts.depth,
        "degree": opts.degree,
        "samples": opts.samples,
        "exact": opts.exact,
    });
    if let (Value::Object(m), Value::Object(e)) = (&mut v, extra) {
        m.extend(e);
    }
    v
}

fn emit(opts: &Opts, body: &str) -> Outcome<()> {
    match &opts.output {
        Some(path) => fs::write(path, body)
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(Failure::Runtime),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

fn with_config_comment(config: &Value, body: &str) -> String {
    format!("# config: {config}\n{body}")
}

fn format_or(opts: &Opts, default: Format, allowed: &[Format]) -> Outcome<Format> {
    let f = opts.format.unwrap_or(default);
    if !allowed.contains(&f) {
        return Err(Failure::Input(anyhow!("this command does not support --format {f:?}")));
    }
    Ok(f)
}

fn integrator(opts: &Opts) -> Outcome<IntegratorConfig> {
    Ok(IntegratorConfig::new(opts.step, opts.horizon)?)
}

fn load_input(path: Option<&Path>) -> Outcome<InputSignal> {
    match path {
        Some(p) => Ok(parse_input_signal(&read(p)?)?),
        None => Ok(InputSignal::constant(0)),
    }
}

fn system_artifact<C: Coeff>(emb: &Embedding<C>, config: Value, opts: &Opts) -> Outcome<String> {
    let text = emb.system.to_text();
    Ok(match format_or(opts, Format::Json, &[Format::Json, Format::Text])? {
        Format::Text => with_config_comment(&config, &text),
        _ => {
            let mut v = poly_system_to_value(&emb.system);
            v["config"] = config;
            v["text"] = Value::String(text);
            pretty(&v)
        }
    })
}

fn trajectory_artifact(tr: &Trajectory, config: Value, opts: &Opts) -> Outcome<String> {
    Ok(match format_or(opts, Format::Csv, &[Format::Csv, Format::Json])? {
        Format::Json => pretty(&json!({
            "config": config,
            "times": tr.times,
            "states": tr.states,
            "outputs": tr.outputs,
        })),
        _ => with_config_comment(&config, &tr.to_csv()),
    })
}

fn is_poly_system(text: &str) -> bool {
    serde_json::from_str::<Value>(text)
        .ok()
        .and_then(|v| v.get("kind").and_then(Value::as_str).map(|k| k == "poly-system"))
        .unwrap_or(false)
}

fn run_typed<C: Coeff>(cmd: &Command, opts: &Opts) -> Outcome<()> {
    let spec_path = |p: &PathBuf| json!({ "spec": p.display().to_string() });
    match cmd {
        Command::Embed { spec } => {
            let net: Network<C> = parse_network(&read(spec)?)?;
            let emb = embed(&net);
            emit(opts, &system_artifact(&emb, config_echo("embed", opts, spec_path(spec)), opts)?)
        }
        Command::Reduce { spec } => {
            let net: Network<C> = parse_network(&read(spec)?)?;
            let full = embed(&net);
            let red = full.reduce();
            let mut extra = spec_path(spec);
            extra["embedding_dimension"] = json!(full.system.dim());
            emit(opts, &system_artifact(&red, config_echo("reduce", opts, extra), opts)?)
        }
        Command::Simulate { spec, input } => {
            let text = read(spec)?;
            let u = load_input(input.as_deref())?;
            let cfg = integrator(opts)?;
            let mut extra = spec_path(spec);
            extra["input"] = polyembed::systems::spec::input_signal_to_value(&u);
            let tr = if is_poly_system(&text) {
                let p = parse_poly_system::<C>(&text)?;
                u.validate_letters(p.num_letters())?;
                integrate_poly(&p, &u, &cfg)?
            } else {
                let net: Network<C> = parse_network(&text)?;
                u.validate_letters(net.num_letters())?;
                integrate_network(&net, &u, &cfg)?
            };
            emit(opts, &trajectory_artifact(&tr, config_echo("simulate", opts, extra), opts)?)
        }
        Command::Verify { spec, input } => {
            let net: Network<C> = parse_network(&read(spec)?)?;
            let u = load_input(input.as_deref())?;
            u.validate_letters(net.num_letters())?;
            let cfg = integrator(opts)?;
            let full = embed(&net);
            let full_rep = verify_with(&full, &u, &cfg)?;
            let red_rep = verify_with(&full.reduce(), &u, &cfg)?;
            let mut extra = spec_path(spec);
            extra["input"] = polyembed::systems::spec::input_signal_to_value(&u);
            let config = config_echo("verify", opts, extra);
            let body = match format_or(opts, Format::Json, &[Format::Json, Format::Text])? {
                Format::Text => with_config_comment(
                    &config,
                    &format!(
                        "full embedding ({} variables): max state gap {:e}, max output gap {:e}\n\
                         reduced embedding ({} variables): max state gap {:e}, max output gap {:e}\n",
                        full_rep.embedding_dim,
                        full_rep.max_state_gap,
                        full_rep.max_output_gap,
                        red_rep.embedding_dim,
                        red_rep.max_state_gap,
                        red_rep.max_output_gap
                    ),
                ),
                _ => pretty(&json!({ "config": config, "full": full_rep, "reduced": red_rep })),
            };
            emit(opts, &body)
        }
        Command::Check { spec } => {
            let net: Network<C> = parse_network(&read(spec)?)?;
            let cfg = QualitativeConfig {
                depth: opts.depth,
                degree: opts.degree,
                samples: opts.samples,
                horizon: opts.horizon,
                step: opts.step,
                seed: opts.seed,
            };
            let report = qualitative_report(&net, &cfg)?;
            let config = config_echo("check", opts, spec_path(spec));
            let body = match format_or(opts, Format::Json, &[Format::Json, Format::Text])? {
                Format::Text => with_config_comment(&config, &report.to_text()),
                _ => {
                    let mut v = report.to_json();
                    v["config"] = config;
                    pretty(&v)
                }
            };
            emit(opts, &body)?;
            validate_report(&report)
                .map_err(|v| Failure::Assertion(format!("inconsistent implications: {}", v.join(", "))))
        }
        Command::Discretize { spec, delta, letters } => {
            let lstm = match parse_network::<C>(&read(spec)?)? {
                Network::Lstm(l) => l,
                Network::Rnn(_) => return Err(Failure::Input(anyhow!("discretize needs an ode-lstm spec"))),
            };
            let stepper = euler_discretize(&lstm, *delta)?;
            if let Some(&bad) = letters.iter().find(|&&l| l >= lstm.num_letters()) {
                return Err(Failure::Input(anyhow!(
                    "letter {bad} out of range for an alphabet of {} letters",
                    lstm.num_letters()
                )));
            }
            let s0: Vec<f64> = lstm.x0().iter().chain(lstm.z0().iter()).map(|c| c.to_f64()).collect();
            let states = stepper.trace(&s0, letters)?;
            let outputs: Vec<Vec<f64>> = states.iter().map(|s| stepper.output(s)).collect();
            let mut extra = spec_path(spec);
            extra["delta"] = json!(delta);
            extra["letters"] = json!(letters);
            let config = config_echo("discretize", opts, extra);
            let body = match format_or(opts, Format::Json, &[Format::Json, Format::Csv])? {
                Format::Csv => {
                    let n = s0.len();
                    let p = outputs.first().map_or(0, Vec::len);
                    let mut csv = String::from("k");
                    (1..=n).for_each(|i| csv.push_str(&format!(",s{i}")));
                    (1..=p).for_each(|i| csv.push_str(&format!(",y{i}")));
                    csv.push('\n');
                    for (k, (s, y)) in states.iter().zip(&outputs).enumerate() {
                        csv.push_str(&k.to_string());
                        s.iter().chain(y).for_each(|v| csv.push_str(&format!(",{v}")));
                        csv.push('\n');
                    }
                    with_config_comment(&config, &csv)
                }
                _ => pretty(&json!({ "config": config, "states": states, "outputs": outputs })),
            };
            emit(opts, &body)
        }
        Command::Example { .. } => unreachable!("handled before dispatch"),
    }
}

fn run_example(name: &str, check: Option<&str>, out_dir: Option<&Path>, opts: &Opts) -> Outcome<()> {
    let fixture = Fixture::from_name(name)
        .ok_or_else(|| Failure::Input(anyhow!("unknown example {name:?}; expected 1, 2, 3, 4, remark or linear")))?;
    if let Some(c) = check {
        if !fixture.checks().contains(&c) {
            return Err(Failure::Input(anyhow!(
                "example {} has no check {c:?}; available: {}",
                fixture.name(),
                fixture.checks().join(", ")
            )));
        }
    }
    let config = config_echo(
        "example",
        opts,
        json!({ "example": fixture.name(), "check": check }),
    );
    if let Some(dir) = out_dir {
        write_example_files(fixture, dir, &config).map_err(Failure::Runtime)?;
    }
    let checks = run_fixture(fixture, check)?;
    let passed = checks.iter().all(|c| c.passed);
    let body = match format_or(opts, Format::Text, &[Format::Json, Format::Text])? {
        Format::Json => pretty(&json!({
            "config": config,
            "example": fixture.name(),
            "passed": passed,
            "checks": checks,
        })),
        _ => {
            let mut s = String::new();
            for c in &checks {
                let tag = if c.passed { "PASS" } else { "FAIL" };
                s.push_str(&format!("{tag} example {} {}: {}\n", fixture.name(), c.name, c.detail));
            }
            with_config_comment(&config, &s)
        }
    };
    emit(opts, &body)?;
    if passed {
        Ok(())
    } else {
        Err(Failure::Assertion(format!("example {} does not match its expected artifacts", fixture.name())))
    }
}

fn write_example_files(f: Fixture, dir: &Path, config: &Value) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let stem = f.file_stem();
    let net = f.network::<Rational>();
    let full = embed(&net);
    let red = full.reduce();
    let files = [
        (format!("{stem}.json"), f.spec_json().to_owned()),
        (format!("{stem}.expected.json"), f.expected_json().to_owned()),
        (format!("{stem}.input.json"), f.input_json().to_owned()),
        (format!("{stem}.normalized.json"), pretty(&network_to_value(&net))),
        (format!("{stem}.embedding.json"), {
            let mut v = poly_system_to_value(&full.system);
            v["config"] = config.clone();
            pretty(&v)
        }),
        (format!("{stem}.reduced.json"), {
            let mut v = poly_system_to_value(&red.system);
            v["config"] = config.clone();
            pretty(&v)
        }),
        (format!("{stem}.reduced.txt"), red.system.to_text()),
    ];
    for (name, body) in files {
        let path = dir.join(name);
        fs::write(&path, body).with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Outcome<()> {
    if let Command::Example { name, check, out_dir } = &cli.command {
        return run_example(name, check.as_deref(), out_dir.as_deref(), &cli.opts);
    }
    if cli.opts.exact {
        run_typed::<Rational>(&cli.command, &cli.opts)
    } else {
        run_typed::<f64>(&cli.command, &cli.opts)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Assertion(msg)) => {
            eprintln!("assertion failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Input(e)) => {
            eprintln!("invalid input: {e:#}");
            ExitCode::from(2)
        }
    }
}

