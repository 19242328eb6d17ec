//! Command-line front end.
//!
//! Every run prints (or writes with `--out`) a single document that carries
//! the tool name, version, the echoed configuration and the seed. Output is
//! produced only after the computation succeeds.
//!
//! Exit codes: 0 success, 2 input error, 3 degenerate post-selection,
//! 4 numerical failure.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::abl::{joint_local_abl, sequential_abl, EventSequence, PrePostEnsemble};
use crate::chsh::{d_alpha, maximize_chsh, pr_game, ChshConfig, PrMapping};
use crate::error::Error;
use crate::nosignal::{classify, ghz_demo, scan_no_signaling, unitary_attack_demo, CLASSIFY_TOL};
use crate::presets;
use crate::qstate::MeasurementDirection;
use crate::qstate::Unitary2;
use crate::swapping::{non_maximal_attack, swap_protocol, MeasurementBasis, SwapConfig};

pub const TOOL: &str = "prbox";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "prbox",
    version,
    about = "Pre- and post-selected spin ensembles: ABL statistics, signaling, CHSH"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Outcome distribution for local measurements or an event sequence.
    Abl(AblArgs),
    /// Random search for signaling.
    Scan(ScanArgs),
    /// Which no-signaling family the ensemble belongs to.
    Classify(InputArgs),
    /// Maximize the CHSH value over measurement directions.
    ChshMax(ChshArgs),
    /// Optimal family parameter d and CHSH value for swapped pairs of given weights.
    DAlpha(DAlphaArgs),
    /// Exact PR-game success per input pair.
    PrGame(PrGameArgs),
    /// Entanglement swapping of two ensembles.
    Swap(SwapArgs),
    /// Three-party GHZ signaling demo.
    Ghz(OutputArgs),
    /// Signaling attacks: Alice's conditional flip, or a non-maximal swapping basis.
    Attack(AttackArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct OutputArgs {
    /// Write the document here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct InputArgs {
    /// JSON file with "initial" and "final" states.
    #[arg(long, conflicts_with = "preset")]
    pub ensemble: Option<PathBuf>,
    /// Built-in ensemble, e.g. pr_box_pair, singlet-xy, "eq3-swapped(0.3,0.4)".
    #[arg(long)]
    pub preset: Option<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct AblArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Per-party settings, comma separated: x, y, z, OMEGA:PHI, or - for idle.
    #[arg(long, conflicts_with = "sequence", allow_hyphen_values = true)]
    pub dirs: Option<String>,
    /// JSON array of events.
    #[arg(long)]
    pub sequence: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ScanArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct OptimizerArgs {
    /// Grid points per angle.
    #[arg(long, default_value_t = 24)]
    pub grid: usize,
    #[arg(long, default_value_t = 2000)]
    pub refine_iters: usize,
    #[arg(long, default_value_t = 8)]
    pub starts: usize,
    /// Skip the reduced swapped-pair grid.
    #[arg(long)]
    pub no_reduction: bool,
}

impl OptimizerArgs {
    fn config(&self, seed: u64) -> ChshConfig {
        ChshConfig {
            grid_per_angle: self.grid,
            refine_iters: self.refine_iters,
            seed,
            starts: self.starts,
            swapped_reduction: !self.no_reduction,
            ..ChshConfig::default()
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ChshArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct DAlphaArgs {
    /// Schmidt weights in the open interval (0, 1).
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0.5,0.4,0.3,0.2,0.1,0.05"
    )]
    pub alphas: Vec<f64>,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct PrGameArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Alice's directions for x = 0 and x = 1.
    #[arg(long, default_value = "z,x")]
    pub alice: String,
    /// Bob's directions for y = 0 and y = 1.
    #[arg(long, default_value = "x,z")]
    pub bob: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisKind {
    Bell,
    NonMaximal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PostUnitary {
    Hadamard,
    Identity,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SwapArgs {
    /// Alice–Bob ensemble (default: the eq9 preset).
    #[command(flatten)]
    pub input: InputArgs,
    /// Bob–Clare ensemble file (default: same as Alice–Bob).
    #[arg(long, conflicts_with = "second_preset")]
    pub second_ensemble: Option<PathBuf>,
    #[arg(long)]
    pub second_preset: Option<String>,
    #[arg(long, value_enum, default_value = "bell")]
    pub basis: BasisKind,
    /// Angle of the non-maximal basis, radians.
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_6)]
    pub eta: f64,
    #[arg(long, value_enum, default_value = "hadamard")]
    pub post: PostUnitary,
    /// No-signaling scan samples per outcome.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackKind {
    Unitary,
    NonMaximal,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct AttackArgs {
    #[arg(long, value_enum, default_value = "unitary")]
    pub kind: AttackKind,
    /// Angle of the non-maximal swapping basis, radians.
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_6)]
    pub eta: f64,
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// A failed run: exit code plus message for stderr.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::DegeneratePostSelection(_) | Error::ZeroBranch(_) => EXIT_DEGENERATE,
            _ => EXIT_INPUT,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

fn input_error(msg: impl Into<String>) -> CliError {
    CliError {
        code: EXIT_INPUT,
        message: msg.into(),
    }
}

#[derive(Serialize)]
struct Document<'a, C: Serialize, R: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    seed: u64,
    config: &'a C,
    result: R,
}

fn document<C: Serialize, R: Serialize>(
    command: &'static str,
    seed: u64,
    config: &C,
    result: R,
) -> Result<String, CliError> {
    let doc = Document {
        tool: TOOL,
        version: VERSION,
        command,
        seed,
        config,
        result,
    };
    let value = serde_json::to_value(&doc).map_err(|e| CliError {
        code: EXIT_NUMERICAL,
        message: e.to_string(),
    })?;
    if has_non_finite(&value) {
        return Err(CliError {
            code: EXIT_NUMERICAL,
            message: "result contains non-finite numbers".into(),
        });
    }
    let mut s = serde_json::to_string_pretty(&value).expect("JSON value serializes");
    s.push('\n');
    Ok(s)
}

// serde_json writes NaN and infinities as null.
fn has_non_finite(v: &serde_json::Value) -> bool {
    match v {
        serde_json::Value::Null => true,
        serde_json::Value::Array(a) => a.iter().any(has_non_finite),
        serde_json::Value::Object(o) => o
            .iter()
            .any(|(k, v)| has_non_finite(v) && !OPTIONAL_KEYS.contains(&k.as_str())),
        _ => false,
    }
}

// Fields that are legitimately null.
const OPTIONAL_KEYS: &[&str] = &[
    "ensemble",
    "preset",
    "out",
    "dirs",
    "sequence",
    "second_ensemble",
    "second_preset",
    "party",
    "own_direction",
    "other_directions",
    "conditional",
    "class",
    "chsh",
    "scan",
];

fn load_ensemble(
    input: &InputArgs,
    default_preset: Option<&str>,
) -> Result<PrePostEnsemble, CliError> {
    load(
        input.ensemble.as_ref(),
        input.preset.as_deref().or(default_preset),
    )
}

fn load(path: Option<&PathBuf>, preset: Option<&str>) -> Result<PrePostEnsemble, CliError> {
    match (path, preset) {
        (Some(p), _) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| input_error(format!("cannot read {}: {e}", p.display())))?;
            Ok(PrePostEnsemble::from_json(&text)?)
        }
        (None, Some(name)) => Ok(presets::by_name(name)?),
        (None, None) => Err(input_error("give --ensemble FILE or --preset NAME")),
    }
}

fn parse_direction(s: &str) -> Result<Option<MeasurementDirection>, CliError> {
    match s.trim() {
        "-" => Ok(None),
        "x" => Ok(Some(MeasurementDirection::x())),
        "y" => Ok(Some(MeasurementDirection::y())),
        "z" => Ok(Some(MeasurementDirection::z())),
        other => {
            let (w, p) = other.split_once(':').ok_or_else(|| {
                input_error(format!(
                    "bad direction {other:?}; use x, y, z, -, or OMEGA:PHI"
                ))
            })?;
            let num = |t: &str| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| input_error(format!("bad angle {t:?} in direction {other:?}")))
            };
            Ok(Some(MeasurementDirection::new(num(w)?, num(p)?)?))
        }
    }
}

fn parse_directions(s: &str) -> Result<Vec<Option<MeasurementDirection>>, CliError> {
    s.split(',').map(parse_direction).collect()
}

fn parse_pair(s: &str) -> Result<[MeasurementDirection; 2], CliError> {
    let dirs = parse_directions(s)?;
    match dirs.as_slice() {
        [Some(a), Some(b)] => Ok([*a, *b]),
        _ => Err(input_error(format!("expected two directions, got {s:?}"))),
    }
}

fn require_json(output: &OutputArgs, command: &str) -> Result<(), CliError> {
    if output.format != Format::Json {
        return Err(input_error(format!(
            "{command} only supports --format json"
        )));
    }
    Ok(())
}

/// Runs a parsed command and returns the output document with the path it
/// should go to.
pub fn execute(cli: &Cli) -> Result<(String, Option<PathBuf>), CliError> {
    match &cli.command {
        Command::Abl(a) => {
            let out = &a.input.output;
            let ens = load_ensemble(&a.input, None)?;
            let dist = match (&a.dirs, &a.sequence) {
                (Some(d), None) => joint_local_abl(&ens, &parse_directions(d)?)?,
                (None, Some(p)) => {
                    let text = std::fs::read_to_string(p)
                        .map_err(|e| input_error(format!("cannot read {}: {e}", p.display())))?;
                    sequential_abl(&ens, &EventSequence::from_json(ens.num_parties(), &text)?)?
                }
                _ => return Err(input_error("give --dirs or --sequence")),
            };
            let text = match out.format {
                Format::Json => document("abl", out.seed, a, &dist)?,
                Format::Csv => {
                    let mut s = format!(
                        "# {TOOL} {VERSION} abl seed={}\noutcome,probability\n",
                        out.seed
                    );
                    for (k, p) in dist.iter() {
                        writeln!(s, "{},{p}", crate::abl::OutcomeDistribution::key_of(k)).unwrap();
                    }
                    s
                }
            };
            Ok((text, out.out.clone()))
        }
        Command::Scan(a) => {
            let out = &a.input.output;
            require_json(out, "scan")?;
            let ens = load_ensemble(&a.input, None)?;
            let report = scan_no_signaling(&ens, a.samples, out.seed)?;
            Ok((document("scan", out.seed, a, report)?, out.out.clone()))
        }
        Command::Classify(a) => {
            require_json(&a.output, "classify")?;
            let ens = load_ensemble(a, None)?;
            let label = classify(&ens, CLASSIFY_TOL)?;
            Ok((
                document("classify", a.output.seed, a, label)?,
                a.output.out.clone(),
            ))
        }
        Command::ChshMax(a) => {
            let out = &a.input.output;
            require_json(out, "chsh-max")?;
            let ens = load_ensemble(&a.input, None)?;
            let report = maximize_chsh(&ens, &a.optimizer.config(out.seed))?;
            Ok((document("chsh-max", out.seed, a, report)?, out.out.clone()))
        }
        Command::DAlpha(a) => {
            let out = &a.output;
            let cfg = a.optimizer.config(out.seed);
            let points = a
                .alphas
                .iter()
                .map(|&alpha| d_alpha(alpha, &cfg))
                .collect::<Result<Vec<_>, _>>()?;
            let text = match out.format {
                Format::Json => document("d-alpha", out.seed, a, &points)?,
                Format::Csv => {
                    let mut s = format!(
                        "# {TOOL} {VERSION} d-alpha seed={} grid={} refine_iters={} starts={}\nalpha,d,b_max,converged\n",
                        out.seed, cfg.grid_per_angle, cfg.refine_iters, cfg.starts
                    );
                    for p in &points {
                        writeln!(s, "{},{},{},{}", p.alpha, p.d, p.b_max, p.converged).unwrap();
                    }
                    s
                }
            };
            Ok((text, out.out.clone()))
        }
        Command::PrGame(a) => {
            let out = &a.input.output;
            require_json(out, "pr-game")?;
            let ens = load_ensemble(&a.input, None)?;
            let mapping = PrMapping {
                alice: parse_pair(&a.alice)?,
                bob: parse_pair(&a.bob)?,
            };
            let report = pr_game(&ens, &mapping)?;
            Ok((document("pr-game", out.seed, a, report)?, out.out.clone()))
        }
        Command::Swap(a) => {
            let out = &a.input.output;
            require_json(out, "swap")?;
            let ab = load_ensemble(&a.input, Some("eq9"))?;
            let bc = match (&a.second_ensemble, &a.second_preset) {
                (None, None) => ab.clone(),
                (p, n) => load(p.as_ref(), n.as_deref())?,
            };
            let basis = match a.basis {
                BasisKind::Bell => MeasurementBasis::bell(),
                BasisKind::NonMaximal => MeasurementBasis::non_maximal(a.eta),
            };
            let post = match a.post {
                PostUnitary::Hadamard => Some(Unitary2::hadamard()),
                PostUnitary::Identity => None,
            };
            let cfg = SwapConfig {
                chsh: a.optimizer.config(out.seed),
                scan_samples: a.samples,
                scan_seed: out.seed,
            };
            let report = swap_protocol(&ab, &bc, &basis, post.as_ref(), &cfg)?;
            Ok((document("swap", out.seed, a, report)?, out.out.clone()))
        }
        Command::Ghz(a) => {
            require_json(a, "ghz")?;
            Ok((document("ghz", a.seed, a, ghz_demo()?)?, a.out.clone()))
        }
        Command::Attack(a) => {
            let out = &a.output;
            require_json(out, "attack")?;
            let text = match a.kind {
                AttackKind::Unitary => document("attack", out.seed, a, unitary_attack_demo()?)?,
                AttackKind::NonMaximal => {
                    let e = presets::pr_box_pair();
                    document(
                        "attack",
                        out.seed,
                        a,
                        non_maximal_attack(&e, &e, a.eta, a.samples, out.seed)?,
                    )?
                }
            };
            Ok((text, out.out.clone()))
        }
    }
}

/// Parses `args` and returns the document without writing it anywhere.
pub fn render<I, T>(args: I) -> Result<String, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| input_error(e.to_string()))?;
    execute(&cli).map(|(text, _)| text)
}

/// Parses `args`, runs the command and emits the document. Returns the exit
/// code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok((text, None)) => {
            print!("{text}");
            EXIT_OK
        }
        Ok((text, Some(path))) => match std::fs::write(&path, text) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                eprintln!("error: cannot write {}: {e}", path.display());
                EXIT_INPUT
            }
        },
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
