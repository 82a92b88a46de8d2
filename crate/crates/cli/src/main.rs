//! `cdqs-lab`: verify, transform and reduce CDS/CDQS/f-routing protocols from the command line.
//!
//! Exit codes: 0 every asserted bound holds, 1 usage or input error, 2 an asserted bound
//! failed, 3 a numeric or capacity limit was hit.

mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use cdqs_core::channel::{depolarizing, depolarizing_for_diamond};
use cdqs_core::protocol::io::{load_protocol_file, save_protocol, ChannelFormat, LoadedProtocol};
use cdqs_core::protocol::{
    verify_cdqs, verify_cds_exact, verify_frouting, CdqsProtocol, VerificationReport, VerifyOptions,
};
use cdqs_core::reductions::{self, OneWayMode, OneWayOptions};
use cdqs_core::tensor::MAX_ENTRIES;
use cdqs_core::transforms::{self, amplify, code_catalog, CODE_NAMES};
use cdqs_core::zoo::{self, REGISTRY};
use cdqs_core::Error;

use report::Envelope;

#[derive(Parser)]
#[command(name = "cdqs-lab", version, about = "Certify and transform CDS, CDQS and f-routing protocols")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Registry name (see `list-protocols`) or path to a protocol JSON file.
    #[arg(long)]
    protocol: Option<String>,
    /// Input length for registry protocols.
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// Slack when comparing certified values with declared ones, in (0, 0.1].
    #[arg(long, default_value_t = cdqs_core::protocol::DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report a zero wall time so reruns are byte-identical.
    #[arg(long)]
    deterministic: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Certify (ε̂, δ̂) over every input pair.
    Verify(Common),
    /// Build a new protocol from existing ones and certify it.
    Transform {
        #[arg(value_enum)]
        kind: TransformKind,
        #[command(flatten)]
        common: Common,
        /// Second operand of `and`/`or`.
        #[arg(long)]
        protocol2: Option<String>,
        /// Diamond error injected into both the correctness and the security of dictator
        /// operands of `and`/`or`.
        #[arg(long, default_value_t = 0.0)]
        inject_eps: f64,
        /// Code used by `amplify`.
        #[arg(long, default_value = "five_qubit")]
        code: String,
        /// Per-instance depolarizing diamond error for `amplify`.
        #[arg(long, default_value_t = 0.01)]
        noise_eps: f64,
        /// Directory receiving the transformed protocol (JSON plus channel files).
        #[arg(long)]
        save: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = FormatArg::Auto)]
        format: FormatArg,
    },
    /// Run a communication-complexity reduction.
    Reduce {
        #[arg(value_enum)]
        kind: ReduceKind,
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = ModeArg::Oracle)]
        mode: ModeArg,
        /// Tomography trials per input (`oneway --mode sampled`).
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Secret bits for `qip` and `zk`.
        #[arg(long, default_value_t = 2)]
        ell: usize,
        /// Correctness parameter used by `pp` instead of the declared one.
        #[arg(long)]
        eps: Option<f64>,
        /// Depolarizing noise on Alice's message for `zk`.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
    },
    /// Print the protocol registry.
    ListProtocols {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TransformKind {
    Negate,
    And,
    Or,
    Amplify,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReduceKind {
    Oneway,
    Pp,
    Qip,
    Zk,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Oracle,
    Sampled,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    /// Choi matrices when every channel's fits in memory, Kraus operators otherwise.
    Auto,
    Choi,
    Kraus,
}

/// A command's failure, already mapped to its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_numeric() {
            3
        } else if matches!(e, Error::Precondition(_)) {
            2
        } else {
            1
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { code: 1, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 1, message: message.into() }
}

type CmdResult = Result<(bool, Value), Failure>;

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn load(spec: &str, n: usize) -> Result<LoadedProtocol, Failure> {
    if REGISTRY.iter().any(|(name, _)| *name == spec) {
        return Ok(zoo::named(spec, n)?);
    }
    let path = Path::new(spec);
    if path.exists() {
        Ok(load_protocol_file(path)?)
    } else {
        Err(usage(format!("`{spec}` is neither a registry protocol nor an existing file")))
    }
}

/// CDQS view of a loaded protocol; CDS inputs are lifted first.
fn as_cdqs(p: LoadedProtocol) -> Result<CdqsProtocol, Failure> {
    match p {
        LoadedProtocol::Cdqs(q) => Ok(q),
        LoadedProtocol::Cds(c) => Ok(zoo::lift_cds(&c)?),
        LoadedProtocol::FRouting(f) => Ok(cdqs_core::protocol::frouting_to_cdqs(&f)?),
    }
}

/// Operand of `and`/`or`: dictators are rebuilt at the share dimension with injected error.
fn operand(spec: &str, n: usize, d_q: usize, eps: f64) -> Result<CdqsProtocol, Failure> {
    match spec {
        "alice_bit" => Ok(zoo::alice_bit(d_q, eps, eps)?),
        "bob_bit" => Ok(zoo::bob_bit(d_q, eps, eps)?),
        other => as_cdqs(load(other, n)?),
    }
}

fn verify_opts(c: &Common) -> VerifyOptions {
    VerifyOptions { tol: c.tol, ..Default::default() }
}

fn report_failures(r: &VerificationReport) {
    for row in r.failing_rows() {
        eprintln!(
            "failing row x={} y={} f={}: {}",
            row.x,
            row.y,
            row.f,
            serde_json::to_string(row).unwrap_or_default()
        );
    }
}

fn require_protocol(c: &Common) -> Result<&str, Failure> {
    c.protocol.as_deref().ok_or_else(|| usage("--protocol is required"))
}

fn run_verify(c: &Common) -> CmdResult {
    let r = match load(require_protocol(c)?, c.n)? {
        LoadedProtocol::Cds(p) => verify_cds_exact(&p)?,
        LoadedProtocol::Cdqs(p) => verify_cdqs(&p, &verify_opts(c))?,
        LoadedProtocol::FRouting(p) => verify_frouting(&p, &verify_opts(c))?,
    };
    report_failures(&r);
    Ok((r.pass, to_value(&r)))
}

#[allow(clippy::too_many_arguments)]
fn run_transform(
    kind: TransformKind,
    c: &Common,
    protocol2: Option<&str>,
    inject_eps: f64,
    code: &str,
    noise_eps: f64,
    save: Option<&Path>,
    format: FormatArg,
) -> CmdResult {
    let built = match kind {
        TransformKind::Amplify => {
            let spec = code_catalog(code)?;
            let p = depolarizing_for_diamond(noise_eps, 2);
            let instance = depolarizing(p, 2)?;
            let (_, result) = amplify(&spec, &instance)?;
            let mut v = to_value(&result);
            v["known_codes"] = json!(CODE_NAMES);
            return Ok((result.pass, v));
        }
        TransformKind::Negate => transforms::negate(&as_cdqs(load(require_protocol(c)?, c.n)?)?)?,
        TransformKind::And | TransformKind::Or => {
            let first = require_protocol(c)?;
            let second = protocol2.ok_or_else(|| usage("--protocol2 is required for and/or"))?;
            if matches!(kind, TransformKind::And) {
                transforms::and_compose(&operand(first, c.n, 2, inject_eps)?, &operand(second, c.n, 4, inject_eps)?)?
            } else {
                transforms::or_compose(&operand(first, c.n, 3, inject_eps)?, &operand(second, c.n, 3, inject_eps)?)?
            }
        }
    };
    let r = verify_cdqs(&built, &verify_opts(c))?;
    report_failures(&r);
    let mut v = json!({
        "protocol": built.name,
        "predicate": built.predicate.name,
        "message_qubits": built.message_qubits(),
        "resource_qubits": built.resource_qubits(),
        "verification": to_value(&r),
    });
    if let Some(dir) = save {
        std::fs::create_dir_all(dir)?;
        let format = match format {
            FormatArg::Choi => ChannelFormat::Choi,
            FormatArg::Kraus => ChannelFormat::Kraus,
            FormatArg::Auto => {
                let fits = built.alice.iter().chain(&built.bob).all(|ch| {
                    let n = ch.d_in() * ch.d_out();
                    n.checked_mul(n).is_some_and(|e| e <= MAX_ENTRIES)
                });
                if fits {
                    ChannelFormat::Choi
                } else {
                    ChannelFormat::Kraus
                }
            }
        };
        let stem: String = built.name.chars().map(|ch| if ch.is_ascii_alphanumeric() { ch } else { '_' }).collect();
        let path = save_protocol(&LoadedProtocol::Cdqs(built), dir, &stem, format)?;
        v["saved"] = json!(path.display().to_string());
    }
    Ok((r.pass, v))
}

#[allow(clippy::too_many_arguments)]
fn run_reduce(
    kind: ReduceKind,
    c: &Common,
    mode: ModeArg,
    samples: usize,
    ell: usize,
    eps: Option<f64>,
    noise: f64,
) -> CmdResult {
    let p = as_cdqs(load(require_protocol(c)?, c.n)?)?;
    match kind {
        ReduceKind::Oneway => {
            let opts = OneWayOptions {
                mode: match mode {
                    ModeArg::Oracle => OneWayMode::Oracle,
                    ModeArg::Sampled => OneWayMode::Sampled,
                },
                trials: samples,
                seed: c.seed,
                ..Default::default()
            };
            let r = reductions::one_way_reduction(&p, &opts)?;
            let pass = match opts.mode {
                OneWayMode::Oracle => r.all_correct,
                OneWayMode::Sampled => r.error_rate <= opts.delta_fail,
            };
            Ok((pass, to_value(&r)))
        }
        ReduceKind::Pp => {
            let r = reductions::pp_reduction(&p, eps)?;
            Ok((r.valid, to_value(&r)))
        }
        ReduceKind::Qip => {
            let r = reductions::qip2_from_cdqs(&p, ell)?;
            Ok((r.pass, to_value(&r)))
        }
        ReduceKind::Zk => {
            let q = if noise > 0.0 { reductions::noisy_alice(&p, noise)? } else { p };
            let r = reductions::hvqszk_check(&q, ell)?;
            let mut v = to_value(&r);
            v["noise"] = json!(noise);
            Ok((r.pass, v))
        }
    }
}

fn check_common(c: &Common) -> Result<(), Failure> {
    if !(c.tol > 0.0 && c.tol <= 0.1) {
        return Err(usage(format!("--tol {} outside (0, 0.1]", c.tol)));
    }
    if c.n == 0 {
        return Err(usage("--n must be positive"));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let (name, common) = match &cli.command {
        Command::ListProtocols { out } => {
            let list: Vec<Value> = REGISTRY.iter().map(|(k, d)| json!({"name": k, "description": d})).collect();
            match out {
                Some(path) => report::emit(json!({ "protocols": list }), Some(path))?,
                None => REGISTRY.iter().for_each(|(k, d)| println!("{k:<12} {d}")),
            }
            return Ok(0);
        }
        Command::Verify(c) => {
            check_common(c)?;
            ("verify".to_string(), c)
        }
        Command::Transform { kind, common, .. } => {
            check_common(common)?;
            let label =
                format!("transform {}", kind.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default());
            (label, common)
        }
        Command::Reduce { kind, common, .. } => {
            check_common(common)?;
            let label =
                format!("reduce {}", kind.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default());
            (label, common)
        }
    };
    let env = Envelope::new(&name, common.protocol.as_deref(), common.n, common.seed, common.tol, common.deterministic);
    let (pass, result) = match &cli.command {
        Command::Verify(c) => run_verify(c)?,
        Command::Transform { kind, common, protocol2, inject_eps, code, noise_eps, save, format } => {
            run_transform(*kind, common, protocol2.as_deref(), *inject_eps, code, *noise_eps, save.as_deref(), *format)?
        }
        Command::Reduce { kind, common, mode, samples, ell, eps, noise } => {
            run_reduce(*kind, common, *mode, *samples, *ell, *eps, *noise)?
        }
        Command::ListProtocols { .. } => unreachable!("handled above"),
    };
    report::emit(env.finish(pass, result), common.out.as_deref())?;
    eprintln!("{name}: {}", if pass { "PASS" } else { "FAIL" });
    Ok(if pass { 0 } else { 2 })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
