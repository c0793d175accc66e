mod error;

use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use palpation_core::assessment::{assess, render_text, CompetencyReport};
use palpation_core::config::EngineConfig;
use palpation_core::reference::{annotate_report, build_reference, CalibrationTable, ExpertSession, ReferenceModel};
use palpation_core::simulator::{generate_session, stream_session, Archetype, SimProfile};
use palpation_core::telemetry::{Session, TaskKind};
use palpation_core::wire::{read_session_file, write_session};
use palpation_service::{OpenSession, ServiceConfig};

use error::CliError;

/// Palpation competency engine: simulate, assess and serve live feedback.
#[derive(Parser)]
#[command(name = "palp", version)]
struct Cli {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(subcommand)]
    command: Command,
}

/// Settings resolve as flags, then environment (listen addresses only),
/// then the config file, then built-in defaults.
#[derive(Args)]
struct ConfigArgs {
    /// Engine config file (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Raw reading at the top of the force scale.
    #[arg(long, global = true)]
    quartet_bound: Option<u16>,
    /// Points lost per percentage point of violation.
    #[arg(long, global = true)]
    penalty_slope: Option<f64>,
    /// Force calibration table (JSON).
    #[arg(long, global = true, value_name = "PATH")]
    calibration: Option<PathBuf>,
    /// Reference model (JSON) whose safe threshold flags hard presses.
    #[arg(long, global = true, value_name = "PATH")]
    reference: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic session file from an archetype or a profile.
    Simulate {
        #[arg(long, required_unless_present = "profile")]
        archetype: Option<Archetype>,
        /// Custom profile (TOML), instead of a built-in archetype.
        #[arg(long, value_name = "PATH", conflicts_with = "archetype")]
        profile: Option<PathBuf>,
        /// Defaults to the archetype's own task.
        #[arg(long)]
        task: Option<TaskKind>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        participant: Option<String>,
        #[arg(long)]
        session_id: Option<String>,
        /// Output file; stdout when omitted.
        #[arg(short, long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Score one session file per task and print the report.
    Assess {
        #[arg(required = true, num_args = 1.., value_name = "SESSION")]
        sessions: Vec<PathBuf>,
        /// Also write the JSON report here.
        #[arg(short, long, value_name = "PATH")]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Re-render a stored JSON report.
    Report {
        report: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Average expert session files into a reference model.
    BuildReference {
        #[arg(required = true, num_args = 1.., value_name = "SESSION")]
        sessions: Vec<PathBuf>,
        /// Output file; stdout when omitted.
        #[arg(short, long, value_name = "PATH")]
        out: Option<PathBuf>,
        /// Use the observed deep-task peak as the quartet bound.
        #[arg(long)]
        derive_quartet_bound: bool,
    },
    /// Run the live feedback service until interrupted.
    Serve {
        #[arg(long, value_name = "ADDR")]
        http: Option<String>,
        #[arg(long, value_name = "ADDR")]
        ingest: Option<String>,
        #[arg(long, value_name = "PATH")]
        data_dir: Option<PathBuf>,
    },
    /// Stream a session file to a running service's ingest port.
    Replay {
        session: PathBuf,
        /// Ingest address; defaults to the configured one.
        #[arg(long, value_name = "ADDR")]
        to: Option<String>,
        /// 1.0 is real time, 0.5 twice as fast, 0 as fast as possible.
        #[arg(long, default_value_t = 1.0)]
        speed: f64,
        /// Leave the session open when the stream ends.
        #[arg(long)]
        no_finalize: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.render().to_string();
            eprintln!("{}", CliError::usage(msg.trim_end()).to_json());
            return ExitCode::from(error::EXIT_USAGE);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = engine_config(&cli.config, |k| std::env::var(k).ok())?;
    match cli.command {
        Command::Simulate {
            archetype,
            profile,
            task,
            seed,
            participant,
            session_id,
            out,
        } => simulate(archetype, profile, task, seed, participant, session_id, out),
        Command::Assess { sessions, out, format } => assess_files(&cfg, &sessions, out, format),
        Command::Report { report, format } => {
            let text = fs::read_to_string(&report).map_err(|e| CliError::io(&report, &e))?;
            let parsed: CompetencyReport = serde_json::from_str(&text).map_err(|e| CliError::json(&report, &e))?;
            print_report(&parsed, format)
        }
        Command::BuildReference {
            sessions,
            out,
            derive_quartet_bound,
        } => build_reference_file(&cfg, &sessions, out, derive_quartet_bound),
        Command::Serve { http, ingest, data_dir } => serve(cfg, http, ingest, data_dir),
        Command::Replay {
            session,
            to,
            speed,
            no_finalize,
        } => replay(&session, to.unwrap_or_else(|| cfg.listen.ingest.clone()), speed, !no_finalize),
    }
}

fn engine_config(args: &ConfigArgs, env: impl Fn(&str) -> Option<String>) -> Result<EngineConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, &e))?;
            EngineConfig::from_toml_str(&text).map_err(|e| CliError::usage(e.to_string()).at(path))?
        }
        None => EngineConfig::default(),
    };
    cfg.apply_env(env).map_err(|e| CliError::usage(e.to_string()))?;
    if let Some(b) = args.quartet_bound {
        cfg.segmentation.quartet_bound = b;
    }
    if let Some(s) = args.penalty_slope {
        cfg.assessment.penalty_slope = s;
    }
    if let Some(p) = &args.calibration {
        cfg.paths.calibration = Some(p.clone());
    }
    if let Some(p) = &args.reference {
        cfg.paths.reference_model = Some(p.clone());
    }
    cfg.validate().map_err(|e| CliError::usage(e.to_string()))?;
    Ok(cfg)
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, bytes).map_err(|e| CliError::io(path, &e)),
        None => io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::data("io", format!("stdout: {e}"))),
    }
}

fn simulate(
    archetype: Option<Archetype>,
    profile_path: Option<PathBuf>,
    task: Option<TaskKind>,
    seed: u64,
    participant: Option<String>,
    session_id: Option<String>,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let profile = match (&profile_path, archetype) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, &e))?;
            toml::from_str::<SimProfile>(&text)
                .map_err(|e| CliError::data("parse", format!("{}: {e}", path.display())).at(path))?
        }
        (None, Some(a)) => SimProfile::archetype(a),
        (None, None) => return Err(CliError::usage("give --archetype or --profile")),
    };
    let task = task
        .or_else(|| profile.archetype.natural_task())
        .ok_or_else(|| CliError::usage("custom profiles need --task"))?;
    let mut session =
        generate_session(&profile, task, seed).map_err(|e| CliError::data("infeasible_profile", e.to_string()))?;
    if let Some(p) = participant {
        session.meta.participant_id = p;
    }
    if let Some(id) = session_id {
        session.meta.session_id = id;
    }
    let bytes = write_session(&session, Vec::new()).map_err(|e| CliError::data("io", e.to_string()))?;
    write_output(out.as_deref(), &bytes)
}

fn read_sessions(paths: &[PathBuf]) -> Result<Vec<Session>, CliError> {
    paths
        .iter()
        .map(|p| read_session_file(p).map_err(|e| CliError::session_file(p, e)))
        .collect()
}

fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, &e))?;
    serde_json::from_str(&text).map_err(|e| CliError::json(path, &e))
}

fn load_calibration(cfg: &EngineConfig) -> Result<Option<CalibrationTable>, CliError> {
    cfg.paths.calibration.as_deref().map(load_json).transpose()
}

fn assess_files(cfg: &EngineConfig, paths: &[PathBuf], out: Option<PathBuf>, format: Format) -> Result<(), CliError> {
    let sessions = read_sessions(paths)?;
    let mut report = assess(&sessions, &cfg.segmentation, &cfg.assessment)?;
    if let Some(table) = load_calibration(cfg)? {
        let threshold = match &cfg.paths.reference_model {
            Some(p) => load_json::<ReferenceModel>(p)?.safe_threshold_newtons,
            None => cfg.reference.safe_threshold_newtons,
        };
        annotate_report(&mut report, &table, threshold);
    }
    if let Some(path) = &out {
        fs::write(path, report.to_json()).map_err(|e| CliError::io(path, &e))?;
    }
    print_report(&report, format)
}

fn print_report(report: &CompetencyReport, format: Format) -> Result<(), CliError> {
    let text = match format {
        Format::Text => render_text(report),
        Format::Json => report.to_json() + "\n",
    };
    write_output(None, text.as_bytes())
}

fn build_reference_file(
    cfg: &EngineConfig,
    paths: &[PathBuf],
    out: Option<PathBuf>,
    derive_quartet_bound: bool,
) -> Result<(), CliError> {
    let mut experts = Vec::with_capacity(paths.len());
    for (path, session) in paths.iter().zip(read_sessions(paths)?) {
        let e = ExpertSession::segment(session, &cfg.segmentation)
            .map_err(|e| CliError::data("segmentation", format!("{}: {e}", path.display())).at(path))?;
        experts.push(e);
    }
    let mut rcfg = cfg.reference;
    rcfg.derive_quartet_bound |= derive_quartet_bound;
    let calibration = load_calibration(cfg)?;
    let model = build_reference(&experts, &cfg.segmentation, &rcfg, calibration.as_ref())
        .map_err(|e| CliError::data("reference", e.to_string()))?;
    let mut text = serde_json::to_string_pretty(&model).expect("model serializes");
    text.push('\n');
    write_output(out.as_deref(), text.as_bytes())
}

fn serve(mut cfg: EngineConfig, http: Option<String>, ingest: Option<String>, data_dir: Option<PathBuf>) -> Result<(), CliError> {
    if let Some(a) = http {
        cfg.listen.http = a;
    }
    if let Some(a) = ingest {
        cfg.listen.ingest = a;
    }
    if let Some(d) = data_dir {
        cfg.paths.data_dir = d;
    }
    cfg.validate().map_err(|e| CliError::usage(e.to_string()))?;
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(io::stderr)
        .init();
    let service_cfg = ServiceConfig::from_engine(&cfg).map_err(|e| CliError::data(e.code(), e.to_string()))?;
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::data("io", e.to_string()))?;
    rt.block_on(async {
        let handle = palpation_service::spawn(service_cfg)
            .await
            .map_err(|e| CliError::data(e.code(), e.to_string()))?;
        // One machine-readable line so scripts can find the ports.
        println!(
            "{}",
            serde_json::json!({ "http": handle.http_addr.to_string(), "ingest": handle.ingest_addr.to_string() })
        );
        let _ = io::stdout().flush();
        handle
            .run_until(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await;
        Ok(())
    })
}

fn replay(path: &Path, addr: String, speed: f64, finalize: bool) -> Result<(), CliError> {
    if !(speed.is_finite() && speed >= 0.0) {
        return Err(CliError::usage(format!("--speed must be a non-negative number, got {speed}")));
    }
    let session = read_session_file(path).map_err(|e| CliError::session_file(path, e))?;
    let conn_err = |e: io::Error| CliError::data("connection", format!("{addr}: {e}"));
    let mut conn = TcpStream::connect(&addr).map_err(conn_err)?;
    conn.set_nodelay(true).map_err(conn_err)?;
    let mut header = OpenSession::from_meta(&session.meta);
    header.finalize_on_close = finalize;
    let line = serde_json::to_string(&header).expect("header serializes");
    conn.write_all(format!("{line}\n").as_bytes()).map_err(conn_err)?;

    let mut replies = BufReader::new(conn.try_clone().map_err(conn_err)?).lines();
    let first = replies.next().transpose().map_err(conn_err)?.unwrap_or_default();
    println!("{first}");
    if first.contains("\"error\"") {
        return Err(CliError::data("rejected", first).at(path));
    }
    stream_session(&session, speed, &mut conn).map_err(|e| CliError::data("stream", e.to_string()))?;
    conn.shutdown(std::net::Shutdown::Write).map_err(conn_err)?;
    let mut failed = None;
    for line in replies {
        let line = line.map_err(conn_err)?;
        println!("{line}");
        if line.contains("\"error\"") {
            failed = Some(line);
        }
    }
    match failed {
        Some(line) => Err(CliError::data("rejected", line).at(path)),
        None => Ok(()),
    }
}
