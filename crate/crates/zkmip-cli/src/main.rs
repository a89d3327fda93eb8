//! `zkmip`: runs protocol check batteries, distribution tests and transcript replays.
//!
//! Every subcommand prints one `PASS`/`FAIL` line per check and exits with 0 iff all pass.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use zkmip::aqc::{run_suite, Suite};
use zkmip::harness::battery::{self, ZkTarget};
use zkmip::harness::scenarios::{parse_field, replay_matches, LiftInner, Scenario};
use zkmip::harness::transcript_io::{read_transcript, write_transcript};
use zkmip::harness::zk::ZkMode;
use zkmip::harness::Config;
use zkmip::lift::LiftMode;
use zkmip::report::{all_passed, Check};
use zkmip::zksumcheck::StrongMode;

#[derive(Parser)]
#[command(name = "zkmip", version, about = "Checks for zero-knowledge sumcheck, commitments, low-degree tests and lifted protocols")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone, Debug)]
struct Common {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Field override, e.g. F97, GF2^8.
    #[arg(long)]
    field: Option<String>,
    /// Transcript (protocol commands) or JSON-lines check report (other commands).
    #[arg(long)]
    out: Option<PathBuf>,
    /// TOML configuration; defaults apply to anything it leaves out.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Arithmetic sanity checks on a field.
    Field(Common),
    /// Completeness and soundness of the plain sumcheck.
    Sumcheck(Common),
    /// Weak and strong zero-knowledge sumcheck: completeness, soundness, query budgets.
    Zksumcheck(Common),
    /// Commit and decommit: binding, hiding threshold, cheating openings.
    Commit(Common),
    /// Two-prover low-degree test.
    Ldt(Common),
    /// Zero-knowledge protocol for a succinct 3-SAT instance.
    Nexp(Common),
    /// Lifts a low-degree protocol to two provers.
    Lift {
        #[command(subcommand)]
        cmd: LiftCmd,
    },
    /// Algebraic query complexity suites.
    Aqc {
        #[command(subcommand)]
        cmd: AqcCmd,
    },
    /// Compares real and simulated views.
    ZkTest {
        #[arg(long, value_enum)]
        target: Target,
        #[arg(long, value_enum, default_value_t = Mode::Chi2)]
        mode: Mode,
        /// Samples per side in chi-square mode; defaults to the configured value.
        #[arg(long)]
        samples: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Reruns the scenario recorded in a transcript and compares the bytes.
    Replay {
        transcript: PathBuf,
    },
    /// Prints the default configuration.
    Config,
}

#[derive(Subcommand)]
enum LiftCmd {
    Run {
        #[arg(long, value_enum, default_value_t = Inner::Sumcheck)]
        inner: Inner,
        #[arg(long, value_enum, default_value_t = LMode::Zk)]
        mode: LMode,
        #[arg(long)]
        trials: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum AqcCmd {
    Verify {
        #[arg(long)]
        suite: Suite,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Inner {
    Sumcheck,
    Nexp,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum LMode {
    Zk,
    Fast,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Target {
    Weak,
    Strong,
    Nexp,
    Lift,
    Commit,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Mode {
    Exhaustive,
    Chi2,
}

fn load(c: &Common) -> Result<Config> {
    match &c.config {
        Some(p) => Config::load(p).with_context(|| format!("reading {}", p.display())),
        None => Ok(Config::default()),
    }
}

fn field_or(c: &Common, default: &str) -> String {
    c.field.clone().unwrap_or_else(|| default.to_string())
}

/// Prints checks, writes the output file, and turns the verdict into an exit code.
fn finish(checks: &[Check], c: &Common, transcript: Option<Scenario>) -> Result<ExitCode> {
    for ch in checks {
        println!("{}", ch.line());
    }
    let ok = all_passed(checks);
    println!("{}: {}/{} checks passed", if ok { "PASS" } else { "FAIL" }, checks.iter().filter(|c| c.passed).count(), checks.len());
    if let Some(out) = &c.out {
        match transcript {
            Some(s) => write_transcript(out, &s.transcript(c.seed)?)?,
            None => {
                let lines: Vec<String> = checks.iter().map(|ch| serde_json::to_string(ch).expect("checks serialize")).collect();
                std::fs::write(out, lines.join("\n") + "\n")?;
            }
        }
    }
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Field(c) => {
            load(&c)?;
            let f = parse_field(&field_or(&c, "F97"))?;
            finish(&battery::field_checks(&f, c.seed), &c, None)
        }
        Cmd::Sumcheck(c) => {
            let mut cfg = load(&c)?;
            cfg.sumcheck.field = field_or(&c, &cfg.sumcheck.field);
            let checks = battery::sumcheck_checks(&cfg.sumcheck, &cfg.stats, c.seed);
            finish(&checks, &c, Some(Scenario::Sumcheck { params: cfg.sumcheck, cheat: false }))
        }
        Cmd::Zksumcheck(c) => {
            let mut cfg = load(&c)?;
            cfg.zksumcheck.field = field_or(&c, &cfg.zksumcheck.field);
            let checks = battery::zksumcheck_checks(&cfg.zksumcheck, &cfg.stats, c.seed);
            finish(&checks, &c, Some(Scenario::StrongZkSumcheck { params: cfg.zksumcheck, mode: StrongMode::Honest }))
        }
        Cmd::Commit(c) => {
            let mut cfg = load(&c)?;
            cfg.commit.field = field_or(&c, &cfg.commit.field);
            let checks = battery::commit_checks(&cfg.commit, &cfg.stats, c.seed);
            finish(&checks, &c, Some(Scenario::Decommit { params: cfg.commit, cheat: false }))
        }
        Cmd::Ldt(c) => {
            let mut cfg = load(&c)?;
            cfg.ldt.field = field_or(&c, &cfg.ldt.field);
            let checks = battery::ldt_checks(&cfg.ldt, &cfg.stats, c.seed);
            finish(&checks, &c, Some(Scenario::Ldt { params: cfg.ldt }))
        }
        Cmd::Nexp(c) => {
            let mut cfg = load(&c)?;
            cfg.nexp.field = field_or(&c, &cfg.nexp.field);
            let checks = battery::nexp_checks(&cfg.nexp, None, &cfg.stats, c.seed);
            finish(&checks, &c, Some(Scenario::Nexp { params: cfg.nexp, mode: StrongMode::Honest }))
        }
        Cmd::Lift { cmd: LiftCmd::Run { inner, mode, trials, common: c } } => {
            let mut cfg = load(&c)?;
            let lift = &mut cfg.lift;
            lift.inner = match inner {
                Inner::Sumcheck => LiftInner::Sumcheck,
                Inner::Nexp => LiftInner::Nexp,
            };
            lift.mode = match mode {
                LMode::Zk => LiftMode::Zk,
                LMode::Fast => LiftMode::Fast,
            };
            if let Some(t) = trials {
                lift.trials = t;
            }
            if let Some(f) = &c.field {
                match lift.inner {
                    LiftInner::Sumcheck => lift.field = f.clone(),
                    LiftInner::Nexp => lift.nexp_field = f.clone(),
                }
            }
            let checks = battery::lift_checks(&cfg.lift, &cfg.nexp, c.seed);
            finish(&checks, &c, Some(Scenario::Lift { params: cfg.lift, nexp: cfg.nexp }))
        }
        Cmd::Aqc { cmd: AqcCmd::Verify { suite, common: c } } => {
            if c.field.is_some() {
                bail!("aqc suites fix their own fields; --field is not accepted");
            }
            finish(&run_suite(suite, c.seed), &c, None)
        }
        Cmd::ZkTest { target, mode, samples, common: c } => {
            let cfg = load(&c)?;
            let f = c.field.clone();
            let target = match target {
                Target::Weak | Target::Strong => {
                    let mut p = cfg.zksumcheck.clone();
                    p.field = f.unwrap_or(p.field);
                    if matches!(target, Target::Weak) {
                        ZkTarget::Weak(p)
                    } else {
                        ZkTarget::Strong(p)
                    }
                }
                Target::Nexp => {
                    let mut p = cfg.nexp.clone();
                    p.field = f.unwrap_or(p.field);
                    ZkTarget::Nexp(p)
                }
                Target::Lift => {
                    let mut p = cfg.lift.clone();
                    p.inner = LiftInner::Sumcheck;
                    p.mode = LiftMode::Zk;
                    p.field = f.unwrap_or(p.field);
                    ZkTarget::Lift(p)
                }
                Target::Commit => {
                    let mut p = cfg.commit.clone();
                    p.field = f.unwrap_or(p.field);
                    ZkTarget::Commit(p)
                }
            };
            let mode = match mode {
                Mode::Exhaustive => ZkMode::exhaustive(),
                Mode::Chi2 => ZkMode::Chi2 { samples: samples.unwrap_or(cfg.stats.samples), p_floor: cfg.stats.p_floor },
            };
            finish(&battery::zk_checks(&target, &mode, &cfg.stats, c.seed), &c, None)
        }
        Cmd::Replay { transcript } => {
            let t = read_transcript(&transcript).with_context(|| format!("reading {}", transcript.display()))?;
            let same = replay_matches(&t)?;
            let check = Check::new("transcript replay", same, format!("{} with seed {:?}, {} events", t.header.protocol, t.header.seed, t.events.len()));
            println!("{}", check.line());
            Ok(if same { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Cmd::Config => {
            print!("{}", Config::default().to_toml());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
