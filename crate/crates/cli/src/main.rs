use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use hallflag_core::ampleness::{generic_verdict_table, slice_report_with, SliceOptions};
use hallflag_core::flags::{lie_flag, nilpotent_frame, Frame};
use hallflag_core::freelie::{hall_basis, is_free_type, maximal_growth_vector, witt_dimension_big};
use hallflag_core::frontend::{parse_algebra, parse_frame, run_suites, Suite};
use hallflag_core::rational::{fmt_vector, parse_rational_list, Q};
use hallflag_core::Error;

#[derive(Parser)]
#[command(name = "hallflag", version, about = "Hall bases, growth vectors, Lie flags and slice ampleness, in exact arithmetic")]
struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SuiteArg {
    Hall,
    Jet,
    Flags,
    Ampleness,
    All,
}

/// Comma-separated exact rationals, e.g. "1,-2/3,0".
#[derive(Clone, Debug)]
struct Rationals(Vec<Q>);

fn rational_list(s: &str) -> Result<Rationals, String> {
    parse_rational_list(s).map(Rationals).ok_or_else(|| format!("expected comma-separated rationals like \"1,-2/3\", got {s:?}"))
}

#[derive(Subcommand)]
enum Cmd {
    /// Dimension of one layer of the free Lie algebra
    Witt {
        #[arg(long)]
        generators: u64,
        #[arg(long)]
        length: u32,
    },
    /// Hall basis listed by length
    Hall {
        #[arg(long)]
        generators: usize,
        #[arg(long)]
        max_length: usize,
    },
    /// Maximal growth vector of a rank-K distribution on an N-manifold
    Mgv {
        #[arg(long)]
        rank: u64,
        #[arg(long)]
        dim: u64,
    },
    /// Lie flag of a frame at a point
    Growth {
        #[arg(long)]
        frame: PathBuf,
        #[arg(long, value_parser = rational_list)]
        point: Rationals,
        #[arg(long)]
        max_step: Option<usize>,
    },
    /// Left-invariant frame of a stratified algebra, as a frame file
    Nilpotentize {
        #[arg(long)]
        algebra: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Slice reports for a probing direction
    Slice {
        #[arg(long)]
        frame: PathBuf,
        #[arg(long, value_parser = rational_list)]
        point: Rationals,
        #[arg(long, value_parser = rational_list)]
        direction: Rationals,
        #[arg(long)]
        step: usize,
        /// Cross-check ranks against all right-nested brackets
        #[arg(long)]
        cross_check: bool,
    },
    /// Generic verdict table for rank K on dimension N
    Ampleness {
        #[arg(long)]
        rank: usize,
        #[arg(long)]
        dim: usize,
    },
    /// Run invariant suites
    Check {
        #[arg(long, value_enum, default_value_t = SuiteArg::All)]
        suite: SuiteArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

enum Failure {
    Domain(Error),
    Io(String),
    ChecksFailed(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn load_frame(path: &Path) -> Result<Frame, Failure> {
    parse_frame(&read(path)?).map_err(|e| Failure::Domain(e.into()))
}

fn to_json(v: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(v).expect("report serializes")
}

fn run(cli: Cli) -> Result<String, Failure> {
    let json = cli.format == Format::Json;
    let mut out = String::new();
    match cli.cmd {
        Cmd::Witt { generators, length } => {
            let w = witt_dimension_big(generators, length).map_err(Error::from)?;
            out = if json { to_json(&json!({ "generators": generators, "length": length, "dimension": w.to_string() })) } else { w.to_string() };
        }
        Cmd::Hall { generators, max_length } => {
            let h = hall_basis(generators, max_length).map_err(Error::from)?;
            let layers: Vec<Vec<String>> = (1..=max_length).map(|l| h.layer(l).iter().map(|e| e.to_string()).collect()).collect();
            if json {
                out = to_json(&json!({ "generators": generators, "layers": layers }));
            } else {
                for (l, layer) in layers.iter().enumerate() {
                    writeln!(out, "length {} ({}): {}", l + 1, layer.len(), layer.join(" ")).unwrap();
                }
            }
        }
        Cmd::Mgv { rank, dim } => {
            let gv = maximal_growth_vector(rank, dim).map_err(Error::from)?;
            let free = is_free_type(&gv, rank);
            out = if json {
                to_json(&json!({ "growth_vector": gv.entries, "step": gv.step, "free_type": free }))
            } else {
                format!("{gv} step={} free_type={free}", gv.step)
            };
        }
        Cmd::Growth { frame, point, max_step } => {
            let fr = load_frame(&frame)?;
            let rep = lie_flag(&fr, &point.0, max_step).map_err(Error::from)?;
            if !rep.regular {
                log::warn!("growth is not regular at this point; regularity on a neighbourhood is not certified");
            }
            if json {
                out = to_json(&rep);
            } else {
                let dims: Vec<String> = rep.dims.iter().map(|d| d.to_string()).collect();
                writeln!(out, "point {}", fmt_vector(&rep.base_point)).unwrap();
                writeln!(out, "dims ({})", dims.join(", ")).unwrap();
                write!(
                    out,
                    "step={} maximal={} free_type={} stabilized={} regular={}",
                    rep.step, rep.maximal, rep.free_type, rep.stabilized, rep.regular
                )
                .unwrap();
            }
        }
        Cmd::Nilpotentize { algebra, out: path } => {
            let alg = parse_algebra(&read(&algebra)?).map_err(Error::from)?;
            let fr = nilpotent_frame(&alg).map_err(Error::from)?;
            let text = fr.to_text();
            let rendered = if json { to_json(&json!({ "dim": fr.n, "frame": text })) } else { text.trim_end().to_string() };
            match path {
                Some(p) => {
                    std::fs::write(&p, &text).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))?;
                    out = if json { rendered } else { format!("wrote {}", p.display()) };
                }
                None => out = rendered,
            }
        }
        Cmd::Slice { frame, point, direction, step, cross_check } => {
            let fr = load_frame(&frame)?;
            let reps = slice_report_with(&fr, &point.0, &direction.0, step, SliceOptions { cross_check }).map_err(Error::from)?;
            if json {
                out = to_json(&reps);
            } else {
                for r in &reps {
                    writeln!(out, "i={} m_i={} n_i={} verdict={}{}", r.order, r.m_i, r.n_i, r.verdict, if r.normal { " normal" } else { "" }).unwrap();
                }
            }
        }
        Cmd::Ampleness { rank, dim } => {
            let rows = generic_verdict_table(rank, dim).map_err(Error::from)?;
            if json {
                out = to_json(&rows);
            } else {
                for r in &rows {
                    writeln!(out, "i={} m_i={} n_i={} verdict={}", r.order, r.m_i, r.n_i, r.verdict).unwrap();
                }
            }
        }
        Cmd::Check { suite, seed } => {
            let suites: Vec<Suite> = match suite {
                SuiteArg::Hall => vec![Suite::Hall],
                SuiteArg::Jet => vec![Suite::Jet],
                SuiteArg::Flags => vec![Suite::Flags],
                SuiteArg::Ampleness => vec![Suite::Ampleness],
                SuiteArg::All => Suite::ALL.to_vec(),
            };
            let results = run_suites(&suites, seed);
            let failed = results.iter().filter(|r| !r.passed).count();
            let rendered = if json {
                to_json(&results)
            } else {
                let mut s = String::new();
                for r in &results {
                    writeln!(s, "{} {}/{}: {}", if r.passed { "PASS" } else { "FAIL" }, r.suite, r.name, r.detail).unwrap();
                }
                write!(s, "{} passed, {failed} failed", results.len() - failed).unwrap();
                s
            };
            if failed > 0 {
                println!("{rendered}");
                return Err(Failure::ChecksFailed(failed));
            }
            out = rendered;
        }
    }
    Ok(out.trim_end().to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(s) => {
            println!("{s}");
            ExitCode::SUCCESS
        }
        Err(Failure::Domain(e)) => {
            eprintln!("error[{}]: {e}", e.module());
            ExitCode::from(1)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error[io]: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::ChecksFailed(n)) => {
            eprintln!("{n} check(s) failed");
            ExitCode::from(1)
        }
    }
}
