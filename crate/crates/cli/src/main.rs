use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use squashkit::error::{Error, Stage};
use squashkit::finder::{find_squash, FeasibilityReport, Verdict, DEFAULT_GAP_TOL, DEFAULT_MAX_ITER};
use squashkit::fock::{build_detector, enumerate_sectors, FockSector};
use squashkit::group::{C4Symmetry, FiniteGroup, LabelAction};
use squashkit::json::{
    action_from_str, group_from_str, povm_from_str, povm_to_string, squash_from_str,
    squash_to_string, to_pretty, DetectorJson, ReportJson,
};
use squashkit::linalg::ComplexMatrix;
use squashkit::nogo::{
    bbm92_attack, counterexample_m0, pullback_squash, symmetrize, verify_trace_identity,
    SymmetrizedPovm, PULLBACK_TOL,
};
use squashkit::povm::Bb84Povm;
use squashkit::squash::{theorem1_pipeline, verify_squash, CONSTRUCTION_TOL};

mod io;

const MAX_SWEEP: usize = 8;
const PULLBACK_GAP_TOL: f64 = 1e-10;

#[derive(Parser)]
#[command(name = "squashkit", version, about = "Squash operators for BB84 detector POVMs")]
struct Cli {
    /// Tolerance override; each command has its own default.
    #[arg(long, global = true, env = "SQUASHKIT_TOL")]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Threshold-detector POVMs on Fock sectors.
    Detector(DetectorArgs),
    #[command(subcommand)]
    Squash(SquashCommand),
    #[command(subcommand)]
    Nogo(NogoCommand),
    #[command(subcommand)]
    Povm(PovmCommand),
}

#[derive(Args)]
struct DetectorArgs {
    /// Photon numbers per mode, e.g. `2` or `1,1`. Repeatable.
    #[arg(long = "N", alias = "sector")]
    sectors: Vec<String>,
    /// Enumerate every sector with total photon number up to this bound.
    #[arg(long)]
    sweep_max: Option<usize>,
    /// Number of modes for --sweep-max.
    #[arg(long, default_value_t = 1)]
    modes: usize,
    /// Output file, or directory when several sectors are written.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PovmSource {
    /// POVM JSON file, or `m0` / `ideal`.
    #[arg(long)]
    povm: Option<String>,
    /// Fock sector of a threshold detector, e.g. `2` or `2,1`.
    #[arg(long = "N", alias = "sector")]
    sector: Option<String>,
}

#[derive(Subcommand)]
enum SquashCommand {
    /// Analytic construction for a C4-symmetric POVM.
    Construct {
        #[command(flatten)]
        source: PovmSource,
        /// Unitary JSON for --povm inputs; sectors use their own U_N.
        #[arg(long)]
        unitary: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decide squash existence by convex feasibility.
    Find {
        #[command(flatten)]
        source: PovmSource,
        #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
        max_iter: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct GroupArgs {
    /// `c4`, `c2`, `cN`, `s3`, `trivial` or a group JSON file.
    #[arg(long, default_value = "c4")]
    group: String,
    /// `canonical`, `swap`, `trivial` or an action JSON file. Defaults to
    /// canonical for c4, swap for c2 and trivial otherwise.
    #[arg(long)]
    action: Option<String>,
}

#[derive(Subcommand)]
enum NogoCommand {
    /// Write the group-symmetrized POVM.
    Symmetrize {
        #[command(flatten)]
        source: PovmSource,
        #[command(flatten)]
        group: GroupArgs,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pull a squash of the symmetrized POVM back to the base POVM.
    Pullback {
        #[command(flatten)]
        source: PovmSource,
        #[command(flatten)]
        group: GroupArgs,
        /// Squash JSON for the symmetrized POVM; found numerically if omitted.
        #[arg(long)]
        squash: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
        max_iter: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Zero-error intercept attack against a qubit detector.
    Attack {
        #[command(flatten)]
        source: PovmSource,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Builtin {
    M0,
    Ideal,
}

#[derive(Subcommand)]
enum PovmCommand {
    /// Write a built-in POVM.
    Export {
        name: Builtin,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Exit status: 0 success, 1 negative verdict, 2 bad input, 3 undecided.
enum Failure {
    Negative(String),
    Input(String),
    Undecided(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(tol) = cli.tol {
        if !(tol.is_finite() && tol > 0.0) {
            eprintln!("error: --tol must be positive");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Detector(args) => cmd_detector(args),
        Command::Squash(cmd) => cmd_squash(cmd, cli.tol),
        Command::Nogo(cmd) => cmd_nogo(cmd, cli.tol),
        Command::Povm(PovmCommand::Export { name, out }) => {
            let p = builtin(*name);
            io::emit(out.as_deref(), &povm_to_string(&p)).map_err(Failure::Input)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Negative(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Undecided(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(3)
        }
    }
}

fn builtin(b: Builtin) -> Bb84Povm {
    match b {
        Builtin::M0 => counterexample_m0(),
        Builtin::Ideal => Bb84Povm::ideal_qubit(),
    }
}

fn parse_sector(s: &str) -> Result<FockSector, Failure> {
    let photons = s
        .split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Failure::Input(format!("bad photon numbers {s:?}: {e}")))?;
    Ok(FockSector::new(photons)?)
}

fn sector_name(s: &FockSector) -> String {
    let parts: Vec<String> = s.photons().iter().map(|n| n.to_string()).collect();
    format!("N{}", parts.join("-"))
}

fn cmd_detector(args: &DetectorArgs) -> Outcome {
    let mut sectors = args
        .sectors
        .iter()
        .map(|s| parse_sector(s))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(max) = args.sweep_max {
        if max > MAX_SWEEP {
            return Err(Failure::Input(format!("--sweep-max is at most {MAX_SWEEP}")));
        }
        sectors.extend(enumerate_sectors(args.modes, max, 0));
    }
    if sectors.is_empty() {
        return Err(Failure::Input("give --N or --sweep-max".into()));
    }
    let docs = sectors
        .iter()
        .map(|s| Ok((sector_name(s), DetectorJson::from(&build_detector(s)?))))
        .collect::<Result<Vec<_>, Error>>()?;
    match (&args.out, docs.len()) {
        (out, 1) => io::emit(out.as_deref(), &to_pretty(&docs[0].1)),
        (Some(dir), _) => {
            std::fs::create_dir_all(dir).map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))?;
            for (name, doc) in &docs {
                io::write_atomic(&dir.join(format!("detector_{name}.json")), &to_pretty(doc))
                    .map_err(Failure::Input)?;
            }
            Ok(())
        }
        (None, _) => {
            let all: Vec<&DetectorJson> = docs.iter().map(|d| &d.1).collect();
            io::emit(None, &to_pretty(&all))
        }
    }
    .map_err(Failure::Input)
}

/// A POVM plus the sector it came from, if any.
fn load_povm(src: &PovmSource) -> Result<(Bb84Povm, Option<FockSector>), Failure> {
    match (&src.povm, &src.sector) {
        (Some(_), Some(_)) => Err(Failure::Input("give either --povm or --N, not both".into())),
        (None, None) => Err(Failure::Input("give --povm or --N".into())),
        (None, Some(s)) => {
            let sector = parse_sector(s)?;
            Ok((build_detector(&sector)?.povm, Some(sector)))
        }
        (Some(name), None) => {
            let p = match name.as_str() {
                "m0" => counterexample_m0(),
                "ideal" => Bb84Povm::ideal_qubit(),
                path => povm_from_str(&io::read(Path::new(path)).map_err(Failure::Input)?)?,
            };
            p.ensure_valid(squashkit::povm::PSD_TOL)?;
            Ok((p, None))
        }
    }
}

fn load_unitary(path: &Path) -> Result<C4Symmetry, Failure> {
    let text = io::read(path).map_err(Failure::Input)?;
    let j: squashkit::json::MatrixJson =
        serde_json::from_str(&text).map_err(|e| Failure::Input(e.to_string()))?;
    let u = ComplexMatrix::try_from(&j)?;
    let mut last = None;
    for k in 1..=4 {
        match C4Symmetry::new(u.clone(), k) {
            Ok(sym) => return Ok(sym),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("tried at least once").into())
}

fn cmd_squash(cmd: &SquashCommand, tol: Option<f64>) -> Outcome {
    match cmd {
        SquashCommand::Construct {
            source,
            unitary,
            out,
        } => {
            let (p, sector) = load_povm(source)?;
            let sym = match (unitary, &sector) {
                (Some(path), _) => load_unitary(path)?,
                (None, Some(s)) => build_detector(s)?.symmetry()?,
                (None, None) => {
                    return Err(Failure::Input("--povm inputs need --unitary".into()))
                }
            };
            if sym.dim() != p.dim() {
                return Err(Failure::Input(format!(
                    "unitary has dimension {}, POVM has {}",
                    sym.dim(),
                    p.dim()
                )));
            }
            let tol = tol.unwrap_or(CONSTRUCTION_TOL);
            match theorem1_pipeline(&p, &sym, tol) {
                Ok(trace) => {
                    eprintln!(
                        "constructed {} Kraus operators, max residual {:.3e}",
                        trace.squash.kraus().len(),
                        trace.report.max_residual()
                    );
                    io::emit(out.as_deref(), &squash_to_string(&trace.squash)).map_err(Failure::Input)
                }
                Err(Error::Stage {
                    stage: Stage::PhaseNormalization,
                    source,
                }) if matches!(*source, Error::KNotOne { .. }) => {
                    eprintln!("U^4 is not scalar; searching numerically");
                    let report = find_squash(&p, DEFAULT_MAX_ITER, DEFAULT_GAP_TOL)?;
                    match &report.squash {
                        Some(f) => io::emit(out.as_deref(), &squash_to_string(f)).map_err(Failure::Input)?,
                        None => io::emit(out.as_deref(), &to_pretty(&ReportJson::from(&report)))
                            .map_err(Failure::Input)?,
                    }
                    verdict_outcome(&report)
                }
                Err(e @ Error::Stage { .. }) => Err(Failure::Negative(e.to_string())),
                Err(e) => Err(e.into()),
            }
        }
        SquashCommand::Find {
            source,
            max_iter,
            out,
        } => {
            let (p, _) = load_povm(source)?;
            let report = find_squash(&p, *max_iter, tol.unwrap_or(DEFAULT_GAP_TOL))?;
            io::emit(out.as_deref(), &to_pretty(&ReportJson::from(&report))).map_err(Failure::Input)?;
            verdict_outcome(&report)
        }
    }
}

fn verdict_outcome(r: &FeasibilityReport) -> Outcome {
    match r.verdict {
        Verdict::Feasible => Ok(()),
        Verdict::Infeasible => Err(Failure::Negative(format!(
            "no squash: witness value {:.12}",
            r.witness.as_ref().map_or(f64::NAN, |w| w.value)
        ))),
        Verdict::Undecided => Err(Failure::Undecided(format!(
            "undecided after {} iterations (gap {:.3e})",
            r.iterations, r.gap
        ))),
    }
}

fn load_group(args: &GroupArgs) -> Result<(FiniteGroup, LabelAction), Failure> {
    let group = match args.group.as_str() {
        "trivial" => FiniteGroup::trivial(),
        "s3" => FiniteGroup::s3(),
        name if name.starts_with('c') && name[1..].parse::<usize>().is_ok() => {
            FiniteGroup::cyclic(name[1..].parse().expect("checked"))?
        }
        path => group_from_str(&io::read(Path::new(path)).map_err(Failure::Input)?)?,
    };
    let default = match args.group.as_str() {
        "c4" => "canonical",
        "c2" => "swap",
        _ => "trivial",
    };
    let action = match args.action.as_deref().unwrap_or(default) {
        "canonical" => LabelAction::canonical_c4(&group)?,
        "swap" => LabelAction::basis_swap_c2(&group)?,
        "trivial" => LabelAction::trivial(&group),
        path => action_from_str(&group, &io::read(Path::new(path)).map_err(Failure::Input)?)?,
    };
    Ok((group, action))
}

fn load_symmetrized(source: &PovmSource, args: &GroupArgs) -> Result<SymmetrizedPovm, Failure> {
    let (p, _) = load_povm(source)?;
    let (group, action) = load_group(args)?;
    Ok(symmetrize(&p, &group, &action)?)
}

fn cmd_nogo(cmd: &NogoCommand, tol: Option<f64>) -> Outcome {
    match cmd {
        NogoCommand::Symmetrize {
            source,
            group,
            samples,
            seed,
            out,
        } => {
            let s = load_symmetrized(source, group)?;
            let tol = tol.unwrap_or(CONSTRUCTION_TOL);
            let def2 = s.check_definition2(tol)?;
            let identity = verify_trace_identity(&s, *samples, *seed);
            eprintln!(
                "dim {} -> {}; symmetry residual {:.3e}; trace identity deviation {:.3e}",
                s.base.dim(),
                s.tilde.dim(),
                def2.max_residual,
                identity.max_deviation
            );
            io::emit(out.as_deref(), &povm_to_string(&s.tilde)).map_err(Failure::Input)?;
            if def2.passed {
                Ok(())
            } else {
                Err(Failure::Negative("symmetrized POVM failed the symmetry check".into()))
            }
        }
        NogoCommand::Pullback {
            source,
            group,
            squash,
            max_iter,
            out,
        } => {
            let s = load_symmetrized(source, group)?;
            let tol = tol.unwrap_or(PULLBACK_TOL);
            let f_tilde = match squash {
                Some(path) => squash_from_str(&io::read(path).map_err(Failure::Input)?)?,
                None => {
                    let report = find_squash(&s.tilde, *max_iter, PULLBACK_GAP_TOL)?;
                    verdict_outcome(&report)?;
                    report.squash.expect("feasible reports carry a squash")
                }
            };
            let back = match pullback_squash(&s, &f_tilde, tol) {
                Ok(f) => f,
                Err(e @ Error::TildeNotVerified { .. }) => return Err(Failure::Negative(e.to_string())),
                Err(e) => return Err(e.into()),
            };
            let report = verify_squash(&back, &s.base, tol)?;
            io::emit(out.as_deref(), &squash_to_string(&back)).map_err(Failure::Input)?;
            if report.passed {
                eprintln!("pullback verified, max residual {:.3e}", report.max_residual());
                Ok(())
            } else {
                Err(Failure::Negative(format!(
                    "pullback failed verification (max residual {:.3e})",
                    report.max_residual()
                )))
            }
        }
        NogoCommand::Attack {
            source,
            trials,
            seed,
            out,
        } => {
            let (p, _) = load_povm(source)?;
            let result = bbm92_attack(&p, *trials, *seed)?;
            if result.degenerate {
                eprintln!("no trials: degenerate result");
            }
            io::emit(out.as_deref(), &to_pretty(&result)).map_err(Failure::Input)
        }
    }
}
