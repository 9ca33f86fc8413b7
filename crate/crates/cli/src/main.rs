use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use exclusion_lab::bounds::bound_table;
use exclusion_lab::channels::NoiseMode;
use exclusion_lab::linalg::Pauli;
use exclusion_lab::sdp::{check_optimality, exclusion_probability, sigma_value, SolveStatus, OPTIMALITY_TOL};
use exclusion_lab::sweep::{
    emit_csv, emit_plotscript, find_onset, format_sig12, read_povm, run_preset, run_sweep, write_povm, NoiseSpec,
    Preset, RowStatus, SweepSpec,
};
use exclusion_lab::Error;

const EXIT_FAILURE: u8 = 1;
const EXIT_INVALID_SPEC: u8 = 2;
const EXIT_MAX_ITERS: u8 = 3;

#[derive(Parser)]
#[command(
    name = "exclusion-lab",
    version,
    about = "Conclusive-exclusion sweeps for noisy PBR families"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve over a sin θ grid and write `<curve>.csv` plus a gnuplot script.
    Sweep {
        #[command(flatten)]
        family: FamilyArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value_t = 101)]
        points: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Locate the start of the σ-zero region by bisection.
    Onset {
        #[command(flatten)]
        family: FamilyArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Run a figure preset: fig3, fig4a, fig4b, fig4c, fig5 or bounds_table.
    Preset {
        name: String,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value_t = 101)]
        points: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Print the analytical onsets for n = 1..=max-n.
    Bounds {
        #[arg(long, default_value_t = 8)]
        max_n: usize,
    },
    /// Solve one point and store the optimal POVM.
    Solve {
        #[command(flatten)]
        family: FamilyArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        sin: f64,
        /// POVM file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a stored POVM against the optimality conditions.
    VerifyPovm {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        sin: f64,
        #[arg(long)]
        povm: PathBuf,
        #[arg(long, default_value_t = OPTIMALITY_TOL)]
        tol: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum NoiseKind {
    X,
    Y,
    Z,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Collective,
    Independent,
}

#[derive(Args)]
struct FamilyArgs {
    #[arg(long)]
    n: usize,
    /// Pauli noise; omit for the noiseless family.
    #[arg(long, value_enum)]
    noise: Option<NoiseKind>,
    /// Probability that the noise does not act.
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    /// Qubits hit by collective noise.
    #[arg(long, default_value_t = 1)]
    j: usize,
    #[arg(long, value_enum, default_value = "collective")]
    mode: Mode,
}

#[derive(Args)]
struct SolverArgs {
    /// σ at or below this counts as zero.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
}

impl FamilyArgs {
    fn spec(&self) -> SweepSpec {
        let noise = self.noise.map(|kind| {
            let kind = match kind {
                NoiseKind::X => Pauli::X,
                NoiseKind::Y => Pauli::Y,
                NoiseKind::Z => Pauli::Z,
            };
            let mode = match self.mode {
                Mode::Collective => NoiseMode::Collective,
                Mode::Independent => NoiseMode::Independent,
            };
            match mode {
                NoiseMode::Collective => NoiseSpec::collective(kind, self.p, self.j),
                NoiseMode::Independent => NoiseSpec::independent(kind, self.p),
            }
        });
        SweepSpec::new(self.n, noise)
    }
}

impl SolverArgs {
    fn apply(&self, spec: &mut SweepSpec) {
        if let Some(t) = self.threshold {
            spec.solver.zero_threshold = t;
        }
        if let Some(m) = self.max_iters {
            spec.solver.max_iters = m;
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidSpec(_)
        | Error::InvalidN(_)
        | Error::UnknownPreset(_)
        | Error::ThetaOutOfRange(_)
        | Error::NTooLarge { .. }
        | Error::Parse(_)
        | Error::InvalidPovm(_)
        | Error::DimensionMismatch(..)
        | Error::IndexCountMismatch { .. } => EXIT_INVALID_SPEC,
        _ => EXIT_FAILURE,
    }
}

fn run(command: Command) -> exclusion_lab::Result<u8> {
    match command {
        Command::Sweep {
            family,
            solver,
            points,
            out,
        } => {
            let mut spec = family.spec().with_points(points);
            solver.apply(&mut spec);
            let rows = run_sweep(&spec)?;
            let csv = out.join(&spec.output_path);
            emit_csv(&rows, &csv)?;
            let script = out.join(format!("{}.gp", spec.file_stem()));
            emit_plotscript(&rows, &spec.output_path, &spec.title(), &script)?;
            println!("wrote {} and {}", csv.display(), script.display());
            let capped = rows
                .iter()
                .filter(|r| r.status == RowStatus::Solved(SolveStatus::MaxIters))
                .count();
            Ok(max_iters_code(capped))
        }
        Command::Onset { family, solver } => {
            let mut spec = family.spec();
            solver.apply(&mut spec);
            let report = find_onset(&spec)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            println!("onset={}", report.display_value());
            let capped = report
                .warnings
                .iter()
                .filter(|w| matches!(w, exclusion_lab::sweep::OnsetWarning::MaxIters { .. }))
                .count();
            Ok(max_iters_code(capped))
        }
        Command::Preset {
            name,
            solver,
            points,
            out,
        } => {
            let preset: Preset = name.parse()?;
            let output = run_preset(preset, &out, |spec| {
                spec.theta_axis.count = points;
                solver.apply(spec);
            })?;
            for f in &output.files {
                println!("wrote {}", f.display());
            }
            if output.failed_rows > 0 {
                eprintln!("warning: {} rows failed to solve", output.failed_rows);
            }
            Ok(max_iters_code(output.max_iter_rows))
        }
        Command::Bounds { max_n } => {
            println!("n,theta_min,d_n");
            for row in bound_table(max_n)? {
                println!("{},{},{}", row.n, format_sig12(row.theta_min), format_sig12(row.d_n));
            }
            Ok(0)
        }
        Command::Solve {
            family,
            solver,
            sin,
            out,
        } => {
            let mut spec = family.spec();
            solver.apply(&mut spec);
            spec.validate()?;
            check_sin(sin)?;
            let report = spec.solve_at(sin)?;
            write_povm(&report.povm, &out)?;
            println!(
                "sigma={} dual={} iterations={} status={}",
                format_sig12(report.sigma),
                format_sig12(report.dual_value),
                report.iterations,
                report.status
            );
            Ok(max_iters_code(usize::from(report.status == SolveStatus::MaxIters)))
        }
        Command::VerifyPovm { family, sin, povm, tol } => verify(&family, sin, &povm, tol),
    }
}

fn verify(family: &FamilyArgs, sin: f64, path: &Path, tol: f64) -> exclusion_lab::Result<u8> {
    let spec = family.spec();
    spec.validate()?;
    check_sin(sin)?;
    let fam = spec.family_at(sin)?;
    let povm = read_povm(path)?;
    let check = check_optimality(&fam, &povm, tol)?;
    println!("sigma={}", format_sig12(sigma_value(&povm, &fam)?));
    println!(
        "exclusion_probability={}",
        format_sig12(exclusion_probability(&fam, &povm)?)
    );
    println!(
        "hermitian_ok={} (defect {:.3e})",
        check.hermitian_ok, check.hermitian_defect
    );
    println!(
        "psd_ok={} (min slack eigenvalue {:.3e})",
        check.psd_ok, check.min_slack_eigenvalue
    );
    Ok(if check.passed() { 0 } else { EXIT_FAILURE })
}

fn check_sin(sin: f64) -> exclusion_lab::Result<()> {
    if (0.0..=1.0).contains(&sin) {
        Ok(())
    } else {
        Err(Error::InvalidSpec(format!("sin θ = {sin} outside [0, 1]")))
    }
}

fn max_iters_code(capped: usize) -> u8 {
    if capped > 0 {
        eprintln!("warning: {capped} solves stopped at max_iters");
        EXIT_MAX_ITERS
    } else {
        0
    }
}
