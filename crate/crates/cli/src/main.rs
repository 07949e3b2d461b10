use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use io_recover::regions::regions;
use io_recover::{check_certificate, solve, validate, CheckOutcome, Error, InverseInstance, ModelKind, SolveStatus};
use io_recover_cli::file::{self, InputError, ProblemFile, RegionsFile, SolutionFile, SCHEMA_VERSION};
use io_recover_cli::{demo, exit};

#[derive(Parser)]
#[command(name = "io-recover", version, about = "Impute constraint and uncertainty parameters from an observed decision")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the inverse model described by a problem file.
    Solve {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Run a bundled example and compare with the published values.
    Demo {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=8))]
        example: u8,
    },
    /// Recheck the certificate stored in a solution file.
    Verify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        solution: PathBuf,
    },
    /// Write nominal, prior and imputed boundary polylines for a 2-variable problem.
    Regions {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        solution: Option<PathBuf>,
        /// x0,y0,x1,y1
        #[arg(long, allow_hyphen_values = true, value_parser = parse_bbox)]
        bbox: [f64; 4],
        #[arg(long)]
        output: PathBuf,
    },
}

fn parse_bbox(s: &str) -> Result<[f64; 4], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    v.try_into().map_err(|v: Vec<f64>| format!("expected 4 numbers, got {}", v.len()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::INPUT } else { exit::OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    configure_threads();
    let code = match cli.command {
        Command::Solve { input, output } => run_solve(&input, &output),
        Command::Demo { example } => run_demo(example),
        Command::Verify { input, solution } => run_verify(&input, &solution),
        Command::Regions {
            input,
            solution,
            bbox,
            output,
        } => run_regions(&input, solution.as_deref(), bbox, &output),
    };
    ExitCode::from(code as u8)
}

fn configure_threads() {
    let Ok(v) = std::env::var("IO_RECOVER_THREADS") else {
        return;
    };
    match v.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("warning: IO_RECOVER_THREADS ignored: {e}");
            }
        }
        _ => eprintln!("warning: IO_RECOVER_THREADS must be a positive integer, got `{v}`"),
    }
}

fn input_error(path: &Path, e: &InputError) -> i32 {
    eprintln!("error: {}: {e}", path.display());
    exit::INPUT
}

/// Assumption number of "x̂ satisfies Ax̂ ≥ b".
const NOMINAL_FEASIBILITY: u8 = 7;

/// Reads and validates a problem file, printing assumption warnings.
fn load(path: &Path) -> Result<(ModelKind, InverseInstance), i32> {
    let pf: ProblemFile = file::read(path).map_err(|e| input_error(path, &e))?;
    let inst = pf.to_instance().map_err(|e| input_error(path, &e))?;
    let report = validate(
        &inst.problem,
        &inst.x_hat,
        &inst.structure,
        pf.model,
        inst.omega.as_ref(),
        inst.prior.as_ref(),
    )
    .map_err(|e| input_error(path, &e.into()))?;
    for c in &report.checks {
        let tag = match c.outcome {
            CheckOutcome::Pass => continue,
            CheckOutcome::Warn => "warning",
            CheckOutcome::Fail if c.id == NOMINAL_FEASIBILITY => "infeasible",
            CheckOutcome::Fail => "error",
        };
        let rows: Vec<String> = c.rows.iter().map(|r| r.to_string()).collect();
        eprintln!("{tag}: assumption {} (rows {}): {}", c.id, rows.join(", "), c.detail);
    }
    let failed: Vec<u8> = report
        .checks
        .iter()
        .filter(|c| c.outcome == CheckOutcome::Fail)
        .map(|c| c.id)
        .collect();
    match failed.as_slice() {
        [] => {}
        // An observation outside the nominal region cannot be made optimal
        // by any imputation.
        [NOMINAL_FEASIBILITY] => return Err(exit::INFEASIBLE),
        _ => return Err(exit::INPUT),
    }
    Ok((pf.model, inst))
}

fn solver_error(e: &Error) -> i32 {
    match e {
        Error::Infeasible { .. }
        | Error::NominalInfeasible { .. }
        | Error::EmptyThetaOmega
        | Error::EmptyIhat
        | Error::UnboundedGap { .. } => {
            eprintln!("infeasible: {e}");
            exit::INFEASIBLE
        }
        _ => {
            eprintln!("error: {e}");
            exit::INPUT
        }
    }
}

fn write_or_report<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), i32> {
    file::write(path, value).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        exit::INPUT
    })
}

fn run_solve(input: &Path, output: &Path) -> i32 {
    let (model, inst) = match load(input) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let sol = match solve(model, &inst) {
        Ok(s) => s,
        Err(e) => return solver_error(&e),
    };
    let report = check_certificate(&inst, &sol);
    if !report.is_valid() {
        eprintln!("warning: certificate check: {:?}", report.verdict);
    }
    let doc = SolutionFile {
        schema_version: SCHEMA_VERSION.into(),
        solution: sol,
        certificate_report: report,
    };
    if let Err(code) = write_or_report(output, &doc) {
        return code;
    }
    let sol = &doc.solution;
    eprintln!(
        "{}: {:?}, i* = {}, objective {}",
        model,
        sol.status,
        sol.active_index(),
        sol.objective_value
    );
    match sol.status {
        SolveStatus::Optimal => exit::OK,
        SolveStatus::TrivialDetected => {
            eprintln!("trivial: cost or a constraint row vanishes; try one of");
            for r in &sol.remediation {
                eprintln!("remediation: {r}");
            }
            exit::TRIVIAL
        }
        SolveStatus::Infeasible | SolveStatus::UnboundedGap => exit::INFEASIBLE,
    }
}

fn run_demo(id: u8) -> i32 {
    match demo::run(id) {
        Ok(report) => {
            print!("{}", report.render());
            let bad: Vec<&str> = report.mismatches().map(|l| l.label.as_str()).collect();
            if bad.is_empty() {
                exit::OK
            } else {
                eprintln!("mismatch: {}", bad.join(", "));
                exit::CHECK_FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit::INPUT
        }
    }
}

fn run_verify(input: &Path, solution: &Path) -> i32 {
    let (model, inst) = match load(input) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let doc: SolutionFile = match file::read(solution) {
        Ok(d) => d,
        Err(e) => return input_error(solution, &e),
    };
    if doc.solution.model != model {
        eprintln!(
            "error: solution is for {}, problem file says {model}",
            doc.solution.model
        );
        return exit::INPUT;
    }
    let report = check_certificate(&inst, &doc.solution);
    for (group, r) in &report.residuals {
        println!("{:<14} {r:.3e}", group.as_str());
    }
    if report.cost_is_zero {
        println!("cost vector is zero");
    }
    if !report.zero_rows.is_empty() {
        let rows: Vec<String> = report.zero_rows.iter().map(|r| r.to_string()).collect();
        println!("vanishing rows: {}", rows.join(", "));
    }
    match report.verdict {
        io_recover::Verdict::Valid => {
            println!("valid");
            exit::OK
        }
        io_recover::Verdict::Invalid { group, residual } => {
            println!("invalid: {} residual {residual:.3e}", group.as_str());
            exit::CHECK_FAILED
        }
    }
}

fn run_regions(input: &Path, solution: Option<&Path>, bbox: [f64; 4], output: &Path) -> i32 {
    let (model, inst) = match load(input) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let sol = match solution {
        Some(p) => match file::read::<SolutionFile>(p) {
            Ok(d) if d.solution.model == model => Some(d.solution),
            Ok(d) => {
                eprintln!("error: solution is for {}, problem file says {model}", d.solution.model);
                return exit::INPUT;
            }
            Err(e) => return input_error(p, &e),
        },
        None => None,
    };
    let polylines = match regions(&inst, sol.as_ref(), bbox) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return exit::INPUT;
        }
    };
    let doc = RegionsFile {
        schema_version: SCHEMA_VERSION.into(),
        bbox,
        polylines,
    };
    match write_or_report(output, &doc) {
        Ok(()) => exit::OK,
        Err(code) => code,
    }
}
