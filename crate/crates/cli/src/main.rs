use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use hamforge::compiler::{compile, history_state, CompileOptions, PostCoupling};
use hamforge::experiment::{run_scaling, ExperimentConfig, MethodChoice};
use hamforge::mtx::{read_matrix_market_file, write_hamiltonian};
use hamforge::simulator::{certify, check_tame, run, StateVector, TameConfig, DEFAULT_TAME_TOL};
use hamforge::spectral::{
    eigen_spectrum, smallest_nonzero, verify_kernel, Method, SpectrumOptions,
};
use hamforge::{parse_circuit, Circuit, Error, Family};

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_AMBIGUOUS: u8 = 2;
const EXIT_NOT_TAME: u8 = 3;
const EXIT_USAGE: u8 = 64;
const EXIT_DATA: u8 = 65;
const EXIT_IO: u8 = 74;

#[derive(Parser)]
#[command(
    name = "hamforge",
    version,
    about = "Clock Hamiltonians for post-selected quantum circuits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a circuit file.
    Parse {
        file: PathBuf,
        /// Print the normalized circuit text instead of a summary.
        #[arg(long)]
        canonical: bool,
    },
    /// Simulate a circuit on a proof state.
    Simulate {
        file: PathBuf,
        #[command(flatten)]
        proof: ProofArg,
        #[arg(long)]
        json: bool,
    },
    /// Check that every post-selection probability is proof-independent.
    Tame {
        file: PathBuf,
        #[arg(long, default_value_t = 16)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_TAME_TOL)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compile a circuit to a Matrix Market Hamiltonian plus JSON sidecar.
    Compile {
        file: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        terms: TermArgs,
    },
    /// Spectrum of a Matrix Market Hamiltonian.
    Spectrum {
        file: PathBuf,
        #[arg(long, conflicts_with = "iterative")]
        dense: bool,
        #[arg(long)]
        iterative: bool,
        /// Number of lowest eigenvalues for the iterative solver.
        #[arg(long, default_value_t = 12)]
        k: usize,
        /// Kernel threshold relative to the spectral norm.
        #[arg(long, default_value_t = 1e-10)]
        kernel_tol: f64,
    },
    /// Tameness, kernel membership of the history state and term norms.
    Verify {
        file: PathBuf,
        #[command(flatten)]
        proof: ProofArg,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[command(flatten)]
        terms: TermArgs,
        #[arg(long)]
        json: bool,
    },
    /// Emit a benchmark family instance.
    Family {
        #[arg(long)]
        kind: FamilyArg,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Emit::Circuit)]
        emit: Emit,
        /// Output path; required for `--emit hamiltonian`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Gap-scaling sweep with CSV, JSON fits and SVG plot.
    Scaling {
        #[arg(long)]
        family: FamilyArg,
        /// Inclusive range `a..b`, or a single value.
        #[arg(long, value_parser = parse_range)]
        n: (u32, u32),
        #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
        method: MethodArg,
        #[arg(long, default_value_t = 1e-10)]
        kernel_tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Record wall-clock time per instance in the CSV.
        #[arg(long)]
        timing: bool,
        #[arg(long)]
        threads: Option<usize>,
    },
}

#[derive(Args)]
struct ProofArg {
    /// Proof state: a label such as `0+1`, or JSON amplitudes. Defaults to
    /// all zeros.
    #[arg(long)]
    proof: Option<String>,
}

#[derive(Args)]
struct TermArgs {
    /// Add the ancilla input penalty.
    #[arg(long)]
    input: bool,
    /// Add the output-qubit penalty.
    #[arg(long)]
    output: bool,
    /// Use the `−N·√p` post-selection coupling instead of `−N/√p`.
    #[arg(long)]
    literal_paper: bool,
}

impl TermArgs {
    fn options(&self) -> CompileOptions {
        CompileOptions {
            include_input: self.input,
            include_output: self.output,
            coupling: if self.literal_paper {
                PostCoupling::SqrtP
            } else {
                PostCoupling::Exact
            },
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    F1,
    F2,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::F1 => Family::F1,
            FamilyArg::F2 => Family::F2,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Emit {
    Circuit,
    Hamiltonian,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Auto,
    Dense,
    Iterative,
}

fn parse_range(s: &str) -> Result<(u32, u32), String> {
    let parse = |t: &str| {
        t.trim()
            .parse::<u32>()
            .map_err(|_| format!("invalid integer `{t}`"))
    };
    match s.split_once("..") {
        Some((a, b)) => Ok((parse(a)?, parse(b.strip_prefix('=').unwrap_or(b))?)),
        None => parse(s).map(|n| (n, n)),
    }
}

/// A failure carrying its exit status.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Parse(_)
            | Error::InvalidCircuit(_)
            | Error::InvalidState(_)
            | Error::NotNormalized(_)
            | Error::DimensionMismatch { .. }
            | Error::MatrixMarket(_)
            | Error::Json(_)
            | Error::Csv(_)
            | Error::MissingOutputQubit => EXIT_DATA,
            Error::NotTame(_) | Error::TamenessRequired(_) => EXIT_NOT_TAME,
            Error::AmbiguousKernelEdge { .. } => EXIT_AMBIGUOUS,
            Error::Io(_) => EXIT_IO,
            _ => EXIT_CHECK_FAILED,
        };
        Failure::new(code, e.to_string())
    }
}

type CmdResult = Result<u8, Failure>;

fn load(path: &Path) -> Result<Circuit, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", path.display())))?;
    parse_circuit(&text).map_err(|e| Failure::new(EXIT_DATA, format!("{}: {e}", path.display())))
}

fn proof_state(c: &Circuit, arg: &ProofArg) -> Result<StateVector, Failure> {
    let n = c.register.n_proof();
    let state = match &arg.proof {
        Some(spec) => StateVector::from_spec(spec)?,
        None => StateVector::zero(n),
    };
    if state.n_qubits() != n {
        return Err(Failure::new(
            EXIT_DATA,
            format!(
                "proof state has {} qubits, circuit expects {n}",
                state.n_qubits()
            ),
        ));
    }
    Ok(state)
}

fn print_json(value: &serde_json::Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("JSON values serialize")
    );
}

fn tame_and_certify(c: &Circuit, seed: u64) -> Result<Circuit, Failure> {
    let report = check_tame(
        c,
        &TameConfig {
            seed,
            ..TameConfig::default()
        },
    );
    Ok(certify(c, &report)?)
}

fn cmd_parse(file: &Path, canonical: bool) -> CmdResult {
    let c = load(file)?;
    if canonical {
        print!("{}", c.to_text());
    } else {
        let roles: Vec<String> = c
            .register
            .roles()
            .iter()
            .map(|r| format!("{r:?}").to_lowercase())
            .collect();
        print_json(&json!({
            "name": c.name,
            "n_qubits": c.n_qubits(),
            "n_steps": c.n_steps(),
            "n_measurements": c.measurements().count(),
            "roles": roles,
            "output_qubit": c.output_qubit,
            "valid": true,
        }));
    }
    Ok(0)
}

fn cmd_simulate(file: &Path, proof: &ProofArg, as_json: bool) -> CmdResult {
    let c = load(file)?;
    let proof = proof_state(&c, proof)?;
    let t = run(&c, &proof)?;
    if as_json {
        print_json(&t.to_json());
    } else {
        for (step, p) in t.measure_steps.iter().zip(&t.step_probs) {
            println!("step {step}: p = {p:.12}");
        }
        println!("joint_prob = {:.12}", t.joint_prob);
    }
    Ok(0)
}

fn cmd_tame(file: &Path, samples: usize, tol: f64, seed: u64) -> CmdResult {
    let c = load(file)?;
    let report = check_tame(
        &c,
        &TameConfig {
            n_samples: samples,
            tol,
            seed,
        },
    );
    print_json(&report.to_json());
    if report.is_tame {
        Ok(0)
    } else {
        eprintln!("hamforge: circuit is not tame");
        Ok(EXIT_NOT_TAME)
    }
}

fn cmd_compile(file: &Path, out: &Path, terms: &TermArgs) -> CmdResult {
    let c = tame_and_certify(&load(file)?, 0)?;
    let h = compile(&c, &terms.options())?;
    write_hamiltonian(&h, out)?;
    eprintln!(
        "wrote {} ({}x{}, {} stored entries) and {}",
        out.display(),
        h.dim(),
        h.dim(),
        h.total().nnz(),
        out.with_extension("json").display()
    );
    Ok(0)
}

fn cmd_spectrum(file: &Path, iterative: bool, k: usize, kernel_tol: f64) -> CmdResult {
    let h = read_matrix_market_file(file)?;
    let opts = SpectrumOptions {
        method: if iterative {
            Method::Iterative
        } else {
            Method::Dense
        },
        k: Some(k),
        kernel_tol_rel: kernel_tol,
        ..SpectrumOptions::default()
    };
    let report = eigen_spectrum(&h, &opts)?;
    print_json(&report.to_json());
    match smallest_nonzero(&report) {
        Ok(_) | Err(Error::NoNonzeroEigenvalue) => Ok(0),
        Err(e) => {
            eprintln!("hamforge: {e}");
            Ok(EXIT_AMBIGUOUS)
        }
    }
}

fn cmd_verify(
    file: &Path,
    proof: &ProofArg,
    tol: f64,
    terms: &TermArgs,
    as_json: bool,
) -> CmdResult {
    let c = load(file)?;
    let proof = proof_state(&c, proof)?;
    let tame = check_tame(
        &c,
        &TameConfig {
            tol,
            ..TameConfig::default()
        },
    );
    let mut failed: Option<&str> = None;
    let mut residual = None;
    let mut term_norms = Vec::new();
    if !tame.is_tame {
        failed = Some("tameness");
    } else {
        let certified = certify(&c, &tame)?;
        let h = compile(&certified, &terms.options())?;
        let eta = history_state(&certified, &proof, true)?;
        let r = verify_kernel(&h.propagation(), &eta.vector)?;
        residual = Some(r);
        if r > tol {
            failed = Some("kernel_residual");
        }
        term_norms = h
            .terms()
            .iter()
            .map(|t| json!({"label": t.label.to_string(), "norm_bound": t.norm_bound, "max_abs": t.matrix.max_abs()}))
            .collect();
    }
    let summary = json!({
        "tameness": tame.to_json(),
        "step_probs": tame.step_probs,
        "kernel_residual": residual,
        "terms": term_norms,
        "tol": tol,
        "pass": failed.is_none(),
        "failed_check": failed,
    });
    if as_json {
        print_json(&summary);
    } else {
        println!(
            "tame: {} (spread {:.3e}, gram residual {:.3e})",
            tame.is_tame, tame.max_prob_deviation, tame.unitarity_residual
        );
        for (k, p) in tame.measure_steps.iter().zip(&tame.step_probs) {
            println!("step {k}: p = {p:.12}");
        }
        if let Some(r) = residual {
            println!("history state residual: {r:.3e}");
        }
        for t in &term_norms {
            println!(
                "{}: norm <= {}",
                t["label"].as_str().unwrap_or(""),
                t["norm_bound"]
            );
        }
    }
    match failed {
        None => Ok(0),
        Some(check) => {
            eprintln!("hamforge: check failed: {check}");
            Ok(EXIT_CHECK_FAILED)
        }
    }
}

fn cmd_family(kind: FamilyArg, n: usize, emit: Emit, out: Option<&Path>) -> CmdResult {
    let c = Family::from(kind)
        .circuit(n)
        .map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
    match emit {
        Emit::Circuit => {
            let text = c.to_text();
            match out {
                Some(path) => fs::write(path, text).map_err(Error::from)?,
                None => {
                    let mut stdout = std::io::stdout().lock();
                    stdout.write_all(text.as_bytes()).map_err(Error::from)?;
                }
            }
        }
        Emit::Hamiltonian => {
            let out =
                out.ok_or_else(|| Failure::new(EXIT_USAGE, "--emit hamiltonian requires --out"))?;
            let h = compile(&tame_and_certify(&c, 0)?, &CompileOptions::propagation())?;
            write_hamiltonian(&h, out)?;
        }
    }
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_scaling(
    family: FamilyArg,
    (a, b): (u32, u32),
    method: MethodArg,
    kernel_tol: f64,
    seed: u64,
    out_dir: PathBuf,
    timing: bool,
    threads: Option<usize>,
) -> CmdResult {
    if b < a || a == 0 {
        return Err(Failure::new(
            EXIT_USAGE,
            format!("empty or invalid range {a}..{b}"),
        ));
    }
    let cfg = ExperimentConfig {
        method: match method {
            MethodArg::Auto => MethodChoice::Auto,
            MethodArg::Dense => MethodChoice::Dense,
            MethodArg::Iterative => MethodChoice::Iterative,
        },
        kernel_tol,
        seed,
        record_timing: timing,
        threads,
        ..ExperimentConfig::new(family.into(), a..=b, out_dir)
    };
    let outcome = run_scaling(&cfg)?;
    for w in &outcome.warnings {
        eprintln!("hamforge: warning: {w}");
    }
    let choice = &outcome.choice;
    println!(
        "{} n = {a}..{b}: selected {} (rmse ratio {})",
        cfg.family,
        choice.selected,
        choice
            .rmse_ratio
            .map_or("n/a".into(), |r| format!("{r:.4}"))
    );
    for fit in [&choice.exponential, &choice.quadratic]
        .into_iter()
        .flatten()
    {
        println!(
            "  {}: params [{:.6}, {:.6}, {:.6}], r2 {:.6}, rmse {:.6e}",
            fit.model, fit.params[0], fit.params[1], fit.params[2], fit.r_squared, fit.rmse
        );
    }
    println!(
        "wrote {}, {}, {}",
        outcome.csv_path.display(),
        outcome.json_path.display(),
        outcome.svg_path.display()
    );
    if outcome.ambiguous() {
        eprintln!(
            "hamforge: some instances have an eigenvalue at the kernel threshold; rows flagged"
        );
        return Ok(EXIT_AMBIGUOUS);
    }
    Ok(0)
}

fn dispatch(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Parse { file, canonical } => cmd_parse(&file, canonical),
        Command::Simulate { file, proof, json } => cmd_simulate(&file, &proof, json),
        Command::Tame {
            file,
            samples,
            tol,
            seed,
        } => cmd_tame(&file, samples, tol, seed),
        Command::Compile { file, out, terms } => cmd_compile(&file, &out, &terms),
        Command::Spectrum {
            file,
            dense: _,
            iterative,
            k,
            kernel_tol,
        } => cmd_spectrum(&file, iterative, k, kernel_tol),
        Command::Verify {
            file,
            proof,
            tol,
            terms,
            json,
        } => cmd_verify(&file, &proof, tol, &terms, json),
        Command::Family { kind, n, emit, out } => cmd_family(kind, n, emit, out.as_deref()),
        Command::Scaling {
            family,
            n,
            method,
            kernel_tol,
            seed,
            out_dir,
            timing,
            threads,
        } => cmd_scaling(
            family, n, method, kernel_tol, seed, out_dir, timing, threads,
        ),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("hamforge: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
