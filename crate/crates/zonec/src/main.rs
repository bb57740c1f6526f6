use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use zonec::arch::Architecture;
use zonec::blocks::{self, BlockShape};
use zonec::circuit::{parse_circuit, stage_asap, CircuitFormat, StagedCircuit};
use zonec::error::{CompileError, Result};
use zonec::fidelity::HardwareParams;
use zonec::pipeline::{compile_circuit, compile_movement_plan, CompileArtifacts, PipelineOptions};
use zonec::placement::{anneal_initial_placement, plan_all_stages, CompilerConfig};
use zonec::routing::movement_plan_from_stage_plans;
use zonec::zair::{parse_zair, validate_replay};

#[derive(Parser)]
#[command(name = "zonec", version, about = "Compiler for zoned neutral-atom architectures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a circuit to a ZAIR program and a fidelity report.
    Compile(CompileArgs),
    /// Replay a ZAIR program against an architecture and report violations.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct CompileArgs {
    /// Architecture JSON file.
    #[arg(long)]
    arch: PathBuf,
    /// Circuit file (.qasm or .json).
    #[arg(long)]
    circuit: PathBuf,
    /// Circuit format: qasm2 or json-gates (default: by file extension).
    #[arg(long)]
    format: Option<String>,
    /// Write the compiled ZAIR program here.
    #[arg(long)]
    out_zair: Option<PathBuf>,
    /// Write the fidelity report here.
    #[arg(long)]
    out_report: Option<PathBuf>,
    /// Hardware-parameter JSON file (defaults when omitted).
    #[arg(long)]
    hw_params: Option<PathBuf>,
    /// Seed of the annealing RNG.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Iteration limit of the annealing loop.
    #[arg(long, default_value_t = 1000)]
    sa_iters: usize,
    /// Skip simulated annealing (sequential initial placement).
    #[arg(long)]
    no_sa: bool,
    /// Disable qubit reuse between consecutive Rydberg stages.
    #[arg(long)]
    no_reuse: bool,
    /// Return every qubit to its original storage trap.
    #[arg(long)]
    static_placement: bool,
    /// Number of AODs available to the scheduler.
    #[arg(long)]
    aods: Option<usize>,
    /// Logical-block mode: block footprint as RxC, e.g. 2x4.
    #[arg(long)]
    blocks: Option<String>,
    /// Neighbour hops for return-trap candidates.
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Initial candidate radius for gate placement.
    #[arg(long, default_value_t = 2)]
    delta: usize,
    /// Lookahead weight in the return cost.
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    arch: PathBuf,
    #[arg(long)]
    circuit: PathBuf,
    #[arg(long)]
    format: Option<String>,
    /// ZAIR program to replay.
    #[arg(long)]
    zair: PathBuf,
    #[arg(long)]
    hw_params: Option<PathBuf>,
    /// The AOD count the program was compiled with, when it overrode the
    /// architecture file.
    #[arg(long)]
    aods: Option<usize>,
    /// Block footprint when the circuit is block-level (RxC).
    #[arg(long)]
    blocks: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Compile(args) => run_compile(&args),
        Command::Validate(args) => run_validate(&args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| CompileError::Input(format!("{}: {e}", path.display())))
}

fn load_arch(path: &Path) -> Result<Architecture> {
    let arch = Architecture::parse(&read(path)?)?;
    for w in &arch.warnings {
        eprintln!("warning: {w}");
    }
    Ok(arch)
}

fn circuit_format(path: &Path, format: &Option<String>) -> Result<CircuitFormat> {
    match format.as_deref() {
        Some("qasm") | Some("qasm2") => Ok(CircuitFormat::Qasm2Subset),
        Some("json") | Some("json-gates") => Ok(CircuitFormat::JsonGates),
        Some(other) => Err(CompileError::Input(format!("unknown circuit format '{other}'"))),
        None => match path.extension().and_then(|e| e.to_str()) {
            Some("qasm") => Ok(CircuitFormat::Qasm2Subset),
            Some("json") => Ok(CircuitFormat::JsonGates),
            _ => Err(CompileError::Input(
                "cannot infer the circuit format; pass --format".into(),
            )),
        },
    }
}

fn load_staged(path: &Path, format: &Option<String>) -> Result<StagedCircuit> {
    let parsed = parse_circuit(&read(path)?, circuit_format(path, format)?)?;
    stage_asap(parsed.num_qubits, &parsed.gates)
}

fn load_hw(path: &Option<PathBuf>) -> Result<HardwareParams> {
    match path {
        Some(p) => HardwareParams::parse(&read(p)?),
        None => Ok(HardwareParams::default()),
    }
}

fn run_compile(args: &CompileArgs) -> Result<ExitCode> {
    let arch = load_arch(&args.arch)?;
    let circuit = load_staged(&args.circuit, &args.format)?;
    let hw = load_hw(&args.hw_params)?;
    let options = PipelineOptions {
        config: CompilerConfig {
            sa_iteration_limit: args.sa_iters,
            sa_seed: args.seed,
            delta: args.delta,
            k_neighbors: args.k,
            alpha: args.alpha,
            reuse_transfer_discount: CompilerConfig::default_reuse_discount(
                hw.t_tran_us,
                hw.accel_m_s2,
            ),
            reuse_enabled: !args.no_reuse,
            dynamic_placement_enabled: !args.static_placement,
            sa_enabled: !args.no_sa,
        },
        hw,
        num_aods: args.aods,
    };

    let artifacts = match &args.blocks {
        None => compile_circuit(&arch, &circuit, &options)?,
        Some(shape) => compile_blocks(&arch, &circuit, &options, shape)?,
    };

    if let Some(path) = &args.out_zair {
        std::fs::write(path, artifacts.program.serialize_pretty())
            .map_err(|e| CompileError::Input(format!("{}: {e}", path.display())))?;
    }
    if let Some(path) = &args.out_report {
        std::fs::write(path, artifacts.report.serialize_pretty())
            .map_err(|e| CompileError::Input(format!("{}: {e}", path.display())))?;
    }

    if !artifacts.replay.ok() {
        eprintln!(
            "{}",
            serde_json::to_string_pretty(&artifacts.replay.violations).expect("violations")
        );
        return Err(CompileError::Validation(artifacts.replay.violations.len()));
    }

    let r = &artifacts.report;
    println!(
        "fidelity {:.6} (1q {:.6}, 2q+exc {:.6}, transfer {:.6}, decoherence {:.6})",
        r.fidelity.total,
        r.fidelity.factors.one_qubit,
        r.fidelity.factors.two_qubit_excitation,
        r.fidelity.factors.transfer,
        r.fidelity.factors.decoherence
    );
    println!(
        "duration {:.3} us over {} stages; g1 {}, g2 {}, transfers {}, excitations {}",
        r.fidelity.duration_us,
        r.stages.len(),
        r.fidelity.g1,
        r.fidelity.g2,
        r.fidelity.n_tran,
        r.fidelity.n_exc
    );
    println!(
        "bounds: perfect movement {:.6}, perfect placement {:.6}, perfect reuse {:.6}",
        r.bounds.perfect_movement, r.bounds.perfect_placement, r.bounds.perfect_reuse
    );
    Ok(ExitCode::SUCCESS)
}

fn compile_blocks(
    arch: &Architecture,
    block_circuit: &StagedCircuit,
    options: &PipelineOptions,
    shape: &str,
) -> Result<CompileArtifacts> {
    let shape = BlockShape::parse(shape)?;
    let coarsening = blocks::coarsen(arch, shape)?;
    let initial =
        anneal_initial_placement(&coarsening.coarse, block_circuit, &options.config)?;
    let plans =
        plan_all_stages(&coarsening.coarse, block_circuit, &options.config, &initial)?;
    let coarse_plan = movement_plan_from_stage_plans(&initial, &plans);
    let phys_circuit = blocks::expand_circuit(block_circuit, shape);
    let phys_plan = blocks::expand_movement_plan(arch, &coarsening, &coarse_plan)?;
    compile_movement_plan(arch, &phys_circuit, &phys_plan, options)
}

fn run_validate(args: &ValidateArgs) -> Result<ExitCode> {
    let mut arch = load_arch(&args.arch)?;
    if let Some(amended) = zonec::pipeline::amended_architecture(&arch, args.aods)? {
        arch = amended;
    }
    let circuit = {
        let staged = load_staged(&args.circuit, &args.format)?;
        match &args.blocks {
            None => staged,
            Some(shape) => blocks::expand_circuit(&staged, BlockShape::parse(shape)?),
        }
    };
    let hw = load_hw(&args.hw_params)?;
    let program = parse_zair(&read(&args.zair)?)?;
    let report = validate_replay(&program, &arch, &circuit, &hw);
    if report.ok() {
        println!(
            "ok: {} transfers, {} excitations, {} 2Q gates realized",
            report.counters.n_tran, report.counters.n_exc, report.counters.g2
        );
        Ok(ExitCode::SUCCESS)
    } else {
        println!("{}", serde_json::to_string_pretty(&report.violations).expect("violations"));
        Err(CompileError::Validation(report.violations.len()))
    }
}
