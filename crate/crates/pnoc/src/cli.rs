//! Command-line front end. Subcommands map one-to-one onto the library
//! workflows: size laser budgets, generate traces, replay a trace under one
//! policy, sweep operating points against output quality, and compare the
//! policies head to head.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::laser::{dbm_to_mw, LaserBudget};
use crate::pgm::load_pgm;
use crate::photonics::{build_all_loss_tables, node_names};
use crate::quality::{
    select_config, sensitivity_sweep, synthetic_image, synthetic_vector, Kernel, KernelInput,
    SweepContext,
};
use crate::signaling::{SchemeKind, SignalingScheme};
use crate::simcore::{
    app_preset, compare_policies, save_json, simulate_trace, CompareSpec, Policy, SimReport,
};
use crate::trace::{generate_trace, load_trace, save_trace, DestMode, TraceGenSpec};

#[derive(Parser)]
#[command(
    name = "pnoc",
    version,
    about = "Laser-power simulator for approximate float transfer on photonic NoC links"
)]
pub struct Cli {
    /// Experiment configuration JSON; built-in defaults apply when omitted.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Print per-source loss tables and the laser budgets they imply.
    Budget(BudgetArgs),
    /// Generate a synthetic packet trace.
    Gentrace(GentraceArgs),
    /// Replay a trace under one policy; write the received trace and an
    /// energy report.
    Simulate(SimulateArgs),
    /// Sweep LSB count and power reduction against output quality, then pick
    /// an operating point under the error budget.
    Sweep(SweepArgs),
    /// Run one trace under every policy and tabulate the savings.
    Compare(CompareArgs),
}

#[derive(Args)]
pub struct BudgetArgs {
    /// Restrict output to one source node.
    #[arg(long)]
    pub source: Option<String>,
    /// Also write the tables and budgets as JSON.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct GentraceArgs {
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub packets: u64,
    /// Fraction of packets carrying approximable floats.
    #[arg(long, default_value_t = 0.5)]
    pub float_fraction: f64,
    #[arg(long, default_value_t = 4)]
    pub words: usize,
    #[arg(long, default_value = "round-robin")]
    pub dest_mode: DestMode,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Input trace, one JSON packet per line.
    #[arg(long, value_name = "FILE")]
    pub trace: PathBuf,
    /// Output directory; created if missing.
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub policy: Option<Policy>,
    /// Approximated LSBs per word, overriding the config.
    #[arg(long)]
    pub bits: Option<u32>,
    /// Power reduction fraction, overriding the config.
    #[arg(long)]
    pub reduction: Option<f64>,
}

#[derive(Args)]
pub struct SweepArgs {
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub kernel: Option<Kernel>,
    /// Output error budget in percent, overriding the config.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Transmitting node, overriding the config.
    #[arg(long)]
    pub source: Option<String>,
    /// External kernel input: a PGM image for sobel-edge, a JSON number
    /// array otherwise.
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
}

#[derive(Args)]
pub struct CompareArgs {
    /// Application preset naming the operating points.
    #[arg(long)]
    pub app: String,
    /// Trace to replay; a synthetic one is generated when omitted.
    #[arg(long, value_name = "FILE")]
    pub trace: Option<PathBuf>,
    /// Packet count for the generated trace.
    #[arg(long, default_value_t = 1000)]
    pub packets: u64,
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
}

pub fn run() -> Result<()> {
    let cli = Cli::parse();
    let config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    match &cli.command {
        Command::Budget(args) => budget(&config, args),
        Command::Gentrace(args) => gentrace(&config, args),
        Command::Simulate(args) => simulate(&config, args),
        Command::Sweep(args) => sweep(&config, args),
        Command::Compare(args) => compare(&config, args),
    }
}

#[derive(Serialize)]
struct SchemeBudget {
    scheme: String,
    n_lambda: u32,
    total_dbm: f64,
    total_mw: f64,
    per_lambda_dbm: f64,
}

#[derive(Serialize)]
struct SourceBudget {
    source: String,
    worst_case_loss_db: f64,
    loss_db: BTreeMap<String, f64>,
    budgets: Vec<SchemeBudget>,
}

fn budget(config: &ExperimentConfig, args: &BudgetArgs) -> Result<()> {
    let topology = config.topology()?;
    let params = config.loss_parameters()?;
    let tables = build_all_loss_tables(&topology, &params)?;

    let mut rows = Vec::new();
    for (name, table) in &tables {
        if args.source.as_ref().is_some_and(|only| only != name) {
            continue;
        }
        let Some(worst) = table.worst_case_loss_db() else {
            continue;
        };
        let mut budgets = Vec::new();
        for kind in [SchemeKind::Ook, SchemeKind::Pam4] {
            let scheme = SignalingScheme::for_kind(kind);
            let b = LaserBudget::sized_for(worst, &params, scheme.n_lambda, 0.0)?;
            budgets.push(SchemeBudget {
                scheme: kind.to_string(),
                n_lambda: scheme.n_lambda,
                total_dbm: b.full_power_total_dbm,
                total_mw: dbm_to_mw(b.full_power_total_dbm),
                per_lambda_dbm: b.full_power_per_lambda_dbm,
            });
        }
        rows.push(SourceBudget {
            source: name.clone(),
            worst_case_loss_db: worst,
            loss_db: table.loss_db.clone(),
            budgets,
        });
    }

    if let Some(only) = &args.source {
        if rows.is_empty() && !topology.is_empty() {
            return Err(Error::Config(format!(
                "source '{only}' is not in the topology"
            )));
        }
    }

    for row in &rows {
        println!(
            "source {} (worst-case loss {:.3} dB)",
            row.source, row.worst_case_loss_db
        );
        for (dest, loss) in &row.loss_db {
            println!("  {dest:<12} {loss:>7.3} dB");
        }
        for b in &row.budgets {
            println!(
                "  {:<4} {:>2} wavelengths: total {:.4} dBm ({:.4} mW), per-wavelength {:.4} dBm",
                b.scheme, b.n_lambda, b.total_dbm, b.total_mw, b.per_lambda_dbm
            );
        }
        println!();
    }
    if rows.is_empty() {
        println!("no sources in the topology");
    }

    if let Some(path) = &args.out {
        save_json(&rows, path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn gentrace(config: &ExperimentConfig, args: &GentraceArgs) -> Result<()> {
    let topology = config.topology()?;
    let nodes = node_names(&topology);
    let spec = TraceGenSpec {
        packets: args.packets,
        float_fraction: args.float_fraction,
        words_per_packet: args.words,
        dest_mode: args.dest_mode,
        seed: args.seed.unwrap_or(config.seed),
    };
    let trace = generate_trace(&spec, &nodes)?;
    save_trace(&trace, &args.out)?;
    println!("wrote {} packets to {}", trace.len(), args.out.display());
    Ok(())
}

fn simulate(config: &ExperimentConfig, args: &SimulateArgs) -> Result<()> {
    let topology = config.topology()?;
    let params = config.loss_parameters()?;
    let trace = load_trace(&args.trace)?;

    let mut section = config.policy.clone();
    if let Some(p) = args.policy {
        section.name = p;
    }
    if let Some(b) = args.bits {
        section.num_approx_bits = b;
    }
    if let Some(r) = args.reduction {
        section.reduction_fraction = r;
    }
    let policy = section.build()?;
    let scheme = policy.scheme();

    let out = simulate_trace(&trace, &topology, &params, &scheme, &policy, &config.sim)?;

    std::fs::create_dir_all(&args.out_dir)?;
    let trace_path = args.out_dir.join("trace_out.jsonl");
    save_trace(&out.packets, &trace_path)?;
    let report_path = args.out_dir.join("report.json");
    save_json(&out.report, &report_path)?;
    let csv_path = args.out_dir.join("report.csv");
    std::fs::write(
        &csv_path,
        format!("{}\n{}\n", SimReport::CSV_HEADER, out.report.csv_row()),
    )?;

    let r = &out.report;
    println!("policy {} on a {} link", r.policy, r.scheme);
    println!(
        "packets {} ({} approximable: {} reduced, {} truncated, {} full)",
        r.packets, r.approximable_packets, r.reduced_packets, r.truncated_packets, r.full_packets
    );
    println!(
        "energy: laser {:.4} pJ + tuning {:.4} pJ + electrical {:.4} pJ = {:.4} pJ",
        r.laser_energy_pj, r.tuning_energy_pj, r.electrical_energy_pj, r.total_energy_pj
    );
    println!(
        "mean laser power {:.4} mW, energy per bit {:.6} pJ",
        r.mean_laser_power_mw, r.energy_per_bit_pj
    );
    println!(
        "wrote {}, {}, {}",
        trace_path.display(),
        report_path.display(),
        csv_path.display()
    );
    Ok(())
}

fn load_kernel_input(
    kernel: Kernel,
    config: &ExperimentConfig,
    cli_path: Option<&Path>,
) -> Result<KernelInput> {
    let path = cli_path.or(config.sweep.input_path.as_deref());
    match (kernel, path) {
        (Kernel::SobelEdge, Some(p)) => {
            let img = load_pgm(p)?;
            Ok(KernelInput::Image {
                width: img.width,
                height: img.height,
                pixels: img.pixels,
            })
        }
        (_, Some(p)) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::InputData(format!("{}: {e}", p.display())))?;
            let values: Vec<f64> = serde_json::from_str(&text)
                .map_err(|e| Error::InputData(format!("{}: {e}", p.display())))?;
            Ok(KernelInput::Vector(values))
        }
        (Kernel::SobelEdge, None) => Ok(synthetic_image(
            config.sweep.image_size,
            config.sweep.image_size,
        )),
        (_, None) => Ok(KernelInput::Vector(synthetic_vector(
            config.sweep.vector_len,
            config.seed,
        ))),
    }
}

fn sweep(config: &ExperimentConfig, args: &SweepArgs) -> Result<()> {
    let topology = config.topology()?;
    let params = config.loss_parameters()?;
    let kernel = match args.kernel {
        Some(k) => k,
        None => config.sweep.kernel.parse()?,
    };
    let threshold = args.threshold.unwrap_or(config.threshold_pct);
    let source = args
        .source
        .clone()
        .unwrap_or_else(|| config.sweep.source.clone());
    let input = load_kernel_input(kernel, config, args.input.as_deref())?;

    let ctx = SweepContext {
        topology: &topology,
        params: &params,
        scheme: SignalingScheme::for_kind(config.signaling),
        source,
        pam4_multiplier_on_msb: config.sim.pam4_multiplier_on_msb,
    };
    let surface = sensitivity_sweep(kernel, &input, &config.sweep.grid, &ctx)?;
    let selected = select_config(&surface, threshold, &ctx)?;

    std::fs::create_dir_all(&args.out_dir)?;
    let csv_path = args.out_dir.join("sweep.csv");
    let mut file = std::fs::File::create(&csv_path)?;
    surface.write_csv(&mut file)?;
    let selected_path = args.out_dir.join("selected.json");
    save_json(&selected, &selected_path)?;

    if selected.feasible {
        println!(
            "kernel {}: selected {} LSBs at reduction {:.2} ({:.4}% output error, {:.4} mW mean laser saving)",
            surface.kernel,
            selected.num_approx_bits,
            selected.reduction_fraction,
            selected.percent_error,
            selected.estimated_laser_saving_mw
        );
    } else {
        eprintln!(
            "warning: no grid point stays under {threshold}% output error; keeping exact transfers"
        );
    }
    println!("wrote {}, {}", csv_path.display(), selected_path.display());
    Ok(())
}

fn compare(config: &ExperimentConfig, args: &CompareArgs) -> Result<()> {
    let topology = config.topology()?;
    let params = config.loss_parameters()?;
    let spec = CompareSpec::for_app(&args.app)?;
    let trace = match &args.trace {
        Some(path) => load_trace(path)?,
        None => {
            let preset = app_preset(&args.app)?;
            let gen = TraceGenSpec {
                packets: args.packets,
                float_fraction: preset.float_fraction,
                seed: config.seed,
                ..TraceGenSpec::default()
            };
            generate_trace(&gen, &node_names(&topology))?
        }
    };
    let report = compare_policies(&trace, &topology, &params, &spec, &config.sim)?;

    std::fs::create_dir_all(&args.out_dir)?;
    let json_path = args.out_dir.join("comparison.json");
    save_json(&report, &json_path)?;
    let csv_path = args.out_dir.join("comparison.csv");
    let mut file = std::fs::File::create(&csv_path)?;
    report.write_csv(&mut file)?;

    println!("application {}: {} packets", args.app, trace.len());
    for row in &report.reductions {
        println!(
            "{} vs {}: laser power reduction {:.2}%, energy-per-bit reduction {:.2}%",
            row.variant,
            row.versus,
            row.laser_power_reduction_pct,
            row.energy_per_bit_reduction_pct
        );
    }
    println!("wrote {}, {}", json_path.display(), csv_path.display());
    Ok(())
}
