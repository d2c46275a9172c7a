//! Trace replay under a transmission policy, with energy accounting.
//!
//! Replay walks packets in trace order. For each packet whose payload is
//! approximable the policy picks what happens to the configured LSB range;
//! everything else ships at full power. Laser energy integrates the
//! commanded optical power over the packet's data cycles, tuning energy
//! integrates the path's ring-heater power, and electrical overheads are
//! flat per-event constants.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fpapprox::{ApproxMode, ApproxSpec, MAX_APPROX_BITS};
use crate::laser::{dbm_to_mw, decide_mode, LaserBudget, LsbMode, Mode, TransmitPlan};
use crate::photonics::{
    build_all_loss_tables, find_path, tuning_power_mw, LinkPath, LossParameters, LossTable,
};
use crate::signaling::{ChannelOutcome, SchemeKind, SignalingScheme};
use crate::trace::{Packet, PacketKind};

pub const DEFAULT_CLOCK_GHZ: f64 = 5.0;

/// Flat electrical energy constants. The lookup figure corresponds to a
/// 0.06 mW table engine active for one 0.2 ns cycle; the router and
/// gateway-interface figures default to zero and exist so a calibrated
/// model can be dropped in. All three are placeholders, not measurements.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElectricalCosts {
    pub table_lookup_pj_per_packet: f64,
    pub router_pj_per_word: f64,
    pub gwi_pj_per_word: f64,
}

impl Default for ElectricalCosts {
    fn default() -> Self {
        ElectricalCosts {
            table_lookup_pj_per_packet: 0.012,
            router_pj_per_word: 0.0,
            gwi_pj_per_word: 0.0,
        }
    }
}

/// Fixed simulation knobs independent of the policy under test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub clock_ghz: f64,
    /// Receiver-selection phase per packet: latency and energy.
    pub selection_cycles: u64,
    pub selection_energy_pj: f64,
    pub electrical: ElectricalCosts,
    /// Whether the PAM4 level multiplier also raises full-power wavelengths
    /// (true) or only the reduced LSB ones (false).
    pub pam4_multiplier_on_msb: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            clock_ghz: DEFAULT_CLOCK_GHZ,
            selection_cycles: 1,
            selection_energy_pj: 0.0,
            electrical: ElectricalCosts::default(),
            pam4_multiplier_on_msb: true,
        }
    }
}

impl SimConfig {
    pub fn cycle_ns(&self) -> f64 {
        1.0 / self.clock_ghz
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    /// Every bit at full power, no approximation.
    Baseline,
    /// Approximable LSBs always dropped, never sent reduced.
    TruncationOnly,
    /// Prior-work fixed rule: 16 LSBs at 20% power to every destination,
    /// recoverable or not.
    FixedPrior,
    /// Loss-aware reduce-or-truncate decision per destination, OOK link.
    LossAwareOok,
    /// Loss-aware decision on a PAM4 link.
    LossAwarePam4,
}

impl Policy {
    pub const ALL: [Policy; 5] = [
        Policy::Baseline,
        Policy::TruncationOnly,
        Policy::FixedPrior,
        Policy::LossAwareOok,
        Policy::LossAwarePam4,
    ];

    pub fn scheme_kind(&self) -> SchemeKind {
        match self {
            Policy::LossAwarePam4 => SchemeKind::Pam4,
            _ => SchemeKind::Ook,
        }
    }
}

impl std::fmt::Display for Policy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Policy::Baseline => "baseline",
            Policy::TruncationOnly => "truncation",
            Policy::FixedPrior => "fixed-prior",
            Policy::LossAwareOok => "loss-aware-ook",
            Policy::LossAwarePam4 => "loss-aware-pam4",
        })
    }
}

impl std::str::FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Policy::Baseline),
            "truncation" => Ok(Policy::TruncationOnly),
            "fixed-prior" => Ok(Policy::FixedPrior),
            "loss-aware-ook" => Ok(Policy::LossAwareOok),
            "loss-aware-pam4" => Ok(Policy::LossAwarePam4),
            other => Err(Error::Config(format!("unknown policy '{other}'"))),
        }
    }
}

pub const FIXED_PRIOR_BITS: u32 = 16;
pub const FIXED_PRIOR_REDUCTION: f64 = 0.8;

/// A policy plus its approximation knobs, normalized so each policy carries
/// exactly the knobs it uses.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub policy: Policy,
    pub num_approx_bits: u32,
    pub reduction_fraction: f64,
}

impl PolicyConfig {
    pub fn new(policy: Policy, num_approx_bits: u32, reduction_fraction: f64) -> Result<Self> {
        if num_approx_bits > MAX_APPROX_BITS {
            return Err(Error::LsbCountOutOfRange(num_approx_bits));
        }
        if !(0.0..=1.0).contains(&reduction_fraction) {
            return Err(Error::InvalidReductionFraction(reduction_fraction));
        }
        match policy {
            Policy::Baseline => Ok(PolicyConfig {
                policy,
                num_approx_bits: 0,
                reduction_fraction: 0.0,
            }),
            // Truncation gates the LSB wavelengths entirely off.
            Policy::TruncationOnly => Ok(PolicyConfig {
                policy,
                num_approx_bits,
                reduction_fraction: 1.0,
            }),
            Policy::FixedPrior => {
                if num_approx_bits != FIXED_PRIOR_BITS
                    || reduction_fraction != FIXED_PRIOR_REDUCTION
                {
                    return Err(Error::Config(format!(
                        "fixed-prior is pinned to {FIXED_PRIOR_BITS} LSBs at reduction {FIXED_PRIOR_REDUCTION}"
                    )));
                }
                Ok(PolicyConfig {
                    policy,
                    num_approx_bits,
                    reduction_fraction,
                })
            }
            Policy::LossAwareOok | Policy::LossAwarePam4 => Ok(PolicyConfig {
                policy,
                num_approx_bits,
                reduction_fraction,
            }),
        }
    }

    pub fn baseline() -> Self {
        PolicyConfig {
            policy: Policy::Baseline,
            num_approx_bits: 0,
            reduction_fraction: 0.0,
        }
    }

    pub fn fixed_prior() -> Self {
        PolicyConfig {
            policy: Policy::FixedPrior,
            num_approx_bits: FIXED_PRIOR_BITS,
            reduction_fraction: FIXED_PRIOR_REDUCTION,
        }
    }

    pub fn scheme(&self) -> SignalingScheme {
        SignalingScheme::for_kind(self.policy.scheme_kind())
    }
}

/// Total commanded optical power (mW) for one word under a plan:
/// full level on the MSB wavelengths, and on the approximated ones either
/// the reduced level or nothing at all.
pub fn commanded_power_mw(plan: &TransmitPlan, scheme: &SignalingScheme, n_lambda: u32) -> f64 {
    let approx_lambdas = scheme.approx_lambda_count(plan.num_approx_bits);
    let msb_lambdas = n_lambda.saturating_sub(approx_lambdas);
    let msb = f64::from(msb_lambdas) * dbm_to_mw(plan.msb_power_per_lambda_dbm);
    let lsb = match plan.lsb_mode {
        LsbMode::Truncated => 0.0,
        LsbMode::ReducedPower { power_dbm } => f64::from(approx_lambdas) * dbm_to_mw(power_dbm),
    };
    msb + lsb
}

/// Running energy totals. Components accumulate independently; the total is
/// always their sum.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub laser_pj: f64,
    pub tuning_pj: f64,
    pub electrical_pj: f64,
    pub bits_transferred: u64,
    pub cycles: u64,
}

impl EnergyLedger {
    pub fn total_pj(&self) -> f64 {
        self.laser_pj + self.tuning_pj + self.electrical_pj
    }

    pub fn energy_per_bit_pj(&self) -> f64 {
        if self.bits_transferred == 0 {
            0.0
        } else {
            self.total_pj() / self.bits_transferred as f64
        }
    }
}

/// How one packet's approximable range was handled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferMode {
    Full,
    Truncated,
    ReducedPower,
}

/// Per-packet accounting, kept for audits and tests.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PacketStats {
    pub seq: u64,
    pub mode: TransferMode,
    pub commanded_power_mw: f64,
    pub laser_pj: f64,
    pub tuning_pj: f64,
    pub electrical_pj: f64,
    pub data_cycles: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimReport {
    pub policy: String,
    pub scheme: String,
    pub packets: u64,
    pub words: u64,
    pub approximable_packets: u64,
    pub full_packets: u64,
    pub truncated_packets: u64,
    pub reduced_packets: u64,
    pub cycles: u64,
    pub bits_transferred: u64,
    pub laser_energy_pj: f64,
    pub tuning_energy_pj: f64,
    pub electrical_energy_pj: f64,
    pub total_energy_pj: f64,
    pub mean_laser_power_mw: f64,
    pub energy_per_bit_pj: f64,
}

impl SimReport {
    pub const CSV_HEADER: &'static str = "policy,scheme,packets,words,approximable_packets,full_packets,truncated_packets,reduced_packets,cycles,bits_transferred,laser_energy_pj,tuning_energy_pj,electrical_energy_pj,total_energy_pj,mean_laser_power_mw,energy_per_bit_pj";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.policy,
            self.scheme,
            self.packets,
            self.words,
            self.approximable_packets,
            self.full_packets,
            self.truncated_packets,
            self.reduced_packets,
            self.cycles,
            self.bits_transferred,
            self.laser_energy_pj,
            self.tuning_energy_pj,
            self.electrical_energy_pj,
            self.total_energy_pj,
            self.mean_laser_power_mw,
            self.energy_per_bit_pj,
        )
    }
}

#[derive(Debug)]
pub struct SimOutput {
    pub packets: Vec<Packet>,
    pub per_packet: Vec<PacketStats>,
    pub ledger: EnergyLedger,
    pub report: SimReport,
}

struct SourceState {
    table: LossTable,
    budget: LaserBudget,
}

/// Replays `trace` under one policy and returns the mutated trace plus the
/// energy ledger and summary report.
pub fn simulate_trace(
    trace: &[Packet],
    topology: &[LinkPath],
    params: &LossParameters,
    scheme: &SignalingScheme,
    policy: &PolicyConfig,
    sim: &SimConfig,
) -> Result<SimOutput> {
    if scheme.kind != policy.policy.scheme_kind() {
        return Err(Error::Config(format!(
            "policy {} runs on a {} link, got {}",
            policy.policy,
            policy.policy.scheme_kind(),
            scheme.kind
        )));
    }
    let tables = build_all_loss_tables(topology, params)?;
    let mut sources: BTreeMap<String, SourceState> = BTreeMap::new();
    for (name, table) in tables {
        let worst = match table.worst_case_loss_db() {
            Some(w) => w,
            None => continue,
        };
        let budget =
            LaserBudget::sized_for(worst, params, scheme.n_lambda, policy.reduction_fraction)?;
        sources.insert(name, SourceState { table, budget });
    }

    let cycle_ns = sim.cycle_ns();
    let mut ledger = EnergyLedger::default();
    let mut out_packets = Vec::with_capacity(trace.len());
    let mut per_packet = Vec::with_capacity(trace.len());
    let mut counts = (0u64, 0u64, 0u64); // full, truncated, reduced
    let mut words_total = 0u64;
    let mut approximable_packets = 0u64;

    for packet in trace {
        let state = sources.get(&packet.src).ok_or_else(|| Error::Packet {
            seq: packet.seq,
            reason: format!("unknown source node '{}'", packet.src),
        })?;
        let dest_loss = state
            .table
            .loss_to(&packet.dst)
            .map_err(|_| Error::Packet {
                seq: packet.seq,
                reason: format!("no path from '{}' to '{}'", packet.src, packet.dst),
            })?;
        let path =
            find_path(topology, &packet.src, &packet.dst).expect("loss table entry has a path");

        let approximable = packet.approximable && packet.kind == PacketKind::Float;
        if approximable {
            approximable_packets += 1;
        }
        let spec = if !approximable || policy.policy == Policy::Baseline {
            ApproxSpec::exact()
        } else {
            match policy.policy {
                Policy::Baseline => unreachable!(),
                Policy::TruncationOnly => {
                    ApproxSpec::new(policy.num_approx_bits, ApproxMode::Truncate)?
                }
                // Always reduced, even when the destination cannot recover it.
                Policy::FixedPrior => {
                    ApproxSpec::new(policy.num_approx_bits, ApproxMode::ReducedPower)?
                }
                Policy::LossAwareOok | Policy::LossAwarePam4 => {
                    let mode = match decide_mode(dest_loss, &state.budget, scheme, params) {
                        Mode::ReducedPower => ApproxMode::ReducedPower,
                        Mode::Truncated => ApproxMode::Truncate,
                    };
                    ApproxSpec::new(policy.num_approx_bits, mode)?
                }
            }
        };

        let plan = TransmitPlan::build(&state.budget, scheme, spec, sim.pam4_multiplier_on_msb)?;
        let outcome = ChannelOutcome::evaluate(&plan, dest_loss, scheme, params)?;
        let payload: Vec<_> = packet.payload.iter().map(|w| outcome.apply(*w)).collect();

        let mode = match spec.mode() {
            ApproxMode::Exact => TransferMode::Full,
            ApproxMode::Truncate => TransferMode::Truncated,
            ApproxMode::ReducedPower => TransferMode::ReducedPower,
        };
        match mode {
            TransferMode::Full => counts.0 += 1,
            TransferMode::Truncated => counts.1 += 1,
            TransferMode::ReducedPower => counts.2 += 1,
        }

        let data_cycles = packet.payload.len() as u64;
        let commanded = commanded_power_mw(&plan, scheme, scheme.n_lambda);
        let laser_pj = commanded * cycle_ns * data_cycles as f64;
        let tuning_pj = tuning_power_mw(path, params) * cycle_ns * data_cycles as f64;
        let electrical_pj = sim.electrical.table_lookup_pj_per_packet
            + (sim.electrical.router_pj_per_word + sim.electrical.gwi_pj_per_word)
                * data_cycles as f64
            + sim.selection_energy_pj;

        ledger.laser_pj += laser_pj;
        ledger.tuning_pj += tuning_pj;
        ledger.electrical_pj += electrical_pj;
        ledger.cycles += data_cycles + sim.selection_cycles;
        ledger.bits_transferred += 64 * data_cycles;
        words_total += data_cycles;

        per_packet.push(PacketStats {
            seq: packet.seq,
            mode,
            commanded_power_mw: commanded,
            laser_pj,
            tuning_pj,
            electrical_pj,
            data_cycles,
        });
        out_packets.push(Packet {
            payload,
            ..packet.clone()
        });
    }

    let elapsed_ns = ledger.cycles as f64 * cycle_ns;
    let report = SimReport {
        policy: policy.policy.to_string(),
        scheme: scheme.kind.to_string(),
        packets: trace.len() as u64,
        words: words_total,
        approximable_packets,
        full_packets: counts.0,
        truncated_packets: counts.1,
        reduced_packets: counts.2,
        cycles: ledger.cycles,
        bits_transferred: ledger.bits_transferred,
        laser_energy_pj: ledger.laser_pj,
        tuning_energy_pj: ledger.tuning_pj,
        electrical_energy_pj: ledger.electrical_pj,
        total_energy_pj: ledger.total_pj(),
        mean_laser_power_mw: if elapsed_ns > 0.0 {
            ledger.laser_pj / elapsed_ns
        } else {
            0.0
        },
        energy_per_bit_pj: ledger.energy_per_bit_pj(),
    };

    Ok(SimOutput {
        packets: out_packets,
        per_packet,
        ledger,
        report,
    })
}

/// Percentage drop from `base` to `new`; 0 when base is 0.
pub fn pct_reduction(base: f64, new: f64) -> f64 {
    if base == 0.0 {
        0.0
    } else {
        (base - new) / base * 100.0
    }
}

/// Published per-application operating points: LSB counts for a pure
/// truncation policy and (bits, reduction) for the loss-aware ones, each
/// chosen to stay under a 10% output error budget. `float_fraction` is a
/// rough share of float traffic for the synthetic workload generator, an
/// eyeballed mix rather than a measurement.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct AppPreset {
    pub name: &'static str,
    pub truncation_bits: u32,
    pub loss_aware_bits: u32,
    pub loss_aware_reduction: f64,
    pub float_fraction: f64,
}

pub const APP_PRESETS: [AppPreset; 6] = [
    AppPreset {
        name: "blackscholes",
        truncation_bits: 12,
        loss_aware_bits: 32,
        loss_aware_reduction: 0.9,
        float_fraction: 0.55,
    },
    AppPreset {
        name: "canneal",
        truncation_bits: 32,
        loss_aware_bits: 32,
        loss_aware_reduction: 1.0,
        float_fraction: 0.2,
    },
    AppPreset {
        name: "fft",
        truncation_bits: 8,
        loss_aware_bits: 32,
        loss_aware_reduction: 0.5,
        float_fraction: 0.7,
    },
    AppPreset {
        name: "jpeg",
        truncation_bits: 20,
        loss_aware_bits: 24,
        loss_aware_reduction: 0.8,
        float_fraction: 0.15,
    },
    AppPreset {
        name: "sobel",
        truncation_bits: 32,
        loss_aware_bits: 32,
        loss_aware_reduction: 1.0,
        float_fraction: 0.45,
    },
    AppPreset {
        name: "streamcluster",
        truncation_bits: 12,
        loss_aware_bits: 28,
        loss_aware_reduction: 0.8,
        float_fraction: 0.5,
    },
];

pub fn app_preset(name: &str) -> Result<&'static AppPreset> {
    APP_PRESETS
        .iter()
        .find(|p| p.name == name)
        .ok_or_else(|| Error::Config(format!("unknown application '{name}'")))
}

/// Operating points for one five-way policy comparison.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompareSpec {
    pub application: Option<String>,
    pub truncation_bits: u32,
    pub loss_aware_bits: u32,
    pub loss_aware_reduction: f64,
}

impl CompareSpec {
    pub fn for_app(name: &str) -> Result<Self> {
        let preset = app_preset(name)?;
        Ok(CompareSpec {
            application: Some(preset.name.to_string()),
            truncation_bits: preset.truncation_bits,
            loss_aware_bits: preset.loss_aware_bits,
            loss_aware_reduction: preset.loss_aware_reduction,
        })
    }

    pub fn custom(bits: u32, reduction: f64, truncation_bits: u32) -> Self {
        CompareSpec {
            application: None,
            truncation_bits,
            loss_aware_bits: bits,
            loss_aware_reduction: reduction,
        }
    }

    fn policy_configs(&self) -> Result<Vec<PolicyConfig>> {
        Ok(vec![
            PolicyConfig::baseline(),
            PolicyConfig::new(Policy::TruncationOnly, self.truncation_bits, 1.0)?,
            PolicyConfig::fixed_prior(),
            PolicyConfig::new(
                Policy::LossAwareOok,
                self.loss_aware_bits,
                self.loss_aware_reduction,
            )?,
            PolicyConfig::new(
                Policy::LossAwarePam4,
                self.loss_aware_bits,
                self.loss_aware_reduction,
            )?,
        ])
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReductionRow {
    pub variant: String,
    pub versus: String,
    pub laser_power_reduction_pct: f64,
    pub energy_per_bit_reduction_pct: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub application: Option<String>,
    pub results: Vec<SimReport>,
    pub reductions: Vec<ReductionRow>,
}

impl ComparisonReport {
    pub fn result_for(&self, policy: Policy) -> &SimReport {
        self.results
            .iter()
            .find(|r| r.policy == policy.to_string())
            .expect("comparison covers every policy")
    }

    pub fn write_csv<W: Write>(&self, mut writer: W) -> Result<()> {
        writeln!(writer, "{}", SimReport::CSV_HEADER)?;
        for r in &self.results {
            writeln!(writer, "{}", r.csv_row())?;
        }
        Ok(())
    }
}

/// Runs the same trace under all five policies and tabulates savings of the
/// loss-aware variants against the three reference policies.
pub fn compare_policies(
    trace: &[Packet],
    topology: &[LinkPath],
    params: &LossParameters,
    spec: &CompareSpec,
    sim: &SimConfig,
) -> Result<ComparisonReport> {
    let mut results = Vec::new();
    for config in spec.policy_configs()? {
        let scheme = config.scheme();
        let output = simulate_trace(trace, topology, params, &scheme, &config, sim)?;
        results.push(output.report);
    }

    let mut reductions = Vec::new();
    for variant in [Policy::LossAwareOok, Policy::LossAwarePam4] {
        let ours = results
            .iter()
            .find(|r| r.policy == variant.to_string())
            .expect("variant present");
        for versus in [Policy::Baseline, Policy::FixedPrior, Policy::TruncationOnly] {
            let theirs = results
                .iter()
                .find(|r| r.policy == versus.to_string())
                .expect("reference present");
            reductions.push(ReductionRow {
                variant: variant.to_string(),
                versus: versus.to_string(),
                laser_power_reduction_pct: pct_reduction(
                    theirs.mean_laser_power_mw,
                    ours.mean_laser_power_mw,
                ),
                energy_per_bit_reduction_pct: pct_reduction(
                    theirs.energy_per_bit_pj,
                    ours.energy_per_bit_pj,
                ),
            });
        }
    }

    Ok(ComparisonReport {
        application: spec.application.clone(),
        results,
        reductions,
    })
}

pub fn save_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}
