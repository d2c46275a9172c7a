//! Output-quality evaluation: percent error, desk-scale application kernels,
//! the (LSB count x power reduction) sensitivity sweep, and operating-point
//! selection under an error budget.
//!
//! The kernels are small stand-ins with the data-flow shape of the workloads
//! they are named for, not ports of them: every input value crosses the
//! simulated link before the computation runs, so error injected by the
//! channel propagates the way remote operands would.

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fpapprox::{ApproxMode, ApproxSpec, FloatWord};
use crate::laser::{decide_mode, LaserBudget, Mode, TransmitPlan};
use crate::photonics::{build_loss_table, LinkPath, LossParameters};
use crate::signaling::{ChannelOutcome, SignalingScheme};
use crate::simcore::commanded_power_mw;

/// Elementwise error denominators below this floor switch to an absolute
/// comparison against the floor itself.
pub const PE_FLOOR: f64 = 1e-12;

/// Percent error of `approx` against `exact`. An exact zero is only matched
/// by an approximate zero; anything else counts as infinite error.
pub fn percent_error(exact: f64, approx: f64) -> f64 {
    if exact == 0.0 {
        return if approx == 0.0 { 0.0 } else { f64::INFINITY };
    }
    (approx - exact).abs() / exact.abs() * 100.0
}

/// Mean elementwise percent error with the small-denominator floor.
pub fn aggregate_percent_error(exact: &[f64], approx: &[f64]) -> f64 {
    assert_eq!(exact.len(), approx.len(), "output lengths must match");
    if exact.is_empty() {
        return 0.0;
    }
    let mut sum = 0.0;
    for (&e, &a) in exact.iter().zip(approx) {
        sum += if e.abs() > PE_FLOOR {
            (a - e).abs() / e.abs() * 100.0
        } else {
            (a - e).abs() / PE_FLOOR * 100.0
        };
    }
    sum / exact.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kernel {
    Identity,
    DotProduct,
    Fft1d,
    SobelEdge,
    StreamMean,
}

impl Kernel {
    pub const ALL: [Kernel; 5] = [
        Kernel::Identity,
        Kernel::DotProduct,
        Kernel::Fft1d,
        Kernel::SobelEdge,
        Kernel::StreamMean,
    ];
}

impl std::fmt::Display for Kernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Kernel::Identity => "identity",
            Kernel::DotProduct => "dot-product",
            Kernel::Fft1d => "fft1d",
            Kernel::SobelEdge => "sobel-edge",
            Kernel::StreamMean => "stream-mean",
        })
    }
}

impl std::str::FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Kernel::Identity),
            "dot-product" => Ok(Kernel::DotProduct),
            "fft1d" => Ok(Kernel::Fft1d),
            "sobel-edge" => Ok(Kernel::SobelEdge),
            "stream-mean" => Ok(Kernel::StreamMean),
            other => Err(Error::Config(format!("unknown kernel '{other}'"))),
        }
    }
}

/// Stand-in kernel for a named application preset.
pub fn kernel_for_app(app: &str) -> Result<Kernel> {
    Ok(match app {
        "blackscholes" => Kernel::DotProduct,
        "canneal" => Kernel::Identity,
        "fft" | "jpeg" => Kernel::Fft1d,
        "sobel" => Kernel::SobelEdge,
        "streamcluster" => Kernel::StreamMean,
        other => return Err(Error::Config(format!("unknown application '{other}'"))),
    })
}

pub const MAX_FFT_LEN: usize = 4096;
pub const MAX_IMAGE_DIM: usize = 512;
pub const STREAM_BLOCK: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub enum KernelInput {
    Vector(Vec<f64>),
    Image {
        width: usize,
        height: usize,
        pixels: Vec<f64>,
    },
}

impl KernelInput {
    pub fn len(&self) -> usize {
        match self {
            KernelInput::Vector(v) => v.len(),
            KernelInput::Image { pixels, .. } => pixels.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn values(&self) -> &[f64] {
        match self {
            KernelInput::Vector(v) => v,
            KernelInput::Image { pixels, .. } => pixels,
        }
    }

    /// Same input shape with every value sent through the channel.
    pub fn transmitted(&self, channel: &Channel) -> KernelInput {
        match self {
            KernelInput::Vector(v) => KernelInput::Vector(channel.transmit(v)),
            KernelInput::Image {
                width,
                height,
                pixels,
            } => KernelInput::Image {
                width: *width,
                height: *height,
                pixels: channel.transmit(pixels),
            },
        }
    }
}

impl Kernel {
    pub fn run(&self, input: &KernelInput) -> Result<Vec<f64>> {
        match (self, input) {
            (Kernel::Identity, KernelInput::Vector(v)) => Ok(v.clone()),
            (Kernel::DotProduct, KernelInput::Vector(v)) => {
                if v.len() < 2 || v.len() % 2 != 0 {
                    return Err(Error::InputData(format!(
                        "dot-product wants an even-length vector, got {}",
                        v.len()
                    )));
                }
                let (a, b) = v.split_at(v.len() / 2);
                Ok(vec![a.iter().zip(b).map(|(x, y)| x * y).sum()])
            }
            (Kernel::Fft1d, KernelInput::Vector(v)) => {
                if v.len() < 2 || v.len() > MAX_FFT_LEN {
                    return Err(Error::InputData(format!(
                        "fft1d wants 2..={MAX_FFT_LEN} samples, got {}",
                        v.len()
                    )));
                }
                let mut buf: Vec<Complex<f64>> = v.iter().map(|&x| Complex::new(x, 0.0)).collect();
                FftPlanner::new()
                    .plan_fft_forward(buf.len())
                    .process(&mut buf);
                Ok(buf.iter().flat_map(|c| [c.re, c.im]).collect())
            }
            (
                Kernel::SobelEdge,
                KernelInput::Image {
                    width,
                    height,
                    pixels,
                },
            ) => {
                if *width < 3 || *height < 3 {
                    return Err(Error::InputData(format!(
                        "sobel-edge wants at least 3x3 pixels, got {width}x{height}"
                    )));
                }
                if *width > MAX_IMAGE_DIM || *height > MAX_IMAGE_DIM {
                    return Err(Error::InputData(format!(
                        "sobel-edge caps at {MAX_IMAGE_DIM}x{MAX_IMAGE_DIM}, got {width}x{height}"
                    )));
                }
                if pixels.len() != width * height {
                    return Err(Error::InputData(format!(
                        "image raster has {} samples, want {}",
                        pixels.len(),
                        width * height
                    )));
                }
                Ok(sobel_magnitudes(*width, *height, pixels))
            }
            (Kernel::StreamMean, KernelInput::Vector(v)) => {
                if v.is_empty() {
                    return Err(Error::InputData(
                        "stream-mean wants a non-empty vector".into(),
                    ));
                }
                Ok(v.chunks(STREAM_BLOCK)
                    .map(|c| c.iter().sum::<f64>() / c.len() as f64)
                    .collect())
            }
            (k, KernelInput::Vector(_)) => {
                Err(Error::InputData(format!("kernel {k} wants an image input")))
            }
            (k, KernelInput::Image { .. }) => {
                Err(Error::InputData(format!("kernel {k} wants a vector input")))
            }
        }
    }
}

fn sobel_magnitudes(width: usize, height: usize, pixels: &[f64]) -> Vec<f64> {
    let at = |x: usize, y: usize| pixels[y * width + x];
    let mut out = Vec::with_capacity((width - 2) * (height - 2));
    for y in 1..height - 1 {
        for x in 1..width - 1 {
            let gx = at(x + 1, y - 1) - at(x - 1, y - 1)
                + 2.0 * (at(x + 1, y) - at(x - 1, y))
                + at(x + 1, y + 1)
                - at(x - 1, y + 1);
            let gy = at(x - 1, y + 1) - at(x - 1, y - 1)
                + 2.0 * (at(x, y + 1) - at(x, y - 1))
                + at(x + 1, y + 1)
                - at(x + 1, y - 1);
            out.push(gx.hypot(gy));
        }
    }
    out
}

/// Deterministic synthetic vector in [0.5, 2.0), away from zero so relative
/// error stays well conditioned.
pub fn synthetic_vector(len: usize, seed: u64) -> Vec<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.gen_range(0.5..2.0)).collect()
}

/// Deterministic synthetic gray image: sine gratings over a gentle ramp.
/// The phases and ramp keep the gradient magnitude bounded away from zero
/// everywhere, so edge percent error has stable denominators.
pub fn synthetic_image(width: usize, height: usize) -> KernelInput {
    let mut pixels = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let fx = x as f64;
            let fy = y as f64;
            let v = 96.0
                + 0.35 * fx
                + 0.21 * fy
                + 28.0 * (std::f64::consts::TAU * fx / 16.0 + 0.4).sin()
                + 24.0 * (std::f64::consts::TAU * fy / 16.0 + 0.8).cos();
            pixels.push(v);
        }
    }
    KernelInput::Image {
        width,
        height,
        pixels,
    }
}

/// Default input for a kernel when the caller supplies none.
pub fn default_input(kernel: Kernel, seed: u64) -> KernelInput {
    match kernel {
        Kernel::SobelEdge => synthetic_image(64, 64),
        Kernel::Fft1d => KernelInput::Vector(synthetic_vector(1024, seed)),
        _ => KernelInput::Vector(synthetic_vector(1024, seed)),
    }
}

/// Link context a sweep runs against: one source cluster transmitting to its
/// destinations in round-robin order.
pub struct SweepContext<'a> {
    pub topology: &'a [LinkPath],
    pub params: &'a LossParameters,
    pub scheme: SignalingScheme,
    pub source: String,
    pub pam4_multiplier_on_msb: bool,
}

impl SweepContext<'_> {
    fn dest_losses(&self) -> Result<Vec<f64>> {
        let table = build_loss_table(self.topology, self.params, &self.source)?;
        if table.loss_db.is_empty() {
            return Err(Error::Config(format!(
                "source '{}' has no destinations in the topology",
                self.source
            )));
        }
        Ok(table.loss_db.values().copied().collect())
    }

    fn worst_loss(&self) -> Result<f64> {
        Ok(self
            .dest_losses()?
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max))
    }

    /// Channel outcomes per destination for a loss-aware (bits, reduction)
    /// operating point.
    fn outcomes(&self, num_lsbs: u32, reduction: f64) -> Result<Vec<ChannelOutcome>> {
        let worst = self.worst_loss()?;
        let budget = LaserBudget::sized_for(worst, self.params, self.scheme.n_lambda, reduction)?;
        self.dest_losses()?
            .into_iter()
            .map(|loss| {
                let mode = match decide_mode(loss, &budget, &self.scheme, self.params) {
                    Mode::ReducedPower => ApproxMode::ReducedPower,
                    Mode::Truncated => ApproxMode::Truncate,
                };
                let spec = ApproxSpec::new(num_lsbs, mode)?;
                let plan =
                    TransmitPlan::build(&budget, &self.scheme, spec, self.pam4_multiplier_on_msb)?;
                ChannelOutcome::evaluate(&plan, loss, &self.scheme, self.params)
            })
            .collect()
    }

    pub fn channel(&self, num_lsbs: u32, reduction: f64) -> Result<Channel> {
        Ok(Channel::Link {
            outcomes: self.outcomes(num_lsbs, reduction)?,
        })
    }

    /// Mean commanded power (mW) across destinations for an operating point,
    /// with per-destination modes from the decision rule.
    pub fn mean_commanded_power_mw(&self, num_lsbs: u32, reduction: f64) -> Result<f64> {
        let worst = self.worst_loss()?;
        let budget = LaserBudget::sized_for(worst, self.params, self.scheme.n_lambda, reduction)?;
        let losses = self.dest_losses()?;
        let mut sum = 0.0;
        for loss in &losses {
            let mode = if num_lsbs == 0 {
                ApproxMode::Exact
            } else {
                match decide_mode(*loss, &budget, &self.scheme, self.params) {
                    Mode::ReducedPower => ApproxMode::ReducedPower,
                    Mode::Truncated => ApproxMode::Truncate,
                }
            };
            let spec = ApproxSpec::new(num_lsbs, mode)?;
            let plan =
                TransmitPlan::build(&budget, &self.scheme, spec, self.pam4_multiplier_on_msb)?;
            sum += commanded_power_mw(&plan, &self.scheme, self.scheme.n_lambda);
        }
        Ok(sum / losses.len() as f64)
    }

    /// Estimated mean laser-power saving (mW) of an operating point against
    /// sending everything at full power.
    pub fn estimated_saving_mw(&self, num_lsbs: u32, reduction: f64) -> Result<f64> {
        let full = self.mean_commanded_power_mw(0, 0.0)?;
        Ok(full - self.mean_commanded_power_mw(num_lsbs, reduction)?)
    }
}

/// Transmission pipe for kernel inputs.
pub enum Channel {
    /// Loopback; values arrive untouched. Used for the exact run.
    Identity,
    /// Threshold channel outcomes cycled over destinations in order.
    Link { outcomes: Vec<ChannelOutcome> },
}

impl Channel {
    pub fn transmit(&self, data: &[f64]) -> Vec<f64> {
        match self {
            Channel::Identity => data.to_vec(),
            Channel::Link { outcomes } => data
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    outcomes[i % outcomes.len()]
                        .apply(FloatWord::from_f64(v))
                        .to_f64()
                })
                .collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct OutputSummary {
    pub elements: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl OutputSummary {
    fn of(values: &[f64]) -> Self {
        let mut mean = 0.0;
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for &v in values {
            mean += v;
            min = min.min(v);
            max = max.max(v);
        }
        if !values.is_empty() {
            mean /= values.len() as f64;
        }
        OutputSummary {
            elements: values.len(),
            mean,
            min,
            max,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QualityReport {
    pub kernel: String,
    pub percent_error: f64,
    pub exact: OutputSummary,
    pub approx: OutputSummary,
}

/// Runs the kernel twice, exact and through the channel, and scores the
/// approximate output against the exact one.
pub fn run_kernel(kernel: Kernel, input: &KernelInput, channel: &Channel) -> Result<QualityReport> {
    let exact_out = kernel.run(input)?;
    let approx_out = kernel.run(&input.transmitted(channel))?;
    Ok(QualityReport {
        kernel: kernel.to_string(),
        percent_error: aggregate_percent_error(&exact_out, &approx_out),
        exact: OutputSummary::of(&exact_out),
        approx: OutputSummary::of(&approx_out),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepGrid {
    pub lsb_counts: Vec<u32>,
    pub reduction_fractions: Vec<f64>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            lsb_counts: (1..=8).map(|i| i * 4).collect(),
            reduction_fractions: (0..=10).map(|i| f64::from(i) / 10.0).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub num_lsbs: u32,
    pub reduction_fraction: f64,
    pub percent_error: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepSurface {
    pub kernel: String,
    pub source: String,
    pub points: Vec<SweepPoint>,
}

/// Percent error across the whole (LSB count x reduction) grid. Points are
/// independent, so they run in parallel; the result order is grid order,
/// LSB-major.
pub fn sensitivity_sweep(
    kernel: Kernel,
    input: &KernelInput,
    grid: &SweepGrid,
    ctx: &SweepContext,
) -> Result<SweepSurface> {
    let exact_out = kernel.run(input)?;
    let cells: Vec<(u32, f64)> = grid
        .lsb_counts
        .iter()
        .flat_map(|&k| grid.reduction_fractions.iter().map(move |&r| (k, r)))
        .collect();
    let points: Result<Vec<SweepPoint>> = cells
        .par_iter()
        .map(|&(num_lsbs, reduction)| {
            let channel = ctx.channel(num_lsbs, reduction)?;
            let approx_out = kernel.run(&input.transmitted(&channel))?;
            Ok(SweepPoint {
                num_lsbs,
                reduction_fraction: reduction,
                percent_error: aggregate_percent_error(&exact_out, &approx_out),
            })
        })
        .collect();
    Ok(SweepSurface {
        kernel: kernel.to_string(),
        source: ctx.source.clone(),
        points: points?,
    })
}

impl SweepSurface {
    pub fn write_csv<W: std::io::Write>(&self, mut writer: W) -> Result<()> {
        writeln!(writer, "num_lsbs,reduction_pct,percent_error")?;
        for p in &self.points {
            writeln!(
                writer,
                "{},{},{}",
                p.num_lsbs,
                p.reduction_fraction * 100.0,
                p.percent_error
            )?;
        }
        Ok(())
    }

    pub fn read_csv<R: std::io::BufRead>(reader: R) -> Result<Vec<SweepPoint>> {
        let mut points = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let text = line?;
            if idx == 0 || text.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = text.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::InputData(format!(
                    "sweep csv line {}: want 3 fields, got {}",
                    idx + 1,
                    fields.len()
                )));
            }
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InputData(format!("sweep csv line {}: {e}", idx + 1)))
            };
            points.push(SweepPoint {
                num_lsbs: parse(fields[0])? as u32,
                reduction_fraction: parse(fields[1])? / 100.0,
                percent_error: parse(fields[2])?,
            });
        }
        Ok(points)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SelectedConfig {
    pub kernel: String,
    pub num_approx_bits: u32,
    pub reduction_fraction: f64,
    pub percent_error: f64,
    pub estimated_laser_saving_mw: f64,
    /// False when no grid point met the error budget and the selection fell
    /// back to no approximation at all.
    pub feasible: bool,
}

/// Picks the operating point with the largest estimated laser saving among
/// points under the error budget. Ties go to more approximated bits, then
/// deeper reduction. Falls back to (0 bits, 0.0) when nothing qualifies.
pub fn select_config(
    surface: &SweepSurface,
    threshold_pct: f64,
    ctx: &SweepContext,
) -> Result<SelectedConfig> {
    let mut best: Option<(f64, SweepPoint)> = None;
    for p in &surface.points {
        if p.percent_error >= threshold_pct {
            continue;
        }
        let saving = ctx.estimated_saving_mw(p.num_lsbs, p.reduction_fraction)?;
        let better = match &best {
            None => true,
            Some((best_saving, best_point)) => (saving, p.num_lsbs, p.reduction_fraction)
                .partial_cmp(&(
                    *best_saving,
                    best_point.num_lsbs,
                    best_point.reduction_fraction,
                ))
                .expect("sweep values are finite")
                .is_gt(),
        };
        if better {
            best = Some((saving, *p));
        }
    }
    Ok(match best {
        Some((saving, p)) => SelectedConfig {
            kernel: surface.kernel.clone(),
            num_approx_bits: p.num_lsbs,
            reduction_fraction: p.reduction_fraction,
            percent_error: p.percent_error,
            estimated_laser_saving_mw: saving,
            feasible: true,
        },
        None => SelectedConfig {
            kernel: surface.kernel.clone(),
            num_approx_bits: 0,
            reduction_fraction: 0.0,
            percent_error: 0.0,
            estimated_laser_saving_mw: 0.0,
            feasible: false,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::photonics::default_clos_topology;

    fn ctx<'a>(topology: &'a [LinkPath], params: &'a LossParameters) -> SweepContext<'a> {
        SweepContext {
            topology,
            params,
            scheme: SignalingScheme::ook(),
            source: "cluster0".into(),
            pam4_multiplier_on_msb: true,
        }
    }

    #[test]
    fn percent_error_known_values() {
        // 1.8 against 2.0 is a 10% miss, up to one part in 1e12 because 1.8
        // is not exactly representable in binary.
        assert!((percent_error(2.0, 1.8) - 10.0).abs() < 1e-12);
        assert_eq!(percent_error(2.0, 2.0), 0.0);
        assert_eq!(percent_error(0.0, 0.0), 0.0);
        assert!(percent_error(0.0, 1e-300).is_infinite());
        assert_eq!(percent_error(-4.0, -5.0), 25.0);
    }

    #[test]
    fn percent_error_symmetry_and_nonnegativity() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(17);
        for _ in 0..10_000 {
            let e = rng.gen_range(-1e6..1e6);
            let a = rng.gen_range(-1e6..1e6);
            if e == 0.0 {
                continue;
            }
            let pe = percent_error(e, a);
            assert!(pe >= 0.0);
            assert_eq!(pe, percent_error(-e, -a));
        }
    }

    #[test]
    fn aggregation_floors_tiny_denominators() {
        let exact = [1.0, 5e-13];
        let approx = [1.0, 15e-13];
        // Second element compares absolutely against the floor:
        // |15e-13 - 5e-13| / 1e-12 * 100 = 100%.
        let pe = aggregate_percent_error(&exact, &approx);
        assert!((pe - 50.0).abs() < 1e-9);
        assert_eq!(aggregate_percent_error(&[], &[]), 0.0);
    }

    #[test]
    fn kernels_match_hand_results() {
        let dot = Kernel::DotProduct
            .run(&KernelInput::Vector(vec![1.0, 2.0, 3.0, 4.0]))
            .unwrap();
        assert_eq!(dot, vec![1.0 * 3.0 + 2.0 * 4.0]);

        // FFT of a constant: everything lands in bin zero.
        let fft = Kernel::Fft1d
            .run(&KernelInput::Vector(vec![1.0; 8]))
            .unwrap();
        assert!((fft[0] - 8.0).abs() < 1e-12);
        assert!(fft[1..].iter().all(|&v| v.abs() < 1e-12));

        let mean = Kernel::StreamMean
            .run(&KernelInput::Vector((1..=128).map(f64::from).collect()))
            .unwrap();
        assert_eq!(mean.len(), 2);
        assert!((mean[0] - 32.5).abs() < 1e-12);
        assert!((mean[1] - 96.5).abs() < 1e-12);

        // Flat image has zero gradient everywhere.
        let flat = KernelInput::Image {
            width: 4,
            height: 4,
            pixels: vec![7.0; 16],
        };
        let sobel = Kernel::SobelEdge.run(&flat).unwrap();
        assert_eq!(sobel, vec![0.0; 4]);
    }

    #[test]
    fn kernel_input_validation() {
        assert!(Kernel::DotProduct
            .run(&KernelInput::Vector(vec![1.0, 2.0, 3.0]))
            .is_err());
        assert!(Kernel::Fft1d
            .run(&KernelInput::Vector(vec![0.0; 5000]))
            .is_err());
        assert!(Kernel::StreamMean
            .run(&KernelInput::Vector(vec![]))
            .is_err());
        assert!(Kernel::SobelEdge
            .run(&KernelInput::Image {
                width: 2,
                height: 2,
                pixels: vec![0.0; 4]
            })
            .is_err());
        assert!(Kernel::SobelEdge
            .run(&KernelInput::Image {
                width: 4,
                height: 4,
                pixels: vec![0.0; 15]
            })
            .is_err());
        assert!(Kernel::SobelEdge
            .run(&KernelInput::Vector(vec![1.0]))
            .is_err());
        assert!(Kernel::Identity
            .run(&KernelInput::Image {
                width: 3,
                height: 3,
                pixels: vec![0.0; 9]
            })
            .is_err());
    }

    #[test]
    fn synthetic_image_gradients_stay_off_zero() {
        let img = synthetic_image(64, 64);
        let edges = Kernel::SobelEdge.run(&img).unwrap();
        let min = edges.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(
            min > 0.5,
            "minimum gradient magnitude {min} too close to zero"
        );
    }

    #[test]
    fn identity_channel_scores_zero_error() {
        for kernel in Kernel::ALL {
            let input = default_input(kernel, 1);
            let report = run_kernel(kernel, &input, &Channel::Identity).unwrap();
            assert_eq!(report.percent_error, 0.0, "kernel {kernel}");
        }
    }

    #[test]
    fn truncation_error_stays_near_input_bound() {
        let topo = default_clos_topology();
        let params = LossParameters::default();
        let c = ctx(&topo, &params);
        let input = KernelInput::Vector(synthetic_vector(512, 3));
        let channel = c.channel(32, 1.0).unwrap();
        let report = run_kernel(Kernel::Identity, &input, &channel).unwrap();
        // Inputs sit in [0.5, 2.0), so 32-bit truncation moves each element
        // by at most 2^-20 relative, i.e. below 0.0001%.
        assert!(report.percent_error > 0.0);
        assert!(report.percent_error < 1e-4 * 100.0);
    }

    #[test]
    fn sweep_edges_and_collapse() {
        let topo = default_clos_topology();
        let params = LossParameters::default();
        let c = ctx(&topo, &params);
        let grid = SweepGrid {
            lsb_counts: vec![0, 8, 32],
            reduction_fractions: vec![0.0, 0.5, 1.0],
        };
        let input = default_input(Kernel::Identity, 7);
        let surface = sensitivity_sweep(Kernel::Identity, &input, &grid, &c).unwrap();
        assert_eq!(surface.points.len(), 9);
        for p in &surface.points {
            if p.num_lsbs == 0 || p.reduction_fraction == 0.0 {
                assert_eq!(p.percent_error, 0.0, "edge point {p:?}");
            }
        }
        // Full reduction equals pure truncation bit for bit.
        for p in surface
            .points
            .iter()
            .filter(|p| p.reduction_fraction == 1.0)
        {
            let channel = c.channel(p.num_lsbs, 1.0).unwrap();
            let report = run_kernel(Kernel::Identity, &input, &channel).unwrap();
            assert_eq!(p.percent_error, report.percent_error);
        }
    }

    #[test]
    fn sweep_is_deterministic_and_ordered() {
        let topo = default_clos_topology();
        let params = LossParameters::default();
        let c = ctx(&topo, &params);
        let grid = SweepGrid::default();
        let input = default_input(Kernel::DotProduct, 11);
        let a = sensitivity_sweep(Kernel::DotProduct, &input, &grid, &c).unwrap();
        let b = sensitivity_sweep(Kernel::DotProduct, &input, &grid, &c).unwrap();
        assert_eq!(a.points, b.points);
        assert_eq!(a.points.len(), 88);
        // Grid order: LSB-major, reductions inner.
        let mut idx = 0;
        for &k in &grid.lsb_counts {
            for &r in &grid.reduction_fractions {
                assert_eq!(a.points[idx].num_lsbs, k);
                assert_eq!(a.points[idx].reduction_fraction, r);
                idx += 1;
            }
        }
    }

    #[test]
    fn surface_csv_round_trips() {
        let surface = SweepSurface {
            kernel: "identity".into(),
            source: "cluster0".into(),
            points: vec![
                SweepPoint {
                    num_lsbs: 4,
                    reduction_fraction: 0.1,
                    percent_error: 0.25,
                },
                SweepPoint {
                    num_lsbs: 32,
                    reduction_fraction: 1.0,
                    percent_error: 3.5,
                },
            ],
        };
        let mut buf = Vec::new();
        surface.write_csv(&mut buf).unwrap();
        let back = SweepSurface::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, surface.points);
    }

    #[test]
    fn selection_matches_brute_force_and_falls_back() {
        let topo = default_clos_topology();
        let params = LossParameters::default();
        let c = ctx(&topo, &params);
        let input = default_input(Kernel::Identity, 5);
        let surface =
            sensitivity_sweep(Kernel::Identity, &input, &SweepGrid::default(), &c).unwrap();
        let selected = select_config(&surface, 10.0, &c).unwrap();
        assert!(selected.feasible);
        assert!(selected.percent_error < 10.0);

        // Brute-force oracle: rescan every feasible point.
        let mut best: Option<(f64, u32, f64, f64)> = None;
        for p in &surface.points {
            if p.percent_error >= 10.0 {
                continue;
            }
            let saving = c
                .estimated_saving_mw(p.num_lsbs, p.reduction_fraction)
                .unwrap();
            let cand = (saving, p.num_lsbs, p.reduction_fraction, p.percent_error);
            if best.is_none_or(|b| (cand.0, cand.1, cand.2) > (b.0, b.1, b.2)) {
                best = Some(cand);
            }
        }
        let best = best.unwrap();
        assert_eq!(selected.num_approx_bits, best.1);
        assert_eq!(selected.reduction_fraction, best.2);
        assert_eq!(selected.estimated_laser_saving_mw, best.0);

        // Impossible budget: fall back to no approximation.
        let none = select_config(&surface, -1.0, &c).unwrap();
        assert!(!none.feasible);
        assert_eq!(none.num_approx_bits, 0);
        assert_eq!(none.reduction_fraction, 0.0);
    }

    #[test]
    fn singleton_feasible_set_is_chosen() {
        let topo = default_clos_topology();
        let params = LossParameters::default();
        let c = ctx(&topo, &params);
        let surface = SweepSurface {
            kernel: "identity".into(),
            source: "cluster0".into(),
            points: vec![
                SweepPoint {
                    num_lsbs: 4,
                    reduction_fraction: 0.1,
                    percent_error: 2.0,
                },
                SweepPoint {
                    num_lsbs: 8,
                    reduction_fraction: 0.5,
                    percent_error: 60.0,
                },
            ],
        };
        let selected = select_config(&surface, 10.0, &c).unwrap();
        assert!(selected.feasible);
        assert_eq!(selected.num_approx_bits, 4);
        assert_eq!(selected.reduction_fraction, 0.1);
    }

    #[test]
    fn kernel_app_mapping() {
        assert_eq!(kernel_for_app("sobel").unwrap(), Kernel::SobelEdge);
        assert_eq!(kernel_for_app("fft").unwrap(), Kernel::Fft1d);
        assert!(kernel_for_app("nonesuch").is_err());
    }
}
