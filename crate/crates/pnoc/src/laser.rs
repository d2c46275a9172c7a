//! Laser power budgets and the per-destination transmit decision.
//!
//! A waveguide's laser is sized so its worst-placed receiver sees full-power
//! bits right at detector sensitivity: total dBm = sensitivity + worst-case
//! loss + 10*log10(n_lambda). Everyone closer enjoys the difference as
//! margin. Approximated LSBs can spend that margin: a destination whose loss
//! leaves the reduced level still detectable gets the LSBs at reduced power,
//! anyone farther gets them truncated instead of wasted.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fpapprox::{ApproxMode, ApproxSpec, MAX_APPROX_BITS};
use crate::photonics::LossParameters;
use crate::signaling::{SchemeKind, SignalingScheme};

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> Result<f64> {
    if mw <= 0.0 || !mw.is_finite() {
        return Err(Error::NonpositivePower(mw));
    }
    Ok(10.0 * mw.log10())
}

/// Total laser power (dBm) needed so every wavelength reaches the
/// worst-case receiver at detector sensitivity.
pub fn required_total_power_dbm(
    worst_case_loss_db: f64,
    params: &LossParameters,
    n_lambda: u32,
) -> Result<f64> {
    if n_lambda < 1 {
        return Err(Error::InvalidLambdaCount(n_lambda));
    }
    Ok(params.detector_sensitivity_dbm + worst_case_loss_db + 10.0 * f64::from(n_lambda).log10())
}

/// Sized laser budget for one source waveguide.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaserBudget {
    pub n_lambda: u32,
    pub full_power_total_dbm: f64,
    pub full_power_per_lambda_dbm: f64,
    /// Fraction of per-wavelength power removed on reduced LSB wavelengths;
    /// 0.8 means they are driven at 20% of full power.
    pub reduction_fraction: f64,
}

impl LaserBudget {
    pub fn sized_for(
        worst_case_loss_db: f64,
        params: &LossParameters,
        n_lambda: u32,
        reduction_fraction: f64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&reduction_fraction) {
            return Err(Error::InvalidReductionFraction(reduction_fraction));
        }
        let total = required_total_power_dbm(worst_case_loss_db, params, n_lambda)?;
        Ok(LaserBudget {
            n_lambda,
            full_power_total_dbm: total,
            full_power_per_lambda_dbm: total - 10.0 * f64::from(n_lambda).log10(),
            reduction_fraction,
        })
    }
}

/// Per-wavelength reduced power level in dBm, before any scheme multiplier.
/// A reduction fraction of 1.0 has no finite level; callers must truncate.
pub fn reduced_per_lambda_power_dbm(budget: &LaserBudget) -> Result<f64> {
    if budget.reduction_fraction >= 1.0 {
        return Err(Error::NoReducedLevel);
    }
    Ok(budget.full_power_per_lambda_dbm + 10.0 * (1.0 - budget.reduction_fraction).log10())
}

/// Reduced LSB level as actually driven under `scheme`, i.e. with the
/// scheme's power multiplier applied.
pub fn lsb_level_dbm(budget: &LaserBudget, scheme: &SignalingScheme) -> Result<f64> {
    Ok(reduced_per_lambda_power_dbm(budget)? + 10.0 * scheme.reduced_power_multiplier.log10())
}

/// How the approximated LSB wavelengths are handled for one destination.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    ReducedPower,
    Truncated,
}

/// The core protocol decision: send LSBs at reduced power if the destination
/// can still detect them, otherwise truncate. Ties go to reduced power.
pub fn decide_mode(
    dest_loss_db: f64,
    budget: &LaserBudget,
    scheme: &SignalingScheme,
    params: &LossParameters,
) -> Mode {
    if budget.reduction_fraction >= 1.0 {
        return Mode::Truncated;
    }
    let lsb = lsb_level_dbm(budget, scheme).expect("reduction below 1.0 has a level");
    if lsb - (dest_loss_db + scheme.extra_loss_db) >= params.detector_sensitivity_dbm {
        Mode::ReducedPower
    } else {
        Mode::Truncated
    }
}

/// Power level for the approximated LSB wavelengths in a committed plan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LsbMode {
    ReducedPower { power_dbm: f64 },
    Truncated,
}

/// Committed per-transfer plan: per-wavelength levels plus how many LSBs are
/// approximated. Under PAM4 the LSB count is rounded down to a whole number
/// of symbols before it lands here.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransmitPlan {
    pub scheme: SchemeKind,
    pub msb_power_per_lambda_dbm: f64,
    pub lsb_mode: LsbMode,
    pub num_approx_bits: u32,
}

impl TransmitPlan {
    /// Builds the plan for one transfer. `multiplier_on_msb` chooses whether
    /// the scheme's power multiplier also raises the full-power wavelengths
    /// or only the reduced ones.
    pub fn build(
        budget: &LaserBudget,
        scheme: &SignalingScheme,
        spec: ApproxSpec,
        multiplier_on_msb: bool,
    ) -> Result<Self> {
        let num_approx_bits = match spec.mode() {
            ApproxMode::Exact => 0,
            _ => scheme.effective_approx_bits(spec.num_lsbs()),
        };
        if num_approx_bits > MAX_APPROX_BITS {
            return Err(Error::LsbCountOutOfRange(num_approx_bits));
        }
        let msb_multiplier_db = if multiplier_on_msb {
            10.0 * scheme.reduced_power_multiplier.log10()
        } else {
            0.0
        };
        let lsb_mode = match spec.mode() {
            ApproxMode::ReducedPower if num_approx_bits > 0 => LsbMode::ReducedPower {
                power_dbm: lsb_level_dbm(budget, scheme)?,
            },
            _ => LsbMode::Truncated,
        };
        Ok(TransmitPlan {
            scheme: scheme.kind,
            msb_power_per_lambda_dbm: budget.full_power_per_lambda_dbm + msb_multiplier_db,
            lsb_mode,
            num_approx_bits,
        })
    }

    pub fn exact(budget: &LaserBudget, scheme: &SignalingScheme, multiplier_on_msb: bool) -> Self {
        Self::build(budget, scheme, ApproxSpec::exact(), multiplier_on_msb)
            .expect("exact plan always valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params() -> LossParameters {
        LossParameters::default()
    }

    #[test]
    fn dbm_mw_known_points() {
        assert!((dbm_to_mw(0.0) - 1.0).abs() < 1e-12);
        assert!((dbm_to_mw(10.0) - 10.0).abs() < 1e-12);
        assert!((dbm_to_mw(-30.0) - 0.001).abs() < 1e-15);
        assert!((mw_to_dbm(1.0).unwrap() - 0.0).abs() < 1e-12);
        // 20% of a milliwatt sits 6.9897 dB down.
        assert!((mw_to_dbm(0.2).unwrap() - -6.9897).abs() < 1e-4);
        assert!(mw_to_dbm(0.0).is_err());
        assert!(mw_to_dbm(-1.0).is_err());
    }

    #[test]
    fn required_power_known_value() {
        // Oracle: 10 log10 64 two ways before trusting the formula.
        let via_log10 = 10.0 * 64f64.log10();
        let via_ln = 10.0 * 64f64.ln() / std::f64::consts::LN_10;
        assert!((via_log10 - 18.0618).abs() < 1e-4);
        assert!((via_ln - 18.0618).abs() < 1e-4);

        let total = required_total_power_dbm(10.0, &params(), 64).unwrap();
        assert!((total - 4.6618).abs() < 1e-3);

        // One wavelength needs exactly sensitivity plus loss.
        let single = required_total_power_dbm(10.0, &params(), 1).unwrap();
        assert!((single - (-13.4)).abs() < 1e-12);

        assert!(required_total_power_dbm(10.0, &params(), 0).is_err());
    }

    #[test]
    fn budget_total_splits_per_lambda() {
        let b = LaserBudget::sized_for(9.0, &params(), 64, 0.8).unwrap();
        let rebuilt = b.full_power_per_lambda_dbm + 10.0 * 64f64.log10();
        assert!((b.full_power_total_dbm - rebuilt).abs() < 1e-12);
        assert!((b.full_power_per_lambda_dbm - (-23.4 + 9.0)).abs() < 1e-12);
        assert!(LaserBudget::sized_for(9.0, &params(), 64, 1.5).is_err());
        assert!(LaserBudget::sized_for(9.0, &params(), 64, -0.1).is_err());
    }

    #[test]
    fn reduced_level_known_values() {
        let b = LaserBudget::sized_for(23.4, &params(), 1, 0.8).unwrap();
        // Per-lambda lands at 0 dBm; 20% of that is -6.9897 dBm.
        assert!((b.full_power_per_lambda_dbm - 0.0).abs() < 1e-12);
        let reduced = reduced_per_lambda_power_dbm(&b).unwrap();
        assert!((reduced - -6.9897).abs() < 1e-4);

        let none = LaserBudget {
            reduction_fraction: 0.0,
            ..b
        };
        assert_eq!(
            reduced_per_lambda_power_dbm(&none).unwrap(),
            none.full_power_per_lambda_dbm
        );

        let all = LaserBudget {
            reduction_fraction: 1.0,
            ..b
        };
        assert!(matches!(
            reduced_per_lambda_power_dbm(&all),
            Err(Error::NoReducedLevel)
        ));
    }

    #[test]
    fn decide_threshold_ook() {
        // Per-lambda 0 dBm, 20% reduced level: recoverable up to
        // 23.4 - 6.9897 = 16.4103 dB of loss.
        let b = LaserBudget {
            n_lambda: 64,
            full_power_total_dbm: 10.0 * 64f64.log10(),
            full_power_per_lambda_dbm: 0.0,
            reduction_fraction: 0.8,
        };
        let ook = SignalingScheme::ook();
        assert_eq!(decide_mode(16.41, &b, &ook, &params()), Mode::ReducedPower);
        assert_eq!(decide_mode(16.42, &b, &ook, &params()), Mode::Truncated);

        // Exact tie goes to reduced power.
        let tie = 23.4 + 10.0 * 0.2f64.log10();
        assert_eq!(decide_mode(tie, &b, &ook, &params()), Mode::ReducedPower);

        // Full reduction always truncates, whatever the loss.
        let full = LaserBudget {
            reduction_fraction: 1.0,
            ..b
        };
        assert_eq!(decide_mode(0.0, &full, &ook, &params()), Mode::Truncated);
    }

    #[test]
    fn decide_threshold_pam4_shifts_down() {
        let b = LaserBudget {
            n_lambda: 32,
            full_power_total_dbm: 10.0 * 32f64.log10(),
            full_power_per_lambda_dbm: 0.0,
            reduction_fraction: 0.8,
        };
        let pam4 = SignalingScheme::pam4();
        // OOK threshold 16.4103, shifted by the 5.8 dB penalty less the
        // 1.7609 dB multiplier: 12.3712.
        assert_eq!(decide_mode(12.37, &b, &pam4, &params()), Mode::ReducedPower);
        assert_eq!(decide_mode(12.38, &b, &pam4, &params()), Mode::Truncated);
    }

    #[test]
    fn plan_build_modes() {
        let b = LaserBudget::sized_for(9.0, &params(), 64, 0.8).unwrap();
        let ook = SignalingScheme::ook();

        let trunc = TransmitPlan::build(
            &b,
            &ook,
            ApproxSpec::new(16, ApproxMode::Truncate).unwrap(),
            true,
        )
        .unwrap();
        assert_eq!(trunc.lsb_mode, LsbMode::Truncated);
        assert_eq!(trunc.num_approx_bits, 16);
        assert_eq!(trunc.msb_power_per_lambda_dbm, b.full_power_per_lambda_dbm);

        let red = TransmitPlan::build(
            &b,
            &ook,
            ApproxSpec::new(16, ApproxMode::ReducedPower).unwrap(),
            true,
        )
        .unwrap();
        match red.lsb_mode {
            LsbMode::ReducedPower { power_dbm } => {
                assert!((power_dbm - reduced_per_lambda_power_dbm(&b).unwrap()).abs() < 1e-12)
            }
            LsbMode::Truncated => panic!("expected reduced level"),
        }

        let exact = TransmitPlan::exact(&b, &ook, true);
        assert_eq!(exact.num_approx_bits, 0);

        // Zero approximated bits cannot carry a reduced level.
        let zero = TransmitPlan::build(
            &b,
            &ook,
            ApproxSpec::new(0, ApproxMode::ReducedPower).unwrap(),
            true,
        )
        .unwrap();
        assert_eq!(zero.lsb_mode, LsbMode::Truncated);
    }

    #[test]
    fn plan_build_pam4_multiplier_placement() {
        let b = LaserBudget::sized_for(9.0, &params(), 32, 0.8).unwrap();
        let pam4 = SignalingScheme::pam4();
        let bump = 10.0 * 1.5f64.log10();

        let spec = ApproxSpec::new(16, ApproxMode::ReducedPower).unwrap();
        let both = TransmitPlan::build(&b, &pam4, spec, true).unwrap();
        assert!(
            (both.msb_power_per_lambda_dbm - (b.full_power_per_lambda_dbm + bump)).abs() < 1e-12
        );
        let reduced_only = TransmitPlan::build(&b, &pam4, spec, false).unwrap();
        assert_eq!(
            reduced_only.msb_power_per_lambda_dbm,
            b.full_power_per_lambda_dbm
        );
        for plan in [both, reduced_only] {
            match plan.lsb_mode {
                LsbMode::ReducedPower { power_dbm } => {
                    let expect = reduced_per_lambda_power_dbm(&b).unwrap() + bump;
                    assert!((power_dbm - expect).abs() < 1e-12);
                }
                LsbMode::Truncated => panic!("expected reduced level"),
            }
        }

        // Odd LSB counts round down to whole symbols.
        let odd = TransmitPlan::build(
            &b,
            &pam4,
            ApproxSpec::new(15, ApproxMode::Truncate).unwrap(),
            true,
        )
        .unwrap();
        assert_eq!(odd.num_approx_bits, 14);
    }

    proptest! {
        #[test]
        fn dbm_mw_round_trip(dbm in -60.0f64..30.0) {
            let back = mw_to_dbm(dbm_to_mw(dbm)).unwrap();
            prop_assert!((back - dbm).abs() < 1e-9);
        }

        #[test]
        fn decide_monotone_in_loss(
            worst in 0.0f64..30.0,
            frac in 0.0f64..0.99,
            l1 in 0.0f64..30.0,
            l2 in 0.0f64..30.0,
        ) {
            let p = params();
            let b = LaserBudget::sized_for(worst, &p, 64, frac).unwrap();
            let ook = SignalingScheme::ook();
            let (near, far) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
            if decide_mode(far, &b, &ook, &p) == Mode::ReducedPower {
                prop_assert_eq!(decide_mode(near, &b, &ook, &p), Mode::ReducedPower);
            }
        }
    }
}
