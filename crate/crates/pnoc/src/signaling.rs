//! Signaling scheme economics (OOK vs PAM4) and the deterministic threshold
//! channel.
//!
//! Both schemes move one 64-bit word per cycle: OOK as 64 wavelengths of one
//! bit each, PAM4 as 32 wavelengths of four-level symbols carrying two bits.
//! PAM4's tighter level spacing costs a fixed signaling loss on the receive
//! side and drives its laser levels at a fixed multiplier over OOK's. The
//! channel itself is a threshold model: a level at or above detector
//! sensitivity arrives exactly, below it the covered bits read as zero.
//! MSB wavelengths are never approximated, so payload corruption is confined
//! to the planned LSB range.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fpapprox::{approx_mask, FloatWord};
use crate::laser::{LsbMode, TransmitPlan};
use crate::photonics::LossParameters;

/// Bits in one payload word; schemes must tile exactly this many.
pub const PAYLOAD_BITS: u32 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    Ook,
    Pam4,
}

impl std::fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SchemeKind::Ook => "ook",
            SchemeKind::Pam4 => "pam4",
        })
    }
}

impl std::str::FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ook" => Ok(SchemeKind::Ook),
            "pam4" => Ok(SchemeKind::Pam4),
            other => Err(Error::Config(format!("unknown signaling scheme '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalingScheme {
    pub kind: SchemeKind,
    pub bits_per_symbol: u32,
    pub n_lambda: u32,
    /// Receive-side signaling penalty in dB, on top of path loss.
    pub extra_loss_db: f64,
    /// Laser level multiplier relative to OOK drive levels.
    pub reduced_power_multiplier: f64,
}

impl SignalingScheme {
    pub fn ook() -> Self {
        SignalingScheme {
            kind: SchemeKind::Ook,
            bits_per_symbol: 1,
            n_lambda: 64,
            extra_loss_db: 0.0,
            reduced_power_multiplier: 1.0,
        }
    }

    pub fn pam4() -> Self {
        SignalingScheme {
            kind: SchemeKind::Pam4,
            bits_per_symbol: 2,
            n_lambda: 32,
            extra_loss_db: 5.8,
            reduced_power_multiplier: 1.5,
        }
    }

    pub fn for_kind(kind: SchemeKind) -> Self {
        match kind {
            SchemeKind::Ook => Self::ook(),
            SchemeKind::Pam4 => Self::pam4(),
        }
    }

    /// A symbol is approximated only when all of its bits fall inside the
    /// approximated LSB range, so the count rounds down to whole symbols.
    pub fn effective_approx_bits(&self, num_lsbs: u32) -> u32 {
        num_lsbs - num_lsbs % self.bits_per_symbol
    }

    /// Wavelengths occupied by `num_approx_bits` approximated bits.
    pub fn approx_lambda_count(&self, num_approx_bits: u32) -> u32 {
        num_approx_bits / self.bits_per_symbol
    }
}

/// PAM4 drive level for a given OOK-referenced level.
pub fn pam4_reduced_power(ook_level_dbm: f64, scheme: &SignalingScheme) -> Result<f64> {
    if scheme.kind != SchemeKind::Pam4 {
        return Err(Error::Config(format!(
            "PAM4 level mapping applied to {} scheme",
            scheme.kind
        )));
    }
    Ok(ook_level_dbm + 10.0 * scheme.reduced_power_multiplier.log10())
}

/// Margin (dB) by which the plan's reduced LSB level clears detector
/// sensitivity at a destination. None when the plan truncates.
pub fn lsb_margin_db(
    plan: &TransmitPlan,
    dest_loss_db: f64,
    scheme: &SignalingScheme,
    params: &LossParameters,
) -> Option<f64> {
    match plan.lsb_mode {
        LsbMode::Truncated => None,
        LsbMode::ReducedPower { power_dbm } => Some(
            power_dbm - (dest_loss_db + scheme.extra_loss_db) - params.detector_sensitivity_dbm,
        ),
    }
}

/// Per-bit recovery verdict at one destination.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BitRecovery {
    Exact,
    ForcedZero,
}

/// Outcome of the threshold channel for one plan at one destination: which
/// payload bits arrive exactly and which read as zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChannelOutcome {
    forced_zero_mask: u64,
}

impl ChannelOutcome {
    pub fn evaluate(
        plan: &TransmitPlan,
        dest_loss_db: f64,
        scheme: &SignalingScheme,
        params: &LossParameters,
    ) -> Result<Self> {
        if plan.scheme != scheme.kind {
            return Err(Error::SchemeMismatch {
                plan: plan.scheme.to_string(),
                link: scheme.kind.to_string(),
            });
        }
        if !plan.num_approx_bits.is_multiple_of(scheme.bits_per_symbol) {
            return Err(Error::OddPam4ApproxBits(plan.num_approx_bits));
        }
        let approx = approx_mask(plan.num_approx_bits)?;
        let lost = match lsb_margin_db(plan, dest_loss_db, scheme, params) {
            // Truncated wavelengths are gated off, so the bits never arrive.
            None => true,
            Some(margin) => margin < 0.0,
        };
        Ok(ChannelOutcome {
            forced_zero_mask: if lost { approx } else { 0 },
        })
    }

    pub fn forced_zero_mask(&self) -> u64 {
        self.forced_zero_mask
    }

    pub fn status(&self, bit: u32) -> BitRecovery {
        if bit < PAYLOAD_BITS && self.forced_zero_mask >> bit & 1 == 1 {
            BitRecovery::ForcedZero
        } else {
            BitRecovery::Exact
        }
    }

    pub fn apply(&self, word: FloatWord) -> FloatWord {
        FloatWord::from_bits(word.bits() & !self.forced_zero_mask)
    }
}

/// Sends one word through the threshold channel and returns what the
/// destination reads.
pub fn transmit_word(
    word: FloatWord,
    plan: &TransmitPlan,
    dest_loss_db: f64,
    scheme: &SignalingScheme,
    params: &LossParameters,
) -> Result<FloatWord> {
    Ok(ChannelOutcome::evaluate(plan, dest_loss_db, scheme, params)?.apply(word))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fpapprox::{ApproxMode, ApproxSpec};
    use crate::laser::{decide_mode, LaserBudget, Mode};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn params() -> LossParameters {
        LossParameters::default()
    }

    #[test]
    fn schemes_tile_the_payload() {
        for s in [SignalingScheme::ook(), SignalingScheme::pam4()] {
            assert_eq!(s.bits_per_symbol * s.n_lambda, PAYLOAD_BITS);
        }
        assert_eq!(SignalingScheme::ook().n_lambda, 64);
        assert_eq!(SignalingScheme::pam4().n_lambda, 32);
    }

    #[test]
    fn approx_bits_round_to_symbols() {
        let ook = SignalingScheme::ook();
        let pam4 = SignalingScheme::pam4();
        assert_eq!(ook.effective_approx_bits(15), 15);
        assert_eq!(pam4.effective_approx_bits(15), 14);
        assert_eq!(pam4.effective_approx_bits(16), 16);
        assert_eq!(pam4.approx_lambda_count(16), 8);
        assert_eq!(ook.approx_lambda_count(16), 16);
    }

    #[test]
    fn pam4_level_mapping_known_values() {
        let pam4 = SignalingScheme::pam4();
        assert!((pam4_reduced_power(0.0, &pam4).unwrap() - 1.7609).abs() < 1e-4);
        assert!((pam4_reduced_power(-6.9897, &pam4).unwrap() - -5.2288).abs() < 1e-4);
        assert!(pam4_reduced_power(0.0, &SignalingScheme::ook()).is_err());
    }

    fn budget(worst: f64, n_lambda: u32, frac: f64) -> LaserBudget {
        LaserBudget::sized_for(worst, &params(), n_lambda, frac).unwrap()
    }

    #[test]
    fn truncated_plan_matches_mask_oracle() {
        let ook = SignalingScheme::ook();
        let b = budget(9.0, 64, 1.0);
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for k in [0u32, 4, 16, 32] {
            let plan = TransmitPlan::build(
                &b,
                &ook,
                ApproxSpec::new(k, ApproxMode::Truncate).unwrap(),
                true,
            )
            .unwrap();
            for _ in 0..500 {
                let w = FloatWord::from_bits(rng.gen());
                let got = transmit_word(w, &plan, 1.0, &ook, &params()).unwrap();
                assert_eq!(got, w.truncate_lsbs(k).unwrap());
            }
        }
    }

    #[test]
    fn reduced_plan_recovers_or_zeroes_by_margin() {
        let ook = SignalingScheme::ook();
        let b = budget(9.0, 64, 0.8);
        let spec = ApproxSpec::new(16, ApproxMode::ReducedPower).unwrap();
        let plan = TransmitPlan::build(&b, &ook, spec, true).unwrap();
        let w = FloatWord::from_f64(std::f64::consts::E);

        // Near destination: reduced level clears sensitivity, word intact.
        let near = transmit_word(w, &plan, 1.0, &ook, &params()).unwrap();
        assert_eq!(near, w);
        assert!(lsb_margin_db(&plan, 1.0, &ook, &params()).unwrap() >= 0.0);

        // Far destination: below sensitivity, low bits read zero.
        let far = transmit_word(w, &plan, 9.0, &ook, &params()).unwrap();
        assert_eq!(far, w.truncate_lsbs(16).unwrap());
        assert!(lsb_margin_db(&plan, 9.0, &ook, &params()).unwrap() < 0.0);
    }

    #[test]
    fn channel_agrees_with_decision_rule() {
        let ook = SignalingScheme::ook();
        let p = params();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let spec = ApproxSpec::new(8, ApproxMode::ReducedPower).unwrap();
        for _ in 0..2000 {
            let worst = rng.gen_range(0.0..25.0);
            let frac = rng.gen_range(0.0..0.999);
            let loss = rng.gen_range(0.0..25.0);
            let b = budget(worst, 64, frac);
            let plan = TransmitPlan::build(&b, &ook, spec, true).unwrap();
            let w = FloatWord::from_bits(rng.gen::<u64>() | 0xff);
            let got = transmit_word(w, &plan, loss, &ook, &p).unwrap();
            match decide_mode(loss, &b, &ook, &p) {
                Mode::ReducedPower => assert_eq!(got, w),
                Mode::Truncated => assert_eq!(got, w.truncate_lsbs(8).unwrap()),
            }
        }
    }

    #[test]
    fn pam4_margin_sits_below_ook_by_fixed_offset() {
        let p = params();
        let spec = ApproxSpec::new(16, ApproxMode::ReducedPower).unwrap();
        let ook = SignalingScheme::ook();
        let pam4 = SignalingScheme::pam4();
        for loss in [0.5, 3.0, 9.0] {
            let b_ook = budget(9.395, 64, 0.8);
            let b_pam4 = budget(9.395, 32, 0.8);
            let m_ook = lsb_margin_db(
                &TransmitPlan::build(&b_ook, &ook, spec, true).unwrap(),
                loss,
                &ook,
                &p,
            )
            .unwrap();
            let m_pam4 = lsb_margin_db(
                &TransmitPlan::build(&b_pam4, &pam4, spec, true).unwrap(),
                loss,
                &pam4,
                &p,
            )
            .unwrap();
            let offset = -5.8 + 10.0 * 1.5f64.log10();
            assert!((m_pam4 - (m_ook + offset)).abs() < 1e-9);
        }
    }

    #[test]
    fn msb_bits_never_touched() {
        let ook = SignalingScheme::ook();
        let b = budget(12.0, 64, 0.95);
        let spec = ApproxSpec::new(32, ApproxMode::ReducedPower).unwrap();
        let plan = TransmitPlan::build(&b, &ook, spec, true).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        for _ in 0..2000 {
            // All bit patterns, NaNs and infinities included.
            let w = FloatWord::from_bits(rng.gen());
            let loss = rng.gen_range(0.0..20.0);
            let got = transmit_word(w, &plan, loss, &ook, &params()).unwrap();
            assert_eq!(got.bits() >> 32, w.bits() >> 32);
            let out = ChannelOutcome::evaluate(&plan, loss, &ook, &params()).unwrap();
            for bit in 32..64 {
                assert_eq!(out.status(bit), BitRecovery::Exact);
            }
        }
    }

    #[test]
    fn scheme_mismatch_is_rejected() {
        let ook = SignalingScheme::ook();
        let pam4 = SignalingScheme::pam4();
        let b = budget(9.0, 32, 0.8);
        let spec = ApproxSpec::new(16, ApproxMode::Truncate).unwrap();
        let plan = TransmitPlan::build(&b, &pam4, spec, true).unwrap();
        let w = FloatWord::from_f64(1.0);
        assert!(matches!(
            transmit_word(w, &plan, 1.0, &ook, &params()),
            Err(Error::SchemeMismatch { .. })
        ));
    }

    #[test]
    fn hand_built_odd_pam4_plan_rejected() {
        let pam4 = SignalingScheme::pam4();
        let b = budget(9.0, 32, 0.8);
        let spec = ApproxSpec::new(16, ApproxMode::Truncate).unwrap();
        let mut plan = TransmitPlan::build(&b, &pam4, spec, true).unwrap();
        plan.num_approx_bits = 15;
        let w = FloatWord::from_f64(1.0);
        assert!(matches!(
            transmit_word(w, &plan, 1.0, &pam4, &params()),
            Err(Error::OddPam4ApproxBits(15))
        ));
    }
}
