//! Bit-exact IEEE-754 double handling: field decomposition and mantissa LSB
//! masking.
//!
//! A double is sign (1 bit), exponent (11 bits, bias 1023), mantissa
//! (52 bits): `(-1)^S * 2^(E-1023) * (1 + M/2^52)` for normal values.
//! Approximation here only ever touches the low mantissa bits, and never more
//! than [`MAX_APPROX_BITS`] of them, so sign and exponent are untouchable by
//! construction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MANTISSA_BITS: u32 = 52;
pub const EXPONENT_BITS: u32 = 11;
pub const EXPONENT_BIAS: i32 = 1023;

/// Hard cap on how many mantissa LSBs any policy may approximate.
pub const MAX_APPROX_BITS: u32 = 32;

const MANTISSA_MASK: u64 = (1u64 << MANTISSA_BITS) - 1;
const EXPONENT_MASK: u64 = (1u64 << EXPONENT_BITS) - 1;

/// One 64-bit word as it crosses the link. Wraps the raw bit pattern so
/// masking stays exact for every input, NaN and infinity included.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FloatWord(u64);

/// Decomposed fields of a double.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FloatFields {
    pub sign: u8,
    pub exponent: u16,
    pub mantissa: u64,
}

impl FloatWord {
    pub fn from_bits(raw: u64) -> Self {
        FloatWord(raw)
    }

    pub fn from_f64(value: f64) -> Self {
        FloatWord(value.to_bits())
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        f64::from_bits(self.0)
    }

    pub fn decompose(self) -> FloatFields {
        FloatFields {
            sign: (self.0 >> (MANTISSA_BITS + EXPONENT_BITS)) as u8,
            exponent: ((self.0 >> MANTISSA_BITS) & EXPONENT_MASK) as u16,
            mantissa: self.0 & MANTISSA_MASK,
        }
    }

    pub fn compose(fields: FloatFields) -> Result<Self> {
        if fields.sign > 1 {
            return Err(Error::Config(format!(
                "sign field {} not a bit",
                fields.sign
            )));
        }
        if u64::from(fields.exponent) > EXPONENT_MASK {
            return Err(Error::Config(format!(
                "exponent field {} wider than {} bits",
                fields.exponent, EXPONENT_BITS
            )));
        }
        if fields.mantissa > MANTISSA_MASK {
            return Err(Error::Config(format!(
                "mantissa field {:#x} wider than {} bits",
                fields.mantissa, MANTISSA_BITS
            )));
        }
        Ok(FloatWord(
            (u64::from(fields.sign) << (MANTISSA_BITS + EXPONENT_BITS))
                | (u64::from(fields.exponent) << MANTISSA_BITS)
                | fields.mantissa,
        ))
    }

    /// Zeroes the low `k` mantissa bits, `k` in 0..=32. Well defined on every
    /// bit pattern; sign and exponent pass through untouched.
    pub fn truncate_lsbs(self, k: u32) -> Result<Self> {
        Ok(FloatWord(self.0 & !approx_mask(k)?))
    }
}

/// Bit mask covering the `k` approximable mantissa LSBs.
pub fn approx_mask(k: u32) -> Result<u64> {
    if k > MAX_APPROX_BITS {
        return Err(Error::LsbCountOutOfRange(k));
    }
    Ok(if k == 0 { 0 } else { (1u64 << k) - 1 })
}

/// Worst-case relative error of `k`-bit truncation on a normal double:
/// masking the low `k` mantissa bits removes less than `2^k` mantissa units
/// of `2^-52` each, against a significand of at least 1, so the relative
/// error is below `2^(k-52)`.
pub fn relative_truncation_bound(k: u32) -> Result<f64> {
    if k > MAX_APPROX_BITS {
        return Err(Error::LsbCountOutOfRange(k));
    }
    Ok(f64::powi(2.0, k as i32 - MANTISSA_BITS as i32))
}

/// What to do with the approximated LSB range of a word.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApproxMode {
    /// No approximation; every bit at full power.
    Exact,
    /// Drop the LSBs; their wavelengths are gated off.
    Truncate,
    /// Send the LSBs at a reduced laser level.
    ReducedPower,
}

/// Per-transfer approximation request: how many LSBs and what to do with them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApproxSpec {
    num_lsbs: u32,
    mode: ApproxMode,
}

impl ApproxSpec {
    pub fn new(num_lsbs: u32, mode: ApproxMode) -> Result<Self> {
        if num_lsbs > MAX_APPROX_BITS {
            return Err(Error::LsbCountOutOfRange(num_lsbs));
        }
        Ok(ApproxSpec { num_lsbs, mode })
    }

    pub fn exact() -> Self {
        ApproxSpec {
            num_lsbs: 0,
            mode: ApproxMode::Exact,
        }
    }

    pub fn num_lsbs(&self) -> u32 {
        self.num_lsbs
    }

    pub fn mode(&self) -> ApproxMode {
        self.mode
    }
}
