//! Error type shared across the crate.

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("approximated LSB count {0} out of range (0..=32)")]
    LsbCountOutOfRange(u32),

    #[error("cannot express {0} mW in dBm; power must be positive")]
    NonpositivePower(f64),

    #[error("wavelength count must be at least 1, got {0}")]
    InvalidLambdaCount(u32),

    #[error("reduction fraction {0} outside [0, 1]")]
    InvalidReductionFraction(f64),

    #[error("reduction fraction 1.0 leaves no reduced level; use truncation")]
    NoReducedLevel,

    #[error("duplicate topology path from {src} to {dst}")]
    DuplicatePath { src: String, dst: String },

    #[error("no path from {src} to {dst} in the loss table")]
    UnknownDestination { src: String, dst: String },

    #[error("transmit plan built for {plan} scheme used on a {link} link")]
    SchemeMismatch { plan: String, link: String },

    #[error("PAM4 approximates whole symbols; {0} LSBs is not an even count")]
    OddPam4ApproxBits(u32),

    #[error("trace line {line}: {reason}")]
    TraceLine { line: usize, reason: String },

    #[error("packet {seq}: {reason}")]
    Packet { seq: u64, reason: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("input data error: {0}")]
    InputData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code the CLI maps this error to: 1 for configuration
    /// problems, 2 for bad input data (traces, kernel inputs).
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::TraceLine { .. } | Error::Packet { .. } | Error::InputData(_) => 2,
            _ => 1,
        }
    }
}
