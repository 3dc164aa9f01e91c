use thiserror::Error;

/// Errors raised by the simulator.
///
/// The variants are grouped by how a caller is expected to react: configuration
/// errors are fixed by editing inputs, infeasibility is a property of the scenario,
/// and numerical/degenerate errors flag an unusable channel or equalizer draw.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("degenerate channel: column {ue} has zero norm")]
    DegenerateChannel { ue: usize },

    #[error("degenerate equalizer: row {ue} ({reason})")]
    DegenerateEqualizer { ue: usize, reason: &'static str },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("power model undefined for {0}")]
    ModelUndefined(&'static str),

    #[error("infeasible configuration: BER floor {floor_ber:.3e} above target {target_ber:.3e}")]
    Infeasible { floor_ber: f64, target_ber: f64 },

    #[error("target BER already met at the bottom of the SNR search range ({low_db} dB); widen the range")]
    BelowSearchRange { low_db: f64 },

    #[error("no feasible configuration: {0}")]
    NoFeasible(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
