use thiserror::Error;

pub type Result<T> = std::result::Result<T, FdError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FdError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("framing error: waveform of {len} samples is not a whole number of {symbol_len}-sample symbols")]
    Framing { len: usize, symbol_len: usize },

    /// A regression column is (numerically) a combination of earlier ones.
    #[error("singular regression: column {column} ({label}) is rank deficient")]
    Singular { column: usize, label: String },

    #[error("undetermined system: {rows} observations for {unknowns} unknowns")]
    Undetermined { rows: usize, unknowns: usize },

    #[error("division guard: reference symbol is zero at subcarrier {subcarrier}, symbol {symbol}")]
    ZeroReference { subcarrier: usize, symbol: usize },

    #[error("ill-conditioned equalization on subcarriers {subcarriers:?}")]
    IllConditioned { subcarriers: Vec<usize> },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("frame {frame}: {source}")]
    InFrame {
        frame: usize,
        #[source]
        source: Box<FdError>,
    },
}

impl FdError {
    pub(crate) fn in_frame(self, frame: usize) -> Self {
        FdError::InFrame {
            frame,
            source: Box::new(self),
        }
    }

    /// True for errors caused by bad input/configuration rather than by the
    /// numerics of a run.
    pub fn is_config(&self) -> bool {
        match self {
            FdError::Config(_) | FdError::Parse(_) | FdError::Io(_) => true,
            FdError::InFrame { source, .. } => source.is_config(),
            _ => false,
        }
    }
}

impl From<std::io::Error> for FdError {
    fn from(e: std::io::Error) -> Self {
        FdError::Io(e.to_string())
    }
}
