use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid spec:\n  {}", .0.join("\n  "))]
    Spec(Vec<String>),

    #[error("numerical failure: {0}")]
    Numerical(besselpot::Error),

    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Library errors caused by bad input; everything else is numerical.
    pub fn spec_from(e: besselpot::Error) -> Self {
        Self::Spec(vec![e.to_string()])
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Spec(_) => 2,
            Self::Numerical(_) | Self::Io(_) => 1,
        }
    }
}

impl From<besselpot::Error> for CliError {
    fn from(e: besselpot::Error) -> Self {
        use besselpot::Error as E;
        match e {
            E::InvalidParameter { .. } | E::GridMismatch(_) | E::Unsupported(_) | E::Empty(_) => Self::spec_from(e),
            E::NoConvergence { .. } | E::EmptyCube(_) | E::ZeroPotential | E::Calibration(_) => Self::Numerical(e),
        }
    }
}
