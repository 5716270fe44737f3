use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cell {0} is empty")]
    EmptyCell(usize),
    #[error("insertion index {index} out of range for a lane of {len} vehicles")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("position {0} m coincides with an existing vehicle midpoint")]
    PositionTie(f64),
    #[error("configuration is not physical: {0}")]
    NotPhysical(String),
    #[error("invalid kind `{id}`: {reason}")]
    InvalidKind { id: String, reason: String },
    #[error("invalid membership function: {0}")]
    InvalidMembership(String),
    #[error("missing input for fuzzy variable {0}")]
    MissingInput(String),
    #[error("missing membership term {term} for variable {variable}")]
    MissingTerm { variable: String, term: String },
    #[error("invalid lane-change state: {0}")]
    InvalidTransfer(String),
    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown kind `{0}`")]
    UnknownKind(String),
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config serialization error: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
