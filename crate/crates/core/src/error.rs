use thiserror::Error;

/// Errors raised by the scheme itself. Serialization failures have their own
/// type, [`crate::io::ParseError`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("scheme inapplicable: (K-1)/L must be an integer, got K={users}, L={span}")]
    SchemeInapplicable { users: usize, span: usize },

    #[error("degenerate file count N={0}: the scheme needs N >= 2")]
    DegenerateFileCount(usize),

    #[error("size mismatch: expected {expected} bits, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("transcript integrity: {0}")]
    Integrity(String),

    #[error("user {user} cannot recover subfile W_{{{file},{position}}}: neither transmitted nor peelable")]
    Undecodable {
        user: usize,
        file: usize,
        position: usize,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
