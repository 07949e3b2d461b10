//! File formats and example reports behind the `io-recover` binary.

pub mod demo;
pub mod file;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    /// Malformed input, unmet preconditions, or an internal solver error.
    pub const INPUT: i32 = 1;
    /// No imputation exists.
    pub const INFEASIBLE: i32 = 2;
    /// The imputation is trivial; remediations are listed on stderr.
    pub const TRIVIAL: i32 = 3;
    /// A certificate or an example comparison did not check out.
    pub const CHECK_FAILED: i32 = 4;
}
