//! On-disk formats. Every writer is deterministic: identical inputs give
//! byte-identical files.

pub mod certificate;
pub mod grid;
pub mod poly_text;
pub mod reports;
pub mod sdpa;

pub use certificate::{CertificateFile, SystemSpec};
pub use grid::{read_grid, write_grid, GridFile};
pub use poly_text::{read_polynomial, write_polynomial};
pub use reports::{
    read_trajectory_csv, to_json, write_summary_csv, write_trace_csv, write_trajectory_csv, GapEntry, GapFile, OrbitFile,
    SummaryRow,
};
pub use sdpa::{read_sdpa, write_sdpa};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn parse_err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Parse {
        line,
        message: message.into(),
    }
}

/// 17 significant digits: enough to round-trip every `f64`.
pub fn fmt17(x: f64) -> String {
    format!("{:.16e}", x)
}

/// 9 significant digits, used for grid samples.
pub fn fmt9(x: f64) -> String {
    format!("{:.8e}", x)
}

/// 7 significant digits in positional notation where that stays readable.
pub fn fmt7(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{}", x);
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..7).contains(&mag) {
        format!("{:.*}", (6 - mag) as usize, x)
    } else {
        format!("{:.6e}", x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_formats() {
        assert_eq!(fmt7(635908.5692873232), "635908.6");
        assert_eq!(fmt7(27.000001), "27.00000");
        assert_eq!(fmt7(1.5e-9), "1.500000e-9");
        assert_eq!(fmt9(3000.0), "3.00000000e3");
        let x = 0.1 + 0.2;
        assert_eq!(fmt17(x).parse::<f64>().unwrap(), x);
    }
}
