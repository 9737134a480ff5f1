//! Scenario files, on-disk formats, rendering and the experiment runner.

pub mod gridfile;
pub mod points;
pub mod render;
pub mod runner;
pub mod scenario;

pub use gridfile::{decode_grid, encode_grid, read_grid, write_grid, Dtype, GridData, GridHeader};
pub use points::PointSet;
pub use render::{render_gray, render_overlay, render_signed, Image, RenderStyle};
pub use runner::{run_scenario, Manifest, RunError};
pub use scenario::{parse_scenario, parse_scenario_with_overrides, ExperimentKind, Scenario, ScenarioErrors};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("grid has no nodes ({nx} x {ny})")]
    EmptyGrid { nx: usize, ny: usize },
    #[error("malformed header: {0}")]
    BadHeader(String),
    #[error("payload holds {got} values, header needs {expected}")]
    PayloadMismatch { expected: usize, got: usize },
    #[error("file is truncated")]
    Truncated,
    #[error("not a {expected} file")]
    BadMagic { expected: String },
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
}
