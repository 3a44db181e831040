//! Instance files, experiment pipelines and reports for `cmdp-core`.

pub mod error;
pub mod instance;
pub mod pipeline;
pub mod reference;
pub mod sweep;

pub use error::{LabError, Result};
pub use instance::{load_instance, parse_instance, read_instance, InstanceFile, LoadedInstance};
pub use pipeline::{run_pipeline, Mode, PipelineOptions, RunReport, DEFAULT_T_CAP};
pub use reference::reference_instance;
pub use sweep::{sweep, write_csv, SweepRow};
