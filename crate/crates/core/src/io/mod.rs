//! Interchange formats: CSV records and result tables, binary containers
//! for datasets / representations / checkpoints, and the preprocessing
//! config file.

pub mod config;
pub mod container;
pub mod csvio;

pub use config::PreprocessConfig;
pub use container::{
    load_checkpoint, load_dataset, load_reprs, read_checkpoint, read_dataset, read_reprs,
    save_checkpoint, save_dataset, save_reprs, write_checkpoint, write_dataset, write_reprs,
    ReprFile,
};
pub use csvio::{
    read_records, write_loss_curve_csv, write_metrics_csv, write_projection_csv, write_records,
    write_sweep_csv, MetricsRow,
};
