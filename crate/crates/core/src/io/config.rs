//! Preprocessing configuration file.
//!
//! A small TOML key-value file fixes the tangent frame and pipeline
//! knobs:
//!
//! ```toml
//! ref_lat = 48.1103
//! ref_lon = 16.5697
//! ref_alt_m = 183.0
//! r_max_m = 75000.0
//! direction = "arrival"
//! downsample_s = 20   # optional, keep the 1 Hz grid when absent
//! ```

use serde::{Deserialize, Serialize};

use crate::enu::EnuFrame;
use crate::error::{Error, Result};
use crate::preprocess::{Direction, PreprocessOptions};

/// Parsed preprocessing configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessConfig {
    /// Reference latitude of the tangent frame, degrees.
    pub ref_lat: f64,
    /// Reference longitude, degrees.
    pub ref_lon: f64,
    /// Reference altitude, meters.
    pub ref_alt_m: f64,
    /// Bounding and scaling radius, meters.
    pub r_max_m: f64,
    pub direction: Direction,
    /// Post-smoothing downsample stride in seconds; omit for full 1 Hz.
    #[serde(default)]
    pub downsample_s: Option<u32>,
}

impl PreprocessConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Builds validated pipeline options from the raw values.
    pub fn to_options(&self) -> Result<PreprocessOptions> {
        let frame = EnuFrame::new(self.ref_lat, self.ref_lon, self.ref_alt_m, self.r_max_m)?;
        let mut opts = PreprocessOptions::new(frame, self.direction);
        opts.downsample_s = self.downsample_s;
        Ok(opts)
    }
}
