//! Run configuration shared by every subcommand, loadable from a JSON file
//! and overridable by global flags.

use bamot::lp::hedge::{HedgeConfig, StrikeMode};
use bamot::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Grid points per maturity in the single-period LPs (primal support and
    /// dual constraint grid).
    pub grid_points: usize,
    /// Grid points per maturity in the two-period product-grid LPs.
    pub product_grid_points: usize,
    /// Quantile mass truncated on each tail when building grids.
    pub tail_quantile: f64,
    /// Relative extension of the grid beyond its last quantile point.
    pub tail_extension: f64,
    /// Extra half-width added to every quote band, relative to the spot.
    pub band_epsilon: f64,
    /// Tolerance used when reporting duality gaps and audit slacks.
    pub lp_tolerance: f64,
    pub strikes: StrikeMode,
    /// Output directory for emitted files.
    pub out_dir: Option<PathBuf>,
    /// Seed for synthetic data generators.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let h = HedgeConfig::default();
        Self {
            grid_points: h.grid_points,
            product_grid_points: 150,
            tail_quantile: h.tail_quantile,
            tail_extension: h.tail_extension,
            band_epsilon: h.band_epsilon,
            lp_tolerance: 1e-7,
            strikes: h.strikes,
            out_dir: None,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&PathBuf>) -> Result<Self> {
        let cfg: RunConfig = match path {
            Some(p) => serde_json::from_reader(std::fs::File::open(p)?)?,
            None => RunConfig::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_points == 0 || self.product_grid_points == 0 {
            return Err(Error::Parse("grid sizes must be positive".into()));
        }
        if !(self.tail_quantile > 0.0 && self.tail_quantile < 0.5) {
            return Err(Error::Parse(format!(
                "tail quantile {} not in (0, 0.5)",
                self.tail_quantile
            )));
        }
        if !(self.lp_tolerance > 0.0) {
            return Err(Error::Parse("lp tolerance must be positive".into()));
        }
        if let StrikeMode::Dense(0) = self.strikes {
            return Err(Error::Parse("strike count must be positive".into()));
        }
        Ok(())
    }

    pub fn hedge_config(&self, two_maturity: bool) -> HedgeConfig {
        HedgeConfig {
            grid_points: if two_maturity {
                self.product_grid_points
            } else {
                self.grid_points
            },
            tail_quantile: self.tail_quantile,
            tail_extension: self.tail_extension,
            band_epsilon: self.band_epsilon,
            strikes: self.strikes.clone(),
        }
    }

    /// FNV-1a hash of the canonical JSON form, for provenance stamps.
    pub fn hash(&self) -> u64 {
        let bytes = serde_json::to_vec(self).unwrap_or_default();
        let mut h: u64 = 0xcbf29ce484222325;
        for b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        h
    }

    /// Comment line prepended to every emitted CSV.
    pub fn provenance(&self) -> String {
        format!(
            "# bamot {} config={:016x} seed={}",
            env!("CARGO_PKG_VERSION"),
            self.hash(),
            self.seed
        )
    }
}
