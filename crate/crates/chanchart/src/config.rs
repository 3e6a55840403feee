//! Run configuration: one flat key = value (TOML) namespace covering the
//! scenario, the channel model, training, and evaluation.
//!
//! A run starts from a named profile (`desk` finishes the whole
//! five-method suite in minutes; `paper` matches the published scenario
//! shape) and overlays the user's config file on top. The effective
//! config has one canonical serialization, which is embedded in every
//! output artifact and hashed for checkpoint provenance.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::chansim::{ChannelParams, ElementPattern};
use crate::error::{Error, Result};
use crate::scenario::ScenarioConfig;

/// Named baseline configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Desk,
    Paper,
}

/// The complete, flat run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    // Deployment geometry and OFDM numerology.
    pub area_width_m: f64,
    pub area_depth_m: f64,
    pub grid_cols: usize,
    pub grid_rows: usize,
    pub grid_spacing_m: f64,
    pub num_aps: usize,
    pub antennas_per_ap: usize,
    pub ap_height_m: f64,
    pub ue_height_m: f64,
    pub ap_margin_m: f64,
    pub carrier_freq_hz: f64,
    pub bandwidth_hz: f64,
    pub num_subcarriers: usize,
    pub trunc_taps: usize,
    pub latent_dim: usize,
    pub rng_seed: u64,
    // Channel model.
    pub num_scatterers: usize,
    pub pathloss_exponent: f64,
    pub reference_loss_db: f64,
    pub rician_los_gain_db: f64,
    pub element_pattern: ElementPattern,
    pub noise_snr_db_range: (f64, f64),
    pub scatterer_max_height_m: f64,
    // Split and training.
    pub train_fraction: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub triplet_budget_per_sample: f64,
    pub hidden_widths: Vec<usize>,
    // Loss parameters shared across methods. m_t = 0 keeps each
    // method's preset latent margin; a positive value overrides it.
    pub lambda: f64,
    pub t_c: f64,
    pub m_t: f64,
    pub m_p: f64,
    pub m_b: f64,
    pub labeled_fraction: f64,
    // Evaluation. k_neighbors = 0 selects max(5, N/80) at evaluation
    // time.
    pub k_neighbors: usize,
    pub rd_num_bins: usize,
}

impl Profile {
    pub fn config(self) -> RunConfig {
        match self {
            Profile::Desk => RunConfig::desk(),
            Profile::Paper => RunConfig::paper(),
        }
    }
}

impl RunConfig {
    /// Small scenario sized so the full five-method experiment finishes
    /// in minutes on one core.
    pub fn desk() -> Self {
        Self {
            area_width_m: 31.2,
            area_depth_m: 31.2,
            grid_cols: 40,
            grid_rows: 40,
            grid_spacing_m: 0.8,
            num_aps: 4,
            antennas_per_ap: 2,
            ap_height_m: 10.0,
            ue_height_m: 1.5,
            ap_margin_m: 2.0,
            carrier_freq_hz: 1.9e9,
            bandwidth_hz: 20e6,
            num_subcarriers: 64,
            trunc_taps: 8,
            latent_dim: 2,
            rng_seed: 1,
            num_scatterers: 24,
            pathloss_exponent: 2.0,
            reference_loss_db: 0.0,
            rician_los_gain_db: 3.0,
            element_pattern: ElementPattern::VerticalDipole,
            noise_snr_db_range: (10.0, 30.0),
            scatterer_max_height_m: 15.0,
            train_fraction: 0.5,
            epochs: 150,
            batch_size: 64,
            learning_rate: 1e-3,
            triplet_budget_per_sample: 5.0,
            hidden_widths: vec![128, 64, 32, 16],
            lambda: 1.0,
            // The published loss margins assume a deployment roughly four
            // times this size, so the desk profile scales the metric-space
            // margins and the time threshold to the smaller area. The
            // method presets themselves keep the published values; see
            // `paper()`.
            t_c: 8.0,
            m_t: 4.0,
            m_p: 3.0,
            m_b: 4.0,
            labeled_fraction: 0.05,
            k_neighbors: 0,
            rd_num_bins: 64,
        }
    }

    /// Published scenario shape: 104 x 153 grid, 8 four-antenna APs,
    /// 1200 subcarriers, 12000/3912 split. Orders of magnitude slower
    /// than `desk`; provided for completeness, not exercised by the
    /// test suite.
    pub fn paper() -> Self {
        Self {
            area_width_m: 82.4,
            area_depth_m: 121.6,
            grid_cols: 104,
            grid_rows: 153,
            num_aps: 8,
            antennas_per_ap: 4,
            num_subcarriers: 1200,
            noise_snr_db_range: (-9.7, 33.8),
            train_fraction: 12_000.0 / 15_912.0,
            epochs: 100,
            batch_size: 256,
            triplet_budget_per_sample: 20.0,
            t_c: 20.0,
            m_t: 0.0,
            m_b: 15.0,
            ..Self::desk()
        }
    }

    /// Overlays `text` (flat TOML) onto this config. Unknown keys are
    /// rejected so typos cannot silently fall back to defaults.
    pub fn overlaid(&self, text: &str) -> Result<Self> {
        let mut table = toml::Table::try_from(self)
            .map_err(|e| Error::Config(format!("cannot serialize base config: {e}")))?;
        let overlay: toml::Table = text
            .parse()
            .map_err(|e| Error::Config(format!("config file is not valid key = value TOML: {e}")))?;
        for (key, value) in overlay {
            if !table.contains_key(&key) {
                return Err(Error::Config(format!("unknown config key {key:?}")));
            }
            table.insert(key, value);
        }
        let merged: Self = table
            .try_into()
            .map_err(|e| Error::Config(format!("invalid config value: {e}")))?;
        merged.validate()?;
        Ok(merged)
    }

    /// Loads the effective config: profile baseline, optional file
    /// overlay, optional seed override.
    pub fn load(profile: Profile, path: Option<&Path>, seed: Option<u64>) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                profile.config().overlaid(&text)?
            }
            None => profile.config(),
        };
        if let Some(seed) = seed {
            cfg.rng_seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario()?.validate()?;
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train_fraction must lie strictly between 0 and 1, got {}",
                self.train_fraction
            )));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch_size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.triplet_budget_per_sample > 0.0) {
            return Err(Error::Config(
                "triplet_budget_per_sample must be positive".into(),
            ));
        }
        if self.hidden_widths.iter().any(|w| *w == 0) {
            return Err(Error::Config("hidden layer widths must be positive".into()));
        }
        if !(self.m_t >= 0.0) || !self.m_t.is_finite() {
            return Err(Error::Config(format!(
                "m_t must be zero (keep the method preset) or a positive margin, got {}",
                self.m_t
            )));
        }
        if self.rd_num_bins < 2 {
            return Err(Error::Config("rd_num_bins must be at least 2".into()));
        }
        if self.pathloss_exponent <= 0.0 {
            return Err(Error::Config("pathloss_exponent must be positive".into()));
        }
        let (lo, hi) = self.noise_snr_db_range;
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::Config(format!(
                "noise_snr_db_range must be a finite low <= high pair, got ({lo}, {hi})"
            )));
        }
        Ok(())
    }

    pub fn scenario(&self) -> Result<ScenarioConfig> {
        let cfg = ScenarioConfig {
            area_width_m: self.area_width_m,
            area_depth_m: self.area_depth_m,
            grid_cols: self.grid_cols,
            grid_rows: self.grid_rows,
            grid_spacing_m: self.grid_spacing_m,
            num_aps: self.num_aps,
            antennas_per_ap: self.antennas_per_ap,
            ap_height_m: self.ap_height_m,
            ue_height_m: self.ue_height_m,
            carrier_freq_hz: self.carrier_freq_hz,
            bandwidth_hz: self.bandwidth_hz,
            num_subcarriers: self.num_subcarriers,
            trunc_taps: self.trunc_taps,
            latent_dim: self.latent_dim,
            rng_seed: self.rng_seed,
            ap_margin_m: self.ap_margin_m,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn channel_params(&self) -> ChannelParams {
        ChannelParams {
            num_scatterers: self.num_scatterers,
            pathloss_exponent: self.pathloss_exponent,
            reference_loss_db: self.reference_loss_db,
            rician_los_gain_db: self.rician_los_gain_db,
            element_pattern: self.element_pattern,
            noise_snr_db_range: self.noise_snr_db_range,
            scatterer_max_height_m: self.scatterer_max_height_m,
        }
    }

    /// Network widths: feature dimension, hidden layers, latent
    /// dimension.
    pub fn layer_widths(&self) -> Result<Vec<usize>> {
        let scenario = self.scenario()?;
        let mut widths = vec![scenario.feature_dim()];
        widths.extend(&self.hidden_widths);
        widths.push(self.latent_dim);
        Ok(widths)
    }

    /// Evaluation neighborhood size for a set of `n` samples.
    pub fn effective_k(&self, n: usize) -> usize {
        if self.k_neighbors == 0 {
            crate::chart_metrics::default_k(n)
        } else {
            self.k_neighbors
        }
    }

    /// Canonical serialization: fixed field order, embedded in all
    /// artifacts.
    pub fn to_canonical_string(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    /// Hex SHA-256 of the canonical serialization.
    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.to_canonical_string().as_bytes());
        hex_string(&digest)
    }

    /// Canonical serialization of only the fields that determine the
    /// dataset and feature bytes. Training and evaluation knobs are
    /// excluded, so retraining with different overrides still matches
    /// the artifacts on disk.
    pub fn dataset_fingerprint(&self) -> String {
        const DATASET_KEYS: &[&str] = &[
            "area_width_m",
            "area_depth_m",
            "grid_cols",
            "grid_rows",
            "grid_spacing_m",
            "num_aps",
            "antennas_per_ap",
            "ap_height_m",
            "ue_height_m",
            "ap_margin_m",
            "carrier_freq_hz",
            "bandwidth_hz",
            "num_subcarriers",
            "trunc_taps",
            "rng_seed",
            "num_scatterers",
            "pathloss_exponent",
            "reference_loss_db",
            "rician_los_gain_db",
            "element_pattern",
            "noise_snr_db_range",
            "scatterer_max_height_m",
        ];
        let table = toml::Table::try_from(self).expect("config serializes to TOML");
        let mut sub = toml::Table::new();
        for key in DATASET_KEYS {
            let value = table
                .get(*key)
                .unwrap_or_else(|| panic!("config field {key} exists"));
            sub.insert((*key).to_string(), value.clone());
        }
        sub.to_string()
    }

    /// Hex SHA-256 of the dataset fingerprint.
    pub fn dataset_fingerprint_hash(&self) -> String {
        hex_string(&Sha256::digest(self.dataset_fingerprint().as_bytes()))
    }

    /// Reconstructs the config recorded in an artifact's embedded
    /// canonical text.
    pub fn from_canonical_string(text: &str) -> Result<Self> {
        RunConfig::desk().overlaid(text)
    }
}

pub(crate) fn hex_string(bytes: &[u8]) -> String {
    use std::fmt::Write;
    bytes.iter().fold(String::with_capacity(bytes.len() * 2), |mut s, b| {
        write!(s, "{b:02x}").expect("writing to a string cannot fail");
        s
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_profile_validates_and_sizes_the_network() {
        let cfg = RunConfig::desk();
        cfg.validate().unwrap();
        assert_eq!(cfg.scenario().unwrap().num_samples(), 1600);
        // B = 4*2 antennas, C = 8 taps: feature dimension 64.
        assert_eq!(cfg.layer_widths().unwrap(), vec![64, 128, 64, 32, 16, 2]);
    }

    #[test]
    fn paper_profile_matches_published_shape() {
        let cfg = RunConfig::paper();
        cfg.validate().unwrap();
        let scenario = cfg.scenario().unwrap();
        assert_eq!(scenario.num_samples(), 15_912);
        assert_eq!(scenario.feature_dim(), 256);
        let (train, test) =
            crate::scenario::split_dataset(15_912, cfg.train_fraction, 1).unwrap();
        assert_eq!((train.len(), test.len()), (12_000, 3_912));
    }

    #[test]
    fn overlay_replaces_known_keys_only() {
        let cfg = RunConfig::desk()
            .overlaid("grid_cols = 10\ngrid_rows = 12\nlearning_rate = 0.01\n")
            .unwrap();
        assert_eq!(cfg.grid_cols, 10);
        assert_eq!(cfg.grid_rows, 12);
        assert_eq!(cfg.learning_rate, 0.01);
        assert_eq!(cfg.num_aps, 4);

        let err = RunConfig::desk().overlaid("grid_colz = 10\n").unwrap_err();
        assert!(err.to_string().contains("grid_colz"), "{err}");
    }

    #[test]
    fn overlay_rejects_invalid_values() {
        assert!(RunConfig::desk().overlaid("train_fraction = 1.5\n").is_err());
        assert!(RunConfig::desk().overlaid("epochs = 0\n").is_err());
        assert!(RunConfig::desk().overlaid("element_pattern = \"cardioid\"\n").is_err());
    }

    #[test]
    fn canonical_string_round_trips_and_hashes_stably() {
        let cfg = RunConfig::desk();
        let text = cfg.to_canonical_string();
        let back = RunConfig::desk().overlaid(&text).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(cfg.config_hash(), back.config_hash());
        let other = RunConfig::desk().overlaid("rng_seed = 2\n").unwrap();
        assert_ne!(cfg.config_hash(), other.config_hash());
    }

    #[test]
    fn fingerprint_ignores_training_knobs_only() {
        let base = RunConfig::desk();
        let retrained = RunConfig::desk()
            .overlaid("epochs = 7\nlearning_rate = 0.05\nk_neighbors = 3\n")
            .unwrap();
        assert_eq!(base.dataset_fingerprint(), retrained.dataset_fingerprint());
        assert_ne!(base.config_hash(), retrained.config_hash());

        let regenerated = RunConfig::desk().overlaid("num_scatterers = 5\n").unwrap();
        assert_ne!(base.dataset_fingerprint_hash(), regenerated.dataset_fingerprint_hash());
    }

    #[test]
    fn canonical_text_reconstructs_the_config() {
        let cfg = RunConfig::paper();
        let back = RunConfig::from_canonical_string(&cfg.to_canonical_string()).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn seed_flag_overrides_file_and_profile() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "rng_seed = 7\n").unwrap();
        let cfg = RunConfig::load(Profile::Desk, Some(&path), Some(99)).unwrap();
        assert_eq!(cfg.rng_seed, 99);
        let cfg = RunConfig::load(Profile::Desk, Some(&path), None).unwrap();
        assert_eq!(cfg.rng_seed, 7);
    }
}
