//! Deployment geometry: UE grid, trajectory timestamps, AP layout, and
//! the train/test split.
//!
//! All constructions are pure and deterministic given the configuration;
//! values are immutable after build and safe to share across threads.
//!
//! Conventions: the UE grid is row-major with its origin corner at
//! (0, 0); the trajectory spiral starts at that corner and walks the +x
//! edge first; APs sit on the perimeter of the UE area expanded by
//! `ap_margin_m`, split evenly by arc length starting from the expanded
//! rectangle's origin corner.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, streams};

fn default_ap_margin() -> f64 {
    2.0
}

/// Scenario parameters: area, grid, AP array, OFDM numerology, feature
/// truncation, and latent dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub area_width_m: f64,
    pub area_depth_m: f64,
    pub grid_cols: usize,
    pub grid_rows: usize,
    pub grid_spacing_m: f64,
    pub num_aps: usize,
    pub antennas_per_ap: usize,
    pub ap_height_m: f64,
    pub ue_height_m: f64,
    pub carrier_freq_hz: f64,
    pub bandwidth_hz: f64,
    pub num_subcarriers: usize,
    pub trunc_taps: usize,
    pub latent_dim: usize,
    pub rng_seed: u64,
    /// Outward distance from the UE area to the AP perimeter.
    #[serde(default = "default_ap_margin")]
    pub ap_margin_m: f64,
}

impl ScenarioConfig {
    /// Total receive antennas across all APs.
    pub fn total_antennas(&self) -> usize {
        self.num_aps * self.antennas_per_ap
    }

    /// Feature dimension after truncation: total antennas times kept taps.
    pub fn feature_dim(&self) -> usize {
        self.total_antennas() * self.trunc_taps
    }

    pub fn num_samples(&self) -> usize {
        self.grid_cols * self.grid_rows
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.grid_cols == 0 || self.grid_rows == 0 {
            return fail("grid_cols and grid_rows must be at least 1".into());
        }
        if self.grid_spacing_m <= 0.0 {
            return fail("grid_spacing_m must be positive".into());
        }
        let span_x = (self.grid_cols - 1) as f64 * self.grid_spacing_m;
        let span_y = (self.grid_rows - 1) as f64 * self.grid_spacing_m;
        // Tolerate float rounding: an area declared as exactly
        // (cols - 1) * spacing must fit its own grid.
        let fits = |span: f64, area: f64| span <= area * (1.0 + 1e-12) + 1e-12;
        if !fits(span_x, self.area_width_m) {
            return fail(format!(
                "grid x-span {span_x} m exceeds area_width_m {} m",
                self.area_width_m
            ));
        }
        if !fits(span_y, self.area_depth_m) {
            return fail(format!(
                "grid y-span {span_y} m exceeds area_depth_m {} m",
                self.area_depth_m
            ));
        }
        if self.num_aps < 2 {
            return fail("num_aps must be at least 2 (one AP pair)".into());
        }
        if self.antennas_per_ap < 1 {
            return fail("antennas_per_ap must be at least 1".into());
        }
        if self.trunc_taps < 1 || self.trunc_taps > self.num_subcarriers {
            return fail(format!(
                "trunc_taps must satisfy 1 <= C <= W, got C={} W={}",
                self.trunc_taps, self.num_subcarriers
            ));
        }
        if !(self.latent_dim == 2 || self.latent_dim == 3) {
            return fail(format!("latent_dim must be 2 or 3, got {}", self.latent_dim));
        }
        if self.carrier_freq_hz <= 0.0 || self.bandwidth_hz <= 0.0 {
            return fail("carrier_freq_hz and bandwidth_hz must be positive".into());
        }
        Ok(())
    }
}

/// Ground-truth UE positions with trajectory timestamps.
///
/// Timestamps are unitless visit indices: timestamp k means the point is
/// the k-th stop of the trajectory. Only timestamp differences matter to
/// the triplet objective.
#[derive(Debug, Clone, PartialEq)]
pub struct UeGrid {
    pub positions: Vec<[f64; 3]>,
    pub timestamps: Vec<f64>,
    pub grid_cols: usize,
    pub grid_rows: usize,
}

impl UeGrid {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Positions truncated to the first `dim` coordinates.
    pub fn truncated_positions(&self, dim: usize) -> Vec<Vec<f64>> {
        self.positions.iter().map(|p| p[..dim].to_vec()).collect()
    }
}

/// Known AP positions, full and truncated to the latent dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct ApLayout {
    pub positions: Vec<[f64; 3]>,
    pub truncated_positions: Vec<Vec<f64>>,
}

impl ApLayout {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Row-major UE grid at `grid_spacing_m` pitch with origin corner (0, 0)
/// and z fixed to the UE height. Timestamps are zeroed until
/// [`spiral_timestamps`] assigns the trajectory order.
pub fn build_grid(cfg: &ScenarioConfig) -> Result<UeGrid> {
    cfg.validate()?;
    let n = cfg.num_samples();
    let mut positions = Vec::with_capacity(n);
    for row in 0..cfg.grid_rows {
        for col in 0..cfg.grid_cols {
            positions.push([
                col as f64 * cfg.grid_spacing_m,
                row as f64 * cfg.grid_spacing_m,
                cfg.ue_height_m,
            ]);
        }
    }
    Ok(UeGrid {
        positions,
        timestamps: vec![0.0; n],
        grid_cols: cfg.grid_cols,
        grid_rows: cfg.grid_rows,
    })
}

/// Assigns timestamps along an inward rectangular spiral: the full
/// perimeter of the outermost rectangle, one step inward, the next
/// perimeter, and so on until every cell is visited once. The walk
/// starts at the origin corner and follows the +x edge first.
pub fn spiral_timestamps(mut grid: UeGrid) -> UeGrid {
    let (cols, rows) = (grid.grid_cols, grid.grid_rows);
    let mut order = Vec::with_capacity(cols * rows);
    let (mut top, mut left) = (0usize, 0usize);
    let (mut bottom, mut right) = (rows, cols); // exclusive
    while top < bottom && left < right {
        for c in left..right {
            order.push((top, c));
        }
        for r in top + 1..bottom {
            order.push((r, right - 1));
        }
        if bottom - top > 1 {
            for c in (left..right - 1).rev() {
                order.push((bottom - 1, c));
            }
        }
        if right - left > 1 {
            for r in (top + 1..bottom - 1).rev() {
                order.push((r, left));
            }
        }
        top += 1;
        bottom -= 1;
        left += 1;
        right -= 1;
    }
    debug_assert_eq!(order.len(), cols * rows);
    for (visit, (r, c)) in order.into_iter().enumerate() {
        grid.timestamps[r * cols + c] = visit as f64;
    }
    grid
}

/// Places the APs evenly by arc length along the perimeter of the UE
/// area expanded outward by `ap_margin_m`, starting from the expanded
/// rectangle's origin corner and walking the +x edge first. All APs sit
/// at the AP height; truncated positions keep the first `latent_dim`
/// coordinates.
pub fn place_aps(cfg: &ScenarioConfig) -> Result<ApLayout> {
    if cfg.num_aps < 2 {
        return Err(Error::Config(format!(
            "num_aps must be at least 2, got {}",
            cfg.num_aps
        )));
    }
    let m = cfg.ap_margin_m;
    let x0 = -m;
    let y0 = -m;
    let w = cfg.area_width_m + 2.0 * m;
    let d = cfg.area_depth_m + 2.0 * m;
    let perimeter = 2.0 * (w + d);
    let step = perimeter / cfg.num_aps as f64;

    let mut positions = Vec::with_capacity(cfg.num_aps);
    for a in 0..cfg.num_aps {
        let mut arc = a as f64 * step;
        let (x, y) = if arc < w {
            (x0 + arc, y0)
        } else if {
            arc -= w;
            arc < d
        } {
            (x0 + w, y0 + arc)
        } else if {
            arc -= d;
            arc < w
        } {
            (x0 + w - arc, y0 + d)
        } else {
            arc -= w;
            (x0, y0 + d - arc)
        };
        positions.push([x, y, cfg.ap_height_m]);
    }
    let truncated_positions = positions
        .iter()
        .map(|p| p[..cfg.latent_dim].to_vec())
        .collect();
    Ok(ApLayout {
        positions,
        truncated_positions,
    })
}

/// Deterministic random partition of `0..n` into train and test index
/// sets with `|train| = round(train_fraction * n)`. Both sets are
/// returned sorted.
pub fn split_dataset(
    n: usize,
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train_fraction must lie strictly between 0 and 1, got {train_fraction}"
        )));
    }
    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(&mut stream_rng(seed, streams::SPLIT));
    let n_train = (train_fraction * n as f64).round() as usize;
    let mut train = indices[..n_train].to_vec();
    let mut test = indices[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Desk-sized scenario shared by tests across modules.
#[cfg(test)]
pub(crate) fn test_config() -> ScenarioConfig {
    ScenarioConfig {
        area_width_m: 32.0,
        area_depth_m: 32.0,
        grid_cols: 40,
        grid_rows: 40,
        grid_spacing_m: 0.8,
        num_aps: 4,
        antennas_per_ap: 2,
        ap_height_m: 10.0,
        ue_height_m: 1.5,
        carrier_freq_hz: 1.9e9,
        bandwidth_hz: 20e6,
        num_subcarriers: 64,
        trunc_taps: 8,
        latent_dim: 2,
        rng_seed: 1,
        ap_margin_m: 2.0,
    }
}
