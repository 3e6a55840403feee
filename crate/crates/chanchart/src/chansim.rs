//! Parametric multipath channel synthesizer.
//!
//! Stands in for a geometry-accurate ray tracer: every AP sees one
//! line-of-sight path plus one path per scatterer, each contributing
//! `gain * element_gain * steering_vector(azimuth) * exp(-i*2*pi*f_w*tau)`
//! across the subcarrier grid. Amplitudes follow d^(-gamma/2), delays are
//! geometric path length over the speed of light, and each path also
//! carries its carrier phase exp(-i*2*pi*f_c*tau).
//!
//! Conventions:
//! - Subcarrier baseband frequencies f_w = (w - W/2) * (bandwidth / W).
//! - AP antennas form a half-wavelength uniform linear array along the
//!   x-axis; azimuth is the angle of the source's horizontal direction
//!   (seen from the AP) measured from +y toward +x.
//! - Scatterer reflection coefficients are consumed from `rng` in a fixed
//!   order (AP-major, scatterer-minor). Callers that want one frozen
//!   multipath environment for a whole dataset pass an identically-seeded
//!   generator for every sample, which also makes parallel generation
//!   bit-identical to sequential generation.

use ndarray::{Array2, ArrayViewMut2};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, streams};
use crate::scenario::{ApLayout, ScenarioConfig};

pub const SPEED_OF_LIGHT_M_S: f64 = 299_792_458.0;

/// Distance below which the transmitter counts as sitting on a receive
/// antenna, which would make the pathloss law blow up.
const COINCIDENCE_EPS_M: f64 = 1e-9;

/// Receive-element radiation pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementPattern {
    Isotropic,
    /// Vertical half-wave dipole: gain cos(pi/2 * cos(theta)) / sin(theta)
    /// with theta the polar angle from the vertical axis. Suppresses
    /// paths arriving from straight above or below, which dents receive
    /// power directly under an elevated AP.
    VerticalDipole,
}

/// Simulator knobs that exist before any random draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub num_scatterers: usize,
    pub pathloss_exponent: f64,
    pub reference_loss_db: f64,
    /// dB gap between line-of-sight power and aggregate scattered power
    /// at the 30 m calibration probe (see [`PropagationModel::realize`]).
    pub rician_los_gain_db: f64,
    pub element_pattern: ElementPattern,
    pub noise_snr_db_range: (f64, f64),
    pub scatterer_max_height_m: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            num_scatterers: 24,
            pathloss_exponent: 2.0,
            reference_loss_db: 0.0,
            rician_los_gain_db: 3.0,
            element_pattern: ElementPattern::VerticalDipole,
            noise_snr_db_range: (0.0, 30.0),
            scatterer_max_height_m: 15.0,
        }
    }
}

/// A realized propagation environment: the channel knobs plus the drawn
/// scatterer positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationModel {
    pub num_scatterers: usize,
    pub pathloss_exponent: f64,
    pub reference_loss_db: f64,
    pub rician_los_gain_db: f64,
    pub element_pattern: ElementPattern,
    pub noise_snr_db_range: (f64, f64),
    pub scatterer_positions: Vec<[f64; 3]>,
    pub rng_seed: u64,
}

impl PropagationModel {
    /// Draws scatterer positions uniformly over the UE area at heights
    /// uniform in [0, scatterer_max_height_m] and calibrates nothing
    /// else; the draw uses its own stream of `scenario.rng_seed`.
    pub fn realize(scenario: &ScenarioConfig, params: &ChannelParams) -> Result<Self> {
        if params.pathloss_exponent <= 0.0 {
            return Err(Error::Config(format!(
                "pathloss_exponent must be positive, got {}",
                params.pathloss_exponent
            )));
        }
        if params.noise_snr_db_range.0 > params.noise_snr_db_range.1 {
            return Err(Error::Config(format!(
                "noise_snr_db_range low {} exceeds high {}",
                params.noise_snr_db_range.0, params.noise_snr_db_range.1
            )));
        }
        if params.scatterer_max_height_m < 0.0 {
            return Err(Error::Config("scatterer_max_height_m must be >= 0".into()));
        }
        let mut rng = stream_rng(scenario.rng_seed, streams::SCATTERERS);
        let scatterer_positions = (0..params.num_scatterers)
            .map(|_| {
                [
                    rng.gen_range(0.0..=scenario.area_width_m),
                    rng.gen_range(0.0..=scenario.area_depth_m),
                    rng.gen_range(0.0..=params.scatterer_max_height_m),
                ]
            })
            .collect();
        Ok(Self {
            num_scatterers: params.num_scatterers,
            pathloss_exponent: params.pathloss_exponent,
            reference_loss_db: params.reference_loss_db,
            rician_los_gain_db: params.rician_los_gain_db,
            element_pattern: params.element_pattern,
            noise_snr_db_range: params.noise_snr_db_range,
            scatterer_positions,
            rng_seed: scenario.rng_seed,
        })
    }

    /// Amplitude of a path of length `d` before any pattern or
    /// reflection factor: 10^(-reference_loss_db/20) * d^(-gamma/2).
    fn path_amplitude(&self, d: f64) -> f64 {
        let ref_amp = 10f64.powf(-self.reference_loss_db / 20.0);
        ref_amp * d.powf(-self.pathloss_exponent / 2.0)
    }

    /// Line-of-sight amplitude multiplier K calibrated at a fixed probe:
    /// a UE at the area center and a virtual AP 30 m away horizontally at
    /// AP height. K is chosen so that K^2 * los_power equals
    /// 10^(rician_los_gain_db/10) times the expected aggregate scattered
    /// power for that probe geometry (unit-variance reflections, patterns
    /// ignored). With no scatterers K = 1.
    fn los_amplitude_multiplier(&self, scenario: &ScenarioConfig) -> f64 {
        if self.scatterer_positions.is_empty() {
            return 1.0;
        }
        let ue = [
            scenario.area_width_m / 2.0,
            scenario.area_depth_m / 2.0,
            scenario.ue_height_m,
        ];
        let ap = [ue[0] + 30.0, ue[1], scenario.ap_height_m];
        let d_los = dist(ue, ap);
        let scattered_power: f64 = self
            .scatterer_positions
            .iter()
            .map(|s| self.path_amplitude(dist(ue, *s) + dist(*s, ap)).powi(2))
            .sum();
        let los_power = self.path_amplitude(d_los).powi(2);
        (10f64.powf(self.rician_los_gain_db / 10.0) * scattered_power / los_power).sqrt()
    }
}

/// Frequency-domain CSI for one UE transmission: rows are receive
/// antennas grouped by AP (`antennas_per_ap` consecutive rows per AP),
/// columns are subcarriers.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTensor {
    pub entries: Array2<Complex64>,
    pub ue_index: usize,
}

impl ChannelTensor {
    /// Rounds every entry through 32-bit floats, matching what the
    /// on-disk dataset stores, so in-memory and reloaded tensors agree
    /// bit for bit.
    pub fn quantize_to_f32(&mut self) {
        self.entries
            .mapv_inplace(|z| Complex64::new(z.re as f32 as f64, z.im as f32 as f64));
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Half-wavelength ULA response: entry m = exp(-i*pi*m*sin(azimuth)).
pub fn steering_vector(azimuth: f64, m_r: usize) -> Vec<Complex64> {
    let s = azimuth.sin();
    (0..m_r)
        .map(|m| Complex64::from_polar(1.0, -std::f64::consts::PI * m as f64 * s))
        .collect()
}

/// Element gain toward a direction with polar cosine `cos_theta`
/// (z-component of the unit direction vector).
pub(crate) fn element_gain(pattern: ElementPattern, cos_theta: f64) -> f64 {
    match pattern {
        ElementPattern::Isotropic => 1.0,
        ElementPattern::VerticalDipole => {
            let sin_theta = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
            if sin_theta < 1e-9 {
                0.0
            } else {
                (std::f64::consts::FRAC_PI_2 * cos_theta).cos() / sin_theta
            }
        }
    }
}

/// Adds one propagation path to an AP's antenna block. `gain` carries
/// amplitude, pattern, reflection coefficient, and carrier phase; the
/// per-subcarrier phase exp(-i*2*pi*f_w*tau) is generated by a
/// multiplicative recurrence over the centered subcarrier grid.
fn accumulate_path(
    block: &mut ArrayViewMut2<Complex64>,
    gain: Complex64,
    azimuth: f64,
    tau: f64,
    bandwidth_hz: f64,
) {
    let (m_r, w) = block.dim();
    let sv = steering_vector(azimuth, m_r);
    let tau_step = std::f64::consts::TAU * (bandwidth_hz / w as f64) * tau;
    let step = Complex64::from_polar(1.0, -tau_step);
    // w = 0 sits at f_0 = -W/2 * (bandwidth/W), i.e. phase +pi*bandwidth*tau.
    let mut phase = Complex64::from_polar(1.0, 0.5 * w as f64 * tau_step);
    for wi in 0..w {
        let v = gain * phase;
        for (m, s) in sv.iter().enumerate() {
            block[[m, wi]] += s * v;
        }
        phase *= step;
    }
}

/// Synthesizes the noiseless frequency-domain tensor for one UE
/// position: per AP, the line-of-sight path plus one path per scatterer,
/// with reflection coefficients CN(0, 1) drawn from `rng` in AP-major,
/// scatterer-minor order.
pub fn synthesize_channel(
    ue_index: usize,
    ue_pos: [f64; 3],
    aps: &ApLayout,
    scenario: &ScenarioConfig,
    model: &PropagationModel,
    rng: &mut ChaCha8Rng,
) -> Result<ChannelTensor> {
    if aps.len() != scenario.num_aps {
        return Err(Error::Shape(format!(
            "layout has {} APs but the scenario declares {}",
            aps.len(),
            scenario.num_aps
        )));
    }
    let m_r = scenario.antennas_per_ap;
    let w = scenario.num_subcarriers;
    let mut entries = Array2::zeros((scenario.total_antennas(), w));
    let k_los = model.los_amplitude_multiplier(scenario);

    for (a, ap) in aps.positions.iter().enumerate() {
        let coeffs: Vec<Complex64> = (0..model.scatterer_positions.len())
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
            })
            .collect();
        let mut block = entries.slice_mut(ndarray::s![a * m_r..(a + 1) * m_r, ..]);

        let d_los = dist(ue_pos, *ap);
        if d_los < COINCIDENCE_EPS_M {
            return Err(Error::Degenerate(format!(
                "UE {ue_index} coincides with AP {a}; pathloss is undefined"
            )));
        }
        let gain = path_gain(model, k_los, d_los, direction(*ap, ue_pos));
        let tau = d_los / SPEED_OF_LIGHT_M_S;
        let carrier = Complex64::from_polar(1.0, -std::f64::consts::TAU * scenario.carrier_freq_hz * tau);
        accumulate_path(
            &mut block,
            gain * carrier,
            azimuth_from(*ap, ue_pos),
            tau,
            scenario.bandwidth_hz,
        );

        for (s, coeff) in model.scatterer_positions.iter().zip(&coeffs) {
            let len = dist(ue_pos, *s) + dist(*s, *ap);
            if len < COINCIDENCE_EPS_M {
                continue;
            }
            let gain = path_gain(model, 1.0, len, direction(*ap, *s)) * coeff;
            let tau = len / SPEED_OF_LIGHT_M_S;
            let carrier =
                Complex64::from_polar(1.0, -std::f64::consts::TAU * scenario.carrier_freq_hz * tau);
            accumulate_path(
                &mut block,
                gain * carrier,
                azimuth_from(*ap, *s),
                tau,
                scenario.bandwidth_hz,
            );
        }
    }

    let tensor = ChannelTensor { entries, ue_index };
    if !tensor.is_finite() {
        return Err(Error::Numeric(format!(
            "channel tensor for UE {ue_index} contains non-finite entries"
        )));
    }
    Ok(tensor)
}

fn direction(from: [f64; 3], to: [f64; 3]) -> [f64; 3] {
    let d = dist(from, to);
    [(to[0] - from[0]) / d, (to[1] - from[1]) / d, (to[2] - from[2]) / d]
}

/// Azimuth of `target` as seen from `ap`: horizontal direction angle
/// measured from +y toward +x (broadside of the x-axis array is +y).
fn azimuth_from(ap: [f64; 3], target: [f64; 3]) -> f64 {
    (target[0] - ap[0]).atan2(target[1] - ap[1])
}

fn path_gain(model: &PropagationModel, multiplier: f64, length: f64, dir: [f64; 3]) -> Complex64 {
    let g = multiplier * model.path_amplitude(length) * element_gain(model.element_pattern, dir[2]);
    Complex64::new(g, 0.0)
}

/// Adds circularly-symmetric complex Gaussian noise per AP block, scaled
/// so each block's signal power over noise power equals
/// 10^(target_snr_db/10). `target_snr_db = +inf` disables noise and
/// consumes no random draws. Noise components are drawn row-major within
/// each block, real part before imaginary part.
pub fn add_receiver_noise(
    mut h: ChannelTensor,
    target_snr_db: f64,
    antennas_per_ap: usize,
    rng: &mut ChaCha8Rng,
) -> Result<ChannelTensor> {
    if target_snr_db == f64::INFINITY {
        return Ok(h);
    }
    if !target_snr_db.is_finite() {
        return Err(Error::Config(format!(
            "target SNR must be finite or +inf, got {target_snr_db}"
        )));
    }
    let (b, w) = h.entries.dim();
    if antennas_per_ap == 0 || b % antennas_per_ap != 0 {
        return Err(Error::Shape(format!(
            "{b} rows do not divide into blocks of {antennas_per_ap}"
        )));
    }
    let snr_lin = 10f64.powf(target_snr_db / 10.0);
    for a in 0..b / antennas_per_ap {
        let mut block = h
            .entries
            .slice_mut(ndarray::s![a * antennas_per_ap..(a + 1) * antennas_per_ap, ..]);
        let signal_power: f64 = block.iter().map(|z| z.norm_sqr()).sum();
        if signal_power == 0.0 {
            return Err(Error::Degenerate(format!(
                "AP block {a} is all-zero; its SNR target {target_snr_db} dB is unsatisfiable"
            )));
        }
        // Per-entry noise variance so the whole block meets the target.
        let sigma_sq = signal_power / (antennas_per_ap * w) as f64 / snr_lin;
        let component_std = (sigma_sq / 2.0).sqrt();
        for z in block.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *z += Complex64::new(re * component_std, im * component_std);
        }
    }
    Ok(h)
}
