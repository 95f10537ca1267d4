//! Shared domain types and the energy/lifetime/channel formulas.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum node-to-base-station distance for which the pathloss model is
/// evaluated (the cell inner radius).
pub const MIN_PATHLOSS_DISTANCE_M: f64 = 50.0;

/// Shared air-interface constants.
///
/// All values are stored in SI units (Hz, s, W, W/Hz); dB-valued inputs are
/// converted once at config parse time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioConfig {
    /// Per-resource-element bandwidth w in Hz.
    pub bandwidth_w: f64,
    /// Length of one resource element τ_r in seconds.
    pub resource_element_len_tau_r: f64,
    /// Total number of resource elements c_t in the scheduling pool.
    pub total_elements_c_t: u64,
    /// SNR gap Γ between capacity and the practical modulation/coding, linear, ≥ 1.
    pub snr_gap_gamma: f64,
    /// Noise power spectral density N0 in W/Hz.
    pub noise_psd_n0: f64,
    /// Maximum transmit power in W.
    pub p_max: f64,
    /// Power-amplifier inefficiency α (inverse PA efficiency), ≥ 1.
    pub pa_inefficiency_alpha: f64,
    /// Circuit power P_c consumed while transmitting, in W.
    pub circuit_power_pc: f64,
}

impl RadioConfig {
    /// Validate the positivity/range invariants.
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("bandwidth_w", self.bandwidth_w),
            ("resource_element_len_tau_r", self.resource_element_len_tau_r),
            ("snr_gap_gamma", self.snr_gap_gamma),
            ("noise_psd_n0", self.noise_psd_n0),
            ("p_max", self.p_max),
            ("pa_inefficiency_alpha", self.pa_inefficiency_alpha),
            ("circuit_power_pc", self.circuit_power_pc),
        ];
        for (name, v) in fields {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(name, format!("must be strictly positive, got {v}")));
            }
        }
        if self.total_elements_c_t == 0 {
            return Err(Error::config("total_elements_c_t", "must be strictly positive"));
        }
        if self.snr_gap_gamma < 1.0 {
            return Err(Error::config("snr_gap_gamma", "must be >= 1"));
        }
        if self.pa_inefficiency_alpha < 1.0 {
            return Err(Error::config("pa_inefficiency_alpha", "must be >= 1"));
        }
        Ok(())
    }

    /// Time budget c_t·τ_r in seconds.
    pub fn time_budget(&self) -> f64 {
        self.total_elements_c_t as f64 * self.resource_element_len_tau_r
    }
}

impl Default for RadioConfig {
    /// Baseline single-cell parameters: one 180 kHz channel, 1 ms elements,
    /// thermal-floor noise over the channel (-121 dBW total), 1 W power cap.
    fn default() -> Self {
        RadioConfig {
            bandwidth_w: 180e3,
            resource_element_len_tau_r: 1e-3,
            total_elements_c_t: 1000,
            snr_gap_gamma: 1.0,
            noise_psd_n0: 10f64.powf(-12.1) / 180e3,
            p_max: 1.0,
            pa_inefficiency_alpha: 2.0,
            circuit_power_pc: 1e-3,
        }
    }
}

/// Per-device energy, traffic, channel and cooperation state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeState {
    pub id: u32,
    /// Remaining battery energy E_i in J.
    pub remaining_energy_e: f64,
    /// Duty-cycle length T_i in s.
    pub duty_cycle_t: f64,
    /// Payload D_i per duty cycle in bits.
    pub payload_d: f64,
    /// Static per-cycle energy E_s (sensing, sync, admission) in J.
    pub static_energy_es: f64,
    /// Listening energy E_h per served client per cycle, in J.
    pub listen_energy_eh: f64,
    /// Linear pathloss attenuation g ≥ 1 on the node→BS link.
    pub pathloss_gain_g: f64,
    /// Number of group clients served by this node.
    pub clients_n: u32,
    /// Distance to the base station in m.
    pub distance_to_bs: f64,
}

impl NodeState {
    /// Composite channel constant G = g·Γ·N0·w in W.
    pub fn channel_g(&self, radio: &RadioConfig) -> f64 {
        self.pathloss_gain_g * radio.snr_gap_gamma * radio.noise_psd_n0 * radio.bandwidth_w
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.remaining_energy_e >= 0.0) {
            return Err(Error::config("remaining_energy_e", "must be >= 0"));
        }
        if !(self.payload_d > 0.0) {
            return Err(Error::config("payload_d", "must be > 0"));
        }
        if !(self.static_energy_es > 0.0) {
            return Err(Error::config("static_energy_es", "must be > 0"));
        }
        if !(self.duty_cycle_t > 0.0) {
            return Err(Error::config("duty_cycle_t", "must be > 0"));
        }
        if !(self.pathloss_gain_g >= 1.0) {
            return Err(Error::config("pathloss_gain_g", "must be >= 1 (attenuation factor)"));
        }
        Ok(())
    }
}

/// One node's share of the scheduling outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub node_id: u32,
    /// Allocated airtime τ_i in s.
    pub tau: f64,
    /// Allocated resource elements c_i (τ = c·τ_r after rounding).
    pub elements_c: u64,
    /// Transmit power P_i in W.
    pub tx_power_p: f64,
}

/// Transmit power to deliver `d` bits in `tau` seconds over a channel with
/// composite constant `g` and bandwidth `w`: G·(2^(D/(τ·w)) − 1).
pub fn transmit_power(d: f64, tau: f64, g: f64, w: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::domain("transmit_power", format!("payload must be > 0, got {d}")));
    }
    if !(tau > 0.0) {
        return Err(Error::domain("transmit_power", format!("tau must be > 0, got {tau}")));
    }
    if !(g > 0.0) || !(w > 0.0) {
        return Err(Error::domain("transmit_power", "G and w must be > 0"));
    }
    Ok(g * ((d / (tau * w)).exp2() - 1.0))
}

/// Smallest element count keeping the transmit power at or below `p_max`:
/// ⌈ D / (τ_r·w·log2(1 + p_max/G)) ⌉.
pub fn min_elements(d: f64, g: f64, p_max: f64, tau_r: f64, w: f64) -> Result<u64> {
    if !(d > 0.0 && g > 0.0 && p_max > 0.0 && tau_r > 0.0 && w > 0.0) {
        return Err(Error::domain("min_elements", "all inputs must be > 0"));
    }
    let per_element_bits = tau_r * w * (1.0 + p_max / g).log2();
    Ok((d / per_element_bits).ceil() as u64)
}

/// Continuous minimum airtime for `d` bits at the power cap:
/// D / (w·log2(1 + p_max/G)).
pub fn tau_min(d: f64, g: f64, p_max: f64, w: f64) -> f64 {
    d / (w * (1.0 + p_max / g).log2())
}

/// Expected lifetime of `node` when transmitting for `tau` seconds at power
/// `p` each duty cycle: E·T / (Es + τ·(Pc + α·P) + n·Eh).
pub fn lifetime(node: &NodeState, radio: &RadioConfig, tau: f64, p: f64) -> Result<f64> {
    if !(tau >= 0.0) || !(p >= 0.0) {
        return Err(Error::domain("lifetime", format!("tau={tau} and P={p} must be >= 0")));
    }
    let per_cycle = node.static_energy_es
        + tau * (radio.circuit_power_pc + radio.pa_inefficiency_alpha * p)
        + node.clients_n as f64 * node.listen_energy_eh;
    Ok(node.remaining_energy_e * node.duty_cycle_t / per_cycle)
}

/// Urban-macro log-distance pathloss: PL_dB(d) = 128.1 + 37.6·log10(d/1 km),
/// returned as the linear attenuation factor 10^(PL_dB/10).
pub fn pathloss_gain(distance_m: f64) -> Result<f64> {
    if !(distance_m >= MIN_PATHLOSS_DISTANCE_M) {
        return Err(Error::domain(
            "pathloss_gain",
            format!("distance {distance_m} m below inner radius {MIN_PATHLOSS_DISTANCE_M} m"),
        ));
    }
    let pl_db = 128.1 + 37.6 * (distance_m / 1000.0).log10();
    Ok(10f64.powf(pl_db / 10.0))
}
