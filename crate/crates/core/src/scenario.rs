//! Declarative scenario files: one TOML document with sections mirroring the
//! simulation tables, parsed once into SI-unit configs. Keys suffixed `_db`
//! or `_dbw` are converted to linear values at parse time and never stored
//! in decibels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grouping::GroupingConfig;
use crate::interference::UnderlayScenario;
use crate::lte::LteConfig;
use crate::model::RadioConfig;
use crate::scheduler::Policy;

/// Fully resolved experiment scenario (all linear SI units).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// Master seed; per-trial seeds are derived from it.
    pub seed: u64,
    /// Independent deployments per experiment point.
    pub trials: u32,
    pub node_count: u32,
    pub ring_inner_m: f64,
    pub ring_outer_m: f64,
    /// Full battery capacity in J; initial energies are uniform in (0, full].
    pub full_battery_j: f64,
    /// Payload per duty cycle in bits (the sweep axis overrides this).
    pub payload_bits: f64,
    pub duty_cycle_s: f64,
    /// Static per-cycle energy E_s in J.
    pub static_energy_j: f64,
    /// Resource budget rule: c_t·τ_r = budget_factor·L·max τ_i^min.
    pub budget_factor: f64,
    /// Forced clients per representative in the grouped-lifetime pipeline.
    pub group_size_n: u32,
    pub radio: RadioConfig,
    pub grouping: GroupingConfig,
    pub lte: LteConfig,
    pub underlay: UnderlayScenario,
    pub policies: Vec<Policy>,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            seed: 1,
            trials: 100,
            node_count: 40,
            ring_inner_m: 50.0,
            ring_outer_m: 450.0,
            full_battery_j: 250.0,
            payload_bits: 1000.0,
            duty_cycle_s: 60.0,
            static_energy_j: 50e-6,
            budget_factor: 2.5,
            group_size_n: 2,
            radio: RadioConfig::default(),
            grouping: GroupingConfig::default(),
            lte: LteConfig::default(),
            underlay: UnderlayScenario::default(),
            policies: vec![Policy::Era, Policy::MaxMin, Policy::MaxMinCoop],
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.ring_inner_m > 0.0 && self.ring_inner_m < self.ring_outer_m) {
            return Err(Error::config("cell.inner_m/outer_m", "require 0 < inner < outer"));
        }
        if self.node_count == 0 {
            return Err(Error::config("nodes.count", "must be >= 1"));
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be >= 1"));
        }
        for (name, v) in [
            ("nodes.full_battery_j", self.full_battery_j),
            ("nodes.payload_bits", self.payload_bits),
            ("nodes.duty_cycle_s", self.duty_cycle_s),
            ("nodes.static_energy_j", self.static_energy_j),
            ("resources.budget_factor", self.budget_factor),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(name, format!("must be strictly positive, got {v}")));
            }
        }
        self.radio.validate()?;
        self.lte.validate()?;
        self.underlay.validate()?;
        if self.policies.is_empty() {
            return Err(Error::config("policies", "must name at least one policy"));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawScenario = toml::from_str(text)
            .map_err(|e| Error::parse("scenario", e.message().to_string()))?;
        let scenario = raw.resolve()?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
        Self::from_toml_str(&text)
    }
}

fn db(v: f64) -> f64 {
    10f64.powf(v / 10.0)
}

/// Pick between a linear key and its `_db`/`_dbw` twin; both set is an error.
fn pick(linear: Option<f64>, decibel: Option<f64>, default: f64, field: &str) -> Result<f64> {
    match (linear, decibel) {
        (Some(_), Some(_)) => {
            Err(Error::config(field, "give either the linear key or its dB twin, not both"))
        }
        (Some(v), None) => Ok(v),
        (None, Some(v)) => Ok(db(v)),
        (None, None) => Ok(default),
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    seed: Option<u64>,
    trials: Option<u32>,
    policies: Option<Vec<String>>,
    #[serde(default)]
    cell: RawCell,
    #[serde(default)]
    nodes: RawNodes,
    #[serde(default)]
    radio: RawRadio,
    #[serde(default)]
    grouping: RawGrouping,
    #[serde(default)]
    lte: RawLte,
    #[serde(default)]
    underlay: RawUnderlay,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCell {
    inner_m: Option<f64>,
    outer_m: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNodes {
    count: Option<u32>,
    full_battery_j: Option<f64>,
    payload_bits: Option<f64>,
    duty_cycle_s: Option<f64>,
    static_energy_j: Option<f64>,
    group_size: Option<u32>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRadio {
    bandwidth_hz: Option<f64>,
    element_len_s: Option<f64>,
    total_elements: Option<u64>,
    budget_factor: Option<f64>,
    snr_gap: Option<f64>,
    snr_gap_db: Option<f64>,
    /// Total noise power over the channel; divided by the bandwidth into a PSD.
    noise_w: Option<f64>,
    noise_dbw: Option<f64>,
    max_power_w: Option<f64>,
    max_power_dbw: Option<f64>,
    alpha: Option<f64>,
    circuit_power_w: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrouping {
    incentive_beta: Option<f64>,
    n_max: Option<u32>,
    listen_energy_ratio: Option<f64>,
    attachment_range_m: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLte {
    compensation_beta: Option<f64>,
    symbols_per_prbp: Option<u32>,
    noise_w: Option<f64>,
    noise_dbw: Option<f64>,
    target_snr: Option<f64>,
    target_snr_db: Option<f64>,
    tti_s: Option<f64>,
    max_power_w: Option<f64>,
    max_power_dbw: Option<f64>,
    total_prbp: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawUnderlay {
    pu_distance_m: Option<f64>,
    pu_power_w: Option<f64>,
    pu_power_dbw: Option<f64>,
    sinr_threshold: Option<f64>,
    sinr_threshold_db: Option<f64>,
    noise_w: Option<f64>,
    noise_dbw: Option<f64>,
    /// Pathloss at the 1 km reference distance, in dB.
    pathloss_ref_db: Option<f64>,
    pathloss_exponent: Option<f64>,
    group_radius_m: Option<f64>,
    intra_power_w: Option<f64>,
    intra_power_dbw: Option<f64>,
    intra_exponent: Option<f64>,
    edge_rx_power_w: Option<f64>,
    edge_rx_power_dbw: Option<f64>,
}

impl RawScenario {
    fn resolve(self) -> Result<Scenario> {
        let defaults = Scenario::default();

        let bandwidth = self.radio.bandwidth_hz.unwrap_or(defaults.radio.bandwidth_w);
        let noise_total = pick(
            self.radio.noise_w,
            self.radio.noise_dbw,
            defaults.radio.noise_psd_n0 * defaults.radio.bandwidth_w,
            "radio.noise",
        )?;
        if !(bandwidth > 0.0) {
            return Err(Error::config("radio.bandwidth_hz", "must be > 0"));
        }
        let radio = RadioConfig {
            bandwidth_w: bandwidth,
            resource_element_len_tau_r: self
                .radio
                .element_len_s
                .unwrap_or(defaults.radio.resource_element_len_tau_r),
            total_elements_c_t: self.radio.total_elements.unwrap_or(defaults.radio.total_elements_c_t),
            snr_gap_gamma: pick(self.radio.snr_gap, self.radio.snr_gap_db, 1.0, "radio.snr_gap")?,
            noise_psd_n0: noise_total / bandwidth,
            p_max: pick(self.radio.max_power_w, self.radio.max_power_dbw, 1.0, "radio.max_power")?,
            pa_inefficiency_alpha: self.radio.alpha.unwrap_or(defaults.radio.pa_inefficiency_alpha),
            circuit_power_pc: self.radio.circuit_power_w.unwrap_or(defaults.radio.circuit_power_pc),
        };

        let grouping = GroupingConfig {
            incentive_beta: self
                .grouping
                .incentive_beta
                .unwrap_or(defaults.grouping.incentive_beta),
            n_max: self.grouping.n_max.unwrap_or(defaults.grouping.n_max),
            listen_energy_ratio_xi: self
                .grouping
                .listen_energy_ratio
                .unwrap_or(defaults.grouping.listen_energy_ratio_xi),
            attachment_range_m: self
                .grouping
                .attachment_range_m
                .unwrap_or(defaults.grouping.attachment_range_m),
        };

        let lte = LteConfig {
            compensation_beta_i: self
                .lte
                .compensation_beta
                .unwrap_or(defaults.lte.compensation_beta_i),
            symbols_per_prbp_ns: self
                .lte
                .symbols_per_prbp
                .unwrap_or(defaults.lte.symbols_per_prbp_ns),
            noise_per_block_pn: pick(
                self.lte.noise_w,
                self.lte.noise_dbw,
                defaults.lte.noise_per_block_pn,
                "lte.noise",
            )?,
            target_snr_gamma0: pick(
                self.lte.target_snr,
                self.lte.target_snr_db,
                defaults.lte.target_snr_gamma0,
                "lte.target_snr",
            )?,
            tti: self.lte.tti_s.unwrap_or(defaults.lte.tti),
            p_max: pick(self.lte.max_power_w, self.lte.max_power_dbw, defaults.lte.p_max, "lte.max_power")?,
            total_prbp_c_t: self.lte.total_prbp.unwrap_or(defaults.lte.total_prbp_c_t),
        };

        let ring_inner = self.cell.inner_m.unwrap_or(defaults.ring_inner_m);
        let ring_outer = self.cell.outer_m.unwrap_or(defaults.ring_outer_m);
        let exponent = self.underlay.pathloss_exponent.unwrap_or(defaults.underlay.exponent_delta);
        if !(exponent > 0.0) {
            return Err(Error::config(
                "underlay.pathloss_exponent",
                format!("must be > 0, got {exponent}"),
            ));
        }
        let pathloss_ref_db = self.underlay.pathloss_ref_db.unwrap_or(128.1);
        let pathloss_c = 10f64.powf(-pathloss_ref_db / 10.0) * 1000f64.powf(exponent);
        let underlay = UnderlayScenario {
            pu_distance_dcb: self.underlay.pu_distance_m.unwrap_or(defaults.underlay.pu_distance_dcb),
            pu_power_ptpu: pick(
                self.underlay.pu_power_w,
                self.underlay.pu_power_dbw,
                defaults.underlay.pu_power_ptpu,
                "underlay.pu_power",
            )?,
            sinr_threshold_gamma_th: pick(
                self.underlay.sinr_threshold,
                self.underlay.sinr_threshold_db,
                defaults.underlay.sinr_threshold_gamma_th,
                "underlay.sinr_threshold",
            )?,
            noise_n0_total: pick(
                self.underlay.noise_w,
                self.underlay.noise_dbw,
                defaults.underlay.noise_n0_total,
                "underlay.noise",
            )?,
            pathloss_const_c: pathloss_c,
            exponent_delta: exponent,
            ring_dn: ring_inner,
            ring_dx: ring_outer,
            group_count_m: 0,
            intra_group_power_ptm: pick(
                self.underlay.intra_power_w,
                self.underlay.intra_power_dbw,
                defaults.underlay.intra_group_power_ptm,
                "underlay.intra_power",
            )?,
            group_radius_delta: self
                .underlay
                .group_radius_m
                .unwrap_or(grouping.attachment_range_m),
            intra_exponent_delta_m: self
                .underlay
                .intra_exponent
                .unwrap_or(defaults.underlay.intra_exponent_delta_m),
            intra_const_cm: pathloss_c,
            edge_rx_power_prm: pick(
                self.underlay.edge_rx_power_w,
                self.underlay.edge_rx_power_dbw,
                defaults.underlay.edge_rx_power_prm,
                "underlay.edge_rx_power",
            )?,
        };

        let policies = match self.policies {
            None => defaults.policies,
            Some(names) => names
                .iter()
                .map(|s| s.parse::<Policy>())
                .collect::<Result<Vec<_>>>()?,
        };

        Ok(Scenario {
            seed: self.seed.unwrap_or(defaults.seed),
            trials: self.trials.unwrap_or(defaults.trials),
            node_count: self.nodes.count.unwrap_or(defaults.node_count),
            ring_inner_m: ring_inner,
            ring_outer_m: ring_outer,
            full_battery_j: self.nodes.full_battery_j.unwrap_or(defaults.full_battery_j),
            payload_bits: self.nodes.payload_bits.unwrap_or(defaults.payload_bits),
            duty_cycle_s: self.nodes.duty_cycle_s.unwrap_or(defaults.duty_cycle_s),
            static_energy_j: self.nodes.static_energy_j.unwrap_or(defaults.static_energy_j),
            budget_factor: self.radio.budget_factor.unwrap_or(defaults.budget_factor),
            group_size_n: self.nodes.group_size.unwrap_or(defaults.group_size_n),
            radio,
            grouping,
            lte,
            underlay,
            policies,
        })
    }
}
