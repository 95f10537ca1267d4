//! Underlay admission budgets for intra-group transmissions and a Monte
//! Carlo outage estimator for the primary uplink user.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Single-cell underlay scenario: one primary uplink user plus M machine
/// groups reusing its resource.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnderlayScenario {
    /// Known primary-user-to-BS distance d_cb in m.
    pub pu_distance_dcb: f64,
    /// Primary-user transmit power in W.
    pub pu_power_ptpu: f64,
    /// SINR threshold γ_th, linear.
    pub sinr_threshold_gamma_th: f64,
    /// Total noise power at the BS in W.
    pub noise_n0_total: f64,
    /// Pathloss constant c in g = c/d^δ.
    pub pathloss_const_c: f64,
    /// Pathloss exponent δ on the node→BS links.
    pub exponent_delta: f64,
    /// Deployment ring (d_n, d_x) in m.
    pub ring_dn: f64,
    pub ring_dx: f64,
    /// Number of concurrently active groups M.
    pub group_count_m: u32,
    /// Intra-group transmit power P_t^m in W.
    pub intra_group_power_ptm: f64,
    /// Group radius Δ in m.
    pub group_radius_delta: f64,
    /// Intra-group pathloss exponent δ_m.
    pub intra_exponent_delta_m: f64,
    /// Intra-group pathloss constant c_m.
    pub intra_const_cm: f64,
    /// Required received power at the group edge, P_r^m in W.
    pub edge_rx_power_prm: f64,
}

impl UnderlayScenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.ring_dn > 0.0 && self.ring_dn < self.ring_dx) {
            return Err(Error::config("ring", "require 0 < d_n < d_x"));
        }
        if !(self.sinr_threshold_gamma_th > 0.0) {
            return Err(Error::config("sinr_threshold_gamma_th", "must be > 0"));
        }
        if !(self.exponent_delta > 0.0) {
            return Err(Error::config("exponent_delta", "must be > 0"));
        }
        Ok(())
    }
}

impl Default for UnderlayScenario {
    /// Table-style defaults: 1 W primary user at 250 m, 2 dB threshold,
    /// −121 dBW noise, urban-macro pathloss (c = 10^−12.81·1000^3.76,
    /// δ = 3.76), deployment ring 50–450 m, 30 m groups.
    fn default() -> Self {
        let delta = 3.76;
        let c = 10f64.powf(-128.1 / 10.0) * 1000f64.powf(delta);
        UnderlayScenario {
            pu_distance_dcb: 250.0,
            pu_power_ptpu: 1.0,
            sinr_threshold_gamma_th: 10f64.powf(0.2),
            noise_n0_total: 10f64.powf(-12.1),
            pathloss_const_c: c,
            exponent_delta: delta,
            ring_dn: 50.0,
            ring_dx: 450.0,
            group_count_m: 0,
            intra_group_power_ptm: 1e-6,
            group_radius_delta: 30.0,
            intra_exponent_delta_m: 2.0,
            intra_const_cm: c,
            edge_rx_power_prm: 1e-9,
        }
    }
}

/// Threshold interference I_th = P_t^pu·c/(γ_th·d_cb^δ) − N0.
///
/// A negative value means the primary link cannot tolerate any underlay
/// interference (no admissible M > 0).
pub fn interference_threshold(scenario: &UnderlayScenario) -> f64 {
    scenario.pu_power_ptpu * scenario.pathloss_const_c
        / (scenario.sinr_threshold_gamma_th * scenario.pu_distance_dcb.powf(scenario.exponent_delta))
        - scenario.noise_n0_total
}

/// E{d^−δ} under the ring density 2d/d_x² on [d_n, d_x]:
/// (2/d_x²)·ln(d_x/d_n) when δ = 2, else 2(d_x^{2−δ} − d_n^{2−δ})/(d_x²(2−δ)).
pub fn mean_inverse_distance_moment(d_n: f64, d_x: f64, delta: f64) -> Result<f64> {
    if !(d_n > 0.0 && d_n < d_x) {
        return Err(Error::domain("mean_inverse_distance_moment", "require 0 < d_n < d_x"));
    }
    if (delta - 2.0).abs() < 1e-12 {
        Ok(2.0 / (d_x * d_x) * (d_x / d_n).ln())
    } else {
        Ok(2.0 * (d_x.powf(2.0 - delta) - d_n.powf(2.0 - delta)) / (d_x * d_x * (2.0 - delta)))
    }
}

/// Maximum admissible group count under the long-term-average budget:
/// ⌊ I_th / (c·P_t^m·E{d^−δ}) ⌋, floored at zero.
pub fn max_group_count(scenario: &UnderlayScenario) -> Result<u32> {
    if !(scenario.intra_group_power_ptm > 0.0) {
        return Err(Error::domain("max_group_count", "P_t^m must be > 0"));
    }
    let i_th = interference_threshold(scenario);
    if i_th <= 0.0 {
        return Ok(0);
    }
    let moment =
        mean_inverse_distance_moment(scenario.ring_dn, scenario.ring_dx, scenario.exponent_delta)?;
    let budget = i_th / (scenario.pathloss_const_c * scenario.intra_group_power_ptm * moment);
    Ok(budget.floor().max(0.0) as u32)
}

/// Radius/count admission frontier: the bound B with Δ^{δ_m}·M ≤ B, derived
/// for δ > 2 by substituting P_t^m = P_r^m·Δ^{δ_m}/c_m into the group-count
/// budget.
pub fn radius_count_frontier(scenario: &UnderlayScenario) -> Result<f64> {
    let delta = scenario.exponent_delta;
    if delta <= 2.0 {
        return Err(Error::domain(
            "radius_count_frontier",
            format!("derived for pathloss exponent > 2 (got {delta}); use the δ=2 moment branch directly"),
        ));
    }
    let i_th = interference_threshold(scenario);
    let (d_n, d_x) = (scenario.ring_dn, scenario.ring_dx);
    let geometry = d_x * d_x * (delta - 2.0)
        / (1.0 / d_n.powf(delta - 2.0) - 1.0 / d_x.powf(delta - 2.0));
    Ok(geometry * scenario.intra_const_cm * i_th
        / (2.0 * scenario.pathloss_const_c * scenario.edge_rx_power_prm))
}

/// Per-group transmit power that spends the whole interference budget among
/// `m` groups; zero when the budget is infeasible.
pub fn budgeted_intra_power(scenario: &UnderlayScenario, m: u32) -> Result<f64> {
    if m == 0 {
        return Ok(0.0);
    }
    let i_th = interference_threshold(scenario);
    if i_th <= 0.0 {
        return Ok(0.0);
    }
    let moment =
        mean_inverse_distance_moment(scenario.ring_dn, scenario.ring_dx, scenario.exponent_delta)?;
    Ok(i_th / (scenario.pathloss_const_c * m as f64 * moment))
}

/// Monte Carlo outage probability P(γ_pu < γ_th) with `m` active groups.
///
/// One transmitter per group, positions uniform on the (d_n, d_x) ring,
/// independent unit-mean exponential fading on every link including the
/// primary one, and P_t^m set by the interference budget for the given M.
/// Trials are seeded independently (counter-split), so a partitioned run
/// reduces to the identical count.
pub fn outage_probability(
    scenario: &UnderlayScenario,
    m: u32,
    trials: u64,
    seed: u64,
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::domain("outage_probability", "trials must be >= 1"));
    }
    scenario.validate()?;
    let ptm = budgeted_intra_power(scenario, m)?;
    let c = scenario.pathloss_const_c;
    let delta = scenario.exponent_delta;
    let g_pu_mean = c * scenario.pu_distance_dcb.powf(-delta);
    let (dn2, dx2) = (scenario.ring_dn * scenario.ring_dn, scenario.ring_dx * scenario.ring_dx);

    let mut outages: u64 = 0;
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(split_seed(seed, trial));
        let h_pu = exp1(&mut rng);
        let mut interference = 0.0;
        for _ in 0..m {
            let d = (dn2 + (dx2 - dn2) * rng.gen::<f64>()).sqrt();
            let h = exp1(&mut rng);
            interference += ptm * c * d.powf(-delta) * h;
        }
        let gamma = scenario.pu_power_ptpu * g_pu_mean * h_pu
            / (interference + scenario.noise_n0_total);
        if gamma < scenario.sinr_threshold_gamma_th {
            outages += 1;
        }
    }
    Ok(outages as f64 / trials as f64)
}

/// Mean aggregate interference over seeded trials at the scenario's fixed
/// intra-group power (long-term-average admission audit).
pub fn mean_aggregate_interference(
    scenario: &UnderlayScenario,
    m: u32,
    trials: u64,
    seed: u64,
) -> Result<f64> {
    let ptm = scenario.intra_group_power_ptm;
    let c = scenario.pathloss_const_c;
    let delta = scenario.exponent_delta;
    let (dn2, dx2) = (scenario.ring_dn * scenario.ring_dn, scenario.ring_dx * scenario.ring_dx);
    let mut total = 0.0;
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(split_seed(seed, trial));
        let _ = exp1(&mut rng);
        for _ in 0..m {
            let d = (dn2 + (dx2 - dn2) * rng.gen::<f64>()).sqrt();
            let h = exp1(&mut rng);
            total += ptm * c * d.powf(-delta) * h;
        }
    }
    Ok(total / trials as f64)
}

/// Closed-form Rayleigh outage with no interferers:
/// 1 − exp(−γ_th·N0·d_cb^δ/(P_t^pu·c)).
pub fn rayleigh_outage_no_interference(scenario: &UnderlayScenario) -> f64 {
    let arg = scenario.sinr_threshold_gamma_th
        * scenario.noise_n0_total
        * scenario.pu_distance_dcb.powf(scenario.exponent_delta)
        / (scenario.pu_power_ptpu * scenario.pathloss_const_c);
    1.0 - (-arg).exp()
}

/// SplitMix64 counter-based seed derivation.
pub fn split_seed(master: u64, counter: u64) -> u64 {
    let mut z = master ^ counter.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn exp1(rng: &mut impl Rng) -> f64 {
    -(1.0 - rng.gen::<f64>()).ln()
}
