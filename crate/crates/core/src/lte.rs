//! LTE-discretized cooperation-incentive scheduling: transport-block-size
//! table, open-loop power formula, and the PRBP allocation algorithm.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Allocation, NodeState, RadioConfig};
use crate::scheduler::{Policy, ScheduleResult};

/// Transport block sizes in bits, keyed by (PRBP count, TBS index 0..26).
#[derive(Debug, Clone)]
pub struct TbsTable {
    entries: BTreeMap<(u32, u32), u32>,
    max_prbp: u32,
}

pub const TBS_INDEX_MAX: u32 = 26;

impl TbsTable {
    /// Parse the `prbp,index,tbs_bits` CSV. Duplicates are rejected; every
    /// covered PRBP count must carry all 27 indices; monotonicity in both
    /// axes is enforced.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == "prbp,index,tbs_bits" => {}
            _ => return Err(Error::parse("line 1", "expected header `prbp,index,tbs_bits`")),
        }
        for (lineno, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let loc = format!("line {}", lineno + 1);
            let mut parts = line.split(',');
            let mut field = |name: &str| -> Result<u32> {
                parts
                    .next()
                    .ok_or_else(|| Error::parse(loc.clone(), format!("missing field `{name}`")))?
                    .trim()
                    .parse::<u32>()
                    .map_err(|e| Error::parse(loc.clone(), format!("field `{name}`: {e}")))
            };
            let prbp = field("prbp")?;
            let index = field("index")?;
            let tbs = field("tbs_bits")?;
            if parts.next().is_some() {
                return Err(Error::parse(loc, "trailing fields"));
            }
            if !(1..=110).contains(&prbp) {
                return Err(Error::parse(loc, format!("prbp {prbp} outside 1..=110")));
            }
            if index > TBS_INDEX_MAX {
                return Err(Error::parse(loc, format!("index {index} outside 0..=26")));
            }
            if entries.insert((prbp, index), tbs).is_some() {
                return Err(Error::parse(loc, format!("duplicate entry ({prbp}, {index})")));
            }
        }
        let max_prbp = entries.keys().map(|k| k.0).max().unwrap_or(0);
        if max_prbp == 0 {
            return Err(Error::parse("end of file", "empty table"));
        }
        let table = TbsTable { entries, max_prbp };
        table.check_complete_and_monotone()?;
        Ok(table)
    }

    fn check_complete_and_monotone(&self) -> Result<()> {
        for prbp in 1..=self.max_prbp {
            for index in 0..=TBS_INDEX_MAX {
                let v = self.entries.get(&(prbp, index)).ok_or_else(|| {
                    Error::parse("table body", format!("gap at ({prbp}, {index}) inside covered range"))
                })?;
                if index > 0 && self.entries[&(prbp, index - 1)] > *v {
                    return Err(Error::parse(
                        "table body",
                        format!("non-monotone in index at ({prbp}, {index})"),
                    ));
                }
                if prbp > 1 && self.entries[&(prbp - 1, index)] > *v {
                    return Err(Error::parse(
                        "table body",
                        format!("non-monotone in prbp at ({prbp}, {index})"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Built-in table: the first four PRBP columns of the 3GPP TBS table plus
    /// a proportionally extended desk-scale range up to 10 PRBPs.
    pub fn builtin() -> Self {
        TbsTable::from_csv(include_str!("../data/tbs_table.csv")).expect("builtin table is valid")
    }

    pub fn max_prbp(&self) -> u32 {
        self.max_prbp
    }

    /// TBS(c, δ) in bits.
    pub fn lookup(&self, c: u32, delta: u32) -> Result<u32> {
        self.entries
            .get(&(c, delta))
            .copied()
            .ok_or_else(|| Error::TableRange(format!("({c}, {delta}) not in loaded table")))
    }

    /// Smallest δ with TBS(c, δ) ≥ d, or None when even δ = 26 is too small.
    pub fn min_tbs_index(&self, c: u32, d: f64) -> Result<Option<u32>> {
        for delta in 0..=TBS_INDEX_MAX {
            if self.lookup(c, delta)? as f64 >= d {
                return Ok(Some(delta));
            }
        }
        Ok(None)
    }

    /// Smallest PRBP count whose top index carries `d` bits.
    pub fn c_min(&self, d: f64) -> Result<u32> {
        for c in 1..=self.max_prbp {
            if self.lookup(c, TBS_INDEX_MAX)? as f64 >= d {
                return Ok(c);
            }
        }
        Err(Error::TableRange(format!("payload {d} exceeds table capacity")))
    }
}

/// LTE air-interface constants. dB-valued inputs are converted at parse time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LteConfig {
    /// Downlink pathloss compensation factor β_i in [0, 1].
    pub compensation_beta_i: f64,
    /// OFDM symbols per PRBP, N_s.
    pub symbols_per_prbp_ns: u32,
    /// Noise power per resource block p_n in W.
    pub noise_per_block_pn: f64,
    /// Target SNR γ0, linear.
    pub target_snr_gamma0: f64,
    /// Transmission time interval in s.
    pub tti: f64,
    /// Maximum transmit power in W.
    pub p_max: f64,
    /// Total PRBPs c_t in the pool.
    pub total_prbp_c_t: u64,
}

impl LteConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.compensation_beta_i) {
            return Err(Error::config("compensation_beta_i", "must be in [0, 1]"));
        }
        if self.symbols_per_prbp_ns == 0 {
            return Err(Error::config("symbols_per_prbp_ns", "must be > 0"));
        }
        if !(self.tti > 0.0 && self.p_max > 0.0) {
            return Err(Error::config("tti/p_max", "must be > 0"));
        }
        Ok(())
    }
}

impl Default for LteConfig {
    /// Table-II-style constants: β_i = 0.91, N_s = 12, 1 ms TTI,
    /// P_max = −6 dBW, target SNR = −5 dB, −121 dBW noise per block.
    fn default() -> Self {
        LteConfig {
            compensation_beta_i: 0.91,
            symbols_per_prbp_ns: 12,
            noise_per_block_pn: 10f64.powf(-12.1),
            target_snr_gamma0: 10f64.powf(-0.5),
            tti: 1e-3,
            p_max: 10f64.powf(-0.6),
            total_prbp_c_t: 60,
        }
    }
}

/// Open-loop uplink power for `c` PRBPs at TBS index `delta`:
/// c·(β_i(γ0 + p_n) + (1 − β_i·P_max))·β_i·γ_i·(2^(1.25·TBS(c,δ)/(12·c·N_s)) − 1).
///
/// `gamma_i` is the linear downlink pathloss. The formula is evaluated as
/// printed; absolute powers are model-internal.
pub fn lte_power(c: u32, delta: u32, cfg: &LteConfig, gamma_i: f64, tbs: &TbsTable) -> Result<f64> {
    if c < 1 {
        return Err(Error::domain("lte_power", "c must be >= 1"));
    }
    let tbs_bits = tbs.lookup(c, delta)? as f64;
    let front = cfg.compensation_beta_i * (cfg.target_snr_gamma0 + cfg.noise_per_block_pn)
        + (1.0 - cfg.compensation_beta_i * cfg.p_max);
    let exponent = 1.25 * tbs_bits / (12.0 * c as f64 * cfg.symbols_per_prbp_ns as f64);
    Ok(c as f64 * front * cfg.compensation_beta_i * gamma_i * (exponent.exp2() - 1.0))
}

/// Lifetime under the LTE airtime model: E·T / (Es + n·Eh + TTI·(Pc + α·P)).
pub fn lte_lifetime(node: &NodeState, radio: &RadioConfig, cfg: &LteConfig, p: f64) -> f64 {
    let per_cycle = node.static_energy_es
        + node.clients_n as f64 * node.listen_energy_eh
        + cfg.tti * (radio.circuit_power_pc + radio.pa_inefficiency_alpha * p);
    node.remaining_energy_e * node.duty_cycle_t / per_cycle
}

/// Linear downlink pathloss, normalized at a fixed 1.5 km reference so the
/// formula's additive constants and the transmit-power cap act on the same
/// scale. The reference keeps a cell-edge node's large-count power asymptote
/// under the cap for payloads up to ~2 kb while leaving single-PRBP
/// transmissions at the top TBS index power-limited beyond roughly 350 m.
fn downlink_pathloss(node: &NodeState) -> f64 {
    let reference_m = 1_500.0f64;
    node.pathloss_gain_g / 10f64.powf((128.1 + 37.6 * (reference_m / 1_000.0).log10()) / 10.0)
}

/// Best (c, δ, P, L) over j = 1..=c_cap PRBPs for one node; powers above
/// P_max zero the candidate's lifetime.
fn best_prbp_choice(
    node: &NodeState,
    radio: &RadioConfig,
    cfg: &LteConfig,
    tbs: &TbsTable,
    c_cap: u32,
) -> Result<(u32, Option<u32>, f64, f64)> {
    let gamma_i = downlink_pathloss(node);
    let mut best: (u32, Option<u32>, f64, f64) = (0, None, f64::INFINITY, 0.0);
    for j in 1..=c_cap.min(tbs.max_prbp()) {
        let Some(delta) = tbs.min_tbs_index(j, node.payload_d)? else {
            continue;
        };
        let p = lte_power(j, delta, cfg, gamma_i, tbs)?;
        let l = if p > cfg.p_max { 0.0 } else { lte_lifetime(node, radio, cfg, p) };
        if l > best.3 {
            best = (j, Some(delta), p, l);
        }
    }
    Ok(best)
}

/// Cooperation-incentive PRBP scheduler.
///
/// Each node first receives c_i^min·(1 + β·n_i) candidate PRBPs and keeps the
/// count that maximizes its lifetime (power-capped candidates score zero).
/// Leftover PRBPs then go one at a time to the current minimum-lifetime node,
/// granted only while an extra PRBP with a re-optimized TBS index strictly
/// increases that node's lifetime.
pub fn algorithm1(
    nodes: &[NodeState],
    incentive_beta: f64,
    radio: &RadioConfig,
    cfg: &LteConfig,
    tbs: &TbsTable,
) -> Result<ScheduleResult> {
    cfg.validate()?;
    let mut counts = vec![0u32; nodes.len()];
    let mut deltas: Vec<Option<u32>> = vec![None; nodes.len()];
    let mut powers = vec![f64::INFINITY; nodes.len()];
    let mut lifetimes = vec![0.0f64; nodes.len()];

    for (i, node) in nodes.iter().enumerate() {
        let c_min = tbs.c_min(node.payload_d)?;
        let c_in = ((c_min as f64) * (1.0 + incentive_beta * node.clients_n as f64)).floor() as u32;
        let c_in = c_in.max(c_min);
        let (c, delta, p, l) = best_prbp_choice(node, radio, cfg, tbs, c_in)?;
        if delta.is_none() || l <= 0.0 {
            // Every candidate count within the window is power-capped or out
            // of table range; leftover PRBPs below may still rescue the node.
            counts[i] = c_min;
            continue;
        }
        counts[i] = c;
        deltas[i] = delta;
        powers[i] = p;
        lifetimes[i] = l;
    }

    // Leftover PRBPs: greedy max-min.
    let used: u64 = counts.iter().map(|&c| c as u64).sum();
    let mut leftover = cfg.total_prbp_c_t.saturating_sub(used);
    while leftover > 0 {
        // Lowest id among the current minimum-lifetime nodes.
        let (i, _) = lifetimes
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
            .expect("non-empty");
        let c_next = counts[i] + 1;
        if c_next > tbs.max_prbp() {
            break;
        }
        let node = &nodes[i];
        let Some(delta) = tbs.min_tbs_index(c_next, node.payload_d)? else {
            break;
        };
        let p = lte_power(c_next, delta, cfg, downlink_pathloss(node), tbs)?;
        let l = if p > cfg.p_max { 0.0 } else { lte_lifetime(node, radio, cfg, p) };
        if l <= lifetimes[i] {
            break;
        }
        counts[i] = c_next;
        deltas[i] = Some(delta);
        powers[i] = p;
        lifetimes[i] = l;
        leftover -= 1;
    }

    let allocations: Vec<Allocation> = nodes
        .iter()
        .zip(&counts)
        .zip(&powers)
        .map(|((n, &c), &p)| Allocation {
            node_id: n.id,
            tau: cfg.tti,
            elements_c: c as u64,
            tx_power_p: p,
        })
        .collect();
    let min_lifetime = lifetimes.iter().copied().fold(f64::INFINITY, f64::min);
    // Feasibility is judged on the final allocation: every node transmitting
    // under the cap within the shared pool.
    let feasible = counts.iter().map(|&c| c as u64).sum::<u64>() <= cfg.total_prbp_c_t
        && lifetimes.iter().all(|&l| l > 0.0)
        && powers.iter().all(|&p| p <= cfg.p_max);
    Ok(ScheduleResult {
        policy: Policy::LteCoop,
        allocations,
        achieved_lifetimes: lifetimes,
        min_lifetime,
        feasible,
    })
}

/// Equal-PRBP LTE baseline: ⌊c_t/L⌋ PRBPs each (at least 1), remainder to
/// the lowest ids, TBS index re-derived per node.
pub fn lte_era(
    nodes: &[NodeState],
    radio: &RadioConfig,
    cfg: &LteConfig,
    tbs: &TbsTable,
) -> Result<ScheduleResult> {
    let n = nodes.len() as u64;
    let base = (cfg.total_prbp_c_t / n).max(1);
    let remainder = if cfg.total_prbp_c_t / n >= 1 { cfg.total_prbp_c_t % n } else { 0 };
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by_key(|&i| nodes[i].id);

    let mut counts = vec![base as u32; nodes.len()];
    for &i in order.iter().take(remainder as usize) {
        counts[i] += 1;
    }

    let mut lifetimes = vec![0.0f64; nodes.len()];
    let mut powers = vec![f64::INFINITY; nodes.len()];
    let mut feasible = counts.iter().map(|&c| c as u64).sum::<u64>() <= cfg.total_prbp_c_t;
    for (i, node) in nodes.iter().enumerate() {
        let c = counts[i].min(tbs.max_prbp());
        counts[i] = c;
        match tbs.min_tbs_index(c, node.payload_d)? {
            Some(delta) => {
                let p = lte_power(c, delta, cfg, downlink_pathloss(node), tbs)?;
                if p > cfg.p_max {
                    feasible = false;
                }
                powers[i] = p;
                lifetimes[i] = lte_lifetime(node, radio, cfg, p);
            }
            None => {
                feasible = false;
            }
        }
    }
    let allocations: Vec<Allocation> = nodes
        .iter()
        .zip(&counts)
        .zip(&powers)
        .map(|((nd, &c), &p)| Allocation {
            node_id: nd.id,
            tau: cfg.tti,
            elements_c: c as u64,
            tx_power_p: p,
        })
        .collect();
    let min_lifetime = lifetimes.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ScheduleResult {
        policy: Policy::LteEra,
        allocations,
        achieved_lifetimes: lifetimes,
        min_lifetime,
        feasible,
    })
}
