//! Experiment pipelines: seeded deployments, grouped and ungrouped lifetime
//! sweeps, LTE sweeps, outage grids, and deterministic CSV/JSON reports.
//!
//! Trials fan out over a worker pool but are reduced in trial order, so the
//! report bytes never depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grouping::optimal_clients;
use crate::interference::{outage_probability, split_seed, UnderlayScenario};
use crate::lte::{algorithm1, lte_era, TbsTable};
use crate::model::{pathloss_gain, tau_min, NodeState, RadioConfig};
use crate::scenario::Scenario;
use crate::scheduler::{
    schedule_era, schedule_maxmin, schedule_tra, Policy, ScheduleProblem, ScheduleResult,
};

/// One seeded node placement with planar coordinates (base station at the
/// origin).
#[derive(Debug, Clone, PartialEq)]
pub struct Deployment {
    pub nodes: Vec<NodeState>,
    pub positions: Vec<[f64; 2]>,
}

/// Draw a deployment: positions uniform on the cell ring, initial energies
/// uniform in (0, full battery].
pub fn deploy(scenario: &Scenario, seed: u64) -> Result<Deployment> {
    scenario.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (r_in2, r_out2) =
        (scenario.ring_inner_m * scenario.ring_inner_m, scenario.ring_outer_m * scenario.ring_outer_m);
    let mut nodes = Vec::with_capacity(scenario.node_count as usize);
    let mut positions = Vec::with_capacity(scenario.node_count as usize);
    for id in 0..scenario.node_count {
        let r = (r_in2 + (r_out2 - r_in2) * rng.gen::<f64>()).sqrt();
        let angle = rng.gen::<f64>() * std::f64::consts::TAU;
        let energy = scenario.full_battery_j * (1.0 - rng.gen::<f64>());
        positions.push([r * angle.cos(), r * angle.sin()]);
        nodes.push(NodeState {
            id,
            remaining_energy_e: energy,
            duty_cycle_t: scenario.duty_cycle_s,
            payload_d: scenario.payload_bits,
            static_energy_es: scenario.static_energy_j,
            listen_energy_eh: scenario.grouping.listen_energy_ratio_xi * scenario.static_energy_j,
            pathloss_gain_g: pathloss_gain(r)?,
            clients_n: 0,
            distance_to_bs: r,
        });
    }
    Ok(Deployment { nodes, positions })
}

/// Resource budget rule: c_t·τ_r = factor·L·max τ_i^min over the full set.
pub fn budget_elements(nodes: &[NodeState], radio: &RadioConfig, factor: f64) -> u64 {
    let max_tau_min = nodes
        .iter()
        .map(|n| tau_min(n.payload_d, n.channel_g(radio), radio.p_max, radio.bandwidth_w))
        .fold(0.0f64, f64::max);
    let c = (factor * nodes.len() as f64 * max_tau_min / radio.resource_element_len_tau_r).ceil();
    (c as u64).max(nodes.len() as u64)
}

/// One report row: `kind` names the experiment, `x` the sweep coordinate,
/// `factor` the mean normalized to the matching equal-allocation baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub kind: String,
    pub policy: String,
    pub x: f64,
    pub mean: f64,
    pub factor: f64,
    pub std_err: f64,
    pub included: u32,
    pub excluded: u32,
}

/// Report: config echo plus rows; CSV and JSON renderings are byte-stable
/// for a fixed scenario and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub scenario: Scenario,
    pub rows: Vec<MetricsRow>,
}

impl MetricsReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,policy,x,mean,factor,std_err,included,excluded\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.kind, r.policy, r.x, r.mean, r.factor, r.std_err, r.included, r.excluded
            ));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::parse("metrics json", e.to_string()))
    }
}

/// Forced grouping for the cooperative pipelines: nodes are chunked into
/// groups of `n + 1`; in each chunk the member closest to the base station
/// (lowest attenuation, ties by id) represents the others. Returns the
/// reduced scheduled set (representatives carrying n clients, plus solos
/// from a partial trailing chunk).
pub fn force_groups(nodes: &[NodeState], n: u32) -> Vec<NodeState> {
    if n == 0 {
        return nodes.to_vec();
    }
    let mut reduced = Vec::new();
    for chunk in nodes.chunks(n as usize + 1) {
        if chunk.len() == 1 {
            reduced.push(chunk[0]);
            continue;
        }
        let rep = chunk
            .iter()
            .min_by(|a, b| {
                a.pathloss_gain_g.total_cmp(&b.pathloss_gain_g).then(a.id.cmp(&b.id))
            })
            .expect("non-empty chunk");
        let mut rep = *rep;
        rep.clients_n = chunk.len() as u32 - 1;
        reduced.push(rep);
    }
    reduced
}

fn mean_and_stderr(samples: &[f64]) -> (f64, f64) {
    if samples.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn run_policy(
    policy: Policy,
    full: &[NodeState],
    scenario: &Scenario,
    radio: &RadioConfig,
    seed: u64,
) -> Result<ScheduleResult> {
    match policy {
        Policy::Era => {
            let p = ScheduleProblem::new(full.to_vec(), *radio, 0.0)?;
            schedule_era(&p)
        }
        Policy::Tra => {
            let p = ScheduleProblem::new(full.to_vec(), *radio, 0.0)?;
            schedule_tra(&p)
        }
        Policy::MaxMin => {
            let p = ScheduleProblem::new(full.to_vec(), *radio, 0.0)?;
            schedule_maxmin(&p, seed)
        }
        Policy::MaxMinCoop => {
            let reduced = force_groups(full, scenario.group_size_n);
            let dhat =
                full.iter().map(|n| n.payload_d).sum::<f64>() / full.len() as f64;
            let p = ScheduleProblem::new(reduced, *radio, scenario.grouping.incentive_beta)?
                .with_mean_payload(dhat);
            schedule_maxmin(&p, seed)
        }
        Policy::LteCoop | Policy::LteEra => Err(Error::config(
            "policies",
            format!("{policy} belongs to the LTE pipeline"),
        )),
    }
}

/// Lifetime sweep over payload sizes: for each payload and policy, the mean
/// first-energy-drain lifetime over seeded deployments, normalized to the
/// equal-allocation baseline. Infeasible trials are excluded and counted.
pub fn run_lifetime_experiment(
    scenario: &Scenario,
    group_size_n: u32,
    payload_sweep: &[f64],
) -> Result<MetricsReport> {
    if !scenario.policies.contains(&Policy::Era) {
        return Err(Error::config("policies", "lifetime experiment requires the era baseline"));
    }
    let scenario = Scenario { group_size_n, ..scenario.clone() };
    let mut rows = Vec::new();
    for (pi, &payload) in payload_sweep.iter().enumerate() {
        let sc = Scenario { payload_bits: payload, ..scenario.clone() };
        let trial_outs: Vec<Vec<Option<f64>>> = (0..sc.trials)
            .into_par_iter()
            .map(|t| -> Result<Vec<Option<f64>>> {
                let dseed = split_seed(sc.seed, (pi as u64) * sc.trials as u64 + t as u64);
                let dep = deploy(&sc, dseed)?;
                let c_t = budget_elements(&dep.nodes, &sc.radio, sc.budget_factor);
                let radio = RadioConfig { total_elements_c_t: c_t, ..sc.radio };
                sc.policies
                    .iter()
                    .enumerate()
                    .map(|(qi, &pol)| {
                        let pseed = split_seed(dseed, qi as u64 + 1);
                        let res = run_policy(pol, &dep.nodes, &sc, &radio, pseed)?;
                        Ok(res.feasible.then_some(res.min_lifetime))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;

        let mut means = vec![0.0f64; sc.policies.len()];
        let mut pol_rows = Vec::new();
        for (qi, &pol) in sc.policies.iter().enumerate() {
            let samples: Vec<f64> =
                trial_outs.iter().filter_map(|t| t[qi]).collect();
            let excluded = sc.trials - samples.len() as u32;
            let (mean, se) = mean_and_stderr(&samples);
            means[qi] = mean;
            pol_rows.push(MetricsRow {
                kind: "lifetime".into(),
                policy: pol.to_string(),
                x: payload,
                mean,
                factor: 0.0,
                std_err: se,
                included: samples.len() as u32,
                excluded,
            });
        }
        let era_mean = means[sc.policies.iter().position(|&p| p == Policy::Era).unwrap()];
        for row in &mut pol_rows {
            row.factor = row.mean / era_mean;
        }
        rows.extend(pol_rows);
    }
    Ok(MetricsReport { scenario, rows })
}

/// Mean optimal client count n* over deployments, per (β, ξ) grid point.
pub fn run_motivation_experiment(
    scenario: &Scenario,
    betas: &[f64],
    xis: &[f64],
) -> Result<MetricsReport> {
    let mut rows = Vec::new();
    for &beta in betas {
        for &xi in xis {
            let cfg = crate::grouping::GroupingConfig {
                incentive_beta: beta,
                listen_energy_ratio_xi: xi,
                ..scenario.grouping
            };
            let samples: Vec<f64> = (0..scenario.trials)
                .into_par_iter()
                .map(|t| -> Result<f64> {
                    let dseed = split_seed(scenario.seed, t as u64);
                    let mut sc = scenario.clone();
                    sc.grouping = cfg;
                    let dep = deploy(&sc, dseed)?;
                    let total: u64 = dep
                        .nodes
                        .iter()
                        .map(|n| optimal_clients(n, &sc.radio, &cfg).map(u64::from))
                        .sum::<Result<u64>>()?;
                    Ok(total as f64 / dep.nodes.len() as f64)
                })
                .collect::<Result<_>>()?;
            let (mean, se) = mean_and_stderr(&samples);
            rows.push(MetricsRow {
                kind: "motivation".into(),
                policy: format!("beta={beta}"),
                x: xi,
                mean,
                factor: 1.0,
                std_err: se,
                included: scenario.trials,
                excluded: 0,
            });
        }
    }
    Ok(MetricsReport { scenario: scenario.clone(), rows })
}

/// LTE payload sweep over the grouped reduced set: Algorithm-1 scheduling
/// against the equal-PRBP baseline, sharing one PRBP pool.
pub fn run_lte_experiment(scenario: &Scenario, payload_sweep: &[f64]) -> Result<MetricsReport> {
    let tbs = TbsTable::builtin();
    let policies: Vec<Policy> = {
        let lte: Vec<Policy> = scenario
            .policies
            .iter()
            .copied()
            .filter(|p| matches!(p, Policy::LteCoop | Policy::LteEra))
            .collect();
        if lte.is_empty() {
            vec![Policy::LteEra, Policy::LteCoop]
        } else {
            lte
        }
    };
    let mut rows = Vec::new();
    for (pi, &payload) in payload_sweep.iter().enumerate() {
        let sc = Scenario { payload_bits: payload, ..scenario.clone() };
        let trial_outs: Vec<Vec<Option<f64>>> = (0..sc.trials)
            .into_par_iter()
            .map(|t| -> Result<Vec<Option<f64>>> {
                let dseed = split_seed(sc.seed, (pi as u64) * sc.trials as u64 + t as u64);
                let dep = deploy(&sc, dseed)?;
                let reduced = force_groups(&dep.nodes, sc.group_size_n);
                policies
                    .iter()
                    .map(|&pol| {
                        let res = match pol {
                            Policy::LteCoop => algorithm1(
                                &reduced,
                                sc.grouping.incentive_beta,
                                &sc.radio,
                                &sc.lte,
                                &tbs,
                            )?,
                            Policy::LteEra => lte_era(&reduced, &sc.radio, &sc.lte, &tbs)?,
                            _ => unreachable!("filtered above"),
                        };
                        Ok(res.feasible.then_some(res.min_lifetime))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;

        let mut means = vec![0.0f64; policies.len()];
        let mut pol_rows = Vec::new();
        for (qi, &pol) in policies.iter().enumerate() {
            let samples: Vec<f64> = trial_outs.iter().filter_map(|t| t[qi]).collect();
            let excluded = sc.trials - samples.len() as u32;
            let (mean, se) = mean_and_stderr(&samples);
            means[qi] = mean;
            pol_rows.push(MetricsRow {
                kind: "lte-lifetime".into(),
                policy: pol.to_string(),
                x: payload,
                mean,
                factor: 0.0,
                std_err: se,
                included: samples.len() as u32,
                excluded,
            });
        }
        let base = policies
            .iter()
            .position(|&p| p == Policy::LteEra)
            .map(|qi| means[qi])
            .unwrap_or(means[0]);
        for row in &mut pol_rows {
            row.factor = row.mean / base;
        }
        rows.extend(pol_rows);
    }
    Ok(MetricsReport { scenario: scenario.clone(), rows })
}

/// Outage grid: Monte Carlo primary-user outage for each (d_cb, M) pair.
pub fn run_outage_experiment(
    scenario: &Scenario,
    m_list: &[u32],
    dcb_list: &[f64],
    mc_trials: u64,
) -> Result<MetricsReport> {
    let mut rows = Vec::new();
    let mut counter = 0u64;
    for &dcb in dcb_list {
        for &m in m_list {
            let underlay = UnderlayScenario {
                pu_distance_dcb: dcb,
                group_count_m: m,
                ..scenario.underlay
            };
            let seed = split_seed(scenario.seed ^ 0x6f75_7461_6765, counter);
            counter += 1;
            let p = outage_probability(&underlay, m, mc_trials, seed)?;
            rows.push(MetricsRow {
                kind: "outage".into(),
                policy: format!("dcb={dcb}"),
                x: m as f64,
                mean: p,
                factor: 1.0,
                std_err: (p * (1.0 - p) / mc_trials as f64).sqrt(),
                included: mc_trials.min(u32::MAX as u64) as u32,
                excluded: 0,
            });
        }
    }
    Ok(MetricsReport { scenario: scenario.clone(), rows })
}
