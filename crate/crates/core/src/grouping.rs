//! Distributed rewarding-based grouping: each node derives its optimal
//! client count from the broadcast incentive β, declares itself a
//! representative or requests attachment, and representatives reconcile
//! demand against capacity.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lambert::lambert_w0;
use crate::model::{NodeState, RadioConfig};

/// Grouping-side configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupingConfig {
    /// Cooperation incentive β ≥ 0.
    pub incentive_beta: f64,
    /// Maximum sustainable clients per node.
    pub n_max: u32,
    /// Listening-energy ratio ξ: E_h = ξ·E_s.
    pub listen_energy_ratio_xi: f64,
    /// Attachment range Δ in m (the group radius); members only attach to a
    /// representative within this distance.
    pub attachment_range_m: f64,
}

impl Default for GroupingConfig {
    fn default() -> Self {
        GroupingConfig {
            incentive_beta: 1.0,
            n_max: 5,
            listen_energy_ratio_xi: 0.5,
            attachment_range_m: 30.0,
        }
    }
}

/// Node role after group forming.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    Representative,
    /// Attached to the representative with the given node id.
    Member { representative: u32 },
    Solo,
}

/// Outcome of one grouping round over a deployment snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupingOutcome {
    /// Role per node, indexed like the input slice.
    pub roles: Vec<Role>,
    /// Accepted client count per node (zero for members and solos).
    pub clients: Vec<u32>,
    /// Indices of the reduced scheduled set £_r (representatives and solos).
    pub reduced_set: Vec<usize>,
}

impl GroupingOutcome {
    pub fn representative_count(&self) -> usize {
        self.roles.iter().filter(|r| matches!(r, Role::Representative)).count()
    }
}

/// Predicted lifetime at client count `n` with the clamped optimal airtime
/// τ*(n) = min{max{τ_m, interior}, τ_r}; E_h is taken as ξ·E_s.
fn lifetime_at_clients(
    node: &NodeState,
    radio: &RadioConfig,
    config: &GroupingConfig,
    n: u32,
) -> f64 {
    let eh = config.listen_energy_ratio_xi * node.static_energy_es;
    let g = node.channel_g(radio);
    let alpha = radio.pa_inefficiency_alpha;
    let bits = (n as f64 + 1.0) * node.payload_d;
    let arg = (radio.circuit_power_pc - alpha * g) / (std::f64::consts::E * g * alpha);
    let w = lambert_w0(arg).expect("argument above -1/e");
    let interior = std::f64::consts::LN_2 * bits / radio.bandwidth_w / (w + 1.0);
    let t_m = bits / (radio.bandwidth_w * (1.0 + radio.p_max / g).log2());
    let t_min = node.payload_d / (radio.bandwidth_w * (1.0 + radio.p_max / g).log2());
    let t_reward = (config.incentive_beta * n as f64 + 1.0) * t_min;
    let tau = interior.max(t_m).min(t_reward);
    let p = g * ((bits / (tau * radio.bandwidth_w)).exp2() - 1.0);
    let per_cycle =
        node.static_energy_es + n as f64 * eh + tau * (radio.circuit_power_pc + alpha * p);
    node.remaining_energy_e * node.duty_cycle_t / per_cycle
}

/// Optimal client count n*: exhaustive argmax of the predicted lifetime at
/// the clamped optimal airtime, over n ∈ {0..n_max}. Ties break toward the
/// smaller count.
pub fn optimal_clients(node: &NodeState, radio: &RadioConfig, config: &GroupingConfig) -> Result<u32> {
    let mut best_n = 0u32;
    let mut best_l = lifetime_at_clients(node, radio, config, 0);
    for n in 1..=config.n_max {
        let l = lifetime_at_clients(node, radio, config, n);
        if l > best_l {
            best_l = l;
            best_n = n;
        }
    }
    Ok(best_n)
}

/// One-shot distributed group forming over known positions.
///
/// Nodes with n* > 0 declare representative; the rest request attachment to
/// the nearest declared representative within the attachment range (ties to
/// the lower id). Each representative re-reconciles its client count against
/// the received requests and accepts the nearest requesters; the rejected
/// become solo.
pub fn form_groups(
    nodes: &[NodeState],
    positions: &[[f64; 2]],
    radio: &RadioConfig,
    config: &GroupingConfig,
) -> Result<GroupingOutcome> {
    assert_eq!(nodes.len(), positions.len());
    let n = nodes.len();
    let n_star: Vec<u32> = nodes
        .iter()
        .map(|nd| optimal_clients(nd, radio, config))
        .collect::<Result<_>>()?;

    let declared: Vec<usize> = (0..n).filter(|&i| n_star[i] > 0).collect();

    let dist = |a: usize, b: usize| -> f64 {
        let dx = positions[a][0] - positions[b][0];
        let dy = positions[a][1] - positions[b][1];
        (dx * dx + dy * dy).sqrt()
    };

    // Attachment requests: nearest in-range representative, ties by lower id.
    let mut requests: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        if n_star[i] > 0 {
            continue;
        }
        let mut best: Option<(f64, u32, usize)> = None;
        for &r in &declared {
            let d = dist(i, r);
            if d > config.attachment_range_m {
                continue;
            }
            let key = (d, nodes[r].id, r);
            match best {
                Some((bd, bid, _)) if (bd, bid) <= (d, nodes[r].id) => {}
                _ => best = Some(key),
            }
        }
        if let Some((_, _, r)) = best {
            requests[r].push(i);
        }
    }

    let mut roles = vec![Role::Solo; n];
    let mut clients = vec![0u32; n];
    for &r in &declared {
        roles[r] = Role::Representative;
        let mut reqs = requests[r].clone();
        reqs.sort_by(|&a, &b| dist(a, r).total_cmp(&dist(b, r)).then(nodes[a].id.cmp(&nodes[b].id)));
        let n_requests = reqs.len() as u32;
        let capacity = if n_requests < n_star[r] {
            // Fewer requests than capacity: re-solve with n_max = n_i^r.
            let reduced = GroupingConfig { n_max: n_requests, ..*config };
            optimal_clients(&nodes[r], radio, &reduced)?
        } else {
            n_star[r]
        };
        for &m in reqs.iter().take(capacity as usize) {
            roles[m] = Role::Member { representative: nodes[r].id };
        }
        clients[r] = capacity.min(n_requests);
    }

    let reduced_set: Vec<usize> =
        (0..n).filter(|&i| !matches!(roles[i], Role::Member { .. })).collect();
    Ok(GroupingOutcome { roles, clients, reduced_set })
}
