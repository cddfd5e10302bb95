//! Independent reference implementations used by the verification suite.
//!
//! These deliberately avoid the algorithms used by the production paths:
//! the transport oracle solves the transportation problem as a min-cost
//! flow, the bottleneck oracle sweeps thresholds, and both stay brute-force
//! simple so they can arbitrate disagreements.

use crate::error::{Error, Result};
use crate::kernel::CollisionKernel;
use crate::measure::DiscreteMeasure;

/// Exact optimal transport cost between two equal-mass measures, solved by
/// successive shortest augmenting paths (Bellman-Ford on the residual
/// network). Intended for small instances.
pub fn transport_lp(f: &DiscreteMeasure, g: &DiscreteMeasure) -> Result<f64> {
    if f.space() != g.space() {
        return Err(Error::SpaceMismatch);
    }
    let space = f.space();
    let sources: Vec<(usize, f64)> = (0..space.len())
        .map(|i| (i, f.mass(i)))
        .filter(|&(_, m)| m > 1e-15)
        .collect();
    let sinks: Vec<(usize, f64)> = (0..space.len())
        .map(|i| (i, g.mass(i)))
        .filter(|&(_, m)| m > 1e-15)
        .collect();
    let ns = sources.len();
    let nt = sinks.len();
    let mut supply: Vec<f64> = sources.iter().map(|&(_, m)| m).collect();
    let mut demand: Vec<f64> = sinks.iter().map(|&(_, m)| m).collect();
    let cost: Vec<Vec<f64>> = sources
        .iter()
        .map(|&(i, _)| sinks.iter().map(|&(j, _)| space.metric(i, j)).collect())
        .collect();
    // flow[i][j] currently shipped from source i to sink j.
    let mut flow = vec![vec![0.0f64; nt]; ns];
    let mut total_cost = 0.0;
    let mut remaining: f64 = supply.iter().sum();
    let mut guard = 0;
    while remaining > 1e-13 {
        guard += 1;
        if guard > (ns + nt + 2) * (ns + nt + 2) {
            return Err(Error::Internal("transport oracle failed to drain".into()));
        }
        // Bellman-Ford over the residual graph. Nodes: 0 = super source,
        // 1..=ns sources, ns+1..=ns+nt sinks.
        let n_nodes = 1 + ns + nt;
        let mut dist = vec![f64::INFINITY; n_nodes];
        let mut pred: Vec<Option<(usize, bool)>> = vec![None; n_nodes]; // (node, forward)
        dist[0] = 0.0;
        for _ in 0..n_nodes {
            let mut changed = false;
            for i in 0..ns {
                if supply[i] > 1e-15 && dist[0] < dist[1 + i] {
                    dist[1 + i] = dist[0];
                    pred[1 + i] = Some((0, true));
                    changed = true;
                }
                for j in 0..nt {
                    // forward edge: ship more i -> j
                    if dist[1 + i].is_finite() && dist[1 + i] + cost[i][j] < dist[1 + ns + j] - 1e-15
                    {
                        dist[1 + ns + j] = dist[1 + i] + cost[i][j];
                        pred[1 + ns + j] = Some((1 + i, true));
                        changed = true;
                    }
                    // backward edge: cancel shipment i -> j
                    if flow[i][j] > 1e-15
                        && dist[1 + ns + j].is_finite()
                        && dist[1 + ns + j] - cost[i][j] < dist[1 + i] - 1e-15
                    {
                        dist[1 + i] = dist[1 + ns + j] - cost[i][j];
                        pred[1 + i] = Some((1 + ns + j, false));
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        // Cheapest reachable sink with unmet demand.
        let mut best: Option<usize> = None;
        for j in 0..nt {
            if demand[j] > 1e-15
                && dist[1 + ns + j].is_finite()
                && (best.is_none() || dist[1 + ns + j] < dist[1 + ns + best.unwrap()])
            {
                best = Some(j);
            }
        }
        let sink = best.ok_or_else(|| Error::Internal("no augmenting path".into()))?;
        // Walk the path back to find the bottleneck amount.
        let mut amount = demand[sink];
        let mut node = 1 + ns + sink;
        while let Some((prev, forward)) = pred[node] {
            if forward {
                if prev == 0 {
                    amount = amount.min(supply[node - 1]);
                }
            } else {
                // backward edge from sink `prev` into source `node`
                let j = prev - 1 - ns;
                let i = node - 1;
                amount = amount.min(flow[i][j]);
            }
            node = prev;
            if node == 0 {
                break;
            }
        }
        // Apply the augmentation.
        demand[sink] -= amount;
        let mut node = 1 + ns + sink;
        while let Some((prev, forward)) = pred[node] {
            if forward {
                if prev == 0 {
                    supply[node - 1] -= amount;
                } else {
                    let i = prev - 1;
                    let j = node - 1 - ns;
                    flow[i][j] += amount;
                    total_cost += amount * cost[i][j];
                }
            } else {
                let j = prev - 1 - ns;
                let i = node - 1;
                flow[i][j] -= amount;
                total_cost -= amount * cost[i][j];
            }
            node = prev;
            if node == 0 {
                break;
            }
        }
        remaining -= amount;
    }
    Ok(total_cost)
}

/// Largest connectivity threshold of the bipartite collision graph, found
/// by sweeping every distinct kernel value and checking connectivity from
/// scratch.
pub fn bottleneck_threshold_sweep(
    t: &[usize],
    t_star: &[usize],
    b: &CollisionKernel,
) -> Result<f64> {
    let mut levels: Vec<f64> = t
        .iter()
        .flat_map(|&x| t_star.iter().map(move |&y| b.eval(x, y)))
        .filter(|&w| w > 0.0)
        .collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let connected_at = |beta: f64| -> bool {
        let nl = t.len();
        let total = nl + t_star.len();
        let mut seen = vec![false; total];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for v in 0..total {
                if seen[v] {
                    continue;
                }
                let linked = if u < nl && v >= nl {
                    b.eval(t[u], t_star[v - nl]) >= beta
                } else if u >= nl && v < nl {
                    b.eval(t[v], t_star[u - nl]) >= beta
                } else {
                    false
                };
                if linked {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == total
    };
    levels
        .into_iter()
        .rev()
        .find(|&beta| connected_at(beta))
        .ok_or_else(|| Error::Internal("disconnected at every threshold".into()))
}
