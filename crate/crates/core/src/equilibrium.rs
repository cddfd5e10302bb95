//! Conserved per-component constants and the predicted asymptotic state.
//!
//! On every non-isolated component the dynamics converges to `(1 + eta) mu`
//! on `T u T_*^` and `(1 - eta) mu` on `T_* u T^`; isolated points keep
//! their initial mass.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{build_graph, set_mass, CaseTag, InteractionGraph};
use crate::kernel::CollisionKernel;
use crate::measure::{odd_coordinate, DiscreteMeasure};

/// Per-component equilibrium data.
#[derive(Debug, Clone, Serialize)]
pub struct ComponentRecord {
    pub component: usize,
    pub case: String,
    pub points: Vec<usize>,
    pub eta: f64,
    pub rho: f64,
    pub rho_star: f64,
}

#[derive(Debug, Clone)]
pub struct EquilibriumPrediction {
    pub f_infty: DiscreteMeasure,
    pub components: Vec<ComponentRecord>,
}

/// The conserved constant of a component with nonempty partner set,
/// computed by both routes of its defining identities and cross-checked:
/// the mass ratio over `T u T_*^` and the weighted average difference
/// `(rho <h>_T - rho_* <h>_{T_*}) / (rho + rho_*)`.
pub fn eta(
    t_id: usize,
    graph: &InteractionGraph,
    f_i: &DiscreteMeasure,
    mu: &DiscreteMeasure,
) -> Result<f64> {
    let star_id = graph
        .partner_component(t_id)
        .ok_or_else(|| Error::InvalidArgument("eta needs a nonempty partner set".into()))?;
    let t = graph.component(t_id);
    let t_star = graph.component(star_id);
    let star_down_id = graph.reversed_component(star_id);

    let mut union: Vec<usize> = t.to_vec();
    if star_down_id != t_id {
        union.extend_from_slice(graph.component(star_down_id));
    }
    let num: f64 = union.iter().map(|&i| f_i.mass(i)).sum();
    let den: f64 = union.iter().map(|&i| mu.mass(i)).sum();
    if den <= 0.0 {
        return Err(Error::Internal("component carries no mass".into()));
    }
    let eta_mass_ratio = num / den - 1.0;

    let h = odd_coordinate(f_i, mu)?;
    let int_t: f64 = t.iter().map(|&i| h.value(i) * mu.mass(i)).sum();
    let int_star: f64 = t_star.iter().map(|&i| h.value(i) * mu.mass(i)).sum();
    let rho = set_mass(mu, t);
    let rho_star = set_mass(mu, t_star);
    let eta_averages = (int_t - int_star) / (rho + rho_star);

    if (eta_mass_ratio - eta_averages).abs() > 1e-12 {
        return Err(Error::Internal(format!(
            "eta formulas disagree: {eta_mass_ratio} vs {eta_averages}"
        )));
    }
    Ok(eta_mass_ratio)
}

/// Assemble the predicted asymptotic state of a probability measure.
pub fn predict_equilibrium(
    f_i: &DiscreteMeasure,
    b: &CollisionKernel,
) -> Result<EquilibriumPrediction> {
    if !f_i.is_probability() {
        return Err(Error::NotProbability {
            mass: f_i.total_mass(),
        });
    }
    let mu = f_i.symmetric_part();
    let graph = build_graph(&mu, b)?;
    predict_with_graph(f_i, &mu, &graph)
}

/// Prediction when `mu` and the graph are already available.
pub fn predict_with_graph(
    f_i: &DiscreteMeasure,
    mu: &DiscreteMeasure,
    graph: &InteractionGraph,
) -> Result<EquilibriumPrediction> {
    let space = f_i.space();
    let mut values = vec![0.0; space.len()];
    let mut comp_eta = vec![f64::NAN; graph.component_count()];

    for orbit in graph.orbits() {
        let t_id = orbit[0];
        if graph.case(t_id) == CaseTag::Isolated {
            for &c in orbit {
                for &i in graph.component(c) {
                    values[i] = f_i.value(i);
                }
                comp_eta[c] = 0.0;
            }
            continue;
        }
        let mut e = eta(t_id, graph, f_i, mu)?;
        match graph.case(t_id) {
            CaseTag::PairIii | CaseTag::PairIv | CaseTag::SingleV => {
                if e.abs() > 1e-12 {
                    return Err(Error::Internal(format!(
                        "eta = {e} must vanish on a symmetric component union"
                    )));
                }
                e = 0.0;
            }
            _ => {}
        }
        let star_id = graph.partner_component(t_id).expect("non-isolated");
        let down_id = graph.reversed_component(t_id);
        let star_down_id = graph.reversed_component(star_id);
        // Signed eta per component: +eta on T and T_*^, -eta on T_* and T^.
        for (c, sign) in [
            (t_id, 1.0),
            (star_down_id, 1.0),
            (star_id, -1.0),
            (down_id, -1.0),
        ] {
            if comp_eta[c].is_nan() {
                comp_eta[c] = sign * e;
                for &i in graph.component(c) {
                    values[i] = (1.0 + sign * e) * mu.value(i);
                }
            }
        }
    }

    let f_infty = DiscreteMeasure::new(space, values)?;
    let components = (0..graph.component_count())
        .map(|c| {
            let rho = set_mass(mu, graph.component(c));
            let rho_star = set_mass(mu, graph.partner_set(c));
            ComponentRecord {
                component: c,
                case: graph.case(c).label().to_string(),
                points: graph.component(c).to_vec(),
                eta: comp_eta[c],
                rho,
                rho_star,
            }
        })
        .collect();
    Ok(EquilibriumPrediction { f_infty, components })
}

/// Steady-state defect: the largest pointwise mass rate of the collision
/// dynamics applied to `f`. Vanishes exactly on steady states.
pub fn verify_steady(f: &DiscreteMeasure, b: &CollisionKernel) -> Result<f64> {
    let rate = crate::dynamics::collision_rate(f, b)?;
    Ok(rate.iter().fold(0.0f64, |m, r| m.max(r.abs())))
}
