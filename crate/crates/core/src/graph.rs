//! Interaction graph on the support of the symmetric measure.
//!
//! Two support points are adjacent when they share a collision partner.
//! Connected components, their partner sets, the five-case classification
//! and the beta-connectivity constants drive the equilibrium prediction and
//! the explicit convergence-rate lower bounds.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::kernel::CollisionKernel;
use crate::measure::DiscreteMeasure;

/// Which of the five set configurations a component belongs to.
///
/// `Isolated` means the partner set is empty (no collisions at all).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseTag {
    Isolated,
    /// (i) the four sets `T, T*, T^, T*^` are pairwise disjoint.
    FourDisjoint,
    /// (ii) `T = T*^ != T* = T^`.
    PairIi,
    /// (iii) `T = T* != T^ = T*^`.
    PairIii,
    /// (iv) `T = T^ != T* = T*^`.
    PairIv,
    /// (v) all four sets coincide.
    SingleV,
}

impl CaseTag {
    pub fn label(&self) -> &'static str {
        match self {
            CaseTag::Isolated => "isolated",
            CaseTag::FourDisjoint => "four-disjoint",
            CaseTag::PairIi => "pair-ii",
            CaseTag::PairIii => "pair-iii",
            CaseTag::PairIv => "pair-iv",
            CaseTag::SingleV => "single-v",
        }
    }
}

/// Graph of the common-collision-partner relation on `supp(mu)`.
#[derive(Debug, Clone)]
pub struct InteractionGraph {
    support: Vec<usize>,
    components: Vec<Vec<usize>>,
    partner_sets: Vec<Vec<usize>>,
    /// Component index of `T_*` (None when the partner set is empty).
    partner_comp: Vec<Option<usize>>,
    /// Component index of `T^`.
    reversed_comp: Vec<usize>,
    cases: Vec<CaseTag>,
    /// Component ids grouped into orbits of `T -> T_*`, `T -> T^`; the first
    /// id in each orbit is the canonical representative.
    orbits: Vec<Vec<usize>>,
}

/// Build the interaction graph of `(mu, b)`. `mu` must be symmetric.
pub fn build_graph(mu: &DiscreteMeasure, b: &CollisionKernel) -> Result<InteractionGraph> {
    if mu.space() != b.space() {
        return Err(Error::SpaceMismatch);
    }
    if mu.symmetry_defect() > 1e-12 {
        return Err(Error::InvalidArgument(
            "interaction graph needs a symmetric measure".into(),
        ));
    }
    let support = mu.support();
    let in_support = {
        let mut mask = vec![false; mu.space().len()];
        for &i in &support {
            mask[i] = true;
        }
        mask
    };
    // Partners restricted to the support.
    let partners_in_k: Vec<Vec<usize>> = (0..mu.space().len())
        .map(|i| {
            if in_support[i] {
                b.partners(i)
                    .iter()
                    .copied()
                    .filter(|&j| in_support[j])
                    .collect()
            } else {
                Vec::new()
            }
        })
        .collect();

    // Breadth-first traversal; expanding a partner x* links every support
    // point that collides with x*, so each partner is expanded once.
    let mut component_of = vec![usize::MAX; mu.space().len()];
    let mut expanded = vec![false; mu.space().len()];
    let mut components: Vec<Vec<usize>> = Vec::new();
    for &start in &support {
        if component_of[start] != usize::MAX {
            continue;
        }
        let id = components.len();
        let mut queue = std::collections::VecDeque::new();
        component_of[start] = id;
        queue.push_back(start);
        let mut members = vec![start];
        while let Some(x) = queue.pop_front() {
            for &p in &partners_in_k[x] {
                if expanded[p] {
                    continue;
                }
                expanded[p] = true;
                for &y in &partners_in_k[p] {
                    if component_of[y] == usize::MAX {
                        component_of[y] = id;
                        members.push(y);
                        queue.push_back(y);
                    }
                }
            }
        }
        members.sort_unstable();
        components.push(members);
    }

    let mut partner_sets = Vec::with_capacity(components.len());
    let mut partner_comp = Vec::with_capacity(components.len());
    for members in &components {
        let mut set: Vec<usize> = members
            .iter()
            .flat_map(|&x| partners_in_k[x].iter().copied())
            .collect();
        set.sort_unstable();
        set.dedup();
        if set.is_empty() {
            partner_sets.push(set);
            partner_comp.push(None);
            continue;
        }
        let comp = component_of[set[0]];
        if components[comp] != set {
            return Err(Error::Internal(
                "partner set is not a connected component".into(),
            ));
        }
        partner_sets.push(set);
        partner_comp.push(Some(comp));
    }

    let mut reversed_comp = Vec::with_capacity(components.len());
    for members in &components {
        let mut rev: Vec<usize> = members.iter().map(|&x| mu.space().involution(x)).collect();
        rev.sort_unstable();
        let comp = component_of[rev[0]];
        if components[comp] != rev {
            return Err(Error::Internal(
                "reversed component is not a connected component".into(),
            ));
        }
        reversed_comp.push(comp);
    }

    let cases = (0..components.len())
        .map(|t| classify_ids(t, partner_comp[t], reversed_comp[t], &partner_comp, &reversed_comp))
        .collect();

    let mut orbits = Vec::new();
    let mut seen = vec![false; components.len()];
    for t in 0..components.len() {
        if seen[t] {
            continue;
        }
        let mut orbit = vec![t];
        seen[t] = true;
        let mut cursor = 0;
        while cursor < orbit.len() {
            let c = orbit[cursor];
            cursor += 1;
            let push = |id: usize, seen: &mut Vec<bool>, orbit: &mut Vec<usize>| {
                if !seen[id] {
                    seen[id] = true;
                    orbit.push(id);
                }
            };
            if let Some(star) = partner_comp[c] {
                push(star, &mut seen, &mut orbit);
            }
            push(reversed_comp[c], &mut seen, &mut orbit);
        }
        orbit.sort_unstable();
        orbits.push(orbit);
    }

    Ok(InteractionGraph {
        support,
        components,
        partner_sets,
        partner_comp,
        reversed_comp,
        cases,
        orbits,
    })
}

fn classify_ids(
    t: usize,
    star: Option<usize>,
    down: usize,
    partner_comp: &[Option<usize>],
    reversed_comp: &[usize],
) -> CaseTag {
    let star = match star {
        None => return CaseTag::Isolated,
        Some(s) => s,
    };
    let star_down = reversed_comp[star];
    let _ = partner_comp;
    let eq_star = star == t;
    let eq_down = down == t;
    let eq_star_down = star_down == t;
    if eq_star && eq_down {
        CaseTag::SingleV
    } else if eq_star {
        CaseTag::PairIii
    } else if eq_down {
        CaseTag::PairIv
    } else if eq_star_down {
        CaseTag::PairIi
    } else {
        CaseTag::FourDisjoint
    }
}

impl InteractionGraph {
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, t: usize) -> &[usize] {
        &self.components[t]
    }

    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }

    /// The partner set `T_*` of component `t`.
    pub fn partner_set(&self, t: usize) -> &[usize] {
        &self.partner_sets[t]
    }

    pub fn partner_component(&self, t: usize) -> Option<usize> {
        self.partner_comp[t]
    }

    pub fn reversed_component(&self, t: usize) -> usize {
        self.reversed_comp[t]
    }

    pub fn case(&self, t: usize) -> CaseTag {
        self.cases[t]
    }

    /// Orbits of the action generated by `T -> T_*` and `T -> T^`.
    pub fn orbits(&self) -> &[Vec<usize>] {
        &self.orbits
    }

    /// True when every support point has a collision partner.
    pub fn all_points_have_partners(&self) -> bool {
        self.cases.iter().all(|c| *c != CaseTag::Isolated)
    }

    /// Component id containing a given support point.
    pub fn component_of_point(&self, point: usize) -> Option<usize> {
        self.components.iter().position(|c| c.binary_search(&point).is_ok())
    }
}

/// `mu`-mass of a point set.
pub fn set_mass(mu: &DiscreteMeasure, set: &[usize]) -> f64 {
    set.iter().map(|&i| mu.mass(i)).sum()
}

/// Upper bound `2 floor(pi / alpha)` on the number of connected components
/// of the indicator-kernel graph on a circle.
pub fn component_count_bound(alpha: f64) -> usize {
    2 * (PI / alpha).floor() as usize
}

/// True when some open arc of length `alpha` carries no support point.
/// On the circle with the indicator kernel this is equivalent to the graph
/// having more than one connected component.
pub fn gap_interval_exists(mu: &DiscreteMeasure, alpha: f64) -> Result<bool> {
    if !mu.space().is_circle() {
        return Err(Error::InvalidArgument(
            "gap interval scan needs a circle-type space".into(),
        ));
    }
    let support = mu.support();
    if support.is_empty() {
        return Ok(true);
    }
    let mut angles: Vec<f64> = support.iter().map(|&i| mu.space().coord(i)).collect();
    angles.sort_by(f64::total_cmp);
    let max_gap = max_cyclic_gap(&angles);
    Ok(max_gap >= alpha - 1e-12)
}

/// Maximal free arcs of the support, as `(start_angle, length)` pairs with
/// length at least `alpha`.
pub fn gap_intervals(mu: &DiscreteMeasure, alpha: f64) -> Result<Vec<(f64, f64)>> {
    if !mu.space().is_circle() {
        return Err(Error::InvalidArgument(
            "gap interval scan needs a circle-type space".into(),
        ));
    }
    let support = mu.support();
    let mut angles: Vec<f64> = support.iter().map(|&i| mu.space().coord(i)).collect();
    angles.sort_by(f64::total_cmp);
    let m = angles.len();
    let mut out = Vec::new();
    for k in 0..m {
        let next = if k + 1 < m {
            angles[k + 1]
        } else {
            angles[0] + 2.0 * PI
        };
        let gap = next - angles[k];
        if gap >= alpha - 1e-12 {
            out.push((angles[k], gap));
        }
    }
    Ok(out)
}

fn max_cyclic_gap(sorted_angles: &[f64]) -> f64 {
    let m = sorted_angles.len();
    if m == 1 {
        return 2.0 * PI;
    }
    let mut max_gap: f64 = 0.0;
    for k in 0..m {
        let next = if k + 1 < m {
            sorted_angles[k + 1]
        } else {
            sorted_angles[0] + 2.0 * PI
        };
        max_gap = max_gap.max(next - sorted_angles[k]);
    }
    max_gap
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Largest `beta` such that the bipartite graph on `T (+) T_*` with edges
/// `b(x, x*) >= beta` is connected: the bottleneck edge of a maximum
/// spanning structure, found by adding edges in decreasing weight.
pub fn bottleneck_beta(t: &[usize], t_star: &[usize], b: &CollisionKernel) -> Result<f64> {
    if t_star.is_empty() {
        return Err(Error::InvalidArgument("empty partner set".into()));
    }
    let nl = t.len();
    let nr = t_star.len();
    let mut edges: Vec<(f64, usize, usize)> = Vec::new();
    for (li, &x) in t.iter().enumerate() {
        for (ri, &y) in t_star.iter().enumerate() {
            let w = b.eval(x, y);
            if w > 0.0 {
                edges.push((w, li, ri));
            }
        }
    }
    edges.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut uf = UnionFind::new(nl + nr);
    let mut pieces = nl + nr;
    for (w, li, ri) in edges {
        if uf.union(li, nl + ri) {
            pieces -= 1;
            if pieces == 1 {
                return Ok(w);
            }
        }
    }
    Err(Error::Internal(
        "bipartite collision graph is disconnected".into(),
    ))
}

/// Explicit decay-rate lower bound `lambda = 2 min(rho, rho_*) / C` for the
/// component entropy, with `C` summed over all point pairs:
///
/// `C = sum_{(i,j)} (2k+1)/beta * (sum_l rho_i rho_j / (rho_{i_l} rho_{j_l})
///      + sum_l rho_i rho_j / (rho_{i_{l+1}} rho_{j_l}))`
///
/// along the shortest beta-link path from `i` to `j` in the bipartite graph
/// on singleton covering sets (ties broken by smallest index). The summed
/// constant is the one the covering argument actually yields; taking only
/// the worst pair can overshoot the spectral gap on uneven-mass instances,
/// which would invalidate the bound.
pub fn rate_lower_bound(
    t: &[usize],
    t_star: &[usize],
    mu: &DiscreteMeasure,
    b: &CollisionKernel,
) -> Result<f64> {
    if t_star.is_empty() {
        return Err(Error::InvalidArgument("empty partner set".into()));
    }
    let beta = bottleneck_beta(t, t_star, b)?;
    let nl = t.len();
    let nr = t_star.len();
    let total = nl + nr;
    // Adjacency of the bipartite link graph (edges with b >= beta), with
    // neighbors in increasing index order for deterministic BFS.
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); total];
    for li in 0..nl {
        for ri in 0..nr {
            if b.eval(t[li], t_star[ri]) >= beta {
                adj[li].push(nl + ri);
                adj[nl + ri].push(li);
            }
        }
    }
    let rho_t = set_mass(mu, t);
    let rho_star = set_mass(mu, t_star);
    let mut c_sum: f64 = 0.0;
    for li in 0..nl {
        // BFS shortest paths from the left node li.
        let mut parent = vec![usize::MAX; total];
        let mut dist = vec![usize::MAX; total];
        let mut queue = std::collections::VecDeque::new();
        dist[li] = 0;
        queue.push_back(li);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
        for ri in 0..nr {
            let target = nl + ri;
            if dist[target] == usize::MAX {
                return Err(Error::Internal(
                    "beta-link graph is disconnected".into(),
                ));
            }
            // Path nodes alternate left/right: i_0, j_0, i_1, ..., i_k, j_k.
            let mut nodes = Vec::with_capacity(dist[target] + 1);
            let mut cur = target;
            while cur != usize::MAX {
                nodes.push(cur);
                cur = parent[cur];
            }
            nodes.reverse();
            let k = (nodes.len() - 2) / 2;
            let mass = |node: usize| -> f64 {
                if node < nl {
                    mu.mass(t[node])
                } else {
                    mu.mass(t_star[node - nl])
                }
            };
            let rho_i0 = mass(nodes[0]);
            let rho_jk = mass(nodes[nodes.len() - 1]);
            let mut sum = 0.0;
            for l in 0..=k {
                sum += rho_i0 * rho_jk / (mass(nodes[2 * l]) * mass(nodes[2 * l + 1]));
            }
            for l in 0..k {
                sum += rho_i0 * rho_jk / (mass(nodes[2 * l + 2]) * mass(nodes[2 * l + 1]));
            }
            c_sum += (2 * k + 1) as f64 / beta * sum;
        }
    }
    Ok(2.0 * rho_t.min(rho_star) / c_sum)
}
