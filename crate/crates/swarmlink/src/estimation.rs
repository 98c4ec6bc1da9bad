//! Set-valued position estimation under bounded disturbance and stale,
//! multi-hop information.
//!
//! A remote node's position is known only through a timestamped report. Two
//! independent constraints bound where that node can be *now*:
//!
//! * the tracking error bound: within [`crate::dynamics::error_bound`] of the
//!   nominal prediction propagated from the report;
//! * signal travel: the reporter was within `propagation_speed * age` of the
//!   receiver when it emitted (propagation speed dwarfs agent speed, so the
//!   ball also bounds the current position with wide margin).
//!
//! For information that arrived over several hops, the travel constraint
//! chains: the target must lie within one hop-ball of *some* point of the
//! relay's own uncertainty region. Regions are represented as particle
//! clouds because the union-of-balls-intersect-ball sets have no closed
//! form; all scores derived from them are Monte-Carlo estimates.

use rand::Rng;

use crate::dynamics::{error_bound, predict_nominal, TrackingPolicy};
use crate::comms::{ChannelModel, KnowledgeBase, PositionRecord};
use crate::graph::{Edge, NodeId, Topology, UNREACHABLE};
use crate::{Error, Point, Result};

/// Default integration substep for nominal-trajectory prediction.
pub const PREDICT_STEP: f64 = 0.05;

/// Slack for point-in-ball membership tests, absorbing roundoff.
const MEMBERSHIP_SLACK: f64 = 1e-9;

/// Multiplier on the particle budget bounding rejection-sampling attempts.
const MAX_ATTEMPT_FACTOR: usize = 32;

/// Tuning knobs for region construction.
#[derive(Clone, Copy, Debug)]
pub struct RegionParams {
    /// Target number of particles per region.
    pub particles: usize,
    /// Spatial dimension (2 or 3); dimension-2 sampling keeps z = 0.
    pub dim: usize,
    /// Substep for nominal prediction integration.
    pub max_prediction_step: f64,
}

impl Default for RegionParams {
    fn default() -> Self {
        RegionParams {
            particles: 256,
            dim: 2,
            max_prediction_step: PREDICT_STEP,
        }
    }
}

/// Particle-cloud estimate of one node's current position.
#[derive(Clone, Debug)]
pub struct UncertaintyRegion {
    pub node: NodeId,
    pub particles: Vec<Point>,
    /// Time the region describes (the "now" of the query).
    pub basis_time: f64,
    /// Last-report position this region was grown from.
    pub report_position: Point,
    /// Age of that report at `basis_time`.
    pub report_age: f64,
}

impl UncertaintyRegion {
    /// Degenerate region: the position is known exactly.
    pub fn singleton(node: NodeId, position: Point, basis_time: f64) -> Self {
        UncertaintyRegion {
            node,
            particles: vec![position],
            basis_time,
            report_position: position,
            report_age: 0.0,
        }
    }

    /// Largest pairwise particle distance.
    pub fn spread(&self) -> f64 {
        let mut worst = 0.0f64;
        for (k, a) in self.particles.iter().enumerate() {
            for b in &self.particles[k + 1..] {
                worst = worst.max((a - b).norm());
            }
        }
        worst
    }

    /// Distance from `point` to the nearest particle.
    pub fn distance_to(&self, point: &Point) -> f64 {
        self.particles
            .iter()
            .map(|p| (p - point).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Centroid of the particle cloud.
    pub fn centroid(&self) -> Point {
        let mut sum = Point::zeros();
        for p in &self.particles {
            sum += p;
        }
        sum / self.particles.len() as f64
    }
}

/// Uniform sample from a ball of `radius` around `center`.
fn sample_ball(center: &Point, radius: f64, dim: usize, rng: &mut impl Rng) -> Point {
    if radius == 0.0 {
        return *center;
    }
    loop {
        let x = rng.random_range(-1.0..=1.0);
        let y = rng.random_range(-1.0..=1.0);
        let z = if dim >= 3 {
            rng.random_range(-1.0..=1.0)
        } else {
            0.0
        };
        let v = Point::new(x, y, z);
        if v.norm_squared() <= 1.0 {
            return center + v * radius;
        }
    }
}

/// True when `point` is within `radius` of some member of `anchors`.
fn within_union(point: &Point, anchors: &[Point], radius: f64) -> bool {
    let r2 = (radius + MEMBERSHIP_SLACK) * (radius + MEMBERSHIP_SLACK);
    anchors.iter().any(|a| (a - point).norm_squared() <= r2)
}

/// Nearest point to `target` inside the union of `radius`-balls around
/// `anchors`. Deterministic rescue for thin intersections that
/// rejection sampling may miss entirely.
fn project_to_union(target: &Point, anchors: &[Point], radius: f64) -> Point {
    let mut best = *target;
    let mut best_d2 = f64::INFINITY;
    for a in anchors {
        let to_target = target - a;
        let d = to_target.norm();
        let candidate = if d <= radius {
            *target
        } else {
            a + to_target * (radius / d)
        };
        let d2 = (candidate - target).norm_squared();
        if d2 < best_d2 {
            best_d2 = d2;
            best = candidate;
        }
    }
    best
}

/// Grows the region for one more hop: target particles must lie within
/// `eps` of `center` and within `hop_radius` of some parent particle.
fn intersect_step(
    node: NodeId,
    center: &Point,
    eps: f64,
    parents: &[Point],
    hop_radius: f64,
    params: &RegionParams,
    rng: &mut impl Rng,
) -> Result<Vec<Point>> {
    if eps == 0.0 {
        return if within_union(center, parents, hop_radius) {
            Ok(vec![*center])
        } else {
            Err(Error::EmptyRegion { node })
        };
    }
    let mut out = Vec::with_capacity(params.particles);
    let mut attempts = 0usize;
    let cap = params.particles * MAX_ATTEMPT_FACTOR;
    while out.len() < params.particles && attempts < cap {
        attempts += 1;
        let candidate = sample_ball(center, eps, params.dim, rng);
        if within_union(&candidate, parents, hop_radius) {
            out.push(candidate);
        }
    }
    if out.is_empty() {
        // The analytic intersection is nonempty iff the union comes within
        // eps of the center; salvage that witness point if it exists.
        let witness = project_to_union(center, parents, hop_radius);
        if (witness - center).norm() <= eps + MEMBERSHIP_SLACK {
            out.push(witness);
        }
    }
    if out.is_empty() {
        Err(Error::EmptyRegion { node })
    } else {
        Ok(out)
    }
}

/// Region for a node heard from directly.
///
/// `report` carries the node's exact position at its timestamp. The region
/// is the intersection of the travel ball around the receiver (radius
/// `propagation_speed * age`) with the tracking-error ball around the
/// nominal prediction.
pub fn region_one_hop(
    report: &PositionRecord,
    receiver_pos: &Point,
    now: f64,
    channel: &ChannelModel,
    policy: &TrackingPolicy,
    d_max: f64,
    params: &RegionParams,
    rng: &mut impl Rng,
) -> Result<UncertaintyRegion> {
    let age = now - report.timestamp;
    if age < 0.0 {
        return Err(Error::TimeReversed {
            known: report.timestamp,
            query: now,
        });
    }
    let center = predict_nominal(
        report.position,
        report.timestamp,
        now,
        policy,
        params.max_prediction_step,
    )?;
    let eps = error_bound(age, policy.lambda, d_max)?;
    let travel = channel.propagation_speed * age;
    let particles = intersect_step(
        report.node,
        &center,
        eps,
        std::slice::from_ref(receiver_pos),
        travel,
        params,
        rng,
    )
    .map_err(|e| match e {
        Error::EmptyRegion { node } => Error::InconsistentReport { node },
        other => other,
    })?;
    Ok(UncertaintyRegion {
        node: report.node,
        particles,
        basis_time: now,
        report_position: report.position,
        report_age: age,
    })
}

/// Region for a node heard from over a relay chain.
///
/// `path` starts at the observer and ends at the target; `hop_delays[k]` is
/// the (worst-case) communication delay between `path[k]` and `path[k+1]`.
/// `reports[k]` is the observer's stored record for `path[k + 1]`. The
/// observer knows its own position (`observer_pos`) exactly. Each stage
/// dilates the predecessor region by the hop's travel radius and intersects
/// with the target's tracking-error ball.
#[allow(clippy::too_many_arguments)]
pub fn region_along_path(
    path: &[NodeId],
    hop_delays: &[f64],
    reports: &[PositionRecord],
    observer_pos: &Point,
    now: f64,
    channel: &ChannelModel,
    policies: &[TrackingPolicy],
    d_max: f64,
    params: &RegionParams,
    rng: &mut impl Rng,
) -> Result<UncertaintyRegion> {
    assert!(!path.is_empty(), "path must start at the observer");
    assert_eq!(hop_delays.len(), path.len() - 1, "one delay per hop");
    assert_eq!(reports.len(), path.len() - 1, "one report per relayed node");
    let mut parents = vec![*observer_pos];
    let mut last = UncertaintyRegion::singleton(path[0], *observer_pos, now);
    for (k, &node) in path.iter().enumerate().skip(1) {
        let report = &reports[k - 1];
        debug_assert_eq!(report.node, node, "report order must follow the path");
        let age = now - report.timestamp;
        if age < 0.0 {
            return Err(Error::TimeReversed {
                known: report.timestamp,
                query: now,
            });
        }
        let center = predict_nominal(
            report.position,
            report.timestamp,
            now,
            &policies[node],
            params.max_prediction_step,
        )?;
        let eps = error_bound(age, policies[node].lambda, d_max)?;
        let hop_radius = channel.propagation_speed * hop_delays[k - 1];
        let particles = intersect_step(node, &center, eps, &parents, hop_radius, params, rng)?;
        last = UncertaintyRegion {
            node,
            particles: particles.clone(),
            basis_time: now,
            report_position: report.position,
            report_age: age,
        };
        parents = particles;
    }
    Ok(last)
}

/// Regions for every node, computed from an observer's knowledge base and
/// the current agreed topology.
///
/// Information is assumed to have travelled along a shortest path of the
/// agreed graph; among shortest paths the min-id predecessor is chosen, so
/// the construction is deterministic. Every hop is charged the worst-case
/// one-hop delay.
#[allow(clippy::too_many_arguments)]
pub fn regions_from_knowledge(
    topology: &Topology,
    observer: NodeId,
    observer_pos: &Point,
    kb: &KnowledgeBase,
    now: f64,
    channel: &ChannelModel,
    policies: &[TrackingPolicy],
    d_max: f64,
    params: &RegionParams,
    rng: &mut impl Rng,
) -> Result<Vec<UncertaintyRegion>> {
    let n = topology.node_count();
    let dist = topology.dist_row(observer);
    // Min-id shortest-path predecessor toward the observer.
    let mut pred = vec![usize::MAX; n];
    for u in 0..n {
        if u == observer || dist[u] == UNREACHABLE {
            continue;
        }
        pred[u] = topology
            .neighbors(u)
            .iter()
            .copied()
            .filter(|&v| dist[v] + 1 == dist[u])
            .min()
            .expect("reachable node has an upstream neighbor");
    }
    let hop_delay = channel.max_hop_delay();
    let mut out = Vec::with_capacity(n);
    for target in 0..n {
        if target == observer {
            out.push(UncertaintyRegion::singleton(observer, *observer_pos, now));
            continue;
        }
        if dist[target] == UNREACHABLE {
            return Err(Error::CentralViewDisconnected);
        }
        let mut path = vec![target];
        let mut cursor = target;
        while cursor != observer {
            cursor = pred[cursor];
            path.push(cursor);
        }
        path.reverse();
        let reports: Vec<PositionRecord> = path[1..]
            .iter()
            .map(|&node| {
                let entry = kb
                    .entry(node)
                    .ok_or(Error::InconsistentReport { node })?;
                Ok(PositionRecord {
                    node,
                    position: entry.position,
                    timestamp: entry.timestamp,
                })
            })
            .collect::<Result<_>>()?;
        let delays = vec![hop_delay; path.len() - 1];
        out.push(region_along_path(
            &path,
            &delays,
            &reports,
            observer_pos,
            now,
            channel,
            policies,
            d_max,
            params,
            rng,
        )?);
    }
    Ok(out)
}

/// Prunes particles that contradict known connectivity: for every agreed
/// edge, each endpoint's particles must have a counterpart within `r` on
/// the other endpoint. Iterates to a fixed point or `iterations` passes.
///
/// Never adds particles. An edge whose constraint would empty a region is
/// skipped entirely: the agreed topology can lag the physical one, so an
/// unsatisfiable range constraint is evidence the link has stretched past
/// `r` in the meantime, not license to erase the position estimate.
pub fn shrink_by_connectivity(
    regions: &mut [UncertaintyRegion],
    edges: &std::collections::BTreeSet<Edge>,
    r: f64,
    iterations: usize,
) {
    let r2 = (r + MEMBERSHIP_SLACK) * (r + MEMBERSHIP_SLACK);
    for _ in 0..iterations {
        let mut changed = false;
        for edge in edges {
            for (this, other) in [(edge.a(), edge.b()), (edge.b(), edge.a())] {
                let (keep, anchors) = {
                    let anchor_particles = &regions[other].particles;
                    let keep: Vec<bool> = regions[this]
                        .particles
                        .iter()
                        .map(|p| {
                            anchor_particles
                                .iter()
                                .any(|q| (p - q).norm_squared() <= r2)
                        })
                        .collect();
                    (keep, anchor_particles.len())
                };
                debug_assert!(anchors > 0);
                if keep.iter().all(|&k| k) {
                    continue;
                }
                if keep.iter().all(|&k| !k) {
                    // Contradicted edge: leave both regions untouched.
                    continue;
                }
                changed = true;
                let mut idx = 0;
                regions[this].particles.retain(|_| {
                    let k = keep[idx];
                    idx += 1;
                    k
                });
            }
        }
        if !changed {
            break;
        }
    }
}

/// Monte-Carlo sample of the distance between two uncertain positions.
#[derive(Clone, Debug)]
pub struct DistanceDistribution {
    pub pair: (NodeId, NodeId),
    pub samples: Vec<f64>,
}

/// Samples pairwise distances between two regions. All particle pairs when
/// the cross product fits the budget; otherwise `pair_budget` random pairs.
pub fn distance_distribution(
    region_i: &UncertaintyRegion,
    region_j: &UncertaintyRegion,
    pair_budget: usize,
    rng: &mut impl Rng,
) -> DistanceDistribution {
    let ni = region_i.particles.len();
    let nj = region_j.particles.len();
    let mut samples = Vec::new();
    if ni * nj <= pair_budget {
        samples.reserve(ni * nj);
        for a in &region_i.particles {
            for b in &region_j.particles {
                samples.push((a - b).norm());
            }
        }
    } else {
        samples.reserve(pair_budget);
        for _ in 0..pair_budget {
            let a = &region_i.particles[rng.random_range(0..ni)];
            let b = &region_j.particles[rng.random_range(0..nj)];
            samples.push((a - b).norm());
        }
    }
    DistanceDistribution {
        pair: (region_i.node, region_j.node),
        samples,
    }
}

/// Fraction of in-range distance mass beyond `alpha * r`:
/// `|{d : alpha*r < d <= r}| / |{d : d <= r}|`. When no sample is in range
/// the link is presumed broken and the score is 1.
pub fn risk_score(dd: &DistanceDistribution, alpha: f64, r: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&alpha));
    let threshold = alpha * r;
    let mut in_range = 0usize;
    let mut beyond = 0usize;
    for &d in &dd.samples {
        if d <= r {
            in_range += 1;
            if d > threshold {
                beyond += 1;
            }
        }
    }
    if in_range == 0 {
        1.0
    } else {
        beyond as f64 / in_range as f64
    }
}

/// Upper-bound estimate of the cost of keeping a link, from the sampled
/// distance distribution: `c_max * r * (1 - rho_m) * risk(rho_m)`.
pub fn cost_estimate(dd: &DistanceDistribution, rho_m: f64, c_max: f64, r: f64) -> f64 {
    debug_assert!(rho_m > 0.0 && rho_m < 1.0 && c_max > 0.0);
    c_max * r * (1.0 - rho_m) * risk_score(dd, rho_m, r)
}

/// Fraction of sampled distances strictly inside the free zone `rho_m * r`.
pub fn confidence_score(dd: &DistanceDistribution, rho_m: f64, r: f64) -> f64 {
    debug_assert!(rho_m > 0.0 && rho_m < 1.0);
    if dd.samples.is_empty() {
        return 0.0;
    }
    let threshold = rho_m * r;
    let below = dd.samples.iter().filter(|&&d| d < threshold).count();
    below as f64 / dd.samples.len() as f64
}

/// Ground-truth cost of maintaining a link of length `distance`: free up to
/// `rho_m * r`, then linear, infinite once the link is out of range.
pub fn true_edge_cost(distance: f64, rho_m: f64, c_max: f64, r: f64) -> f64 {
    debug_assert!(distance >= 0.0);
    let free = rho_m * r;
    if distance <= free {
        0.0
    } else if distance <= r {
        c_max * (distance - free)
    } else {
        f64::INFINITY
    }
}
