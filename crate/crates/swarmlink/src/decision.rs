//! The leader's topology decision: drop expensive links while staying
//! connected, within budget, and under the diameter cap (Part A); propose
//! confidently-short new links (Part B); hand the leader role to the most
//! central node of the resulting graph (Part C).
//!
//! Everything here is pure: the decision is a function of the leader's
//! committed topology, its per-node uncertainty regions, and thresholds.
//! Order propagation, confirmations, and committing are the simulation
//! loop's job.

use std::collections::BTreeMap;

use rand::Rng;

use crate::comms::ChannelModel;
use crate::estimation::{
    confidence_score, cost_estimate, distance_distribution, true_edge_cost, UncertaintyRegion,
};
use crate::graph::{Edge, NodeId, Topology};
use crate::{Error, Point, Result};

/// Total-cost allowance as a function of time: `max(c0 - gamma*t, floor)`,
/// monotone nonincreasing.
#[derive(Clone, Copy, Debug)]
pub struct BudgetSchedule {
    pub c0: f64,
    pub gamma: f64,
    pub floor: f64,
}

impl BudgetSchedule {
    /// Effectively unlimited budget; the cost guard never binds.
    pub fn generous() -> Self {
        BudgetSchedule {
            c0: 1e6,
            gamma: 0.0,
            floor: 0.0,
        }
    }

    pub fn at(&self, t: f64) -> f64 {
        (self.c0 - self.gamma * t).max(self.floor)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c0.is_finite() && self.gamma >= 0.0 && self.floor >= 0.0) {
            return Err(Error::Config(format!(
                "budget schedule must have finite c0 and nonnegative gamma/floor, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Thresholds steering one decision round.
#[derive(Clone, Copy, Debug)]
pub struct DecisionParams {
    /// Hop-diameter cap for the post-deletion graph.
    pub tau_d: u32,
    /// Estimated per-edge cost at which a link becomes a deletion candidate.
    pub c_bar: f64,
    /// Total-cost allowance over time.
    pub budget: BudgetSchedule,
    /// Safety margin subtracted from the budget.
    pub delta: f64,
    /// Complement of the confidence threshold for proposing a new link
    /// (propose when confidence >= 1 - p).
    pub p: f64,
    /// Fraction of the radio range below which a link is cost-free.
    pub rho_m: f64,
    /// Cost slope per meter beyond the free zone.
    pub c_max: f64,
    /// Radio range.
    pub r: f64,
    /// Cap on particle pairs sampled per distance distribution.
    pub pair_budget: usize,
    /// Reserved headroom parameter; accepted in configuration for
    /// compatibility but not consulted by any rule here.
    pub reserved_margin: f64,
}

impl DecisionParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.tau_d >= 1
            && self.c_bar > 0.0
            && self.delta >= 0.0
            && self.p > 0.0
            && self.p < 1.0
            && self.rho_m > 0.0
            && self.rho_m < 1.0
            && self.c_max > 0.0
            && self.r > 0.0
            && self.pair_budget > 0;
        if !ok {
            return Err(Error::Config(format!("invalid decision params: {self:?}")));
        }
        self.budget.validate()
    }
}

/// Everything one decision round produced.
#[derive(Clone, Debug, PartialEq)]
pub struct DecisionRecord {
    pub decision_time: f64,
    /// Leader that made the decision.
    pub central: NodeId,
    /// Links ordered dropped.
    pub deleted: Vec<Edge>,
    /// New links proposed for formation.
    pub proposed: Vec<Edge>,
    /// Proposed links whose formation was confirmed (filled at commit).
    pub confirmed: Vec<Edge>,
    /// Leader for the next round, announced with the orders.
    pub new_central: NodeId,
    /// Estimated total maintenance cost of the kept links.
    pub est_total_cost: f64,
}

impl DecisionRecord {
    /// Structural sanity relative to the graph the decision was made on.
    pub fn check_against(&self, base: &Topology) -> Result<()> {
        for e in &self.deleted {
            if !base.has_edge(*e) {
                return Err(Error::EdgeNotFound(e.a(), e.b()));
            }
        }
        for e in &self.proposed {
            if base.has_edge(*e) {
                return Err(Error::EdgeExists(e.a(), e.b()));
            }
        }
        for e in &self.confirmed {
            if !self.proposed.contains(e) {
                return Err(Error::Config(format!(
                    "confirmed edge {e:?} was never proposed"
                )));
            }
        }
        Ok(())
    }
}

/// Estimated maintenance cost for every current link, from the leader's
/// uncertainty regions. Deterministic for a given rng stream; edges are
/// scored in ascending order.
pub fn edge_cost_estimates(
    base: &Topology,
    regions: &[UncertaintyRegion],
    params: &DecisionParams,
    rng: &mut impl Rng,
) -> BTreeMap<Edge, f64> {
    base.edges()
        .iter()
        .map(|e| {
            let dd = distance_distribution(
                &regions[e.a()],
                &regions[e.b()],
                params.pair_budget,
                rng,
            );
            (*e, cost_estimate(&dd, params.rho_m, params.c_max, params.r))
        })
        .collect()
}

/// Part A: greedy deletion scan.
///
/// Existing links are visited in ascending endpoint order. A link whose
/// estimated cost reaches `c_bar` is tentatively removed from the running
/// graph; the removal sticks iff the remainder stays connected, its
/// estimated total cost fits the budget with margin `delta`, and its hop
/// diameter stays within `tau_d`. Returns the accepted deletions and the
/// post-deletion graph.
pub fn part_a_delete(
    base: &Topology,
    costs: &BTreeMap<Edge, f64>,
    params: &DecisionParams,
    now: f64,
) -> Result<(Vec<Edge>, Topology)> {
    let allowance = params.budget.at(now) - params.delta;
    let mut current = base.clone();
    let mut total_est: f64 = costs.values().sum();
    let mut deleted = Vec::new();
    for edge in base.edges() {
        let est = *costs.get(edge).expect("every base edge is scored");
        if est < params.c_bar {
            continue;
        }
        let tentative = current.decremental_update(&[*edge], &[])?;
        if !tentative.is_connected_bfs() {
            continue;
        }
        if total_est - est > allowance {
            continue;
        }
        match tentative.diameter() {
            Ok(d) if d <= params.tau_d => {
                total_est -= est;
                current = tentative;
                deleted.push(*edge);
            }
            _ => {}
        }
    }
    Ok((deleted, current))
}

/// Part B: propose every non-link whose distance distribution is confidently
/// inside the cost-free zone. Links deleted this same round are not
/// re-proposed.
pub fn part_b_propose(
    after_delete: &Topology,
    regions: &[UncertaintyRegion],
    excluded: &[Edge],
    params: &DecisionParams,
    rng: &mut impl Rng,
) -> Vec<Edge> {
    let n = after_delete.node_count();
    let mut proposed = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let e = Edge::new(i, j);
            if after_delete.has_edge(e) || excluded.contains(&e) {
                continue;
            }
            let dd = distance_distribution(&regions[i], &regions[j], params.pair_budget, rng);
            if confidence_score(&dd, params.rho_m, params.r) >= 1.0 - params.p {
                proposed.push(e);
            }
        }
    }
    proposed
}

/// Part C: the next leader is the minimum-eccentricity node of the new
/// graph, lowest id on ties.
pub fn part_c_reelect(new_topo: &Topology) -> Result<NodeId> {
    new_topo.central_node()
}

/// Ground-truth total maintenance cost of a graph: sum of per-link costs,
/// infinite when disconnected or when any link is out of range.
pub fn total_cost(
    topo: &Topology,
    positions: &[Point],
    rho_m: f64,
    c_max: f64,
    r: f64,
) -> f64 {
    if topo.node_count() > 1 && !topo.is_connected_bfs() {
        return f64::INFINITY;
    }
    topo.edges()
        .iter()
        .map(|e| {
            let d = (positions[e.a()] - positions[e.b()]).norm();
            true_edge_cost(d, rho_m, c_max, r)
        })
        .sum()
}

/// Outcome of the full A -> B -> C pipeline, before any orders are sent.
#[derive(Clone, Debug)]
pub struct DecisionOutcome {
    pub record: DecisionRecord,
    /// Graph after deletions only; every order receipt keeps the realized
    /// graph a supergraph of this.
    pub after_delete: Topology,
    /// Graph assuming every proposal forms; the announced leader is its
    /// most central node.
    pub optimistic: Topology,
}

/// Runs the decision pipeline for one round.
pub fn decide(
    base: &Topology,
    regions: &[UncertaintyRegion],
    central: NodeId,
    params: &DecisionParams,
    now: f64,
    rng: &mut impl Rng,
) -> Result<DecisionOutcome> {
    debug_assert_eq!(regions.len(), base.node_count());
    let costs = edge_cost_estimates(base, regions, params, rng);
    let (deleted, after_delete) = part_a_delete(base, &costs, params, now)?;
    let proposed = part_b_propose(&after_delete, regions, &deleted, params, rng);
    let optimistic = after_delete.decremental_update(&[], &proposed)?;
    let new_central = part_c_reelect(&optimistic)?;
    let est_total_cost = after_delete
        .edges()
        .iter()
        .map(|e| costs.get(e).copied().unwrap_or(0.0))
        .sum();
    let record = DecisionRecord {
        decision_time: now,
        central,
        deleted,
        proposed,
        confirmed: Vec::new(),
        new_central,
        est_total_cost,
    };
    debug_assert!(record.check_against(base).is_ok());
    Ok(DecisionOutcome {
        record,
        after_delete,
        optimistic,
    })
}

/// Latest instant the leader waits for confirmations: a round trip across
/// the graph radius at worst-case hop delay, plus two tick periods of slack.
/// Proposals unresolved by then are treated as denied.
pub fn commit_deadline(
    decision_time: f64,
    radius_hops: u32,
    channel: &ChannelModel,
    tick_period: f64,
) -> f64 {
    decision_time + 2.0 * f64::from(radius_hops) * channel.max_hop_delay() + 2.0 * tick_period
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y, 0.0)
    }

    fn params() -> DecisionParams {
        DecisionParams {
            tau_d: 8,
            c_bar: 0.8,
            budget: BudgetSchedule::generous(),
            delta: 0.0,
            p: 0.05,
            rho_m: 0.6,
            c_max: 1.0,
            r: 10.0,
            pair_budget: 4096,
            reserved_margin: 0.0,
        }
    }

    fn singleton_regions(positions: &[Point]) -> Vec<UncertaintyRegion> {
        positions
            .iter()
            .enumerate()
            .map(|(i, q)| UncertaintyRegion::singleton(i, *q, 0.0))
            .collect()
    }

    fn cycle(n: usize) -> Topology {
        Topology::new(n, (0..n).map(|i| Edge::new(i, (i + 1) % n))).unwrap()
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn no_deletions_when_all_links_cheap() {
        let base = cycle(5);
        let costs: BTreeMap<Edge, f64> =
            base.edges().iter().map(|e| (*e, 0.0)).collect();
        let (deleted, after) = part_a_delete(&base, &costs, &params(), 0.0).unwrap();
        assert!(deleted.is_empty());
        assert_eq!(after.edges(), base.edges());
    }

    #[test]
    fn trees_lose_nothing_regardless_of_cost() {
        let base = Topology::new(
            5,
            [(0, 1), (1, 2), (1, 3), (3, 4)]
                .into_iter()
                .map(|(a, b)| Edge::new(a, b)),
        )
        .unwrap();
        let costs: BTreeMap<Edge, f64> =
            base.edges().iter().map(|e| (*e, 100.0)).collect();
        let (deleted, _) = part_a_delete(&base, &costs, &params(), 0.0).unwrap();
        assert!(deleted.is_empty(), "every tree edge is a cut edge");
    }

    #[test]
    fn stretched_cycle_edge_deleted_when_diameter_allows() {
        // 5-cycle; only edge (1,2) is costly. Removing it leaves a path of
        // diameter 4.
        let base = cycle(5);
        let mut costs: BTreeMap<Edge, f64> =
            base.edges().iter().map(|e| (*e, 0.0)).collect();
        costs.insert(Edge::new(1, 2), 3.5);
        let mut prm = params();
        prm.tau_d = 4;
        let (deleted, after) = part_a_delete(&base, &costs, &prm, 0.0).unwrap();
        assert_eq!(deleted, vec![Edge::new(1, 2)]);
        assert_eq!(after.diameter().unwrap(), 4);

        // Tighter cap: the same deletion now violates the diameter bound.
        prm.tau_d = 3;
        let (deleted, after) = part_a_delete(&base, &costs, &prm, 0.0).unwrap();
        assert!(deleted.is_empty());
        assert_eq!(after.edge_count(), 5);
    }

    #[test]
    fn greedy_scan_order_and_guards_on_shared_cycle() {
        // Two costly edges on a 6-cycle. Ascending scan meets (0,1) first;
        // deleting it leaves a path, making every remaining edge a bridge,
        // so (2,3) must survive on the connectivity guard.
        let base = cycle(6);
        let mut costs: BTreeMap<Edge, f64> =
            base.edges().iter().map(|e| (*e, 0.0)).collect();
        costs.insert(Edge::new(0, 1), 4.0);
        costs.insert(Edge::new(2, 3), 4.0);
        let mut prm = params();
        prm.tau_d = 5;
        let (deleted, after) = part_a_delete(&base, &costs, &prm, 0.0).unwrap();
        assert_eq!(deleted, vec![Edge::new(0, 1)]);
        assert!(after.has_edge(Edge::new(2, 3)));
        assert!(after.is_connected_bfs());
    }

    #[test]
    fn budget_guard_blocks_deletions() {
        // Keeping totals above allowance rejects every candidate: deleting
        // (0,1) leaves estimated total 4.0 > allowance 3.9.
        let base = cycle(6);
        let mut costs: BTreeMap<Edge, f64> =
            base.edges().iter().map(|e| (*e, 0.0)).collect();
        costs.insert(Edge::new(0, 1), 4.0);
        costs.insert(Edge::new(2, 3), 4.0);
        let mut prm = params();
        prm.tau_d = 5;
        prm.budget = BudgetSchedule {
            c0: 4.4,
            gamma: 0.0,
            floor: 0.0,
        };
        prm.delta = 0.5;
        let (deleted, _) = part_a_delete(&base, &costs, &prm, 0.0).unwrap();
        assert!(deleted.is_empty());

        // A looser allowance admits the first deletion; the second then
        // passes the budget but hits the connectivity guard.
        prm.budget.c0 = 4.5;
        let (deleted, _) = part_a_delete(&base, &costs, &prm, 0.0).unwrap();
        assert_eq!(deleted, vec![Edge::new(0, 1)]);
    }

    #[test]
    fn budget_decays_over_time() {
        let schedule = BudgetSchedule {
            c0: 10.0,
            gamma: 0.5,
            floor: 2.0,
        };
        assert_eq!(schedule.at(0.0), 10.0);
        assert_eq!(schedule.at(10.0), 5.0);
        assert_eq!(schedule.at(100.0), 2.0, "floor holds");
    }

    #[test]
    fn proposals_require_confident_closeness() {
        // Square of side 3 with only the perimeter: diagonals are at
        // 3*sqrt(2) ~ 4.24 < rho_m * R = 6, so both get proposed.
        let positions = [p(0.0, 0.0), p(3.0, 0.0), p(3.0, 3.0), p(0.0, 3.0)];
        let base = cycle(4);
        let regions = singleton_regions(&positions);
        let proposed = part_b_propose(&base, &regions, &[], &params(), &mut rng());
        assert_eq!(proposed, vec![Edge::new(0, 2), Edge::new(1, 3)]);

        // Stretch the square: diagonals at ~8.49 exceed the free zone and
        // the singleton confidence drops to zero.
        let positions = [p(0.0, 0.0), p(6.0, 0.0), p(6.0, 6.0), p(0.0, 6.0)];
        let regions = singleton_regions(&positions);
        let proposed = part_b_propose(&base, &regions, &[], &params(), &mut rng());
        assert!(proposed.is_empty());
    }

    #[test]
    fn same_round_deletions_not_reproposed() {
        let positions = [p(0.0, 0.0), p(1.0, 0.0), p(2.0, 0.0)];
        let base = Topology::new(3, [Edge::new(0, 1), Edge::new(1, 2)]).unwrap();
        let regions = singleton_regions(&positions);
        // Pretend (0,2)... it is a genuine non-edge; exclude it as if Part A
        // had just dropped it.
        let proposed = part_b_propose(
            &base,
            &regions,
            &[Edge::new(0, 2)],
            &params(),
            &mut rng(),
        );
        assert!(proposed.is_empty());
    }

    #[test]
    fn reelection_picks_graph_center() {
        let path = Topology::new(5, (0..4).map(|i| Edge::new(i, i + 1))).unwrap();
        assert_eq!(part_c_reelect(&path).unwrap(), 2);
        let star = Topology::new(5, (1..5).map(|i| Edge::new(0, i))).unwrap();
        assert_eq!(part_c_reelect(&star).unwrap(), 0);
    }

    #[test]
    fn reelection_after_incremental_delete_matches_scratch() {
        // Wheel: hub 0, rim 1..=5. Drop one rim edge incrementally and
        // compare against a from-scratch rebuild.
        let mut edges: Vec<Edge> = (1..=5).map(|i| Edge::new(0, i)).collect();
        edges.extend((1..=5).map(|i| Edge::new(i, if i == 5 { 1 } else { i + 1 })));
        let wheel = Topology::new(6, edges.clone()).unwrap();
        let dropped = wheel.decremental_update(&[Edge::new(2, 3)], &[]).unwrap();
        let scratch = Topology::new(
            6,
            edges.into_iter().filter(|e| *e != Edge::new(2, 3)),
        )
        .unwrap();
        assert_eq!(
            part_c_reelect(&dropped).unwrap(),
            part_c_reelect(&scratch).unwrap()
        );
    }

    #[test]
    fn total_cost_cases() {
        let positions = [p(0.0, 0.0), p(6.0, 0.0), p(6.0, 6.0)];
        let triangle = cycle(3);
        // Edges: 6.0 (free boundary), 6.0, and 6*sqrt(2) ~ 8.485 costing
        // c_max * (8.485 - 6).
        let cost = total_cost(&triangle, &positions, 0.6, 1.0, 10.0);
        assert!((cost - (72.0f64.sqrt() - 6.0)).abs() < 1e-9);

        let split = Topology::new(4, [Edge::new(0, 1), Edge::new(2, 3)]).unwrap();
        let far = [p(0.0, 0.0), p(1.0, 0.0), p(0.0, 5.0), p(1.0, 5.0)];
        assert!(total_cost(&split, &far, 0.6, 1.0, 10.0).is_infinite());

        let pair = Topology::new(2, [Edge::new(0, 1)]).unwrap();
        let at_range = [p(0.0, 0.0), p(10.0, 0.0)];
        assert!((total_cost(&pair, &at_range, 0.6, 1.0, 10.0) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn full_pipeline_deterministic_and_consistent() {
        // Hexagon with one stretched edge and one close non-adjacent pair.
        let positions = [
            p(0.0, 0.0),
            p(5.0, 0.0),
            p(9.0, 3.0),
            p(9.5, 8.0),
            p(4.0, 9.0),
            p(-1.0, 6.0),
        ];
        let base = cycle(6);
        let regions = singleton_regions(&positions);
        let prm = params();
        let out1 = decide(&base, &regions, 0, &prm, 12.0, &mut rng()).unwrap();
        let out2 = decide(&base, &regions, 0, &prm, 12.0, &mut rng()).unwrap();
        assert_eq!(out1.record, out2.record, "seeded pipeline must replay");
        out1.record.check_against(&base).unwrap();
        assert_eq!(out1.record.decision_time, 12.0);
        assert_eq!(out1.record.central, 0);
        // Deletions and proposals are disjoint and consistent with the
        // optimistic graph.
        for e in &out1.record.deleted {
            assert!(!out1.after_delete.has_edge(*e));
            assert!(!out1.optimistic.has_edge(*e) || out1.record.proposed.contains(e));
        }
        for e in &out1.record.proposed {
            assert!(out1.optimistic.has_edge(*e));
        }
        assert!(out1.after_delete.is_connected_bfs());
        assert!(out1.optimistic.diameter().unwrap() <= prm.tau_d);
    }

    #[test]
    fn commit_deadline_accounts_for_round_trip() {
        let ch = ChannelModel {
            propagation_speed: 25.0,
            message_length: 0.1,
            radius: 10.0,
        };
        // Radius 3 graph: 2 * 3 * 0.5 + 2 * 0.1 = 3.2 after the decision.
        let deadline = commit_deadline(100.0, 3, &ch, 0.1);
        assert!((deadline - 103.2).abs() < 1e-12);
    }

    #[test]
    fn params_validation_rejects_nonsense() {
        let mut prm = params();
        prm.validate().unwrap();
        prm.p = 0.0;
        assert!(prm.validate().is_err());
        let mut prm = params();
        prm.rho_m = 1.0;
        assert!(prm.validate().is_err());
        let mut prm = params();
        prm.tau_d = 0;
        assert!(prm.validate().is_err());
    }

    #[test]
    fn accepted_deletions_all_passed_guards() {
        // Randomized check: replay every accepted deletion in order and
        // confirm each guard held at its acceptance instant.
        use rand::Rng as _;
        let mut seed_rng = rng();
        for _ in 0..40 {
            let n = seed_rng.random_range(5..12usize);
            let mut edges = std::collections::BTreeSet::new();
            for i in 0..n {
                edges.insert(Edge::new(i, (i + 1) % n));
            }
            for _ in 0..n {
                let a = seed_rng.random_range(0..n);
                let b = seed_rng.random_range(0..n);
                if a != b {
                    edges.insert(Edge::new(a, b));
                }
            }
            let base = Topology::new(n, edges.iter().copied()).unwrap();
            let costs: BTreeMap<Edge, f64> = base
                .edges()
                .iter()
                .map(|e| (*e, seed_rng.random_range(0.0..4.0)))
                .collect();
            let prm = params();
            let (deleted, after) = part_a_delete(&base, &costs, &prm, 0.0).unwrap();
            let mut replay = base.clone();
            let mut total: f64 = costs.values().sum();
            for e in &deleted {
                assert!(costs[e] >= prm.c_bar);
                let next = replay.decremental_update(&[*e], &[]).unwrap();
                assert!(next.is_connected_bfs());
                total -= costs[e];
                assert!(total <= prm.budget.at(0.0) - prm.delta);
                assert!(next.diameter().unwrap() <= prm.tau_d);
                replay = next;
            }
            assert_eq!(replay.edges(), after.edges());
        }
    }
}
