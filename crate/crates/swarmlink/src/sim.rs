//! Discrete-time simulation: agent physics, delayed radio, the leader's
//! periodic topology decisions, and the order/confirm protocol that turns
//! an announcement into an agreed graph.
//!
//! # Edge-set state
//!
//! Three sets evolve together. The **committed** graph is what the leader
//! last announced and confirmed; it only changes at commit instants (or,
//! for the oracle planners, at plan instants). The **applied** set is what
//! links agents are maintaining *right now*: committed, minus deletions
//! whose orders have already reached an endpoint, plus additions that have
//! already physically formed. The **realized** graph is the applied set
//! filtered by true range; it is the graph packets actually traverse, and
//! keeping it connected at every tick is the invariant the whole design
//! defends.
//!
//! # One tick
//!
//! 1. integrate physics to the tick end `t`;
//! 2. deliver every queued message with arrival time `<= t`, in (time,
//!    sequence) order — floods relay immediately at their arrival times;
//! 3. commit the pending round if all confirmations arrived or its
//!    deadline passed (additions missing a confirmation are denied and
//!    torn down);
//! 4. on cadence ticks, run the planner: the leader methods build position
//!    regions from the leader's knowledge base, decide deletions/additions
//!    /handoff, and flood the order; the oracle methods replace the graph
//!    from ground truth instantly;
//! 5. every agent broadcasts its knowledge base;
//! 6. sample metrics and check the connectivity invariant.
//!
//! Radio geometry is tick-quantized: a relay emitted mid-tick uses the
//! positions of the tick being processed. Propagation is ~2 orders of
//! magnitude faster than agent drift, so the quantization error is
//! negligible against the slack already in the error bounds.
//!
//! # Message discipline
//!
//! Orders and confirmations flood: each node re-broadcasts a given order
//! (or a given confirmation) exactly once. A deletion takes effect the
//! first time either endpoint hears the order. An addition is attempted
//! when the second endpoint hears it, succeeds iff the endpoints are truly
//! within range at that instant, and the attempting endpoint floods the
//! result back to the leader. Edges remember which round last (re)created
//! them so a straggling deletion order from an earlier round cannot kill
//! an edge a later round re-added.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::rc::Rc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::baselines::{mst_diameter_bounded, mst_ideal, Method};
use crate::comms::{dropped, truncate, ChannelModel, KnowledgeBase, Message};
use crate::decision::{commit_deadline, decide, total_cost, DecisionParams};
use crate::dynamics::{step as physics_step, AgentState, DisturbanceModel, TrackingPolicy};
use crate::estimation::{
    regions_from_knowledge, shrink_by_connectivity, true_edge_cost, RegionParams,
};
use crate::graph::{Edge, NodeId, Topology, LAMBDA2_TOL};
use crate::metrics::{RoundStats, RunMetrics, StepSample};
use crate::rng::{derive_seed, LBL_CHANNEL, LBL_DECISION, LBL_PHYSICS};
use crate::scenario::{generate_world, Scenario};
use crate::{Error, Point, Result};

/// Topology order: the full announcement of one decision round.
struct OrderMsg {
    decision: u64,
    deleted: Vec<Edge>,
    proposed: Vec<Edge>,
}

#[derive(Clone)]
enum Payload {
    /// Periodic knowledge-base broadcast.
    Info(Rc<Message>),
    /// Flooded decision announcement.
    Order(Rc<OrderMsg>),
    /// Flooded attempt result for one proposed addition.
    Confirm { decision: u64, edge: Edge, success: bool },
}

struct Ev {
    time: f64,
    /// Global emission counter; makes simultaneous deliveries well-ordered.
    seq: u64,
    receiver: NodeId,
    payload: Payload,
}

impl PartialEq for Ev {
    fn eq(&self, other: &Self) -> bool {
        self.seq == other.seq
    }
}
impl Eq for Ev {}
impl PartialOrd for Ev {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Ev {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.seq.cmp(&other.seq))
    }
}

/// A decision round between announcement and commit.
struct Pending {
    id: u64,
    record_idx: usize,
    round_idx: usize,
    /// Leader that issued the round; confirmations are addressed to it.
    central: NodeId,
    new_central: NodeId,
    proposed: Vec<Edge>,
    after_delete: Topology,
    /// Attempt results known to the leader so far.
    resolutions: BTreeMap<Edge, bool>,
    /// Order receipt time per proposal endpoint (lower id first).
    receipts: BTreeMap<Edge, [Option<f64>; 2]>,
    deadline: f64,
}

pub struct Simulation {
    scenario: Scenario,
    channel: ChannelModel,
    params: DecisionParams,
    region_params: RegionParams,

    states: Vec<AgentState>,
    positions: Vec<Point>,
    policies: Vec<TrackingPolicy>,
    disturbances: Vec<DisturbanceModel>,
    physics_rngs: Vec<ChaCha8Rng>,
    channel_rng: ChaCha8Rng,
    kbs: Vec<KnowledgeBase>,

    committed: Topology,
    applied: BTreeSet<Edge>,
    /// Round that last inserted each applied edge (0 = initial graph).
    edge_epoch: BTreeMap<Edge, u64>,
    central: NodeId,

    queue: BinaryHeap<Reverse<Ev>>,
    seq: u64,
    seen_order: Vec<BTreeSet<u64>>,
    seen_confirm: Vec<BTreeSet<(u64, Edge)>>,
    pending: Option<Pending>,
    next_decision_id: u64,

    cumulative_cost: f64,
    metrics: RunMetrics,
}

/// Runs one scenario to completion.
pub fn run_scenario(scenario: &Scenario) -> Result<RunMetrics> {
    Simulation::new(scenario)?.run()
}

impl Simulation {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        let world = generate_world(scenario)?;
        let n = scenario.nodes;
        let committed = world.initial_topology;
        let central = committed.central_node()?;
        let applied: BTreeSet<Edge> = committed.edges().clone();
        let edge_epoch = applied.iter().map(|e| (*e, 0u64)).collect();

        // Everyone starts knowing the full launch formation.
        let mut kbs: Vec<KnowledgeBase> = (0..n).map(|i| KnowledgeBase::new(i, n)).collect();
        for kb in &mut kbs {
            for (j, p) in world.positions.iter().enumerate() {
                kb.seed_entry(j, *p, 0.0);
            }
        }

        let states = world
            .positions
            .iter()
            .map(|p| AgentState {
                position: *p,
                time: 0.0,
            })
            .collect();
        let physics_rngs = (0..n)
            .map(|i| {
                ChaCha8Rng::seed_from_u64(derive_seed(scenario.seed, &[LBL_PHYSICS, i as u64]))
            })
            .collect();
        let channel_rng =
            ChaCha8Rng::seed_from_u64(derive_seed(scenario.seed, &[LBL_CHANNEL]));

        let metrics = RunMetrics {
            seed: scenario.seed,
            method: Some(scenario.method),
            ..Default::default()
        };

        Ok(Simulation {
            channel: scenario.channel(),
            params: scenario.decision_params(),
            region_params: scenario.region_params(),
            states,
            positions: world.positions,
            policies: world.policies,
            disturbances: world.disturbances,
            physics_rngs,
            channel_rng,
            kbs,
            committed,
            applied,
            edge_epoch,
            central,
            queue: BinaryHeap::new(),
            seq: 0,
            seen_order: vec![BTreeSet::new(); n],
            seen_confirm: vec![BTreeSet::new(); n],
            pending: None,
            next_decision_id: 1,
            cumulative_cost: 0.0,
            metrics,
            scenario: scenario.clone(),
        })
    }

    pub fn run(mut self) -> Result<RunMetrics> {
        for step in 0..self.scenario.duration_steps {
            self.tick(step)?;
        }
        // A round still in flight at the end never became topology; drop its
        // record so the decision log replays exactly to the final graph.
        if let Some(p) = self.pending.take() {
            self.metrics.decisions.truncate(p.record_idx);
            self.metrics.decision_wall_clock.truncate(p.record_idx);
            self.metrics.rounds.truncate(p.round_idx);
        }
        self.metrics.final_positions = self.positions.clone();
        self.metrics.final_edges = self.committed.edges().iter().copied().collect();
        self.metrics.final_central = self.central;
        Ok(self.metrics)
    }

    fn tick(&mut self, step: usize) -> Result<()> {
        let t = (step + 1) as f64 * self.scenario.dt;
        for i in 0..self.states.len() {
            let next = physics_step(
                &self.states[i],
                &self.policies[i],
                &mut self.disturbances[i],
                self.scenario.dt,
                self.scenario.dim,
                &mut self.physics_rngs[i],
            )
            .map_err(|e| abort(step, e))?;
            self.states[i] = next;
            self.positions[i] = next.position;
        }
        self.process_deliveries(t);
        self.try_commit(t, step)?;
        if (step + 1) % self.scenario.decision_cadence == 0 {
            match self.scenario.method {
                Method::Hybrid | Method::FixedLeader => self.pipeline_decision(t, step)?,
                Method::IdealMst | Method::DiameterMst => self.oracle_decision(t, step)?,
            }
        }
        self.info_round(t);
        self.sample(step, t)
    }

    /// Delivers every queued message due by `t`, in (time, seq) order.
    fn process_deliveries(&mut self, t: f64) {
        loop {
            match self.queue.peek() {
                Some(Reverse(ev)) if ev.time <= t => {}
                _ => break,
            }
            let Reverse(ev) = self.queue.pop().unwrap();
            match ev.payload {
                Payload::Info(ref msg) => {
                    self.kbs[ev.receiver].merge(msg, ev.time);
                }
                Payload::Order(ref order) => {
                    let order = Rc::clone(order);
                    self.receive_order(ev.receiver, &order, ev.time);
                }
                Payload::Confirm {
                    decision,
                    edge,
                    success,
                } => {
                    self.receive_confirm(ev.receiver, decision, edge, success, ev.time);
                }
            }
        }
    }

    fn receive_order(&mut self, node: NodeId, order: &Rc<OrderMsg>, now: f64) {
        let k = order.decision;
        if !self.seen_order[node].insert(k) {
            return;
        }
        for e in &order.deleted {
            if e.touches(node) {
                self.remove_applied(*e, k);
            }
        }
        for e in &order.proposed {
            if e.touches(node) {
                self.note_addition_receipt(*e, node, k, now);
            }
        }
        self.metrics.rounds[(k - 1) as usize].order_relays += 1;
        self.fan_out(node, Payload::Order(Rc::clone(order)), now);
    }

    /// Records that `node` (an endpoint of proposal `e`) heard the order;
    /// when both endpoints have, the later one attempts the link.
    fn note_addition_receipt(&mut self, e: Edge, node: NodeId, k: u64, now: f64) {
        let Some(p) = &mut self.pending else { return };
        if p.id != k {
            return;
        }
        let slot = if e.a() == node { 0 } else { 1 };
        let receipts = p.receipts.get_mut(&e).expect("proposal has a receipt row");
        if receipts[slot].is_some() {
            return;
        }
        receipts[slot] = Some(now);
        if receipts[1 - slot].is_some() {
            self.resolve_addition(e, k, node, now);
        }
    }

    /// Attempts a proposed link: success iff the endpoints are truly within
    /// range right now. The attempting endpoint floods the verdict back.
    fn resolve_addition(&mut self, e: Edge, k: u64, resolver: NodeId, now: f64) {
        let separation = (self.positions[e.a()] - self.positions[e.b()]).norm();
        let success = separation <= self.channel.radius;
        if success {
            self.applied.insert(e);
            self.edge_epoch.insert(e, k);
        }
        self.metrics.rounds[(k - 1) as usize].confirm_originations += 1;
        if let Some(p) = &mut self.pending {
            if p.id == k && p.central == resolver {
                p.resolutions.insert(e, success);
            }
        }
        // The originator never re-relays its own flood.
        self.seen_confirm[resolver].insert((k, e));
        self.fan_out(
            resolver,
            Payload::Confirm {
                decision: k,
                edge: e,
                success,
            },
            now,
        );
    }

    fn receive_confirm(&mut self, node: NodeId, k: u64, edge: Edge, success: bool, now: f64) {
        if !self.seen_confirm[node].insert((k, edge)) {
            return;
        }
        if let Some(p) = &mut self.pending {
            if p.id == k && p.central == node {
                p.resolutions.entry(edge).or_insert(success);
            }
        }
        self.metrics.rounds[(k - 1) as usize].confirm_relays += 1;
        self.fan_out(
            node,
            Payload::Confirm {
                decision: k,
                edge,
                success,
            },
            now,
        );
    }

    /// Drops an applied edge unless a later round re-created it.
    fn remove_applied(&mut self, e: Edge, order_id: u64) {
        if let Some(&epoch) = self.edge_epoch.get(&e) {
            if epoch > order_id {
                return;
            }
        }
        self.applied.remove(&e);
    }

    /// Commits the pending round once every proposal is resolved or the
    /// deadline passed. Unresolved proposals are denied; if such a link
    /// already formed, it is torn down to keep agents and leader agreed.
    fn try_commit(&mut self, t: f64, step: usize) -> Result<()> {
        let ready = match &self.pending {
            None => return Ok(()),
            Some(p) => p.resolutions.len() == p.proposed.len() || t >= p.deadline,
        };
        if !ready {
            return Ok(());
        }
        let p = self.pending.take().unwrap();
        let mut confirmed = Vec::new();
        let mut timeouts = 0;
        for e in &p.proposed {
            match p.resolutions.get(e) {
                Some(true) => confirmed.push(*e),
                Some(false) => {}
                None => {
                    timeouts += 1;
                    if self.edge_epoch.get(e) == Some(&p.id) {
                        self.applied.remove(e);
                    }
                }
            }
        }
        let committed = p
            .after_delete
            .decremental_update(&[], &confirmed)
            .map_err(|e| abort(step, e))?;
        if !committed.is_connected_bfs() {
            return Err(Error::RunAborted {
                step,
                reason: "committed graph disconnected".into(),
            });
        }
        debug_assert!(committed.lambda2() > LAMBDA2_TOL);
        if committed.diameter().map_err(|e| abort(step, e))? > self.params.tau_d {
            self.metrics.diameter_violations += 1;
        }
        self.committed = committed;
        self.central = p.new_central;
        if std::env::var_os("SIM_TRACE").is_some() {
            eprintln!(
                "TRACE commit id={} t={t:.1} del={} prop={} conf={} timeouts={timeouts} edges={} central={}",
                p.id,
                self.metrics.decisions[p.record_idx].deleted.len(),
                p.proposed.len(),
                confirmed.len(),
                self.committed.edge_count(),
                self.central
            );
        }
        self.metrics.decisions[p.record_idx].confirmed = confirmed;
        self.metrics.rounds[p.round_idx].commit_timeouts = timeouts;
        Ok(())
    }

    /// One leader decision: estimate positions from the leader's knowledge,
    /// pick deletions/additions/handoff, announce, and start the round.
    fn pipeline_decision(&mut self, t: f64, step: usize) -> Result<()> {
        if self.pending.is_some() {
            self.metrics.skipped_decisions += 1;
            return Ok(());
        }
        let id = self.next_decision_id;
        self.next_decision_id += 1;
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_seed(self.scenario.seed, &[LBL_DECISION, id]));
        let clock = Instant::now();
        let mut regions = regions_from_knowledge(
            &self.committed,
            self.central,
            &self.positions[self.central],
            &self.kbs[self.central],
            t,
            &self.channel,
            &self.policies,
            self.scenario.d_max,
            &self.region_params,
            &mut rng,
        )
        .map_err(|e| abort(step, e))?;
        shrink_by_connectivity(
            &mut regions,
            self.committed.edges(),
            self.channel.radius,
            self.scenario.shrink_iterations,
        );
        let outcome = decide(&self.committed, &regions, self.central, &self.params, t, &mut rng)
            .map_err(|e| abort(step, e))?;
        let wall = clock.elapsed().as_secs_f64();

        let mut record = outcome.record;
        if self.scenario.method == Method::FixedLeader {
            record.new_central = self.central;
        }
        let new_central = record.new_central;
        let deadline = commit_deadline(
            t,
            outcome.after_delete.eccentricity(self.central),
            &self.channel,
            self.scenario.dt,
        );
        let order = Rc::new(OrderMsg {
            decision: id,
            deleted: record.deleted.clone(),
            proposed: record.proposed.clone(),
        });

        let record_idx = self.metrics.decisions.len();
        let round_idx = self.metrics.rounds.len();
        self.metrics.rounds.push(RoundStats {
            index: round_idx,
            time: t,
            order_originations: 1,
            proposed_additions: order.proposed.len(),
            ..Default::default()
        });
        self.metrics.decision_wall_clock.push(wall);
        self.metrics.decisions.push(record);
        self.pending = Some(Pending {
            id,
            record_idx,
            round_idx,
            central: self.central,
            new_central,
            proposed: order.proposed.clone(),
            after_delete: outcome.after_delete,
            resolutions: BTreeMap::new(),
            receipts: order.proposed.iter().map(|e| (*e, [None, None])).collect(),
            deadline,
        });

        // The leader hears its own order instantly.
        let leader = self.central;
        self.seen_order[leader].insert(id);
        for e in &order.deleted {
            if e.touches(leader) {
                self.remove_applied(*e, id);
            }
        }
        for e in order.proposed.clone() {
            if e.touches(leader) {
                self.note_addition_receipt(e, leader, id, t);
            }
        }
        self.fan_out(leader, Payload::Order(order), t);
        // A round with nothing to confirm commits on the spot.
        self.try_commit(t, step)
    }

    /// Ground-truth planners: replace the whole graph instantly.
    fn oracle_decision(&mut self, t: f64, step: usize) -> Result<()> {
        let clock = Instant::now();
        let plan = match self.scenario.method {
            Method::IdealMst => mst_ideal(
                &self.positions,
                self.channel.radius,
                self.params.rho_m,
                self.params.c_max,
            ),
            Method::DiameterMst => mst_diameter_bounded(
                &self.positions,
                self.channel.radius,
                self.params.rho_m,
                self.params.c_max,
                self.params.tau_d,
            )
            .map(|(topo, _)| topo),
            _ => unreachable!("oracle_decision only runs for oracle methods"),
        }
        .map_err(|e| abort(step, e))?;
        let wall = clock.elapsed().as_secs_f64();

        let deleted: Vec<Edge> = self.committed.edges().difference(plan.edges()).copied().collect();
        let proposed: Vec<Edge> = plan.edges().difference(self.committed.edges()).copied().collect();
        let new_central = plan.central_node().map_err(|e| abort(step, e))?;
        if self.scenario.method.bounds_diameter()
            && plan.diameter().map_err(|e| abort(step, e))? > self.params.tau_d
        {
            self.metrics.diameter_violations += 1;
        }
        self.metrics.decisions.push(crate::decision::DecisionRecord {
            decision_time: t,
            central: self.central,
            deleted,
            proposed: proposed.clone(),
            confirmed: proposed,
            new_central,
            est_total_cost: total_cost(
                &plan,
                &self.positions,
                self.params.rho_m,
                self.params.c_max,
                self.channel.radius,
            ),
        });
        self.metrics.decision_wall_clock.push(wall);
        self.applied = plan.edges().clone();
        self.edge_epoch = self.applied.iter().map(|e| (*e, 0u64)).collect();
        self.committed = plan;
        self.central = new_central;
        Ok(())
    }

    /// Every agent broadcasts its knowledge base at the tick end.
    fn info_round(&mut self, t: f64) {
        for i in 0..self.kbs.len() {
            self.kbs[i].update_self(self.positions[i], t);
            let mut msg = Message {
                origin: i,
                emit_time: t,
                records: self.kbs[i].to_records(),
            };
            if self.scenario.truncation_k > 0 {
                msg = truncate(&msg, self.scenario.truncation_k, &self.positions[i]);
            }
            self.metrics.info_messages += 1;
            self.fan_out(i, Payload::Info(Rc::new(msg)), t);
        }
    }

    /// Queues one delivery per in-range receiver, honoring channel loss.
    fn fan_out(&mut self, from: NodeId, payload: Payload, now: f64) {
        for v in 0..self.positions.len() {
            if v == from {
                continue;
            }
            let distance = (self.positions[v] - self.positions[from]).norm();
            if distance > self.channel.radius {
                continue;
            }
            if dropped(self.scenario.drop_probability, &mut self.channel_rng) {
                continue;
            }
            self.seq += 1;
            self.queue.push(Reverse(Ev {
                time: now + self.channel.delay(distance),
                seq: self.seq,
                receiver: v,
                payload: payload.clone(),
            }));
        }
    }

    /// Per-tick sample plus the connectivity invariant on the realized graph.
    fn sample(&mut self, step: usize, t: f64) -> Result<()> {
        let n = self.positions.len();
        let mut instant = 0.0f64;
        let mut stressed = 0usize;
        let mut broken = false;
        let mut realized: Vec<Edge> = Vec::with_capacity(self.applied.len());
        for e in &self.applied {
            let d = (self.positions[e.a()] - self.positions[e.b()]).norm();
            let c = true_edge_cost(
                d,
                self.params.rho_m,
                self.params.c_max,
                self.channel.radius,
            );
            if c.is_finite() {
                realized.push(*e);
                // Maintenance cost accrues on usable links only; a link
                // stretched past the radius carries traffic for no one.
                instant += c;
                if c > 0.0 {
                    stressed += 1;
                }
            } else {
                broken = true;
            }
        }
        if broken {
            self.metrics.breakage_events += 1;
        }
        if !edges_connect(n, &realized) {
            if std::env::var_os("SIM_TRACE").is_some() {
                for e in &self.applied {
                    let d = (self.positions[e.a()] - self.positions[e.b()]).norm();
                    if d > self.channel.radius {
                        eprintln!(
                            "TRACE broken {}-{} len={d:.2} committed={} pending={}",
                            e.a(),
                            e.b(),
                            self.committed.has_edge(*e),
                            self.pending.is_some(),
                        );
                    }
                }
            }
            return Err(Error::RunAborted {
                step,
                reason: format!("realized graph disconnected at t = {t:.2}"),
            });
        }
        self.cumulative_cost += instant;
        self.metrics.steps.push(StepSample {
            step,
            time: t,
            committed_edges: self.committed.edge_count(),
            realized_edges: realized.len(),
            stressed_edges: stressed,
            instant_cost: instant,
            cumulative_cost: self.cumulative_cost,
        });
        Ok(())
    }
}

fn abort(step: usize, e: Error) -> Error {
    match e {
        Error::RunAborted { .. } => e,
        other => Error::RunAborted {
            step,
            reason: other.to_string(),
        },
    }
}

/// True iff the edge list connects all `n` nodes.
fn edges_connect(n: usize, edges: &[Edge]) -> bool {
    if n <= 1 {
        return true;
    }
    let mut adj = vec![Vec::new(); n];
    for e in edges {
        adj[e.a()].push(e.b());
        adj[e.b()].push(e.a());
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    count == n
}
