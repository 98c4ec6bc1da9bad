//! Run telemetry: per-tick series, per-decision records and message
//! accounting, plus text export.
//!
//! Edge-set conventions used throughout: the *committed* graph is the one
//! the current central node last announced; the *applied* set is what links
//! are physically maintained right now (committed, minus deletion orders
//! already received, plus additions already formed); the *realized* graph is
//! the applied set filtered by true range. Maintenance cost accrues on the
//! applied set, since those are the links actually being serviced.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::io::Write;

use crate::baselines::Method;
use crate::decision::DecisionRecord;
use crate::graph::{Edge, NodeId};
use crate::{Point, Result};

/// One per-tick sample, taken after all deliveries and decisions of the tick.
#[derive(Clone, Debug, PartialEq)]
pub struct StepSample {
    pub step: usize,
    pub time: f64,
    /// Edges in the committed graph.
    pub committed_edges: usize,
    /// Applied edges whose endpoints are truly within range.
    pub realized_edges: usize,
    /// Applied edges currently costing maintenance (distance beyond the
    /// free zone).
    pub stressed_edges: usize,
    /// Sum of true maintenance cost over applied edges; infinite if any
    /// applied edge is out of range.
    pub instant_cost: f64,
    /// Running integral of `instant_cost` (per tick, not scaled by dt).
    pub cumulative_cost: f64,
}

/// Message accounting for one executed decision round.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RoundStats {
    pub index: usize,
    pub time: f64,
    /// Order floods started (the central's announcement). Always 1.
    pub order_originations: usize,
    /// Order re-broadcasts by other nodes.
    pub order_relays: usize,
    /// Confirmation floods started; one per proposed addition.
    pub confirm_originations: usize,
    pub confirm_relays: usize,
    /// Additions the round proposed.
    pub proposed_additions: usize,
    /// Proposals unresolved at the commit deadline (denied).
    pub commit_timeouts: usize,
}

/// Everything a finished run reports.
#[derive(Clone, Debug, Default)]
pub struct RunMetrics {
    pub seed: u64,
    pub method: Option<Method>,
    pub steps: Vec<StepSample>,
    pub decisions: Vec<DecisionRecord>,
    pub rounds: Vec<RoundStats>,
    /// Seconds of computation per executed decision (planner only; excluded
    /// from the determinism fingerprint).
    pub decision_wall_clock: Vec<f64>,
    /// Committed graphs whose hop diameter exceeded the cap, counted at
    /// commit instants.
    pub diameter_violations: usize,
    /// Ticks where some applied edge exceeded true range.
    pub breakage_events: usize,
    /// Decision instants skipped because a round was still settling.
    pub skipped_decisions: usize,
    /// Periodic state broadcasts emitted.
    pub info_messages: usize,
    /// Snapshot of the final tick, for plotting.
    pub final_positions: Vec<Point>,
    pub final_edges: Vec<Edge>,
    pub final_central: NodeId,
}

impl RunMetrics {
    pub fn cumulative_cost(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.cumulative_cost)
    }

    pub fn mean_instant_cost(&self) -> f64 {
        if self.steps.is_empty() {
            return 0.0;
        }
        self.cumulative_cost() / self.steps.len() as f64
    }

    /// Hash of every deterministic field. Two runs of the same scenario must
    /// agree on this; wall-clock timings are deliberately excluded.
    pub fn replay_fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.seed.hash(&mut h);
        if let Some(m) = self.method {
            m.tag().hash(&mut h);
        }
        for s in &self.steps {
            s.step.hash(&mut h);
            s.committed_edges.hash(&mut h);
            s.realized_edges.hash(&mut h);
            s.stressed_edges.hash(&mut h);
            s.instant_cost.to_bits().hash(&mut h);
        }
        for d in &self.decisions {
            d.decision_time.to_bits().hash(&mut h);
            d.central.hash(&mut h);
            d.new_central.hash(&mut h);
            d.deleted.hash(&mut h);
            d.proposed.hash(&mut h);
            d.confirmed.hash(&mut h);
            d.est_total_cost.to_bits().hash(&mut h);
        }
        for r in &self.rounds {
            (r.order_originations, r.order_relays).hash(&mut h);
            (r.confirm_originations, r.confirm_relays).hash(&mut h);
            (r.proposed_additions, r.commit_timeouts).hash(&mut h);
        }
        (self.diameter_violations, self.breakage_events).hash(&mut h);
        (self.skipped_decisions, self.info_messages).hash(&mut h);
        for p in &self.final_positions {
            p.x.to_bits().hash(&mut h);
            p.y.to_bits().hash(&mut h);
            p.z.to_bits().hash(&mut h);
        }
        self.final_edges.hash(&mut h);
        self.final_central.hash(&mut h);
        h.finish()
    }

    /// Per-tick series as comma-separated text with a header row.
    pub fn write_step_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "step,time,committed_edges,realized_edges,stressed_edges,instant_cost,cumulative_cost"
        )?;
        for s in &self.steps {
            writeln!(
                w,
                "{},{:.3},{},{},{},{},{}",
                s.step,
                s.time,
                s.committed_edges,
                s.realized_edges,
                s.stressed_edges,
                s.instant_cost,
                s.cumulative_cost
            )?;
        }
        Ok(())
    }

    /// Per-decision log; edge lists are `a-b` pairs joined by `;`.
    pub fn write_decision_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "index,time,central,new_central,deleted,proposed,confirmed,est_total_cost,wall_clock_s"
        )?;
        for (i, d) in self.decisions.iter().enumerate() {
            let wall = self
                .decision_wall_clock
                .get(i)
                .map_or(String::new(), |t| format!("{t:.6}"));
            writeln!(
                w,
                "{},{:.3},{},{},{},{},{},{},{}",
                i,
                d.decision_time,
                d.central,
                d.new_central,
                join_edges(&d.deleted),
                join_edges(&d.proposed),
                join_edges(&d.confirmed),
                d.est_total_cost,
                wall
            )?;
        }
        Ok(())
    }

    /// Human-readable run summary.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        use std::fmt::Write as _;
        let _ = writeln!(out, "seed: {}", self.seed);
        if let Some(m) = self.method {
            let _ = writeln!(out, "method: {} ({m:?})", m.tag());
        }
        let _ = writeln!(out, "ticks: {}", self.steps.len());
        let _ = writeln!(out, "decisions: {}", self.decisions.len());
        let _ = writeln!(out, "skipped decisions: {}", self.skipped_decisions);
        let _ = writeln!(out, "cumulative cost: {:.4}", self.cumulative_cost());
        let _ = writeln!(out, "mean instant cost: {:.6}", self.mean_instant_cost());
        let _ = writeln!(out, "diameter violations: {}", self.diameter_violations);
        let _ = writeln!(out, "breakage events: {}", self.breakage_events);
        let _ = writeln!(out, "info messages: {}", self.info_messages);
        let orders: usize = self.rounds.iter().map(|r| r.order_originations).sum();
        let confirms: usize = self.rounds.iter().map(|r| r.confirm_originations).sum();
        let _ = writeln!(out, "order floods: {orders}");
        let _ = writeln!(out, "confirm floods: {confirms}");
        if !self.decision_wall_clock.is_empty() {
            let mean =
                self.decision_wall_clock.iter().sum::<f64>() / self.decision_wall_clock.len() as f64;
            let _ = writeln!(out, "mean decision wall clock: {:.6} s", mean);
        }
        let _ = writeln!(out, "final central: {}", self.final_central);
        out
    }
}

fn join_edges(edges: &[Edge]) -> String {
    edges
        .iter()
        .map(|e| format!("{}-{}", e.a(), e.b()))
        .collect::<Vec<_>>()
        .join(";")
}
