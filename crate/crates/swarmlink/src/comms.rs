//! Broadcast communication with range-limited reach and distance-dependent
//! delay.
//!
//! Every agent periodically broadcasts its knowledge base: one timestamped
//! position record per known agent. A broadcast reaches exactly the agents
//! within channel radius, after a delay of `distance / propagation_speed +
//! message_length`. Receivers merge records by keeping the strictly newest
//! timestamp per node, never touching their own entry.

use rand::Rng;

use crate::graph::NodeId;
use crate::Point;

/// One agent's last known position with the time it was true.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PositionRecord {
    pub node: NodeId,
    pub position: Point,
    pub timestamp: f64,
}

/// Broadcast payload: at most one record per node, sorted by node id.
#[derive(Clone, Debug)]
pub struct Message {
    pub origin: NodeId,
    pub emit_time: f64,
    pub records: Vec<PositionRecord>,
}

impl Message {
    /// Record carried for `node`, if any.
    pub fn record(&self, node: NodeId) -> Option<&PositionRecord> {
        self.records
            .binary_search_by_key(&node, |r| r.node)
            .ok()
            .map(|i| &self.records[i])
    }
}

/// Stored knowledge about one peer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KbEntry {
    pub position: Point,
    pub timestamp: f64,
    pub receive_time: f64,
}

/// Per-agent store of the freshest known record per peer.
#[derive(Clone, Debug)]
pub struct KnowledgeBase {
    owner: NodeId,
    entries: Vec<Option<KbEntry>>,
}

impl KnowledgeBase {
    pub fn new(owner: NodeId, n: usize) -> Self {
        KnowledgeBase {
            owner,
            entries: vec![None; n],
        }
    }

    pub fn owner(&self) -> NodeId {
        self.owner
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, node: NodeId) -> Option<&KbEntry> {
        self.entries[node].as_ref()
    }

    /// Nodes with no record yet.
    pub fn missing(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.is_none())
            .map(|(i, _)| i)
    }

    /// Age of the stalest record at `now`, or `None` while any is missing.
    pub fn oldest_age(&self, now: f64) -> Option<f64> {
        let mut worst = 0.0f64;
        for e in &self.entries {
            match e {
                None => return None,
                Some(e) => worst = worst.max(now - e.timestamp),
            }
        }
        Some(worst)
    }

    /// Installs a record directly, bypassing merge rules. For initial
    /// conditions (a known shared starting formation), not for traffic.
    pub fn seed_entry(&mut self, node: NodeId, position: Point, timestamp: f64) {
        self.entries[node] = Some(KbEntry {
            position,
            timestamp,
            receive_time: timestamp,
        });
    }

    /// Refreshes the owner's own entry with ground truth.
    pub fn update_self(&mut self, position: Point, now: f64) {
        self.entries[self.owner] = Some(KbEntry {
            position,
            timestamp: now,
            receive_time: now,
        });
    }

    /// Merges a received message: a record wins only with a strictly newer
    /// timestamp (ties keep the incumbent), and the owner's own entry is
    /// never overwritten.
    pub fn merge(&mut self, msg: &Message, receive_time: f64) {
        debug_assert!(receive_time >= msg.emit_time, "delivery before emission");
        for rec in &msg.records {
            if rec.node == self.owner {
                continue;
            }
            debug_assert!(rec.timestamp <= msg.emit_time + 1e-9);
            let slot = &mut self.entries[rec.node];
            let newer = match slot {
                None => true,
                Some(e) => rec.timestamp > e.timestamp,
            };
            if newer {
                *slot = Some(KbEntry {
                    position: rec.position,
                    timestamp: rec.timestamp,
                    receive_time,
                });
            }
        }
    }

    /// Snapshot of all known records, sorted by node id.
    pub fn to_records(&self) -> Vec<PositionRecord> {
        self.entries
            .iter()
            .enumerate()
            .filter_map(|(node, e)| {
                e.map(|e| PositionRecord {
                    node,
                    position: e.position,
                    timestamp: e.timestamp,
                })
            })
            .collect()
    }
}

/// Broadcast channel parameters.
#[derive(Clone, Copy, Debug)]
pub struct ChannelModel {
    /// Signal propagation speed (distance units per second).
    pub propagation_speed: f64,
    /// Fixed transmission duration added to every hop.
    pub message_length: f64,
    /// Reception radius.
    pub radius: f64,
}

impl ChannelModel {
    /// One-hop delay for a receiver at `distance`.
    pub fn delay(&self, distance: f64) -> f64 {
        distance / self.propagation_speed + self.message_length
    }

    /// Worst-case one-hop delay (receiver at the radius).
    pub fn max_hop_delay(&self) -> f64 {
        self.delay(self.radius)
    }
}

/// A message en route to one receiver.
#[derive(Clone, Debug)]
pub struct Delivery {
    pub receiver: NodeId,
    pub message: Message,
    pub delivery_time: f64,
}

/// Emits `sender`'s knowledge base to every agent in range.
///
/// The sender's own record is refreshed to its true current position before
/// the copy, so receivers always see the freshest possible origin entry.
/// Returns one delivery per receiver, receivers in ascending id order.
pub fn broadcast(
    sender: NodeId,
    kb: &KnowledgeBase,
    positions: &[Point],
    channel: &ChannelModel,
    now: f64,
) -> Vec<Delivery> {
    let mut records = kb.to_records();
    match records.binary_search_by_key(&sender, |r| r.node) {
        Ok(i) => {
            records[i].position = positions[sender];
            records[i].timestamp = now;
        }
        Err(i) => records.insert(
            i,
            PositionRecord {
                node: sender,
                position: positions[sender],
                timestamp: now,
            },
        ),
    }
    let message = Message {
        origin: sender,
        emit_time: now,
        records,
    };
    let mut out = Vec::new();
    for (receiver, pos) in positions.iter().enumerate() {
        if receiver == sender {
            continue;
        }
        let distance = (pos - positions[sender]).norm();
        if distance <= channel.radius {
            out.push(Delivery {
                receiver,
                message: message.clone(),
                delivery_time: now + channel.delay(distance),
            });
        }
    }
    out
}

/// Keeps the `k` records nearest to `sender_position` plus the sender's own
/// record. Distance ties at the cutoff keep the lower node id. `k = 0`
/// disables truncation.
pub fn truncate(msg: &Message, k: usize, sender_position: &Point) -> Message {
    if k == 0 || msg.records.len() <= k {
        return msg.clone();
    }
    let mut ranked: Vec<(f64, NodeId, PositionRecord)> = msg
        .records
        .iter()
        .filter(|r| r.node != msg.origin)
        .map(|r| ((r.position - sender_position).norm(), r.node, *r))
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    ranked.truncate(k);
    let mut records: Vec<PositionRecord> = ranked.into_iter().map(|(_, _, r)| r).collect();
    if let Some(own) = msg.record(msg.origin) {
        records.push(*own);
    }
    records.sort_by_key(|r| r.node);
    Message {
        origin: msg.origin,
        emit_time: msg.emit_time,
        records,
    }
}

/// Applies the configured drop probability to a delivery. Deterministic for
/// a given rng stream; `probability = 0` never drops.
pub fn dropped(probability: f64, rng: &mut impl Rng) -> bool {
    probability > 0.0 && rng.random_bool(probability.min(1.0))
}

/// One line of the message log: who sent what to whom and when it landed.
#[derive(Clone, Copy, Debug)]
pub struct MessageLogEntry {
    pub origin: NodeId,
    pub emit_time: f64,
    pub receiver: NodeId,
    pub delivery_time: f64,
    pub records: usize,
}

/// Newline-delimited export of a message log.
pub fn format_message_log(entries: &[MessageLogEntry]) -> String {
    use std::fmt::Write as _;
    let mut out = String::from("origin,emit_time,receiver,delivery_time,records\n");
    for e in entries {
        let _ = writeln!(
            out,
            "{},{:.6},{},{:.6},{}",
            e.origin, e.emit_time, e.receiver, e.delivery_time, e.records
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y, 0.0)
    }

    fn channel() -> ChannelModel {
        // Radius 10 and these rates give a worst-case one-hop delay of 0.5 s.
        ChannelModel {
            propagation_speed: 25.0,
            message_length: 0.1,
            radius: 10.0,
        }
    }

    #[test]
    fn delay_at_radius_is_half_second() {
        let ch = channel();
        assert!((ch.max_hop_delay() - 0.5).abs() < 1e-12);
        assert!((ch.delay(0.0) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn broadcast_reaches_only_in_range_receivers() {
        let ch = channel();
        let positions = [p(0.0, 0.0), p(6.0, 0.0), p(10.0, 0.0), p(10.1, 0.0)];
        let mut kb = KnowledgeBase::new(0, 4);
        kb.update_self(positions[0], 1.0);
        let deliveries = broadcast(0, &kb, &positions, &ch, 1.0);
        let receivers: Vec<NodeId> = deliveries.iter().map(|d| d.receiver).collect();
        assert_eq!(receivers, vec![1, 2], "10.1 is out of range");
        assert!((deliveries[0].delivery_time - (1.0 + 6.0 / 25.0 + 0.1)).abs() < 1e-12);
        assert!((deliveries[1].delivery_time - 1.5).abs() < 1e-12);
    }

    #[test]
    fn broadcast_refreshes_own_record() {
        let ch = channel();
        let positions = [p(0.0, 0.0), p(5.0, 0.0)];
        let mut kb = KnowledgeBase::new(0, 2);
        kb.update_self(p(-3.0, 0.0), 0.0); // stale self entry
        let deliveries = broadcast(0, &kb, &positions, &ch, 2.0);
        let rec = deliveries[0].message.record(0).unwrap();
        assert_eq!(rec.position, positions[0]);
        assert_eq!(rec.timestamp, 2.0);
    }

    #[test]
    fn merge_prefers_strictly_newer_and_protects_own_entry() {
        let mut kb = KnowledgeBase::new(1, 3);
        kb.update_self(p(9.0, 9.0), 5.0);
        let msg = Message {
            origin: 0,
            emit_time: 5.0,
            records: vec![
                PositionRecord {
                    node: 0,
                    position: p(1.0, 0.0),
                    timestamp: 5.0,
                },
                PositionRecord {
                    node: 1,
                    position: p(0.0, 0.0),
                    timestamp: 4.9,
                },
                PositionRecord {
                    node: 2,
                    position: p(2.0, 2.0),
                    timestamp: 3.0,
                },
            ],
        };
        kb.merge(&msg, 5.4);
        assert_eq!(kb.entry(0).unwrap().position, p(1.0, 0.0));
        assert_eq!(kb.entry(2).unwrap().timestamp, 3.0);
        // Own entry untouched even though the message carried node 1.
        assert_eq!(kb.entry(1).unwrap().position, p(9.0, 9.0));

        // A stale copy of node 2 does not regress the stored entry.
        let older = Message {
            origin: 0,
            emit_time: 6.0,
            records: vec![PositionRecord {
                node: 2,
                position: p(-1.0, -1.0),
                timestamp: 2.0,
            }],
        };
        kb.merge(&older, 6.2);
        assert_eq!(kb.entry(2).unwrap().position, p(2.0, 2.0));
    }

    #[test]
    fn merge_equal_timestamps_keep_incumbent_any_order() {
        let rec = |node, x: f64, t| PositionRecord {
            node,
            position: p(x, 0.0),
            timestamp: t,
        };
        let m1 = Message {
            origin: 0,
            emit_time: 1.0,
            records: vec![rec(2, 10.0, 1.0)],
        };
        let m2 = Message {
            origin: 1,
            emit_time: 1.0,
            records: vec![rec(2, 20.0, 1.0)],
        };
        let mut a = KnowledgeBase::new(3, 4);
        a.merge(&m1, 1.2);
        a.merge(&m2, 1.3);
        let mut b = KnowledgeBase::new(3, 4);
        b.merge(&m2, 1.2);
        b.merge(&m1, 1.3);
        // Same timestamp: first arrival wins in both replays.
        assert_eq!(a.entry(2).unwrap().position, p(10.0, 0.0));
        assert_eq!(b.entry(2).unwrap().position, p(20.0, 0.0));
    }

    #[test]
    fn timestamps_never_regress_under_random_merges() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let mut kb = KnowledgeBase::new(0, 5);
        kb.update_self(p(0.0, 0.0), 0.0);
        let mut floor = vec![0.0f64; 5];
        for k in 0..500 {
            let t = k as f64 * 0.01;
            let node = rng.random_range(1..5usize);
            let msg = Message {
                origin: node,
                emit_time: t,
                records: vec![PositionRecord {
                    node,
                    position: p(rng.random_range(-5.0..5.0), 0.0),
                    timestamp: rng.random_range(0.0..=t),
                }],
            };
            kb.merge(&msg, t);
            if let Some(e) = kb.entry(node) {
                assert!(e.timestamp >= floor[node], "timestamp regressed");
                floor[node] = e.timestamp;
            }
        }
    }

    #[test]
    fn truncate_keeps_k_nearest_plus_own() {
        let sender_pos = p(0.0, 0.0);
        let rec = |node, x: f64| PositionRecord {
            node,
            position: p(x, 0.0),
            timestamp: 1.0,
        };
        let msg = Message {
            origin: 9,
            emit_time: 1.0,
            records: vec![
                rec(1, 5.0),
                rec(2, 1.0),
                rec(3, 3.0),
                rec(4, 5.0),
                rec(9, 0.0),
            ],
        };
        let cut = truncate(&msg, 2, &sender_pos);
        let kept: Vec<NodeId> = cut.records.iter().map(|r| r.node).collect();
        // Nearest two are 2 (d=1) and 3 (d=3); own record rides along.
        assert_eq!(kept, vec![2, 3, 9]);

        // Tie at the cutoff: nodes 1 and 4 both at distance 5; lower id kept.
        let cut3 = truncate(&msg, 3, &sender_pos);
        let kept3: Vec<NodeId> = cut3.records.iter().map(|r| r.node).collect();
        assert_eq!(kept3, vec![1, 2, 3, 9]);

        // k >= record count: unchanged.
        let all = truncate(&msg, 10, &sender_pos);
        assert_eq!(all.records.len(), msg.records.len());
    }

    #[test]
    fn kb_ages_bounded_on_line_and_star() {
        // Static topologies; per-round broadcasts. After a warm-up of
        // `diameter` rounds, every record's age is at most
        // diameter * (hop delay + period).
        for shape in ["line", "star"] {
            let ch = channel();
            let n = 6;
            let positions: Vec<Point> = match shape {
                "line" => (0..n).map(|i| p(9.0 * i as f64, 0.0)).collect(),
                _ => {
                    // Hub at center; leaves spread so leaf-leaf distance > R.
                    let mut v = vec![p(0.0, 0.0)];
                    for i in 0..n - 1 {
                        let a = i as f64 * std::f64::consts::TAU / (n - 1) as f64;
                        v.push(p(9.0 * a.cos(), 9.0 * a.sin()));
                    }
                    v
                }
            };
            let diameter = if shape == "line" { (n - 1) as f64 } else { 2.0 };
            let period = 0.5;
            let mut kbs: Vec<KnowledgeBase> =
                (0..n).map(|i| KnowledgeBase::new(i, n)).collect();
            let mut queue: Vec<Delivery> = Vec::new();
            let rounds = 3 * n;
            for round in 0..rounds {
                let now = round as f64 * period;
                for (i, kb) in kbs.iter_mut().enumerate() {
                    kb.update_self(positions[i], now);
                }
                // Deliver everything due by now (delays < period here).
                queue.sort_by(|a, b| a.delivery_time.total_cmp(&b.delivery_time));
                let due: Vec<Delivery> = queue
                    .iter()
                    .filter(|d| d.delivery_time <= now)
                    .cloned()
                    .collect();
                queue.retain(|d| d.delivery_time > now);
                for d in due {
                    kbs[d.receiver].merge(&d.message, d.delivery_time);
                }
                for i in 0..n {
                    queue.extend(broadcast(i, &kbs[i], &positions, &ch, now));
                }
                let warmed = round as f64 >= diameter + 1.0;
                if warmed {
                    let bound = diameter * (ch.max_hop_delay() + period);
                    for kb in &kbs {
                        let age = kb
                            .oldest_age(now)
                            .unwrap_or_else(|| panic!("{shape}: entries missing after warmup"));
                        assert!(age <= bound + 1e-9, "{shape}: age {age} > bound {bound}");
                    }
                }
            }
        }
    }

    #[test]
    fn drop_probability_edge_values() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        assert!((0..100).all(|_| !dropped(0.0, &mut rng)));
        assert!((0..100).all(|_| dropped(1.0, &mut rng)));
    }

    #[test]
    fn message_log_format() {
        let entries = [MessageLogEntry {
            origin: 2,
            emit_time: 1.25,
            receiver: 0,
            delivery_time: 1.75,
            records: 4,
        }];
        let text = format_message_log(&entries);
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "origin,emit_time,receiver,delivery_time,records"
        );
        assert_eq!(lines.next().unwrap(), "2,1.250000,0,1.750000,4");
    }
}
