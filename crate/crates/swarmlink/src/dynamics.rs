//! Agent motion: reference tracking under bounded disturbance.
//!
//! Agents are kinematic points driven by `x' = F(t, x) + d(t)` where the
//! base policy `F(t, x) = r'(t) + lambda * (r(t) - x)` tracks a reference
//! trajectory `r` and the disturbance is bounded, `|d| <= d_max`. The policy
//! is contracting at rate `lambda`: for any two states `a`, `b`,
//! `(a - b) . (F(t,a) - F(t,b)) = -lambda * |a - b|^2`, which is what makes
//! the propagation error bound in [`error_bound`] valid for predictions made
//! from stale reports.

use rand::Rng;

use crate::{Error, Point, Result};

/// Position (and clock) of one agent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AgentState {
    pub position: Point,
    pub time: f64,
}

/// Reference trajectory shapes available to scenarios.
#[derive(Clone, Debug)]
pub enum ReferenceTrajectory {
    /// Constant-velocity line from `start`.
    Line { start: Point, velocity: Point },
    /// Piecewise-linear tour of `points` at constant `speed`, holding the
    /// final point once reached.
    Waypoints {
        points: Vec<Point>,
        speed: f64,
        /// Arrival time at each point, precomputed.
        arrivals: Vec<f64>,
    },
    /// Circular orbit, constant angular rate.
    Orbit {
        center: Point,
        radius: f64,
        angular_rate: f64,
        phase: f64,
    },
    /// Station slot on a breathing, slowly rotating closed loop. The loop
    /// radius oscillates around `radius0` while the slot's bearing sways
    /// sinusoidally around its station angle `theta0`.
    LoopSlot {
        center: Point,
        radius0: f64,
        /// Radial oscillation amplitude as a fraction of `radius0`.
        breath_amp: f64,
        breath_omega: f64,
        breath_phase: f64,
        theta0: f64,
        angular_rate: f64,
        /// Bearing sway amplitude in radians.
        sway_amp: f64,
        sway_omega: f64,
        sway_phase: f64,
    },
}

impl ReferenceTrajectory {
    pub fn line(start: Point, velocity: Point) -> Self {
        ReferenceTrajectory::Line { start, velocity }
    }

    /// Builds a waypoint tour. Needs at least one point and positive speed;
    /// zero-length segments are tolerated.
    pub fn waypoints(points: Vec<Point>, speed: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Config("waypoint list is empty".into()));
        }
        if !(speed > 0.0) {
            return Err(Error::Config(format!("waypoint speed must be > 0, got {speed}")));
        }
        let mut arrivals = Vec::with_capacity(points.len());
        let mut t = 0.0;
        arrivals.push(0.0);
        for w in points.windows(2) {
            t += (w[1] - w[0]).norm() / speed;
            arrivals.push(t);
        }
        Ok(ReferenceTrajectory::Waypoints {
            points,
            speed,
            arrivals,
        })
    }

    pub fn orbit(center: Point, radius: f64, angular_rate: f64, phase: f64) -> Self {
        ReferenceTrajectory::Orbit {
            center,
            radius,
            angular_rate,
            phase,
        }
    }

    /// Builds a loop-slot trajectory. `radius0` must be positive and the
    /// breathing fraction must stay below 1 so the radius never collapses.
    #[allow(clippy::too_many_arguments)]
    pub fn loop_slot(
        center: Point,
        radius0: f64,
        breath: (f64, f64, f64),
        theta0: f64,
        angular_rate: f64,
        sway: (f64, f64, f64),
    ) -> Result<Self> {
        if !(radius0 > 0.0) {
            return Err(Error::Config(format!(
                "loop radius must be > 0, got {radius0}"
            )));
        }
        if !(breath.0.abs() < 1.0) {
            return Err(Error::Config(format!(
                "breathing fraction must satisfy |a| < 1, got {}",
                breath.0
            )));
        }
        Ok(ReferenceTrajectory::LoopSlot {
            center,
            radius0,
            breath_amp: breath.0,
            breath_omega: breath.1,
            breath_phase: breath.2,
            theta0,
            angular_rate,
            sway_amp: sway.0,
            sway_omega: sway.1,
            sway_phase: sway.2,
        })
    }

    /// Reference position at time `t`.
    pub fn position(&self, t: f64) -> Point {
        match self {
            ReferenceTrajectory::Line { start, velocity } => start + velocity * t,
            ReferenceTrajectory::Waypoints {
                points, arrivals, ..
            } => {
                let last = *arrivals.last().unwrap();
                if t >= last {
                    return *points.last().unwrap();
                }
                let seg = match arrivals.binary_search_by(|a| a.total_cmp(&t)) {
                    Ok(i) => i,
                    Err(i) => i - 1,
                };
                let span = arrivals[seg + 1] - arrivals[seg];
                if span <= 0.0 {
                    return points[seg + 1];
                }
                let frac = (t - arrivals[seg]) / span;
                points[seg] + (points[seg + 1] - points[seg]) * frac
            }
            ReferenceTrajectory::Orbit {
                center,
                radius,
                angular_rate,
                phase,
            } => {
                let a = angular_rate * t + phase;
                center + Point::new(radius * a.cos(), radius * a.sin(), 0.0)
            }
            ReferenceTrajectory::LoopSlot {
                center,
                radius0,
                breath_amp,
                breath_omega,
                breath_phase,
                theta0,
                angular_rate,
                sway_amp,
                sway_omega,
                sway_phase,
            } => {
                let r = radius0 * (1.0 + breath_amp * (breath_omega * t + breath_phase).sin());
                let a = theta0 + angular_rate * t + sway_amp * (sway_omega * t + sway_phase).sin();
                center + Point::new(r * a.cos(), r * a.sin(), 0.0)
            }
        }
    }

    /// Reference velocity at time `t`.
    pub fn velocity(&self, t: f64) -> Point {
        match self {
            ReferenceTrajectory::Line { velocity, .. } => *velocity,
            ReferenceTrajectory::Waypoints {
                points,
                speed,
                arrivals,
            } => {
                let last = *arrivals.last().unwrap();
                if t >= last {
                    return Point::zeros();
                }
                let seg = match arrivals.binary_search_by(|a| a.total_cmp(&t)) {
                    Ok(i) => i,
                    Err(i) => i - 1,
                };
                let dir = points[seg + 1] - points[seg];
                let len = dir.norm();
                if len == 0.0 {
                    Point::zeros()
                } else {
                    dir * (*speed / len)
                }
            }
            ReferenceTrajectory::Orbit {
                radius,
                angular_rate,
                phase,
                ..
            } => {
                let a = angular_rate * t + phase;
                Point::new(
                    -radius * angular_rate * a.sin(),
                    radius * angular_rate * a.cos(),
                    0.0,
                )
            }
            ReferenceTrajectory::LoopSlot {
                radius0,
                breath_amp,
                breath_omega,
                breath_phase,
                theta0,
                angular_rate,
                sway_amp,
                sway_omega,
                sway_phase,
                ..
            } => {
                let r = radius0 * (1.0 + breath_amp * (breath_omega * t + breath_phase).sin());
                let dr = radius0 * breath_amp * breath_omega * (breath_omega * t + breath_phase).cos();
                let a = theta0 + angular_rate * t + sway_amp * (sway_omega * t + sway_phase).sin();
                let da = angular_rate + sway_amp * sway_omega * (sway_omega * t + sway_phase).cos();
                Point::new(
                    dr * a.cos() - r * a.sin() * da,
                    dr * a.sin() + r * a.cos() * da,
                    0.0,
                )
            }
        }
    }
}

/// Reference-tracking policy with contraction rate `lambda`.
#[derive(Clone, Debug)]
pub struct TrackingPolicy {
    pub lambda: f64,
    pub reference: ReferenceTrajectory,
}

impl TrackingPolicy {
    /// Requires `lambda > 1/2` so the propagation bound applies.
    pub fn new(lambda: f64, reference: ReferenceTrajectory) -> Result<Self> {
        if !(lambda > 0.5) {
            return Err(Error::ContractionRate(lambda));
        }
        Ok(TrackingPolicy { lambda, reference })
    }

    /// Disturbance-free closed-loop field `F(t, x)`.
    pub fn field(&self, t: f64, x: &Point) -> Point {
        self.reference.velocity(t) + (self.reference.position(t) - x) * self.lambda
    }
}

/// Disturbance waveform.
#[derive(Clone, Debug)]
pub enum DisturbanceKind {
    /// Fixed direction at full magnitude.
    ConstantDirection { direction: Point },
    /// Fixed axis scaled by a sinusoid.
    Sinusoidal {
        axis: Point,
        frequency: f64,
        phase: f64,
    },
    /// Persistent direction nudged by seeded noise each sample; the walk
    /// state lives in the model.
    RandomWalk { state: Point, agility: f64 },
}

/// Bounded disturbance source: every sample satisfies `|d| <= d_max`.
#[derive(Clone, Debug)]
pub struct DisturbanceModel {
    pub d_max: f64,
    pub kind: DisturbanceKind,
}

impl DisturbanceModel {
    pub fn constant(d_max: f64, direction: Point) -> Self {
        let n = direction.norm();
        let dir = if n > 0.0 { direction / n } else { Point::zeros() };
        DisturbanceModel {
            d_max,
            kind: DisturbanceKind::ConstantDirection { direction: dir },
        }
    }

    pub fn sinusoidal(d_max: f64, axis: Point, frequency: f64, phase: f64) -> Self {
        let n = axis.norm();
        let axis = if n > 0.0 { axis / n } else { Point::zeros() };
        DisturbanceModel {
            d_max,
            kind: DisturbanceKind::Sinusoidal {
                axis,
                frequency,
                phase,
            },
        }
    }

    /// `agility` scales the per-sample kick relative to `d_max`; higher
    /// values decorrelate the walk faster.
    pub fn random_walk(d_max: f64, agility: f64) -> Self {
        DisturbanceModel {
            d_max,
            kind: DisturbanceKind::RandomWalk {
                state: Point::zeros(),
                agility,
            },
        }
    }

    /// Draws the disturbance value held for the step starting at `t`.
    /// `dim` is 2 or 3; planar scenarios never produce a z component.
    pub fn sample(&mut self, t: f64, dim: usize, rng: &mut impl Rng) -> Point {
        let d = match &mut self.kind {
            DisturbanceKind::ConstantDirection { direction } => *direction * self.d_max,
            DisturbanceKind::Sinusoidal {
                axis,
                frequency,
                phase,
            } => *axis * (self.d_max * (*frequency * t + *phase).sin()),
            DisturbanceKind::RandomWalk { state, agility } => {
                let mut kick = Point::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    if dim == 3 { rng.random_range(-1.0..1.0) } else { 0.0 },
                );
                kick *= *agility * self.d_max;
                *state += kick;
                let n = state.norm();
                if n > self.d_max {
                    *state *= self.d_max / n;
                }
                *state
            }
        };
        debug_assert!(d.norm() <= self.d_max * (1.0 + 1e-12));
        d
    }
}

/// One fixed-step Runge-Kutta (4th order) integration step of the closed
/// loop with the disturbance sampled once at the step start and held.
///
/// Errors when the state stops being finite.
pub fn step(
    state: &AgentState,
    policy: &TrackingPolicy,
    disturbance: &mut DisturbanceModel,
    dt: f64,
    dim: usize,
    rng: &mut impl Rng,
) -> Result<AgentState> {
    let d = disturbance.sample(state.time, dim, rng);
    let next = rk4(state.position, state.time, dt, |t, x| policy.field(t, x) + d);
    if !next.iter().all(|c| c.is_finite()) {
        return Err(Error::NonFiniteState);
    }
    Ok(AgentState {
        position: next,
        time: state.time + dt,
    })
}

/// Integrates the disturbance-free closed loop from a known state to
/// `t_query`, with internal steps no longer than `max_dt`. Deterministic for
/// identical inputs. Errors if `t_query` precedes `t_known`.
pub fn predict_nominal(
    x_known: Point,
    t_known: f64,
    t_query: f64,
    policy: &TrackingPolicy,
    max_dt: f64,
) -> Result<Point> {
    if t_query < t_known {
        return Err(Error::TimeReversed {
            known: t_known,
            query: t_query,
        });
    }
    let span = t_query - t_known;
    if span == 0.0 {
        return Ok(x_known);
    }
    let steps = (span / max_dt).ceil().max(1.0) as usize;
    let h = span / steps as f64;
    let mut x = x_known;
    let mut t = t_known;
    for _ in 0..steps {
        x = rk4(x, t, h, |t, x| policy.field(t, x));
        t += h;
    }
    if !x.iter().all(|c| c.is_finite()) {
        return Err(Error::NonFiniteState);
    }
    Ok(x)
}

/// Worst-case distance between the disturbance-free prediction and the true
/// state after propagating a known state for `delta_t` seconds under a
/// disturbance bounded by `d_max`, given contraction rate `lambda > 1/2`.
///
/// `sqrt(2 (1 - exp(-(lambda - 1/2) dt)) / (2 lambda - 1)) * d_max`,
/// monotone in `delta_t` with limit `sqrt(2 / (2 lambda - 1)) * d_max`.
pub fn error_bound(delta_t: f64, lambda: f64, d_max: f64) -> Result<f64> {
    if !(lambda > 0.5) {
        return Err(Error::ContractionRate(lambda));
    }
    if !(delta_t >= 0.0) {
        return Err(Error::TimeReversed {
            known: 0.0,
            query: delta_t,
        });
    }
    let rate = lambda - 0.5;
    Ok((2.0 * (1.0 - (-rate * delta_t).exp()) / (2.0 * lambda - 1.0)).sqrt() * d_max)
}

fn rk4(x: Point, t: f64, h: f64, f: impl Fn(f64, &Point) -> Point) -> Point {
    let k1 = f(t, &x);
    let k2 = f(t + 0.5 * h, &(x + k1 * (0.5 * h)));
    let k3 = f(t + 0.5 * h, &(x + k2 * (0.5 * h)));
    let k4 = f(t + h, &(x + k3 * h));
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}
