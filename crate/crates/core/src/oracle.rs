//! Brute-force equilibrium oracle on a discretized strategy grid.
//!
//! The oracle enumerates leader commitments over a uniform time grid crossed
//! with every route, answers each commitment with an exhaustively scanned
//! follower reply, and keeps the leader's best outcome. It consults no
//! closed form beyond the tipping time, which only sizes the grid, so its
//! results are an independent cross-check of the analytic solvers; it is
//! also the only solver for shapes without a closed form.
//!
//! Discretization error is bounded: the utilities are Lipschitz in time on
//! the bounded grid, so equilibrium checks carry an explicit margin and the
//! reported leader time converges to the true one as the step shrinks. The
//! bounds assume the timing cost is resolvable at the step size; they
//! degrade as `beta_2` grows small relative to the step.

use rayon::prelude::*;
use thiserror::Error;

use crate::analytic::{classify_kind, tipping_time, CaseTag, Equilibrium, BOUNDARY_REL_TOL};
use crate::game::{evaluate_utility, ActionProfile, AgentRole, GameConfig, Route};

/// Errors raised by the grid oracle.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("grid step must be positive and finite")]
    NonPositiveStep,
    #[error("leader time {0} is not a grid point")]
    LeaderActionOffGrid(f64),
    #[error("profile references a route outside the configured set")]
    RouteOutsideConfig,
}

/// A uniform grid of departure times crossed with the configured routes.
#[derive(Debug, Clone)]
pub struct StrategyGrid {
    times: Vec<f64>,
    step: f64,
    route_count: usize,
}

impl StrategyGrid {
    /// Grid departure times, ascending; the last is exactly the optimum.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn routes(&self) -> impl Iterator<Item = Route> + '_ {
        (1..=self.route_count).map(Route)
    }

    /// Index of `t` among the grid times, tolerating float drift far below
    /// one step but rejecting anything between grid points.
    pub fn position(&self, t: f64) -> Option<usize> {
        let last = *self.times.last()?;
        let k = ((last - t) / self.step).round();
        if !k.is_finite() || k < 0.0 || k as usize >= self.times.len() {
            return None;
        }
        let idx = self.times.len() - 1 - k as usize;
        ((self.times[idx] - t).abs() <= self.step * 1e-6).then_some(idx)
    }
}

/// Builds the departure-time grid for a configuration.
///
/// Times run from ten steps below the tipping time up to the optimum in
/// uniform steps, so the grid always brackets both candidate equilibrium
/// regions. Memory scales with the tipping-time distance over the step.
pub fn build_grid(config: &GameConfig, step: f64) -> Result<StrategyGrid, OracleError> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(OracleError::NonPositiveStep);
    }
    let reach = config.optimal_time - tipping_time(config);
    let k_max = (reach / step + 10.0).ceil() as usize;
    let times = (0..=k_max)
        .rev()
        .map(|k| config.optimal_time - k as f64 * step)
        .collect();
    Ok(StrategyGrid {
        times,
        step,
        route_count: config.routes.len(),
    })
}

/// Follower utility on the hot scan path; bitwise-identical to
/// `evaluate_utility_for` (asserted in tests) but free of per-call
/// validation.
#[inline]
fn follower_utility(config: &GameConfig, t1: f64, x1: Route, t2: f64, x2: Route) -> f64 {
    let delta = config.routes.deltas[x2.0 - 1];
    let benefit = if t2 < t1 {
        config.territories.better
    } else {
        config.territories.worse
    };
    let off = t2 - config.optimal_time;
    let cost = off * off / config.follower.beta + config.follower.marginal_cost * delta;
    let alone = config.nominal_risk / delta;
    let risk = if t1 == t2 && x1 == x2 { alone / 2.0 } else { alone };
    benefit - cost - risk
}

/// Leader counterpart of [`follower_utility`].
#[inline]
fn leader_utility(config: &GameConfig, t1: f64, x1: Route, t2: f64, x2: Route) -> f64 {
    let delta = config.routes.deltas[x1.0 - 1];
    let benefit = if t1 <= t2 {
        config.territories.better
    } else {
        config.territories.worse
    };
    let off = t1 - config.optimal_time;
    let cost = off * off / config.leader.beta + config.leader.marginal_cost * delta;
    let alone = config.nominal_risk / delta;
    let risk = if t1 == t2 && x1 == x2 { alone / 2.0 } else { alone };
    benefit - cost - risk
}

/// Whether `candidate` beats `incumbent` by more than the boundary band.
///
/// At an exact case boundary the real-valued game ties two candidates
/// exactly and only reconstruction noise a few ulp wide separates their
/// float utilities, so the scans treat utilities inside the band used by
/// the case classification as tied and let the deterministic tie rules
/// decide — otherwise the winner would be picked by rounding noise.
#[inline]
fn effectively_above(candidate: f64, incumbent: f64) -> bool {
    let band = BOUNDARY_REL_TOL * candidate.abs().max(incumbent.abs()).max(1.0);
    candidate > incumbent + band
}

/// Exhaustive follower scan; ties resolve to the later time, then the lower
/// route, matching the analytic tie rules.
fn best_reply_scan(
    grid: &StrategyGrid,
    t1: f64,
    x1: Route,
    config: &GameConfig,
) -> (f64, Route, f64) {
    let mut best: Option<(f64, f64, Route)> = None;
    for &t in &grid.times {
        for x in grid.routes() {
            let u = follower_utility(config, t1, x1, t, x);
            let replace = match best {
                None => true,
                Some((bu, bt, bx)) => {
                    effectively_above(u, bu)
                        || (!effectively_above(bu, u) && (t > bt || (t == bt && x.0 < bx.0)))
                }
            };
            if replace {
                best = Some((u, t, x));
            }
        }
    }
    let (u, t, x) = best.expect("grids always contain at least eleven times");
    (t, x, u)
}

/// The follower's utility-maximizing grid reply to a leader commitment.
///
/// The commitment time must itself be a grid point.
pub fn oracle_best_response(
    grid: &StrategyGrid,
    t1: f64,
    x1: Route,
    config: &GameConfig,
) -> Result<(f64, Route), OracleError> {
    if config.routes.difficulty(x1).is_err() {
        return Err(OracleError::RouteOutsideConfig);
    }
    if grid.position(t1).is_none() {
        return Err(OracleError::LeaderActionOffGrid(t1));
    }
    let (t, x, _) = best_reply_scan(grid, t1, x1, config);
    Ok((t, x))
}

fn leader_outranks(challenger: &(f64, ActionProfile), incumbent: &(f64, ActionProfile)) -> bool {
    let (cu, cp) = challenger;
    let (iu, ip) = incumbent;
    effectively_above(*cu, *iu)
        || (!effectively_above(*iu, *cu)
            && (cp.t1 > ip.t1 || (cp.t1 == ip.t1 && cp.x1 < ip.x1)))
}

/// Backward induction by brute force over the grid.
///
/// Leader ties resolve to the later commitment, then the lower route, so a
/// cooperative configuration reports the optimum time exactly while a
/// competitive one reports a time within one step of the tipping time.
pub fn oracle_solve(config: &GameConfig, step: f64) -> Result<Equilibrium, OracleError> {
    let grid = build_grid(config, step)?;
    let mut leader_actions = Vec::with_capacity(grid.times.len() * grid.route_count);
    for &t in &grid.times {
        for x in grid.routes() {
            leader_actions.push((t, x));
        }
    }
    let outcomes: Vec<(f64, ActionProfile)> = leader_actions
        .par_iter()
        .map(|&(t1, x1)| {
            let (t2, x2, _) = best_reply_scan(&grid, t1, x1, config);
            let u1 = leader_utility(config, t1, x1, t2, x2);
            (u1, ActionProfile { t1, x1, t2, x2 })
        })
        .collect();
    // Banded ties are not associative, so reduce sequentially in grid order
    // to keep the winner independent of the parallel split.
    let best = outcomes
        .into_iter()
        .reduce(|a, b| if leader_outranks(&b, &a) { b } else { a })
        .expect("grids always contain at least eleven times");
    let (_, profile) = best;
    Ok(Equilibrium {
        profile,
        kind: classify_kind(&profile),
        case: CaseTag::Oracle,
        tipping_time: None,
    })
}

/// A profitable unilateral deviation found by [`verify_spe`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deviation {
    pub agent: AgentRole,
    pub time: f64,
    pub route: Route,
    pub gain: f64,
}

/// Outcome of checking a profile for subgame-perfect equilibrium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationReport {
    pub is_spe: bool,
    /// Gains at or below this discretization allowance are not deviations.
    pub margin: f64,
    pub best_deviation: Option<Deviation>,
}

/// Checks a profile against every grid deviation, up to a discretization
/// margin of `2*step*(|t_o - t_min| + step)/beta_2`.
///
/// The follower check holds the leader's commitment fixed and scans all
/// grid replies. The leader check scans all grid commitments and lets the
/// follower re-optimize against each, the subgame-perfect notion of a
/// leader deviation: a deterring commitment is not refuted by imagining the
/// follower frozen in place. The leader's own commitment is excluded; a
/// given reply that is not the follower's optimum is the follower's
/// deviation to report. The profile itself may sit off the grid.
pub fn verify_spe(
    profile: &ActionProfile,
    config: &GameConfig,
    step: f64,
) -> Result<DeviationReport, OracleError> {
    let (u1_base, u2_base) = match evaluate_utility(profile, config) {
        Ok(utilities) => utilities,
        Err(_) => return Err(OracleError::RouteOutsideConfig),
    };
    let grid = build_grid(config, step)?;
    let t_min = grid.times[0];
    let margin = 2.0 * step * ((config.optimal_time - t_min).abs() + step) / config.follower.beta;

    let mut best: Option<Deviation> = None;
    for &t in &grid.times {
        for x in grid.routes() {
            let gain = follower_utility(config, profile.t1, profile.x1, t, x) - u2_base;
            if best.map_or(true, |d| gain > d.gain) {
                best = Some(Deviation {
                    agent: AgentRole::Follower,
                    time: t,
                    route: x,
                    gain,
                });
            }
        }
    }

    let mut leader_actions = Vec::with_capacity(grid.times.len() * grid.route_count);
    for &t in &grid.times {
        for x in grid.routes() {
            if t == profile.t1 && x == profile.x1 {
                continue;
            }
            leader_actions.push((t, x));
        }
    }
    let leader_best = leader_actions
        .par_iter()
        .map(|&(t1, x1)| {
            let (t2, x2, _) = best_reply_scan(&grid, t1, x1, config);
            let gain = leader_utility(config, t1, x1, t2, x2) - u1_base;
            Deviation {
                agent: AgentRole::Leader,
                time: t1,
                route: x1,
                gain,
            }
        })
        .reduce_with(|a, b| {
            if b.gain > a.gain
                || (b.gain == a.gain && (b.time > a.time || (b.time == a.time && b.route.0 < a.route.0)))
            {
                b
            } else {
                a
            }
        });
    if let Some(deviation) = leader_best {
        if best.map_or(true, |d| deviation.gain > d.gain) {
            best = Some(deviation);
        }
    }

    let best_deviation = best.filter(|d| d.gain > margin);
    Ok(DeviationReport {
        is_spe: best_deviation.is_none(),
        margin,
        best_deviation,
    })
}
