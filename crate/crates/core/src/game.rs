//! Game definitions: parameters, actions, and the utility function.
//!
//! Two agents each commit to a departure time and a route. An agent's
//! utility is `benefit - travel cost - risk`: the earlier arrival claims
//! the better territory, departing away from the seasonal optimum costs
//! quadratically, and two agents flying the same route at the same time
//! split the predation risk between them.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised while validating or evaluating a game configuration.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GameError {
    #[error("at least one route is required")]
    EmptyRouteSet,
    #[error("route difficulties must be strictly increasing")]
    NonIncreasingDifficulties,
    #[error("the easiest route must have difficulty at least 1")]
    DifficultyBelowOne,
    #[error("agent 1 must be strictly stronger than agent 2 (beta_1 > beta_2)")]
    BetaOrderViolated,
    #[error("territory qualities must satisfy E_1 > E_2 > 0")]
    TerritoryOrderViolated,
    #[error("{0} must be strictly positive")]
    NonPositiveParameter(&'static str),
    #[error("{0} must be finite")]
    NonFiniteParameter(&'static str),
    #[error("route index {route} is out of range (valid: 1..={count})")]
    InvalidRouteIndex { route: usize, count: usize },
}

/// One-based route index, matching the configuration file convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Route(pub usize);

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Which of the two agents a computation refers to.
///
/// Agent 1 is the stronger bird and commits to its action first; agent 2
/// observes that commitment and best-responds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AgentRole {
    Leader,
    Follower,
}

impl fmt::Display for AgentRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentRole::Leader => write!(f, "leader"),
            AgentRole::Follower => write!(f, "follower"),
        }
    }
}

/// Physiological parameters of one agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentParams {
    /// Strength: higher `beta` makes off-optimum departures cheaper.
    pub beta: f64,
    /// Cost per unit of route difficulty.
    pub marginal_cost: f64,
}

/// Difficulty multipliers of the available routes, easiest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteSet {
    /// Strictly increasing difficulties with `deltas[0] >= 1`.
    pub deltas: Vec<f64>,
}

impl RouteSet {
    pub fn new(deltas: Vec<f64>) -> Result<Self, GameError> {
        let set = RouteSet { deltas };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<(), GameError> {
        let first = *self.deltas.first().ok_or(GameError::EmptyRouteSet)?;
        if !first.is_finite() {
            return Err(GameError::NonFiniteParameter("delta"));
        }
        if first < 1.0 {
            return Err(GameError::DifficultyBelowOne);
        }
        // NaN entries fail the comparison and are caught here as well.
        if !self.deltas.windows(2).all(|w| w[0] < w[1] && w[1].is_finite()) {
            return Err(GameError::NonIncreasingDifficulties);
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }

    /// Difficulty `delta(x)` for a one-based route index.
    pub fn difficulty(&self, route: Route) -> Result<f64, GameError> {
        if route.0 == 0 || route.0 > self.deltas.len() {
            return Err(GameError::InvalidRouteIndex {
                route: route.0,
                count: self.deltas.len(),
            });
        }
        Ok(self.deltas[route.0 - 1])
    }

    /// Ratio of the second-easiest to the easiest difficulty, when it exists.
    pub fn lambda(&self) -> Option<f64> {
        (self.deltas.len() >= 2).then(|| self.deltas[1] / self.deltas[0])
    }

    /// Iterator over the one-based route indices.
    pub fn routes(&self) -> impl Iterator<Item = Route> {
        (1..=self.deltas.len()).map(Route)
    }
}

/// Qualities of the two territories at the destination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Territories {
    /// Quality claimed by the earlier arrival (`E_1`).
    pub better: f64,
    /// Quality left for the later arrival (`E_2`).
    pub worse: f64,
}

/// A fully validated game instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameConfig {
    pub leader: AgentParams,
    pub follower: AgentParams,
    pub routes: RouteSet,
    pub territories: Territories,
    /// Nominal predation risk `r` on a difficulty-1 route flown alone.
    pub nominal_risk: f64,
    /// Seasonally optimal departure time `t_o`.
    pub optimal_time: f64,
}

impl GameConfig {
    pub fn agent(&self, role: AgentRole) -> &AgentParams {
        match role {
            AgentRole::Leader => &self.leader,
            AgentRole::Follower => &self.follower,
        }
    }

    /// Quality advantage `E_1 - E_2` of arriving first.
    pub fn territory_gap(&self) -> f64 {
        self.territories.better - self.territories.worse
    }

    /// Whether both agents pay the same cost per unit of difficulty.
    pub fn is_homogeneous(&self) -> bool {
        self.leader.marginal_cost == self.follower.marginal_cost
    }

    pub fn validate(&self) -> Result<(), GameError> {
        self.routes.validate()?;
        for (value, name) in [
            (self.leader.beta, "beta_1"),
            (self.follower.beta, "beta_2"),
            (self.leader.marginal_cost, "c_o^1"),
            (self.follower.marginal_cost, "c_o^2"),
            (self.nominal_risk, "r"),
        ] {
            if !value.is_finite() {
                return Err(GameError::NonFiniteParameter(name));
            }
            if value <= 0.0 {
                return Err(GameError::NonPositiveParameter(name));
            }
        }
        if !self.optimal_time.is_finite() {
            return Err(GameError::NonFiniteParameter("t_o"));
        }
        if self.leader.beta <= self.follower.beta {
            return Err(GameError::BetaOrderViolated);
        }
        if !self.territories.better.is_finite() || !self.territories.worse.is_finite() {
            return Err(GameError::NonFiniteParameter("E"));
        }
        if self.territories.worse <= 0.0 || self.territories.better <= self.territories.worse {
            return Err(GameError::TerritoryOrderViolated);
        }
        Ok(())
    }

    /// The raw, file-oriented form of this configuration.
    pub fn to_raw(&self) -> RawGameConfig {
        let costs = if self.is_homogeneous() {
            CostSpec::Shared(self.leader.marginal_cost)
        } else {
            CostSpec::PerAgent([self.leader.marginal_cost, self.follower.marginal_cost])
        };
        RawGameConfig {
            beta: [self.leader.beta, self.follower.beta],
            c_o: costs,
            delta: self.routes.deltas.clone(),
            territory_values: [self.territories.better, self.territories.worse],
            r: self.nominal_risk,
            t_o: self.optimal_time,
        }
    }
}

/// Per-distance cost, either shared by both agents or given per agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CostSpec {
    Shared(f64),
    PerAgent([f64; 2]),
}

/// A game configuration as written in a JSON config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawGameConfig {
    /// Strengths `[beta_1, beta_2]`.
    pub beta: [f64; 2],
    /// Per-distance travel cost, scalar (shared) or `[c_o^1, c_o^2]`.
    pub c_o: CostSpec,
    /// Route difficulties, easiest first.
    pub delta: Vec<f64>,
    /// Territory qualities `[E_1, E_2]`.
    #[serde(rename = "E")]
    pub territory_values: [f64; 2],
    /// Nominal predation risk.
    pub r: f64,
    /// Seasonally optimal departure time.
    pub t_o: f64,
}

/// Checks a raw configuration and produces the validated internal form.
pub fn validate_config(raw: &RawGameConfig) -> Result<GameConfig, GameError> {
    let (c1, c2) = match raw.c_o {
        CostSpec::Shared(c) => (c, c),
        CostSpec::PerAgent([c1, c2]) => (c1, c2),
    };
    let config = GameConfig {
        leader: AgentParams {
            beta: raw.beta[0],
            marginal_cost: c1,
        },
        follower: AgentParams {
            beta: raw.beta[1],
            marginal_cost: c2,
        },
        routes: RouteSet {
            deltas: raw.delta.clone(),
        },
        territories: Territories {
            better: raw.territory_values[0],
            worse: raw.territory_values[1],
        },
        nominal_risk: raw.r,
        optimal_time: raw.t_o,
    };
    config.validate()?;
    Ok(config)
}

/// The two agents' committed actions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionProfile {
    pub t1: f64,
    pub x1: Route,
    pub t2: f64,
    pub x2: Route,
}

impl ActionProfile {
    pub fn new(t1: f64, x1: usize, t2: f64, x2: usize) -> Self {
        ActionProfile {
            t1,
            x1: Route(x1),
            t2,
            x2: Route(x2),
        }
    }

    /// The (time, route) pair played by one agent.
    pub fn action(&self, role: AgentRole) -> (f64, Route) {
        match role {
            AgentRole::Leader => (self.t1, self.x1),
            AgentRole::Follower => (self.t2, self.x2),
        }
    }
}

/// Territory benefits `(e_1, e_2)` from the arrival order.
///
/// The earlier departure claims the better territory; an exact tie goes to
/// agent 1, who is the stronger of the two.
pub fn benefit(t1: f64, t2: f64, territories: &Territories) -> (f64, f64) {
    if t1 <= t2 {
        (territories.better, territories.worse)
    } else {
        (territories.worse, territories.better)
    }
}

/// Travel cost `(t - t_o)^2 / beta + c_o * delta(x)` for one agent.
pub fn travel_cost(
    agent: &AgentParams,
    t: f64,
    route: Route,
    config: &GameConfig,
) -> Result<f64, GameError> {
    let delta = config.routes.difficulty(route)?;
    let off_optimum = t - config.optimal_time;
    Ok(off_optimum * off_optimum / agent.beta + agent.marginal_cost * delta)
}

/// Predation risk for one agent under a profile.
///
/// The baseline `r / delta(x)` is halved exactly when the other agent flies
/// the same route at the same time. Joint departure requires exact equality
/// of both the times and the routes.
pub fn risk(profile: &ActionProfile, config: &GameConfig, agent: AgentRole) -> Result<f64, GameError> {
    let (t_self, x_self) = profile.action(agent);
    let (t_other, x_other) = match agent {
        AgentRole::Leader => (profile.t2, profile.x2),
        AgentRole::Follower => (profile.t1, profile.x1),
    };
    let delta = config.routes.difficulty(x_self)?;
    let alone = config.nominal_risk / delta;
    if t_self == t_other && x_self == x_other {
        Ok(alone / 2.0)
    } else {
        Ok(alone)
    }
}

/// Utility of a single agent under a profile.
pub fn evaluate_utility_for(
    profile: &ActionProfile,
    config: &GameConfig,
    agent: AgentRole,
) -> Result<f64, GameError> {
    let (e1, e2) = benefit(profile.t1, profile.t2, &config.territories);
    let e = match agent {
        AgentRole::Leader => e1,
        AgentRole::Follower => e2,
    };
    let (t, x) = profile.action(agent);
    let cost = travel_cost(config.agent(agent), t, x, config)?;
    let hazard = risk(profile, config, agent)?;
    Ok(e - cost - hazard)
}

/// Utilities `(u_1, u_2)` of both agents under a profile.
pub fn evaluate_utility(profile: &ActionProfile, config: &GameConfig) -> Result<(f64, f64), GameError> {
    Ok((
        evaluate_utility_for(profile, config, AgentRole::Leader)?,
        evaluate_utility_for(profile, config, AgentRole::Follower)?,
    ))
}
