//! Closed-form equilibrium analysis.
//!
//! The leader (agent 1) commits to a departure time and route; the follower
//! (agent 2) observes the commitment and best-responds. With two routes and
//! a shared marginal cost the subgame-perfect equilibria fall into five
//! cases, ordered by how the easy route's cost-risk product `c_o * delta_1^2`
//! compares against `r/(2*lambda)` and `r/lambda` (`lambda = delta_2/delta_1`).
//! Each case pairs an equilibrium route with a cooperation threshold on the
//! territory gap `E_1 - E_2`: at or below the threshold both agents depart
//! together at the optimum; above it the leader departs at the tipping time,
//! the latest commitment that still deters preemption.
//!
//! Beyond the two-route table, this module covers the n-route argmin
//! reduction, the single-route reduction, and the heterogeneous-cost
//! extension in which the agents may split across routes ("neutral" states).

use serde::Serialize;
use thiserror::Error;

use crate::game::{
    evaluate_utility_for, ActionProfile, AgentRole, GameConfig, GameError, Route,
};

/// Relative tolerance for detecting the measure-zero boundary cases.
///
/// Exact float equality would make the boundaries unreachable from JSON
/// input; anything within this band of a case threshold is classified as
/// the boundary case.
pub const BOUNDARY_REL_TOL: f64 = 1e-12;

/// Errors raised by the closed-form solvers.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("this solver requires exactly two routes")]
    NotTwoRoutes,
    #[error("this solver requires exactly one route")]
    NotOneRoute,
    #[error("this solver requires a shared marginal cost")]
    HeterogeneousCosts,
    #[error("heterogeneous costs require c_o^1 < c_o^2 (the stronger agent travels cheaper)")]
    CostOrderViolated,
    #[error("no closed form covers heterogeneous costs with more than two routes")]
    NoClosedForm,
}

/// How the two agents relate in an equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum InteractionKind {
    /// Same route, joint departure at the optimum.
    Cooperation,
    /// Same route, leader departs early to deter preemption.
    Competition,
    /// Joint departure time but different routes (heterogeneous costs).
    NeutralCooperation,
    /// Early leader departure and different routes (heterogeneous costs).
    NeutralCompetition,
}

impl InteractionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            InteractionKind::Cooperation => "Cooperation",
            InteractionKind::Competition => "Competition",
            InteractionKind::NeutralCooperation => "NeutralCooperation",
            InteractionKind::NeutralCompetition => "NeutralCompetition",
        }
    }
}

impl std::fmt::Display for InteractionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which analysis produced an equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CaseTag {
    Case1,
    Case2,
    Case3,
    Case4,
    Case5,
    NRoute,
    OneRoute,
    Heterogeneous,
    /// Grid-oracle approximation; no closed form was consulted.
    Oracle,
}

impl CaseTag {
    pub fn as_str(self) -> &'static str {
        match self {
            CaseTag::Case1 => "Case1",
            CaseTag::Case2 => "Case2",
            CaseTag::Case3 => "Case3",
            CaseTag::Case4 => "Case4",
            CaseTag::Case5 => "Case5",
            CaseTag::NRoute => "NRoute",
            CaseTag::OneRoute => "OneRoute",
            CaseTag::Heterogeneous => "Heterogeneous",
            CaseTag::Oracle => "Oracle",
        }
    }
}

impl std::fmt::Display for CaseTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A pure-strategy subgame-perfect equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Equilibrium {
    pub profile: ActionProfile,
    pub kind: InteractionKind,
    pub case: CaseTag,
    /// The deterring departure time `T`; `None` for cooperative outcomes.
    pub tipping_time: Option<f64>,
}

/// Where a two-route configuration falls in the five-case analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseClassification {
    /// Case number 1..=5.
    pub case_id: u8,
    /// The compared quantity `c_o * delta_1^2`.
    pub cost_risk_value: f64,
    /// Lower comparison threshold `r / (2*lambda)`.
    pub lower_threshold: f64,
    /// Upper comparison threshold `r / lambda`.
    pub upper_threshold: f64,
    /// Territory gap `E_1 - E_2`.
    pub territory_gap: f64,
    /// Case-specific cooperation bound on the territory gap.
    pub gap_threshold: f64,
}

/// Whether risk on a route is carried alone or shared by a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TravelMode {
    Solo,
    Flock,
}

/// The follower's best reply to a committed leader action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum BestResponse {
    /// Depart at `t` on route `x`.
    Concrete { t: f64, x: Route },
    /// Depart an instant before `t_ref` on route `x`. The continuous game
    /// has no attained optimum here; the utility is the limit for a
    /// vanishing head start (time cost at `t_ref`, solo risk, better
    /// territory).
    PreemptLeftLimit { t_ref: f64, x: Route },
}

/// The commitment time `T = t_o - sqrt((E_1 - E_2) * beta_2)` at which the
/// follower is exactly indifferent between preempting and waiting.
pub fn tipping_time(config: &GameConfig) -> f64 {
    config.optimal_time - (config.territory_gap() * config.follower.beta).sqrt()
}

/// Combined route cost plus risk for one agent, `c_o^i * delta + r/delta`
/// (Solo) or `c_o^i * delta + r/(2*delta)` (Flock).
fn route_burden(config: &GameConfig, role: AgentRole, mode: TravelMode, route: Route) -> f64 {
    let delta = config
        .routes
        .difficulty(route)
        .expect("route comes from the validated route set");
    let alone = config.nominal_risk / delta;
    let hazard = match mode {
        TravelMode::Solo => alone,
        TravelMode::Flock => alone / 2.0,
    };
    config.agent(role).marginal_cost * delta + hazard
}

/// The route minimizing cost plus risk for the given agent and mode.
///
/// Ties break to the lowest index, the shared deterministic tie rule.
pub fn optimal_route(config: &GameConfig, mode: TravelMode, role: AgentRole) -> Route {
    let mut best = Route(1);
    let mut best_burden = route_burden(config, role, mode, best);
    for route in config.routes.routes().skip(1) {
        let burden = route_burden(config, role, mode, route);
        if burden < best_burden {
            best = route;
            best_burden = burden;
        }
    }
    best
}

fn boundary_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= BOUNDARY_REL_TOL * a.abs().max(b.abs())
}

/// Places a homogeneous two-route configuration in the five-case analysis.
pub fn classify_case(config: &GameConfig) -> Result<CaseClassification, SolveError> {
    if config.routes.len() != 2 {
        return Err(SolveError::NotTwoRoutes);
    }
    if !config.is_homogeneous() {
        return Err(SolveError::HeterogeneousCosts);
    }
    let delta1 = config.routes.deltas[0];
    let lambda = config.routes.deltas[1] / delta1;
    let c_o = config.leader.marginal_cost;
    let r = config.nominal_risk;
    let value = c_o * delta1 * delta1;
    let lower = r / (2.0 * lambda);
    let upper = r / lambda;
    let case_id = if boundary_eq(value, lower) {
        2
    } else if boundary_eq(value, upper) {
        5
    } else if value < lower {
        1
    } else if value < upper {
        3
    } else {
        4
    };
    // Cases 3 and 5 share one formula; at the case-5 boundary it equals
    // r/(2*delta_1), the case-4 threshold, so the bound is continuous in c_o.
    let gap_threshold = match case_id {
        1 | 2 => r / (2.0 * lambda * delta1),
        3 | 5 => (lambda - 1.0) * c_o * delta1 - (lambda - 2.0) * r / (2.0 * lambda * delta1),
        _ => r / (2.0 * delta1),
    };
    Ok(CaseClassification {
        case_id,
        cost_risk_value: value,
        lower_threshold: lower,
        upper_threshold: upper,
        territory_gap: config.territory_gap(),
        gap_threshold,
    })
}

/// Utility the follower approaches when undercutting a departure at `t_ref`
/// by a vanishing instant on route `x`.
pub fn preempt_limit_utility(t_ref: f64, x: Route, config: &GameConfig) -> Result<f64, GameError> {
    let delta = config.routes.difficulty(x)?;
    let off_optimum = t_ref - config.optimal_time;
    Ok(config.territories.better
        - off_optimum * off_optimum / config.follower.beta
        - config.follower.marginal_cost * delta
        - config.nominal_risk / delta)
}

/// Utility the follower obtains from a reply to the leader action `(t1, x1)`.
pub fn follower_reply_utility(
    t1: f64,
    x1: Route,
    reply: &BestResponse,
    config: &GameConfig,
) -> Result<f64, GameError> {
    match *reply {
        BestResponse::Concrete { t, x } => {
            let profile = ActionProfile { t1, x1, t2: t, x2: x };
            evaluate_utility_for(&profile, config, AgentRole::Follower)
        }
        BestResponse::PreemptLeftLimit { t_ref, x } => preempt_limit_utility(t_ref, x, config),
    }
}

/// Ranking key implementing the tie ledger: higher utility, then later
/// arrival (a concrete departure at `t` outranks the limit just before `t`),
/// then the lower route index.
fn reply_key(reply: &BestResponse, utility: f64) -> (f64, f64, bool, usize) {
    match *reply {
        BestResponse::Concrete { t, x } => (utility, t, true, x.0),
        BestResponse::PreemptLeftLimit { t_ref, x } => (utility, t_ref, false, x.0),
    }
}

fn outranks(challenger: (f64, f64, bool, usize), incumbent: (f64, f64, bool, usize)) -> bool {
    if challenger.0 != incumbent.0 {
        return challenger.0 > incumbent.0;
    }
    if challenger.1 != incumbent.1 {
        return challenger.1 > incumbent.1;
    }
    if challenger.2 != incumbent.2 {
        return challenger.2;
    }
    challenger.3 < incumbent.3
}

/// The follower's best concrete (non-limit) reply and its utility.
///
/// Concrete candidates are waiting at the optimum on any route and joining
/// the leader mid-commitment at `t1` on its own route. Joining can win even
/// for `t1` off the optimum: just below `t_o` it keeps the shared risk at a
/// small time cost, and just above `t_o` it can beat overtaking the leader.
fn best_concrete_reply(
    t1: f64,
    x1: Route,
    config: &GameConfig,
) -> Result<(BestResponse, f64), GameError> {
    let mut candidates: Vec<BestResponse> = config
        .routes
        .routes()
        .map(|x| BestResponse::Concrete {
            t: config.optimal_time,
            x,
        })
        .collect();
    if t1 != config.optimal_time {
        candidates.push(BestResponse::Concrete { t: t1, x: x1 });
    }
    let mut best: Option<(BestResponse, f64)> = None;
    for reply in candidates {
        let utility = follower_reply_utility(t1, x1, &reply, config)?;
        let replace = match &best {
            None => true,
            Some((incumbent, u)) => outranks(reply_key(&reply, utility), reply_key(incumbent, *u)),
        };
        if replace {
            best = Some((reply, utility));
        }
    }
    Ok(best.expect("a validated config has at least one route"))
}

/// The follower's utility-maximizing reply to the leader action `(t1, x1)`.
///
/// Candidates are the concrete menu of [`best_concrete_reply`] plus, for
/// commitments at or before the optimum, undercutting the leader by an
/// instant on the solo-optimal route. Preempting must strictly beat every
/// concrete option: exact ties resolve toward the later, concrete arrival.
pub fn follower_best_response(
    t1: f64,
    x1: Route,
    config: &GameConfig,
) -> Result<BestResponse, GameError> {
    config.routes.difficulty(x1)?;
    let (concrete, concrete_utility) = best_concrete_reply(t1, x1, config)?;
    if t1 <= config.optimal_time {
        let limit = BestResponse::PreemptLeftLimit {
            t_ref: t1,
            x: optimal_route(config, TravelMode::Solo, AgentRole::Follower),
        };
        let limit_utility = follower_reply_utility(t1, x1, &limit, config)?;
        if outranks(
            reply_key(&limit, limit_utility),
            reply_key(&concrete, concrete_utility),
        ) {
            return Ok(limit);
        }
    }
    Ok(concrete)
}

fn cooperation_at(config: &GameConfig, route: Route, case: CaseTag) -> Equilibrium {
    Equilibrium {
        profile: ActionProfile {
            t1: config.optimal_time,
            x1: route,
            t2: config.optimal_time,
            x2: route,
        },
        kind: InteractionKind::Cooperation,
        case,
        tipping_time: None,
    }
}

fn competition_at(config: &GameConfig, t: f64, route: Route, case: CaseTag) -> Equilibrium {
    Equilibrium {
        profile: ActionProfile {
            t1: t,
            x1: route,
            t2: config.optimal_time,
            x2: route,
        },
        kind: InteractionKind::Competition,
        case,
        tipping_time: Some(t),
    }
}

fn case_tag(case_id: u8) -> CaseTag {
    match case_id {
        1 => CaseTag::Case1,
        2 => CaseTag::Case2,
        3 => CaseTag::Case3,
        4 => CaseTag::Case4,
        5 => CaseTag::Case5,
        _ => unreachable!("case ids are 1..=5"),
    }
}

/// All pure-strategy SPEs of a homogeneous two-route configuration.
///
/// Exactly one equilibrium except at the boundary cases 2 and 5, where the
/// two tied SPEs are both returned, in ascending route order.
pub fn solve_two_route(config: &GameConfig) -> Result<Vec<Equilibrium>, SolveError> {
    let classification = classify_case(config)?;
    let cooperate = classification.territory_gap <= classification.gap_threshold;
    let case = case_tag(classification.case_id);
    let t = tipping_time(config);
    let equilibria = match (classification.case_id, cooperate) {
        (1, true) => vec![cooperation_at(config, Route(2), case)],
        (1, false) => vec![competition_at(config, t, Route(2), case)],
        (2, true) => vec![
            cooperation_at(config, Route(1), case),
            cooperation_at(config, Route(2), case),
        ],
        (2, false) => vec![competition_at(config, t, Route(2), case)],
        (3, true) => vec![cooperation_at(config, Route(1), case)],
        (3, false) => vec![competition_at(config, t, Route(2), case)],
        (4, true) => vec![cooperation_at(config, Route(1), case)],
        (4, false) => vec![competition_at(config, t, Route(1), case)],
        (5, true) => vec![cooperation_at(config, Route(1), case)],
        (5, false) => vec![
            competition_at(config, t, Route(1), case),
            competition_at(config, t, Route(2), case),
        ],
        _ => unreachable!("case ids are 1..=5"),
    };
    Ok(equilibria)
}

/// The SPE of a homogeneous configuration with any number of routes.
///
/// Only two routes matter: the flock-optimal route and the solo-optimal
/// route. The follower cooperates exactly when waiting in a flock on
/// `x_flock` is at least as good as claiming the better territory solo on
/// `x_solo`; indifference favors cooperation.
pub fn solve_n_route(config: &GameConfig) -> Result<Vec<Equilibrium>, SolveError> {
    if !config.is_homogeneous() {
        return Err(SolveError::HeterogeneousCosts);
    }
    let flock = optimal_route(config, TravelMode::Flock, AgentRole::Follower);
    let solo = optimal_route(config, TravelMode::Solo, AgentRole::Follower);
    let wait_value =
        config.territories.worse - route_burden(config, AgentRole::Follower, TravelMode::Flock, flock);
    let claim_value =
        config.territories.better - route_burden(config, AgentRole::Follower, TravelMode::Solo, solo);
    Ok(vec![if wait_value >= claim_value {
        cooperation_at(config, flock, CaseTag::NRoute)
    } else {
        competition_at(config, tipping_time(config), solo, CaseTag::NRoute)
    }])
}

/// The SPE of a single-route configuration.
///
/// With no route choice the marginal cost cancels out of the comparison:
/// cooperation holds exactly when the territory gap is at most
/// `r / (2*delta_1)`, so harder single routes leave less room for it.
pub fn solve_one_route(config: &GameConfig) -> Result<Vec<Equilibrium>, SolveError> {
    if config.routes.len() != 1 {
        return Err(SolveError::NotOneRoute);
    }
    let threshold = config.nominal_risk / (2.0 * config.routes.deltas[0]);
    Ok(vec![if config.territory_gap() <= threshold {
        cooperation_at(config, Route(1), CaseTag::OneRoute)
    } else {
        competition_at(config, tipping_time(config), Route(1), CaseTag::OneRoute)
    }])
}

/// Interaction label implied by a profile's timing and route pattern.
pub fn classify_kind(profile: &ActionProfile) -> InteractionKind {
    match (profile.t1 == profile.t2, profile.x1 == profile.x2) {
        (true, true) => InteractionKind::Cooperation,
        (true, false) => InteractionKind::NeutralCooperation,
        (false, true) => InteractionKind::Competition,
        (false, false) => InteractionKind::NeutralCompetition,
    }
}

/// The follower's reply inside backward induction, with the knife edge at
/// the tipping time resolved toward waiting.
///
/// The solver's tipping-time candidate is the exact indifference point; the
/// sqrt/square round trip leaves the two sides a few ulp apart, so the
/// comparison uses the boundary band instead of raw float order. Returns
/// `None` when the follower strictly prefers to preempt the commitment.
fn deterred_reply(t1: f64, x1: Route, config: &GameConfig) -> Option<(f64, Route)> {
    let (reply, wait_utility) =
        best_concrete_reply(t1, x1, config).expect("route comes from the validated route set");
    if t1 <= config.optimal_time {
        let solo = optimal_route(config, TravelMode::Solo, AgentRole::Follower);
        let preempt_utility =
            preempt_limit_utility(t1, solo, config).expect("solo route is valid");
        let band = BOUNDARY_REL_TOL * preempt_utility.abs().max(wait_utility.abs()).max(1.0);
        if preempt_utility > wait_utility + band {
            return None;
        }
    }
    match reply {
        BestResponse::Concrete { t, x } => Some((t, x)),
        BestResponse::PreemptLeftLimit { .. } => unreachable!("concrete menu only"),
    }
}

/// The SPE of a two-route configuration with per-agent marginal costs.
///
/// Requires `c_o^1 <= c_o^2`: the stronger agent also travels cheaper.
/// Identical costs delegate to [`solve_two_route`].
///
/// The solver is a finite backward induction. Against a waiting follower
/// the leader's payoff is quadratic in `t1` and peaks at `t_o`, so on each
/// route only two commitments can be optimal: `t_o` itself and the tipping
/// time (the latest commitment that still deters preemption). A preempted
/// commitment is strictly dominated by the deterring one because
/// `beta_1 > beta_2`, and a commitment the follower joins away from `t_o`
/// is dominated by the same commitment at `t_o`. Enumerating these
/// candidates against the follower's exact best responses is itself the
/// full deviation check over `{routes} x {t_o, preempt-limit}`.
pub fn solve_heterogeneous(config: &GameConfig) -> Result<Vec<Equilibrium>, SolveError> {
    if config.routes.len() != 2 {
        return Err(SolveError::NotTwoRoutes);
    }
    if config.leader.marginal_cost > config.follower.marginal_cost {
        return Err(SolveError::CostOrderViolated);
    }
    if config.is_homogeneous() {
        return solve_two_route(config);
    }
    let t = tipping_time(config);
    let mut best: Option<(f64, ActionProfile)> = None;
    for t1 in [config.optimal_time, t] {
        for x1 in config.routes.routes() {
            let Some((t2, x2)) = deterred_reply(t1, x1, config) else {
                continue;
            };
            let profile = ActionProfile { t1, x1, t2, x2 };
            let u1 = evaluate_utility_for(&profile, config, AgentRole::Leader)
                .expect("routes come from the validated route set");
            let replace = match &best {
                None => true,
                Some((u_best, p_best)) => {
                    u1 > *u_best
                        || (u1 == *u_best
                            && (t1 > p_best.t1 || (t1 == p_best.t1 && x1 < p_best.x1)))
                }
            };
            if replace {
                best = Some((u1, profile));
            }
        }
    }
    let (_, profile) = best.expect("the tipping-time commitment always deters the follower");
    let kind = classify_kind(&profile);
    let tipping = matches!(
        kind,
        InteractionKind::Competition | InteractionKind::NeutralCompetition
    )
    .then_some(t);
    Ok(vec![Equilibrium {
        profile,
        kind,
        case: CaseTag::Heterogeneous,
        tipping_time: tipping,
    }])
}

/// Dispatches to the closed form matching the configuration's shape.
///
/// Heterogeneous configurations with more than two routes have no closed
/// form and report [`SolveError::NoClosedForm`]; callers fall back to the
/// grid oracle for those.
pub fn solve(config: &GameConfig) -> Result<Vec<Equilibrium>, SolveError> {
    match (config.routes.len(), config.is_homogeneous()) {
        (1, _) => solve_one_route(config),
        (2, true) => solve_two_route(config),
        (2, false) => solve_heterogeneous(config),
        (_, true) => solve_n_route(config),
        _ => Err(SolveError::NoClosedForm),
    }
}
