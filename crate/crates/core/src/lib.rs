//! Equilibrium analysis for a two-agent Stackelberg timing-and-route game.
//!
//! Two agents each choose a departure time and one of `n` routes toward a
//! shared destination with two territories of different value. The stronger
//! agent (the leader) commits first; the weaker agent (the follower)
//! observes the commitment and best-responds. Utilities trade off arrival
//! benefit against a quadratic timing cost, a per-route travel cost, and a
//! predation risk that halves when both agents share a route and departure
//! time.
//!
//! The crate provides:
//!
//! - [`game`]: configuration types, validation, and the utility function;
//! - [`analytic`]: closed-form subgame-perfect equilibria (the two-route
//!   five-case analysis, n-route and one-route reductions, and the
//!   heterogeneous-cost extension);
//! - [`oracle`]: a brute-force discretized solver used to cross-check the
//!   closed forms and to handle shapes without one;
//! - [`sweep`]: parameter-plane classification grids with analytic and
//!   empirically detected region boundaries, exportable as CSV or JSON.

pub mod analytic;
pub mod game;
pub mod oracle;
pub mod sweep;

pub use analytic::{
    classify_case, classify_kind, follower_best_response, follower_reply_utility, optimal_route,
    preempt_limit_utility, solve, solve_heterogeneous, solve_n_route, solve_one_route,
    solve_two_route, tipping_time, BestResponse, CaseClassification, CaseTag, Equilibrium,
    InteractionKind, SolveError, TravelMode, BOUNDARY_REL_TOL,
};
pub use game::{
    benefit, evaluate_utility, evaluate_utility_for, risk, travel_cost, validate_config,
    ActionProfile, AgentParams, AgentRole, CostSpec, GameConfig, GameError, RawGameConfig, Route,
    RouteSet, Territories,
};
pub use oracle::{
    build_grid, oracle_best_response, oracle_solve, verify_spe, Deviation, DeviationReport,
    OracleError, StrategyGrid,
};
pub use sweep::{
    export_regions, extract_boundaries, sweep, BoundaryCurve, CurveSource, ExportFormat,
    RegionCell, RegionGrid, SweepError, SweepSpec,
};
