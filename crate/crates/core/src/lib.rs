//! Joint routing and driver shift scheduling for paratransit fleets.
//!
//! A fleet serves pickup-and-delivery requests with time windows and vehicle
//! capacity while each vehicle's shift (departure time and bounded span) is
//! chosen at the same time. Requests made by the same rider form a group that
//! is either fully served or penalized in full.

pub mod construct;
pub mod error;
pub mod evaluate;
pub mod generate;
pub mod io;
pub mod model;
pub mod oracle;
mod plan;
pub mod schedule;
pub mod search;

pub use construct::construct;

pub use error::ModelError;
pub use evaluate::{
    assemble_solution, check_solution, objective_accelerated, objective_unserved,
    strip_partial_groups, time_term, total_working_minutes, ValidationReport, Violation,
    ViolationTag,
};
pub use generate::{generate, GenError, GenParams};
pub use model::{
    Instance, InstanceData, Minutes, NodeRole, NodeSpec, Route, ShiftPolicy, Solution,
};
pub use oracle::{solve_exact, ExactResult, OracleError};
pub use schedule::{schedule_inner, schedule_route, Infeasible, RouteEval, RouteSchedule};
pub use search::{
    solve, ClockMode, Coupling, ObjectiveMode, Operator, OperatorWeights, ProgressTrace,
    SearchConfig, SearchError,
};
