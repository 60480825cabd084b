//! Model-free route: random-horizon Q estimation, score-function policy
//! gradient and the outer population loop, all driven through a
//! [`PopulationSimulator`].

mod estimators;
mod learner;
mod oracle;
mod rng;
mod simulator;

pub use estimators::{est_q, gradient_estimate, pg_step, GradientSample, StepSchedule};
pub use learner::{empirical_population_update, rhpg_mmfe, LearnerConfig, RlTraceRow, TracePhase};
pub use oracle::{default_horizon, exact_gradient, exact_objective, exact_q};
pub use rng::{substream, Stream};
pub use simulator::{PopulationSimulator, SampleOnly};
