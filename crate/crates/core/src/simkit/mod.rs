//! Synthetic feeders, load profiles and event scenarios with ground truth.

mod feeder;
mod loads;
mod scenario;
mod spec;

pub use feeder::generate_feeder;
pub use loads::generate_loads;
pub use scenario::{
    nominal_slack_voltage, run_scenario, slack_voltage_series, solve_steady_state, GroundTruth, Scenario, TruthEvent,
    TruthInterval,
};
pub use spec::{LoadSpec, NetworkSpec, NoiseSpec, PhaseMix, ScenarioSpec};
