//! Ready-made processes: a CNOT between two qubits, a three-level
//! absorption machine and a driven lossy cavity, each with closed-form
//! reference values.

#![forbid(unsafe_code)]

pub mod cavity;
pub mod cnot;
mod error;
pub mod machine;

pub use cavity::{
    adiabatic_sign_change_time, build_cavity, cavity_series, cavity_steady_state, cavity_transients, CavityObservables,
    CavityParams, CavitySample, CavitySteadyState, CavityTransients, EnergyRates,
};
pub use cnot::{build_cnot, cnot_second_gate, CnotParams, SecondGate};
pub use error::{ModelError, Result};
pub use machine::{
    beta1_sweep, build_machine, machine_heat_flows, machine_steady_state, virtual_temperatures, MachineParams,
    SweepPoint,
};

/// First upward zero crossing of `ys(ts)`, linearly interpolated.
pub fn first_upward_crossing(ts: &[f64], ys: &[f64]) -> Option<f64> {
    ts.windows(2).zip(ys.windows(2)).find_map(|(t, y)| {
        (y[0] < 0.0 && y[1] >= 0.0).then(|| t[0] + (t[1] - t[0]) * (-y[0]) / (y[1] - y[0]))
    })
}
