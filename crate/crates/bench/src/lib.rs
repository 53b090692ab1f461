//! Benchmark fixtures; the benches live in `benches/`.

use ksbound::timestep::initial_state;
use ksbound::{Grid, Scenario, State, StepperKind};

/// Grid, scenario and initial state of the critical M = 20 bump.
pub fn bump(cells: usize, stepper: StepperKind) -> (Grid, Scenario, State) {
    let mut scenario = Scenario::critical_bump(20.0, cells, 1.0);
    scenario.stepper = stepper;
    let grid = Grid::new(cells).expect("valid cell count");
    let state = initial_state(&grid, &scenario);
    (grid, scenario, state)
}
