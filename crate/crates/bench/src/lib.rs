//! Fixtures shared by the stepper benchmarks.

use pavf_core::harness::{HhOrbit, KgsSetup};
use pavf_core::models::henon_heiles::hh_initial_state;
use pavf_core::models::kgs::kgs_initial;
use pavf_core::{Grid1D, HhState, KgsState};

/// Start of the chaotic Hénon–Heiles orbit.
pub fn hh_start() -> HhState {
    hh_initial_state(&HhOrbit::Chaotic.init()).expect("chaotic energy is feasible")
}

/// One soliton on `[-50, 50]` with `h = 0.1`.
pub fn kgs_start() -> (Grid1D, KgsState) {
    let setup = KgsSetup::one_soliton();
    let grid = setup.grid().expect("default grid is valid");
    let state = kgs_initial(&grid, &setup.solitons).state;
    (grid, state)
}
