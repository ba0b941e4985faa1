//! Concrete test problems: the Hénon–Heiles oscillator and the discretized
//! Klein–Gordon–Schrödinger equation.

pub mod henon_heiles;
pub mod kgs;
