//! Observed convergence orders of the Hénon–Heiles schemes against a fine
//! PAVF-C reference.

use pavf_core::harness::{hh_temporal_accuracy, HhOrbit};
use pavf_core::Method;

const TAUS: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];

fn check(method: Method, expected: f64) {
    for orbit in [HhOrbit::Chaotic, HhOrbit::Box] {
        let study = hh_temporal_accuracy(method, orbit, &TAUS, 2.0).unwrap();
        for p in [study.fitted_order_l2, study.fitted_order_linf] {
            assert!((p - expected).abs() <= 0.15, "{method} {orbit:?}: order {p:.3}, expected {expected}");
        }
    }
}

#[test]
fn pavf_is_first_order() {
    check(Method::Pavf, 1.0);
    check(Method::PavfAdjoint, 1.0);
}

#[test]
fn symmetric_schemes_are_second_order() {
    check(Method::Avf, 2.0);
    check(Method::PavfC, 2.0);
    check(Method::PavfP, 2.0);
}
