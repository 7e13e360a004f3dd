//! Fixtures shared by the benchmarks.

use std::f64::consts::TAU;
use std::sync::Arc;

use fracxy_core::solvers::{construct_field, Core, VortexPrescription};
use fracxy_core::{build_domain, Atom, ScalarField, Shape, VorticityMeasure};

/// Half-vortex pair joined by a straight string on the unit square.
pub fn half_vortex_pair(epsilon: f64) -> ScalarField {
    let dom = Arc::new(build_domain(Shape::unit_square(), epsilon).expect("valid spacing"));
    let c = |x: f64| ((x / epsilon).floor() + 0.5) * epsilon;
    let (a, b) = ([c(0.3), c(0.5)], [c(0.7), c(0.5)]);
    let p = VortexPrescription {
        n: 2,
        cores: vec![Core { x: a[0], y: a[1], d: 1 }, Core { x: b[0], y: b[1], d: -1 }],
        strings: vec![vec![a, b]],
    };
    construct_field(&dom, &p).expect("cores clear of the boundary")
}

/// `k` alternating-sign atoms on a circle inside the unit square.
pub fn ring_measure(k: usize) -> VorticityMeasure {
    let atoms = (0..k)
        .map(|j| {
            let t = TAU * j as f64 / k as f64;
            Atom {
                x: 0.5 + 0.3 * t.cos(),
                y: 0.5 + 0.3 * t.sin(),
                d: if j % 2 == 0 { 1 } else { -1 },
            }
        })
        .collect();
    VorticityMeasure::new(Shape::unit_square(), atoms).expect("nonzero degrees")
}
