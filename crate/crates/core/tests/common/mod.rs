#![allow(dead_code)]

use mixspread::{IgParameterization, MixingLaw};
use proptest::prelude::*;

pub const A: [[f64; 2]; 2] = [[0.15, 0.05], [0.05, 0.15]];

/// Exponential, gamma and inverse Gaussian laws with moderate parameters.
pub fn law() -> impl Strategy<Value = MixingLaw> {
    prop_oneof![
        (0.3f64..3.0).prop_map(|rate| MixingLaw::exponential(rate).unwrap()),
        (0.5f64..4.0, 0.2f64..2.0).prop_map(|(k, theta)| MixingLaw::gamma(k, theta).unwrap()),
        (0.3f64..2.0, 0.3f64..3.0)
            .prop_map(|(m, l)| MixingLaw::inverse_gaussian(m, l, IgParameterization::MeanShape).unwrap()),
    ]
}

/// Laws for the radial variable of the elliptical model.
pub fn radial_law() -> impl Strategy<Value = MixingLaw> {
    prop_oneof![
        Just(MixingLaw::chi_squared_2()),
        (1.0f64..4.0, 0.3f64..1.0).prop_map(|(k, theta)| MixingLaw::gamma(k, theta).unwrap()),
        (0.5f64..2.0).prop_map(|v| MixingLaw::degenerate(v).unwrap()),
    ]
}

pub fn table_laws() -> Vec<MixingLaw> {
    vec![
        MixingLaw::exponential(1.0).unwrap(),
        MixingLaw::gamma(2.0, 1.0).unwrap(),
        MixingLaw::inverse_gaussian(0.5f64.sqrt(), 1.0, IgParameterization::MeanShape).unwrap(),
    ]
}

/// Loading matrix with entries in `[0, hi)`.
pub fn loading(hi: f64) -> impl Strategy<Value = [[f64; 2]; 2]> {
    (0.0..hi, 0.0..hi, 0.0..hi, 0.0..hi).prop_map(|(a, b, c, d)| [[a, b], [c, d]])
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
