//! Fixtures shared by the benchmarks.

use gaussmanin::{cmd_gen, ArrangementSpec, Rat, Scalar, CF};

pub const SHAPES: [(usize, usize); 3] = [(4, 2), (5, 2), (6, 3)];

/// A random generic arrangement together with a rational `z` off the discriminant.
pub struct Fixture {
    pub spec: ArrangementSpec,
    pub z: Vec<Rat>,
}

impl Fixture {
    pub fn new(n: usize, k: usize, seed: u64) -> Self {
        let file = cmd_gen(n, k, seed, 3).expect("generic arrangement");
        Fixture {
            spec: file.to_spec().expect("valid spec"),
            z: file.z_values().expect("sampled z"),
        }
    }

    pub fn z_complex(&self) -> Vec<CF> {
        self.z.iter().map(CF::from_rat).collect()
    }
}
