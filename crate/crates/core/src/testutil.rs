use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fespace::{build_space, TaylorHoodSpace};
use crate::mesh::{generate_unit_square, BoundaryPartition};

/// Unit square space with the listed tags open and the rest Dirichlet.
pub fn square_space(n: usize, open: &[i32]) -> Arc<TaylorHoodSpace> {
    let mesh = Arc::new(generate_unit_square(n).unwrap());
    let dirichlet: Vec<i32> = mesh
        .boundary_tags()
        .into_iter()
        .filter(|t| !open.contains(t))
        .collect();
    let part = BoundaryPartition::new(&mesh, dirichlet, open.iter().copied()).unwrap();
    build_space(mesh, part)
}

pub fn random_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}
