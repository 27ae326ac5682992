#![allow(dead_code)]

use std::sync::Arc;

use nsensemble::fespace::{build_space, TaylorHoodSpace};
use nsensemble::mesh::{generate_channel, generate_unit_square, tags, BoundaryPartition};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Unit square with the listed tags open and the rest Dirichlet.
pub fn square_space(n: usize, open: &[i32]) -> Arc<TaylorHoodSpace> {
    let mesh = Arc::new(generate_unit_square(n).unwrap());
    let dirichlet: Vec<i32> = mesh.boundary_tags().into_iter().filter(|t| !open.contains(t)).collect();
    let part = BoundaryPartition::new(&mesh, dirichlet, open.iter().copied()).unwrap();
    build_space(mesh, part)
}

/// `length x 1` channel: walls and inlet Dirichlet, right end open.
pub fn channel_space(length: f64, nx: usize, ny: usize) -> Arc<TaylorHoodSpace> {
    let mesh = Arc::new(generate_channel(length, 1.0, nx, ny, None).unwrap());
    let dirichlet: Vec<i32> = mesh.boundary_tags().into_iter().filter(|&t| t != tags::OUTLET).collect();
    let part = BoundaryPartition::new(&mesh, dirichlet, [tags::OUTLET]).unwrap();
    build_space(mesh, part)
}

pub fn random_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}
