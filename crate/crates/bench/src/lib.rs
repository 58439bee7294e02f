//! Shared fixtures for the benchmarks.

use layerdg::{build_mesh, MeshFamily, MeshParams, TensorMesh};

/// Mesh used by the benchmarks: `sigma = k + 2`, `alpha = 1`, `delta = 1.4`.
pub fn bench_mesh(family: MeshFamily, epsilon: f64, n: usize, k: usize) -> TensorMesh {
    build_mesh(&MeshParams {
        epsilon,
        n,
        sigma: k as f64 + 2.0,
        alpha: 1.0,
        delta: 1.4,
        family,
    })
    .expect("valid benchmark mesh")
}
