//! Criterion benchmarks for the sampler and the surface fit; see `benches/`.
