//! Criterion benchmarks for patchlum live in `benches/`.
