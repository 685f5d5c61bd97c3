//! Criterion benchmarks for spamlens live under `benches/`.
