//! Criterion benchmarks for the planning pipeline; see `benches/`.
