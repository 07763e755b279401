//! Criterion benchmarks for the newsvendor library; see `benches/`.
