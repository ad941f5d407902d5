//! Criterion benchmarks for maca-core; see `benches/`.
