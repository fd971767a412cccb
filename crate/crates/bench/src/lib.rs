//! Criterion benchmarks for `qot-core`; see `benches/`.
