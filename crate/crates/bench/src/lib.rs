//! Criterion benchmarks for `sapflow`; see `benches/`.
