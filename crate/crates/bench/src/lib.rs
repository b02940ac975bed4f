//! Criterion benchmarks for `itpq-core`; see `benches/`.
