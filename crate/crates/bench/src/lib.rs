//! Criterion benchmarks for the borel-unfold kernels; see `benches/kernels.rs`.
