//! Criterion benchmarks for the step kernels and samplers; run with
//! `cargo bench -p atlaslab-bench`.
