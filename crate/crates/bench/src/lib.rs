//! Criterion benchmarks for the seqveritas kernels live under `benches/`.
