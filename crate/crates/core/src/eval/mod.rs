//! Evaluation: coverage metrics, synthetic data, timing and brute-force references.

pub mod bench;
mod metrics;
pub mod oracle;
pub mod synth;

pub use bench::{bench_csv, bench_runtime, BaselineTime, BenchOptions, BenchRow};
pub use metrics::{
    f_measure, fragmented_coverage, single_segment_coverage, CoverageReport, GroundTruth, ObjectScore, Prf,
};
pub use oracle::{oracle_flood_extinction, oracle_optimal_cut, oracle_tree_of_shapes, OptimalCut};
