//! Meta-evaluation: how well a per-pair metric agrees with human ratings.

mod bootstrap;
mod grid;
mod icc;
mod normalize;
mod rank;
pub mod special;
mod worst;

pub use bootstrap::{bootstrap_delta, BootstrapCI, BootstrapConfig};
pub use grid::{combination_grid, higher_better_form, CombineMode, CombinationGrid, NamedScores};
pub use icc::{icc_2k, icc_2k_table, IccResult};
pub use normalize::{human_scores, normalize_ratings, normalize_ratings_kind, raw_means, HumanBasis, NormalizedRatings};
pub use rank::{
    align, alignment, average_ranks, compute_stat, kendall_tau_b, pair_counts, pairwise_accuracy,
    pairwise_accuracy_slices, AlignmentResult, AlignmentStat, PairCounts, RankOrder,
};
pub use worst::{worst_case_judgments, WorstCase};
