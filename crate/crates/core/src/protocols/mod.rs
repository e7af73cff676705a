//! Evaluation protocols, metrics and significance tests.

mod evaluate;
mod kfold;
mod metrics;
mod report;
mod runner;
mod split;
mod wilcoxon;

pub use evaluate::{evaluate_pairs, PairEvaluation};
pub use metrics::{compute_metrics, f1_score, Confusion, MetricsTuple};
pub use kfold::{assign_folds, kfold_f1_compare, FoldScore, ItemOutcome, KFoldComparison};
pub use wilcoxon::{average_ranks, wilcoxon_paired, wilcoxon_signed_rank, Alternative, Method, TestResult, EXACT_CUTOFF};
pub use report::{render_csv, render_markdown, stats_json, write_report, REPORT_CSV, REPORT_MD, STATS_JSON};
pub use runner::{run_plan, EvaluationReport, ExperimentResult, ModelVariant, NamedTest, TrainSpec};
pub use split::{split_cross_dataset, split_one_vs_rest, split_random, tags_of, Experiment, ProtocolKind, SplitPlan};
