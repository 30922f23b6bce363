//! Evaluation metrics, permutation tests, effect sizes, multiple-comparison
//! corrections and logistic-model diagnostics.

pub mod diagnostics;
pub mod effect;
pub mod metrics;
pub mod permutation;

pub use diagnostics::{lr_diagnostics, LrDiagnostics};
pub use effect::{cliffs_delta, holm_bonferroni, EffectSize, HolmResult};
pub use metrics::{
    average_precision, f1_mean, metric_report, no_information_rate, pr_auc, pr_auc_mean, roc_auc, MetricKind, MetricReport,
};
pub use permutation::{permutation_test, PermutationTest};
