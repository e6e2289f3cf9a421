//! Inferential statistics: exact contingency tests, effect sizes, FDR
//! adjustment, bootstrap intervals, rank and product-moment correlations,
//! binomial tails, and GEE logistic regression.

mod binomial;
mod bootstrap;
mod correlation;
mod effect;
mod fdr;
mod fisher;
mod gee;
mod spearman;

pub use binomial::{binomial_tail, binomial_tail_lower};
pub use bootstrap::bootstrap_ci;
pub use correlation::{cross_model_correlation, pearson, CrossModelCorrelation, ModelPairR};
pub use effect::cohens_h;
pub use fdr::bh_fdr;
pub use fisher::{fisher_exact, ContingencyTable2x2, FisherResult};
pub use gee::{gee_logistic, GeeFit, GeeRow};
pub use spearman::{spearman_drift, SpearmanResult};
