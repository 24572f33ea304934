//! Integral identities and asymptotic checks on graph fields: boundary
//! quadrature with conormals, the divergence-theorem pipeline, the weighted
//! curvature estimates, and the blow-down / cone-limit machinery.

pub mod blowdown;
pub mod boundary;
pub mod estimates;

pub use blowdown::{
    cauchy_bound_check, dlambda_identity_check, estimate_cone, homogeneity_defect,
    sample_blowdown, BlowdownSequence, BlowdownSource, ConeProfile, DlambdaReport, RateReport,
};
pub use boundary::{BoundaryNode, BoundaryQuadrature};
pub use estimates::{
    divergence_identity_check, estimate_k, estimate_star, metric_bound_check,
    DivergenceFieldSpec, DivergenceReport, EstimateReport, EstimateRow, MetricBoundReport,
};
