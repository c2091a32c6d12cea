//! Numerical toolkit for non-local Dirichlet forms on finite windows of
//! weighted graphs.
//!
//! * [`graph_form`]: windows, model catalog and the text dump format.
//! * [`energy`]: energy, energy measures, `Γ`, capacity, contractions.
//! * [`metrics`]: pseudo-metrics, intrinsic-metric checks, cut-offs.
//! * [`spectral`]: spectra, generalized eigenfunctions, ground state
//!   transform, Caccioppoli and Shnol inequalities.

pub mod energy;
pub mod error;
pub mod graph_form;
pub mod linalg;
pub mod metrics;
pub mod spectral;

pub use error::{Error, Result};
pub use graph_form::{build_model, GraphForm, InteriorRule, ModelSpec};
pub use metrics::PseudoMetric;
pub use spectral::PerturbedForm;
