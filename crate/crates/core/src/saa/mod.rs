//! Offline (sample average approximation) solvers.

mod empirical;
mod prox;
mod solve;
mod vr;

pub use empirical::{build_empirical, empirical_value_grad, read_samples_csv, EmpiricalObjective};
pub use prox::{composite_prox_step, Composite};
pub use solve::{
    norm_power_erm_closed_form, regularized_pipeline, regularized_pipeline_with, solve_erm, solve_erm_from,
    strong_delta, tikhonov_parameters, tikhonov_sample_size, CertificateKind, ErmSolution, PipelineOutput,
};
pub use vr::{vr_gradient, vr_solve, vr_solve_with, VrOptions, VrOutcome, VrState};
