//! Chebyshev machinery, the single-defect denominator and its pole set.

pub mod cheb;
pub mod poles;
pub mod roots;

pub use cheb::{cheb_eval, ChebyshevKind, Jet, Scalar, ScaledJet};
pub use poles::{
    eval_p, eval_q, find_poles, reconcile_with_spectrum, strong_defect_nodes, BoundStateWindow,
    DefectDenominator, Pole, PoleClass, PoleSet,
};
