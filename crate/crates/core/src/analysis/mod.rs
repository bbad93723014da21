//! Measurements on computed solutions.

pub mod boundary;
pub mod expansion;
pub mod ntmf;
pub mod rates;
pub mod smoothing;

pub use boundary::{boundary_layer_norm, difference_quotient, interior_operator_residual, rellich_ratio, RellichRatio};
pub use expansion::{expansion_error, homogenized_solution, two_scale_expansion, ExpansionReport, SampledField};
pub use ntmf::{ntmf, NtmfResult, NtmfVariant};
pub use rates::{fit_rate, RateFit};
pub use smoothing::{CutoffFunction, MollifierKernel};
