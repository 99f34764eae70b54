//! Load component models of the composite load and their parameter ranges.
//!
//! Every model is a pure function of its inputs: motors expose state
//! derivatives, the other components algebraic P/Q characteristics.

pub mod electronic;
pub mod motor;
pub mod params;
pub mod single_phase;
pub mod zip;

pub use electronic::{electronic_fvl, electronic_pq, ElectronicParams};
pub use motor::{im_currents, im_derivatives, im_init, im_pq, ImDerivative, ImParams, ImState, OMEGA_0};
pub use params::{sample_params, stream_seed, Bound, CompositeParams, ParamRanges};
pub use single_phase::{
    advance_single_phase, single_phase_output, single_phase_pq, SinglePhaseParams, SinglePhaseState,
};
pub use zip::{zip_pq, ZipParams};
