//! Characteristic triples and the deterministic quantities derived from them.

pub mod index;
pub mod jump;
pub mod radial;
pub mod sphere;
pub mod triple;

pub use index::{admissibility_chi, gauge_exponent, index_beta, PowerGauge};
pub use jump::{JumpAtom, JumpMeasure};
pub use radial::{band_bounds, band_of, Continuation, RadialFamily, Tail};
pub use sphere::{Direction, SphericalMeasure};
pub use triple::{
    theoretical_spectrum, trace_triple, Basis, CharTriple, IsotropicPushforward, TraceOptions,
};
