//! Utility functions, incentive schemes, the composed utility `Ubar = U o g`,
//! its concave envelope and its convex conjugate.

mod composed;
mod dual;
mod envelope;
mod function;
mod incentive;

pub use composed::{compose, ComposedUtility};
pub use dual::{conjugate, conjugate_roundtrip_check, write_table, DualUtility};
pub use envelope::{
    concavify_closed_form, concavify_numeric, tangency_point, tangent_slope, without_envelope, EnvelopeSegment, Grid,
    PiecewiseUtility, SlopeBound,
};
pub use function::{CustomUtility, UtilityFunction};
pub use incentive::{AffinePiece, IncentiveScheme};
