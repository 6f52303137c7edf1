//! Drift, forcing and noise coefficients of the monotone models, their
//! constants ledgers, Bohr averaging and the monotonicity witness.

mod forcing;
mod model;
mod witness;

pub use forcing::{
    bohr_average, make_forcing, BohrAverage, Forcing, ForcingKind, ForcingSpec, ForcingTerm,
};
pub use model::{
    build_averaged, build_model, eval_drift, scalar_grid, AveragedModel, ConstantsLedger,
    DriftKind, ModelSpec, DEFAULT_AVERAGING_PANELS, DEFAULT_AVERAGING_WINDOW,
};
pub(crate) use model::{power_term, power_term_derivative};
pub use witness::{dissipativity_margin, monotonicity_witness, pair_margin, PairMargin, WitnessReport};
