//! Discretized variational solvers used as independent checks of the
//! closed-form eigenvalues.

mod grid2d;
mod radial;
mod rearrange;

pub use grid2d::{
    minimize_rayleigh, rayleigh_quotient, CartesianGrid2D, GridFunction, MinimizeMethod,
    MinimizeOptions, Minimizer,
};
pub use radial::{
    radial_local_solve, radial_pair_nonlocal_solve, RadialGrid, RadialPairSolution, RadialProfile,
    MIN_RADIAL_NODES,
};
pub use rearrange::{
    convex_rearrangement, decreasing_rearrangement, polya_szego_gap, DecreasingRearrangement,
};
