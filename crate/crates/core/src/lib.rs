//! Blamelessly optimal control under priority-ordered polytopic safety sets.
//!
//! When the safety constraints of an optimal control problem are jointly
//! infeasible, a controller should satisfy the highest-priority constraints it
//! can reach and only then optimize the mission objective. This crate
//! implements that pipeline for 2D polytopic terminal constraints on affine
//! discrete-time systems:
//!
//! - [`geometry`]: dual-representation 2D polytopes, nesting, boundary
//!   distances, and Delaunay triangulation.
//! - [`objective`]: synthesis of a convex piecewise-affine objective whose
//!   sublevel sets equal the nested safety sets.
//! - [`dynamics`]: zero-order-hold discretization, rollout, condensing to a
//!   terminal-state affine map, and successor-set sampling.
//! - [`ocp`]: a dense primal-dual interior-point solver for the underlying
//!   QPs/LPs with feasibility detection and KKT verification.
//! - [`blameless`]: the decision algorithms — brute-force lexicographic
//!   baseline, the two-stage blameless-optimal solve, a pure-optimal
//!   comparison controller, and blameworthiness classification.
//! - [`testkit`]: deterministic instance generators and independent oracles
//!   used by the test suites.

pub mod blameless;
pub mod dynamics;
pub mod geometry;
pub mod objective;
pub mod ocp;
pub(crate) mod rng;
pub mod testkit;
