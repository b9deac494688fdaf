//! r-neighbor bootstrap percolation on the hypercube `Q_n` and the
//! generalized cube `Q_{k,n}`.
//!
//! - [`cube`]: vertex encoding, Hamming geometry and the bit-parallel
//!   infected-neighbor counting kernel.
//! - [`engine`]: threshold schedules (base and relaxed processes) and
//!   fixpoint iteration.
//! - [`partition`]: distance partitions and 1-factorizations of complete
//!   uniform hypergraphs.
//! - [`bounds`]: tail inequalities with exact oracles, plus exact FKG and
//!   independence checks on small cubes.
//! - [`estimator`]: coupled sampling, Monte Carlo percolation probabilities
//!   and critical-probability bisection.
//! - [`experiment`]: configurations, presets and CSV/JSON run records.

pub mod bounds;
pub mod cube;
pub mod engine;
pub mod estimator;
pub mod experiment;
pub mod partition;

pub use cube::{hamming, CubeSpec, Vertex, VertexSet};
pub use engine::{run_to_fixpoint, ScheduleKind, ThresholdSchedule, Trace};
