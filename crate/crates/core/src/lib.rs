//! Information-backflow diagnostics for minimal non-Markovian models.
//!
//! * [`mlfunc`]: Mittag-Leffler function `E_a(-x)` for `0 < a <= 1`.
//! * [`quantum`]: the fractional two-state observable and its revival measure.
//! * [`classical`]: three-state relaxation under Markov, exponential-kernel,
//!   Erlang-2 semi-Markov and fractional memory.
//! * [`info`]: entropy, relative entropy and entropy overshoot.
//! * [`backflow`]: the total-rise functional shared by all models.
//! * [`sweeps`]: phase diagrams and boundary extraction.
//! * [`io`]: CSV/JSON/SVG serialization used by the command-line tool.

pub mod backflow;
pub mod classical;
pub mod cli;
pub mod error;
pub mod info;
pub mod io;
pub mod mlfunc;
pub mod quad;
pub mod quantum;
pub mod special;
pub mod sweeps;
pub mod trajectory;

pub use error::{Error, Result};
pub use trajectory::Trajectory;
