//! Monte Carlo simulation of bipartite entanglement distribution over a
//! square-grid quantum network whose repeaters fuse noisy link states with
//! multi-qubit GHZ projections.
//!
//! The crate is organised bottom-up:
//!
//! * [`state`] holds the exact algebra of GHZ-diagonal states: Werner links,
//!   GHZ swaps of equal and mixed fidelity, fusion of fragments at a repeater,
//!   single-qubit X measurements and coherent information.
//! * [`oracle`] is an independent dense density-matrix engine used to verify
//!   the algebra.
//! * [`network`] builds the grid, heralds links, enumerates polygons and
//!   selects routing regions.
//! * [`protocol`] runs one round: polygon rules, consumer memory choice,
//!   swap scheduling and state tracking.
//! * [`distill`] models link-level recurrence distillation.
//! * [`montecarlo`] aggregates trials into rates and sweeps.
//! * [`validate`] bundles the oracle suites behind the `validate` command.
//! * [`cli`] is the command-line front end.
//!
//! ```
//! use ghzgrid::state::{coherent_information, ghz_swap_equal, werner_from_fidelity};
//!
//! let link = werner_from_fidelity(0.95).unwrap();
//! // A Bell swap of two Werner links.
//! let bell = ghz_swap_equal(2, link.weight()).unwrap();
//! let ci = coherent_information(&bell).unwrap();
//! assert!(ci > 0.3 && ci < 0.4);
//! ```

pub mod cli;
pub mod distill;
mod error;
pub mod montecarlo;
pub mod network;
pub mod oracle;
pub mod protocol;
pub mod state;
pub mod validate;

pub use error::{Error, Result};
