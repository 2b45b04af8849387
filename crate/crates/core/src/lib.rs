//! Secure degrees-of-freedom laboratory for the two-user MIMO multiple
//! access wiretap channel.
//!
//! Two transmitters with `N` antennas each talk to an `N`-antenna receiver
//! while a `K`-antenna eavesdropper listens. This crate synthesizes the
//! secure precoding schemes for every `(N, K)` regime, certifies their
//! alignment and decodability conditions numerically, and evaluates the
//! achieved secure rates so the high-SNR slope can be compared against the
//! closed-form sum s.d.o.f.
//!
//! Module map:
//! - [`matrix`]: rank / nullspace / pseudoinverse primitives on real matrices
//! - [`channel`]: seeded channel realizations (fixed or fading gains)
//! - [`regimes`]: exact rational s.d.o.f. values, bounds, and stream budgets
//! - [`gaussian`]: vector-space alignment designs (fading gains)
//! - [`structured`]: PAM / real-alignment designs (fixed gains)
//! - [`eval`]: Gaussian mutual information, leakage, slope fits, sweeps
//! - [`io`]: JSON dump/load for channels and designs

pub mod channel;
pub mod error;
pub mod eval;
pub mod gaussian;
pub mod io;
pub mod matrix;
pub mod regimes;
pub mod structured;

pub use channel::{draw_channels, validate_channels, ChannelDims, ChannelSet, GainMode};
pub use error::{Error, Result};
pub use matrix::{RealMatrix, Tolerance};
pub use regimes::{classify_regime, sum_sdof, Rational, RegimeClass, StreamBudget};
