//! Baseband simulation of joint sequency-frequency multiplexing (USFM)
//! against a conventional OFDM baseline.
//!
//! The crate is organised bottom-up:
//!
//! ```text
//! transforms  WHT / unitary DFT / separable joint sequency-frequency transform
//! modem       Gray QAM, grid formation, cyclic prefix and preamble framing
//! channel     AWGN, flat / AR(1) time-varying Rayleigh, exponential multipath
//! optimizer   CSI-driven per-bin power allocation, MCS selection
//! links       USFM and OFDM transmit/receive chains, single-frame trials
//! metrics     closed-form BER oracles, spectral efficiency, PAPR, op counts
//! harness     Monte Carlo BER sweeps with confidence intervals
//! ```

pub mod channel;
pub mod error;
pub mod harness;
pub mod links;
pub mod metrics;
pub mod modem;
pub mod optimizer;
pub mod rng;
pub mod transforms;

pub use num_complex::Complex64;

pub use channel::{ChannelConfig, ChannelKind, ChannelRealization, Csi};
pub use error::{Error, Result};
pub use harness::{BerRecord, RecordFlag, SweepConfig};
pub use links::{Equalizer, LinkConfig, Scheme, TxArtifacts};
pub use metrics::ComplexityRecord;
pub use modem::{ComplexFrame, Constellation};
pub use optimizer::{Gradient, McsEntry, McsTable, OptimizerConfig, Weights};
pub use transforms::SfGrid;
