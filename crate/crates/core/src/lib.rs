//! Effective-capacity throughput regions of multiple-access block-fading
//! channels under statistical QoS constraints.
//!
//! Users transmit frames of duration `T` over bandwidth `B`; each frame sees an
//! independent channel power gain per user. The effective capacity of a user
//! with QoS exponent `θ` is `C(θ) = -(1/θT) ln E{e^{-θT R}}`, the largest
//! constant arrival rate whose queue tail still decays like `e^{-θq}`.
//!
//! Modules:
//! - [`fading`]: gain distributions, quadrature and Monte Carlo expectations
//! - [`rates`]: instantaneous service rates (successive decoding, TDMA) and the
//!   ergodic capacity region membership test
//! - [`effcap`]: effective capacity of a service-rate law
//! - [`region`]: throughput-region boundaries without power control
//! - [`power`]: QoS-driven power control under a fixed decoding order
//! - [`queue`]: queue simulation and tail-exponent estimation
//! - [`cli`]: configuration, command dispatch and CSV output

pub mod cli;
pub mod effcap;
pub mod error;
pub mod fading;
pub mod power;
pub mod quadrature;
pub mod queue;
pub mod rates;
pub mod region;
pub mod solve;
pub mod special;

pub use error::{Error, Result};
pub use fading::{FadingModel, GainVector, Method, QuadRule};
