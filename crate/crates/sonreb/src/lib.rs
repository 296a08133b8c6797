//! Prediction of concrete compressive strength from non-destructive SonReb
//! readings (ultrasonic pulse velocity + rebound number).
//!
//! The crate provides:
//!
//! * [`data`] — dataset container, CSV ingestion, seeded train/test splits,
//!   summary statistics;
//! * [`synth`] — a synthetic data generator calibrated to published SonReb
//!   dataset statistics (Gaussian copula with moment-matched marginals);
//! * [`metrics`] — the seven-statistic evaluation battery (R², RMSE, NMSE,
//!   fractional bias, max ± errors, MAPE);
//! * [`hcvcm`] — correlation-gated feature construction (the "high correlated
//!   variables creator machine");
//! * [`sbsr`] — step-by-step regression: chained per-cell OLS fits plus a
//!   final combining stage;
//! * [`gep`] — gene expression programming over Karva-encoded chromosomes;
//! * [`anfis`] — grid-partitioned Takagi–Sugeno ANFIS with hybrid
//!   least-squares / gradient training;
//! * [`pipeline`] — end-to-end orchestration of the six model configurations
//!   with report and artifact output.

pub mod anfis;
pub mod data;
pub mod error;
pub mod gep;
pub mod hcvcm;
pub mod metrics;
pub mod pipeline;
pub mod sbsr;
pub mod synth;

pub use error::{Error, Result};
