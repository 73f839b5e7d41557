//! Multi-perspective deliberation for placement recommendations.
//!
//! A profile is scored against each candidate host from cultural,
//! emotional and ethical viewpoints. Every score comes out of a bounded
//! propose/validate loop ([`engine::run_case`]), and the three validated
//! scores are fused with a weight vector into one ranking. Decisions,
//! overrides and what-if previews are kept in a hash-chained store
//! ([`store::CaseStore`]). They are summarised by the measures in
//! [`metrics`] and served over HTTP by [`service`].
//!
//! ```no_run
//! use deliberate::agents::rubric::{Rubric, RubricBackend};
//! use deliberate::engine::{run_case, WeightVector};
//! use deliberate::host::default_hosts;
//! use deliberate::synth::{generate, SynthConfig};
//!
//! let profile = generate(&SynthConfig::new(1, 7)).unwrap().profiles.remove(0);
//! let backend = RubricBackend::new(Rubric::default()).unwrap();
//! let decision = run_case(&profile, &default_hosts(), &WeightVector::default(), &backend, 3);
//! ```

pub mod agents;
pub mod canonical;
pub mod cli;
pub mod config;
pub mod engine;
pub mod host;
pub mod metrics;
pub mod profile;
pub mod rationale;
pub mod service;
pub mod store;
pub mod synth;
