//! Sequence labeling for multi-resident activity recognition in ambient
//! smart homes.
//!
//! The crate provides two label encodings for `M` residents sharing one
//! sensor stream:
//!
//! * **combined** labels, where the joint activity frame is a single
//!   categorical variable over the product space `K^1 × … × K^M`, decoded by
//!   [`hmm::HmmParams`], [`crf::CrfParams`] and recurrent networks with a
//!   single softmax head;
//! * **separate** labels, one variable per resident, decoded by the
//!   cross-dependent factorial HMM ([`hmm::FhmmParams`]), the factorial CRF
//!   ([`crf::FcrfParams`]) and recurrent networks with one head per resident.
//!
//! [`eval`] holds the per-resident and joint accuracies, grid search,
//! repeated runs and the benchmark driver that produces the accuracy and
//! timing reports.
//!
//! Data-parallel loops (per-instance objective evaluation, batch decoding,
//! grid points, repeats) use rayon when the `parallel` feature is enabled
//! and fall back to sequential iteration otherwise. See [`par::Exec`].

pub mod chain;
pub mod crf;
pub mod datamodel;
pub mod error;
pub mod eval;
pub mod hmm;
pub mod ingest;
pub mod model;
pub mod par;
pub mod rnn;
pub mod tables;

pub use datamodel::{
    ActivityFrame, Dataset, LabelSpace, Observation, ObservationCodec, SequenceInstance,
};
pub use error::{Error, Result};
pub use par::Exec;
pub use model::{Model, ModelKind};
