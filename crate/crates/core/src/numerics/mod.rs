//! Network substrate for policies and critics: a dense ReLU network with
//! hand-written backpropagation, a softmax-categorical head and Adam.

pub mod adam;
pub mod categorical;
pub mod mlp;

pub use adam::{Adam, AdamConfig};
pub use categorical::{argmax, categorical_sample, entropy, log_softmax, softmax, softmax_logprob};
pub use mlp::{Dense, ForwardCache, Mlp, MlpGrads};
