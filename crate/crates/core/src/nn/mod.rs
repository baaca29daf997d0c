//! Desk-scale network machinery in double precision.
//!
//! There is no general autograd tape: every layer keeps what its reverse
//! pass needs in an explicit cache, and [`net::scope_backward`] walks the
//! wiring in reverse.

pub mod adam;
pub mod checkpoint;
pub mod conv;
pub mod gcn;
pub(crate) mod linalg;
pub mod net;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use conv::{conv_backward, conv_forward, ConvCache, ConvLayer};
pub use gcn::{
    gcn_backward, gcn_forward, normalized_adjacency, Activation, GcnCache, GcnLayer, SparseOperator,
};
pub use net::{
    init_params, scope_backward, scope_forward, scope_forward_features, ForwardCache, ScopeNet,
    Source, Wiring,
};
pub use tensor::Tensor;
