//! The FCBlock coordinate network.
//!
//! ```text
//! coords ─► features (6m) ─► input projection ─► FCBlock × d ─► linear (1) ─► raw
//! FCBlock(h) = h + act(BN₂(L₂(act(BN₁(L₁(h))))))
//! ```
//!
//! The raw output is mapped back to physical units by the [`ScalingTable`].

mod activation;
mod backward;
mod config;
mod forward;
mod inputs;
mod params;
mod scaling;

pub use activation::{gelu, gelu_derivative};
pub use backward::backward;
pub use config::{Activation, ModelConfig};
pub use forward::{forward, forward_infer, forward_train, ForwardCache, Mode};
pub use inputs::{encode_inputs, encode_samples};
pub use params::{init_params, param_count, BatchNorm, FcBlock, Linear, ModelParams};
pub use scaling::{apply_scaling, build_global_scaling_table, build_scaling_table, ScalingTable};
