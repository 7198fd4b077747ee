//! Training-set assembly: per-source quotas, train/validation splits,
//! noise injection for filtering benchmarks, and flow-network input layout.

mod flow;
mod mix;
mod noise;
mod split;

pub use flow::{
    assemble_flow_stack, flow_fields_from_tensor, inflate_channel_weights, FlowField,
    FlowLayout, FlowVolume,
};
pub use mix::{mix_sources, MixQuota, QuotaBucket};
pub use noise::{inject_noise, injected_count, NoiseBench};
pub use split::split_train_val;
