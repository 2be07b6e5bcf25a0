//! MGU / GRU network parameters, forward simulation, initialization and checkpoints.

mod checkpoint;
mod forward;
mod init;
mod params;

pub use checkpoint::{Checkpoint, CHECKPOINT_SCHEMA};
pub use forward::{layer_step, network_rollout, rollout_with_masks, simulate_outputs, HiddenState, LayerStep, RolloutTrace};
pub use init::init_standard;
pub use params::{param_count, ArchKind, ArchSpec, GruLayerParams, LayerParams, Layers, NetworkParams};

pub(crate) use forward::mgu_step;
