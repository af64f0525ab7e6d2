//! A small reverse-mode autodiff engine with the layers the policies need.

mod adam;
mod layers;
mod params;
mod tape;

pub use adam::AdamState;
pub use layers::{Attention, Linear, Lstm, LstmState, Mlp};
pub use params::{Checkpoint, Grads, ParamId, ParamStore, Tensor, CHECKPOINT_SCHEMA_VERSION};
pub use tape::{Tape, Var};
