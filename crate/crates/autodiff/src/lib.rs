//! A reverse-mode automatic differentiation tape specialised for the small
//! dense matrices that appear in per-instance attention and recurrent
//! networks. Values are computed eagerly as ops are recorded; `backward`
//! walks the tape once and accumulates parameter gradients.

mod graph;
mod matrix;
mod optim;
mod params;

pub use graph::{Graph, Var};
pub use matrix::Matrix;
pub use optim::{clip_grad_norm, Adam, AdamConfig};
pub use params::{Gradients, ParamId, ParamStore};
