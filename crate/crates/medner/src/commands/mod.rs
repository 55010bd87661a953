pub mod compare;
pub mod eval;
pub mod predict;
pub mod prepare;
pub mod synthetic;
pub mod train;
