pub mod costvol;
pub mod demo;
pub mod eval;
pub mod mask;
pub mod warp;
