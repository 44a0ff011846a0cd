pub mod error;
pub mod exponent;
pub mod expr;
pub mod norm;
pub mod numerics;
pub mod trigpoly;
pub mod weight;
