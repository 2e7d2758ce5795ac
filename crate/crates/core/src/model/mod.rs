pub mod finite_level;
pub mod padic;
pub mod shift;
pub mod tree;
