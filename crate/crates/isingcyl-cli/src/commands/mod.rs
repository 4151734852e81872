pub mod correlate;
pub mod kernels;
pub mod multiscale;
pub mod partition;
pub mod propagator;
pub mod scaling;
pub mod selftest;
