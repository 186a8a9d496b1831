//! Data-driven analysis and predictive control of discrete-time descriptor
//! systems.

pub mod analysis;
pub mod deepc;
pub mod error;
pub mod flemma;
pub mod gen;
pub mod hankel;
pub mod io;
pub mod linalg;
pub mod pencil;
pub mod qp;
pub mod scalar;
pub mod scenarios;
pub mod simulate;
pub mod svd;
pub mod system;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use system::{nilpotency_index, quasi_weierstrass, DescriptorSystem, QuasiWeierstrass};

pub type DescriptorSystemF64 = DescriptorSystem<f64>;
pub type DescriptorSystemF32 = DescriptorSystem<f32>;
pub type QuasiWeierstrassF64 = QuasiWeierstrass<f64>;
pub type QuasiWeierstrassF32 = QuasiWeierstrass<f32>;
