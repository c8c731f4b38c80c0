pub mod dimshift;
pub mod error;
pub mod gaussint;
pub mod kinematics;
pub mod matrixops;
pub mod npoint;
pub mod oracle;
pub mod quadrature;
pub mod scalar;
pub mod special;
pub mod tensor;
pub mod value;
