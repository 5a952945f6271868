pub mod eig;
pub mod error;
pub mod finder;
pub mod fock;
pub mod group;
pub mod json;
pub mod linalg;
pub mod nogo;
pub mod povm;
pub mod random;
pub mod squash;
