pub mod complexes;
pub mod f2core;
pub mod cup;
pub mod ops;
pub mod statevec;

pub type StateVector64 = statevec::StateVector<f64>;
pub type StateVector32 = statevec::StateVector<f32>;
pub mod gauge_homological;
pub mod gauge_graph;
pub mod protocol;
