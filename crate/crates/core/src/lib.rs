pub mod arraygeom;
pub mod capacity;
pub mod channel;
pub mod error;
pub mod expcli;
pub mod ffchannel;
pub mod linalg;
pub mod nfchannel;
pub mod qsensor;
pub mod quadrature;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double-precision aliases for the generic types.
pub type Hamiltonian = qsensor::RotatedHamiltonian<f64>;
pub type Array = arraygeom::PlanarArray<f64>;
pub type Correlation = ffchannel::CorrelationMatrix<f64>;
pub type EnsembleSpec = ffchannel::ChannelEnsembleSpec<f64>;
pub type Channel = channel::ChannelMatrix<f64>;
pub type Dyad = nfchannel::GreensDyad<f64>;
pub type Scenario = nfchannel::NearFieldScenario<f64>;
pub type Snr = capacity::SnrSpec<f64>;
pub type Quadrature = quadrature::SphereQuadrature<f64>;
