//! Joint compression / transmission-rate / transmit-power control for an
//! energy-constrained sensor node under delay and BER constraints.
//!
//! The crate models a node that senses a block of data, optionally compresses
//! it, and sends it over a block-fading link within a per-block deadline. It
//! provides:
//!
//! - the timing/power/energy/BER models ([`energy`]),
//! - the fading-gain distribution, a seeded sampler and the equal-probability
//!   feedback quantizer ([`channel`]),
//! - closed-form minimum-energy policies for instantaneous, quantized and
//!   statistical channel knowledge plus a no-compression baseline
//!   ([`policy`]),
//! - an independent brute-force grid minimizer used to certify the closed
//!   forms ([`oracle`]),
//! - a deterministic Monte Carlo block simulator with constraint sweeps and a
//!   fixed CSV schema ([`sim`]).
//!
//! All numerics are generic over the scalar type via [`scalar::Real`]
//! (`f32`, `f64`); the `*64` aliases below pin the common case.

pub mod channel;
pub mod energy;
pub mod oracle;
pub mod params;
pub mod policy;
pub mod scalar;
pub mod sim;
pub mod solver;

pub use scalar::Real;

/// Convenience aliases for the default double-precision instantiation.
pub type SystemParams64 = params::SystemParams<f64>;
pub type DerivedConstants64 = params::DerivedConstants<f64>;
pub type BlockOutcome64 = energy::BlockOutcome<f64>;
pub type Policy64 = policy::Policy<f64>;
pub type PolicyTable64 = policy::PolicyTable<f64>;
pub type StationaryPoint64 = policy::StationaryPoint<f64>;
pub type Quantizer64 = channel::Quantizer<f64>;
pub type GridMinimum64 = oracle::GridMinimum<f64>;
pub type SimRow64 = sim::SimRow<f64>;
pub type SweepResult64 = sim::SweepResult<f64>;

/// Single-precision aliases for the parameter container and policy, mostly
/// useful for embedding the solved tables on small targets.
pub type SystemParams32 = params::SystemParams<f32>;
pub type Policy32 = policy::Policy<f32>;
