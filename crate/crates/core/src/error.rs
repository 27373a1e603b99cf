use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A network invariant was violated while constructing a model.
    InvalidNetwork(String),
    /// A branch with zero series impedance.
    ZeroImpedance { from: usize, to: usize },
    /// A bus (or generator terminal) with zero voltage magnitude where one is required.
    ZeroVoltage { bus: usize },
    /// The eliminated block of a Kron reduction, or another matrix, is singular.
    Singular(&'static str),
    /// `D_i / M_i` is not uniform across machines.
    HeterogeneousDamping { first: usize, second: usize, ratio_first: f64, ratio_second: f64 },
    PowerFlowDiverged { iterations: usize, worst_bus: usize, mismatch: f64 },
    JacobianSingular { iteration: usize, worst_bus: usize },
    /// The integrated state stopped being finite.
    NonFinite { time: f64 },
    /// The envelope constants fail `Γ > 0, L > 0` on some interval.
    EnvelopeInvalid { interval: (f64, f64), gamma: f64, amplitude: f64 },
    /// The lower end of a clearing-time bracket is already unstable.
    NoMargin { clearing_time: f64 },
    InvalidArgument(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidNetwork(msg) => write!(f, "invalid network: {msg}"),
            Error::ZeroImpedance { from, to } => {
                write!(f, "branch {from}-{to} has zero series impedance")
            }
            Error::ZeroVoltage { bus } => write!(f, "bus {bus} has zero voltage magnitude"),
            Error::Singular(what) => write!(f, "singular matrix: {what}"),
            Error::HeterogeneousDamping { first, second, ratio_first, ratio_second } => write!(
                f,
                "damping is not homogeneous: D/M = {ratio_first} for machine {first} but {ratio_second} for machine {second}"
            ),
            Error::PowerFlowDiverged { iterations, worst_bus, mismatch } => write!(
                f,
                "power flow diverged after {iterations} iterations (worst mismatch {mismatch:e} p.u. at bus {worst_bus})"
            ),
            Error::JacobianSingular { iteration, worst_bus } => write!(
                f,
                "power-flow Jacobian singular at iteration {iteration} (worst mismatch at bus {worst_bus})"
            ),
            Error::NonFinite { time } => write!(f, "non-finite state at t = {time} s"),
            Error::EnvelopeInvalid { interval, gamma, amplitude } => write!(
                f,
                "envelope invalid on D in [{:.4}, {:.4}]: Gamma = {gamma}, L = {amplitude} (need both > 0)",
                interval.0,
                interval.1
            ),
            Error::NoMargin { clearing_time } => {
                write!(f, "already unstable at the lower bracket end t_c = {clearing_time} s")
            }
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
