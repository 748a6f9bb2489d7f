//! Multiplicative functions in short intervals, computed at scale.
//!
//! The crate is organised bottom-up:
//!
//! * [`sieve`] produces per-integer arithmetic data (Ω(n), λ(n), window prime
//!   counts) for contiguous ranges with a segmented prime-power sieve.
//! * [`multfunc`] evaluates bounded multiplicative functions on those ranges.
//! * [`interval`] builds sliding short-interval sums and their exact variance
//!   and exceptional-set statistics.
//! * [`dirichlet`] evaluates Dirichlet polynomials on the line `1 + it`,
//!   their mean squares, and the small-`t` / prime-sum profiles.
//! * [`decomp`] audits the Ramaré-type identity and the short-range
//!   splitting of the bilinear prime sum, with exact residual accounting.
//! * [`pipeline`] ties the above into the variance-versus-mean-square
//!   comparison and scaling studies.

pub mod cache;
pub mod decomp;
pub mod dirichlet;
pub mod error;
pub mod interval;
pub mod multfunc;
pub mod pipeline;
pub mod sieve;
pub mod sum;

pub use num_complex;

pub use decomp::{dyadic_split, ramare_decompose, DyadicSplit, RamareDecomposition};
pub use dirichlet::{DirichletPoly, GridPolicy, MeanSquareEstimate};
pub use error::{Error, Result};
pub use interval::{
    compute_variance, exceptional_measure, sliding_sums, IntervalSumSeries, ValueSeries,
    VarianceReport,
};
pub use multfunc::{mean_over, MultiplicativeFunction};
pub use pipeline::{lemma3_compare, lemma4_chain, scaling_study, PipelineConfig, ScalingStudy};
pub use sieve::{primes_in, rough_count, sieve_block, FactorBlock, PrimeWindow, Sieve, SieveConfig};
