//! Multiscale substitution tilings.
//!
//! A multiscale substitution scheme tessellates each prototile by translated,
//! rescaled prototile copies in which several distinct scaling constants may
//! participate. This crate implements the full pipeline around such schemes:
//!
//! - exact scheme definition, validation and normalization ([`scheme`]);
//! - the associated directed weighted graph with irreducibility and
//!   incommensurability classification, the graph matrix function and its
//!   rank-one limit data ([`graph`]);
//! - the substitution semi-flow that generates finite patches, stationary
//!   patch towers and supertile hierarchies ([`flow`]);
//! - closed-form asymptotic tile densities ([`asymptotics`]);
//! - empirical measurements on generated patches ([`stats`]);
//! - SVG rendering and interchange formats ([`render`], [`io`]).
//!
//! All statistics run on exact big-rational arithmetic; logarithms are kept
//! symbolic as rational combinations of logs of primes ([`loglin`]) and only
//! evaluated to decimals on demand.
//!
//! ```
//! use multitile::scheme::bundled;
//! let scheme = bundled::square();
//! let report = multitile::scheme::validate(&scheme);
//! assert!(report.all_passed());
//! ```

pub mod asymptotics;
pub mod bigfloat;
pub mod exact;
pub mod flow;
pub mod geometry;
pub mod graph;
pub mod io;
pub mod loglin;
pub mod render;
pub mod scheme;
pub mod stats;

// The book's code listings run as doc-tests, keeping the guide and the
// library honest with each other: one module per chapter so failures point
// at the right file.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/schemes.md")]
    mod schemes {}
    #[doc = include_str!("../../../book/src/graph.md")]
    mod graph {}
    #[doc = include_str!("../../../book/src/patches.md")]
    mod patches {}
    #[doc = include_str!("../../../book/src/densities.md")]
    mod densities {}
    #[doc = include_str!("../../../book/src/measurements.md")]
    mod measurements {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
