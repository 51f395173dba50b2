//! Quantum states, channels and the distances between them.
//!
//! The crate checks which distances on density matrices contract under
//! quantum channels. Hilbert–Schmidt distance does not: [`channels::paper_counterexample`]
//! doubles it. Beyond that it provides the Kadison bound `‖Θ‖`, a numerical
//! Lindblad check, a search for expanding channels ([`search`]), and bracketing
//! estimates of the distance from a bipartite state to the separable set
//! ([`entanglement`]).
//!
//! ```
//! use qmap::channels::paper_counterexample;
//! use qmap::distances::{contraction_ratio, DistanceKind};
//!
//! let (theta, sigma, rho) = paper_counterexample();
//! let r = contraction_ratio(DistanceKind::HilbertSchmidt, &theta, &sigma, &rho).unwrap();
//! assert!((r - 2.0).abs() < 1e-12);
//! ```

pub mod channels;
pub mod cli;
pub mod distances;
pub mod entanglement;
pub mod error;
pub mod linalg;
pub mod rng;
pub mod search;
pub mod states;
pub mod suites;

pub use error::{Error, Result};

macro_rules! book_chapters {
    ($($name:ident => $file:literal),* $(,)?) => {
        $(
            #[cfg(doctest)]
            #[doc = include_str!(concat!("../../../book/src/", $file))]
            mod $name {}
        )*
    };
}

book_chapters! {
    book_introduction => "introduction.md",
    book_states_and_channels => "states-and-channels.md",
    book_distances => "distances.md",
    book_counterexample => "counterexample.md",
    book_kadison => "kadison.md",
    book_lindblad => "lindblad.md",
    book_entanglement => "entanglement.md",
    book_search => "search.md",
    book_cli => "cli.md",
}
