//! Problem files, the built-in corpus, serialization and sweeps.

pub mod corpus;
pub mod io;
pub mod spec;
pub mod sweep;

pub use corpus::{builtin, builtin_corpus, corpus_specs};
pub use io::{certificate_from_text, certificate_to_text, write_slacks};
pub use spec::{load_problem, Builtin, LoadedProblem, Monomial, OperatorFamily, ProblemSpec};
pub use sweep::{run_sweep, SweepCell, SweepGrid, SweepOptions};
