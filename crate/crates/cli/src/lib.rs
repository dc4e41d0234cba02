//! Frontend for the `idexp` library: session scripts, command reports in
//! text or JSON, and the bundled example corpus.

pub mod corpus;
pub mod run;
pub mod script;
