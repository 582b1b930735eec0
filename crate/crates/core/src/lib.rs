//! Annotation-driven fault-injection instrumentation for NIR circuits.
//!
//! The pipeline parses a design ([`nir`]), inserts injectors and trigger
//! conditioners ([`transforms`]), stitches them into scan chains whose
//! configurations are packed by [`scanchain`], and runs fault campaigns on a
//! cycle-accurate interpreter ([`sim`]).

pub mod nir;
pub mod cond;
pub mod injectors;
pub mod scanchain;
pub mod transforms;
pub mod sim;
