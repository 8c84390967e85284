//! Compiles and runs every fenced Rust block in the guide (`book/`) and the
//! workspace README as a doctest, one module per chapter so failures name
//! their origin.

#[doc = include_str!("../../../README.md")]
pub mod readme {}

macro_rules! chapter {
    ($name:ident, $file:literal) => {
        #[doc = include_str!(concat!("../../../book/src/", $file))]
        pub mod $name {}
    };
}

chapter!(introduction, "introduction.md");
chapter!(graphs, "graphs.md");
chapter!(streams, "streams.md");
chapter!(l0_sampling, "l0-sampling.md");
chapter!(matcher, "matcher.md");
chapter!(hard_instances, "hard-instances.md");
chapter!(sim_protocol, "sim-protocol.md");
chapter!(cli, "cli.md");
