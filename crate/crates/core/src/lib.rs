//! Multirobot trajectory synthesis from counting temporal logic.

pub mod formula;
pub mod system;
pub mod ilp;
pub mod solver;
pub mod trajectory;
pub mod encode;
pub mod oracle;
pub mod pipeline;
pub mod random;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/formulas.md")]
    mod formulas {}
    #[doc = include_str!("../../../book/src/models.md")]
    mod models {}
    #[doc = include_str!("../../../book/src/encodings.md")]
    mod encodings {}
    #[doc = include_str!("../../../book/src/asynchrony.md")]
    mod asynchrony {}
    #[doc = include_str!("../../../book/src/aggregate.md")]
    mod aggregate {}
    #[doc = include_str!("../../../book/src/continuous.md")]
    mod continuous {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
