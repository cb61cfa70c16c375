//! Terms of the free two-coloured prop of mixed circuits and the derived
//! gadgets built from them.

pub mod gadgets;
mod term;

pub use gadgets::{
    add_tree, affine_gaussian_circuit, copy_word, discard_word, gaussian_circuit, matrix_circuit, nary_copy,
    par_all, permutation, seq_all, swap_words, thick_ite,
};
pub use term::{Colour, Generator, GeneratorKind, Node, Term, TermError, TypeWord};
