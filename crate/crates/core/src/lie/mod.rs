//! Cartan and Iwasawa data, weights, functionals and flags for products of
//! `SL(d, ℝ)`.

pub mod cartan;
pub mod element;
pub mod flag;
pub mod iwasawa;
pub mod jordan;

pub use cartan::{
    bar_functional, cartan_projection, eval_functional, fundamental_weight, kak_frames,
    opposition_involution, partial_cartan, partial_projection, simple_root, symmetric_displacement,
    symmetric_distance, CartanVector, Functional, KakFrames, RootSubset,
};
pub use element::GroupElement;
pub use flag::{
    attracting_flag, flag_distance, flag_transversality_margin, gap_margin, Flag, DEFAULT_GAP_TOLERANCE,
};
pub use iwasawa::{iwasawa_cocycle, partial_iwasawa};
pub use jordan::jordan_vector;
