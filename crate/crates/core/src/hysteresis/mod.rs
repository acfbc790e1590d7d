//! Scalar play and Preisach hysteresis operators and their level functions.

mod density;
mod play;
mod preisach;

pub use density::{BoxDensity, LorentzianDensity, PreisachDensity, QuadratureDensity};
pub use play::{
    generalized_play_update, play_init, play_level_function, play_update, GeneralizedPlayParams,
    PlayParams, PlayState,
};
pub use preisach::{
    preisach_init, preisach_level_function, preisach_output, preisach_update, PreisachInit,
    PreisachMemory, PreisachParams,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HysteresisError {
    #[error("invalid play parameters: {0}")]
    InvalidPlay(String),
    #[error("generalized play band is inverted at u = {u}: gamma_r = {gamma_r} > gamma_l = {gamma_l}")]
    InvertedBand { u: f64, gamma_r: f64, gamma_l: f64 },
    #[error("invalid Preisach parameters: {0}")]
    InvalidPreisach(String),
    #[error("play {index} (r = {r}) holds {w}, outside [{lo}, {hi}] for the initial input")]
    InconsistentMemory { index: usize, r: f64, w: f64, lo: f64, hi: f64 },
}
