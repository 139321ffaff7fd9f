//! Chord bubbles drifting through a fenced play-space, and the note events
//! produced when a walker's head enters them.

mod notes;
mod sim;

pub use notes::*;
pub use sim::*;

#[derive(Debug, thiserror::Error)]
pub enum BubbleError {
    #[error("head trace has {head} samples but bubble trajectory has {bubbles}")]
    MisalignedTraces { head: usize, bubbles: usize },
    #[error("altitude {0} must be positive")]
    InvalidAltitude(f64),
    #[error("play-space fence must be wider than a bubble")]
    InvalidSpace,
}
