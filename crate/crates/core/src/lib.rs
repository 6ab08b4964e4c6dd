//! Cross-lingual position encoding (XL PE) for self-attention networks.
//!
//! The crate is `no_std` (with `alloc`) and holds every algorithmic piece of
//! the pipeline:
//!
//! * [`numkit`]: a small dense `f64` matrix kernel with explicit backward
//!   functions and a central finite-difference gradient checker.
//! * [`btg`]: word alignments, the CKY-style bracketing transduction grammar
//!   oracle that turns alignments into reordering indices, BTG enumeration
//!   and sampling.
//! * [`posenc`]: absolute and cross-lingual sinusoidal encodings, the
//!   non-linear InXL fusion, and reordering noise.
//! * [`xlsan`]: multi-head self-attention with the InXL, HeadXL and
//!   Combination integration strategies, plus a toy encoder/decoder.
//! * [`lab`]: synthetic copy-translation data, training, attention-based
//!   alignment extraction and AER scoring.
//!
//! File formats, checkpoints and the CLI live in the `xlpe` crate.

#![cfg_attr(not(test), no_std)]
#![warn(missing_docs)]

extern crate alloc;

mod error;
pub mod rng;

pub mod btg;
pub mod lab;
pub mod numkit;
pub mod posenc;
pub mod xlsan;

pub use error::{Error, Result};
