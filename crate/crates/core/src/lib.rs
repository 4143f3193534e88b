//! Dynamic Time Warping under translation.
//!
//! Given point sequences `π` and `σ`, find the translation `τ` minimizing
//! `dtw(π, σ + τ)`. The crate provides
//!
//! * the DTW dynamic program and its grid-graph view ([`dtw`]),
//! * exact solvers for L1 and L∞ in any dimension ([`exact_l1`]),
//! * `(1+ε)`-approximate deciders and a value search for the plane
//!   ([`approx`], [`dynamic_sp`]), built on a z-curve sweep of candidate
//!   translations ([`zorder`]),
//! * brute-force references and instance generators ([`oracle`]).

pub mod approx;
pub mod curve_io;
pub mod dtw;
pub mod dynamic_sp;
pub mod error;
pub mod exact_l1;
pub mod geometry;
pub mod oracle;
pub mod zorder;

pub use approx::{approx_value, ApproxOutcome, Decider, DecisionInstance, Verdict, Witness};
pub use dtw::{dtw, dtw_cost, dtw_translated, grid_shortest_path, DtwResult, Traversal, WeightGrid};
pub use dynamic_sp::{decide_subcubic, DynamicGridSp, EngineKind, PipelineResult};
pub use error::{Error, Result};
pub use exact_l1::{exact_l1_translation, ExactSolution};
pub use geometry::{Bounds, Curve, Norm, Point, Translation};
