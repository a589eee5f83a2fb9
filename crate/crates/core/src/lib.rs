//! Fisher information, Cramér-Rao bounds and their ellipse interpretation
//! for RSS-based source localization with uncertain anchor positions.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod ellipse;
pub mod error;
pub mod joint;
pub mod montecarlo;
pub mod nuisance;
pub mod report;
pub mod rss;
pub mod scenario;
pub mod svg;
pub mod verify;

pub use ellipse::{EllipseParams, InfoMatrix2};
pub use error::{Error, Result};
pub use joint::{Anchor, NodeRef, Scenario, Source, UncertainAnchor};
pub use rss::{Point, PropagationModel};
