//! Spatial derivative operators.
//!
//! [`line`] holds the one-dimensional derivative operators (fourth-order
//! compact and second-order centered) with their boundary closures;
//! [`local`] composes them into the variable-coefficient local operator
//! `L_h` of the transformed Bates equation.

pub mod line;
pub mod local;

pub use line::{compact_dx, compact_dxx, compact_dxy, compact_dy, compact_dyy, Closure, DerivativeKind, LineOperator};
pub use local::{local_apply, Derivatives, LocalCoefficients, LocalOperator};

use serde::{Deserialize, Serialize};

/// Accuracy of the spatial difference operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpatialOrder {
    /// Fourth-order compact (Padé) relations.
    Compact4,
    /// Standard three-point centered differences.
    Centered2,
}
