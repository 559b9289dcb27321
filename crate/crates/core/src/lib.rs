//! solitonscope: numerical verification of conformal-soliton structures.
//!
//! The crate is organized around a small expression language evaluated as
//! multivariate truncated-Taylor jets ([`expr`]), intrinsic Riemannian
//! calculus at sample points ([`tensor`]), extrinsic hypersurface geometry
//! ([`hypersurface`]), soliton condition checks and identity lemmas
//! ([`soliton`]), a hyperplane/cone/hypersphere decision procedure
//! ([`classifier`]), a registry of named example geometries ([`gallery`]),
//! and a config-driven front end ([`cli`]).
//!
//! ```
//! use std::collections::BTreeMap;
//! use solitonscope::{classify, ClassifyConfig, VerdictTag};
//! use solitonscope::gallery;
//! use solitonscope::soliton::Geometry;
//!
//! let mut params = BTreeMap::new();
//! params.insert("r".to_string(), 2.0);
//! let inst = gallery::instantiate("sphere", &params).unwrap();
//! let points = inst.sample_points();
//! let Geometry::Surface(surface) = &inst.geometry else { unreachable!() };
//! let verdict = classify(surface, &points, &ClassifyConfig::default()).unwrap();
//! match verdict.tag {
//!     VerdictTag::Hypersphere { radius, .. } => assert!((radius - 2.0).abs() < 1e-6),
//!     other => panic!("expected a hypersphere, got {other:?}"),
//! }
//! ```

// Tensor formulas read best with explicit index loops, and the jet type
// intentionally exposes add/mul/... as inherent methods next to its fallible
// siblings.
#![allow(clippy::needless_range_loop)]
#![allow(clippy::should_implement_trait)]
#![allow(clippy::type_complexity)]
#![allow(clippy::large_enum_variant)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classifier;
pub mod cli;
pub mod expr;
pub mod gallery;
pub mod hypersurface;
pub mod linalg;
pub mod soliton;
pub mod tensor;

pub use classifier::{
    classify, umbilicity_stats, ClassificationVerdict, ClassifyConfig, VerdictTag,
};
pub use expr::{eval_jet, eval_scalar, parse, EvalContext, Expr, Jet};
pub use hypersurface::{DomainBox, ExtrinsicFrame, Immersion};
pub use soliton::{Flavor, SolitonProblem, SolitonReport, Verdict};
pub use tensor::{CurvaturePoint, MetricField};
