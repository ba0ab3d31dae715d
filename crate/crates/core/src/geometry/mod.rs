//! Vectors, norms, projections and affine isometries.
//!
//! Points are plain [`DVector<f64>`]s. Movement is measured in the Euclidean
//! norm unless a [`NormTag`] says otherwise; projections are always
//! Euclidean.

mod isometry;
mod sets;

pub use isometry::{orthonormalize, rotation_mapping_subspace, AffineIsometry};
pub use sets::{
    dykstra, project_affine, project_ball, project_intersection, project_set, AffineSubspace, FeasibleSet, Halfspace,
    SimpleSet, DEFAULT_PROJECTION_CAP,
};

use nalgebra::DVector;

/// A point (or displacement) in `R^d`.
pub type Point = DVector<f64>;

/// Default rank tolerance used for span detection.
pub const RANK_TOL: f64 = 1e-10;

/// Exponent of an `l_p` norm, `p` in `[1, inf]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormTag {
    p: f64,
}

impl NormTag {
    pub const L1: NormTag = NormTag { p: 1.0 };
    pub const L2: NormTag = NormTag { p: 2.0 };
    pub const LINF: NormTag = NormTag { p: f64::INFINITY };

    /// Returns `None` for `p < 1` or NaN.
    pub fn new(p: f64) -> Option<Self> {
        (p >= 1.0).then_some(NormTag { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn is_euclidean(&self) -> bool {
        self.p == 2.0
    }
}

impl Default for NormTag {
    fn default() -> Self {
        NormTag::L2
    }
}

/// `||v||_p`.
pub fn norm(v: &DVector<f64>, tag: NormTag) -> f64 {
    let p = tag.p;
    if p == 2.0 {
        v.norm()
    } else if p == 1.0 {
        v.iter().map(|c| c.abs()).sum()
    } else if p.is_infinite() {
        v.iter().fold(0.0, |m, c| m.max(c.abs()))
    } else {
        // Scale by the largest entry so that large p does not overflow.
        let scale = v.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let s: f64 = v.iter().map(|c| (c.abs() / scale).powf(p)).sum();
        scale * s.powf(1.0 / p)
    }
}

/// Euclidean distance.
pub fn dist(a: &Point, b: &Point) -> f64 {
    (a - b).norm()
}

/// Which alternative of the segment structure disjunction holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentCase {
    /// Stepping from `x` to `γx` shortens the distance to `y` by a fixed
    /// fraction of the step.
    Closer,
    /// `y` is far from the origin compared with `γx`.
    Far,
}

/// Constants `(closer, far)` of the segment structure disjunction: `1/√2` for both in
/// `l_2`, `(1/2, 1/4)` for any other norm.
pub fn structure_constants(tag: NormTag) -> (f64, f64) {
    if tag.is_euclidean() {
        (std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2)
    } else {
        (0.5, 0.25)
    }
}

/// Tests the disjunction behind the move-towards-minimizer analysis, with
/// the minimizer at the origin: for `γ` in `[0, 1]`, either
/// `|y - γx| - |y - x| <= -c₁|x - γx|` or `|y| >= c₂|γx|`.
/// Returns the first alternative that holds up to `slack`.
pub fn segment_structure(x: &Point, y: &Point, gamma: f64, tag: NormTag, slack: f64) -> Option<SegmentCase> {
    let (closer, far) = structure_constants(tag);
    let gx = x * gamma;
    if norm(&(y - &gx), tag) - norm(&(y - x), tag) <= -closer * norm(&(x - &gx), tag) + slack {
        Some(SegmentCase::Closer)
    } else if norm(y, tag) >= far * norm(&gx, tag) - slack {
        Some(SegmentCase::Far)
    } else {
        None
    }
}

pub(crate) fn check_dim(expected: usize, v: &Point) -> crate::Result<()> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(crate::Error::dims(expected, v.len()))
    }
}

pub(crate) fn all_finite(v: &Point) -> bool {
    v.iter().all(|c| c.is_finite())
}
