use nalgebra::{DMatrix, DVector};

use super::{check_dim, AffineSubspace, Point};
use crate::{Error, Result};

/// Residual above which [`AffineIsometry::stabilize`] re-orthonormalizes.
pub const DRIFT_TOL: f64 = 1e-8;

const SKIP_REFLECTION: f64 = 1e-12;

fn strip(w: &mut DVector<f64>, basis: &[Point]) {
    // Two passes of modified Gram-Schmidt keep the residual orthogonal to
    // working precision.
    for _ in 0..2 {
        for q in basis {
            let c = q.dot(w);
            w.axpy(-c, q, 1.0);
        }
    }
}

/// Orthonormal basis of `span(vectors)`.
///
/// Vectors whose residual after removing the span of their predecessors has
/// norm below `tol` are dropped, so the output length is the numerical rank.
pub fn orthonormalize(vectors: &[Point], tol: f64) -> Vec<Point> {
    let mut basis: Vec<Point> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut w = v.clone();
        strip(&mut w, &basis);
        let n = w.norm();
        if n >= tol && n.is_finite() {
            basis.push(w / n);
        }
    }
    basis
}

/// `x -> rotation * x + translation` with an orthogonal `rotation`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineIsometry {
    rotation: DMatrix<f64>,
    translation: Point,
}

impl AffineIsometry {
    pub fn identity(d: usize) -> Self {
        AffineIsometry { rotation: DMatrix::identity(d, d), translation: Point::zeros(d) }
    }

    /// Checks `QᵀQ = I` entrywise to `1e-9`.
    pub fn new(rotation: DMatrix<f64>, translation: Point) -> Result<Self> {
        if !rotation.is_square() {
            return Err(Error::dims(rotation.nrows(), rotation.ncols()));
        }
        check_dim(rotation.nrows(), &translation)?;
        let iso = AffineIsometry { rotation, translation };
        let r = iso.gram_residual();
        if !(r <= 1e-9) {
            return Err(Error::InvalidSet(format!("rotation is not orthogonal (residual {r:e})")));
        }
        Ok(iso)
    }

    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    pub fn rotation(&self) -> &DMatrix<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Point {
        &self.translation
    }

    pub fn apply(&self, x: &Point) -> Point {
        &self.rotation * x + &self.translation
    }

    /// The linear part applied to a direction.
    pub fn apply_direction(&self, v: &Point) -> Point {
        &self.rotation * v
    }

    pub fn apply_inverse(&self, y: &Point) -> Point {
        self.rotation.tr_mul(&(y - &self.translation))
    }

    pub fn inverse(&self) -> AffineIsometry {
        let rotation = self.rotation.transpose();
        let translation = -(&rotation * &self.translation);
        AffineIsometry { rotation, translation }
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &AffineIsometry) -> AffineIsometry {
        AffineIsometry {
            rotation: &self.rotation * &inner.rotation,
            translation: &self.rotation * &inner.translation + &self.translation,
        }
    }

    /// Image of an affine subspace.
    pub fn apply_subspace(&self, a: &AffineSubspace) -> AffineSubspace {
        let basis = a.basis().iter().map(|b| self.apply_direction(b)).collect();
        // Orthogonal maps preserve orthonormality.
        AffineSubspace::from_parts(self.apply(a.base()), basis)
    }

    /// Largest entry of `|QᵀQ - I|`.
    pub fn gram_residual(&self) -> f64 {
        let g = self.rotation.tr_mul(&self.rotation);
        let n = g.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - target).abs());
            }
        }
        worst
    }

    /// Re-orthonormalizes the rotation columns when the Gram residual
    /// exceeds [`DRIFT_TOL`]. Returns whether anything changed.
    pub fn stabilize(&mut self) -> bool {
        if self.gram_residual() <= DRIFT_TOL {
            return false;
        }
        let cols: Vec<Point> = self.rotation.column_iter().map(|c| c.into_owned()).collect();
        let q = orthonormalize(&cols, 0.0);
        debug_assert_eq!(q.len(), cols.len());
        for (j, c) in q.iter().enumerate() {
            self.rotation.set_column(j, c);
        }
        true
    }
}

/// An isometry that fixes `fixed` pointwise and carries every direction in
/// `source_dirs` into `span(fixed directions ∪ target_dirs)`.
///
/// Both direction lists must be orthonormal and orthogonal to the fixed
/// directions. Sources already inside the target span are left alone, so
/// the result is the identity when there is nothing to move. The linear part
/// is a product of Householder reflections and acts as the identity on the
/// complement of `source ⊕ target`.
pub fn rotation_mapping_subspace(
    fixed: &AffineSubspace,
    source_dirs: &[Point],
    target_dirs: &[Point],
) -> Result<AffineIsometry> {
    let d = fixed.ambient_dim();
    if target_dirs.len() < source_dirs.len() {
        return Err(Error::dims(source_dirs.len(), target_dirs.len()));
    }
    for v in source_dirs.iter().chain(target_dirs) {
        check_dim(d, v)?;
        if fixed.basis().iter().any(|f| f.dot(v).abs() > 1e-8) {
            return Err(Error::InvalidSet("direction is not orthogonal to the fixed subspace".into()));
        }
    }

    // Images: for each source, the closest unit vector of the target span
    // orthogonal to the images chosen so far.
    let mut images: Vec<Point> = Vec::with_capacity(source_dirs.len());
    for s in source_dirs {
        let mut w = Point::zeros(d);
        for t in target_dirs {
            w.axpy(t.dot(s), t, 1.0);
        }
        strip(&mut w, &images);
        let n = w.norm();
        let image = if n > 1e-8 {
            w / n
        } else {
            target_dirs
                .iter()
                .find_map(|t| {
                    let mut c = t.clone();
                    strip(&mut c, &images);
                    let cn = c.norm();
                    (cn > 0.5).then(|| c / cn)
                })
                .ok_or(Error::dims(source_dirs.len(), target_dirs.len()))?
        };
        images.push(image);
    }

    let mut q = DMatrix::<f64>::identity(d, d);
    let mut placed: Vec<Point> = Vec::with_capacity(images.len());
    for (s, t) in source_dirs.iter().zip(&images) {
        let current = &q * s;
        let mut v = &current - t;
        if v.norm() > SKIP_REFLECTION {
            strip(&mut v, fixed.basis());
            strip(&mut v, &placed);
            let vn = v.norm();
            if vn > SKIP_REFLECTION {
                v /= vn;
                // q <- (I - 2 v vᵀ) q
                let vt_q = v.tr_mul(&q);
                q -= (&v * vt_q) * 2.0;
            }
        }
        placed.push(t.clone());
    }

    let p0 = fixed.base();
    let translation = p0 - &q * p0;
    Ok(AffineIsometry { rotation: q, translation })
}
