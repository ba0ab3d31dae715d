//! Convex cost functions and their conditioning metadata.
//!
//! Every function knows its global minimizer and the strong convexity and
//! smoothness constants `(alpha, beta)` it was declared with. The online
//! algorithms never look at those constants; the amortized checks do.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;

use crate::geometry::{check_dim, AffineIsometry, AffineSubspace, Point};
use crate::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-10;

/// Distance from the support beyond which a subspace function refuses to
/// evaluate. Scaled by `max(1, |x|)`.
pub const SUPPORT_TOL: f64 = 1e-8;

/// `(alpha, beta, kappa = beta / alpha)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conditioning {
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
}

impl Conditioning {
    fn from_bounds(alpha: f64, beta: f64) -> Self {
        let kappa = if beta == 0.0 {
            1.0
        } else if alpha == 0.0 {
            f64::INFINITY
        } else {
            beta / alpha
        };
        Conditioning { alpha, beta, kappa }
    }
}

/// `½ (x - c)ᵀ H (x - c) + offset` with `H` symmetric positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    hessian: DMatrix<f64>,
    center: Point,
    offset: f64,
    eigenvalues: DVector<f64>,
    /// `None` when `hessian` is diagonal (eigenvectors are the axes).
    eigenvectors: Option<DMatrix<f64>>,
}

impl Quadratic {
    pub fn new(hessian: DMatrix<f64>, center: Point, offset: f64) -> Result<Self> {
        let d = center.len();
        if hessian.nrows() != d || hessian.ncols() != d {
            return Err(Error::dims(d, hessian.nrows()));
        }
        if !(offset >= 0.0) || !offset.is_finite() {
            return Err(Error::InvalidFunction(format!("offset must be finite and nonnegative, got {offset}")));
        }
        if hessian.iter().chain(center.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidFunction("non-finite quadratic data".into()));
        }
        for i in 0..d {
            for j in 0..i {
                if (hessian[(i, j)] - hessian[(j, i)]).abs() > SYMMETRY_TOL {
                    return Err(Error::InvalidFunction(format!("hessian is not symmetric at ({i}, {j})")));
                }
            }
        }
        let diagonal = (0..d).all(|i| (0..d).all(|j| i == j || hessian[(i, j)] == 0.0));
        let (eigenvalues, eigenvectors) = if diagonal {
            (hessian.diagonal(), None)
        } else {
            let sym = (&hessian + hessian.transpose()) * 0.5;
            let eig = SymmetricEigen::new(sym);
            (eig.eigenvalues, Some(eig.eigenvectors))
        };
        let scale = eigenvalues.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if eigenvalues.iter().any(|&l| l < -1e-12 * scale) {
            return Err(Error::InvalidFunction("hessian is not positive semidefinite".into()));
        }
        let eigenvalues = eigenvalues.map(|l| l.max(0.0));
        Ok(Quadratic { hessian, center, offset, eigenvalues, eigenvectors })
    }

    pub fn diagonal(diag: &[f64], center: Point, offset: f64) -> Result<Self> {
        if diag.len() != center.len() {
            return Err(Error::dims(center.len(), diag.len()));
        }
        Quadratic::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)), center, offset)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.hessian
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn is_diagonal(&self) -> bool {
        self.eigenvectors.is_none()
    }

    /// Eigenvalues and eigenvectors (`None` means the coordinate axes).
    pub fn spectrum(&self) -> (&DVector<f64>, Option<&DMatrix<f64>>) {
        (&self.eigenvalues, self.eigenvectors.as_ref())
    }

    pub fn alpha(&self) -> f64 {
        self.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min).min(if self.dim() == 0 { 0.0 } else { f64::INFINITY })
    }

    pub fn beta(&self) -> f64 {
        self.eigenvalues.iter().copied().fold(0.0, f64::max)
    }

    pub fn value(&self, x: &Point) -> f64 {
        let r = x - &self.center;
        0.5 * r.dot(&(&self.hessian * &r)) + self.offset
    }

    pub fn gradient(&self, x: &Point) -> Point {
        &self.hessian * (x - &self.center)
    }

    fn with_offset(&self, offset: f64) -> Quadratic {
        Quadratic { offset, ..self.clone() }
    }

    /// `x -> self(iso⁻¹(x))`.
    pub fn transport(&self, iso: &AffineIsometry) -> Quadratic {
        let q = iso.rotation();
        let hessian = q * &self.hessian * q.transpose();
        let eigenvectors = Some(match &self.eigenvectors {
            Some(v) => q * v,
            None => q.clone(),
        });
        Quadratic {
            hessian,
            center: iso.apply(&self.center),
            offset: self.offset,
            eigenvalues: self.eigenvalues.clone(),
            eigenvectors,
        }
    }
}

/// `scale · |x - center|^exponent`, declared `(kappa, exponent)`-well-centered.
///
/// The declared curvature constant is `alpha = 2·scale/kappa`, so the
/// sandwich `(alpha/2)|x - x*|^γ <= f(x) <= (alpha·kappa/2)|x - x*|^γ` holds
/// with equality on the right.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerNorm {
    scale: f64,
    exponent: f64,
    center: Point,
    kappa: f64,
}

impl PowerNorm {
    pub fn new(scale: f64, exponent: f64, center: Point, kappa: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidFunction(format!("powernorm scale must be positive, got {scale}")));
        }
        if !(exponent >= 1.0 && exponent.is_finite()) {
            return Err(Error::InvalidFunction(format!("powernorm exponent must be >= 1, got {exponent}")));
        }
        if !(kappa >= 1.0 && kappa.is_finite()) {
            return Err(Error::InvalidFunction(format!("powernorm kappa must be >= 1, got {kappa}")));
        }
        Ok(PowerNorm { scale, exponent, center, kappa })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Curvature constant of the well-centered sandwich.
    pub fn alpha(&self) -> f64 {
        2.0 * self.scale / self.kappa
    }

    pub fn value(&self, x: &Point) -> f64 {
        self.scale * (x - &self.center).norm().powf(self.exponent)
    }

    pub fn gradient(&self, x: &Point) -> Result<Point> {
        let r = x - &self.center;
        let n = r.norm();
        if n == 0.0 {
            return if self.exponent > 1.0 { Ok(Point::zeros(x.len())) } else { Err(Error::NotDifferentiable) };
        }
        Ok(r * (self.scale * self.exponent * n.powf(self.exponent - 2.0)))
    }
}

/// A function supported on an affine subspace: `inner(coords(x))` on the
/// subspace, `+inf` elsewhere. Without `inner` it is the plain indicator.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceIndicator {
    support: AffineSubspace,
    inner: Option<Quadratic>,
}

impl SubspaceIndicator {
    pub fn new(support: AffineSubspace, inner: Option<Quadratic>) -> Result<Self> {
        if let Some(g) = &inner {
            if g.dim() != support.dim() {
                return Err(Error::dims(support.dim(), g.dim()));
            }
        }
        Ok(SubspaceIndicator { support, inner })
    }

    pub fn support(&self) -> &AffineSubspace {
        &self.support
    }

    pub fn inner(&self) -> Option<&Quadratic> {
        self.inner.as_ref()
    }

    fn check_on_support(&self, x: &Point) -> Result<()> {
        let distance = self.support.distance(x);
        if distance > SUPPORT_TOL * x.norm().max(1.0) {
            Err(Error::OffSubspace { distance })
        } else {
            Ok(())
        }
    }
}

type ValueFn = dyn Fn(&Point) -> f64 + Send + Sync;
type GradientFn = dyn Fn(&Point) -> Point + Send + Sync;

/// A user-supplied convex function. Its declared `(alpha, beta)` are trusted;
/// [`ConvexFunction::falsify_conditioning`] can probe them.
#[derive(Clone)]
pub struct BlackBoxOracle {
    value: Arc<ValueFn>,
    gradient: Arc<GradientFn>,
    minimizer: Point,
    alpha: f64,
    beta: f64,
    shift: f64,
}

impl BlackBoxOracle {
    pub fn new(
        value: impl Fn(&Point) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&Point) -> Point + Send + Sync + 'static,
        minimizer: Point,
        alpha: f64,
        beta: f64,
    ) -> Result<Self> {
        if !(alpha >= 0.0 && beta >= alpha && beta.is_finite()) {
            return Err(Error::InvalidFunction(format!("need 0 <= alpha <= beta, got ({alpha}, {beta})")));
        }
        Ok(BlackBoxOracle { value: Arc::new(value), gradient: Arc::new(gradient), minimizer, alpha, beta, shift: 0.0 })
    }
}

impl fmt::Debug for BlackBoxOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BlackBoxOracle")
            .field("minimizer", &self.minimizer)
            .field("alpha", &self.alpha)
            .field("beta", &self.beta)
            .field("shift", &self.shift)
            .finish_non_exhaustive()
    }
}

/// One request of a chasing instance.
#[derive(Debug, Clone)]
pub enum ConvexFunction {
    Quadratic(Quadratic),
    PowerNorm(PowerNorm),
    Subspace(SubspaceIndicator),
    BlackBox(BlackBoxOracle),
}

impl From<Quadratic> for ConvexFunction {
    fn from(q: Quadratic) -> Self {
        ConvexFunction::Quadratic(q)
    }
}

impl From<PowerNorm> for ConvexFunction {
    fn from(p: PowerNorm) -> Self {
        ConvexFunction::PowerNorm(p)
    }
}

impl From<SubspaceIndicator> for ConvexFunction {
    fn from(s: SubspaceIndicator) -> Self {
        ConvexFunction::Subspace(s)
    }
}

impl From<BlackBoxOracle> for ConvexFunction {
    fn from(b: BlackBoxOracle) -> Self {
        ConvexFunction::BlackBox(b)
    }
}

impl ConvexFunction {
    pub fn dim(&self) -> usize {
        match self {
            ConvexFunction::Quadratic(q) => q.dim(),
            ConvexFunction::PowerNorm(p) => p.center.len(),
            ConvexFunction::Subspace(s) => s.support.ambient_dim(),
            ConvexFunction::BlackBox(b) => b.minimizer.len(),
        }
    }

    /// The affine subspace a subspace function lives on.
    pub fn support(&self) -> Option<&AffineSubspace> {
        match self {
            ConvexFunction::Subspace(s) => Some(&s.support),
            _ => None,
        }
    }

    pub fn evaluate(&self, x: &Point) -> Result<f64> {
        check_dim(self.dim(), x)?;
        Ok(match self {
            ConvexFunction::Quadratic(q) => q.value(x),
            ConvexFunction::PowerNorm(p) => p.value(x),
            ConvexFunction::Subspace(s) => {
                s.check_on_support(x)?;
                s.inner.as_ref().map_or(0.0, |g| g.value(&s.support.coords(x)))
            }
            ConvexFunction::BlackBox(b) => (b.value)(x) - b.shift,
        })
    }

    /// Gradient; for subspace functions, the gradient within the support.
    pub fn gradient(&self, x: &Point) -> Result<Point> {
        check_dim(self.dim(), x)?;
        match self {
            ConvexFunction::Quadratic(q) => Ok(q.gradient(x)),
            ConvexFunction::PowerNorm(p) => p.gradient(x),
            ConvexFunction::Subspace(s) => {
                s.check_on_support(x)?;
                let mut g = Point::zeros(x.len());
                if let Some(inner) = &s.inner {
                    let gc = inner.gradient(&s.support.coords(x));
                    for (b, c) in s.support.basis().iter().zip(gc.iter()) {
                        g.axpy(*c, b, 1.0);
                    }
                }
                Ok(g)
            }
            ConvexFunction::BlackBox(b) => Ok((b.gradient)(x)),
        }
    }

    /// `argmin f`. For a plain indicator, the base point of its support.
    pub fn global_minimizer(&self) -> Point {
        match self {
            ConvexFunction::Quadratic(q) => q.center.clone(),
            ConvexFunction::PowerNorm(p) => p.center.clone(),
            ConvexFunction::Subspace(s) => match &s.inner {
                Some(g) => s.support.lift(&g.center),
                None => s.support.base().clone(),
            },
            ConvexFunction::BlackBox(b) => b.minimizer.clone(),
        }
    }

    /// `min f`.
    pub fn min_value(&self) -> f64 {
        match self {
            ConvexFunction::Quadratic(q) => q.offset,
            ConvexFunction::PowerNorm(_) => 0.0,
            ConvexFunction::Subspace(s) => s.inner.as_ref().map_or(0.0, |g| g.offset),
            ConvexFunction::BlackBox(b) => (b.value)(&b.minimizer) - b.shift,
        }
    }

    /// `f - min f`; same curvature, same minimizer.
    pub fn normalize_zero_min(&self) -> ConvexFunction {
        match self {
            ConvexFunction::Quadratic(q) => ConvexFunction::Quadratic(q.with_offset(0.0)),
            ConvexFunction::PowerNorm(_) => self.clone(),
            ConvexFunction::Subspace(s) => ConvexFunction::Subspace(SubspaceIndicator {
                support: s.support.clone(),
                inner: s.inner.as_ref().map(|g| g.with_offset(0.0)),
            }),
            ConvexFunction::BlackBox(b) => {
                let shift = (b.value)(&b.minimizer);
                ConvexFunction::BlackBox(BlackBoxOracle { shift, ..b.clone() })
            }
        }
    }

    /// Declared `(alpha, beta, kappa)`.
    ///
    /// Quadratics report their extreme eigenvalues. Power-norm functions
    /// report their well-centered constants `(2·scale/kappa, 2·scale)`, which
    /// coincide with the usual ones when the exponent is 2. A plain indicator
    /// reports `(0, 0, 1)`; a positive semidefinite but singular quadratic
    /// has `kappa = inf`.
    pub fn conditioning(&self) -> Conditioning {
        match self {
            ConvexFunction::Quadratic(q) => Conditioning::from_bounds(q.alpha(), q.beta()),
            ConvexFunction::PowerNorm(p) => {
                Conditioning { alpha: p.alpha(), beta: p.alpha() * p.kappa, kappa: p.kappa }
            }
            ConvexFunction::Subspace(s) => match &s.inner {
                Some(g) => Conditioning::from_bounds(g.alpha(), g.beta()),
                None => Conditioning { alpha: 0.0, beta: 0.0, kappa: 1.0 },
            },
            ConvexFunction::BlackBox(b) => Conditioning::from_bounds(b.alpha, b.beta),
        }
    }

    /// `x -> self(iso⁻¹(x))`; preserves conditioning and minimum value.
    pub fn transport(&self, iso: &AffineIsometry) -> ConvexFunction {
        match self {
            ConvexFunction::Quadratic(q) => ConvexFunction::Quadratic(q.transport(iso)),
            ConvexFunction::PowerNorm(p) => ConvexFunction::PowerNorm(PowerNorm { center: iso.apply(&p.center), ..p.clone() }),
            ConvexFunction::Subspace(s) => ConvexFunction::Subspace(SubspaceIndicator {
                support: iso.apply_subspace(&s.support),
                inner: s.inner.clone(),
            }),
            ConvexFunction::BlackBox(b) => {
                let inv = iso.inverse();
                let (v, g) = (b.value.clone(), b.gradient.clone());
                let inv2 = inv.clone();
                let fwd = iso.clone();
                ConvexFunction::BlackBox(BlackBoxOracle {
                    value: Arc::new(move |x| v(&inv.apply(x))),
                    gradient: Arc::new(move |x| fwd.apply_direction(&g(&inv2.apply(x)))),
                    minimizer: iso.apply(&b.minimizer),
                    ..b.clone()
                })
            }
        }
    }

    /// Probes the declared strong convexity and smoothness on random pairs
    /// in a box of half-width `radius` around the minimizer. Returns the
    /// first violating pair, if any.
    pub fn falsify_conditioning<R: Rng>(
        &self,
        rng: &mut R,
        samples: usize,
        radius: f64,
    ) -> Option<(Point, Point)> {
        let c = self.conditioning();
        let center = self.global_minimizer();
        let draw = |rng: &mut R| {
            let mut p = center.clone();
            for v in p.iter_mut() {
                *v += rng.random_range(-radius..=radius);
            }
            match self.support() {
                Some(a) => a.project(&p),
                None => p,
            }
        };
        for _ in 0..samples {
            let x = draw(rng);
            let y = draw(rng);
            let (Ok(fx), Ok(fy), Ok(gx)) = (self.evaluate(&x), self.evaluate(&y), self.gradient(&x)) else {
                continue;
            };
            let gap = fy - fx - gx.dot(&(&y - &x));
            let sq = (&x - &y).norm_squared();
            let slack = 1e-9 * (1.0 + fx.abs() + fy.abs());
            if gap < 0.5 * c.alpha * sq - slack || gap > 0.5 * c.beta * sq + slack {
                return Some((x, y));
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop, prop_assert, proptest};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn v(c: &[f64]) -> Point {
        Point::from_column_slice(c)
    }

    fn random_quadratic(rng: &mut ChaCha8Rng, d: usize) -> Quadratic {
        let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
        let h = &a * a.transpose() + DMatrix::identity(d, d) * 0.3;
        let c = Point::from_fn(d, |_, _| rng.random_range(-2.0..2.0));
        Quadratic::new(h, c, rng.random_range(0.0..3.0)).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let q = ConvexFunction::from(Quadratic::diagonal(&[2.0, 2.0], v(&[0.0, 0.0]), 0.0).unwrap());
        assert_eq!(q.evaluate(&v(&[1.0, 1.0])).unwrap(), 2.0);

        let off = ConvexFunction::from(Quadratic::diagonal(&[1.0, 3.0], v(&[1.0, -1.0]), 5.0).unwrap());
        assert_eq!(off.evaluate(&off.global_minimizer()).unwrap(), 5.0);
        assert_eq!(off.normalize_zero_min().evaluate(&off.global_minimizer()).unwrap(), 0.0);

        let p = ConvexFunction::from(PowerNorm::new(1.0, 3.0, v(&[0.0, 0.0]), 1.0).unwrap());
        assert_eq!(p.evaluate(&v(&[2.0, 0.0])).unwrap(), 8.0);
    }

    #[test]
    fn dimension_and_support_errors() {
        let q = ConvexFunction::from(Quadratic::diagonal(&[1.0], v(&[0.0]), 0.0).unwrap());
        assert!(matches!(q.evaluate(&v(&[1.0, 2.0])), Err(Error::DimensionMismatch { .. })));

        let axis = AffineSubspace::new(v(&[0.0, 0.0]), vec![v(&[1.0, 0.0])]).unwrap();
        let s = ConvexFunction::from(SubspaceIndicator::new(axis, None).unwrap());
        assert_eq!(s.evaluate(&v(&[3.0, 0.0])).unwrap(), 0.0);
        assert!(matches!(s.evaluate(&v(&[3.0, 0.1])), Err(Error::OffSubspace { .. })));
    }

    #[test]
    fn gradient_examples() {
        let q = Quadratic::diagonal(&[2.0, 8.0], v(&[1.0, -1.0]), 0.0).unwrap();
        let f = ConvexFunction::from(q.clone());
        assert_eq!(f.gradient(&v(&[2.0, 0.0])).unwrap(), v(&[2.0, 8.0]));
        assert!(f.gradient(&f.global_minimizer()).unwrap().norm() < 1e-9);

        let kink = ConvexFunction::from(PowerNorm::new(1.0, 1.0, v(&[0.0, 0.0]), 1.0).unwrap());
        assert!(matches!(kink.gradient(&v(&[0.0, 0.0])), Err(Error::NotDifferentiable)));
        let smooth = ConvexFunction::from(PowerNorm::new(1.0, 1.5, v(&[0.0, 0.0]), 1.0).unwrap());
        assert_eq!(smooth.gradient(&v(&[0.0, 0.0])).unwrap(), v(&[0.0, 0.0]));
    }

    fn central_difference(f: &ConvexFunction, x: &Point, h: f64) -> Point {
        Point::from_fn(x.len(), |i, _| {
            let mut a = x.clone();
            let mut b = x.clone();
            a[i] += h;
            b[i] -= h;
            (f.evaluate(&a).unwrap() - f.evaluate(&b).unwrap()) / (2.0 * h)
        })
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for d in [1, 3, 6] {
            let fs = [
                ConvexFunction::from(random_quadratic(&mut rng, d)),
                ConvexFunction::from(PowerNorm::new(0.7, 3.0, Point::from_fn(d, |_, _| rng.random_range(-1.0..1.0)), 2.0).unwrap()),
                ConvexFunction::from(PowerNorm::new(1.3, 1.5, Point::zeros(d), 2.0).unwrap()),
            ];
            for f in &fs {
                for _ in 0..20 {
                    let x = Point::from_fn(d, |_, _| rng.random_range(-3.0..3.0));
                    let g = f.gradient(&x).unwrap();
                    let fd = central_difference(f, &x, 1e-6);
                    assert!((&g - &fd).norm() <= 1e-5 * g.norm().max(1.0), "{g} vs {fd}");
                }
            }
        }
    }

    #[test]
    fn subspace_minimizer_is_lifted_inner_minimizer() {
        let plane = AffineSubspace::from_spanning(
            v(&[1.0, 2.0, 3.0]),
            &[v(&[1.0, 1.0, 0.0]), v(&[0.0, 1.0, -1.0])],
            1e-10,
        )
        .unwrap();
        let inner = Quadratic::new(DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]), v(&[0.4, -1.2]), 0.0).unwrap();
        let f = ConvexFunction::from(SubspaceIndicator::new(plane.clone(), Some(inner)).unwrap());
        let m = f.global_minimizer();
        assert!(plane.contains(&m, 1e-12));
        assert!(f.gradient(&m).unwrap().norm() < 1e-9);
        assert!((plane.coords(&m) - v(&[0.4, -1.2])).norm() < 1e-12);
    }

    #[test]
    fn normalization_is_idempotent_and_preserves_curvature() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = ConvexFunction::from(random_quadratic(&mut rng, 4));
        let g = f.normalize_zero_min();
        assert!(g.evaluate(&g.global_minimizer()).unwrap().abs() < 1e-12);
        assert_eq!(g.conditioning(), f.conditioning());
        assert_eq!(g.global_minimizer(), f.global_minimizer());
        let h = g.normalize_zero_min();
        let x = Point::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
        assert_eq!(h.evaluate(&x).unwrap(), g.evaluate(&x).unwrap());
    }

    #[test]
    fn conditioning_examples() {
        let c = ConvexFunction::from(Quadratic::diagonal(&[1.0, 4.0], v(&[0.0, 0.0]), 0.0).unwrap()).conditioning();
        assert_eq!((c.alpha, c.beta, c.kappa), (1.0, 4.0, 4.0));
        let c = ConvexFunction::from(Quadratic::diagonal(&[2.0, 2.0], v(&[0.0, 0.0]), 0.0).unwrap()).conditioning();
        assert_eq!((c.alpha, c.beta, c.kappa), (2.0, 2.0, 1.0));
        // λ = 1, μ = 1/8 cube function: Hessian diag(2λ, 2μ, ...).
        let c = ConvexFunction::from(Quadratic::diagonal(&[2.0, 0.25, 0.25, 0.25], Point::zeros(4), 0.0).unwrap())
            .conditioning();
        assert_eq!((c.alpha, c.beta, c.kappa), (0.25, 2.0, 8.0));
    }

    #[test]
    fn rejects_invalid_quadratics() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(Quadratic::new(asym, Point::zeros(2), 0.0).is_err());
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(Quadratic::new(indefinite, Point::zeros(2), 0.0).is_err());
        assert!(Quadratic::diagonal(&[1.0], Point::zeros(1), -1.0).is_err());
    }

    #[test]
    fn transport_preserves_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = ConvexFunction::from(random_quadratic(&mut rng, 3));
        let fixed = AffineSubspace::point(v(&[0.5, 0.0, -1.0]));
        let e = |i: usize| Point::from_fn(3, |j, _| if i == j { 1.0 } else { 0.0 });
        let iso = crate::geometry::rotation_mapping_subspace(&fixed, &[e(2)], &[e(0)]).unwrap();
        let moved = q.transport(&iso);
        for _ in 0..10 {
            let x = Point::from_fn(3, |_, _| rng.random_range(-2.0..2.0));
            let a = q.evaluate(&x).unwrap();
            let b = moved.evaluate(&iso.apply(&x)).unwrap();
            assert!((a - b).abs() < 1e-10);
        }
        assert_eq!(moved.conditioning().kappa, q.conditioning().kappa);
    }

    #[test]
    fn black_box_falsifier_catches_a_lie() {
        let honest = BlackBoxOracle::new(|x: &Point| x.norm_squared(), |x: &Point| x * 2.0, Point::zeros(2), 2.0, 2.0).unwrap();
        let liar = BlackBoxOracle::new(|x: &Point| x.norm_squared(), |x: &Point| x * 2.0, Point::zeros(2), 3.0, 3.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        assert!(ConvexFunction::from(honest).falsify_conditioning(&mut rng, 500, 2.0).is_none());
        assert!(ConvexFunction::from(liar).falsify_conditioning(&mut rng, 500, 2.0).is_some());
    }

    proptest! {
        #[test]
        fn strong_convexity_smoothness_and_gradient_bound(
            seed in 0u64..1000, d in 1usize..6,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = ConvexFunction::from(random_quadratic(&mut rng, d)).normalize_zero_min();
            let c = f.conditioning();
            let x = Point::from_fn(d, |_, _| rng.random_range(-4.0..4.0));
            let y = Point::from_fn(d, |_, _| rng.random_range(-4.0..4.0));
            let gap = f.evaluate(&y).unwrap() - f.evaluate(&x).unwrap() - f.gradient(&x).unwrap().dot(&(&y - &x));
            let sq = (&x - &y).norm_squared();
            prop_assert!(gap >= 0.5 * c.alpha * sq - 1e-9);
            prop_assert!(gap <= 0.5 * c.beta * sq + 1e-9);
            let g = f.gradient(&x).unwrap().norm();
            prop_assert!(g <= (2.0 * c.beta * f.evaluate(&x).unwrap()).sqrt() + 1e-9);
        }

        #[test]
        fn power_norm_sandwich(gamma in 1.0f64..4.0, kappa in 1.0f64..20.0, scale in 0.1f64..5.0,
                               x in prop::collection::vec(-3.0f64..3.0, 3)) {
            let p = PowerNorm::new(scale, gamma, Point::zeros(3), kappa).unwrap();
            let x = v(&x);
            let r = x.norm().powf(gamma);
            let val = p.value(&x);
            prop_assert!(0.5 * p.alpha() * r <= val * (1.0 + 1e-12));
            prop_assert!(val <= 0.5 * p.alpha() * kappa * r * (1.0 + 1e-12));
        }
    }
}
