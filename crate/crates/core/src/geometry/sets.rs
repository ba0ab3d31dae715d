use nalgebra::{DMatrix, DVector};

use super::{check_dim, Point};
use crate::{Error, Result};

/// Iteration cap for alternating projections.
pub const DEFAULT_PROJECTION_CAP: usize = 100_000;

const ORTHO_TOL: f64 = 1e-10;

/// `base + span(basis)` with an orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSubspace {
    base: Point,
    basis: Vec<Point>,
}

impl AffineSubspace {
    /// Validates that `basis` is orthonormal to `1e-10`.
    pub fn new(base: Point, basis: Vec<Point>) -> Result<Self> {
        let d = base.len();
        if basis.len() > d {
            return Err(Error::InvalidSet(format!(
                "{} basis vectors in ambient dimension {d}",
                basis.len()
            )));
        }
        for (i, b) in basis.iter().enumerate() {
            check_dim(d, b)?;
            if (b.norm() - 1.0).abs() > ORTHO_TOL {
                return Err(Error::InvalidSet(format!("basis vector {i} is not unit length")));
            }
            for (j, c) in basis.iter().enumerate().take(i) {
                if b.dot(c).abs() > ORTHO_TOL {
                    return Err(Error::InvalidSet(format!(
                        "basis vectors {j} and {i} are not orthogonal"
                    )));
                }
            }
        }
        if !super::all_finite(&base) {
            return Err(Error::InvalidSet("base point is not finite".into()));
        }
        Ok(AffineSubspace { base, basis })
    }

    /// Builds the subspace through `base` spanned by arbitrary directions.
    pub fn from_spanning(base: Point, dirs: &[Point], tol: f64) -> Result<Self> {
        for d in dirs {
            check_dim(base.len(), d)?;
        }
        let basis = super::orthonormalize(dirs, tol);
        Ok(AffineSubspace { base, basis })
    }

    pub(crate) fn from_parts(base: Point, basis: Vec<Point>) -> Self {
        AffineSubspace { base, basis }
    }

    /// The zero-dimensional subspace `{p}`.
    pub fn point(p: Point) -> Self {
        AffineSubspace { base: p, basis: Vec::new() }
    }

    /// The linear span of the first `k` coordinate axes of `R^d`.
    pub fn coordinate(d: usize, k: usize) -> Self {
        let basis = (0..k.min(d)).map(|i| Point::from_fn(d, |j, _| if i == j { 1.0 } else { 0.0 })).collect();
        AffineSubspace { base: Point::zeros(d), basis }
    }

    pub fn ambient_dim(&self) -> usize {
        self.base.len()
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn basis(&self) -> &[Point] {
        &self.basis
    }

    /// `d x k` matrix whose columns are the basis vectors.
    pub fn basis_matrix(&self) -> DMatrix<f64> {
        let d = self.ambient_dim();
        DMatrix::from_fn(d, self.dim(), |i, j| self.basis[j][i])
    }

    /// Coordinates of the orthogonal projection of `x` in the basis.
    pub fn coords(&self, x: &Point) -> DVector<f64> {
        let rel = x - &self.base;
        DVector::from_iterator(self.dim(), self.basis.iter().map(|b| b.dot(&rel)))
    }

    /// Point of the subspace with the given coordinates.
    pub fn lift(&self, coords: &DVector<f64>) -> Point {
        let mut p = self.base.clone();
        for (b, c) in self.basis.iter().zip(coords.iter()) {
            p.axpy(*c, b, 1.0);
        }
        p
    }

    pub fn project(&self, x: &Point) -> Point {
        self.lift(&self.coords(x))
    }

    pub fn distance(&self, x: &Point) -> f64 {
        (x - self.project(x)).norm()
    }

    pub fn contains(&self, x: &Point, tol: f64) -> bool {
        self.distance(x) <= tol
    }
}

/// `{x : <normal, x> <= offset}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    pub normal: Point,
    pub offset: f64,
}

impl Halfspace {
    pub fn new(normal: Point, offset: f64) -> Result<Self> {
        if normal.norm() == 0.0 || !super::all_finite(&normal) || !offset.is_finite() {
            return Err(Error::InvalidSet("halfspace normal must be finite and nonzero".into()));
        }
        Ok(Halfspace { normal, offset })
    }

    /// Euclidean distance from `x` to the halfspace.
    pub fn violation(&self, x: &Point) -> f64 {
        ((self.normal.dot(x) - self.offset) / self.normal.norm()).max(0.0)
    }

    pub fn project(&self, x: &Point) -> Point {
        let excess = self.normal.dot(x) - self.offset;
        if excess <= 0.0 {
            x.clone()
        } else {
            x - &self.normal * (excess / self.normal.norm_squared())
        }
    }
}

/// The action space. Every variant is closed, convex and nonempty.
#[derive(Debug, Clone, PartialEq)]
pub enum FeasibleSet {
    WholeSpace,
    Ball { center: Point, radius: f64 },
    Affine(AffineSubspace),
    /// Intersection of halfspaces together with a point known to lie in it.
    Halfspaces { halfspaces: Vec<Halfspace>, witness: Point },
}

impl FeasibleSet {
    pub fn ball(center: Point, radius: f64) -> Result<Self> {
        let k = FeasibleSet::Ball { center, radius };
        k.validate()?;
        Ok(k)
    }

    pub fn halfspaces(halfspaces: Vec<Halfspace>, witness: Point) -> Result<Self> {
        let k = FeasibleSet::Halfspaces { halfspaces, witness };
        k.validate()?;
        Ok(k)
    }

    /// Checks the variant invariants (positive radius, nonzero normals,
    /// feasible witness).
    pub fn validate(&self) -> Result<()> {
        match self {
            FeasibleSet::WholeSpace | FeasibleSet::Affine(_) => Ok(()),
            FeasibleSet::Ball { center, radius } => {
                if !(*radius > 0.0) || !radius.is_finite() {
                    return Err(Error::InvalidSet(format!("ball radius must be positive, got {radius}")));
                }
                if !super::all_finite(center) {
                    return Err(Error::InvalidSet("ball center is not finite".into()));
                }
                Ok(())
            }
            FeasibleSet::Halfspaces { halfspaces, witness } => {
                for (i, h) in halfspaces.iter().enumerate() {
                    check_dim(witness.len(), &h.normal)?;
                    if h.normal.norm() == 0.0 {
                        return Err(Error::InvalidSet(format!("halfspace {i} has a zero normal")));
                    }
                    if h.violation(witness) > 1e-9 {
                        return Err(Error::InvalidSet(format!("witness violates halfspace {i}")));
                    }
                }
                Ok(())
            }
        }
    }

    /// Ambient dimension, when the set carries one.
    pub fn ambient_dim(&self) -> Option<usize> {
        match self {
            FeasibleSet::WholeSpace => None,
            FeasibleSet::Ball { center, .. } => Some(center.len()),
            FeasibleSet::Affine(a) => Some(a.ambient_dim()),
            FeasibleSet::Halfspaces { witness, .. } => Some(witness.len()),
        }
    }

    pub fn is_whole_space(&self) -> bool {
        matches!(self, FeasibleSet::WholeSpace)
    }

    /// The set as a list of simple convex pieces whose intersection it is.
    pub fn pieces(&self) -> Vec<SimpleSet> {
        match self {
            FeasibleSet::WholeSpace => Vec::new(),
            FeasibleSet::Ball { center, radius } => {
                vec![SimpleSet::Ball { center: center.clone(), radius: *radius }]
            }
            FeasibleSet::Affine(a) => vec![SimpleSet::Affine(a.clone())],
            FeasibleSet::Halfspaces { halfspaces, .. } => {
                halfspaces.iter().cloned().map(SimpleSet::Halfspace).collect()
            }
        }
    }

    /// Largest Euclidean distance from `x` to any piece.
    pub fn violation(&self, x: &Point) -> f64 {
        self.pieces().iter().fold(0.0, |m, s| m.max(s.violation(x)))
    }

    pub fn contains(&self, x: &Point, tol: f64) -> bool {
        self.violation(x) <= tol
    }
}

/// A convex set with a closed-form Euclidean projection.
#[derive(Debug, Clone, PartialEq)]
pub enum SimpleSet {
    Ball { center: Point, radius: f64 },
    Affine(AffineSubspace),
    Halfspace(Halfspace),
}

impl SimpleSet {
    pub fn project(&self, x: &Point) -> Point {
        match self {
            SimpleSet::Ball { center, radius } => ball_projection(x, center, *radius),
            SimpleSet::Affine(a) => a.project(x),
            SimpleSet::Halfspace(h) => h.project(x),
        }
    }

    pub fn violation(&self, x: &Point) -> f64 {
        match self {
            SimpleSet::Ball { center, radius } => ((x - center).norm() - radius).max(0.0),
            SimpleSet::Affine(a) => a.distance(x),
            SimpleSet::Halfspace(h) => h.violation(x),
        }
    }
}

fn ball_projection(x: &Point, center: &Point, r: f64) -> Point {
    let v = x - center;
    let n = v.norm();
    if n <= r {
        x.clone()
    } else {
        center + v * (r / n)
    }
}

/// Euclidean projection onto the ball of radius `r` around `center`.
pub fn project_ball(x: &Point, center: &Point, r: f64) -> Result<Point> {
    if !(r > 0.0) {
        return Err(Error::InvalidSet(format!("ball radius must be positive, got {r}")));
    }
    check_dim(center.len(), x)?;
    Ok(ball_projection(x, center, r))
}

pub fn project_affine(x: &Point, a: &AffineSubspace) -> Point {
    a.project(x)
}

/// Projection onto `k`. Halfspace intersections are solved to `tol` by
/// [`project_polyhedron`], with [`dykstra`] as a fallback.
pub fn project_set(x: &Point, k: &FeasibleSet, tol: f64) -> Result<Point> {
    if let Some(d) = k.ambient_dim() {
        check_dim(d, x)?;
    }
    project_intersection(x, &k.pieces(), tol)
}

/// Projection onto the intersection of simple sets.
///
/// Zero or one piece, and a ball meeting an affine subspace, are exact.
/// Pure halfspace intersections use [`project_polyhedron`]; everything else
/// goes through [`dykstra`].
pub fn project_intersection(x: &Point, sets: &[SimpleSet], tol: f64) -> Result<Point> {
    if sets.len() > 1 && sets.iter().all(|s| matches!(s, SimpleSet::Halfspace(_))) {
        let hs: Vec<&Halfspace> = sets
            .iter()
            .filter_map(|s| match s {
                SimpleSet::Halfspace(h) => Some(h),
                _ => None,
            })
            .collect();
        if let Ok(p) = project_polyhedron(x, &hs, tol) {
            return Ok(p);
        }
    }
    match sets {
        [] => Ok(x.clone()),
        [s] => Ok(s.project(x)),
        [SimpleSet::Ball { center, radius }, SimpleSet::Affine(a)]
        | [SimpleSet::Affine(a), SimpleSet::Ball { center, radius }] => {
            ball_affine_projection(x, center, *radius, a)
        }
        _ => dykstra(x, sets, tol, DEFAULT_PROJECTION_CAP),
    }
}

/// The slice of a ball by an affine subspace is a ball inside the subspace.
fn ball_affine_projection(x: &Point, center: &Point, r: f64, a: &AffineSubspace) -> Result<Point> {
    let c = a.project(center);
    let off = (center - &c).norm();
    if off > r * (1.0 + 1e-12) {
        return Err(Error::InvalidSet("ball does not meet the affine subspace".into()));
    }
    let inner = (r * r - off * off).max(0.0).sqrt();
    let xa = a.project(x);
    if inner == 0.0 {
        return Ok(c);
    }
    Ok(ball_projection(&xa, &c, inner))
}

/// Projection onto `{p : <n_i, p> <= b_i}` by a dual active-set method
/// (Goldfarb-Idnani with identity Hessian).
///
/// Starts from `x`, adds the most violated constraint and raises its
/// multiplier, dropping active constraints whose multipliers reach zero.
/// The result is `x - Σ λ_i n_i` with `λ >= 0`, so it is exact up to the
/// conditioning of the active normals. Returns an error when the
/// constraints are inconsistent or the iteration cap is hit.
pub fn project_polyhedron(x: &Point, hs: &[&Halfspace], tol: f64) -> Result<Point> {
    let m = hs.len();
    let norms: Vec<f64> = hs.iter().map(|h| h.normal.norm()).collect();
    let mut lambda = vec![0.0; m];
    let mut active: Vec<usize> = Vec::new();
    let cap = 50 * (m + x.len()) + 100;
    let mut steps = 0;
    let primal = |lambda: &[f64], active: &[usize]| {
        let mut p = x.clone();
        for &i in active {
            p.axpy(-lambda[i], &hs[i].normal, 1.0);
        }
        p
    };
    let mut p = x.clone();
    loop {
        let worst = (0..m)
            .filter(|i| !active.contains(i))
            .map(|i| (i, (hs[i].normal.dot(&p) - hs[i].offset) / norms[i]))
            .filter(|&(_, s)| s > tol)
            .max_by(|a, b| a.1.total_cmp(&b.1));
        let Some((j, _)) = worst else {
            return Ok(p);
        };
        loop {
            steps += 1;
            if steps > cap {
                return Err(Error::NonConvergence { what: "polyhedral projection", iterations: cap });
            }
            let nj = &hs[j].normal;
            let k = active.len();
            let r = if k == 0 {
                DVector::zeros(0)
            } else {
                let gram = DMatrix::from_fn(k, k, |a, b| hs[active[a]].normal.dot(&hs[active[b]].normal));
                let rhs = DVector::from_fn(k, |a, _| hs[active[a]].normal.dot(nj));
                gram.cholesky()
                    .ok_or_else(|| Error::InvalidSet("dependent active normals".into()))?
                    .solve(&rhs)
            };
            let mut z = -nj.clone();
            for a in 0..k {
                z.axpy(r[a], &hs[active[a]].normal, 1.0);
            }
            let zz = z.norm_squared();
            let slack = nj.dot(&p) - hs[j].offset;
            if slack <= 0.0 {
                break;
            }
            let full = if zz > 1e-14 * norms[j] * norms[j] { slack / zz } else { f64::INFINITY };
            let (partial, blocking) = (0..k)
                .filter(|&a| r[a] > 0.0)
                .map(|a| (lambda[active[a]] / r[a], a))
                .fold((f64::INFINITY, usize::MAX), |acc, c| if c.0 < acc.0 { c } else { acc });
            if full.is_infinite() && partial.is_infinite() {
                return Err(Error::InvalidSet("halfspaces have empty intersection".into()));
            }
            let t = full.min(partial);
            for a in 0..k {
                lambda[active[a]] = (lambda[active[a]] - t * r[a]).max(0.0);
            }
            lambda[j] += t;
            if full <= partial {
                active.push(j);
                p = primal(&lambda, &active);
                break;
            }
            let i = active.remove(blocking);
            lambda[i] = 0.0;
            let mut with_j = active.clone();
            with_j.push(j);
            p = primal(&lambda, &with_j);
        }
    }
}

/// Dykstra's alternating projection onto `sets[0] ∩ sets[1] ∩ ...`.
///
/// Stops once a full sweep moves the iterate by at most `tol` and the
/// iterate violates no piece by more than `tol`.
pub fn dykstra(x: &Point, sets: &[SimpleSet], tol: f64, cap: usize) -> Result<Point> {
    let mut cur = x.clone();
    let mut increments: Vec<Point> = vec![Point::zeros(x.len()); sets.len()];
    for _ in 0..cap {
        let start = cur.clone();
        for (set, inc) in sets.iter().zip(increments.iter_mut()) {
            let shifted = &cur + &*inc;
            let next = set.project(&shifted);
            *inc = shifted - &next;
            cur = next;
        }
        let moved = (&cur - &start).norm();
        if moved <= tol && sets.iter().all(|s| s.violation(&cur) <= tol) {
            return Ok(cur);
        }
    }
    Err(Error::NonConvergence { what: "dykstra projection", iterations: cap })
}
