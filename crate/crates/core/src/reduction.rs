//! Online dimension reduction for requests supported on low-dimensional
//! affine subspaces.
//!
//! Requests of dimension at most `k` are carried into the fixed
//! `(2k+1)`-dimensional coordinate subspace `L` by isometries `R_t` built
//! one step at a time. Each new `R_t` agrees with `R_{t-1}` on the previous
//! request, so distances between consecutive played points are preserved
//! and any chaser running inside `L` pays exactly what its pulled-back
//! trajectory pays in the ambient space.

use crate::chasers::{Chaser, ChaserKind, OnlinePlayer};
use crate::functions::{ConvexFunction, SubspaceIndicator};
use crate::geometry::{orthonormalize, rotation_mapping_subspace, AffineIsometry, AffineSubspace, FeasibleSet, Point};
use crate::instance::Instance;
use crate::solvers::SolverConfig;
use crate::{Error, Result};

/// Rank tolerance for deciding which directions of a request are new.
pub const REDUCTION_RANK_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct ReductionState {
    k: usize,
    l: AffineSubspace,
    rotation: AffineIsometry,
    prev_image: AffineSubspace,
    t: usize,
}

/// Starts a reduction whose first fitted set is `first` (typically the
/// start point, or the first request). `L` is spanned by the first
/// `min(2k+1, d)` coordinate axes and `R` rotates the linear span of
/// `first` into it, leaving it alone when it is already there.
pub fn init_reduction(first: &AffineSubspace, k: usize, ambient_d: usize) -> Result<ReductionState> {
    if first.ambient_dim() != ambient_d {
        return Err(Error::dims(ambient_d, first.ambient_dim()));
    }
    if first.dim() > k {
        return Err(Error::dims(k, first.dim()));
    }
    let width = (2 * k + 1).min(ambient_d);
    let l = AffineSubspace::coordinate(ambient_d, width);
    let mut span: Vec<Point> = first.basis().to_vec();
    span.push(first.base().clone());
    let source = orthonormalize(&span, REDUCTION_RANK_TOL);
    let origin = AffineSubspace::point(Point::zeros(ambient_d));
    let rotation = rotation_mapping_subspace(&origin, &source, l.basis())?;
    let prev_image = rotation.apply_subspace(first);
    Ok(ReductionState { k, l, rotation, prev_image, t: 0 })
}

impl ReductionState {
    pub fn k(&self) -> usize {
        self.k
    }

    /// The target subspace `L`.
    pub fn target(&self) -> &AffineSubspace {
        &self.l
    }

    /// Dimension of `L`.
    pub fn width(&self) -> usize {
        self.l.dim()
    }

    /// The current isometry `R_t`.
    pub fn isometry(&self) -> &AffineIsometry {
        &self.rotation
    }

    /// `R_t(K_t)`, the image of the last request.
    pub fn prev_image(&self) -> &AffineSubspace {
        &self.prev_image
    }

    /// Number of requests reduced so far.
    pub fn step(&self) -> usize {
        self.t
    }

    /// Fits the next support into `L`: builds `ρ` fixing the previous image
    /// and moving the new directions of `R_{t-1}(K_t)` into `L`, sets
    /// `R_t = ρ ∘ R_{t-1}` and returns `R_t(K_t)`.
    pub fn reduce_support(&mut self, support: &AffineSubspace) -> Result<AffineSubspace> {
        let d = self.l.ambient_dim();
        if support.ambient_dim() != d {
            return Err(Error::dims(d, support.ambient_dim()));
        }
        if support.dim() > self.k {
            return Err(Error::dims(self.k, support.dim()));
        }
        let moved = self.rotation.apply_subspace(support);
        let fixed = &self.prev_image;
        let mut candidates: Vec<Point> = moved.basis().to_vec();
        candidates.push(moved.base() - fixed.base());
        let mut spanning = fixed.basis().to_vec();
        let fixed_rank = spanning.len();
        for c in &candidates {
            spanning.extend(orthonormalize(&[strip_against(c, &spanning)], REDUCTION_RANK_TOL));
        }
        let source: Vec<Point> = spanning.split_off(fixed_rank);
        let capacity = self.width();
        if fixed_rank + source.len() > capacity {
            return Err(Error::DimensionOverflow { rank: fixed_rank + source.len(), capacity });
        }
        let target = orthonormalize(
            &self.l.basis().iter().map(|e| strip_against(e, fixed.basis())).collect::<Vec<_>>(),
            1e-6,
        );
        let rho = rotation_mapping_subspace(fixed, &source, &target)?;
        self.rotation = rho.compose(&self.rotation);
        self.rotation.stabilize();
        let image = self.rotation.apply_subspace(support);
        self.prev_image = image.clone();
        self.t += 1;
        Ok(image)
    }

    /// Transports a request supported on a subspace of dimension `<= k`.
    pub fn reduce_request(&mut self, f: &ConvexFunction) -> Result<ConvexFunction> {
        let support = f
            .support()
            .ok_or_else(|| Error::InvalidFunction("dimension reduction needs requests supported on subspaces".into()))?
            .clone();
        self.reduce_support(&support)?;
        Ok(f.transport(&self.rotation))
    }

    /// `R_t^{-1}(x)`.
    pub fn pull_back(&self, x: &Point) -> Point {
        self.rotation.apply_inverse(x)
    }

    /// Coordinates of a point of `L` (its first `width` entries).
    pub fn to_l(&self, x: &Point) -> Point {
        x.rows(0, self.width()).into_owned()
    }

    /// Pads a point of `R^{width}` with zeros.
    pub fn from_l(&self, y: &Point) -> Point {
        let mut x = Point::zeros(self.l.ambient_dim());
        x.rows_mut(0, self.width()).copy_from(y);
        x
    }

    /// Rewrites a transported request in `L`'s own coordinates.
    pub fn restrict_to_l(&self, f: &ConvexFunction) -> Result<ConvexFunction> {
        let ConvexFunction::Subspace(s) = f else {
            return Err(Error::InvalidFunction("dimension reduction needs requests supported on subspaces".into()));
        };
        let a = s.support();
        let base = self.to_l(a.base());
        let basis: Vec<Point> = a.basis().iter().map(|b| self.to_l(b)).collect();
        let support = AffineSubspace::new(base, basis)?;
        Ok(SubspaceIndicator::new(support, s.inner().cloned())?.into())
    }
}

fn strip_against(v: &Point, basis: &[Point]) -> Point {
    let mut w = v.clone();
    for _ in 0..2 {
        for q in basis {
            let c = q.dot(&w);
            w.axpy(-c, q, 1.0);
        }
    }
    w
}

/// The instance seen by a chaser running inside `L`, one request at a time.
#[derive(Debug, Clone)]
pub struct ReducedInstance {
    pub instance: Instance,
    /// `R_1, ..., R_T`.
    pub isometries: Vec<AffineIsometry>,
}

/// Reduces a whole instance (start point first, then every request) into
/// `R^{min(2k+1, d)}`.
pub fn reduce_instance(inst: &Instance, k: usize) -> Result<ReducedInstance> {
    if !inst.feasible.is_whole_space() {
        return Err(Error::InvalidMode("dimension reduction runs on unconstrained instances".into()));
    }
    let mut state = init_reduction(&AffineSubspace::point(inst.start.clone()), k, inst.dim())?;
    let start = state.to_l(&state.isometry().apply(&inst.start));
    let mut functions = Vec::with_capacity(inst.len());
    let mut isometries = Vec::with_capacity(inst.len());
    for f in &inst.functions {
        let moved = state.reduce_request(f)?;
        functions.push(state.restrict_to_l(&moved)?);
        isometries.push(state.isometry().clone());
    }
    let instance = Instance { start, feasible: FeasibleSet::WholeSpace, functions, metadata: inst.metadata.clone() };
    Ok(ReducedInstance { instance, isometries })
}

/// Runs a chaser inside `L` and answers with its pulled-back points.
#[derive(Debug, Clone)]
pub struct LiftedChaser {
    base: Chaser,
    state: ReductionState,
    current: Point,
}

impl LiftedChaser {
    /// `kind` is instantiated in `R^{min(2k+1, d)}` without constraints.
    pub fn new(kind: ChaserKind, cfg: SolverConfig, start: Point, k: usize) -> Result<Self> {
        let state = init_reduction(&AffineSubspace::point(start.clone()), k, start.len())?;
        let base_start = state.to_l(&state.isometry().apply(&start));
        let base = Chaser::new(kind, cfg, base_start, FeasibleSet::WholeSpace)?;
        Ok(LiftedChaser { base, state, current: start })
    }

    pub fn for_instance(kind: ChaserKind, inst: &Instance, cfg: SolverConfig, k: usize) -> Result<Self> {
        if !inst.feasible.is_whole_space() {
            return Err(Error::InvalidMode("dimension reduction runs on unconstrained instances".into()));
        }
        LiftedChaser::new(kind, cfg, inst.start.clone(), k)
    }

    pub fn base(&self) -> &Chaser {
        &self.base
    }

    pub fn state(&self) -> &ReductionState {
        &self.state
    }
}

impl OnlinePlayer for LiftedChaser {
    fn current(&self) -> &Point {
        &self.current
    }

    fn respond(&mut self, f: &ConvexFunction) -> Result<Point> {
        let moved = self.state.reduce_request(f)?;
        let local = self.state.restrict_to_l(&moved)?;
        let y = self.base.respond(&local)?;
        self.current = self.state.pull_back(&self.state.from_l(&y));
        Ok(self.current.clone())
    }
}
