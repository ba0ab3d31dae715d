//! Random instances for property suites and tests.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::functions::{ConvexFunction, PowerNorm, Quadratic, SubspaceIndicator};
use crate::geometry::{orthonormalize, project_set, AffineSubspace, FeasibleSet, Halfspace, Point, RANK_TOL};
use crate::instance::Instance;
use crate::Result;

/// Which feasible set a random instance lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RandomDomain {
    Whole,
    /// The unit ball around the origin.
    UnitBall,
    /// Between 1 and `d + 1` random halfspaces, all containing the origin.
    Halfspaces,
}

fn gaussian<R: Rng>(rng: &mut R, d: usize) -> Point {
    Point::from_fn(d, |_, _| rng.sample(StandardNormal))
}

fn uniform<R: Rng>(rng: &mut R, d: usize, r: f64) -> Point {
    Point::from_fn(d, |_, _| rng.random_range(-r..=r))
}

/// Random orthogonal `d x d` matrix.
pub fn random_orthogonal<R: Rng>(rng: &mut R, d: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample(StandardNormal));
    g.qr().q()
}

/// Positive definite matrix with smallest eigenvalue `alpha` and, when
/// `d >= 2`, largest eigenvalue `kappa * alpha`.
pub fn random_spd<R: Rng>(rng: &mut R, d: usize, alpha: f64, kappa: f64) -> DMatrix<f64> {
    let q = random_orthogonal(rng, d);
    let eig: Vec<f64> = (0..d)
        .map(|i| match i {
            0 => alpha,
            i if i == d - 1 => kappa * alpha,
            _ => rng.random_range(alpha..=kappa * alpha),
        })
        .collect();
    let h = &q * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(eig)) * q.transpose();
    (&h + h.transpose()) * 0.5
}

/// Quadratic with condition number `kappa`, minimizer in `[-3, 3]^d`.
pub fn random_quadratic<R: Rng>(rng: &mut R, d: usize, kappa: f64) -> Quadratic {
    let alpha = rng.random_range(0.5..=2.0);
    let h = random_spd(rng, d, alpha, kappa);
    Quadratic::new(h, uniform(rng, d, 3.0), 0.0).expect("random quadratic is positive definite")
}

fn domain<R: Rng>(rng: &mut R, d: usize, domain: RandomDomain) -> FeasibleSet {
    match domain {
        RandomDomain::Whole => FeasibleSet::WholeSpace,
        RandomDomain::UnitBall => FeasibleSet::ball(Point::zeros(d), 1.0).expect("unit ball"),
        RandomDomain::Halfspaces => {
            let m = rng.random_range(1..=d + 1);
            let hs = (0..m)
                .map(|_| {
                    let n = gaussian(rng, d);
                    Halfspace::new(&n / n.norm(), rng.random_range(0.3..=1.0)).expect("unit normal")
                })
                .collect();
            FeasibleSet::halfspaces(hs, Point::zeros(d)).expect("origin is feasible")
        }
    }
}

fn start_in<R: Rng>(rng: &mut R, k: &FeasibleSet, d: usize) -> Result<Point> {
    project_set(&uniform(rng, d, 3.0), k, 1e-12)
}

/// `t` random quadratics with condition number `kappa` in `R^d`.
pub fn random_quadratic_instance<R: Rng>(rng: &mut R, d: usize, t: usize, kappa: f64, dom: RandomDomain) -> Result<Instance> {
    let k = domain(rng, d, dom);
    let start = start_in(rng, &k, d)?;
    let functions = (0..t).map(|_| random_quadratic(rng, d, kappa).into()).collect();
    Instance::new(start, k, functions)
}

/// `t` random `c |x - x*|^gamma` requests on the whole space.
pub fn random_powernorm_instance<R: Rng>(rng: &mut R, d: usize, t: usize, gamma: f64, kappa: f64) -> Result<Instance> {
    let start = uniform(rng, d, 3.0);
    let functions = (0..t)
        .map(|_| PowerNorm::new(rng.random_range(0.2..=2.0), gamma, uniform(rng, d, 3.0), kappa).map(ConvexFunction::from))
        .collect::<Result<Vec<_>>>()?;
    Instance::new(start, FeasibleSet::WholeSpace, functions)
}

/// Random `k`-dimensional affine subspace of `R^d` with base in `[-3, 3]^d`.
pub fn random_subspace<R: Rng>(rng: &mut R, d: usize, k: usize) -> AffineSubspace {
    loop {
        let raw: Vec<Point> = (0..k).map(|_| gaussian(rng, d)).collect();
        let basis = orthonormalize(&raw, RANK_TOL);
        if basis.len() == k {
            return AffineSubspace::new(uniform(rng, d, 3.0), basis).expect("orthonormal basis");
        }
    }
}

/// Requests supported on random `k`-dimensional subspaces, each carrying a
/// random quadratic with condition number `kappa` inside the subspace.
pub fn random_subspace_instance<R: Rng>(rng: &mut R, d: usize, t: usize, k: usize, kappa: f64) -> Result<Instance> {
    let start = uniform(rng, d, 3.0);
    let functions = (0..t)
        .map(|_| {
            let support = random_subspace(rng, d, k);
            let inner = (k > 0).then(|| random_quadratic(rng, k, kappa));
            SubspaceIndicator::new(support, inner).map(ConvexFunction::from)
        })
        .collect::<Result<Vec<_>>>()?;
    Instance::new(start, FeasibleSet::WholeSpace, functions)
}

/// `y_0 = start, y_1, ..., y_T` with every `y_t` drawn from a box of half
/// width `radius` around the start and projected onto the feasible set.
pub fn random_feasible_trajectory<R: Rng>(rng: &mut R, inst: &Instance, radius: f64) -> Result<Vec<Point>> {
    let mut traj = vec![inst.start.clone()];
    for _ in 0..inst.len() {
        let p = &inst.start + uniform(rng, inst.dim(), radius);
        traj.push(project_set(&p, &inst.feasible, 1e-12)?);
    }
    Ok(traj)
}
