//! Brute-force references and instance generators.
//!
//! Nothing here depends on the exact or approximate solvers: the grid
//! search only calls the plain DTW dynamic program, and its error bracket
//! follows from DTW being `(n+m−1)`-Lipschitz in the translation.

use std::cmp::Ordering;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dtw::translated_cost;
use crate::error::{Error, Result};
use crate::geometry::{check_dim, start_translation, Bounds, Curve, Norm, Point, Translation};

/// Work limit (grid points × nm) for [`grid_search_translation`].
pub const GRID_SEARCH_GUARD: u128 = 100_000_000;

/// Outcome of an exhaustive grid search over translations.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchResult {
    pub best_tau: Translation,
    pub best_value: f64,
    pub resolution: f64,
    pub bounds: Bounds,
    /// Largest norm distance from a point of `bounds` to its nearest grid point.
    pub kappa: f64,
    /// `n + m − 1`.
    pub lipschitz: f64,
}

impl GridSearchResult {
    /// Certified lower end of the bracket (clamped at zero).
    pub fn lower(&self) -> f64 {
        (self.best_value - self.lipschitz * self.kappa).max(0.0)
    }

    /// Upper end: a value actually attained at `best_tau`.
    pub fn upper(&self) -> f64 {
        self.best_value
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower() + self.upper())
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.upper() - self.lower())
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lower() <= value && value <= self.upper()
    }
}

/// Distance from any point of a box to the nearest node of a grid with
/// pitch `rho`, i.e. the norm of `(ρ/2, …, ρ/2)`.
pub fn covering_radius(norm: Norm, dim: usize, rho: f64) -> f64 {
    0.5 * rho * norm.unit_cube_diagonal(dim)
}

fn axis_nodes(lo: f64, hi: f64, rho: f64) -> Vec<f64> {
    let steps = ((hi - lo) / rho).ceil() as usize;
    (0..=steps).map(|k| (lo + k as f64 * rho).min(hi)).collect()
}

/// Evaluates `dtw(π, σ + τ)` at every node of the `rho`-grid covering
/// `bounds` (both ends of every axis included) and returns the minimum,
/// ties broken toward the lexicographically smallest τ.
pub fn grid_search_translation(
    pi: &Curve,
    sigma: &Curve,
    norm: Norm,
    bounds: &Bounds,
    rho: f64,
) -> Result<GridSearchResult> {
    check_dim(pi.dim(), sigma.dim())?;
    check_dim(pi.dim(), bounds.dim())?;
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidParameter(format!("grid resolution {rho}")));
    }
    let axes: Vec<Vec<f64>> = bounds
        .lo
        .iter()
        .zip(&bounds.hi)
        .map(|(&lo, &hi)| axis_nodes(lo, hi, rho))
        .collect();
    let nodes: u128 = axes.iter().map(|a| a.len() as u128).product();
    let work = nodes * (pi.len() * sigma.len()) as u128;
    if work > GRID_SEARCH_GUARD {
        return Err(Error::GuardExceeded { work, limit: GRID_SEARCH_GUARD });
    }
    let total = nodes as usize;
    let node = |mut idx: usize| {
        let mut t = vec![0.0; axes.len()];
        for (k, a) in axes.iter().enumerate().rev() {
            t[k] = a[idx % a.len()];
            idx /= a.len();
        }
        t
    };
    // Index order is lexicographic in τ, so the smaller index wins ties.
    let (best_value, best_idx) = (0..total)
        .into_par_iter()
        .map(|idx| (translated_cost(pi, sigma, &node(idx), norm), idx))
        .reduce(
            || (f64::INFINITY, usize::MAX),
            |a, b| match a.0.total_cmp(&b.0) {
                Ordering::Less => a,
                Ordering::Greater => b,
                Ordering::Equal => if a.1 <= b.1 { a } else { b },
            },
        );
    Ok(GridSearchResult {
        best_tau: Point::new(node(best_idx))?,
        best_value,
        resolution: rho,
        bounds: bounds.clone(),
        kappa: covering_radius(norm, pi.dim(), rho),
        lipschitz: (pi.len() + sigma.len() - 1) as f64,
    })
}

/// Default search region: `[−δ_start, δ_start]^d + τstart`, which contains
/// every minimizer.
pub fn default_bounds(pi: &Curve, sigma: &Curve, norm: Norm) -> Result<Bounds> {
    let tau_start = start_translation(pi, sigma)?;
    let delta_start = crate::dtw::dtw_translated(pi, sigma, &tau_start, norm)?;
    Ok(Bounds::centered(tau_start.coords(), delta_start))
}

/// Brackets `min_τ dtw(π, σ + τ)` to a width of at most `rel_width` times
/// the attained value.
///
/// A coarse pass over the default region yields an attained value `U`; every
/// minimizer lies within distance `U` of τstart, so the fine pass only covers
/// that box.
pub fn certified_optimum(pi: &Curve, sigma: &Curve, norm: Norm, rel_width: f64) -> Result<GridSearchResult> {
    let tau_start = start_translation(pi, sigma)?;
    let d = pi.dim();
    let lipschitz = (pi.len() + sigma.len() - 1) as f64;
    let delta_start = crate::dtw::dtw_translated(pi, sigma, &tau_start, norm)?;
    if delta_start == 0.0 {
        return Ok(GridSearchResult {
            best_tau: tau_start.clone(),
            best_value: 0.0,
            resolution: 0.0,
            bounds: Bounds::centered(tau_start.coords(), 0.0),
            kappa: 0.0,
            lipschitz,
        });
    }
    let coarse_steps = if d <= 2 { 64.0 } else { 12.0 };
    let coarse = grid_search_translation(
        pi,
        sigma,
        norm,
        &Bounds::centered(tau_start.coords(), delta_start),
        2.0 * delta_start / coarse_steps,
    )?;
    let upper = coarse.best_value;
    if upper == 0.0 {
        return Ok(GridSearchResult { kappa: 0.0, ..coarse });
    }
    // lipschitz · covering_radius(ρ) = rel_width · upper
    let rho = rel_width * upper / (lipschitz * covering_radius(norm, d, 1.0));
    let fine = grid_search_translation(pi, sigma, norm, &Bounds::centered(tau_start.coords(), upper), rho)?;
    Ok(if fine.best_value <= coarse.best_value { fine } else { GridSearchResult { resolution: rho, kappa: fine.kappa, ..coarse } })
}

/// Prepends `2n` copies of `r = (5nb, 0)` to both curves, where `n` is the
/// longer curve length. The gadget's DTW under translation equals the plain
/// DTW of the inputs.
pub fn reduction_gadget(pi: &Curve, sigma: &Curve, b: f64, norm: Norm) -> Result<(Curve, Curve)> {
    check_dim(pi.dim(), sigma.dim())?;
    if pi.dim() != 2 {
        return Err(Error::UnsupportedDimension { found: pi.dim(), context: "the gadget is planar" });
    }
    if !(b > 0.0) {
        return Err(Error::InvalidParameter(format!("radius {b}")));
    }
    if pi.points().chain(sigma.points()).any(|p| norm.length(p) > b) {
        return Err(Error::ContainmentViolated(b));
    }
    let n = pi.len().max(sigma.len());
    let r = 5.0 * n as f64 * b;
    let prefix = Curve::from_flat(2, [r, 0.0].repeat(2 * n))?;
    Ok((prefix.concat(pi)?, prefix.concat(sigma)?))
}

/// Regular `n`-gon on the unit circle (starting at angle 0) against a
/// `3n`-vertex spiral inside `[0, eps_geom]²`.
pub fn gen_ngon_instance(n: usize, eps_geom: f64) -> Result<(Curve, Curve)> {
    if n < 3 {
        return Err(Error::InvalidParameter("an n-gon needs n >= 3".into()));
    }
    if !(eps_geom > 0.0 && eps_geom.is_finite()) {
        return Err(Error::InvalidParameter(format!("box size {eps_geom}")));
    }
    let pi: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let a = 2.0 * PI * k as f64 / n as f64;
            (a.cos(), a.sin())
        })
        .collect();
    let total = 3 * n;
    let half = eps_geom / 2.0;
    let sigma: Vec<(f64, f64)> = (0..total)
        .map(|t| {
            let r = half * (t + 1) as f64 / total as f64;
            let a = 4.0 * PI * t as f64 / total as f64;
            ((half + r * a.cos()).clamp(0.0, eps_geom), (half + r * a.sin()).clamp(0.0, eps_geom))
        })
        .collect();
    Ok((Curve::from_xy(&pi)?, Curve::from_xy(&sigma)?))
}

/// Seeded uniform points in `[lo, hi]^dim`.
pub fn gen_random_instance(n: usize, m: usize, dim: usize, lo: f64, hi: f64, seed: u64) -> (Curve, Curve) {
    assert!(n > 0 && m > 0 && dim > 0 && lo < hi);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut curve = |len: usize| {
        let coords = (0..len * dim).map(|_| rng.gen_range(lo..hi)).collect();
        Curve::from_flat(dim, coords).expect("generated coordinates are finite")
    };
    let pi = curve(n);
    let sigma = curve(m);
    (pi, sigma)
}

/// Seeded random curves whose coordinates come from `values`.
pub fn gen_coordinate_set_instance(n: usize, m: usize, dim: usize, values: &[f64], seed: u64) -> (Curve, Curve) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut curve = |len: usize| {
        let coords = (0..len * dim).map(|_| values[rng.gen_range(0..values.len())]).collect();
        Curve::from_flat(dim, coords).expect("finite")
    };
    let pi = curve(n);
    let sigma = curve(m);
    (pi, sigma)
}
