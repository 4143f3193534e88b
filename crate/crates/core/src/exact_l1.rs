//! Exact DTW under translation for the L1 norm.
//!
//! Under L1 every pair distance is linear inside each cell of the grid
//! spanned by the coordinate-wise differences `π_i[k] − σ_j[k]`, so the DTW
//! value is a minimum of linear functions there and attains its minimum at
//! a cell corner. Evaluating every corner therefore gives the global
//! optimum. L∞ in the plane reduces to L1 through the linear map
//! `T(x, y) = ((x − y)/2, (x + y)/2)`, which satisfies `‖v‖∞ = ‖T v‖₁`.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::dtw::translated_cost;
use crate::error::{Error, Result};
use crate::geometry::{check_dim, Curve, Norm, Point, Translation};

/// Per-dimension sorted, deduplicated candidate coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateGrid {
    lists: Vec<Vec<f64>>,
}

impl CandidateGrid {
    pub fn dim(&self) -> usize {
        self.lists.len()
    }

    pub fn axis(&self, k: usize) -> &[f64] {
        &self.lists[k]
    }

    /// Number of corners, `Π_k |list_k|`.
    pub fn corner_count(&self) -> usize {
        self.lists.iter().map(Vec::len).product()
    }

    /// The corner with mixed-radix index `idx` (last axis fastest), so
    /// increasing `idx` walks corners in lexicographic order.
    pub fn corner(&self, mut idx: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.lists.len()];
        for (k, list) in self.lists.iter().enumerate().rev() {
            out[k] = list[idx % list.len()];
            idx /= list.len();
        }
        out
    }

    fn from_lists(mut lists: Vec<Vec<f64>>) -> Self {
        for l in &mut lists {
            l.sort_by(f64::total_cmp);
            l.dedup();
        }
        CandidateGrid { lists }
    }
}

/// Result of an exact solver: a minimizing translation and its DTW value.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactSolution {
    pub tau: Translation,
    pub value: f64,
    /// Number of candidate corners evaluated.
    pub candidates: usize,
}

/// `{π_i[k] − σ_j[k]}` for every axis `k`.
pub fn candidate_translations(pi: &Curve, sigma: &Curve) -> Result<CandidateGrid> {
    check_dim(pi.dim(), sigma.dim())?;
    let lists = (0..pi.dim())
        .map(|k| {
            pi.points()
                .flat_map(|a| sigma.points().map(move |b| a[k] - b[k]))
                .collect()
        })
        .collect();
    Ok(CandidateGrid::from_lists(lists))
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Minimum of `f(τ) = dtw(π, σ + τ)` over every corner of `grid`, ties
/// broken toward the lexicographically smallest τ. The parallel reduction is
/// schedule-independent.
fn minimize_over(pi: &Curve, sigma: &Curve, grid: &CandidateGrid, norm: Norm) -> ExactSolution {
    let total = grid.corner_count();
    let better = |a: (f64, Vec<f64>), b: (f64, Vec<f64>)| match a.0.total_cmp(&b.0) {
        Ordering::Less => a,
        Ordering::Greater => b,
        Ordering::Equal => {
            if lex_cmp(&a.1, &b.1) != Ordering::Greater {
                a
            } else {
                b
            }
        }
    };
    let (value, tau) = (0..total)
        .into_par_iter()
        .map(|idx| {
            let tau = grid.corner(idx);
            (translated_cost(pi, sigma, &tau, norm), tau)
        })
        .reduce(|| (f64::INFINITY, vec![f64::INFINITY; grid.dim()]), better);
    ExactSolution {
        tau: Point::new(tau).expect("candidate corners are finite"),
        value,
        candidates: total,
    }
}

/// Exact `min_τ dtw(π, σ + τ)` under L1 in any dimension.
pub fn exact_l1_translation(pi: &Curve, sigma: &Curve) -> Result<ExactSolution> {
    let grid = candidate_translations(pi, sigma)?;
    Ok(minimize_over(pi, sigma, &grid, Norm::L1))
}

/// Distinct coordinate values used by either curve, sorted.
pub fn coordinate_set(pi: &Curve, sigma: &Curve) -> Vec<f64> {
    let mut c: Vec<f64> = pi.flat().iter().chain(sigma.flat()).copied().collect();
    c.sort_by(f64::total_cmp);
    c.dedup();
    c
}

/// Exact L1 solver for curves whose coordinates come from a small set `C`;
/// candidates are restricted to `(C − C)^d`, at most `|C|^{2d}` corners.
pub fn exact_l1_restricted(pi: &Curve, sigma: &Curve, coord_set_size_bound: usize) -> Result<ExactSolution> {
    check_dim(pi.dim(), sigma.dim())?;
    let set = coordinate_set(pi, sigma);
    if set.len() > coord_set_size_bound {
        return Err(Error::CoordinateSetTooLarge {
            found: set.len(),
            bound: coord_set_size_bound,
        });
    }
    let diffs: Vec<f64> = set.iter().flat_map(|x| set.iter().map(move |y| x - y)).collect();
    let grid = CandidateGrid::from_lists(vec![diffs; pi.dim()]);
    Ok(minimize_over(pi, sigma, &grid, Norm::L1))
}

/// `T(x, y) = ((x − y)/2, (x + y)/2)`; maps L∞ distances to L1 distances.
pub fn linf_to_l1(v: [f64; 2]) -> [f64; 2] {
    [(v[0] - v[1]) / 2.0, (v[0] + v[1]) / 2.0]
}

/// Inverse of [`linf_to_l1`].
pub fn l1_to_linf(u: [f64; 2]) -> [f64; 2] {
    [u[0] + u[1], u[1] - u[0]]
}

/// Exact `min_τ dtw(π, σ + τ)` under L∞ in the plane.
pub fn linf_via_rotation(pi: &Curve, sigma: &Curve) -> Result<ExactSolution> {
    check_dim(pi.dim(), sigma.dim())?;
    if pi.dim() != 2 {
        return Err(Error::UnsupportedDimension {
            found: pi.dim(),
            context: "the L-infinity reduction needs d = 2",
        });
    }
    let map = |c: &Curve| c.map_points(|p| linf_to_l1([p[0], p[1]]).to_vec());
    let sol = exact_l1_translation(&map(pi)?, &map(sigma)?)?;
    let t = sol.tau.coords();
    Ok(ExactSolution {
        tau: Point::new(l1_to_linf([t[0], t[1]]).to_vec())?,
        value: sol.value,
        candidates: sol.candidates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dtw::dtw_translated;
    use crate::oracle::gen_random_instance;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn xy(points: &[(f64, f64)]) -> Curve {
        Curve::from_xy(points).unwrap()
    }

    #[test]
    fn candidate_examples() {
        let g = candidate_translations(&xy(&[(0., 0.), (4., 0.)]), &xy(&[(1., 1.)])).unwrap();
        assert_eq!(g.axis(0), &[-1.0, 3.0]);
        assert_eq!(g.axis(1), &[-1.0]);
        let o = xy(&[(0., 0.)]);
        let g = candidate_translations(&o, &o).unwrap();
        assert_eq!((g.axis(0), g.axis(1)), (&[0.0][..], &[0.0][..]));
        let a = Curve::from_flat(1, vec![1.0, 2.0]).unwrap();
        let b = Curve::from_flat(1, vec![0.0, 1.0]).unwrap();
        assert_eq!(candidate_translations(&a, &b).unwrap().axis(0), &[0.0, 1.0, 2.0]);
    }

    #[test]
    fn single_point_sigma_is_median() {
        let s = exact_l1_translation(&xy(&[(0., 0.), (4., 0.)]), &xy(&[(1., 1.)])).unwrap();
        assert_eq!(s.value, 4.0);
        // (−1, −1) and (3, −1) tie; the lexicographically smaller wins.
        assert_eq!(s.tau.coords(), &[-1.0, -1.0]);
    }

    #[test]
    fn identical_and_shifted_curves() {
        let c = xy(&[(0., 0.), (1., 3.), (2., -1.)]);
        let s = exact_l1_translation(&c, &c).unwrap();
        assert_eq!((s.value, s.tau.coords()), (0.0, &[0.0, 0.0][..]));
        let pi = Curve::from_flat(1, vec![0.0, 10.0]).unwrap();
        let shifted = Curve::from_flat(1, vec![3.0, 13.0]).unwrap();
        let s = exact_l1_translation(&pi, &shifted).unwrap();
        assert_eq!((s.value, s.tau.coords()), (0.0, &[-3.0][..]));
    }

    #[test]
    fn restricted_candidates() {
        let pi = Curve::from_flat(1, vec![0.0, 1.0, 1.0]).unwrap();
        let sigma = Curve::from_flat(1, vec![1.0, 0.0]).unwrap();
        let s = exact_l1_restricted(&pi, &sigma, 2).unwrap();
        assert!(s.candidates <= 3);
        assert!([-1.0, 0.0, 1.0].contains(&s.tau.coords()[0]));
        assert_eq!(s.value, exact_l1_translation(&pi, &sigma).unwrap().value);
        let same = exact_l1_restricted(&pi, &pi, 2).unwrap();
        assert_eq!(same.value, 0.0);
        assert!(matches!(
            exact_l1_restricted(&pi, &sigma, 1),
            Err(Error::CoordinateSetTooLarge { found: 2, bound: 1 })
        ));
    }

    #[test]
    fn linf_map_identity() {
        assert_eq!(linf_to_l1([1.0, 1.0]), [0.0, 1.0]);
        assert_eq!(linf_to_l1([2.0, 0.0]), [1.0, 1.0]);
        assert_eq!(l1_to_linf(linf_to_l1([0.75, -3.5])), [0.75, -3.5]);
    }

    #[test]
    fn linf_rejects_other_dimensions() {
        let c = Curve::from_flat(1, vec![0.0]).unwrap();
        assert!(matches!(linf_via_rotation(&c, &c), Err(Error::UnsupportedDimension { .. })));
    }

    #[test]
    fn linf_value_is_attained() {
        for seed in 0..20 {
            let (pi, sigma) = gen_random_instance(4, 3, 2, 0.0, 5.0, seed);
            let s = linf_via_rotation(&pi, &sigma).unwrap();
            let direct = dtw_translated(&pi, &sigma, &s.tau, Norm::LInf).unwrap();
            assert!((direct - s.value).abs() <= 1e-9 * (1.0 + s.value));
        }
    }

    #[test]
    fn cells_are_concave() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for seed in 0..40 {
            let (pi, sigma) = gen_random_instance(4, 3, 2, 0.0, 4.0, seed);
            let grid = candidate_translations(&pi, &sigma).unwrap();
            let (xs, ys) = (grid.axis(0), grid.axis(1));
            let a = rng.gen_range(0..xs.len() - 1);
            let b = rng.gen_range(0..ys.len() - 1);
            let f = |x: f64, y: f64| dtw_translated(&pi, &sigma, &Point::from([x, y]), Norm::L1).unwrap();
            let corners = [
                f(xs[a], ys[b]),
                f(xs[a + 1], ys[b]),
                f(xs[a], ys[b + 1]),
                f(xs[a + 1], ys[b + 1]),
            ];
            let lo = corners.iter().copied().fold(f64::INFINITY, f64::min);
            for _ in 0..10 {
                let x = rng.gen_range(xs[a]..xs[a + 1]);
                let y = rng.gen_range(ys[b]..ys[b + 1]);
                assert!(f(x, y) >= lo - 1e-9);
            }
        }
    }

    proptest! {
        #[test]
        fn beats_every_probe(seed in 0u64..10_000, tx in -6.0f64..6.0, ty in -6.0f64..6.0) {
            let (pi, sigma) = gen_random_instance(3, 3, 2, 0.0, 4.0, seed);
            let s = exact_l1_translation(&pi, &sigma).unwrap();
            let probe = dtw_translated(&pi, &sigma, &Point::from([tx, ty]), Norm::L1).unwrap();
            prop_assert!(s.value <= probe + 1e-9);
        }
    }
}
