//! Classic DTW dynamic program and its grid-DAG formulation.
//!
//! Every DP in the crate goes through [`fill_rows`]: row-major order with
//! `D[i][j] = w[i][j] + min(D[i-1][j], D[i][j-1], D[i-1][j-1])`. Sharing the
//! kernel keeps `dtw`, `grid_shortest_path` and the dynamic engines
//! bit-identical on the same weights.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{check_dim, Curve, Norm, Translation};

/// A monotone alignment of two index sequences, stored 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Traversal {
    steps: Vec<(usize, usize)>,
}

impl Traversal {
    /// Wraps 1-based steps; call [`Traversal::validate`] before trusting it.
    pub fn from_steps(steps: Vec<(usize, usize)>) -> Self {
        Traversal { steps }
    }

    pub fn steps(&self) -> &[(usize, usize)] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Checks the traversal shape for curves of lengths `n` and `m`.
    pub fn validate(&self, n: usize, m: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidTraversal(msg));
        match (self.steps.first(), self.steps.last()) {
            (Some(&(1, 1)), Some(&last)) if last == (n, m) => {}
            (None, _) => return bad("empty".into()),
            (Some(&first), Some(&last)) => {
                return bad(format!("runs from {first:?} to {last:?}, expected (1, 1) to ({n}, {m})"))
            }
            _ => unreachable!(),
        }
        for w in self.steps.windows(2) {
            let ((i, j), (k, l)) = (w[0], w[1]);
            let ok = (k == i + 1 && l == j) || (k == i && l == j + 1) || (k == i + 1 && l == j + 1);
            if !ok {
                return bad(format!("illegal step {:?} -> {:?}", w[0], w[1]));
            }
        }
        Ok(())
    }
}

/// Result of [`dtw`]: the optimal cost and a traversal achieving it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtwResult {
    pub cost: f64,
    pub traversal: Traversal,
}

/// Node-weighted n×m grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightGrid {
    n: usize,
    m: usize,
    weights: Vec<f64>,
}

impl WeightGrid {
    pub fn new(n: usize, m: usize, weights: Vec<f64>) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidParameter("grid sides must be positive".into()));
        }
        if weights.len() != n * m {
            return Err(Error::InvalidParameter(format!(
                "{} weights for a {n}x{m} grid",
                weights.len()
            )));
        }
        if weights.iter().any(|w| w.is_nan() || *w < 0.0) {
            return Err(Error::InvalidParameter("weights must be nonnegative".into()));
        }
        Ok(WeightGrid { n, m, weights })
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        assert!(n > 0 && m > 0, "grid sides must be positive");
        WeightGrid { n, m, weights: vec![0.0; n * m] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Zero-based access.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.m + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, w: f64) {
        debug_assert!(w >= 0.0);
        self.weights[i * self.m + j] = w;
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Fills rows `from_row..n` of the DP `table` (row-major, n×m) from the
/// weights. Rows before `from_row` must already hold valid values.
pub(crate) fn fill_rows(weights: &[f64], n: usize, m: usize, table: &mut [f64], from_row: usize) {
    debug_assert_eq!(weights.len(), n * m);
    debug_assert_eq!(table.len(), n * m);
    for i in from_row..n {
        let row = i * m;
        for j in 0..m {
            let w = weights[row + j];
            let best = if i == 0 && j == 0 {
                0.0
            } else {
                let up = if i > 0 { table[row - m + j] } else { f64::INFINITY };
                let left = if j > 0 { table[row + j - 1] } else { f64::INFINITY };
                let diag = if i > 0 && j > 0 { table[row - m + j - 1] } else { f64::INFINITY };
                up.min(left).min(diag)
            };
            table[row + j] = w + best;
        }
    }
}

fn pair_weights(pi: &Curve, sigma: &Curve, norm: Norm) -> Vec<f64> {
    let m = sigma.len();
    let mut w = Vec::with_capacity(pi.len() * m);
    for a in pi.points() {
        w.extend(sigma.points().map(|b| norm.dist(a, b)));
    }
    w
}

/// Recovers an optimal traversal from a filled DP table. Ties prefer the
/// diagonal, then `(i-1, j)`, then `(i, j-1)`.
fn backtrack(table: &[f64], n: usize, m: usize) -> Traversal {
    let mut steps = Vec::with_capacity(n + m - 1);
    let (mut i, mut j) = (n - 1, m - 1);
    steps.push((i + 1, j + 1));
    while i > 0 || j > 0 {
        let at = |a: usize, b: usize| table[a * m + b];
        (i, j) = if i == 0 {
            (0, j - 1)
        } else if j == 0 {
            (i - 1, 0)
        } else {
            let diag = at(i - 1, j - 1);
            let up = at(i - 1, j);
            let left = at(i, j - 1);
            if diag <= up && diag <= left {
                (i - 1, j - 1)
            } else if up <= left {
                (i - 1, j)
            } else {
                (i, j - 1)
            }
        };
        steps.push((i + 1, j + 1));
    }
    steps.reverse();
    Traversal { steps }
}

/// DTW distance with an optimal traversal. O(nm) time and space.
pub fn dtw(pi: &Curve, sigma: &Curve, norm: Norm) -> Result<DtwResult> {
    check_dim(pi.dim(), sigma.dim())?;
    let (n, m) = (pi.len(), sigma.len());
    let weights = pair_weights(pi, sigma, norm);
    let mut table = vec![0.0; n * m];
    fill_rows(&weights, n, m, &mut table, 0);
    Ok(DtwResult {
        cost: table[n * m - 1],
        traversal: backtrack(&table, n, m),
    })
}

/// DTW cost only, in O(m) memory. Bit-identical to [`dtw`].
pub fn dtw_cost(pi: &Curve, sigma: &Curve, norm: Norm) -> Result<f64> {
    check_dim(pi.dim(), sigma.dim())?;
    Ok(cost_kernel(pi, sigma.flat(), sigma.dim(), norm, f64::INFINITY))
}

/// `dtw(π, σ + τ)` without materializing the translated curve object.
pub fn dtw_translated(pi: &Curve, sigma: &Curve, tau: &Translation, norm: Norm) -> Result<f64> {
    check_dim(pi.dim(), sigma.dim())?;
    check_dim(pi.dim(), tau.dim())?;
    Ok(translated_cost(pi, sigma, tau.coords(), norm))
}

/// Unchecked hot-path variant of [`dtw_translated`]; dimensions must agree.
pub(crate) fn translated_cost(pi: &Curve, sigma: &Curve, tau: &[f64], norm: Norm) -> f64 {
    translated_cost_within(pi, sigma, tau, norm, f64::INFINITY)
}

/// Like [`translated_cost`], but gives up with `INFINITY` as soon as the
/// cost is certain to exceed `limit`. Otherwise bit-identical.
pub(crate) fn translated_cost_within(pi: &Curve, sigma: &Curve, tau: &[f64], norm: Norm, limit: f64) -> f64 {
    let d = sigma.dim();
    let shifted: Vec<f64> = sigma
        .flat()
        .chunks_exact(d)
        .flat_map(|p| p.iter().zip(tau).map(|(x, t)| x + t))
        .collect();
    cost_kernel(pi, &shifted, d, norm, limit)
}

fn cost_kernel(pi: &Curve, sigma_flat: &[f64], d: usize, norm: Norm, limit: f64) -> f64 {
    let m = sigma_flat.len() / d;
    let mut prev = vec![f64::INFINITY; m];
    let mut cur = vec![0.0; m];
    for (i, a) in pi.points().enumerate() {
        for j in 0..m {
            let w = norm.dist(a, &sigma_flat[j * d..(j + 1) * d]);
            let best = if i == 0 && j == 0 {
                0.0
            } else {
                let up = prev[j];
                let left = if j > 0 { cur[j - 1] } else { f64::INFINITY };
                let diag = if j > 0 { prev[j - 1] } else { f64::INFINITY };
                up.min(left).min(diag)
            };
            cur[j] = w + best;
        }
        // every path to the last row crosses this one
        if cur.iter().all(|&c| c > limit) {
            return f64::INFINITY;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m - 1]
}

/// Sum of pair distances along `t`.
pub fn traversal_cost(pi: &Curve, sigma: &Curve, t: &Traversal, norm: Norm) -> Result<f64> {
    check_dim(pi.dim(), sigma.dim())?;
    t.validate(pi.len(), sigma.len())?;
    Ok(t.steps()
        .iter()
        .map(|&(i, j)| norm.dist(pi.point(i - 1), sigma.point(j - 1)))
        .sum())
}

/// Node weights `w[i][j] = ‖π_i − (σ_j + τ)‖`.
pub fn build_weight_grid(pi: &Curve, sigma: &Curve, norm: Norm, tau: &Translation) -> Result<WeightGrid> {
    check_dim(pi.dim(), sigma.dim())?;
    check_dim(pi.dim(), tau.dim())?;
    let shifted = crate::geometry::translate(sigma, tau)?;
    Ok(WeightGrid {
        n: pi.len(),
        m: sigma.len(),
        weights: pair_weights(pi, &shifted, norm),
    })
}

/// Node-weighted shortest (1,1)→(n,m) distance over right/up/diagonal edges.
/// Both endpoint weights are included.
pub fn grid_shortest_path(g: &WeightGrid) -> f64 {
    let mut table = vec![0.0; g.n * g.m];
    fill_rows(&g.weights, g.n, g.m, &mut table, 0);
    table[g.n * g.m - 1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{translate, Point};
    use proptest::prelude::*;

    /// Enumerates every traversal; exponential, test-only.
    fn brute_force(pi: &Curve, sigma: &Curve, norm: Norm) -> f64 {
        fn go(pi: &Curve, sigma: &Curve, norm: Norm, i: usize, j: usize, acc: f64, best: &mut f64) {
            let acc = acc + norm.dist(pi.point(i), sigma.point(j));
            if i + 1 == pi.len() && j + 1 == sigma.len() {
                *best = best.min(acc);
                return;
            }
            if i + 1 < pi.len() {
                go(pi, sigma, norm, i + 1, j, acc, best);
            }
            if j + 1 < sigma.len() {
                go(pi, sigma, norm, i, j + 1, acc, best);
            }
            if i + 1 < pi.len() && j + 1 < sigma.len() {
                go(pi, sigma, norm, i + 1, j + 1, acc, best);
            }
        }
        let mut best = f64::INFINITY;
        go(pi, sigma, norm, 0, 0, 0.0, &mut best);
        best
    }

    fn xy(points: &[(f64, f64)]) -> Curve {
        Curve::from_xy(points).unwrap()
    }

    #[test]
    fn single_traversal_example() {
        let r = dtw(&xy(&[(0., 0.), (2., 0.)]), &xy(&[(0., 0.)]), Norm::L2).unwrap();
        assert_eq!(r.cost, 2.0);
        assert_eq!(r.traversal.steps(), &[(1, 1), (2, 1)]);
    }

    #[test]
    fn identical_curves_cost_zero() {
        let c = xy(&[(0., 1.), (3., -2.), (7., 7.), (0.5, 0.25)]);
        let r = dtw(&c, &c, Norm::L2).unwrap();
        assert_eq!(r.cost, 0.0);
        assert_eq!(r.traversal.steps(), &[(1, 1), (2, 2), (3, 3), (4, 4)]);
    }

    #[test]
    fn three_by_two_matches_enumeration() {
        let pi = xy(&[(0., 0.), (1., 0.), (2., 0.)]);
        let sigma = xy(&[(0., 0.), (2., 0.)]);
        let oracle = brute_force(&pi, &sigma, Norm::L2);
        assert_eq!(oracle, 1.0);
        assert_eq!(dtw(&pi, &sigma, Norm::L2).unwrap().cost, oracle);
        let g = build_weight_grid(&pi, &sigma, Norm::L2, &Point::zero(2)).unwrap();
        assert_eq!(grid_shortest_path(&g), oracle);
    }

    #[test]
    fn traversal_cost_examples() {
        let pi = xy(&[(0., 0.), (2., 0.)]);
        let sigma = xy(&[(0., 0.)]);
        let t = Traversal::from_steps(vec![(1, 1), (2, 1)]);
        assert_eq!(traversal_cost(&pi, &sigma, &t, Norm::L2).unwrap(), 2.0);
        let c = xy(&[(1., 1.), (2., 2.)]);
        let diag = Traversal::from_steps(vec![(1, 1), (2, 2)]);
        assert_eq!(traversal_cost(&c, &c, &diag, Norm::L1).unwrap(), 0.0);
    }

    #[test]
    fn invalid_traversals_rejected() {
        let c = xy(&[(0., 0.), (1., 0.), (2., 0.)]);
        let cases = [
            vec![],
            vec![(1, 1), (3, 3)],
            vec![(1, 1), (2, 2)],
            vec![(2, 2), (3, 3)],
            vec![(1, 1), (2, 1), (1, 2), (3, 3)],
        ];
        for steps in cases {
            let t = Traversal::from_steps(steps);
            assert!(matches!(
                traversal_cost(&c, &c, &t, Norm::L1),
                Err(Error::InvalidTraversal(_))
            ));
        }
    }

    #[test]
    fn weight_grid_examples() {
        let origin = xy(&[(0., 0.)]);
        let g = build_weight_grid(&origin, &origin, Norm::L2, &Point::zero(2)).unwrap();
        assert_eq!((g.n(), g.m(), g.get(0, 0)), (1, 1, 0.0));
        let g = build_weight_grid(&origin, &xy(&[(1., 0.)]), Norm::L2, &Point::from([-1., 0.])).unwrap();
        assert_eq!(g.get(0, 0), 0.0);
        let g = build_weight_grid(&xy(&[(0., 0.), (3., 4.)]), &origin, Norm::L2, &Point::zero(2)).unwrap();
        assert_eq!(g.weights(), &[0.0, 5.0]);
    }

    #[test]
    fn grid_examples() {
        assert_eq!(grid_shortest_path(&WeightGrid::new(1, 1, vec![7.0]).unwrap()), 7.0);
        assert_eq!(grid_shortest_path(&WeightGrid::zeros(5, 3)), 0.0);
        assert!(WeightGrid::new(1, 2, vec![1.0, -1.0]).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let a = xy(&[(0., 0.)]);
        let b = Curve::from_flat(1, vec![0.0]).unwrap();
        assert!(matches!(dtw(&a, &b, Norm::L1), Err(Error::DimensionMismatch { .. })));
    }

    fn curve_strategy(max_len: usize) -> impl Strategy<Value = Curve> {
        prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..=max_len)
            .prop_map(|pts| Curve::from_xy(&pts).unwrap())
    }

    proptest! {
        #[test]
        fn dp_matches_enumeration(pi in curve_strategy(5), sigma in curve_strategy(5)) {
            for norm in [Norm::L1, Norm::L2, Norm::LInf] {
                let r = dtw(&pi, &sigma, norm).unwrap();
                let oracle = brute_force(&pi, &sigma, norm);
                prop_assert!((r.cost - oracle).abs() <= 1e-9 * (1.0 + oracle));
                prop_assert_eq!(dtw_cost(&pi, &sigma, norm).unwrap(), r.cost);
            }
        }

        #[test]
        fn witness_is_consistent(pi in curve_strategy(12), sigma in curve_strategy(12)) {
            let r = dtw(&pi, &sigma, Norm::L2).unwrap();
            let (n, m) = (pi.len(), sigma.len());
            r.traversal.validate(n, m).unwrap();
            prop_assert!(r.traversal.len() >= n.max(m) && r.traversal.len() < n + m);
            let c = traversal_cost(&pi, &sigma, &r.traversal, Norm::L2).unwrap();
            prop_assert!((c - r.cost).abs() <= 1e-12 * r.cost.max(1.0));
        }

        #[test]
        fn translated_cost_matches_translate(
            pi in curve_strategy(8),
            sigma in curve_strategy(8),
            t in (-3.0f64..3.0, -3.0f64..3.0),
        ) {
            let tau = Point::from([t.0, t.1]);
            let direct = dtw_translated(&pi, &sigma, &tau, Norm::L2).unwrap();
            let via = dtw(&pi, &translate(&sigma, &tau).unwrap(), Norm::L2).unwrap().cost;
            prop_assert_eq!(direct, via);
        }

        #[test]
        fn symmetric(pi in curve_strategy(8), sigma in curve_strategy(8)) {
            let a = dtw_cost(&pi, &sigma, Norm::L1).unwrap();
            let b = dtw_cost(&sigma, &pi, Norm::L1).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a));
        }
    }
}
