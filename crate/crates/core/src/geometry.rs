//! Points, curves, norms and translations.
//!
//! Curves store their coordinates in one flat buffer; `Curve::point(i)`
//! hands out a borrowed slice so the DTW inner loops never allocate.
//! Snapping to a lattice produces a [`LatticeCurve`] whose coordinates are
//! exact integer multiples of the resolution.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An Lp norm with `p` in `[1, ∞]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Norm {
    L1,
    L2,
    /// General `p >= 1`, finite.
    Lp(f64),
    LInf,
}

impl Norm {
    /// Builds a norm from its exponent. `f64::INFINITY` selects L∞.
    pub fn from_p(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidNorm(p));
        }
        Ok(if p == 1.0 {
            Norm::L1
        } else if p == 2.0 {
            Norm::L2
        } else if p.is_infinite() {
            Norm::LInf
        } else {
            Norm::Lp(p)
        })
    }

    pub fn p(&self) -> f64 {
        match *self {
            Norm::L1 => 1.0,
            Norm::L2 => 2.0,
            Norm::Lp(p) => p,
            Norm::LInf => f64::INFINITY,
        }
    }

    /// Norm of the vector `(1, 1, ..., 1)` in `dim` dimensions, i.e. the
    /// largest ratio `‖v‖ / ‖v‖∞`.
    pub fn unit_cube_diagonal(&self, dim: usize) -> f64 {
        let d = dim as f64;
        match *self {
            Norm::L1 => d,
            Norm::L2 => d.sqrt(),
            Norm::Lp(p) => d.powf(1.0 / p),
            Norm::LInf => 1.0,
        }
    }

    /// `‖a − b‖`. Callers guarantee equal lengths.
    #[inline]
    pub fn dist(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        match *self {
            Norm::L1 => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
            Norm::L2 => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            Norm::Lp(p) => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y).abs().powf(p))
                .sum::<f64>()
                .powf(1.0 / p),
            Norm::LInf => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max),
        }
    }

    /// `‖v‖`.
    #[inline]
    pub fn length(&self, v: &[f64]) -> f64 {
        match *self {
            Norm::L1 => v.iter().map(|x| x.abs()).sum(),
            Norm::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            Norm::Lp(p) => v
                .iter()
                .map(|x| x.abs().powf(p))
                .sum::<f64>()
                .powf(1.0 / p),
            Norm::LInf => v.iter().map(|x| x.abs()).fold(0.0, f64::max),
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Norm::L1 => write!(f, "1"),
            Norm::L2 => write!(f, "2"),
            Norm::Lp(p) => write!(f, "{p}"),
            Norm::LInf => write!(f, "inf"),
        }
    }
}

/// A point in R^d with finite coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidParameter("point needs at least one coordinate".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Point(coords))
    }

    pub fn zero(dim: usize) -> Self {
        Point(vec![0.0; dim])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl From<[f64; 2]> for Point {
    fn from(c: [f64; 2]) -> Self {
        Point(c.to_vec())
    }
}

/// A translation vector applied to every point of a curve.
pub type Translation = Point;

/// `‖a − b‖` with a dimension check.
pub fn distance(a: &Point, b: &Point, norm: Norm) -> Result<f64> {
    check_dim(a.dim(), b.dim())?;
    Ok(norm.dist(a.coords(), b.coords()))
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// A nonempty sequence of points of uniform dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    dim: usize,
    coords: Vec<f64>,
}

impl Curve {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        let first = points.first().ok_or(Error::EmptyCurve)?;
        let dim = first.dim();
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in &points {
            check_dim(dim, p.dim())?;
            coords.extend_from_slice(p.coords());
        }
        Ok(Curve { dim, coords })
    }

    /// Builds a curve from a flat row-major coordinate buffer.
    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if coords.is_empty() {
            return Err(Error::EmptyCurve);
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::InvalidParameter(format!(
                "{} coordinates do not split into points of dimension {dim}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Curve { dim, coords })
    }

    /// Convenience constructor for planar curves.
    pub fn from_xy(points: &[(f64, f64)]) -> Result<Self> {
        Curve::from_flat(2, points.iter().flat_map(|&(x, y)| [x, y]).collect())
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn flat(&self) -> &[f64] {
        &self.coords
    }

    /// Applies `f` coordinate-wise to every point.
    pub fn map_points(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Result<Curve> {
        let mut coords = Vec::with_capacity(self.coords.len());
        let mut dim = None;
        for p in self.points() {
            let q = f(p);
            match dim {
                None => dim = Some(q.len()),
                Some(d) => check_dim(d, q.len())?,
            }
            coords.extend(q);
        }
        Curve::from_flat(dim.unwrap_or(self.dim), coords)
    }

    /// Concatenation `self ∘ other`.
    pub fn concat(&self, other: &Curve) -> Result<Curve> {
        check_dim(self.dim, other.dim)?;
        let mut coords = self.coords.clone();
        coords.extend_from_slice(&other.coords);
        Ok(Curve { dim: self.dim, coords })
    }
}

/// `c + t`, pointwise.
pub fn translate(c: &Curve, t: &Translation) -> Result<Curve> {
    check_dim(c.dim(), t.dim())?;
    let tv = t.coords();
    let coords = c
        .points()
        .flat_map(|p| p.iter().zip(tv).map(|(x, d)| x + d))
        .collect();
    Ok(Curve { dim: c.dim, coords })
}

/// `τstart = π₁ − σ₁`, the translation aligning the first vertices.
pub fn start_translation(pi: &Curve, sigma: &Curve) -> Result<Translation> {
    check_dim(pi.dim(), sigma.dim())?;
    Ok(Point(
        pi.point(0)
            .iter()
            .zip(sigma.point(0))
            .map(|(a, b)| a - b)
            .collect(),
    ))
}

/// Nearest lattice index of `x` at the given resolution; halfway ties go
/// toward +∞.
#[inline]
pub fn snap_index(x: f64, resolution: f64) -> i64 {
    (x / resolution + 0.5).floor() as i64
}

/// A curve whose coordinates are integer multiples of `resolution`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeCurve {
    resolution: f64,
    dim: usize,
    coords: Vec<i64>,
}

impl LatticeCurve {
    pub fn snap(c: &Curve, resolution: f64) -> Self {
        assert!(resolution > 0.0 && resolution.is_finite(), "resolution must be positive");
        LatticeCurve {
            resolution,
            dim: c.dim(),
            coords: c.flat().iter().map(|&x| snap_index(x, resolution)).collect(),
        }
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[i64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn to_curve(&self) -> Curve {
        Curve {
            dim: self.dim,
            coords: self.coords.iter().map(|&k| k as f64 * self.resolution).collect(),
        }
    }
}

/// Replaces every coordinate with the nearest multiple of `resolution`.
pub fn snap_curve(c: &Curve, resolution: f64) -> Curve {
    LatticeCurve::snap(c, resolution).to_curve()
}

/// Largest `ε' ≤ eps` such that `n / ε'` is an integral power of two.
pub fn round_epsilon(n: usize, eps: f64) -> f64 {
    assert!(n >= 1, "n must be positive");
    assert!(eps > 0.0 && eps <= 1.0, "eps must lie in (0, 1]");
    let nf = n as f64;
    let mut k = (nf / eps).log2().ceil().max(0.0) as i32;
    // log2 may be off by one near exact powers of two.
    while k > 0 && nf / 2f64.powi(k - 1) <= eps {
        k -= 1;
    }
    while nf / 2f64.powi(k) > eps {
        k += 1;
    }
    nf / 2f64.powi(k)
}

/// Axis-aligned box `[lo, hi]` in R^d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Bounds {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        check_dim(lo.len(), hi.len())?;
        if lo.iter().zip(&hi).any(|(a, b)| !(a <= b)) {
            return Err(Error::InvalidParameter("bounds need lo <= hi".into()));
        }
        Ok(Bounds { lo, hi })
    }

    /// `[c − r, c + r]^d`.
    pub fn centered(center: &[f64], radius: f64) -> Self {
        Bounds {
            lo: center.iter().map(|c| c - radius).collect(),
            hi: center.iter().map(|c| c + radius).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(x, (lo, hi))| lo <= x && x <= hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(c: &[f64]) -> Point {
        Point::new(c.to_vec()).unwrap()
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance(&pt(&[0., 0.]), &pt(&[0., 0.]), Norm::L2).unwrap(), 0.0);
        assert_eq!(distance(&pt(&[0., 0.]), &pt(&[3., 4.]), Norm::L2).unwrap(), 5.0);
        assert_eq!(distance(&pt(&[1., 2.]), &pt(&[4., 6.]), Norm::L1).unwrap(), 7.0);
        assert_eq!(distance(&pt(&[1., 2.]), &pt(&[4., 6.]), Norm::LInf).unwrap(), 4.0);
        assert!(matches!(
            distance(&pt(&[1.]), &pt(&[1., 2.]), Norm::L1),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn general_p_matches_special_cases() {
        let a = [0.3, -1.2];
        let b = [2.0, 0.5];
        let l2 = Norm::L2.dist(&a, &b);
        assert!((Norm::Lp(2.0 + 1e-12).dist(&a, &b) - l2).abs() < 1e-9);
        assert!(Norm::Lp(50.0).dist(&a, &b) >= Norm::LInf.dist(&a, &b));
        assert!(Norm::from_p(0.5).is_err());
        assert_eq!(Norm::from_p(f64::INFINITY).unwrap(), Norm::LInf);
    }

    #[test]
    fn translate_examples() {
        let c = Curve::from_xy(&[(0., 0.), (1., 0.)]).unwrap();
        let t = translate(&c, &pt(&[2., 3.])).unwrap();
        assert_eq!(t, Curve::from_xy(&[(2., 3.), (3., 3.)]).unwrap());
        assert_eq!(translate(&c, &Point::zero(2)).unwrap(), c);
        let single = Curve::from_xy(&[(5., 5.)]).unwrap();
        assert_eq!(
            translate(&single, &pt(&[-5., -5.])).unwrap(),
            Curve::from_xy(&[(0., 0.)]).unwrap()
        );
        assert!(translate(&c, &pt(&[1.])).is_err());
    }

    #[test]
    fn snap_examples() {
        let snap = |x: f64, y: f64| {
            let c = Curve::from_xy(&[(x, y)]).unwrap();
            let s = snap_curve(&c, 0.5);
            (s.point(0)[0], s.point(0)[1])
        };
        assert_eq!(snap(0.26, 0.0), (0.5, 0.0));
        assert_eq!(snap(1.0, 2.0), (1.0, 2.0));
        assert_eq!(snap(0.24, -0.26), (0.0, -0.5));
        // ties round toward +∞
        assert_eq!(snap(0.25, -0.25), (0.5, 0.0));
    }

    #[test]
    fn round_epsilon_examples() {
        assert_eq!(round_epsilon(8, 0.3), 0.25);
        assert_eq!(round_epsilon(4, 0.5), 0.5);
        assert_eq!(round_epsilon(16, 1.0), 1.0);
        assert_eq!(round_epsilon(3, 1.0), 0.75);
        assert_eq!(round_epsilon(1, 1.0), 1.0);
    }

    #[test]
    fn constructors_reject_bad_input() {
        assert_eq!(Curve::new(vec![]), Err(Error::EmptyCurve));
        assert!(Curve::new(vec![pt(&[1.]), pt(&[1., 2.])]).is_err());
        assert_eq!(Point::new(vec![f64::NAN]), Err(Error::NonFinite));
    }

    fn norms() -> impl Strategy<Value = Norm> {
        prop_oneof![
            Just(Norm::L1),
            Just(Norm::L2),
            Just(Norm::LInf),
            (1.0f64..6.0).prop_map(Norm::Lp)
        ]
    }

    proptest! {
        #[test]
        fn triangle_inequality(
            a in prop::array::uniform3(-10.0f64..10.0),
            b in prop::array::uniform3(-10.0f64..10.0),
            c in prop::array::uniform3(-10.0f64..10.0),
            norm in norms(),
        ) {
            let ab = norm.dist(&a, &b);
            let bc = norm.dist(&b, &c);
            let ac = norm.dist(&a, &c);
            prop_assert!(ac <= ab + bc + 1e-9);
            prop_assert!((norm.dist(&a, &b) - norm.dist(&b, &a)).abs() < 1e-12);
        }

        #[test]
        fn snap_is_idempotent_and_close(
            xs in prop::collection::vec(-100.0f64..100.0, 2..20),
            res in 0.01f64..3.0,
        ) {
            let c = Curve::from_flat(1, xs).unwrap();
            let s = snap_curve(&c, res);
            prop_assert_eq!(snap_curve(&s, res), s.clone());
            for (a, b) in c.flat().iter().zip(s.flat()) {
                prop_assert!((a - b).abs() <= res / 2.0 + 1e-9);
            }
        }

        #[test]
        fn round_epsilon_range(n in 1usize..5000, eps in 0.001f64..=1.0) {
            let r = round_epsilon(n, eps);
            prop_assert!(r <= eps && r > eps / 2.0);
            let ratio = n as f64 / r;
            prop_assert_eq!(ratio.log2().round().exp2(), ratio);
        }
    }
}
