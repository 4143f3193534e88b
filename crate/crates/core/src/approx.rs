//! Approximate deciders for "is the translation-invariant DTW at most δ?"
//! and the binary-search driver built on top of them.
//!
//! Every decider answers [`Verdict::Le`] only with a translation whose DTW
//! value on the original curves was checked to be at most `(1+ε)δ`, so the
//! `Le` side is always sound. The `Gt` side relies on the candidate set
//! containing a near-optimal grid point whenever the optimum is at most δ.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dtw::{translated_cost, translated_cost_within};
use crate::dynamic_sp::{decide_subcubic, EngineKind};
use crate::error::{Error, Result};
use crate::geometry::{check_dim, round_epsilon, start_translation, Curve, LatticeCurve, Norm, Point, Translation};
use crate::zorder::ZDomain;

/// A box is dense when `18·count ≥ n`.
const DENSITY_DIVISOR: usize = 18;

/// Slack (in lattice units) when deciding whether a grid point lies on a
/// closed box boundary.
const LATTICE_SLACK: f64 = 1e-9;

/// A decision question: is there a translation τ with
/// `dtw(π, σ+τ) ≤ δ`?
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionInstance {
    pi: Curve,
    sigma: Curve,
    delta: f64,
    eps: f64,
    norm: Norm,
}

impl DecisionInstance {
    /// Validates the input and rounds `eps` down so that `max(n, m)/eps` is a
    /// power of two.
    pub fn new(pi: Curve, sigma: Curve, delta: f64, eps: f64, norm: Norm) -> Result<Self> {
        check_dim(pi.dim(), sigma.dim())?;
        if pi.dim() != 2 {
            return Err(Error::UnsupportedDimension { found: pi.dim(), context: "approximate deciders need d = 2" });
        }
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(Error::InvalidParameter(format!("delta must be finite and nonnegative, got {delta}")));
        }
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1], got {eps}")));
        }
        let size = pi.len().max(sigma.len());
        Ok(DecisionInstance { eps: round_epsilon(size, eps), pi, sigma, delta, norm })
    }

    /// Same curves and δ with a different approximation parameter.
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        DecisionInstance::new(self.pi.clone(), self.sigma.clone(), self.delta, eps, self.norm)
    }

    pub fn pi(&self) -> &Curve {
        &self.pi
    }

    pub fn sigma(&self) -> &Curve {
        &self.sigma
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// The normalized approximation parameter.
    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn norm(&self) -> Norm {
        self.norm
    }

    pub fn n(&self) -> usize {
        self.pi.len()
    }

    pub fn m(&self) -> usize {
        self.sigma.len()
    }

    /// `max(n, m)`, the length every constant is expressed in.
    pub fn size(&self) -> usize {
        self.n().max(self.m())
    }

    /// `τstart = π₁ − σ₁`.
    pub fn tau_start(&self) -> [f64; 2] {
        let (a, b) = (self.pi.point(0), self.sigma.point(0));
        [a[0] - b[0], a[1] - b[1]]
    }

    /// Pitch of the candidate grid, `εδ/(4·max(n,m))`.
    pub fn resolution(&self) -> f64 {
        self.eps * self.delta / (4.0 * self.size() as f64)
    }

    /// The acceptance threshold `(1+ε)δ`.
    pub fn threshold(&self) -> f64 {
        (1.0 + self.eps) * self.delta
    }

    /// `dtw(π, σ+τ)` on the original curves.
    pub fn evaluate(&self, tau: [f64; 2]) -> f64 {
        translated_cost(&self.pi, &self.sigma, &tau, self.norm)
    }
}

/// A translation together with its DTW value.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub tau: Translation,
    pub value: f64,
}

/// Outcome of an approximate decider.
#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    /// Some translation achieves at most `(1+ε)δ`; the witness proves it.
    Le(Witness),
    /// No translation achieves δ.
    Gt,
}

impl Verdict {
    pub fn is_le(&self) -> bool {
        matches!(self, Verdict::Le(_))
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            Verdict::Le(w) => Some(w),
            Verdict::Gt => None,
        }
    }
}

/// A decision instance with its curves snapped to the candidate grid.
#[derive(Debug, Clone)]
pub struct PreparedInstance {
    inst: DecisionInstance,
    lattice_pi: LatticeCurve,
    lattice_sigma: LatticeCurve,
}

/// Snaps both curves to multiples of `εδ/(4·max(n,m))`. Requires `δ > 0`.
pub fn preprocess(inst: &DecisionInstance) -> Result<PreparedInstance> {
    if inst.delta <= 0.0 {
        return Err(Error::InvalidParameter("preprocessing needs delta > 0".into()));
    }
    let r = inst.resolution();
    Ok(PreparedInstance {
        lattice_pi: LatticeCurve::snap(&inst.pi, r),
        lattice_sigma: LatticeCurve::snap(&inst.sigma, r),
        inst: inst.clone(),
    })
}

impl PreparedInstance {
    pub fn instance(&self) -> &DecisionInstance {
        &self.inst
    }

    pub fn resolution(&self) -> f64 {
        self.lattice_pi.resolution()
    }

    pub fn lattice_pi(&self) -> &LatticeCurve {
        &self.lattice_pi
    }

    pub fn lattice_sigma(&self) -> &LatticeCurve {
        &self.lattice_sigma
    }

    pub fn snapped_pi(&self) -> Curve {
        self.lattice_pi.to_curve()
    }

    pub fn snapped_sigma(&self) -> Curve {
        self.lattice_sigma.to_curve()
    }

    /// `π̂₁ − σ̂₁` in lattice units.
    pub fn lattice_tau_start(&self) -> [i64; 2] {
        let (a, b) = (self.lattice_pi.point(0), self.lattice_sigma.point(0));
        [a[0] - b[0], a[1] - b[1]]
    }

    /// Lattice square of side `4δ` centred on the snapped start translation.
    pub fn z_domain(&self) -> ZDomain {
        let half = 8 * self.inst.size() as u64;
        let half_units = half as f64 / self.inst.eps;
        let half_units = half_units.round() as i64;
        let depth = (2 * half_units).trailing_zeros();
        debug_assert_eq!(1i64 << depth, 2 * half_units, "8n/eps must be a power of two");
        let t = self.lattice_tau_start();
        ZDomain::new(self.resolution(), [t[0] - half_units, t[1] - half_units], depth)
    }

    /// Weight standing in for pairs too far away to matter.
    pub fn sentinel_cap(&self) -> f64 {
        4.0 * self.inst.delta
    }

    pub fn point(&self, lattice: [i64; 2]) -> [f64; 2] {
        let r = self.resolution();
        [lattice[0] as f64 * r, lattice[1] as f64 * r]
    }
}

/// Counts of the difference multiset `P = {π_i − σ_j}` over the boxes of
/// side `2δ/n` tiling `B = [−δ, δ]² + τstart`, plus one ring of boxes
/// around `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseBoxIndex {
    side: f64,
    origin: [f64; 2],
    per_axis: usize,
    counts: Vec<((i64, i64), usize)>,
    excluded: usize,
}

impl DenseBoxIndex {
    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    /// Boxes per axis inside `B`; valid indices run from `-1` to this value.
    pub fn per_axis(&self) -> usize {
        self.per_axis
    }

    fn axis_index(&self, x: f64, k: usize) -> Option<i64> {
        let u = (x - self.origin[k]) / self.side;
        let top = self.per_axis as i64 + 1;
        let idx = u.floor() as i64;
        if (-1..top).contains(&idx) {
            Some(idx)
        } else if idx == top && u == top as f64 {
            Some(top - 1)
        } else {
            None
        }
    }

    /// Box containing `p`, if it is inside `B` or the surrounding ring.
    pub fn box_of(&self, p: [f64; 2]) -> Option<(i64, i64)> {
        Some((self.axis_index(p[0], 0)?, self.axis_index(p[1], 1)?))
    }

    pub fn count(&self, a: i64, b: i64) -> usize {
        match self.counts.binary_search_by_key(&(a, b), |&(k, _)| k) {
            Ok(i) => self.counts[i].1,
            Err(_) => 0,
        }
    }

    pub fn is_dense(&self, a: i64, b: i64) -> bool {
        DENSITY_DIVISOR * self.count(a, b) >= self.per_axis
    }

    /// Dense boxes in index order.
    pub fn dense(&self) -> Vec<(i64, i64)> {
        self.counts
            .iter()
            .filter(|&&(_, c)| DENSITY_DIVISOR * c >= self.per_axis)
            .map(|&(k, _)| k)
            .collect()
    }

    /// Points of P that fell outside every box.
    pub fn excluded(&self) -> usize {
        self.excluded
    }

    /// Points of P that were counted in some box.
    pub fn counted(&self) -> usize {
        self.counts.iter().map(|&(_, c)| c).sum()
    }

    /// Closed real extent `[lo, hi]` of a box along both axes.
    pub fn extent(&self, a: i64, b: i64) -> ([f64; 2], [f64; 2]) {
        let lo = [self.origin[0] + a as f64 * self.side, self.origin[1] + b as f64 * self.side];
        ([lo[0], lo[1]], [lo[0] + self.side, lo[1] + self.side])
    }
}

/// Buckets `P` into boxes by sorting box keys.
pub fn dense_boxes(prep: &PreparedInstance) -> DenseBoxIndex {
    let inst = prep.instance();
    let size = inst.size();
    let ts = inst.tau_start();
    let delta = inst.delta();
    let mut index = DenseBoxIndex {
        side: 2.0 * delta / size as f64,
        origin: [ts[0] - delta, ts[1] - delta],
        per_axis: size,
        counts: Vec::new(),
        excluded: 0,
    };
    let mut keys = Vec::with_capacity(inst.n() * inst.m());
    for a in inst.pi().points() {
        for b in inst.sigma().points() {
            match index.box_of([a[0] - b[0], a[1] - b[1]]) {
                Some(k) => keys.push(k),
                None => index.excluded += 1,
            }
        }
    }
    keys.sort_unstable();
    for k in keys {
        match index.counts.last_mut() {
            Some((last, c)) if *last == k => *c += 1,
            _ => index.counts.push((k, 1)),
        }
    }
    index
}

/// Candidate translations as lattice points, sorted by z-curve time.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub resolution: f64,
    pub points: Vec<[i64; 2]>,
    pub times: Vec<u64>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Real coordinates of the k-th candidate.
    pub fn translation(&self, k: usize) -> [f64; 2] {
        let p = self.points[k];
        [p[0] as f64 * self.resolution, p[1] as f64 * self.resolution]
    }

    pub fn translations(&self) -> Vec<[f64; 2]> {
        (0..self.len()).map(|k| self.translation(k)).collect()
    }

    /// `18m · 9 · (⌈8/ε⌉+1)²` with `m = min(n, m)`.
    pub fn size_bound(inst: &DecisionInstance) -> usize {
        let per_axis = (8.0 / inst.eps()).ceil() as usize + 1;
        DENSITY_DIVISOR * inst.n().min(inst.m()) * 9 * per_axis * per_axis
    }
}

/// Lattice indices `k` with `lo ≤ k·r ≤ hi`.
fn lattice_range(lo: f64, hi: f64, r: f64) -> std::ops::RangeInclusive<i64> {
    ((lo / r - LATTICE_SLACK).ceil() as i64)..=((hi / r + LATTICE_SLACK).floor() as i64)
}

/// Lattice points of the closed boxes neighbouring a dense box, restricted
/// to `B`, deduplicated and ordered along the z-curve.
pub fn candidate_set(prep: &PreparedInstance, dbi: &DenseBoxIndex) -> CandidateSet {
    let r = prep.resolution();
    let last = dbi.per_axis() as i64 - 1;
    let mut boxes: Vec<(i64, i64)> = dbi
        .dense()
        .into_iter()
        .flat_map(|(a, b)| (-1..=1).flat_map(move |da| (-1..=1).map(move |db| (a + da, b + db))))
        .filter(|&(a, b)| (0..=last).contains(&a) && (0..=last).contains(&b))
        .collect();
    boxes.sort_unstable();
    boxes.dedup();
    let domain = prep.z_domain();
    let mut timed: Vec<(u64, [i64; 2])> = Vec::new();
    for (a, b) in boxes {
        let (lo, hi) = dbi.extent(a, b);
        for x in lattice_range(lo[0], hi[0], r) {
            for y in lattice_range(lo[1], hi[1], r) {
                let local = domain.local([x, y]).expect("candidates lie inside the z-domain");
                timed.push((domain.time_of(local), [x, y]));
            }
        }
    }
    // distinct points have distinct times
    timed.sort_unstable_by_key(|&(t, _)| t);
    timed.dedup_by_key(|&mut (t, _)| t);
    CandidateSet {
        resolution: r,
        times: timed.iter().map(|&(t, _)| t).collect(),
        points: timed.into_iter().map(|(_, p)| p).collect(),
    }
}

fn witness(inst: &DecisionInstance, tau: [f64; 2], value: f64) -> Verdict {
    debug_assert!(value <= inst.threshold());
    Verdict::Le(Witness { tau: Point::from(tau), value })
}

/// First translation (in the given order) within `(1+ε)δ`.
fn first_within(inst: &DecisionInstance, candidates: &[[f64; 2]]) -> Verdict {
    let thr = inst.threshold();
    let hit = candidates
        .par_iter()
        .map(|&q| (q, translated_cost_within(&inst.pi, &inst.sigma, &q, inst.norm, thr)))
        .find_first(|&(_, v)| v <= thr);
    match hit {
        Some((q, v)) => witness(inst, q, v),
        None => Verdict::Gt,
    }
}

pub(crate) fn decide_zero(inst: &DecisionInstance) -> Verdict {
    let ts = inst.tau_start();
    let v = inst.evaluate(ts);
    if v == 0.0 {
        witness(inst, ts, v)
    } else {
        Verdict::Gt
    }
}

/// Tries `τstart`, then every candidate of the dense-box neighbourhoods in
/// z-curve order, and accepts the first one within `(1+ε)δ`.
pub fn decide_cubic(inst: &DecisionInstance) -> Verdict {
    if inst.delta() == 0.0 {
        return decide_zero(inst);
    }
    let prep = preprocess(inst).expect("delta > 0");
    let q = candidate_set(&prep, &dense_boxes(&prep));
    let mut order = vec![inst.tau_start()];
    order.extend(q.translations());
    first_within(inst, &order)
}

/// Tries `τstart`, then the whole grid of pitch `εδ/(4n)` over `B`, row by
/// row.
pub fn decide_simple(inst: &DecisionInstance) -> Verdict {
    if inst.delta() == 0.0 {
        return decide_zero(inst);
    }
    let r = inst.resolution();
    let ts = inst.tau_start();
    let d = inst.delta();
    let xs = lattice_range(ts[0] - d, ts[0] + d, r);
    let ys = lattice_range(ts[1] - d, ts[1] + d, r);
    let grid = std::iter::once(ts).chain(ys.flat_map(|y| xs.clone().map(move |x| [x as f64 * r, y as f64 * r])));
    first_within(inst, &grid.collect::<Vec<_>>())
}

/// Samples pairs `(i, j)` and checks the grid points of the box
/// `[−2δ/n, 2δ/n]² + (π_i − σ_j)` for each sample.
pub fn decide_randomized(inst: &DecisionInstance, seed: u64, repetitions: usize) -> Result<Verdict> {
    if repetitions == 0 {
        return Err(Error::InvalidParameter("repetitions must be at least 1".into()));
    }
    if inst.delta() == 0.0 {
        return Ok(decide_zero(inst));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = inst.resolution();
    let half = 2.0 * inst.delta() / inst.size() as f64;
    for _ in 0..repetitions {
        let i = rng.gen_range(0..inst.n());
        let j = rng.gen_range(0..inst.m());
        let (a, b) = (inst.pi().point(i), inst.sigma().point(j));
        let c = [a[0] - b[0], a[1] - b[1]];
        let xs = lattice_range(c[0] - half, c[0] + half, r);
        let ys = lattice_range(c[1] - half, c[1] + half, r);
        let grid: Vec<[f64; 2]> = ys
            .flat_map(|y| xs.clone().map(move |x| [x as f64 * r, y as f64 * r]))
            .collect();
        if let v @ Verdict::Le(_) = first_within(inst, &grid) {
            return Ok(v);
        }
    }
    Ok(Verdict::Gt)
}

/// Which decider drives [`approx_value`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decider {
    Simple,
    Cubic,
    /// `repetitions = None` uses `40·max(n, m)`.
    Randomized { seed: u64, repetitions: Option<usize> },
    Subcubic(EngineKind),
}

/// Counters collected by [`approx_value`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ApproxStats {
    pub decider_calls: usize,
    pub updates: usize,
    pub queries: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproxOutcome {
    pub value: f64,
    pub tau: Translation,
    pub stats: ApproxStats,
}

/// Runs one decider call, adding its counters to `stats`.
pub fn run_decider(inst: &DecisionInstance, decider: Decider, stats: &mut ApproxStats) -> Result<Verdict> {
    stats.decider_calls += 1;
    match decider {
        Decider::Simple => Ok(decide_simple(inst)),
        Decider::Cubic => Ok(decide_cubic(inst)),
        Decider::Randomized { seed, repetitions } => {
            let reps = repetitions.unwrap_or(40 * inst.size());
            let seed = seed.wrapping_add(stats.decider_calls as u64);
            decide_randomized(inst, seed, reps)
        }
        Decider::Subcubic(engine) => {
            let res = decide_subcubic(inst, engine)?;
            stats.updates += res.stats.updates;
            stats.queries += res.stats.queries;
            Ok(res.verdict)
        }
    }
}

/// A translation whose DTW value is within `(1+ε)` of the optimum.
///
/// Keeps a certified lower bound `lo` (starting at `dtw(π, σ+τstart)/(n+m)`)
/// and the best value found so far `hi`, and probes a decider with parameter
/// `ε_p` at `δ = sqrt(lo·hi/(1+ε_p))` until `hi ≤ (1+ε)·lo`. A `Gt` answer
/// raises `lo` to δ; a `Le` answer lowers `hi` to the witness value. `ε_p`
/// starts coarse, `(hi/lo)^{1/4} − 1` capped at 1, and never drops below
/// `ε/3`.
pub fn approx_value(pi: &Curve, sigma: &Curve, eps: f64, norm: Norm, decider: Decider) -> Result<ApproxOutcome> {
    check_dim(pi.dim(), sigma.dim())?;
    if pi.dim() != 2 {
        return Err(Error::UnsupportedDimension { found: pi.dim(), context: "approximate deciders need d = 2" });
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1], got {eps}")));
    }
    let ts = start_translation(pi, sigma)?;
    let start = translated_cost(pi, sigma, ts.coords(), norm);
    let mut stats = ApproxStats::default();
    if start == 0.0 {
        return Ok(ApproxOutcome { value: 0.0, tau: ts, stats });
    }
    let mut lo = start / (pi.len() + sigma.len()) as f64;
    let mut hi = start;
    let mut best = ts;
    while hi > (1.0 + eps) * lo {
        let probe_eps = ((hi / lo).powf(0.25) - 1.0).clamp(eps / 3.0, 1.0);
        let delta = (lo * hi / (1.0 + probe_eps)).sqrt();
        let inst = DecisionInstance::new(pi.clone(), sigma.clone(), delta, probe_eps, norm)?;
        match run_decider(&inst, decider, &mut stats)? {
            Verdict::Le(w) => {
                if w.value < hi {
                    hi = w.value;
                    best = w.tau;
                }
            }
            Verdict::Gt => lo = delta,
        }
    }
    Ok(ApproxOutcome { value: hi, tau: best, stats })
}

/// `dtw(π, σ+τstart)`, the starting upper bound of [`approx_value`].
pub fn start_value(pi: &Curve, sigma: &Curve, norm: Norm) -> Result<f64> {
    let ts = start_translation(pi, sigma)?;
    Ok(translated_cost(pi, sigma, ts.coords(), norm))
}
