//! Z-curve traversal of the translation lattice and the node-weight update
//! stream that keeps every DTW node weight within a `(1+ε)` factor of its
//! true value along that traversal.
//!
//! Lattice points are addressed by local integer coordinates `(x, y)` in
//! `[0, 2^K)²`. A cell at level `ℓ` with indices `(cx, cy)` covers
//! `x ∈ [cx·2^ℓ, (cx+1)·2^ℓ)` and likewise for `y`. Its children are visited
//! in the order `(2cx, 2cy+1)`, `(2cx+1, 2cy+1)`, `(2cx, 2cy)`,
//! `(2cx+1, 2cy)`, so the curve sweeps each quadrant top-left, top-right,
//! bottom-left, bottom-right. The position of a point in this sequence is its
//! *time*.

use std::fmt;
use std::io::{self, Write};

use crate::approx::{CandidateSet, PreparedInstance};
use crate::error::{Error, Result};
use crate::geometry::Norm;

/// Child visiting order as `(dx, dy)` offsets.
const CHILD_ORDER: [(u64, u64); 4] = [(0, 1), (1, 1), (0, 0), (1, 0)];

/// Work limit (pairs × lattice points) for [`naive_stream_oracle`].
pub const NAIVE_ORACLE_GUARD: u128 = 10_000_000;

/// Slack kept inside the `(1+ε)` windows so round-off never pushes a
/// weight outside its guarantee.
const WINDOW_MARGIN: f64 = 1e-9;

/// The square lattice traversed by the z-curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZDomain {
    /// Lattice pitch.
    pub resolution: f64,
    /// Lattice index of the local point `(0, 0)`.
    pub origin: [i64; 2],
    /// `K`: the domain has `2^K` points per side.
    pub depth: u32,
}

#[inline]
fn spread_bits(v: u64) -> u64 {
    let mut x = v & 0xFFFF_FFFF;
    x = (x | (x << 16)) & 0x0000_FFFF_0000_FFFF;
    x = (x | (x << 8)) & 0x00FF_00FF_00FF_00FF;
    x = (x | (x << 4)) & 0x0F0F_0F0F_0F0F_0F0F;
    x = (x | (x << 2)) & 0x3333_3333_3333_3333;
    (x | (x << 1)) & 0x5555_5555_5555_5555
}

#[inline]
fn compact_bits(v: u64) -> u64 {
    let mut x = v & 0x5555_5555_5555_5555;
    x = (x | (x >> 1)) & 0x3333_3333_3333_3333;
    x = (x | (x >> 2)) & 0x0F0F_0F0F_0F0F_0F0F;
    x = (x | (x >> 4)) & 0x00FF_00FF_00FF_00FF;
    x = (x | (x >> 8)) & 0x0000_FFFF_0000_FFFF;
    (x | (x >> 16)) & 0x0000_0000_FFFF_FFFF
}

impl ZDomain {
    pub fn new(resolution: f64, origin: [i64; 2], depth: u32) -> Self {
        assert!(depth <= 31, "z-domain depth {depth} too large");
        assert!(resolution > 0.0);
        ZDomain { resolution, origin, depth }
    }

    pub fn side(&self) -> u64 {
        1 << self.depth
    }

    /// Number of lattice points, `4^K`.
    pub fn len(&self) -> u64 {
        1 << (2 * self.depth)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Local coordinates of a lattice point, if it lies in the domain.
    pub fn local(&self, lattice: [i64; 2]) -> Option<[u64; 2]> {
        let x = lattice[0] - self.origin[0];
        let y = lattice[1] - self.origin[1];
        let side = self.side() as i64;
        ((0..side).contains(&x) && (0..side).contains(&y)).then_some([x as u64, y as u64])
    }

    /// Local coordinates relative to the origin, possibly outside the domain.
    pub fn offset(&self, lattice: [i64; 2]) -> [i64; 2] {
        [lattice[0] - self.origin[0], lattice[1] - self.origin[1]]
    }

    /// Position of a local point along the z-curve.
    #[inline]
    pub fn time_of(&self, local: [u64; 2]) -> u64 {
        let flipped_y = (self.side() - 1) ^ local[1];
        spread_bits(local[0]) | (spread_bits(flipped_y) << 1)
    }

    /// Inverse of [`ZDomain::time_of`].
    #[inline]
    pub fn local_of(&self, time: u64) -> [u64; 2] {
        let x = compact_bits(time);
        let flipped_y = compact_bits(time >> 1);
        [x, (self.side() - 1) ^ flipped_y]
    }

    /// Real coordinates of a local point.
    pub fn point(&self, local: [u64; 2]) -> [f64; 2] {
        [
            (self.origin[0] + local[0] as i64) as f64 * self.resolution,
            (self.origin[1] + local[1] as i64) as f64 * self.resolution,
        ]
    }
}

/// All domain points in z-curve order.
pub fn z_order(domain: &ZDomain) -> Vec<[f64; 2]> {
    (0..domain.len()).map(|t| domain.point(domain.local_of(t))).collect()
}

/// A node of the z-order tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZCell {
    pub level: u32,
    pub cx: u64,
    pub cy: u64,
}

impl ZCell {
    pub fn root(domain: &ZDomain) -> Self {
        ZCell { level: domain.depth, cx: 0, cy: 0 }
    }

    pub fn side(&self) -> u64 {
        1 << self.level
    }

    pub fn is_singleton(&self) -> bool {
        self.level == 0
    }

    /// Inclusive local coordinate range `[lo, hi]` on each axis.
    pub fn span(&self) -> ([u64; 2], [u64; 2]) {
        let s = self.side();
        ([self.cx * s, self.cy * s], [self.cx * s + s - 1, self.cy * s + s - 1])
    }

    pub fn children(&self) -> [ZCell; 4] {
        assert!(self.level > 0, "singleton cells have no children");
        CHILD_ORDER.map(|(dx, dy)| ZCell {
            level: self.level - 1,
            cx: 2 * self.cx + dx,
            cy: 2 * self.cy + dy,
        })
    }

    /// Distances (in lattice units) from `p` to the closest and farthest
    /// lattice point of the cell.
    pub fn distance_range(&self, p: [i64; 2], norm: Norm) -> (f64, f64) {
        let (lo, hi) = self.span();
        let mut near = [0.0; 2];
        let mut far = [0.0; 2];
        for k in 0..2 {
            let (a, b) = (lo[k] as i64, hi[k] as i64);
            near[k] = (p[k].clamp(a, b) - p[k]) as f64;
            far[k] = (p[k] - a).abs().max((p[k] - b).abs()) as f64;
        }
        (norm.length(&near), norm.length(&far))
    }

    pub fn contains(&self, p: [i64; 2]) -> bool {
        let (lo, hi) = self.span();
        (0..2).all(|k| lo[k] as i64 <= p[k] && p[k] <= hi[k] as i64)
    }
}

/// The value assigned to a node weight over a cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CellWeight {
    /// The cell is the single lattice point `p` itself.
    Zero,
    /// `(1+ε)^ℓ`.
    Power(i32),
}

impl CellWeight {
    pub fn value(&self, eps: f64) -> f64 {
        match *self {
            CellWeight::Zero => 0.0,
            CellWeight::Power(l) => (1.0 + eps).powi(l),
        }
    }
}

/// An `ℓ` with `(1+ε)^{ℓ−1} ≤ lo` and `hi ≤ (1+ε)^{ℓ+1}`, preferring the
/// level centred on the range.
pub fn window_level(lo: f64, hi: f64, eps: f64) -> Option<i32> {
    if !(lo > 0.0) || hi < lo || !hi.is_finite() {
        return None;
    }
    let base = 1.0 + eps;
    let centre = (0.5 * (lo.ln() + hi.ln()) / base.ln()).round() as i32;
    [centre, centre - 1, centre + 1].into_iter().find(|&l| {
        base.powi(l - 1) * (1.0 + WINDOW_MARGIN) <= lo && hi <= base.powi(l + 1) * (1.0 - WINDOW_MARGIN)
    })
}

/// Decides whether one weight covers the whole cell for the pair whose
/// difference vector sits at local lattice position `p`. `None` means the
/// cell must be split. Distances are scaled by `resolution`.
pub fn stop_test(cell: &ZCell, p: [i64; 2], eps: f64, resolution: f64, norm: Norm) -> Option<CellWeight> {
    if cell.contains(p) {
        return cell.is_singleton().then_some(CellWeight::Zero);
    }
    let (near, far) = cell.distance_range(p, norm);
    window_level(near * resolution, far * resolution, eps).map(CellWeight::Power)
}

/// One node-weight assignment, applied just before the lattice point at
/// `time` is visited. `i`, `j` are zero-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateEvent {
    pub time: u64,
    pub i: u32,
    pub j: u32,
    pub weight: f64,
}

impl fmt::Display for UpdateEvent {
    /// `t i j w` with 1-based node indices.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} {}", self.time, self.i + 1, self.j + 1, self.weight)
    }
}

/// Time-sorted node-weight updates interleaved with query times.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateStream {
    pub n: usize,
    pub m: usize,
    pub eps: f64,
    /// Weight given to pairs whose difference vector lies outside the domain.
    pub cap: f64,
    pub domain: ZDomain,
    pub events: Vec<UpdateEvent>,
    pub query_times: Vec<u64>,
}

impl UpdateStream {
    /// Number of events per pair, indexed `i * m + j`.
    pub fn events_per_pair(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n * self.m];
        for e in &self.events {
            counts[e.i as usize * self.m + e.j as usize] += 1;
        }
        counts
    }

    /// Writes the `t i j w` debug format, one event per line.
    pub fn write_debug(&self, mut out: impl Write) -> io::Result<()> {
        for e in &self.events {
            writeln!(out, "{e}")?;
        }
        Ok(())
    }
}

/// Options for [`update_stream_with`].
#[derive(Debug, Clone, Copy, Default)]
pub struct StreamOptions {
    /// Skip subtrees of the z-order tree that contain no query point.
    pub prune_to_queries: bool,
}

struct PairSet<'a> {
    offsets: &'a [[i64; 2]],
    m: usize,
}

struct StreamBuilder<'a> {
    pairs: PairSet<'a>,
    eps: f64,
    resolution: f64,
    norm: Norm,
    query_times: &'a [u64],
    prune: bool,
    last: Vec<Option<f64>>,
    events: Vec<UpdateEvent>,
}

impl StreamBuilder<'_> {
    fn emit(&mut self, time: u64, pair: u32, weight: f64) {
        let slot = &mut self.last[pair as usize];
        if *slot == Some(weight) {
            return;
        }
        *slot = Some(weight);
        let (i, j) = (pair as usize / self.pairs.m, pair as usize % self.pairs.m);
        self.events.push(UpdateEvent { time, i: i as u32, j: j as u32, weight });
    }

    fn has_query_in(&self, start: u64, len: u64) -> bool {
        let k = self.query_times.partition_point(|&t| t < start);
        k < self.query_times.len() && self.query_times[k] < start + len
    }

    fn visit(&mut self, cell: ZCell, t0: u64, active: &[u32]) {
        if active.is_empty() {
            return;
        }
        let span = cell.side() * cell.side();
        if self.prune && !self.has_query_in(t0, span) {
            return;
        }
        let mut open = Vec::with_capacity(active.len());
        for &pair in active {
            let p = self.pairs.offsets[pair as usize];
            match stop_test(&cell, p, self.eps, self.resolution, self.norm) {
                Some(w) => self.emit(t0, pair, w.value(self.eps)),
                None => open.push(pair),
            }
        }
        if open.is_empty() {
            return;
        }
        let quarter = span / 4;
        for (k, child) in cell.children().into_iter().enumerate() {
            self.visit(child, t0 + k as u64 * quarter, &open);
        }
    }
}

/// Difference vectors `π̂_i − σ̂_j` as offsets from the domain origin.
fn pair_offsets(prep: &PreparedInstance, domain: &ZDomain) -> Vec<[i64; 2]> {
    let (pi, sigma) = (prep.lattice_pi(), prep.lattice_sigma());
    let mut out = Vec::with_capacity(pi.len() * sigma.len());
    for i in 0..pi.len() {
        let a = pi.point(i);
        for j in 0..sigma.len() {
            let b = sigma.point(j);
            out.push(domain.offset([a[0] - b[0], a[1] - b[1]]));
        }
    }
    out
}

fn in_domain(domain: &ZDomain, p: [i64; 2]) -> bool {
    let side = domain.side() as i64;
    (0..side).contains(&p[0]) && (0..side).contains(&p[1])
}

/// Builds the update stream with a single depth-first pass over the z-order
/// tree, carrying the set of pairs that still need refinement. Events come
/// out sorted by time.
pub fn update_stream(prep: &PreparedInstance, q_set: &CandidateSet) -> UpdateStream {
    update_stream_with(prep, q_set, StreamOptions::default())
}

pub fn update_stream_with(prep: &PreparedInstance, q_set: &CandidateSet, opts: StreamOptions) -> UpdateStream {
    let domain = prep.z_domain();
    let (n, m) = (prep.instance().n(), prep.instance().m());
    let eps = prep.instance().eps();
    let cap = prep.sentinel_cap();
    let offsets = pair_offsets(prep, &domain);
    let mut events = Vec::new();
    let mut active = Vec::with_capacity(offsets.len());
    for (pair, &p) in offsets.iter().enumerate() {
        if in_domain(&domain, p) {
            active.push(pair as u32);
        } else {
            events.push(UpdateEvent { time: 0, i: (pair / m) as u32, j: (pair % m) as u32, weight: cap });
        }
    }
    let mut builder = StreamBuilder {
        pairs: PairSet { offsets: &offsets, m },
        eps,
        resolution: domain.resolution,
        norm: prep.instance().norm(),
        query_times: &q_set.times,
        prune: opts.prune_to_queries,
        last: vec![None; n * m],
        events,
    };
    builder.visit(ZCell::root(&domain), 0, &active);
    let events = builder.events;
    debug_assert!(events.windows(2).all(|w| w[0].time <= w[1].time));
    UpdateStream { n, m, eps, cap, domain, events, query_times: q_set.times.clone() }
}

/// Independent reference: walks every lattice point for every pair and
/// greedily cuts the z-order sequence into maximal runs that one weight
/// `(1+ε)^ℓ` covers.
pub fn naive_stream_oracle(prep: &PreparedInstance, q_set: &CandidateSet) -> Result<UpdateStream> {
    let domain = prep.z_domain();
    let (n, m) = (prep.instance().n(), prep.instance().m());
    let work = (n * m) as u128 * domain.len() as u128;
    if work > NAIVE_ORACLE_GUARD {
        return Err(Error::GuardExceeded { work, limit: NAIVE_ORACLE_GUARD });
    }
    let eps = prep.instance().eps();
    let norm = prep.instance().norm();
    let cap = prep.sentinel_cap();
    let offsets = pair_offsets(prep, &domain);
    let mut per_pair: Vec<(u64, u32, f64)> = Vec::new();
    for (pair, &p) in offsets.iter().enumerate() {
        let pair = pair as u32;
        if !in_domain(&domain, p) {
            per_pair.push((0, pair, cap));
            continue;
        }
        // (start time, min distance, max distance) of the open run
        let mut run: Option<(u64, f64, f64)> = None;
        let close = |run: Option<(u64, f64, f64)>, out: &mut Vec<(u64, u32, f64)>| {
            if let Some((start, lo, hi)) = run {
                let l = window_level(lo, hi, eps).expect("runs only grow while a level fits");
                out.push((start, pair, (1.0 + eps).powi(l)));
            }
        };
        for t in 0..domain.len() {
            let q = domain.local_of(t);
            let diff = [(q[0] as i64 - p[0]) as f64, (q[1] as i64 - p[1]) as f64];
            let d = norm.length(&diff) * domain.resolution;
            if d == 0.0 {
                close(run.take(), &mut per_pair);
                per_pair.push((t, pair, 0.0));
                continue;
            }
            run = match run {
                Some((start, lo, hi)) if window_level(lo.min(d), hi.max(d), eps).is_some() => {
                    Some((start, lo.min(d), hi.max(d)))
                }
                other => {
                    close(other, &mut per_pair);
                    Some((t, d, d))
                }
            };
        }
        close(run, &mut per_pair);
    }
    per_pair.sort_by_key(|&(t, pair, _)| (t, pair));
    let events = per_pair
        .into_iter()
        .map(|(time, pair, weight)| UpdateEvent {
            time,
            i: pair / m as u32,
            j: pair % m as u32,
            weight,
        })
        .collect();
    Ok(UpdateStream { n, m, eps, cap, domain, events, query_times: q_set.times.clone() })
}

/// Summary of a successful replay check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplayReport {
    pub queries_checked: usize,
    pub weights_checked: usize,
}

/// A weight that broke its guarantee during replay.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayViolation {
    pub query_time: u64,
    pub i: usize,
    pub j: usize,
    pub weight: Option<f64>,
    pub distance: f64,
}

/// Replays `stream` and checks, at every query time, that each in-domain
/// weight is within `(1+ε)` of the exact lattice distance, and that capped
/// pairs hold the cap and are at least `δ − R` away from the query.
pub fn validate_replay(prep: &PreparedInstance, stream: &UpdateStream) -> std::result::Result<ReplayReport, ReplayViolation> {
    let domain = stream.domain;
    let (n, m) = (stream.n, stream.m);
    let norm = prep.instance().norm();
    let eps = stream.eps;
    let offsets = pair_offsets(prep, &domain);
    let far_bound = prep.instance().delta() - domain.resolution;
    let mut weights: Vec<Option<f64>> = vec![None; n * m];
    let mut next = 0;
    let mut checked = 0;
    for &qt in &stream.query_times {
        while next < stream.events.len() && stream.events[next].time <= qt {
            let e = stream.events[next];
            weights[e.i as usize * m + e.j as usize] = Some(e.weight);
            next += 1;
        }
        let q = domain.local_of(qt);
        for (pair, &p) in offsets.iter().enumerate() {
            let diff = [(q[0] as i64 - p[0]) as f64, (q[1] as i64 - p[1]) as f64];
            let d = norm.length(&diff) * domain.resolution;
            let w = weights[pair];
            let ok = match w {
                None => false,
                Some(w) if in_domain(&domain, p) => {
                    if d == 0.0 {
                        w == 0.0
                    } else {
                        d <= (1.0 + eps) * w * (1.0 + 1e-12) && w <= (1.0 + eps) * d * (1.0 + 1e-12)
                    }
                }
                Some(w) => w == stream.cap && d >= far_bound * (1.0 - 1e-12),
            };
            if !ok {
                return Err(ReplayViolation { query_time: qt, i: pair / m, j: pair % m, weight: w, distance: d });
            }
            checked += 1;
        }
    }
    Ok(ReplayReport { queries_checked: stream.query_times.len(), weights_checked: checked })
}
