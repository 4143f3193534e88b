//! Shortest paths in the node-weighted grid DAG under weight updates, and the
//! decider that replays the z-ordered update stream through such an engine.

use std::time::Instant;

use serde::Serialize;

use crate::approx::{candidate_set, decide_zero, dense_boxes, preprocess, CandidateSet, DecisionInstance, Verdict, Witness};
use crate::dtw::{fill_rows, WeightGrid};
use crate::error::Result;
use crate::geometry::Point;
use crate::zorder::{update_stream_with, StreamOptions, UpdateEvent, UpdateStream};

/// Source-to-sink shortest path in an n×m grid DAG whose node weights change
/// over time. Edges go right, up and diagonally; both endpoint weights count.
pub trait DynamicGridSp {
    /// Replaces all weights.
    fn init(&mut self, grid: WeightGrid);
    /// Sets one node weight. Later writes to the same node win.
    fn apply(&mut self, event: &UpdateEvent);
    /// Current shortest path length from `(1,1)` to `(n,m)`.
    fn query(&mut self) -> f64;
}

/// Recomputes the whole DP table on every query.
#[derive(Debug, Clone)]
pub struct RecomputeEngine {
    grid: WeightGrid,
    table: Vec<f64>,
}

impl RecomputeEngine {
    pub fn new(grid: WeightGrid) -> Self {
        let table = vec![0.0; grid.n() * grid.m()];
        RecomputeEngine { grid, table }
    }
}

impl DynamicGridSp for RecomputeEngine {
    fn init(&mut self, grid: WeightGrid) {
        *self = RecomputeEngine::new(grid);
    }

    fn apply(&mut self, e: &UpdateEvent) {
        self.grid.set(e.i as usize, e.j as usize, e.weight);
    }

    fn query(&mut self) -> f64 {
        let (n, m) = (self.grid.n(), self.grid.m());
        fill_rows(self.grid.weights(), n, m, &mut self.table, 0);
        self.table[n * m - 1]
    }
}

/// Keeps the DP table between queries and refills only the rows at or
/// below the first row touched since the last query.
#[derive(Debug, Clone)]
pub struct DirtyRegionEngine {
    grid: WeightGrid,
    table: Vec<f64>,
    dirty_from: usize,
}

impl DirtyRegionEngine {
    pub fn new(grid: WeightGrid) -> Self {
        let table = vec![0.0; grid.n() * grid.m()];
        DirtyRegionEngine { grid, table, dirty_from: 0 }
    }

    /// First DP row that will be refilled by the next query.
    pub fn dirty_from(&self) -> usize {
        self.dirty_from
    }
}

impl DynamicGridSp for DirtyRegionEngine {
    fn init(&mut self, grid: WeightGrid) {
        *self = DirtyRegionEngine::new(grid);
    }

    fn apply(&mut self, e: &UpdateEvent) {
        let i = e.i as usize;
        self.grid.set(i, e.j as usize, e.weight);
        self.dirty_from = self.dirty_from.min(i);
    }

    fn query(&mut self) -> f64 {
        let (n, m) = (self.grid.n(), self.grid.m());
        if self.dirty_from < n {
            fill_rows(self.grid.weights(), n, m, &mut self.table, self.dirty_from);
            self.dirty_from = n;
        }
        self.table[n * m - 1]
    }
}

/// Engine selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EngineKind {
    Recompute,
    #[default]
    DirtyRegion,
}

impl EngineKind {
    pub fn build(self, grid: WeightGrid) -> Box<dyn DynamicGridSp> {
        match self {
            EngineKind::Recompute => Box::new(RecomputeEngine::new(grid)),
            EngineKind::DirtyRegion => Box::new(DirtyRegionEngine::new(grid)),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EngineKind::Recompute => "recompute",
            EngineKind::DirtyRegion => "dirty-region",
        }
    }
}

/// Wall-clock milliseconds per pipeline phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct PhaseTimings {
    pub preprocess: f64,
    pub candidates: f64,
    pub stream: f64,
    pub replay: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PipelineStats {
    /// `|Q|`.
    pub candidates: usize,
    /// Length of the update stream.
    pub stream_events: usize,
    /// Events applied before the pipeline stopped.
    pub updates: usize,
    /// Shortest-path queries issued.
    pub queries: usize,
    /// Candidates re-evaluated exactly on the original curves.
    pub verifications: usize,
    pub events_per_pair_p50: usize,
    pub events_per_pair_p99: usize,
    pub wall_ms: PhaseTimings,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineResult {
    pub verdict: Verdict,
    pub stats: PipelineStats,
}

fn percentile(sorted: &[usize], q: f64) -> usize {
    if sorted.is_empty() {
        return 0;
    }
    let k = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[k]
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// Decider that sweeps the candidates in z-curve order, keeping node weights
/// `(1+ε')`-accurate through the update stream and asking the engine for the
/// approximate DTW value at each candidate.
///
/// Runs internally with `ε' = ε/4` on a grid of pitch `ε'δ/(4n)`. A candidate
/// whose approximate value is at most
/// `(1+ε')·((1+ε)δ + (n+m−1)·c·R')` (with `c` the unit-square diagonal and
/// `R'` the pitch, covering the snapping error) is re-evaluated exactly and
/// accepted if its true value is at most `(1+ε)δ`.
pub fn decide_subcubic(inst: &DecisionInstance, engine: EngineKind) -> Result<PipelineResult> {
    let plan = SubcubicPlan::new(inst)?;
    let mut engine = engine.build(WeightGrid::zeros(inst.n(), inst.m()));
    Ok(plan.run(engine.as_mut()))
}

/// Candidates and update stream for one decision instance, ready to be
/// replayed through any number of engines.
#[derive(Debug, Clone)]
pub struct SubcubicPlan {
    inst: DecisionInstance,
    /// `None` when δ = 0 and the exact zero test decides.
    sweep: Option<Sweep>,
    stats: PipelineStats,
}

#[derive(Debug, Clone)]
struct Sweep {
    q: CandidateSet,
    stream: UpdateStream,
    filter: f64,
}

impl SubcubicPlan {
    pub fn new(inst: &DecisionInstance) -> Result<Self> {
        let mut stats = PipelineStats::default();
        if inst.delta() == 0.0 {
            return Ok(SubcubicPlan { inst: inst.clone(), sweep: None, stats });
        }
        let t = Instant::now();
        let inner = inst.with_eps(inst.eps() / 4.0)?;
        let prep = preprocess(&inner)?;
        stats.wall_ms.preprocess = ms(t);

        let t = Instant::now();
        let q = candidate_set(&prep, &dense_boxes(&prep));
        stats.candidates = q.len();
        stats.wall_ms.candidates = ms(t);

        let t = Instant::now();
        let stream = update_stream_with(&prep, &q, StreamOptions { prune_to_queries: true });
        stats.stream_events = stream.events.len();
        let mut per_pair = stream.events_per_pair();
        per_pair.sort_unstable();
        stats.events_per_pair_p50 = percentile(&per_pair, 0.5);
        stats.events_per_pair_p99 = percentile(&per_pair, 0.99);
        stats.wall_ms.stream = ms(t);

        let (n, m) = (inst.n(), inst.m());
        let snap_error = (n + m - 1) as f64 * inst.norm().unit_cube_diagonal(2) * prep.resolution();
        let filter = (1.0 + inner.eps()) * (inst.threshold() + snap_error);
        Ok(SubcubicPlan { inst: inst.clone(), sweep: Some(Sweep { q, stream, filter }), stats })
    }

    pub fn candidates(&self) -> Option<&CandidateSet> {
        self.sweep.as_ref().map(|s| &s.q)
    }

    pub fn stream(&self) -> Option<&UpdateStream> {
        self.sweep.as_ref().map(|s| &s.stream)
    }

    /// Replays the stream through `engine`, querying at every candidate.
    pub fn run(&self, engine: &mut dyn DynamicGridSp) -> PipelineResult {
        let inst = &self.inst;
        let mut stats = self.stats.clone();
        let Some(sweep) = &self.sweep else {
            return PipelineResult { verdict: decide_zero(inst), stats };
        };
        let t = Instant::now();
        let events = &sweep.stream.events;
        engine.init(WeightGrid::zeros(inst.n(), inst.m()));
        let mut next = 0;
        let mut verdict = Verdict::Gt;
        for (k, &qt) in sweep.q.times.iter().enumerate() {
            while next < events.len() && events[next].time <= qt {
                engine.apply(&events[next]);
                next += 1;
            }
            stats.queries += 1;
            if engine.query() > sweep.filter {
                continue;
            }
            stats.verifications += 1;
            let tau = sweep.q.translation(k);
            let value = inst.evaluate(tau);
            if value <= inst.threshold() {
                verdict = Verdict::Le(Witness { tau: Point::from(tau), value });
                break;
            }
        }
        stats.updates = next;
        stats.wall_ms.replay = ms(t);
        PipelineResult { verdict, stats }
    }
}

/// [`decide_subcubic`] with a caller-supplied engine.
pub fn decide_subcubic_with(inst: &DecisionInstance, engine: &mut dyn DynamicGridSp) -> Result<PipelineResult> {
    Ok(SubcubicPlan::new(inst)?.run(engine))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dtw::grid_shortest_path;
    use crate::geometry::{Curve, Norm};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_grid(n: usize, m: usize, rng: &mut ChaCha8Rng) -> WeightGrid {
        WeightGrid::new(n, m, (0..n * m).map(|_| rng.gen_range(0.0..5.0)).collect()).unwrap()
    }

    #[test]
    fn engines_match_full_recompute() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for kind in [EngineKind::Recompute, EngineKind::DirtyRegion] {
            let g = random_grid(5, 7, &mut rng);
            let mut e = kind.build(g.clone());
            assert_eq!(e.query(), grid_shortest_path(&g));
            let mut g2 = g.clone();
            g2.set(2, 3, 9.0);
            e.apply(&UpdateEvent { time: 0, i: 2, j: 3, weight: 9.0 });
            assert_eq!(e.query(), grid_shortest_path(&g2));
            e.init(WeightGrid::zeros(4, 4));
            assert_eq!(e.query(), 0.0);
        }
    }

    #[test]
    fn last_write_wins() {
        let mut e = DirtyRegionEngine::new(WeightGrid::zeros(2, 2));
        e.apply(&UpdateEvent { time: 0, i: 0, j: 0, weight: 5.0 });
        e.apply(&UpdateEvent { time: 0, i: 0, j: 0, weight: 1.0 });
        assert_eq!(e.query(), 1.0);
        assert_eq!(e.dirty_from(), 2);
    }

    #[test]
    fn raising_a_weight_never_lowers_the_answer() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut e = DirtyRegionEngine::new(random_grid(6, 6, &mut rng));
        let mut prev = e.query();
        for _ in 0..50 {
            let (i, j) = (rng.gen_range(0..6), rng.gen_range(0..6));
            let w = e.grid.get(i, j) + rng.gen_range(0.0..2.0);
            e.apply(&UpdateEvent { time: 0, i: i as u32, j: j as u32, weight: w });
            let now = e.query();
            assert!(now >= prev);
            prev = now;
        }
    }

    fn xy(p: &[(f64, f64)]) -> Curve {
        Curve::from_xy(p).unwrap()
    }

    #[test]
    fn pipeline_examples() {
        let c = xy(&[(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)]);
        let pi = xy(&[(0.0, 0.0), (3.0, 0.0)]);
        let sigma = xy(&[(0.0, 0.0)]);
        for kind in [EngineKind::Recompute, EngineKind::DirtyRegion] {
            let i = DecisionInstance::new(c.clone(), c.clone(), 1.0, 0.5, Norm::L2).unwrap();
            let r = decide_subcubic(&i, kind).unwrap();
            let w = r.verdict.witness().unwrap();
            assert!(w.value <= i.threshold());
            assert_eq!(w.value, i.evaluate([w.tau.coords()[0], w.tau.coords()[1]]));
            assert!(r.stats.queries <= r.stats.candidates);
            let i = DecisionInstance::new(pi.clone(), sigma.clone(), 1.0, 0.5, Norm::L2).unwrap();
            let r = decide_subcubic(&i, kind).unwrap();
            assert_eq!(r.verdict, Verdict::Gt);
            assert_eq!(r.stats.queries, r.stats.candidates);
            assert_eq!(r.stats.updates, r.stats.stream_events);
            let i = DecisionInstance::new(pi.clone(), sigma.clone(), 3.2, 0.25, Norm::L2).unwrap();
            assert!(decide_subcubic(&i, kind).unwrap().verdict.is_le());
        }
    }
}
