//! Seeded Monte Carlo experiments over both models.
//!
//! Replicate `r` of an experiment draws everything from
//! `derive_seed(base_seed, r)` (sweeps over a grid first derive a per-point
//! base), so results are merged by index and do not depend on scheduling.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::Execution;
use crate::geom::{BoxRegion, LatticeSite, MarkedConfiguration};
use crate::knn::{self, KnnIndex, KnnModel};
use crate::lilypond::{self, DeviceOptions, DevicePolicy};
use crate::model::Model;
use crate::ppgen::{sample_poisson, sprinkle_split};
use crate::rng::derive_seed;
use crate::sprinkling;
use crate::stats::{self, wilson};
use crate::walks::{trace_all, WalkOutcome};

pub const CONFIG_VERSION: u32 = 1;
pub const BOOTSTRAP_RESAMPLES: usize = 200;
/// Exponent of the shielding event when evaluated on its own.
pub const A5_ALPHA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Knn,
    Lilypond,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainPoint {
    pub s: f64,
    pub b: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    Percolation {},
    HopTail {},
    EventCurve {
        event: String,
        s_grid: Vec<f64>,
    },
    ChainBound {
        points: Vec<ChainPoint>,
    },
    UsSuite {
        /// Build devices on a greedily separated sample instead of
        /// requiring the good-site event.
        #[serde(default)]
        separation_only: bool,
        /// Replicates of the literal estimate of a perfect site under
        /// natural sprinkling.
        #[serde(default)]
        natural_replicates: usize,
    },
    Reveal {
        radius: i64,
    },
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Percolation {} => "percolation",
            Experiment::HopTail {} => "hop_tail",
            Experiment::EventCurve { .. } => "event_curve",
            Experiment::ChainBound { .. } => "chain_bound",
            Experiment::UsSuite { .. } => "us_suite",
            Experiment::Reveal { .. } => "reveal",
        }
    }
}

fn default_lambda() -> f64 {
    1.0
}

fn default_replicates() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub model: ModelKind,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// Analysis window side, or the site scale for site-based experiments.
    pub s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub padding: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi: Option<Vec<f64>>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub execution: Execution,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
}

impl ExperimentConfig {
    pub fn new(model: ModelKind, s: f64) -> Self {
        ExperimentConfig {
            version: CONFIG_VERSION,
            model,
            lambda: 1.0,
            s,
            padding: None,
            k: None,
            pi: None,
            replicates: 1,
            base_seed: 0,
            execution: Execution::default(),
            experiment: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs serialize")
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(invalid!("config version {} is not supported (expected {CONFIG_VERSION})", self.version));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(invalid!("lambda must be positive, got {}", self.lambda));
        }
        if !(self.s > 0.0 && self.s.is_finite()) {
            return Err(invalid!("s must be positive, got {}", self.s));
        }
        if let Some(m) = self.padding {
            if !(m >= 0.0 && m.is_finite()) {
                return Err(invalid!("padding must be nonnegative, got {m}"));
            }
        }
        if self.replicates == 0 {
            return Err(invalid!("replicates must be at least 1"));
        }
        if self.model == ModelKind::Lilypond && (self.k.is_some() || self.pi.is_some()) {
            return Err(invalid!("k and pi only apply to the knn model"));
        }
        self.model()?;
        match &self.experiment {
            Some(Experiment::EventCurve { event, s_grid }) => {
                let _ = event_check(&self.model()?, event)?;
                if s_grid.is_empty() || s_grid.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
                    return Err(invalid!("s_grid needs positive entries"));
                }
            }
            Some(Experiment::ChainBound { points }) => {
                if points.is_empty() || points.iter().any(|p| !(p.s > 0.0 && p.b > 0.0)) {
                    return Err(invalid!("chain grid needs positive s and b"));
                }
            }
            Some(Experiment::UsSuite { .. }) => {
                if self.model != ModelKind::Lilypond {
                    return Err(invalid!("the device suite applies to the lilypond model"));
                }
                if self.s <= 1.0 {
                    return Err(invalid!("the device suite needs s > 1"));
                }
            }
            Some(Experiment::Reveal { radius }) => {
                if *radius < 0 {
                    return Err(invalid!("reveal radius must be nonnegative"));
                }
                if self.s <= 1.0 {
                    return Err(invalid!("sprinkling needs s > 1"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn model(&self) -> Result<Model> {
        match self.model {
            ModelKind::Lilypond => Ok(Model::Lilypond),
            ModelKind::Knn => {
                let k = self.k.unwrap_or(1);
                let pi = self.pi.clone().unwrap_or_else(|| vec![1.0 / k.max(1) as f64; k]);
                Ok(Model::Knn(KnnModel::new(k, pi, crate::geom::DEFAULT_TOLERANCE)?))
            }
        }
    }

    /// Padding `m` around the analysis box: `5 / sqrt(lambda)` for the
    /// nearest-neighbour walk, 20 for lilypond segments.
    pub fn padding(&self) -> f64 {
        self.padding.unwrap_or(match self.model {
            ModelKind::Knn => 5.0 / self.lambda.sqrt(),
            ModelKind::Lilypond => 20.0,
        })
    }

    pub fn seed(&self, r: usize) -> u64 {
        derive_seed(self.base_seed, r as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub name: String,
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub successes: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
}

impl Estimate {
    pub fn proportion(name: impl Into<String>, k: u64, n: u64) -> Self {
        let (lo, hi) = wilson(k, n);
        let value = if n == 0 { f64::NAN } else { k as f64 / n as f64 };
        Estimate { name: name.into(), value, lo, hi, successes: Some(k), trials: Some(n) }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lo: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub hi: Vec<f64>,
}

/// Raw per-replicate rows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_tsv(&self) -> String {
        let mut out = self.header.join("\t");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join("\t"));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub kind: String,
    /// Excluded from reproducibility comparisons.
    pub wall_clock_s: f64,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub values: BTreeMap<String, f64>,
    #[serde(default)]
    pub flags: BTreeMap<String, bool>,
    #[serde(default)]
    pub estimates: Vec<Estimate>,
    #[serde(default)]
    pub curves: BTreeMap<String, Curve>,
    pub config: ExperimentConfig,
    #[serde(skip)]
    pub rows: Table,
}

impl ExperimentReport {
    fn new(kind: &str, cfg: &ExperimentConfig, rows: Table) -> Self {
        ExperimentReport {
            kind: kind.to_string(),
            wall_clock_s: 0.0,
            seeds: Vec::new(),
            values: BTreeMap::new(),
            flags: BTreeMap::new(),
            estimates: Vec::new(),
            curves: BTreeMap::new(),
            config: cfg.clone(),
            rows,
        }
    }

    pub fn estimate(&self, name: &str) -> Option<&Estimate> {
        self.estimates.iter().find(|e| e.name == name)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("reports serialize")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    /// The report with its timing zeroed, for reproducibility checks.
    pub fn untimed(&self) -> Self {
        ExperimentReport { wall_clock_s: 0.0, ..self.clone() }
    }
}

/// Runs the experiment named in the config.
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    match &cfg.experiment {
        None => Err(invalid!("config has no [experiment] section")),
        Some(Experiment::Percolation {}) => run_percolation(cfg),
        Some(Experiment::HopTail {}) => run_hop_tail(cfg),
        Some(Experiment::EventCurve { event, s_grid }) => run_event_curve(cfg, event, s_grid),
        Some(Experiment::ChainBound { points }) => run_chain_bound(cfg, points),
        Some(Experiment::UsSuite { separation_only, natural_replicates }) => {
            run_us_suite(cfg, *separation_only, *natural_replicates)
        }
        Some(Experiment::Reveal { radius }) => run_reveal(cfg, *radius),
    }
}

fn timed<F: FnOnce() -> Result<ExperimentReport>>(f: F) -> Result<ExperimentReport> {
    let t = Instant::now();
    let mut rep = f()?;
    rep.wall_clock_s = t.elapsed().as_secs_f64();
    Ok(rep)
}

fn fmt(v: f64) -> String {
    v.to_string()
}

// ---------------------------------------------------------------- walks

/// Redraws allowed after a sample fails the genericity check.
pub const MAX_REDRAWS: u32 = 8;

/// Runs `f` on `seed`. A sample that fails the genericity check (a
/// probability-zero event, made positive by the coordinate tolerance) is
/// replaced by one drawn from `derive_seed(seed, k)`, `k = 1, 2, ..`.
/// Returns the number of redraws.
pub fn generic<T>(seed: u64, f: impl Fn(u64) -> Result<T>) -> Result<(T, u32)> {
    let mut current = seed;
    let mut k = 0;
    loop {
        match f(current) {
            Err(Error::NotGeneric(_)) if k < MAX_REDRAWS => {
                k += 1;
                current = derive_seed(seed, u64::from(k));
            }
            r => return r.map(|t| (t, k)),
        }
    }
}

/// One percolation replicate: walks started in the analysis box.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WalkReplicate {
    pub seed: u64,
    pub points: usize,
    pub walks: u64,
    pub censored: u64,
    pub stuck: u64,
    /// `tails[t]` = uncensored walks with `t` hops before their cycle.
    pub tails: Vec<u64>,
    /// Cycle length to number of walks ending in such a cycle.
    pub cycles: BTreeMap<usize, u64>,
    pub redraws: u32,
}

/// Samples `Q_{s + 2m}`, builds the graph, censors nodes whose descendant
/// the window cannot certify, and traces every walk from `Q_s`.
pub fn walk_replicate(cfg: &ExperimentConfig, model: &Model, seed: u64) -> Result<WalkReplicate> {
    let (mut rep, redraws) = generic(seed, |sd| walk_once(cfg, model, sd))?;
    rep.seed = seed;
    rep.redraws = redraws;
    Ok(rep)
}

fn walk_once(cfg: &ExperimentConfig, model: &Model, seed: u64) -> Result<WalkReplicate> {
    let side = cfg.s + 2.0 * cfg.padding();
    let window = BoxRegion::centered(2, side)?;
    let phi = sample_poisson(&window, cfg.lambda, &model.law(), seed)?;
    let mut g = model.build_graph(&phi, Execution::Sequential)?;
    if let Model::Knn(m) = model {
        // A descendant is only certain when its stabilization ball fits.
        if phi.len() > m.k {
            let idx = KnnIndex::new(&phi, m);
            for i in 0..phi.len() {
                let ball = idx.r_stab(i, m)?;
                if ball.radius >= window.dist_to_boundary(&phi.point(i).position) {
                    g.censor(i);
                }
            }
        }
    }
    let analysis = BoxRegion::centered(2, cfg.s)?;
    let (out, _) = trace_all(&g);
    let mut rep = WalkReplicate { seed, points: phi.len(), ..Default::default() };
    for (i, o) in out.iter().enumerate() {
        if !analysis.contains(&phi.point(i).position) {
            continue;
        }
        rep.walks += 1;
        match *o {
            WalkOutcome::Censored { .. } => rep.censored += 1,
            WalkOutcome::Cycle { tail, cycle } => {
                rep.stuck += 1;
                if tail >= rep.tails.len() {
                    rep.tails.resize(tail + 1, 0);
                }
                rep.tails[tail] += 1;
                *rep.cycles.entry(cycle).or_default() += 1;
            }
        }
    }
    Ok(rep)
}

pub fn walk_replicates(cfg: &ExperimentConfig) -> Result<Vec<WalkReplicate>> {
    cfg.validate()?;
    let model = cfg.model()?;
    cfg.execution.try_map(cfg.replicates, |r| walk_replicate(cfg, &model, cfg.seed(r)))
}

fn pooled_tails(reps: &[WalkReplicate]) -> Vec<u64> {
    let mut pooled: Vec<u64> = Vec::new();
    for r in reps {
        if r.tails.len() > pooled.len() {
            pooled.resize(r.tails.len(), 0);
        }
        for (a, b) in pooled.iter_mut().zip(&r.tails) {
            *a += b;
        }
    }
    pooled
}

fn survival_curve(pooled: &[u64]) -> Curve {
    let surv = stats::survivors(pooled);
    let total = surv.first().copied().unwrap_or(0).max(1) as f64;
    Curve {
        x: (0..surv.len()).map(|t| t as f64).collect(),
        y: surv.iter().map(|&c| c as f64 / total).collect(),
        ..Default::default()
    }
}

pub fn percolation_report(cfg: &ExperimentConfig, reps: &[WalkReplicate]) -> ExperimentReport {
    let mut table = Table::new(&["replicate", "seed", "points", "walks", "censored", "stuck", "mean_tail", "max_tail"]);
    let (mut walks, mut censored, mut stuck) = (0u64, 0u64, 0u64);
    let mut cycles: BTreeMap<usize, u64> = BTreeMap::new();
    for (r, rep) in reps.iter().enumerate() {
        walks += rep.walks;
        censored += rep.censored;
        stuck += rep.stuck;
        for (&c, &n) in &rep.cycles {
            *cycles.entry(c).or_default() += n;
        }
        let tail_sum: u64 = rep.tails.iter().enumerate().map(|(t, &n)| t as u64 * n).sum();
        let mean_tail = if rep.stuck > 0 { tail_sum as f64 / rep.stuck as f64 } else { f64::NAN };
        table.push(vec![
            r.to_string(),
            rep.seed.to_string(),
            rep.points.to_string(),
            rep.walks.to_string(),
            rep.censored.to_string(),
            rep.stuck.to_string(),
            fmt(mean_tail),
            rep.tails.len().saturating_sub(1).to_string(),
        ]);
    }
    let mut out = ExperimentReport::new("percolation", cfg, table);
    out.seeds = reps.iter().map(|r| r.seed).collect();
    let uncensored = walks - censored;
    out.estimates.push(Estimate::proportion("stuck_fraction_uncensored", stuck, uncensored));
    out.estimates.push(Estimate::proportion("censored_fraction", censored, walks));
    let pooled = pooled_tails(reps);
    let tail_sum: u64 = pooled.iter().enumerate().map(|(t, &n)| t as u64 * n).sum();
    out.values.insert("walks".into(), walks as f64);
    out.values.insert("nongeneric_redraws".into(), reps.iter().map(|r| f64::from(r.redraws)).sum());
    out.values.insert("padding".into(), cfg.padding());
    out.values.insert("mean_tail".into(), if stuck > 0 { tail_sum as f64 / stuck as f64 } else { f64::NAN });
    out.values.insert("max_tail".into(), pooled.len().saturating_sub(1) as f64);
    let cyc_sum: u64 = cycles.iter().map(|(&c, &n)| c as u64 * n).sum();
    out.values.insert("mean_cycle_length".into(), if stuck > 0 { cyc_sum as f64 / stuck as f64 } else { f64::NAN });
    out.flags.insert("all_uncensored_stuck".into(), stuck == uncensored);
    out.curves.insert(
        "cycle_lengths".into(),
        Curve { x: cycles.keys().map(|&c| c as f64).collect(), y: cycles.values().map(|&n| n as f64).collect(), ..Default::default() },
    );
    out.curves.insert("survival".into(), survival_curve(&pooled));
    out
}

pub fn hop_tail_report(cfg: &ExperimentConfig, reps: &[WalkReplicate]) -> ExperimentReport {
    let mut table = Table::new(&["t", "survivors", "survival"]);
    let pooled = pooled_tails(reps);
    let surv = stats::survivors(&pooled);
    let curve = survival_curve(&pooled);
    for (t, (&c, &y)) in surv.iter().zip(&curve.y).enumerate() {
        table.push(vec![t.to_string(), c.to_string(), fmt(y)]);
    }
    let mut out = ExperimentReport::new("hop_tail", cfg, table);
    out.seeds = reps.iter().map(|r| r.seed).collect();
    let fit = stats::log_survival_fit(&pooled);
    let (slope, r2, intercept) = fit.map_or((f64::NAN, f64::NAN, f64::NAN), |f| (f.slope, f.r2, f.intercept));
    out.values.insert("slope".into(), slope);
    out.values.insert("intercept".into(), intercept);
    out.values.insert("r2".into(), r2);
    out.values.insert(
        "fit_points".into(),
        surv.iter().take_while(|&&c| c >= stats::MIN_SURVIVORS).count() as f64,
    );
    let per_rep: Vec<Vec<u64>> = reps.iter().map(|r| r.tails.clone()).collect();
    let boot = stats::bootstrap_slope(&per_rep, BOOTSTRAP_RESAMPLES, derive_seed(cfg.base_seed, u64::MAX));
    let (lo, hi) = boot.unwrap_or((f64::NAN, f64::NAN));
    out.estimates.push(Estimate { name: "slope".into(), value: slope, lo, hi, successes: None, trials: None });
    out.flags.insert("survival_monotone".into(), curve.y.windows(2).all(|w| w[1] <= w[0]));
    out.curves.insert("survival".into(), curve);
    out
}

pub fn run_percolation(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    timed(|| Ok(percolation_report(cfg, &walk_replicates(cfg)?)))
}

pub fn run_hop_tail(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    timed(|| Ok(hop_tail_report(cfg, &walk_replicates(cfg)?)))
}

// ---------------------------------------------------------------- events

type EventFn = Box<dyn Fn(&MarkedConfiguration, f64) -> bool + Sync + Send>;

fn event_check(model: &Model, name: &str) -> Result<EventFn> {
    let f: EventFn = match (model, name) {
        (Model::Knn(m), "a1") => {
            let m = m.clone();
            Box::new(move |phi, s| knn::event_a1(phi, s, &m))
        }
        (Model::Knn(_), "a2") => Box::new(knn::event_a2),
        (Model::Knn(_), "a3") => Box::new(knn::event_a3),
        (Model::Knn(_), "a4") => Box::new(knn::event_a4),
        (Model::Knn(m), "as") => {
            let m = m.clone();
            Box::new(move |phi, s| knn::event_as(phi, s, &m))
        }
        (Model::Lilypond, "a5") => Box::new(|phi, s| lilypond::event_a5(phi, s, A5_ALPHA)),
        (Model::Lilypond, "a7") => Box::new(lilypond::event_a7),
        (Model::Lilypond, "a8") => Box::new(lilypond::event_a8),
        (Model::Lilypond, "as") => Box::new(lilypond::event_as),
        _ => return Err(invalid!("event {name:?} is not defined for the {} model", model.name())),
    };
    Ok(f)
}

/// `P(no point in Q_s \ Q_{s - s^-2})` for a planar Poisson sample.
pub fn a2_void_probability(lambda: f64, s: f64) -> f64 {
    let inner = s - s.powi(-2);
    (-lambda * (s * s - inner * inner)).exp()
}

pub fn run_event_curve(cfg: &ExperimentConfig, event: &str, s_grid: &[f64]) -> Result<ExperimentReport> {
    timed(|| {
        cfg.validate()?;
        let model = cfg.model()?;
        let check = event_check(&model, event)?;
        let law = model.law();
        let mut table = Table::new(&["s", "replicate", "seed", "points", "event"]);
        let mut out_curve = Curve::default();
        let mut estimates = Vec::new();
        let mut seeds = Vec::new();
        for (gi, &s) in s_grid.iter().enumerate() {
            let base = derive_seed(cfg.base_seed, gi as u64);
            let window = BoxRegion::centered(2, 3.0 * s)?;
            let rows = cfg.execution.try_map(cfg.replicates, |r| -> Result<(u64, usize, bool)> {
                let seed = derive_seed(base, r as u64);
                let phi = sample_poisson(&window, cfg.lambda, &law, seed)?;
                Ok((seed, phi.len(), check(&phi, s)))
            })?;
            let hits = rows.iter().filter(|r| r.2).count() as u64;
            for (r, (seed, n, hit)) in rows.into_iter().enumerate() {
                seeds.push(seed);
                table.push(vec![fmt(s), r.to_string(), seed.to_string(), n.to_string(), u8::from(hit).to_string()]);
            }
            let e = Estimate::proportion(format!("P({event}) s={s}"), hits, cfg.replicates as u64);
            out_curve.x.push(s);
            out_curve.y.push(e.value);
            out_curve.lo.push(e.lo);
            out_curve.hi.push(e.hi);
            estimates.push(e);
        }
        let mut out = ExperimentReport::new("event_curve", cfg, table);
        out.seeds = seeds;
        if event == "a2" {
            let mut inside = true;
            for (e, &s) in estimates.iter().zip(s_grid) {
                let p = a2_void_probability(cfg.lambda, s);
                out.values.insert(format!("analytic s={s}"), p);
                inside &= e.contains(p);
            }
            out.flags.insert("analytic_within_ci".into(), inside);
        }
        out.flags.insert("increasing".into(), out_curve.y.windows(2).all(|w| w[1] > w[0]));
        out.estimates = estimates;
        out.curves.insert("event".into(), out_curve);
        Ok(out)
    })
}

pub fn run_chain_bound(cfg: &ExperimentConfig, points: &[ChainPoint]) -> Result<ExperimentReport> {
    timed(|| {
        cfg.validate()?;
        let law = cfg.model()?.law();
        let mut table = Table::new(&["s", "b", "n", "replicates", "hits", "estimate", "se", "bound", "violation"]);
        let mut out = ExperimentReport::new("chain_bound", cfg, Table::default());
        let mut any = false;
        for (gi, p) in points.iter().enumerate() {
            let base = derive_seed(cfg.base_seed, gi as u64);
            // Every chain from Q_s with n gaps of at most b stays in here.
            let window = BoxRegion::centered(2, p.s + 2.0 * p.n as f64 * p.b)?;
            let hits = cfg.execution.try_map(cfg.replicates, |r| -> Result<bool> {
                let phi = sample_poisson(&window, cfg.lambda, &law, derive_seed(base, r as u64))?;
                Ok(lilypond::event_a6(&phi, p.s, p.b, p.n))
            })?;
            let k = hits.iter().filter(|&&h| h).count() as u64;
            let n = cfg.replicates as u64;
            let bound = lilypond::chain_bound(p.s, p.b, p.n, cfg.lambda);
            let se = stats::proportion_se(k, n);
            let est = k as f64 / n as f64;
            let violation = est > bound + 3.0 * se;
            any |= violation;
            let tag = format!("s={} b={} n={}", p.s, p.b, p.n);
            out.estimates.push(Estimate::proportion(format!("P(a6) {tag}"), k, n));
            out.values.insert(format!("bound {tag}"), bound);
            out.flags.insert(format!("violation {tag}"), violation);
            table.push(vec![
                fmt(p.s),
                fmt(p.b),
                p.n.to_string(),
                n.to_string(),
                k.to_string(),
                fmt(est),
                fmt(se),
                fmt(bound),
                u8::from(violation).to_string(),
            ]);
        }
        out.flags.insert("no_violation".into(), !any);
        out.seeds = (0..points.len()).map(|gi| derive_seed(cfg.base_seed, gi as u64)).collect();
        out.rows = table;
        Ok(out)
    })
}

// ---------------------------------------------------------------- devices

#[derive(Debug, Clone, Default, PartialEq)]
pub struct UsReplicate {
    pub seed: u64,
    pub points: usize,
    pub good: bool,
    pub us_passed: bool,
    pub incremental_passed: bool,
    pub caught: usize,
    pub device_points: usize,
    pub redraws: u32,
}

/// One device replicate at the origin site. Without `separation_only` the
/// replicate is skipped unless the good-site event holds.
pub fn us_replicate(cfg: &ExperimentConfig, seed: u64, separation_only: bool) -> Result<UsReplicate> {
    let (mut rep, redraws) = generic(seed, |sd| us_once(cfg, sd, separation_only))?;
    rep.seed = seed;
    rep.redraws = redraws;
    Ok(rep)
}

fn us_once(cfg: &ExperimentConfig, seed: u64, separation_only: bool) -> Result<UsReplicate> {
    let s = cfg.s;
    let window = BoxRegion::centered(2, 3.0 * s + 2.0 * cfg.padding())?;
    let mut phi = sample_poisson(&window, cfg.lambda, &Model::Lilypond.law(), seed)?;
    let q3 = BoxRegion::centered(2, 3.0 * s)?;
    let policy = if separation_only {
        // Separation is only required near the site.
        let near = lilypond::separate_greedy(&phi.restrict(&q3), s);
        phi = phi.filter(|p| !q3.contains(&p.position) || near.index_of(p.id).is_some());
        DevicePolicy::SeparationOnly
    } else {
        DevicePolicy::RequireGood
    };
    let mut rep = UsReplicate { seed, points: phi.len(), ..Default::default() };
    rep.good = match policy {
        DevicePolicy::RequireGood => lilypond::event_as(&phi, s),
        DevicePolicy::SeparationOnly => lilypond::event_a8(&phi.restrict(&q3), s),
    };
    if !rep.good {
        return Ok(rep);
    }
    let o = LatticeSite::origin(2);
    let opts = DeviceOptions { policy, seed: derive_seed(seed, 1), ..DeviceOptions::default() };
    let device = lilypond::gen_device(&phi, &o, s, &opts)?;
    rep.device_points = device.psi.len();
    let empty = MarkedConfiguration::empty(window.clone());
    let us = lilypond::check_us(&phi, &device, &empty, s)?;
    rep.us_passed = us.passed();
    rep.caught = us.caught;
    let psi = device.psi.with_window(window)?;
    let inc = sprinkling::incremental_check(&phi, &[(o, psi)], &[0], &Model::Lilypond, s, Execution::Sequential)?;
    rep.incremental_passed = inc.passed();
    Ok(rep)
}

/// Literal check of a perfect origin site under natural sprinkling.
pub fn natural_perfect(cfg: &ExperimentConfig, seed: u64) -> Result<bool> {
    generic(seed, |sd| natural_once(cfg, sd)).map(|(hit, _)| hit)
}

fn natural_once(cfg: &ExperimentConfig, seed: u64) -> Result<bool> {
    let s = cfg.s;
    let window = BoxRegion::centered(2, 3.0 * s)?;
    let split = sprinkle_split(&window, s, &Model::Lilypond.law(), seed, cfg.lambda)?;
    let home = BoxRegion::centered(2, s)?;
    let x2 = split.x2.restrict(&home);
    Model::Lilypond.is_perfect(&split.x1, &x2, s)
}

pub fn run_us_suite(cfg: &ExperimentConfig, separation_only: bool, natural: usize) -> Result<ExperimentReport> {
    timed(|| {
        cfg.validate()?;
        let reps = cfg.execution.try_map(cfg.replicates, |r| us_replicate(cfg, cfg.seed(r), separation_only))?;
        let mut table =
            Table::new(&["replicate", "seed", "points", "good", "us_passed", "incremental_passed", "caught", "device_points"]);
        for (r, x) in reps.iter().enumerate() {
            table.push(vec![
                r.to_string(),
                x.seed.to_string(),
                x.points.to_string(),
                u8::from(x.good).to_string(),
                u8::from(x.us_passed).to_string(),
                u8::from(x.incremental_passed).to_string(),
                x.caught.to_string(),
                x.device_points.to_string(),
            ]);
        }
        let mut out = ExperimentReport::new("us_suite", cfg, table);
        out.seeds = reps.iter().map(|r| r.seed).collect();
        let good = reps.iter().filter(|r| r.good).count() as u64;
        let passed = reps.iter().filter(|r| r.good && r.us_passed).count() as u64;
        let inc = reps.iter().filter(|r| r.good && r.incremental_passed).count() as u64;
        out.estimates.push(Estimate::proportion("good_fraction", good, reps.len() as u64));
        out.estimates.push(Estimate::proportion("us_pass_rate", passed, good));
        out.estimates.push(Estimate::proportion("incremental_pass_rate", inc, good));
        out.values.insert("good_replicates".into(), good as f64);
        out.values.insert("nongeneric_redraws".into(), reps.iter().map(|r| f64::from(r.redraws)).sum());
        out.values.insert("caught_total".into(), reps.iter().map(|r| r.caught as f64).sum());
        out.flags.insert("separation_only".into(), separation_only);
        // False when nothing was checked.
        out.flags.insert("all_good_pass".into(), good > 0 && passed == good && inc == good);
        if natural > 0 {
            let base = derive_seed(cfg.base_seed, u64::MAX - 1);
            let hits = cfg.execution.try_map(natural, |r| natural_perfect(cfg, derive_seed(base, r as u64)))?;
            let k = hits.iter().filter(|&&h| h).count() as u64;
            out.estimates.push(Estimate::proportion("natural_perfect", k, natural as u64));
        }
        Ok(out)
    })
}

// ---------------------------------------------------------------- sprinkling

#[derive(Debug, Clone, PartialEq)]
pub struct RevealReplicate {
    pub seed: u64,
    pub counts: [usize; 3],
    pub stats: sprinkling::ClusterStats,
    pub iterations: usize,
    pub redraws: u32,
}

/// Sprinkles a sample around the site window `|z| <= radius`, classifies,
/// explores and measures the revealed set.
pub fn reveal_replicate(cfg: &ExperimentConfig, radius: i64, seed: u64) -> Result<RevealReplicate> {
    let (mut rep, redraws) = generic(seed, |sd| reveal_once(cfg, radius, sd))?;
    rep.seed = seed;
    rep.redraws = redraws;
    Ok(rep)
}

fn reveal_once(cfg: &ExperimentConfig, radius: i64, seed: u64) -> Result<RevealReplicate> {
    let s = cfg.s;
    let model = cfg.model()?;
    let window = BoxRegion::centered(2, (2 * radius + 3) as f64 * s)?;
    let split = sprinkle_split(&window, s, &model.law(), seed, cfg.lambda)?;
    let sites = sprinkling::SiteWindow::cube(2, radius)?;
    let field = sprinkling::classify_with_model(&split.x1, &split.x2, s, &sites, &model)?;
    let occupied = sprinkling::occupancy(&split.x2, s, &sites)?;
    let r = sprinkling::reveal(&field, &occupied);
    Ok(RevealReplicate {
        seed,
        counts: field.counts(),
        stats: sprinkling::cluster_stats(&r.revealed, &sites),
        iterations: r.trace.len(),
        redraws: 0,
    })
}

pub fn run_reveal(cfg: &ExperimentConfig, radius: i64) -> Result<ExperimentReport> {
    timed(|| {
        cfg.validate()?;
        let reps = cfg.execution.try_map(cfg.replicates, |r| reveal_replicate(cfg, radius, cfg.seed(r)))?;
        let mut table =
            Table::new(&["replicate", "seed", "y0", "y1", "y2", "iterations", "density", "largest_fraction", "clusters"]);
        let mut hist: BTreeMap<usize, u64> = BTreeMap::new();
        for (r, x) in reps.iter().enumerate() {
            for &c in &x.stats.sizes {
                *hist.entry(c).or_default() += 1;
            }
            table.push(vec![
                r.to_string(),
                x.seed.to_string(),
                x.counts[0].to_string(),
                x.counts[1].to_string(),
                x.counts[2].to_string(),
                x.iterations.to_string(),
                fmt(x.stats.density),
                fmt(x.stats.largest_fraction),
                x.stats.sizes.len().to_string(),
            ]);
        }
        let mut out = ExperimentReport::new("reveal", cfg, table);
        out.seeds = reps.iter().map(|r| r.seed).collect();
        let n = reps.len() as f64;
        out.values.insert("mean_density".into(), reps.iter().map(|r| r.stats.density).sum::<f64>() / n);
        out.values
            .insert("mean_largest_fraction".into(), reps.iter().map(|r| r.stats.largest_fraction).sum::<f64>() / n);
        out.values.insert("nongeneric_redraws".into(), reps.iter().map(|r| f64::from(r.redraws)).sum());
        out.values.insert("sites".into(), ((2 * radius + 1) * (2 * radius + 1)) as f64);
        out.curves.insert(
            "cluster_sizes".into(),
            Curve { x: hist.keys().map(|&c| c as f64).collect(), y: hist.values().map(|&c| c as f64).collect(), ..Default::default() },
        );
        Ok(out)
    })
}
