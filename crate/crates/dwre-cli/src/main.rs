use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use dwre::exec::Execution;
use dwre::geom::{BoxRegion, LatticeSite, MarkedConfiguration};
use dwre::harness::{self, Experiment, ExperimentConfig, ExperimentReport, ModelKind};
use dwre::io;
use dwre::lilypond::{self, DeviceOptions, DevicePolicy};
use dwre::model::Model;
use dwre::ppgen::{sample_poisson, sprinkle_split};
use dwre::rng::derive_seed;
use dwre::sprinkling;
use dwre::walks::{basin_stats, trace_all, WalkOutcome};
use dwre::{knn, plot, Error};

#[derive(Parser)]
#[command(name = "dwre", version, about = "Deterministic walks in random environments")]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configuration's base seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[arg(long, global = true, value_enum)]
    model: Option<ModelArg>,
    /// Worker threads for replicate pools (1 runs sequentially).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Knn,
    Lilypond,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a marked Poisson configuration on the padded window.
    Sample {
        /// Window side; defaults to s + 2 * padding.
        #[arg(long)]
        side: Option<f64>,
    },
    /// Build the walk graph of a points file.
    Solve { points: PathBuf },
    /// Follow every walk of a points file to its cycle.
    Trace { points: PathBuf },
    /// Evaluate the model's site events at the origin.
    Events {
        points: PathBuf,
        /// Site scale; defaults to the configuration's s.
        #[arg(long)]
        s: Option<f64>,
    },
    /// List maximal descending chains of a lilypond configuration.
    Chains {
        points: PathBuf,
        #[arg(long)]
        b: f64,
        #[arg(long, default_value_t = 2)]
        n: usize,
    },
    /// Sprinkle, classify sites and run the exploration.
    Sprinkle {
        #[arg(long, default_value_t = 3)]
        radius: i64,
    },
    /// Build a stopping device at the origin site and check it.
    Device {
        /// Require only separation near the site instead of the good event.
        #[arg(long)]
        separation_only: bool,
    },
    /// Run the experiment named in the configuration.
    Experiment {
        /// Also render the report's curves as SVG.
        #[arg(long)]
        plot: bool,
    },
    /// Render the curves of a report as SVG.
    Plot { report: PathBuf },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Invalid(_) | Error::Parse(_) | Error::Precondition(_) => 2,
        Error::NotGeneric(_) => 3,
        Error::ResourceCap(_) => 4,
        Error::NoConvergence(_) | Error::Io(_) => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dwre: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: &Cli) -> dwre::Result<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::Invalid("--threads must be at least 1".into()));
        }
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let cfg = load_config(cli)?;
    fs::create_dir_all(&cli.out)?;
    match &cli.command {
        Command::Sample { side } => cmd_sample(cli, &cfg, *side),
        Command::Solve { points } => cmd_solve(cli, &cfg, points),
        Command::Trace { points } => cmd_trace(cli, &cfg, points),
        Command::Events { points, s } => cmd_events(cli, &cfg, points, s.unwrap_or(cfg.s)),
        Command::Chains { points, b, n } => cmd_chains(cli, points, *b, *n),
        Command::Sprinkle { radius } => cmd_sprinkle(cli, &cfg, *radius),
        Command::Device { separation_only } => cmd_device(cli, &cfg, *separation_only),
        Command::Experiment { plot } => cmd_experiment(cli, &cfg, *plot),
        Command::Plot { report } => cmd_plot(cli, report),
    }
}

/// The configuration file, or defaults (`s = 10`), with flag overrides.
fn load_config(cli: &Cli) -> dwre::Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::from_toml(&fs::read_to_string(p)?)?,
        None => ExperimentConfig::new(ModelKind::Knn, 10.0),
    };
    if let Some(m) = cli.model {
        let kind = match m {
            ModelArg::Knn => ModelKind::Knn,
            ModelArg::Lilypond => ModelKind::Lilypond,
        };
        if kind != cfg.model {
            cfg.model = kind;
            cfg.k = None;
            cfg.pi = None;
            cfg.padding = None;
        }
    }
    if let Some(seed) = cli.seed {
        cfg.base_seed = seed;
    }
    if cli.threads == Some(1) {
        cfg.execution = Execution::Sequential;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write(dir: &Path, name: &str, text: &str) -> dwre::Result<PathBuf> {
    let p = dir.join(name);
    fs::write(&p, text)?;
    Ok(p)
}

fn read_points(p: &Path) -> dwre::Result<MarkedConfiguration> {
    io::read_points(&fs::read_to_string(p)?)
}

fn cmd_sample(cli: &Cli, cfg: &ExperimentConfig, side: Option<f64>) -> dwre::Result<()> {
    let model = cfg.model()?;
    let window = BoxRegion::centered(2, side.unwrap_or(cfg.s + 2.0 * cfg.padding()))?;
    let phi = sample_poisson(&window, cfg.lambda, &model.law(), cfg.seed(0))?;
    let p = write(&cli.out, "points.tsv", &io::write_points(&phi))?;
    println!("{} points -> {}", phi.len(), p.display());
    Ok(())
}

fn cmd_solve(cli: &Cli, cfg: &ExperimentConfig, points: &Path) -> dwre::Result<()> {
    let phi = read_points(points)?;
    if phi.is_empty() {
        return Err(Error::Invalid("the configuration is empty".into()));
    }
    let g = io::graph_table(&phi, &cfg.model()?, cfg.execution)?;
    let p = write(&cli.out, "graph.tsv", &io::write_graph(&g))?;
    println!("{} rows, {} censored -> {}", g.rows.len(), g.censored_count(), p.display());
    Ok(())
}

fn cmd_trace(cli: &Cli, cfg: &ExperimentConfig, points: &Path) -> dwre::Result<()> {
    let phi = read_points(points)?;
    let g = cfg.model()?.build_graph(&phi, cfg.execution)?;
    let (out, cycle_of) = trace_all(&g);
    let mut text = String::from("id\toutcome\ttail\tcycle_length\tcycle_id\n");
    for (i, o) in out.iter().enumerate() {
        let cycle_id = cycle_of[i].map_or("-".to_string(), |c| g.id(c).to_string());
        let row = match *o {
            WalkOutcome::Cycle { tail, cycle } => format!("{}\tcycle\t{tail}\t{cycle}\t{cycle_id}\n", g.id(i)),
            WalkOutcome::Censored { hops } => format!("{}\tcensored\t{hops}\t-\t-\n", g.id(i)),
        };
        text.push_str(&row);
    }
    let p = write(&cli.out, "trace.tsv", &text)?;
    let b = basin_stats(&g);
    println!("{} cycles, {} uncensored, {} censored -> {}", b.basins.len(), b.uncensored, b.censored, p.display());
    Ok(())
}

fn cmd_events(cli: &Cli, cfg: &ExperimentConfig, points: &Path, s: f64) -> dwre::Result<()> {
    let phi = read_points(points)?;
    let rows: Vec<(&str, bool)> = match cfg.model()? {
        Model::Knn(m) => vec![
            ("a1", knn::event_a1(&phi, s, &m)),
            ("a2", knn::event_a2(&phi, s)),
            ("a3", knn::event_a3(&phi, s)),
            ("a4", knn::event_a4(&phi, s)),
            ("as", knn::event_as(&phi, s, &m)),
        ],
        Model::Lilypond => vec![
            ("a5", lilypond::event_a5(&phi, s, harness::A5_ALPHA)),
            ("a7", lilypond::event_a7(&phi, s)),
            ("a8", lilypond::event_a8(&phi, s)),
            ("as", lilypond::event_as(&phi, s)),
        ],
    };
    let mut text = String::from("event\ts\tholds\n");
    for (name, v) in &rows {
        text.push_str(&format!("{name}\t{s}\t{}\n", u8::from(*v)));
    }
    write(&cli.out, "events.tsv", &text)?;
    print!("{text}");
    Ok(())
}

fn cmd_chains(cli: &Cli, points: &Path, b: f64, n: usize) -> dwre::Result<()> {
    let phi = read_points(points)?;
    let chains = lilypond::find_chains(&phi, b, n)?;
    let mut text = String::from("length\tbound\tids\n");
    for c in &chains {
        let ids: Vec<String> = c.points.iter().map(u64::to_string).collect();
        text.push_str(&format!("{}\t{}\t{}\n", c.len(), c.bound, ids.join(",")));
    }
    let p = write(&cli.out, "chains.tsv", &text)?;
    println!("{} chains -> {}", chains.len(), p.display());
    Ok(())
}

fn cmd_sprinkle(cli: &Cli, cfg: &ExperimentConfig, radius: i64) -> dwre::Result<()> {
    if radius < 0 || cfg.s <= 1.0 {
        return Err(Error::Invalid("sprinkling needs radius >= 0 and s > 1".into()));
    }
    let s = cfg.s;
    let model = cfg.model()?;
    let window = BoxRegion::centered(2, (2 * radius + 3) as f64 * s)?;
    let split = sprinkle_split(&window, s, &model.law(), cfg.seed(0), cfg.lambda)?;
    let sites = sprinkling::SiteWindow::cube(2, radius)?;
    let field = sprinkling::classify_with_model(&split.x1, &split.x2, s, &sites, &model)?;
    let occupied = sprinkling::occupancy(&split.x2, s, &sites)?;
    let r = sprinkling::reveal(&field, &occupied);
    let mut text = String::from("z1\tz2\ty\toccupied\trevealed\tbad\n");
    for z in sites.sites() {
        let flags = [occupied.contains(&z), r.revealed.contains(&z), r.bad.contains(&z)].map(|b| u8::from(b).to_string());
        text.push_str(&format!("{}\t{}\t{}\t{}\n", z.0[0], z.0[1], field.get(&z).expect("in window"), flags.join("\t")));
    }
    write(&cli.out, "sites.tsv", &text)?;
    let mut order = String::from("step\tz1\tz2\n");
    for (k, z) in r.trace.iter().enumerate() {
        order.push_str(&format!("{k}\t{}\t{}\n", z.0[0], z.0[1]));
    }
    write(&cli.out, "reveal_trace.tsv", &order)?;
    let stats = sprinkling::cluster_stats(&r.revealed, &sites);
    let [y0, y1, y2] = field.counts();
    println!(
        "Y counts {y0}/{y1}/{y2}, {} revealed of {}, largest cluster {}",
        r.revealed.len(),
        sites.len(),
        stats.sizes.first().copied().unwrap_or(0)
    );
    Ok(())
}

fn cmd_device(cli: &Cli, cfg: &ExperimentConfig, separation_only: bool) -> dwre::Result<()> {
    if cfg.model != ModelKind::Lilypond {
        return Err(Error::Invalid("stopping devices are built for the lilypond model".into()));
    }
    let s = cfg.s;
    let seed = cfg.seed(0);
    let window = BoxRegion::centered(2, 3.0 * s + 2.0 * cfg.padding())?;
    let mut phi = sample_poisson(&window, cfg.lambda, &Model::Lilypond.law(), seed)?;
    let q3 = BoxRegion::centered(2, 3.0 * s)?;
    let policy = if separation_only {
        let near = lilypond::separate_greedy(&phi.restrict(&q3), s);
        phi = phi.filter(|p| !q3.contains(&p.position) || near.index_of(p.id).is_some());
        DevicePolicy::SeparationOnly
    } else {
        DevicePolicy::RequireGood
    };
    let o = LatticeSite::origin(2);
    let opts = DeviceOptions { policy, seed: derive_seed(seed, 1), ..DeviceOptions::default() };
    let device = lilypond::gen_device(&phi, &o, s, &opts)?;
    let us = lilypond::check_us(&phi, &device, &MarkedConfiguration::empty(window), s)?;
    write(&cli.out, "sample.tsv", &io::write_points(&phi))?;
    let p = write(&cli.out, "device.tsv", &io::write_points(&device.psi))?;
    println!(
        "{} cycles, {} device points, {} caught, US {} -> {}",
        device.cycles.len(),
        device.psi.len(),
        us.caught,
        if us.passed() { "passed" } else { "failed" },
        p.display()
    );
    Ok(())
}

fn cmd_experiment(cli: &Cli, cfg: &ExperimentConfig, with_plots: bool) -> dwre::Result<()> {
    let Some(exp) = &cfg.experiment else {
        return Err(Error::Invalid("the configuration has no [experiment] section".into()));
    };
    let name = exp.name();
    let report = harness::run(cfg)?;
    write(&cli.out, &format!("{name}_report.toml"), &report.to_toml())?;
    write(&cli.out, &format!("{name}_rows.tsv"), &report.rows.to_tsv())?;
    if with_plots {
        write_plots(&cli.out, &report)?;
    }
    for e in &report.estimates {
        println!("{}\t{}\t[{}, {}]", e.name, e.value, e.lo, e.hi);
    }
    for (k, v) in &report.values {
        println!("{k}\t{v}");
    }
    for (k, v) in &report.flags {
        println!("{k}\t{v}");
    }
    if matches!(exp, Experiment::UsSuite { .. }) && report.values.get("good_replicates") == Some(&0.0) {
        eprintln!("dwre: no replicate satisfied the good-site event; the suite checked nothing");
    }
    Ok(())
}

fn write_plots(dir: &Path, report: &ExperimentReport) -> dwre::Result<()> {
    for (stem, svg) in plot::render_report(report)? {
        let p = write(dir, &format!("{stem}.svg"), &svg)?;
        println!("plot -> {}", p.display());
    }
    Ok(())
}

fn cmd_plot(cli: &Cli, report: &Path) -> dwre::Result<()> {
    let report = ExperimentReport::from_toml(&fs::read_to_string(report)?)?;
    write_plots(&cli.out, &report)
}
