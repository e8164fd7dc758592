use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};

use topo_son::complex::{cech_from_disks, rips_from_disks, SimplicialComplex};
use topo_son::energy::{conserve, coverage_complex, make_qos_groups, DiskModel, EnergyOptions};
use topo_son::experiments::{emit_csv, run_batch, Records, ScenarioConfig, Table};
use topo_son::frequency::{auto_plan, greedy_coloring_by_id, interference_graph};
use topo_son::geometry::RadiusRole;
use topo_son::homology::betti;
use topo_son::io::{nodeset_to_text, read_nodeset};
use topo_son::recovery::{
    plan, run_recovery, DamageModel, DamageScenario, Planner, PlannerOptions,
};
use topo_son::reduction::{reduce_with_guards, BettiGuard, ReductionOptions};
use topo_son::{seeded_rng, Error, NodeSet};

#[derive(Parser)]
#[command(
    name = "topo-son",
    version,
    about = "Simplicial-homology tools for self-organizing cellular networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ComplexKind {
    /// Cliques of intersecting disks.
    Rips,
    /// Tuples of disks with a common point.
    Cech,
}

#[derive(Clone, Copy, ValueEnum)]
enum Role {
    Comm,
    Cov,
}

impl From<Role> for RadiusRole {
    fn from(r: Role) -> Self {
        match r {
            Role::Comm => RadiusRole::Comm,
            Role::Cov => RadiusRole::Cov,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PlannerArg {
    Homology,
    Setcover,
}

impl From<PlannerArg> for Planner {
    fn from(p: PlannerArg) -> Self {
        match p {
            PlannerArg::Homology => Planner::Homology,
            PlannerArg::Setcover => Planner::SetCover,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario batch and write its CSV reports.
    Run {
        config: PathBuf,
        #[arg(long)]
        seeds: Option<u64>,
        #[arg(long)]
        seed0: Option<u64>,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Assign frequencies to a node file; prints `id frequency` lines.
    PlanFreq {
        nodes: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Use the greedy coloring instead of the auto-planner.
        #[arg(long)]
        greedy: bool,
    },
    /// Switch off nodes and shrink radii; prints the kept nodes as a node file.
    Conserve {
        nodes: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "cech")]
        model: ComplexKind,
        #[arg(long)]
        no_shrink: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Patch a damaged network. With `--input`, plans for that node file and
    /// prints the patched network; otherwise runs seeded damage scenarios and
    /// writes one CSV row per seed.
    Recover {
        #[arg(long)]
        input: Option<PathBuf>,
        /// Initially covered fraction for generated damage.
        #[arg(long, default_value_t = 0.2)]
        coverage: f64,
        #[arg(long, value_enum, default_value = "homology")]
        planner: PlannerArg,
        #[arg(long, default_value_t = 0.1)]
        sigma: f64,
        #[arg(long, default_value_t = 0.5)]
        r: f64,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long, default_value_t = 0)]
        seed0: u64,
        /// Metropolis-Hastings proposals per added node.
        #[arg(long, default_value_t = 200)]
        mcmc_steps: usize,
        #[arg(long)]
        n_modes: Option<usize>,
        #[arg(long, default_value_t = 0.2)]
        grid_fraction: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print β0 and β1 of a node file's complex or of a complex file.
    Betti {
        input: PathBuf,
        /// Read `input` as a complex file instead of a node file.
        #[arg(long)]
        complex_file: bool,
        #[arg(long, value_enum, default_value = "rips")]
        complex: ComplexKind,
        #[arg(long, value_enum, default_value = "cov")]
        role: Role,
    },
    /// Write the complex of a node file, one simplex per line.
    Complex {
        nodes: PathBuf,
        #[arg(long, value_enum, default_value = "rips")]
        complex: ComplexKind,
        #[arg(long, value_enum, default_value = "cov")]
        role: Role,
        #[arg(long)]
        max_dim: Option<usize>,
    },
    /// Reduce a complex file while keeping (β0, β1).
    Reduce {
        complex: PathBuf,
        /// Vertices that must stay.
        #[arg(long, value_delimiter = ',')]
        flags: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Print one `step vertex index action b0 b1` line per draw.
        #[arg(long)]
        trace: bool,
    },
}

/// How a command failed, mapped to the exit code.
enum Failure {
    Config(anyhow::Error),
    Seeds(String),
    Other(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast_ref::<Error>() {
            Some(Error::Config(_) | Error::Parse { .. } | Error::InvalidParameter(_)) => {
                Failure::Config(e)
            }
            _ => Failure::Other(e),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

type CmdResult = Result<(), Failure>;

fn load_nodes(path: &Path) -> Result<NodeSet, Failure> {
    read_nodeset(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::Config)
}

fn build_complex(
    ns: &NodeSet,
    kind: ComplexKind,
    role: Role,
    max_dim: Option<usize>,
) -> SimplicialComplex {
    match kind {
        ComplexKind::Rips if max_dim.is_none() => rips_from_disks(ns, role.into()),
        ComplexKind::Rips => topo_son::complex::rips_from_disks_capped(ns, role.into(), max_dim),
        ComplexKind::Cech => cech_from_disks(ns, role.into(), max_dim),
    }
}

fn write_out(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn print_table(t: &Table) {
    println!("{}", t.header.join("\t"));
    for r in &t.rows {
        println!("{}", r.join("\t"));
    }
}

fn cmd_run(config: &Path, seeds: Option<u64>, seed0: Option<u64>, out: &Path) -> CmdResult {
    let text = fs::read_to_string(config)
        .with_context(|| format!("reading {}", config.display()))
        .map_err(Failure::Config)?;
    let mut cfg = ScenarioConfig::parse(&text)?;
    if let Some(s) = seeds {
        cfg.seeds = s;
    }
    if let Some(s) = seed0 {
        cfg.seed0 = s;
    }
    cfg.validate()?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let rep = run_batch(&cfg)?;
    let (summary, raw) = emit_csv(&rep, out.join(format!("{}.csv", cfg.kind)))?;
    print_table(&rep.summary_table());
    if let Records::Frequency(recs) = &rep.records {
        if recs.iter().any(|r| !r.valid) {
            return Err(Failure::Seeds("an auto plan has a conflict".into()));
        }
    }
    eprintln!("wrote {} and {}", summary.display(), raw.display());
    if rep.has_failures() {
        for f in &rep.failures {
            eprintln!("seed {} {}: {}", f.seed, f.cell, f.message);
        }
        return Err(Failure::Seeds(format!(
            "{} seed(s) failed",
            rep.failures.len()
        )));
    }
    Ok(())
}

fn cmd_plan_freq(nodes: &Path, seed: u64, greedy: bool) -> CmdResult {
    let ns = load_nodes(nodes)?;
    let ig = interference_graph(&ns);
    let plan = if greedy {
        greedy_coloring_by_id(&ig)
    } else {
        auto_plan(
            &rips_from_disks(&ns, RadiusRole::Comm),
            &ig,
            &mut seeded_rng(seed),
        )?
    };
    let mut text = String::new();
    for (id, f) in plan.assignment().iter().enumerate() {
        text.push_str(&format!("{id} {f}\n"));
    }
    print!("{text}");
    eprintln!("{} frequencies", plan.n_freqs());
    Ok(())
}

fn cmd_conserve(
    nodes: &Path,
    seed: u64,
    model: ComplexKind,
    no_shrink: bool,
    out: Option<&Path>,
) -> CmdResult {
    let ns = load_nodes(nodes)?;
    let model = match model {
        ComplexKind::Cech => DiskModel::Cech,
        ComplexKind::Rips => DiskModel::Rips,
    };
    let x = coverage_complex(&ns, model, None);
    let mut rng = seeded_rng(seed);
    let groups = make_qos_groups(&x, &mut rng);
    let opts = EnergyOptions {
        model,
        shrink: !no_shrink,
        ..Default::default()
    };
    let res = conserve(&x, &ns, &groups, &mut rng, opts)?;
    write_out(out, &nodeset_to_text(&res.apply(&ns)))?;
    eprintln!(
        "kept {} of {} nodes (quota {}), betti {}",
        res.kept_count(),
        ns.len(),
        groups.total_quota(),
        res.betti
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_recover(
    input: Option<&Path>,
    coverage: f64,
    planner: Planner,
    sigma: f64,
    r: f64,
    seeds: u64,
    seed0: u64,
    opts: PlannerOptions,
    out: Option<&Path>,
) -> CmdResult {
    if let Some(path) = input {
        let ns = load_nodes(path)?;
        let res = plan(planner, &ns, r, &opts, &mut seeded_rng(seed0))?;
        write_out(out, &nodeset_to_text(&res.network))?;
        eprintln!(
            "added {} of {} drawn, betti {}",
            res.n_added_kept(),
            res.n_added_total,
            res.betti_final
        );
        return Ok(());
    }
    let ds = DamageScenario {
        coverage,
        r,
        side: 2.0,
        model: DamageModel::Plane,
    };
    ds.validate()?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "seed",
        "N_i",
        "n_added_total",
        "n_added_kept",
        "beta1_after_perturbation",
    ])
    .map_err(|e| Failure::Other(e.into()))?;
    let mut failed = 0;
    for seed in seed0..seed0 + seeds {
        match run_recovery(&ds, planner, sigma, &opts, &mut seeded_rng(seed)) {
            Ok(run) => w
                .write_record([
                    seed.to_string(),
                    run.n_initial.to_string(),
                    run.n_added_total.to_string(),
                    run.n_added_kept.to_string(),
                    run.beta1_perturbed.to_string(),
                ])
                .map_err(|e| Failure::Other(e.into()))?,
            Err(e) => {
                failed += 1;
                eprintln!("seed {seed}: {e}");
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| Failure::Other(anyhow!("{e}")))?;
    write_out(out, &String::from_utf8_lossy(&bytes))?;
    if failed > 0 {
        return Err(Failure::Seeds(format!("{failed} seed(s) failed")));
    }
    Ok(())
}

fn cmd_betti(input: &Path, complex_file: bool, kind: ComplexKind, role: Role) -> CmdResult {
    let x = if complex_file {
        let text = fs::read_to_string(input)
            .with_context(|| format!("reading {}", input.display()))
            .map_err(Failure::Config)?;
        SimplicialComplex::from_text(&text)?
    } else {
        build_complex(&load_nodes(input)?, kind, role, Some(2))
    };
    let b = betti(&x);
    println!("{} {}", b.beta0, b.beta1);
    Ok(())
}

fn cmd_reduce(path: &Path, flags: &[usize], seed: u64, trace: bool) -> CmdResult {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::Config)?;
    let x = SimplicialComplex::from_text(&text)?;
    let flags: BTreeSet<usize> = flags.iter().copied().collect();
    let opts = ReductionOptions {
        trace,
        ..Default::default()
    };
    let red = reduce_with_guards(
        &x,
        &flags,
        &mut seeded_rng(seed),
        &mut BettiGuard::of(&x),
        opts,
    )?;
    if trace {
        for step in &red.trace {
            eprintln!("{step}");
        }
    }
    print!("{}", red.complex.to_text());
    Ok(())
}

fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Run {
            config,
            seeds,
            seed0,
            out,
        } => cmd_run(&config, seeds, seed0, &out),
        Command::PlanFreq {
            nodes,
            seed,
            greedy,
        } => cmd_plan_freq(&nodes, seed, greedy),
        Command::Conserve {
            nodes,
            seed,
            model,
            no_shrink,
            out,
        } => cmd_conserve(&nodes, seed, model, no_shrink, out.as_deref()),
        Command::Recover {
            input,
            coverage,
            planner,
            sigma,
            r,
            seeds,
            seed0,
            mcmc_steps,
            n_modes,
            grid_fraction,
            out,
        } => {
            let mut opts = PlannerOptions {
                grid_fraction,
                ..Default::default()
            };
            opts.recovery.mcmc_steps_per_node = mcmc_steps;
            opts.recovery.n_modes = n_modes;
            cmd_recover(
                input.as_deref(),
                coverage,
                planner.into(),
                sigma,
                r,
                seeds,
                seed0,
                opts,
                out.as_deref(),
            )
        }
        Command::Betti {
            input,
            complex_file,
            complex,
            role,
        } => cmd_betti(&input, complex_file, complex, role),
        Command::Complex {
            nodes,
            complex,
            role,
            max_dim,
        } => {
            let ns = load_nodes(&nodes)?;
            print!("{}", build_complex(&ns, complex, role, max_dim).to_text());
            Ok(())
        }
        Command::Reduce {
            complex,
            flags,
            seed,
            trace,
        } => cmd_reduce(&complex, &flags, seed, trace),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Seeds(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
