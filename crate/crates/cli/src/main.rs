mod config;
mod output;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use netrel::estimator::{fit, route_uncertainty, validate_split};
use netrel::ingest::{check_schedule, read_records, LinkObservation, RouteObservation};
use netrel::reliability::generate_pmf;
use netrel::report;
use netrel::simgen::{self, GroundTruth};
use netrel::stats::test_subset;
use netrel::{load_network, FitResult, NetworkModel, ObservationSet, ReliabilityReport, Route, RouteUncertainty, SubsetSchedule};
use serde::Serialize;

use config::{Generator, RunConfig};
use output::Outputs;

#[derive(Parser, Debug)]
#[command(name = "netrel", version, about = "Link probabilities and route travel-time reliability")]
struct Cli {
    /// Run configuration (TOML)
    #[arg(long, global = true, default_value = "netrel.toml")]
    config: PathBuf,
    /// Master seed, overriding every seed in the config
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, overriding the config
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit link success probabilities from link and route observations
    Estimate,
    /// Travel-time pmf and reliability measures for one or more routes
    Reliability {
        /// Stored route id or comma-separated node path (repeatable)
        #[arg(long, required = true)]
        route: Vec<String>,
        /// Fit artifact to use (default: fit.json in the output directory)
        #[arg(long)]
        fit: Option<PathBuf>,
        /// Fit the model now instead of reading a fit artifact
        #[arg(long)]
        fit_inline: bool,
        /// Ignore estimation uncertainty
        #[arg(long)]
        zero_sigma: bool,
    },
    /// Split one route's observations, fit on one half, compare with the other
    Validate {
        #[arg(long)]
        route: Option<u32>,
    },
    /// Generate synthetic observations
    Simulate,
    /// Barnard tests for link pairs within each collection subset
    TestIndependence,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(written) => {
            for w in written {
                println!("wrote {w}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<Vec<String>> {
    let mut cfg = RunConfig::load(&cli.config)?;
    cfg.apply_overrides(cli.seed, cli.out_dir);
    let net_text = std::fs::read_to_string(&cfg.network)
        .with_context(|| format!("reading network {}", cfg.network.display()))?;
    let net = load_network(&net_text).with_context(|| format!("loading network {}", cfg.network.display()))?;

    let outputs = match cli.command {
        Command::Estimate => cmd_estimate(&cfg, &net)?,
        Command::Reliability { route, fit, fit_inline, zero_sigma } => {
            cmd_reliability(&cfg, &net, &route, fit, fit_inline, zero_sigma)?
        }
        Command::Validate { route } => cmd_validate(&cfg, &net, route)?,
        Command::Simulate => cmd_simulate(&cfg, &net)?,
        Command::TestIndependence => cmd_test_independence(&cfg, &net)?,
    };
    outputs.commit(&cfg.out_dir)
}

fn read_all_records(cfg: &RunConfig) -> Result<(Vec<LinkObservation>, Vec<RouteObservation>)> {
    cfg.require_observations()?;
    let mut links = Vec::new();
    let mut routes = Vec::new();
    for path in &cfg.observations {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let (l, r) = read_records(&text).with_context(|| format!("parsing {}", path.display()))?;
        links.extend(l);
        routes.extend(r);
    }
    Ok((links, routes))
}

fn load_observations(cfg: &RunConfig, net: &NetworkModel) -> Result<ObservationSet> {
    let (links, routes) = read_all_records(cfg)?;
    let obs = ObservationSet::aggregate(net, &links, &routes, cfg.strict)?;
    for w in &obs.warnings {
        log::warn!("{w}");
    }
    Ok(obs)
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn cmd_estimate(cfg: &RunConfig, net: &NetworkModel) -> Result<Outputs> {
    let obs = load_observations(cfg, net)?;
    let result = fit(net, &obs, &cfg.solver)?;
    if !result.converged {
        log::warn!("fit did not meet the convergence certificate (score {:.3e})", result.score_norm_inf);
    }
    let rows = report::estimate_rows(net, &obs, &result);
    let mut text = report::estimates_table(&rows);
    text.push_str(&format!(
        "\nlog-likelihood: {:.6}\nscore max-norm: {:.3e}\nconverged: {}\nbest start: {} of {}\n",
        result.loglik,
        result.score_norm_inf,
        if result.converged { "yes" } else { "no" },
        result.best_start,
        result.starts_used
    ));
    if !result.boundary_links.is_empty() {
        text.push_str(&format!("links at the probability clamp: {:?}\n", result.boundary_links));
    }
    if result.rank_deficiency > 0 {
        text.push_str(&format!("information matrix rank deficiency: {}\n", result.rank_deficiency));
    }
    let mut out = Outputs::default();
    out.add("fit.json", to_json(&result)?);
    out.add("estimates.txt", text);
    Ok(out)
}

/// A stored route id, or a comma-separated node path for an ad-hoc route.
fn resolve_route(net: &NetworkModel, spec: &str) -> Result<(String, Route)> {
    let spec = spec.trim();
    if let Ok(id) = spec.parse::<u32>() {
        return Ok((format!("route_{id}"), net.route(id)?.clone()));
    }
    let nodes: Vec<&str> = spec.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    let route = net.route_from_nodes(0, &nodes).with_context(|| format!("route {spec:?}"))?;
    Ok((format!("route_{}", nodes.join("-")), route))
}

fn cmd_reliability(
    cfg: &RunConfig,
    net: &NetworkModel,
    specs: &[String],
    fit_path: Option<PathBuf>,
    fit_inline: bool,
    zero_sigma: bool,
) -> Result<Outputs> {
    let routes = specs.iter().map(|s| resolve_route(net, s)).collect::<Result<Vec<_>>>()?;
    let result: FitResult = if fit_inline {
        fit(net, &load_observations(cfg, net)?, &cfg.solver)?
    } else {
        let path = fit_path.unwrap_or_else(|| cfg.out_dir.join("fit.json"));
        let text = std::fs::read_to_string(&path).map_err(|e| {
            anyhow!("fit artifact {} is missing ({e}); run `estimate` first or pass --fit-inline", path.display())
        })?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
    };
    if result.theta_hat.len() != net.p() {
        bail!("fit has {} parameters but the network has {} links", result.theta_hat.len(), net.p());
    }

    let mut out = Outputs::default();
    let mut reports: Vec<(String, ReliabilityReport)> = Vec::new();
    let mut json = BTreeMap::new();
    for (label, route) in &routes {
        let mut unc = route_uncertainty(net, route, &result)?;
        if zero_sigma {
            unc = RouteUncertainty::exact(unc.h1_hat, unc.h2_hat);
        }
        let pmf = generate_pmf(&unc, &cfg.mc).with_context(|| label.clone())?;
        let measures = pmf.measures()?;
        let header = vec![
            label.clone(),
            format!("h1 {} h2 {}", unc.h1_hat, unc.h2_hat),
            format!("sigma {:?}", unc.sigma),
            format!("mc {}", serde_json::to_string(&cfg.mc)?),
        ];
        out.add(format!("pmf_{label}.csv"), pmf.to_csv(&header));
        json.insert(label.clone(), serde_json::json!({ "uncertainty": unc, "measures": measures, "total_mass": pmf.total_mass, "rejection_rate": pmf.rejection_rate }));
        reports.push((label.clone(), measures));
    }
    let columns: Vec<(&str, &ReliabilityReport)> = reports.iter().map(|(l, r)| (l.as_str(), r)).collect();
    out.add("reliability.txt", report::reliability_table(&columns));
    out.add("reliability.json", to_json(&json)?);
    Ok(out)
}

fn cmd_validate(cfg: &RunConfig, net: &NetworkModel, route: Option<u32>) -> Result<Outputs> {
    let route_id = route
        .or(cfg.validate.route)
        .ok_or_else(|| anyhow!("no route to validate: pass --route or set [validate] route"))?;
    let (links, routes) = read_all_records(cfg)?;
    let v = validate_split(net, route_id, &links, &routes, cfg.validate.seed, &cfg.solver)?;
    let mut out = Outputs::default();
    out.add("validation.txt", report::validation_table(&v));
    out.add("validation.json", to_json(&v)?);
    Ok(out)
}

#[derive(Serialize)]
struct Truth {
    seed: u64,
    theta_star: BTreeMap<u32, f64>,
}

fn cmd_simulate(cfg: &RunConfig, net: &NetworkModel) -> Result<Outputs> {
    let sim = &cfg.simulate;
    let mut theta = vec![sim.theta_default; net.p()];
    for (key, &value) in &sim.theta {
        let id: u32 = key.parse().map_err(|_| anyhow!("[simulate.theta]: {key:?} is not a link id"))?;
        let j = net.link_index(id).ok_or_else(|| anyhow!("[simulate.theta]: unknown link {id}"))?;
        theta[j] = value;
    }
    let gt = GroundTruth::new(net.clone(), theta, sim.seed)?;
    let partition = if sim.partition { Some(SubsetSchedule::two_coloring(net)?) } else { None };
    let links = simgen::simulate_links(&gt, sim.link_days, partition.as_ref());
    let routes = match sim.generator {
        Generator::Lognormal => simgen::simulate_routes(&gt, sim.route_days),
        Generator::LinkSum => simgen::simulate_routes_link_sum(&gt, sim.route_days),
    };

    let mut out = Outputs::default();
    out.add("observations.csv", netrel::ingest::write_records(&links.records, &routes));
    if let Some(s) = &links.schedule {
        out.add("schedule.toml", s.to_toml_string());
    }
    let truth = Truth {
        seed: sim.seed,
        theta_star: net.links().iter().zip(&gt.theta_star.0).map(|(l, &r)| (l.id, r)).collect(),
    };
    out.add("truth.json", to_json(&truth)?);
    Ok(out)
}

fn load_schedule(path: &Path, net: &NetworkModel) -> Result<SubsetSchedule> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading schedule {}", path.display()))?;
    SubsetSchedule::parse(&text, net).with_context(|| format!("parsing schedule {}", path.display()))
}

fn cmd_test_independence(cfg: &RunConfig, net: &NetworkModel) -> Result<Outputs> {
    let path = cfg.schedule.as_ref().ok_or_else(|| anyhow!("the config names no schedule file"))?;
    let sched = load_schedule(path, net)?;
    let obs = load_observations(cfg, net)?;
    let compliance = check_schedule(net, &obs, &sched);
    for v in &compliance.violations {
        log::warn!("schedule: {v}");
    }
    let ind = &cfg.independence;
    let rep = test_subset(net, &obs, &sched, ind.threshold, ind.grid_resolution)?;
    let mut summary = rep.summary();
    if !compliance.is_compliant() {
        summary.push_str(&format!("schedule violations: {}\n", compliance.violations.len()));
    }
    for (a, b, why) in &rep.skipped {
        summary.push_str(&format!("skipped {a}-{b}: {why}\n"));
    }
    let mut out = Outputs::default();
    out.add("independence.csv", rep.to_csv());
    out.add("independence.txt", summary);
    Ok(out)
}
