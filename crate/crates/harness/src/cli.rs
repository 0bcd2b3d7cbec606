//! `disperse` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use disperse_core::experiments::{
    default_eps_const, knot_count_for, sigma0_quadrature, ExperimentConfig,
};
use disperse_core::likelihood::{
    f_from_variances, log_density_ratio, log_likelihood, log_likelihood_ratio, sn_decomposition,
    w_from_variances,
};
use disperse_core::posterior::{
    mcmc_posterior, net_posterior, posterior_ball_mass, posterior_mean, McmcConfig,
};
use disperse_core::prior::build_net_with_cap;
use disperse_core::simulate::{increment_variances, sample_observations};
use disperse_core::SeedRecord;
use serde::Serialize;
use serde_json::json;

use crate::config::{
    self, parse_s0_spec, BackendName, BenchConfig, LemmaConfig, LoglikConfig, ParamsConfig,
    PosteriorConfig, SimulateConfig,
};
use crate::error::{HarnessError, Result};
use crate::io::{self, NetManifest};
use crate::{plot, runner};

#[derive(Debug, Parser)]
#[command(
    name = "disperse",
    version,
    about = "Posterior contraction experiments for dX = s(t) dW"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one path on the grid i/n and write it as CSV.
    Simulate(SimulateArgs),
    /// Log-likelihood of an observations CSV under a dispersion function.
    Loglik(LoglikArgs),
    /// Posterior over a net (exact) or the knot polytope (MCMC).
    Posterior(PosteriorArgs),
    /// Contraction-rate benchmark over a grid of sample sizes.
    BenchContraction(BenchArgs),
    /// Numerical checks of the bounds behind the contraction rate.
    VerifyLemmas(LemmaArgs),
    /// Print the constant 2 E[W^2 exp(|W|/3)], W = 1 - Z^2.
    Sigma0(Sigma0Args),
}

#[derive(Debug, Args)]
struct Common {
    /// JSON config file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for relative output paths [default: $DISPERSE_OUT_DIR or .]
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    k_upper: Option<f64>,
    #[arg(long)]
    m_lip: Option<f64>,
}

impl Common {
    fn apply(&self, p: &mut ParamsConfig) {
        set(&mut p.kappa, self.kappa);
        set(&mut p.k_upper, self.k_upper);
        set(&mut p.m_lip, self.m_lip);
    }

    fn dir(&self) -> PathBuf {
        config::out_dir(self.out_dir.as_deref())
    }
}

fn set<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// const:<v> | linear:<v0>,<v1> | knots:<t>,<v>;... | file:<json>
    #[arg(long)]
    s0: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    stream: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct LoglikArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    obs: Option<PathBuf>,
    #[arg(long)]
    s: Option<String>,
    #[arg(long)]
    s0: Option<String>,
    /// Write per-increment (z, f, w) against --s0.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PosteriorArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    obs: Option<PathBuf>,
    /// Centre of the reported L2 balls.
    #[arg(long)]
    s0: Option<String>,
    #[arg(long, value_enum)]
    backend: Option<BackendName>,
    #[arg(long, value_delimiter = ',')]
    radii: Option<Vec<f64>>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    net_cap: Option<usize>,
    #[arg(long)]
    knots: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    thin: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long)]
    chain: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    s0: Option<String>,
    #[arg(long, value_delimiter = ',')]
    n_grid: Option<Vec<usize>>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    eps_const: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    radius_multipliers: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    backend: Option<BackendName>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    knot_scale: Option<f64>,
    #[arg(long)]
    mcmc_sweeps: Option<usize>,
    #[arg(long)]
    mcmc_step: Option<f64>,
    #[arg(long)]
    net_cap: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Worker threads; does not change any output.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    quiet: bool,
}

#[derive(Debug, Args)]
struct LemmaArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    s0: Option<String>,
    #[arg(long)]
    eps_const: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    martingale_reps: Option<usize>,
    #[arg(long)]
    martingale_cap: Option<usize>,
    #[arg(long)]
    tail_reps: Option<usize>,
    #[arg(long)]
    tail_cap: Option<usize>,
    #[arg(long)]
    tail_c1: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct Sigma0Args {
    /// Panels per sub-interval of the composite rule.
    #[arg(long, default_value_t = 16)]
    panels: usize,
}

/// Runs the tool with `argv` (program name first), writing normal output to
/// `stdout`. Returns the process exit code.
pub fn run_with_output<I, T>(argv: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with_output(argv, &mut std::io::stdout().lock())
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Simulate(a) => simulate(a, out),
        Command::Loglik(a) => loglik(a, out),
        Command::Posterior(a) => posterior(a, out),
        Command::BenchContraction(a) => bench(a, out),
        Command::VerifyLemmas(a) => lemmas(a, out),
        Command::Sigma0(a) => {
            if a.panels == 0 {
                return Err(HarnessError::Config("--panels must be at least 1".into()));
            }
            emit(out, format_args!("{}\n", sigma0_quadrature(a.panels)))
        }
    }
}

fn emit(out: &mut dyn Write, args: std::fmt::Arguments<'_>) -> Result<()> {
    out.write_fmt(args)
        .map_err(|e| HarnessError::io("<stdout>", e))
}

fn emit_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|source| HarnessError::Json {
        path: "<stdout>".into(),
        source,
    })?;
    emit(out, format_args!("{text}\n"))
}

/// JSON file written next to a CSV, holding the config that produced it.
fn sidecar(csv: &Path) -> Result<PathBuf> {
    let side = csv.with_extension("json");
    if side == csv {
        return Err(HarnessError::Config(format!(
            "{} would overwrite itself",
            csv.display()
        )));
    }
    Ok(side)
}

fn simulate(a: SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let mut c: SimulateConfig = config::load(a.common.config.as_deref())?;
    a.common.apply(&mut c.params);
    set(&mut c.s0, a.s0);
    set(&mut c.n, a.n);
    set(&mut c.seed, a.seed);
    set(&mut c.stream, a.stream);
    set(&mut c.out, a.out);
    let params = c.params.build()?;
    let s0 = parse_s0_spec(&c.s0, &params)?;
    if c.n == 0 {
        return Err(HarnessError::Config("--n must be at least 1".into()));
    }
    let seed = SeedRecord::new(c.seed, c.stream);
    let obs = sample_observations(&s0, c.n, seed)?;

    let path = config::resolve(&a.common.dir(), &c.out);
    let side = sidecar(&path)?;
    let echo = json!({ "config": c, "seed": seed.to_string(), "observations": path });
    io::write_atomic(&path, io::observations_csv(&obs).as_bytes())?;
    io::write_json(&side, &echo)?;
    emit_json(out, &echo)
}

fn loglik(a: LoglikArgs, out: &mut dyn Write) -> Result<()> {
    let mut c: LoglikConfig = config::load(a.common.config.as_deref())?;
    a.common.apply(&mut c.params);
    set(&mut c.obs, a.obs);
    set(&mut c.s, a.s);
    if a.s0.is_some() {
        c.s0 = a.s0;
    }
    if a.diagnostics.is_some() {
        c.diagnostics = a.diagnostics;
    }
    let params = c.params.build()?;
    let s = parse_s0_spec(&c.s, &params)?;
    let s0 =
        c.s0.as_deref()
            .map(|t| parse_s0_spec(t, &params))
            .transpose()?;
    if c.diagnostics.is_some() && s0.is_none() {
        return Err(HarnessError::Config("--diagnostics needs --s0".into()));
    }
    let obs = io::read_observations(&c.obs)?;
    let ll = log_likelihood(&s, &obs)?;

    let mut report = json!({ "config": c, "n": obs.n(), "loglik": ll });
    if let Some(s0) = &s0 {
        let d = sn_decomposition(&s, s0, &obs);
        report["log_ratio"] = json!(log_likelihood_ratio(&s, s0, &obs)?);
        report["martingale_term"] = json!(d.martingale_term);
        report["deterministic_term"] = json!(d.deterministic_term);
        report["sn_total"] = json!(d.total);
        if let Some(diag) = &c.diagnostics {
            let v = increment_variances(&s, obs.n());
            let v0 = increment_variances(s0, obs.n());
            let z: Vec<f64> = obs
                .increments()
                .iter()
                .zip(v.iter().zip(&v0))
                .map(|(&y, (&a, &b))| log_density_ratio(y, a, b))
                .collect();
            let f = f_from_variances(&v, &v0);
            let w = w_from_variances(obs.increments(), &v0);
            let path = config::resolve(&a.common.dir(), diag);
            io::write_atomic(&path, io::diagnostics_csv(&z, &f, &w).as_bytes())?;
            io::write_json(&sidecar(&path)?, &report)?;
        }
    }
    emit_json(out, &report)
}

#[derive(Serialize)]
struct MeanCurve {
    grid: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Serialize)]
struct PosteriorSummary<'a> {
    n: usize,
    radius_grid: &'a [f64],
    outside_mass: Vec<f64>,
    se: Vec<f64>,
    mean_curve: MeanCurve,
    backend: BackendName,
    support_size: usize,
    acceptance_rate: Option<f64>,
    config: &'a PosteriorConfig,
}

fn posterior(a: PosteriorArgs, out: &mut dyn Write) -> Result<()> {
    let mut c: PosteriorConfig = config::load(a.common.config.as_deref())?;
    a.common.apply(&mut c.params);
    set(&mut c.obs, a.obs);
    set(&mut c.s0, a.s0);
    set(&mut c.backend, a.backend);
    set(&mut c.radii, a.radii);
    set(&mut c.eps, a.eps);
    set(&mut c.net_cap, a.net_cap);
    set(&mut c.thin, a.thin);
    set(&mut c.seed, a.seed);
    set(&mut c.summary, a.summary);
    for (slot, flag) in [(&mut c.knots, a.knots), (&mut c.iters, a.iters)] {
        if flag.is_some() {
            *slot = flag;
        }
    }
    if a.step.is_some() {
        c.step = a.step;
    }
    if a.chain.is_some() {
        c.chain = a.chain;
    }
    if a.manifest.is_some() {
        c.manifest = a.manifest;
    }
    if c.radii.is_empty() || c.radii.iter().any(|r| r.is_nan() || *r <= 0.0) {
        return Err(HarnessError::Config("radii must be positive".into()));
    }
    if c.mean_grid_points < 2 {
        return Err(HarnessError::Config(
            "mean_grid_points must be at least 2".into(),
        ));
    }
    let params = c.params.build()?;
    let s0 = parse_s0_spec(&c.s0, &params)?;
    let obs = io::read_observations(&c.obs)?;
    let dir = a.common.dir();
    let grid: Vec<f64> = (0..c.mean_grid_points)
        .map(|k| k as f64 / (c.mean_grid_points - 1) as f64)
        .collect();

    // Resolve MCMC defaults so the echoed config is the effective one.
    if c.backend == BackendName::Mcmc {
        let k = *c.knots.get_or_insert(knot_count_for(obs.n(), 1.0));
        c.iters.get_or_insert(2000 * k);
        c.step.get_or_insert(0.1 * params.range_width());
    }

    let (outside, se, mean, support, acceptance) = match c.backend {
        BackendName::Net => {
            let net = build_net_with_cap(&params, c.eps, c.net_cap)?;
            let post = net_posterior(&net, &obs)?;
            let outside = c
                .radii
                .iter()
                .map(|&r| posterior_ball_mass(&post, &s0, r).map(|m| m.outside))
                .collect::<disperse_core::Result<Vec<_>>>()?;
            let se = vec![0.0; outside.len()];
            if let Some(m) = &c.manifest {
                io::write_json(&config::resolve(&dir, m), &NetManifest::new(&net))?;
            }
            (outside, se, posterior_mean(&post, &grid)?, net.len(), None)
        }
        BackendName::Mcmc => {
            let knots = c.knots.unwrap_or(3);
            let mut mc = McmcConfig::new(
                c.iters.unwrap_or(0),
                &params,
                SeedRecord::new(c.seed, c.stream),
            );
            mc.thin = c.thin;
            mc.step = c.step.unwrap_or(mc.step);
            let chain = mcmc_posterior(&params, knots, &obs, &mc)?;
            let (outside, se): (Vec<f64>, Vec<f64>) = c
                .radii
                .iter()
                .map(|&r| chain.outside_mass_with_se(&s0, r))
                .collect::<disperse_core::Result<Vec<_>>>()?
                .into_iter()
                .unzip();
            if let Some(path) = &c.chain {
                io::write_atomic(
                    &config::resolve(&dir, path),
                    io::chain_csv(&chain).as_bytes(),
                )?;
            }
            (
                outside,
                se,
                posterior_mean(&chain, &grid)?,
                knots,
                Some(chain.acceptance_rate),
            )
        }
    };
    let summary = PosteriorSummary {
        n: obs.n(),
        radius_grid: &c.radii,
        outside_mass: outside,
        se,
        mean_curve: MeanCurve { grid, values: mean },
        backend: c.backend,
        support_size: support,
        acceptance_rate: acceptance,
        config: &c,
    };
    io::write_json(&config::resolve(&dir, &c.summary), &summary)?;
    emit_json(out, &summary)
}

#[derive(Serialize)]
struct NSummaryOut {
    n: usize,
    eps_tilde: f64,
    median_l2: f64,
    radius_multipliers: Vec<f64>,
    mean_outside: Vec<f64>,
}

#[derive(Serialize)]
struct SlopeOut {
    slope: f64,
    intercept: f64,
    residual: f64,
}

fn bench(a: BenchArgs, out: &mut dyn Write) -> Result<()> {
    let mut c: BenchConfig = config::load(a.common.config.as_deref())?;
    a.common.apply(&mut c.params);
    set(&mut c.s0, a.s0);
    set(&mut c.n_grid, a.n_grid);
    set(&mut c.replicates, a.replicates);
    set(&mut c.radius_multipliers, a.radius_multipliers);
    set(&mut c.backend, a.backend);
    set(&mut c.base_seed, a.seed);
    set(&mut c.knot_scale, a.knot_scale);
    set(&mut c.mcmc_sweeps, a.mcmc_sweeps);
    set(&mut c.net_cap, a.net_cap);
    set(&mut c.out, a.out);
    set(&mut c.summary, a.summary);
    if a.eps_const.is_some() {
        c.eps_const = a.eps_const;
    }
    if a.mcmc_step.is_some() {
        c.mcmc_step = a.mcmc_step;
    }
    if a.plot.is_some() {
        c.plot = a.plot;
    }
    let params = c.params.build()?;
    let s0 = parse_s0_spec(&c.s0, &params)?;
    let n_min = c.n_grid.first().copied().unwrap_or(2).max(2);
    c.eps_const.get_or_insert(default_eps_const(&params, n_min));
    let ec = experiment_config(&c, s0, params);
    let pool = runner::thread_pool(a.workers)?;

    let started = Instant::now();
    let result = runner::run_contraction(&ec, &pool, !a.quiet)?;
    let dir = a.common.dir();
    let csv = io::result_csv(&runner::contraction_rows(&result));
    io::write_atomic(&config::resolve(&dir, &c.out), csv.as_bytes())?;
    let per_n: Vec<NSummaryOut> = result
        .per_n
        .iter()
        .map(|s| NSummaryOut {
            n: s.n,
            eps_tilde: s.eps_tilde,
            median_l2: s.median_l2,
            radius_multipliers: c.radius_multipliers.clone(),
            mean_outside: s.mean_outside.clone(),
        })
        .collect();
    let slope = result.slope_fit.map(|f| SlopeOut {
        slope: f.slope,
        intercept: f.intercept,
        residual: f.residual,
    });
    let summary = json!({ "config": c, "per_n": per_n, "slope_fit": slope });
    io::write_json(&config::resolve(&dir, &c.summary), &summary)?;
    if let Some(p) = &c.plot {
        io::write_atomic(
            &config::resolve(&dir, p),
            plot::contraction_svg(&result).as_bytes(),
        )?;
    }
    eprintln!(
        "bench-contraction finished in {:.1}s",
        started.elapsed().as_secs_f64()
    );
    for s in &result.per_n {
        emit(
            out,
            format_args!(
                "n={} eps_tilde={} median_l2={}\n",
                s.n, s.eps_tilde, s.median_l2
            ),
        )?;
    }
    match result.slope_fit {
        Some(f) => emit(out, format_args!("slope={}\n", f.slope)),
        None => emit(out, format_args!("slope=undefined\n")),
    }
}

/// Core experiment config for a benchmark run (with `eps_const` resolved).
pub fn experiment_config(
    c: &BenchConfig,
    s0: disperse_core::DispersionFn,
    params: disperse_core::ClassParams,
) -> ExperimentConfig {
    let mut ec = ExperimentConfig::new(s0, params, c.n_grid.clone());
    ec.replicates = c.replicates;
    if let Some(e) = c.eps_const {
        ec.eps_const = e;
    }
    ec.radius_multipliers = c.radius_multipliers.clone();
    ec.backend = c.backend.into();
    ec.base_seed = c.base_seed;
    ec.knot_scale = c.knot_scale;
    ec.mcmc_sweeps = c.mcmc_sweeps;
    ec.mcmc_step = c.mcmc_step;
    ec.net_cap = c.net_cap;
    ec
}

fn lemmas(a: LemmaArgs, out: &mut dyn Write) -> Result<()> {
    let mut c: LemmaConfig = config::load(a.common.config.as_deref())?;
    a.common.apply(&mut c.params);
    set(&mut c.s0, a.s0);
    set(&mut c.base_seed, a.seed);
    set(&mut c.martingale_reps, a.martingale_reps);
    set(&mut c.martingale_cap, a.martingale_cap);
    set(&mut c.tail_reps, a.tail_reps);
    set(&mut c.tail_cap, a.tail_cap);
    set(&mut c.tail_c1, a.tail_c1);
    set(&mut c.out, a.out);
    set(&mut c.summary, a.summary);
    if a.eps_const.is_some() {
        c.eps_const = a.eps_const;
    }
    let params = c.params.build()?;
    let s0 = parse_s0_spec(&c.s0, &params)?;
    let riemann_s = parse_s0_spec(&c.riemann_s, &params)?;
    let pool = runner::thread_pool(a.workers)?;

    let started = Instant::now();
    let report = runner::run_lemma_suite(&c, &params, &s0, &riemann_s, &pool)?;
    c.eps_const = Some(report.eps_const);
    let dir = a.common.dir();
    let csv = io::result_csv(&runner::lemma_rows(&report, c.base_seed));
    io::write_atomic(&config::resolve(&dir, &c.out), csv.as_bytes())?;
    let summary = lemma_summary(&report, &c);
    io::write_json(&config::resolve(&dir, &c.summary), &summary)?;
    eprintln!(
        "verify-lemmas finished in {:.1}s",
        started.elapsed().as_secs_f64()
    );

    let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };
    emit(
        out,
        format_args!(
            "riemann    {} max ratio of residual*n = {}\n",
            verdict(report.riemann_pass()),
            report.riemann_max_ratio
        ),
    )?;
    let worst = report
        .kl
        .iter()
        .map(|k| k.2.min_slack)
        .fold(f64::INFINITY, f64::min);
    emit(
        out,
        format_args!(
            "kl_bound   {} min slack = {}\n",
            verdict(report.kl_pass()),
            worst
        ),
    )?;
    emit(
        out,
        format_args!(
            "martingale {} max/min ratio = {}\n",
            verdict(report.martingale_pass()),
            report.martingale_spread
        ),
    )?;
    let fr: Vec<f64> = report.tail.iter().map(|t| t.fraction()).collect();
    emit(
        out,
        format_args!(
            "ratio_tail {} fractions = {fr:?}\n",
            verdict(report.tail_pass())
        ),
    )?;
    if report.all_pass() {
        Ok(())
    } else {
        Err(HarnessError::ChecksFailed("verify-lemmas".into()))
    }
}

fn lemma_summary(r: &runner::LemmaReport, c: &LemmaConfig) -> serde_json::Value {
    json!({
        "config": c,
        "riemann": {
            "pass": r.riemann_pass(),
            "max_ratio": r.riemann_max_ratio,
            "n": r.riemann.iter().map(|x| x.n).collect::<Vec<_>>(),
            "residual_times_n": r.riemann.iter().map(|x| x.residual * x.n as f64).collect::<Vec<_>>(),
        },
        "kl_bound": {
            "pass": r.kl_pass(),
            "c_tilde0": r.c_tilde0,
            "offset": r.kl_offset,
            "n": r.kl.iter().map(|k| k.0).collect::<Vec<_>>(),
            "min_slack": r.kl.iter().map(|k| k.2.min_slack).collect::<Vec<_>>(),
        },
        "martingale_sup": {
            "pass": r.martingale_pass(),
            "spread": r.martingale_spread,
            "n": r.martingale.iter().map(|m| m.n).collect::<Vec<_>>(),
            "ratio": r.martingale.iter().map(|m| m.ratio).collect::<Vec<_>>(),
            "note": "maxima over a seeded net subsample; lower bounds on the true suprema",
        },
        "ratio_tail": {
            "pass": r.tail_pass(),
            "n": r.tail.iter().map(|t| t.n).collect::<Vec<_>>(),
            "fraction": r.tail.iter().map(|t| t.fraction()).collect::<Vec<_>>(),
        },
    })
}
