use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use poincare_core::acceptance;
use poincare_core::config::ExperimentConfig;
use poincare_core::gns::{
    conformal_check, fusion_check, harish_chandra, knapp_stein_matrix, knapp_stein_spectrum, mu_t_convergence,
    pair_measure, sigma_schedule, PairMeasureOptions,
};
use poincare_core::poincare::{critical_exponent, patterson_theta, poincare_series};
use poincare_core::posdef::{make_oracle, psd_check, PosDefOracle};
use poincare_core::report::{CsvTable, Report};
use poincare_core::spectral::{
    boundary_norm_bound, boundary_sup_norm, default_probes, entropy_estimate, regular_norm, rep_norm_lower,
    rrd_check, transfer_fuzz, GroupFn,
};
use poincare_core::numeric::fit_line;
use poincare_core::{Error, GroupParams, RadialFunction, ResourceCaps, SparseGroupFunction, Word};

#[derive(Parser, Debug)]
#[command(name = "poincare", version, about = "Poincaré series and boundary representations on free groups")]
struct Cli {
    /// TOML experiment config; defaults apply to missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for report.json, CSV tables and plot.gp.
    #[arg(long, global = true, env = "POINCARE_OUT", default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Oracle specs overriding the config list, e.g. `haagerup-s:0.75` or `table:phi.csv`.
    #[arg(long = "oracle", global = true)]
    oracles: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Critical exponents from spherical sums.
    Exponent,
    /// Truncated Poincaré series with tail bounds.
    Series,
    /// Slowly growing θ for the critical trivial case.
    Theta,
    /// Positive-definiteness certificates on a ball.
    Psd,
    /// Pair measures along a σ schedule.
    Gns,
    /// Knapp-Stein matrices and their spectra.
    KnappStein,
    /// Harish-Chandra function against the boundary integral.
    HarishChandra,
    /// Products c_s c_s' against c_t.
    Fusion,
    /// Regular and representation norms.
    Norms,
    /// Entropy brackets.
    Entropy,
    /// Randomized transfer inequality checks.
    Transfer,
    /// Radial rapid decay fit.
    Rrd,
    /// Boundary representation norms of ball averages.
    BoundaryNorm,
    /// Runs every acceptance check and prints a pass/fail table.
    VerifyAll,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Exponent => "exponent",
            Command::Series => "series",
            Command::Theta => "theta",
            Command::Psd => "psd",
            Command::Gns => "gns",
            Command::KnappStein => "knapp-stein",
            Command::HarishChandra => "harish-chandra",
            Command::Fusion => "fusion",
            Command::Norms => "norms",
            Command::Entropy => "entropy",
            Command::Transfer => "transfer",
            Command::Rrd => "rrd",
            Command::BoundaryNorm => "boundary-norm",
            Command::VerifyAll => "verify-all",
        }
    }
}

struct Env {
    cfg: ExperimentConfig,
    params: GroupParams,
    caps: ResourceCaps,
    oracle_specs: Vec<String>,
    overridden: bool,
}

impl Env {
    fn oracles(&self) -> Result<Vec<PosDefOracle>, Error> {
        self.oracle_specs.iter().map(|s| make_oracle(&self.params, s, &self.caps)).collect()
    }

    fn first_oracle(&self, fallback: &str) -> Result<PosDefOracle, Error> {
        let spec = match self.oracle_specs.first() {
            Some(s) if self.overridden => s.as_str(),
            _ => fallback,
        };
        make_oracle(&self.params, spec, &self.caps)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Input(_) | Error::Validation(_) | Error::Config(_) | Error::Csv(_) => 2,
        Error::ResourceCap { .. } | Error::ConstructionCap(_) => 3,
        _ => 1,
    }
}

fn run(cli: &Cli) -> Result<u8, Error> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Input(format!("thread pool: {e}")))?;
    }
    let params = cfg.params()?;
    let caps = cfg.resource_caps();
    let oracle_specs = if cli.oracles.is_empty() {
        cfg.oracles.specs.clone()
    } else {
        cli.oracles.clone()
    };
    let env = Env {
        cfg,
        params,
        caps,
        oracle_specs,
        overridden: !cli.oracles.is_empty(),
    };
    let (report, code) = match cli.command {
        Command::Exponent => (exponent(&env)?, 0),
        Command::Series => (series(&env)?, 0),
        Command::Theta => (theta(&env)?, 0),
        Command::Psd => psd(&env)?,
        Command::Gns => (gns(&env)?, 0),
        Command::KnappStein => (knapp_stein(&env)?, 0),
        Command::HarishChandra => (hc(&env)?, 0),
        Command::Fusion => (fusion(&env)?, 0),
        Command::Norms => (norms(&env)?, 0),
        Command::Entropy => (entropy(&env)?, 0),
        Command::Transfer => transfer(&env)?,
        Command::Rrd => (rrd(&env)?, 0),
        Command::BoundaryNorm => (boundary_norm(&env)?, 0),
        Command::VerifyAll => verify_all(&env)?,
    };
    report.write(&cli.out)?;
    eprintln!("wrote {}", cli.out.join("report.json").display());
    Ok(code)
}

fn new_report(env: &Env, cmd: Command, result: &Value) -> Result<Report, Error> {
    let mut config = serde_json::to_value(&env.cfg)?;
    config["oracles"]["specs"] = json!(env.oracle_specs);
    Report::new(cmd.name(), env.cfg.seed, &config, result)
}

fn err_json(e: &Error) -> Value {
    json!({ "error": e.to_string() })
}

fn exponent(env: &Env) -> Result<Report, Error> {
    let w = env.cfg.series.window;
    let mut rows = vec![];
    let mut table = CsvTable::new("spherical_sums", &["oracle", "m", "log_sum"]);
    for (i, phi) in env.oracles()?.iter().enumerate() {
        let est = critical_exponent(phi, w);
        if let Ok(e) = &est {
            for (j, l) in e.log_spherical_sums.iter().enumerate() {
                table.push(vec![i as f64, (e.window.0 + j) as f64, *l]);
            }
        }
        rows.push(json!({
            "oracle": phi.describe(),
            "estimate": est.map(|e| serde_json::to_value(e).unwrap_or(Value::Null)).unwrap_or_else(|e| err_json(&e)),
        }));
    }
    Ok(new_report(env, Command::Exponent, &json!({ "oracles": rows }))?.with_table(table))
}

fn series(env: &Env) -> Result<Report, Error> {
    let s = &env.cfg.series;
    let mut rows = vec![];
    let mut table = CsvTable::new("series", &["sigma", "oracle", "partial", "tail_bound"]);
    for (i, phi) in env.oracles()?.iter().enumerate() {
        for &sigma in &s.sigmas {
            let v = poincare_series(phi, sigma, s.m_max);
            if let Ok(v) = &v {
                table.push(vec![sigma, i as f64, v.partial, v.tail_bound]);
            }
            rows.push(json!({
                "oracle": phi.name(),
                "sigma": sigma,
                "value": v.map(|v| serde_json::to_value(v).unwrap_or(Value::Null)).unwrap_or_else(|e| err_json(&e)),
            }));
        }
    }
    Ok(new_report(env, Command::Series, &json!({ "series": rows }))?.with_table(table))
}

fn theta(env: &Env) -> Result<Report, Error> {
    let c = &env.cfg.theta;
    let n = c.stages;
    let phi = env.first_oracle("trivial")?;
    let phis = vec![phi.clone(); n];
    let s0 = phi.declared_exponent().unwrap_or(1.0);
    let sigmas: Vec<f64> = (1..=n).map(|i| s0 + 1.0 / i as f64).collect();
    let eps: Vec<f64> = (1..=n).map(|i| c.eps_scale / i as f64).collect();
    let th = patterson_theta(&phis, &sigmas, &eps, c.max_width)?;
    let audit = th.slow_growth_audit(c.audit_eps, c.audit_span);
    let last = th.breakpoints.last().copied().unwrap_or(0.0);
    let mut table = CsvTable::new("theta", &["t", "log_theta"]);
    let step = (last / 200.0).max(1.0);
    let mut t = 0.0;
    while t <= last {
        table.push(vec![t, th.log_eval(t)]);
        t += step;
    }
    let result = json!({ "oracle": phi.name(), "sigmas": sigmas, "eps": eps, "theta": th, "audit": audit });
    Ok(new_report(env, Command::Theta, &result)?.with_table(table))
}

fn psd(env: &Env) -> Result<(Report, u8), Error> {
    let o = &env.cfg.oracles;
    let mut rows = vec![];
    let mut table = CsvTable::new("psd", &["oracle", "min_eigenvalue", "trace_over_dim"]);
    let mut all = true;
    for (i, phi) in env.oracles()?.iter().enumerate() {
        let cert = psd_check(phi, o.psd_radius, o.psd_tolerance, &env.caps)?;
        all &= cert.positive;
        table.push(vec![i as f64, cert.min_eigenvalue, cert.trace_over_dim]);
        rows.push(json!({ "oracle": phi.describe(), "certificate": cert }));
    }
    let r = new_report(env, Command::Psd, &json!({ "oracles": rows, "all_positive": all }))?.with_table(table);
    Ok((r, if all { 0 } else { 1 }))
}

fn gns_options(env: &Env) -> PairMeasureOptions {
    PairMeasureOptions {
        tail_frac: env.cfg.gns.tail_frac,
        max_truncation: env.cfg.gns.max_truncation,
        ..Default::default()
    }
}

fn gns(env: &Env) -> Result<Report, Error> {
    let g = &env.cfg.gns;
    let p = &env.params;
    let phi = env.first_oracle(&format!("haagerup-s:{}", g.s))?;
    let s_eff = phi.declared_exponent().unwrap_or(1.0).max(0.5);
    let opts = gns_options(env);
    let theta = poincare_core::poincare::SlowGrowthTheta::one();
    let gens: Vec<Word> = (0..p.alphabet() as u8).map(|c| Word::from_reduced(vec![c])).collect();
    let mut rows = vec![];
    let mut table = CsvTable::new("gns", &["sigma", "interior_mass", "conformal_deviation", "tail_bound"]);
    for sigma in sigma_schedule(s_eff, g.schedule_steps) {
        let pm = pair_measure(&phi, sigma, &theta, g.depth, &opts, &env.caps)?;
        let checks: Vec<_> = gens.iter().map(|x| conformal_check(&pm, x)).collect::<Result<_, _>>()?;
        let dev = checks.iter().map(|c| c.deviation).fold(0.0, f64::max);
        table.push(vec![sigma, pm.interior_mass, dev, pm.tail_bound]);
        rows.push(json!({ "measure": pm.summary(), "conformal": checks, "max_deviation": dev }));
    }
    let mut result = json!({ "oracle": phi.describe(), "schedule": rows });
    let mut report_tables = vec![table];
    if phi.is_radial() && !g.mu_t_offsets.is_empty() && s_eff > 0.5 && s_eff < 1.0 {
        let ts: Vec<f64> = g.mu_t_offsets.iter().map(|o| p.delta() * (1.0 + o)).collect();
        match mu_t_convergence(p, s_eff, &ts, g.depth, &opts, &env.caps) {
            Ok(mu) => {
                let mut t = CsvTable::new("mu_t", &["t", "tv_mu", "pair_tv"]);
                for r in &mu {
                    t.push(vec![r.t, r.tv_mu, r.pair_tv]);
                }
                result["mu_t"] = serde_json::to_value(&mu)?;
                report_tables.push(t);
            }
            Err(e) => result["mu_t"] = err_json(&e),
        }
    }
    let mut r = new_report(env, Command::Gns, &result)?;
    for t in report_tables {
        let name = t.name.clone();
        r = r.with_table(t).with_log_y(&name);
    }
    Ok(r)
}

fn knapp_stein(env: &Env) -> Result<Report, Error> {
    let k = &env.cfg.knapp_stein;
    let mut rows = vec![];
    let mut table = CsvTable::new("knapp_stein", &["s", "relative_min", "second_over_max"]);
    for &s in &k.s_values {
        let spec = knapp_stein_spectrum(&knapp_stein_matrix(&env.params, s, k.depth, &env.caps)?);
        table.push(vec![s, spec.relative_min, spec.second_eigenvalue / spec.max_eigenvalue]);
        rows.push(json!({ "s": s, "spectrum": spec }));
    }
    Ok(new_report(env, Command::KnappStein, &json!({ "depth": k.depth, "spectra": rows }))?.with_table(table))
}

fn hc(env: &Env) -> Result<Report, Error> {
    let h = &env.cfg.harish_chandra;
    let p = &env.params;
    let depth = env.cfg.knapp_stein.depth;
    let a = p.parse("a")?;
    let mut rows = vec![];
    let mut table = CsvTable::new("harish_chandra", &["length", "c_s", "xi_s"]);
    let mut g = Word::identity();
    for len in 0..=h.max_len {
        if 2 * len < depth {
            let v = harish_chandra(p, h.s, &g, depth, &env.caps)?;
            table.push(vec![len as f64, v.c_s, v.xi_s]);
            rows.push(serde_json::to_value(v)?);
        }
        g = g.mul(&a);
    }
    let bracket = poincare_core::gns::harish_chandra_bracket(p, h.s, h.max_len);
    let result = json!({ "s": h.s, "values": rows, "bracket": bracket });
    Ok(new_report(env, Command::HarishChandra, &result)?.with_table(table).with_log_y("harish_chandra"))
}

fn fusion(env: &Env) -> Result<Report, Error> {
    let h = &env.cfg.harish_chandra;
    let (s, s2, t) = h.fusion;
    let b = fusion_check(&env.params, s, s2, t, h.max_len)?;
    let mut table = CsvTable::new("fusion", &["length", "ratio"]);
    for (i, v) in b.values.iter().enumerate() {
        table.push(vec![i as f64, *v]);
    }
    let result = json!({ "s": s, "s_prime": s2, "t": t, "bracket": b, "within": b.spread <= h.bracket_limit });
    Ok(new_report(env, Command::Fusion, &result)?.with_table(table))
}

fn norm_family(p: &GroupParams) -> Result<Vec<(String, GroupFn)>, Error> {
    let a = p.parse("a")?;
    Ok(vec![
        ("1_C1".into(), GroupFn::Radial(RadialFunction::sphere(1))),
        ("1_B2".into(), GroupFn::Radial(RadialFunction::ball(2))),
        (
            "Dir_a+Dir_a^-1".into(),
            GroupFn::Sparse(SparseGroupFunction::from_entries([(a.clone(), 1.0), (a.inverse(), 1.0)])),
        ),
    ])
}

fn norms(env: &Env) -> Result<Report, Error> {
    let sp = &env.cfg.spectral;
    let p = &env.params;
    let probes = default_probes(p, sp.random_probes, env.cfg.seed, &env.caps)?;
    let oracles = env.oracles()?;
    let mut rows = vec![];
    let mut table = CsvTable::new("norms", &["n", "function", "a_n"]);
    for (i, (name, f)) in norm_family(p)?.iter().enumerate() {
        let reg = regular_norm(p, f, sp.n_max, &env.caps)?;
        for (n, a) in &reg.sequence {
            table.push(vec![*n as f64, i as f64, *a]);
        }
        let reps: Vec<Value> = oracles
            .iter()
            .map(|phi| {
                let r = rep_norm_lower(phi, f, sp.entropy_n_max, &probes, &env.caps);
                json!({
                    "oracle": phi.name(),
                    "lower": r.map(|r| serde_json::to_value(r.estimate).unwrap_or(Value::Null)).unwrap_or_else(|e| err_json(&e)),
                })
            })
            .collect();
        rows.push(json!({ "function": name, "regular": reg, "representations": reps }));
    }
    Ok(new_report(env, Command::Norms, &json!({ "functions": rows }))?.with_table(table))
}

fn entropy(env: &Env) -> Result<Report, Error> {
    let sp = &env.cfg.spectral;
    let mut rows = vec![];
    let mut table = CsvTable::new("entropy", &["r", "oracle", "log_lower", "log_upper"]);
    for (i, phi) in env.oracles()?.iter().enumerate() {
        match entropy_estimate(phi, sp.entropy_range, sp.entropy_n_max, &env.caps) {
            Ok(e) => {
                for r in &e.rows {
                    table.push(vec![r.r as f64, i as f64, r.log_lower, r.log_upper]);
                }
                rows.push(json!({ "report": e, "contains_formula": e.contains_formula(0.15) }));
            }
            Err(e) => rows.push(json!({ "oracle": phi.name(), "error": e.to_string() })),
        }
    }
    Ok(new_report(env, Command::Entropy, &json!({ "oracles": rows }))?.with_table(table))
}

fn transfer(env: &Env) -> Result<(Report, u8), Error> {
    let sp = &env.cfg.spectral;
    let specs = if env.overridden {
        env.oracle_specs.clone()
    } else {
        sp.fuzz_oracles.clone()
    };
    let oracles: Vec<PosDefOracle> = specs
        .iter()
        .map(|s| make_oracle(&env.params, s, &env.caps))
        .collect::<Result<_, _>>()?;
    let rep = transfer_fuzz(&env.params, &oracles, sp.fuzz_count, sp.fuzz_radius, env.cfg.seed, &env.caps)?;
    let mut table = CsvTable::new("transfer", &["case", "oracle", "margin"]);
    for c in &rep.cases {
        for (j, r) in c.reports.iter().enumerate() {
            table.push(vec![c.index as f64, j as f64, r.margin]);
        }
    }
    let code = if rep.violations == 0 { 0 } else { 1 };
    Ok((new_report(env, Command::Transfer, &serde_json::to_value(&rep)?)?.with_table(table), code))
}

fn rrd(env: &Env) -> Result<Report, Error> {
    let sp = &env.cfg.spectral;
    let family: Vec<(usize, RadialFunction)> =
        (sp.rrd_range.0..=sp.rrd_range.1).map(|r| (r, RadialFunction::ball(r))).collect();
    let rep = rrd_check(&env.params, &family, sp.rrd_n_max, sp.rrd_r2, &env.caps)?;
    let mut table = CsvTable::new("rrd", &["r", "norm", "l2", "ratio"]);
    for r in &rep.rows {
        table.push(vec![r.r as f64, r.norm, r.l2, r.ratio]);
    }
    Ok(new_report(env, Command::Rrd, &serde_json::to_value(&rep)?)?.with_table(table))
}

fn boundary_norm(env: &Env) -> Result<Report, Error> {
    let b = &env.cfg.boundary;
    let p = &env.params;
    let mut rows = vec![];
    let mut ls = vec![];
    let mut logs = vec![];
    let mut table = CsvTable::new("boundary_norm", &["L", "sup_norm"]);
    for l in b.l_range.0..=b.l_range.1 {
        let f = GroupFn::Radial(RadialFunction::ball_average(p, l));
        let sup = boundary_sup_norm(p, b.s, &f, &env.caps)?;
        ls.push(l as f64);
        logs.push(sup.ln());
        table.push(vec![l as f64, sup]);
        rows.push(json!({ "L": l, "sup_norm": sup }));
    }
    let fit = fit_line(&ls, &logs);
    // Below the cell depth the operator norm is also measured in the Knapp-Stein form.
    let form = knapp_stein_matrix(p, b.s, b.depth, &env.caps)?.weighted();
    let mut form_checks = vec![];
    for l in 1..b.depth {
        let f = GroupFn::Radial(RadialFunction::ball_average(p, l));
        form_checks.push(boundary_norm_bound(p, b.s, &f, b.depth, Some(&form), &env.caps)?);
    }
    let result = json!({
        "s": b.s,
        "rows": rows,
        "form_checks": form_checks,
        "slope": fit.slope,
        "predicted_slope": -(1.0 - b.s) * p.delta(),
    });
    Ok(new_report(env, Command::BoundaryNorm, &result)?.with_table(table).with_log_y("boundary_norm"))
}

fn verify_all(env: &Env) -> Result<(Report, u8), Error> {
    let (rep, timings) = acceptance::run(&env.cfg, &[])?;
    print!("{}", rep.table());
    for (id, secs) in &timings {
        eprintln!("criterion {id:>2}: {secs:.2} s");
    }
    let mut table = CsvTable::new("acceptance", &["criterion", "passed"]);
    for c in &rep.criteria {
        table.push(vec![c.id as f64, if c.passed { 1.0 } else { 0.0 }]);
    }
    let code = if rep.all_passed() { 0 } else { 1 };
    Ok((new_report(env, Command::VerifyAll, &serde_json::to_value(&rep)?)?.with_table(table), code))
}
