//! The five subcommands: plan, sweep, ratefit, pointwise, constants.
//!
//! Every command is a pure function of its configuration and seed. Reports
//! are CSV with `#` comment metadata; the comment block echoes the fully
//! resolved configuration (strip the leading `# ` and it is a rerunnable
//! config file). Numeric data columns are printed with 17 significant
//! digits so emitted files are bit-reproducible inputs for `ratefit`.

use std::fmt::Write as _;
use std::path::Path;

use crate::config::Config;
use crate::error::{CliError, Result};
use sampden::estimators::EstimatorKind;
use sampden::processes::ProcessModel;
use sampden::risk::{pointwise_variance_scaled, RateExperiment, RiskConfig, SchemeRule};
use sampden::sampling::{delta_star, minimal_observation_time, SamplePlan, SamplingScheme};
use sampden::theory::{
    bandwidth, bandwidth_exponent, c_gamma0, fit_rate, optimal_c, slack_constant_c, slope_window,
    target_slope, tn_rate_class,
};

/// Full-precision column formatting (17 significant digits).
fn full(x: f64) -> String {
    format!("{x:.16e}")
}

fn join_f64(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

type Resolved = Vec<(String, String)>;

fn push(resolved: &mut Resolved, key: &str, value: impl ToString) {
    resolved.push((key.to_string(), value.to_string()));
}

fn echo_model(resolved: &mut Resolved, model: &ProcessModel) {
    match model {
        ProcessModel::Ou(m) => {
            push(resolved, "process", "ou");
            push(resolved, "theta", join_f64(m.theta()));
            push(resolved, "sigma", join_f64(m.sigma()));
            push(resolved, "dim", m.theta().len());
        }
        ProcessModel::Smooth(m) => {
            push(resolved, "process", "smooth");
            push(resolved, "ell", m.length_scale());
        }
    }
}

fn echo_scheme(resolved: &mut Resolved, rule: &SchemeRule) {
    match rule {
        SchemeRule::Fixed(SamplingScheme::Renewal(r)) => {
            push(resolved, "scheme", "renewal");
            push(resolved, "r", r.shape());
            push(resolved, "delta", r.mean_interval());
        }
        SchemeRule::Fixed(SamplingScheme::Jittered { period, .. }) => {
            push(resolved, "scheme", "jittered");
            push(resolved, "delta", period);
        }
        SchemeRule::Fixed(SamplingScheme::HighFrequency { step }) => {
            push(resolved, "scheme", "highfreq");
            push(resolved, "delta_n", step);
        }
        SchemeRule::MinimalStep { d1, d2, d3 } => {
            push(resolved, "scheme", "highfreq");
            push(resolved, "d1", d1);
            push(resolved, "d2", d2);
            push(resolved, "d3", d3);
        }
    }
}

fn render(title: &str, resolved: &Resolved, info: &Resolved, body: &str) -> String {
    let mut out = String::new();
    writeln!(out, "# sampden {title}").unwrap();
    // `key = value` lines are exactly the resolved config (strip the
    // leading `# ` to re-run); derived values use `key: value` so they
    // never collide with config parsing
    for (k, v) in resolved {
        writeln!(out, "# {k} = {v}").unwrap();
    }
    for (k, v) in info {
        writeln!(out, "# {k}: {v}").unwrap();
    }
    out.push_str(body);
    out
}

/// Write atomically (temp file + rename) or to stdout when no path is set.
pub fn emit(out: Option<&str>, content: &str) -> Result<()> {
    match out {
        None => {
            print!("{content}");
            Ok(())
        }
        Some(path) => {
            let path = Path::new(path);
            let mut tmp = path.as_os_str().to_owned();
            tmp.push(".tmp");
            let tmp = Path::new(&tmp);
            std::fs::write(tmp, content)
                .map_err(|e| CliError::Io(format!("cannot write {}: {e}", tmp.display())))?;
            std::fs::rename(tmp, path)
                .map_err(|e| CliError::Io(format!("cannot rename into {}: {e}", path.display())))?;
            Ok(())
        }
    }
}

/// The roughness functional matching the estimator's bias constant.
fn model_roughness(model: &ProcessModel, kind: EstimatorKind) -> Result<f64> {
    Ok(match kind {
        EstimatorKind::Histogram => model.roughness_grad()?,
        EstimatorKind::FrequencyPolygon => model.roughness_hess()?,
    })
}

/// Resolve the bandwidth constant: explicit `c`, or the optimal constant
/// for the model's roughness with zero slack.
fn resolve_c(cfg: &Config, model: &ProcessModel, kind: EstimatorKind) -> Result<f64> {
    match cfg.f64_opt("c")? {
        Some(c) => Ok(c),
        None => Ok(optimal_c(kind, model.dim(), model_roughness(model, kind)?, 0.0)?),
    }
}

/// Sampling-design table: bandwidths, minimal admissible steps, and the
/// observation-time budget for each n in the grid.
pub fn cmd_plan(cfg: &Config, seed: Option<u64>, out: Option<&str>) -> Result<()> {
    let gamma0 = cfg.require_f64("gamma0")?;
    let estimator = cfg.estimator_or_histogram()?;
    let model = if cfg.has("process") { Some(cfg.model()?) } else { None };
    let dim = match (&model, cfg.u64_opt("dim")?) {
        (Some(m), _) => m.dim(),
        (None, Some(d)) => d as usize,
        (None, None) => 1,
    };
    let c = cfg.require_f64("c")?;
    let n_grid = cfg
        .usize_list("n")?
        .ok_or_else(|| CliError::config("missing required key 'n'"))?;
    let d1 = cfg.f64_or("d1", 1.0)?;
    let d2 = cfg.f64_or("d2", 1.0)?;
    let d3 = cfg.f64_or("d3", 1.0)?;
    let rate = tn_rate_class(gamma0, dim)?;

    let mut resolved = Resolved::new();
    push(&mut resolved, "gamma0", gamma0);
    if model.is_none() {
        push(&mut resolved, "dim", dim);
    }
    push(&mut resolved, "estimator", estimator);
    push(&mut resolved, "c", c);
    push(&mut resolved, "n", n_grid.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","));
    push(&mut resolved, "d1", d1);
    push(&mut resolved, "d2", d2);
    push(&mut resolved, "d3", d3);
    if let Some(s) = seed {
        push(&mut resolved, "seed", s);
    }
    if let Some(m) = &model {
        echo_model(&mut resolved, m);
    }
    let mut info = Resolved::new();
    push(&mut info, "rate_class", rate);
    // the optimal bandwidth constant, when a roughness source is configured
    let roughness = match (&model, cfg.f64_opt("roughness")?) {
        (_, Some(r)) => Some(r),
        (Some(m), None) => Some(model_roughness(m, estimator)?),
        (None, None) => None,
    };
    if let Some(r) = roughness {
        push(&mut resolved, "roughness", r);
        push(&mut info, "optimal_c", optimal_c(estimator, dim, r, 0.0)?);
    }

    let mut body = String::from("n,h,delta_star,t_star\n");
    for &n in &n_grid {
        let h = bandwidth(estimator, c, n as u64, dim)?;
        let plan = SamplePlan { gamma0, dim, bin_width: h, d1, d2, d3, n: n as u64 };
        let step = delta_star(&plan)?;
        let t_star = minimal_observation_time(&plan)?;
        writeln!(body, "{n},{},{},{}", full(h), full(step), full(t_star)).unwrap();
    }
    emit(out, &render("plan", &resolved, &info, &body))
}

/// MISE sweep over the sample-size grid.
pub fn cmd_sweep(cfg: &Config, seed: Option<u64>, out: Option<&str>) -> Result<()> {
    let model = cfg.model()?;
    let scheme = cfg.scheme_rule()?;
    let estimator = cfg.estimator()?;
    let n_grid = cfg
        .usize_list("n")?
        .ok_or_else(|| CliError::config("missing required key 'n'"))?;
    let replications = cfg
        .u64_opt("reps")?
        .ok_or_else(|| CliError::config("missing required key 'reps'"))? as usize;
    let base_seed = cfg.seed(seed)?;
    let c = resolve_c(cfg, &model, estimator)?;
    let bw_exp = match cfg.f64_opt("bw_exponent")? {
        Some(e) => e,
        None => bandwidth_exponent(estimator, model.dim())?,
    };
    let quad_order = cfg.usize_or("quad_order", 5)?;
    let domain_sds = cfg.f64_or("domain_sds", 8.0)?;

    let mut resolved = Resolved::new();
    echo_model(&mut resolved, &model);
    echo_scheme(&mut resolved, &scheme);
    push(&mut resolved, "estimator", estimator);
    push(&mut resolved, "n", n_grid.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","));
    push(&mut resolved, "c", c);
    push(&mut resolved, "bw_exponent", bw_exp);
    push(&mut resolved, "reps", replications);
    push(&mut resolved, "seed", base_seed);
    push(&mut resolved, "quad_order", quad_order);
    push(&mut resolved, "domain_sds", domain_sds);

    let experiment = RateExperiment {
        model,
        scheme,
        estimator,
        n_grid,
        bandwidth_c: c,
        bandwidth_exp: Some(bw_exp),
        replications,
        base_seed,
        quad_order,
        domain_sds,
    };
    let rows = experiment.run()?;

    let mut info = Resolved::new();
    for row in &rows {
        let mut detail = format!("h {}", row.bin_width);
        if let Some(step) = row.delta_n {
            write!(detail, ", delta_n {step}").unwrap();
        }
        push(&mut info, &format!("row n {}", row.n), detail);
    }
    let mut body = String::from("n,mise,stderr,isb,iv\n");
    for row in &rows {
        writeln!(
            body,
            "{},{},{},{},{}",
            row.n,
            full(row.report.mise),
            full(row.report.mise_stderr),
            full(row.report.isb_exact),
            full(row.report.iv_mc)
        )
        .unwrap();
    }
    emit(out, &render("sweep", &resolved, &info, &body))
}

/// Fit the empirical rate from a sweep CSV and check it against the
/// theoretical slope window.
pub fn cmd_ratefit(csv_path: &str, out: Option<&str>) -> Result<()> {
    let text = std::fs::read_to_string(csv_path)
        .map_err(|e| CliError::Io(format!("cannot read '{csv_path}': {e}")))?;
    let mut estimator = EstimatorKind::Histogram;
    let mut dim = 1usize;
    let mut points: Vec<(f64, f64)> = Vec::new();
    let mut stderrs: Vec<Option<f64>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let rowno = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                match key.trim() {
                    "estimator" => {
                        estimator = value.trim().parse().map_err(|e: sampden::Error| {
                            CliError::config_at(rowno, e.to_string())
                        })?;
                    }
                    "dim" => {
                        dim = value.trim().parse().map_err(|e| {
                            CliError::config_at(rowno, format!("bad dim: {e}"))
                        })?;
                    }
                    _ => {}
                }
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() < 2 {
            return Err(CliError::config_at(rowno, format!("expected n,mise[,...], got '{line}'")));
        }
        if fields[0].parse::<f64>().is_err() && points.is_empty() {
            continue; // column header
        }
        let n: f64 = fields[0]
            .parse()
            .map_err(|e| CliError::config_at(rowno, format!("bad n: {e}")))?;
        let mise: f64 = fields[1]
            .parse()
            .map_err(|e| CliError::config_at(rowno, format!("bad mise: {e}")))?;
        points.push((n, mise));
        stderrs.push(fields.get(2).and_then(|s| s.parse().ok()));
    }
    let fit = fit_rate(&points)?;
    let target = target_slope(estimator, dim)?;
    let (lo, hi) = slope_window(estimator, dim)?;
    let pass = (lo..=hi).contains(&fit.slope);

    // estimator/dim keep the `=` form ratefit itself reads back
    let mut resolved = Resolved::new();
    push(&mut resolved, "estimator", estimator);
    push(&mut resolved, "dim", dim);
    let mut info = Resolved::new();
    push(&mut info, "source", csv_path);
    push(&mut info, "target_slope", target);
    push(&mut info, "slope_window", format!("[{lo}, {hi}]"));

    let mut body = fit.to_csv(&stderrs);
    writeln!(body, "# pass={pass}").unwrap();
    emit(out, &render("ratefit", &resolved, &info, &body))?;
    if pass {
        Ok(())
    } else {
        Err(CliError::CheckFailed(format!(
            "fitted slope {:.4} outside [{lo}, {hi}] (target {target:.4})",
            fit.slope
        )))
    }
}

/// Scaled pointwise variance against its continuous-time limit.
pub fn cmd_pointwise(cfg: &Config, seed: Option<u64>, out: Option<&str>) -> Result<()> {
    let model = cfg.model()?;
    let estimator = cfg.estimator()?;
    match cfg.require("scheme")? {
        "highfreq" => {}
        other => {
            return Err(CliError::config(format!(
                "the pointwise variance limit holds under high-frequency sampling with a vanishing step; scheme '{other}' does not qualify"
            )))
        }
    }
    let n_grid = cfg
        .usize_list("n")?
        .ok_or_else(|| CliError::config("missing required key 'n'"))?;
    if n_grid.len() != 1 {
        return Err(CliError::config("pointwise takes a single n"));
    }
    let n = n_grid[0];
    let replications = cfg
        .u64_opt("reps")?
        .ok_or_else(|| CliError::config("missing required key 'reps'"))? as usize;
    let base_seed = cfg.seed(seed)?;
    let c = cfg.f64_or("c", 1.0)?;
    let bw_exp = cfg.f64_or("bw_exponent", 0.2)?;
    let beta = cfg.f64_or("beta", 2.0 * model.dim() as f64)?;
    let x = cfg.f64_list("x")?.unwrap_or_else(|| vec![0.0; model.dim()]);
    if x.len() != model.dim() {
        return Err(CliError::config(format!(
            "x has {} coordinates but the process has dimension {}",
            x.len(),
            model.dim()
        )));
    }
    let h = c * (n as f64).powf(-bw_exp);
    let step = match cfg.f64_opt("delta_n")? {
        Some(s) => s,
        None => h.powf(beta),
    };
    let quad_order = cfg.usize_or("quad_order", 5)?;

    let mut resolved = Resolved::new();
    echo_model(&mut resolved, &model);
    push(&mut resolved, "scheme", "highfreq");
    push(&mut resolved, "estimator", estimator);
    push(&mut resolved, "n", n);
    push(&mut resolved, "c", c);
    push(&mut resolved, "bw_exponent", bw_exp);
    push(&mut resolved, "beta", beta);
    push(&mut resolved, "delta_n", step);
    push(&mut resolved, "x", join_f64(&x));
    push(&mut resolved, "reps", replications);
    push(&mut resolved, "seed", base_seed);

    let mut risk_cfg = RiskConfig::new(
        model.clone(),
        SamplingScheme::high_frequency(step)?,
        estimator,
        n,
        h,
        replications,
        base_seed,
    );
    risk_cfg.quad_order = quad_order;
    let outcome = pointwise_variance_scaled(&risk_cfg, &x)?;
    let (integrated, cutoff) = model.integrated_g_with_cutoff(&x)?;
    let limit = 2.0 * integrated;
    let mut info = Resolved::new();
    push(&mut info, "h", h);
    push(&mut info, "t_n", outcome.t_n);
    push(&mut info, "tail_cutoff", cutoff);

    let mut body = String::from("x,scaled_variance,analytic_limit,ratio\n");
    writeln!(
        body,
        "{},{},{},{}",
        x.iter().map(|v| full(*v)).collect::<Vec<_>>().join(";"),
        full(outcome.scaled_variance),
        full(limit),
        full(outcome.scaled_variance / limit)
    )
    .unwrap();
    emit(out, &render("pointwise", &resolved, &info, &body))
}

/// Evaluate the design constants and optimal bandwidth constants for a
/// mixing profile.
pub fn cmd_constants(cfg: &Config, out: Option<&str>) -> Result<()> {
    let profile = cfg
        .profile()?
        .ok_or_else(|| CliError::config("the constants command needs a full mixing profile"))?;
    let scheme = if cfg.has("scheme") { Some(cfg.scheme_rule()?) } else { None };
    let gamma0 = cfg.f64_opt("gamma0")?;
    if scheme.is_none() && gamma0.is_none() {
        return Err(CliError::config(
            "provide a scheme (for the design constant C) or gamma0 (for C_gamma0)",
        ));
    }

    let mut resolved = Resolved::new();
    push(&mut resolved, "u0", profile.u0);
    push(&mut resolved, "u1", profile.u1);
    push(&mut resolved, "a0", profile.a0);
    push(&mut resolved, "rho", profile.rho);
    push(&mut resolved, "h0", profile.h0);
    push(&mut resolved, "norm_k", profile.norm_k);
    push(&mut resolved, "norm_phi", profile.norm_phi);
    push(&mut resolved, "f_sup", profile.f_sup);
    push(&mut resolved, "pi_sup", profile.pi_sup_on_band);
    push(&mut resolved, "pi_tail", profile.pi_tail);

    let mut info = Resolved::new();
    let mut body = String::from("key,value\n");
    let mut slack_for_c = 0.0;
    if let Some(SchemeRule::Fixed(s)) = &scheme {
        echo_scheme(&mut resolved, &SchemeRule::Fixed(*s));
        let c = slack_constant_c(s, &profile)?;
        writeln!(body, "slack_C,{}", full(c)).unwrap();
        slack_for_c = c;
    }
    if let Some(g) = gamma0 {
        push(&mut resolved, "gamma0", g);
        let d1 = cfg.f64_or("d1", 1.0)?;
        let d2 = cfg.f64_or("d2", 1.0)?;
        let d3 = cfg.f64_or("d3", 1.0)?;
        push(&mut resolved, "d1", d1);
        push(&mut resolved, "d2", d2);
        push(&mut resolved, "d3", d3);
        let cg = c_gamma0(&profile, g, Some(d1), Some(d2), Some(d3))?;
        writeln!(body, "slack_C_gamma0,{}", full(cg)).unwrap();
        if scheme.is_none() || matches!(scheme, Some(SchemeRule::MinimalStep { .. })) {
            slack_for_c = cg;
        }
    }
    // optimal bandwidth constants when a roughness source is available
    let model = if cfg.has("process") { Some(cfg.model()?) } else { None };
    if let Some(m) = &model {
        echo_model(&mut resolved, m);
        push(&mut info, "slack_used_for_optimal_c", slack_for_c);
        let r_grad = m.roughness_grad()?;
        writeln!(
            body,
            "optimal_c_histogram,{}",
            full(optimal_c(EstimatorKind::Histogram, m.dim(), r_grad, slack_for_c)?)
        )
        .unwrap();
        if m.dim() == 1 {
            let r_hess = m.roughness_hess()?;
            writeln!(
                body,
                "optimal_c_frequency_polygon,{}",
                full(optimal_c(EstimatorKind::FrequencyPolygon, 1, r_hess, slack_for_c)?)
            )
            .unwrap();
        }
    } else if let Some(r) = cfg.f64_opt("roughness")? {
        let dim = cfg.usize_or("dim", 1)?;
        push(&mut resolved, "roughness", r);
        push(&mut resolved, "dim", dim);
        push(&mut info, "slack_used_for_optimal_c", slack_for_c);
        writeln!(
            body,
            "optimal_c_histogram,{}",
            full(optimal_c(EstimatorKind::Histogram, dim, r, slack_for_c)?)
        )
        .unwrap();
    }
    emit(out, &render("constants", &resolved, &info, &body))
}
