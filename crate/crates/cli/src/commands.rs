//! Maps each command onto the library operations and collects report rows.

use lecam_core::asymptotics::{
    empirical_process_paths, lamn_terminal_sample, law_report, ProductExperimentSpec,
    RandomScaleSpec, ScaleLaw,
};
use lecam_core::gaussian::{
    bridge_decomposition, brownian_bridge, normalization_check, prakasa_rao_constant,
    prakasa_rao_sample, BrownianPath, FbmSampler, FbmSpec, ItoIntegrator, RegressionExperimentSpec,
};
use lecam_core::hazard::{
    conditional_projection, cumulative_variance, hazard_derivative, inverse_hazard, HazardPair,
};
use lecam_core::pricing::{
    crr_np_power_gap, crr_price_and_delta, delta_as_power, exact_power_decomposition,
    gamma_from_power, gamma_power_relation, krafft_plachky, lognormal_call_price,
    mc_delta_finite_difference, mc_level_power, mc_power_decomposition, np_threshold,
    variance_compare, CallSpec, CrrModel, KGrid, LognormalLikelihood, NeymanPearsonTest, PowerMode,
    RateCurve,
};
use lecam_core::stats::{ks_distance, ks_distance_gaussian, variance};
use lecam_core::tangent::{builtin, list_builtin_tangents, validate_tangent, TangentFunction};
use lecam_core::{Error, Executor, MonteCarloEstimate, Result, RngStreamSpec, TimeGrid};

use crate::config::{CommandKind, RunConfig};
use crate::report::Row;

struct Ctx<'a> {
    cfg: &'a RunConfig,
    exec: Executor,
}

impl Ctx<'_> {
    fn stream(&self, id: u64) -> RngStreamSpec {
        RngStreamSpec::new(self.cfg.seed, id)
    }

    fn estimate(&self, xs: &[f64]) -> Result<MonteCarloEstimate> {
        MonteCarloEstimate::from_samples(xs, self.cfg.seed)
    }
}

pub fn execute(cfg: &RunConfig) -> Result<Vec<Row>> {
    let ctx = Ctx {
        cfg,
        exec: Executor::new(cfg.workers),
    };
    match cfg.command {
        CommandKind::Price => price(&ctx),
        CommandKind::Greeks => greeks(&ctx),
        CommandKind::VarianceCompare => variance_compare_rows(&ctx),
        CommandKind::Law => law(&ctx),
        CommandKind::Lamn => lamn(&ctx),
        CommandKind::Empirical => empirical(&ctx),
        CommandKind::Gaussian => gaussian(&ctx),
        CommandKind::Fbm => fbm(&ctx),
        CommandKind::PrakasaRao => prakasa_rao(&ctx),
        CommandKind::CrrCompare => crr(&ctx),
        CommandKind::HazardCheck => hazard_check(&ctx),
        CommandKind::Tangents => tangents(),
    }
}

fn call_spec(cfg: &RunConfig) -> Result<CallSpec> {
    CallSpec {
        s0: cfg.float("s0"),
        strike: cfg.float("strike"),
        rate: RateCurve::Constant(0.0),
        horizon: cfg.float("horizon"),
        eval_time: 0.0,
        spot: cfg.float("s0"),
        sigma_eff: cfg.float("sigma"),
    }
    .validated()
    .map(|s| s.with_rate(RateCurve::Constant(cfg.float("rate"))))
}

fn tangent(cfg: &RunConfig) -> TangentFunction {
    builtin(cfg.choice("tangent")).expect("choices are built-in names")
}

fn positive(name: &'static str, v: usize) -> Result<usize> {
    if v == 0 {
        return Err(Error::InvalidParameter {
            name,
            reason: "must be at least 1".into(),
        });
    }
    Ok(v)
}

fn unit_grid(points: usize) -> Result<TimeGrid> {
    TimeGrid::uniform(points, 1.0)
}

fn price(ctx: &Ctx) -> Result<Vec<Row>> {
    let spec = call_spec(ctx.cfg)?;
    let reps = positive("reps", ctx.cfg.count("reps"))?;
    let d = match ctx.cfg.choice("mode") {
        "exact" => exact_power_decomposition(&spec)?,
        mode => {
            let mode = if mode == "alternative" {
                PowerMode::Alternative
            } else {
                PowerMode::ChangeOfMeasure
            };
            let sampler = LognormalLikelihood {
                sigma: spec.sigma_eff,
            };
            mc_power_decomposition(&spec, &sampler, reps, ctx.stream(1), mode, &ctx.exec)?
        }
    };
    Ok(vec![
        Row::exact("threshold", np_threshold(&spec)?),
        Row::quantity("level", &d.level),
        Row::quantity("power", &d.power),
        Row::quantity("price", &d.price),
        Row::exact("price.closed_form", lognormal_call_price(&spec)?),
    ])
}

fn greeks(ctx: &Ctx) -> Result<Vec<Row>> {
    let cfg = ctx.cfg;
    let spec = call_spec(cfg)?;
    let reps = positive("reps", cfg.count("reps"))?;
    let test = NeymanPearsonTest::new(np_threshold(&spec)?)?;
    let sampler = LognormalLikelihood {
        sigma: spec.sigma_eff,
    };
    let lp = mc_level_power(
        &sampler,
        &test,
        reps,
        ctx.stream(1),
        PowerMode::Alternative,
        &ctx.exec,
    )?;
    let fd = mc_delta_finite_difference(&spec, cfg.float("h"), reps, ctx.stream(2), &ctx.exec)?;
    let gh = cfg.float("gamma_h");
    let kp = krafft_plachky(
        &spec,
        KGrid {
            k_max: cfg.float("k_max"),
            step: cfg.float("k_step"),
        },
    )?;
    Ok(vec![
        Row::exact("delta.closed_form", delta_as_power(&spec)?),
        Row::estimate("delta.power", &lp.power),
        Row::estimate("delta.finite_difference", &fd.finite_difference),
        Row::estimate("delta.power_same_draws", &fd.power),
        Row::exact("gamma.level_relation", gamma_power_relation(&spec, gh)?),
        Row::exact("gamma.power_derivative", gamma_from_power(&spec, gh)?),
        Row::exact("krafft_plachky.minimum", kp.minimum),
        Row::exact("krafft_plachky.argmin", kp.argmin),
    ])
}

fn variance_compare_rows(ctx: &Ctx) -> Result<Vec<Row>> {
    let spec = call_spec(ctx.cfg)?;
    let r = variance_compare(&spec, ctx.cfg.count("budget"), ctx.stream(1), &ctx.exec)?;
    Ok(vec![
        Row::estimate("direct.price", &r.direct),
        Row::quantity("decomposition.level", &r.decomposition.level),
        Row::quantity("decomposition.power", &r.decomposition.power),
        Row::quantity("decomposition.price", &r.decomposition.price),
        Row::exact("price.closed_form", lognormal_call_price(&spec)?),
    ])
}

fn law(ctx: &Ctx) -> Result<Vec<Row>> {
    let cfg = ctx.cfg;
    let ns = cfg.counts("n");
    let first = *ns.first().ok_or(Error::InvalidParameter {
        name: "n",
        reason: "need at least one sample size".into(),
    })?;
    let spec = ProductExperimentSpec::new(
        vec![HazardPair::from_tangent(tangent(cfg))],
        first,
        unit_grid(cfg.count("grid_points"))?,
    )?;
    let reps = positive("reps", cfg.count("reps"))?;
    let reports = law_report(&spec, 0, reps, ns, ctx.stream(1), &ctx.exec)?;
    let mut rows = Vec::new();
    for r in reports {
        let n = r.n;
        rows.push(Row::sample(
            format!("n={n}.sup_remainder"),
            r.sup_remainder,
            r.reps,
        ));
        rows.push(Row::sample(
            format!("n={n}.sup_sigma_err"),
            r.sup_sigma_err,
            r.reps,
        ));
        for (t, ks) in r.times.iter().zip(&r.ks_distances) {
            rows.push(Row::sample(format!("n={n}.ks_central_sequence"), *ks, r.reps).at(*t));
        }
    }
    Ok(rows)
}

fn lamn(ctx: &Ctx) -> Result<Vec<Row>> {
    let cfg = ctx.cfg;
    let g = tangent(cfg);
    let spec = ProductExperimentSpec::single(g.clone(), cfg.count("n"))?;
    let scale = RandomScaleSpec::new(ScaleLaw::equiprobable(cfg.floats("scales").to_vec()))?;
    let reps = positive("reps", cfg.count("reps"))?;
    let out = lamn_terminal_sample(&spec, 0, &scale, reps, ctx.stream(1), &ctx.exec)?;
    let logs: Vec<f64> = out.iter().map(|p| p.1).collect();
    let ys: Vec<f64> = out.iter().map(|p| p.0).collect();
    let sigma2 = cumulative_variance(&spec.pairs()[0].gamma, 1.0)?;
    let ks = ks_distance(&logs, |x| scale.law.mixture_cdf(sigma2, x));
    Ok(vec![
        Row::estimate("scale.mean", &ctx.estimate(&ys)?),
        Row::estimate("loglik.mean", &ctx.estimate(&logs)?).at(1.0),
        Row::sample("loglik.variance", variance_of(&logs), reps).at(1.0),
        Row::sample("loglik.ks_mixture", ks, reps).at(1.0),
    ])
}

fn variance_of(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        f64::NAN
    } else {
        variance(xs)
    }
}

fn empirical(ctx: &Ctx) -> Result<Vec<Row>> {
    let cfg = ctx.cfg;
    let g = tangent(cfg);
    let grid = unit_grid(cfg.count("grid_points"))?;
    let reps = positive("reps", cfg.count("reps"))?;
    let paths = empirical_process_paths(&g, cfg.count("n"), &grid, reps, ctx.stream(1), &ctx.exec)?;
    let mut rows = Vec::new();
    for (k, &t) in grid.points().iter().enumerate() {
        let col: Vec<f64> = paths.iter().map(|p| p[k]).collect();
        rows.push(Row::estimate("process.mean", &ctx.estimate(&col)?).at(t));
        rows.push(Row::sample("process.variance", variance_of(&col), reps).at(t));
        rows.push(Row::exact("shift.closed_form", g.antiderivative(t)?).at(t));
    }
    Ok(rows)
}

fn gaussian(ctx: &Ctx) -> Result<Vec<Row>> {
    let cfg = ctx.cfg;
    let gamma = hazard_derivative(&tangent(cfg));
    let grid = unit_grid(cfg.count("grid_points"))?;
    let reps = positive("reps", cfg.count("reps"))?;
    let ito = ItoIntegrator::new(&gamma, &grid)?;
    let paths = ctx.exec.collect(ctx.stream(1), reps, |r| {
        ito.log_path(&BrownianPath::sample(&grid, r))
    });
    let sigma2 = cumulative_variance(&gamma, 1.0)?;
    let last: Vec<f64> = paths.iter().map(|p| p[p.len() - 1]).collect();
    let mut rows = vec![
        Row::exact("sigma2", sigma2).at(1.0),
        Row::estimate("loglik.mean", &ctx.estimate(&last)?).at(1.0),
        Row::sample("loglik.variance", variance_of(&last), reps).at(1.0),
        Row::sample(
            "loglik.ks_normal",
            ks_distance_gaussian(&last, -0.5 * sigma2, sigma2),
            reps,
        )
        .at(1.0),
    ];
    // martingale check on eight equal sub-intervals
    let stride = ((grid.len() - 1) / 8).max(1);
    for k in (0..grid.len()).step_by(stride) {
        let x: Vec<f64> = paths.iter().map(|p| p[k].exp()).collect();
        rows.push(Row::estimate("density.mean", &ctx.estimate(&x)?).at(grid.points()[k]));
    }
    let tau = cfg.float("tau");
    let bridges = ctx.exec.try_collect(ctx.stream(2), reps, |r| {
        bridge_decomposition(&brownian_bridge(&BrownianPath::sample(&grid, r))?, tau)
    })?;
    let recovered = &bridges[0].grid;
    let t = recovered.points();
    for k in (0..t.len().saturating_sub(stride)).step_by(stride) {
        let incs: Vec<f64> = bridges
            .iter()
            .map(|b| b.values[k + stride] - b.values[k])
            .collect();
        let dt = t[k + stride] - t[k];
        rows.push(
            Row::sample(
                "bridge.increment_variance_ratio",
                variance_of(&incs) / dt,
                reps,
            )
            .at(t[k]),
        );
    }
    Ok(rows)
}

fn fbm(ctx: &Ctx) -> Result<Vec<Row>> {
    let cfg = ctx.cfg;
    let hurst = cfg.float("hurst");
    let sampler = FbmSampler::new(FbmSpec::new(hurst, unit_grid(cfg.count("grid_points"))?)?)?;
    let reps = positive("reps", cfg.count("reps"))?;
    let paths = ctx
        .exec
        .collect(ctx.stream(1), reps, |r| sampler.loglik_path(r).log_values);
    let mut rows = Vec::new();
    for (k, &t) in sampler.spec().grid.points().iter().enumerate() {
        let l: Vec<f64> = paths.iter().map(|p| p[k]).collect();
        let x: Vec<f64> = l.iter().map(|v| v.exp()).collect();
        let var = t.powf(2.0 * hurst);
        rows.push(Row::estimate("likelihood.mean", &ctx.estimate(&x)?).at(t));
        rows.push(Row::sample("loglik.variance", variance_of(&l), reps).at(t));
        rows.push(
            Row::sample(
                "loglik.ks_normal",
                ks_distance_gaussian(&l, -0.5 * var, var),
                reps,
            )
            .at(t),
        );
    }
    Ok(rows)
}

fn prakasa_rao(ctx: &Ctx) -> Result<Vec<Row>> {
    let cfg = ctx.cfg;
    let spec = RegressionExperimentSpec::new(cfg.float("hurst"), cfg.count("n"), cfg.float("t"))?;
    let reps = positive("reps", cfg.count("reps"))?;
    let l = prakasa_rao_sample(&spec, reps, ctx.stream(1), &ctx.exec)?;
    Ok(vec![
        Row::exact("constant", prakasa_rao_constant(spec.hurst)),
        Row::exact("normalization", normalization_check(spec.hurst, 1e-12)?),
        Row::exact("shift", spec.shift()),
        Row::estimate("loglik.mean", &ctx.estimate(&l)?).at(spec.t),
        Row::sample("loglik.variance", variance_of(&l), reps).at(spec.t),
    ])
}

fn crr(ctx: &Ctx) -> Result<Vec<Row>> {
    let cfg = ctx.cfg;
    let model = CrrModel::with_growth(
        cfg.count("steps"),
        cfg.float("up"),
        cfg.float("down"),
        cfg.float("growth"),
        cfg.float("s0"),
        cfg.float("strike"),
    )?;
    let tree = crr_price_and_delta(&model);
    let mut rows = vec![Row::exact("price", tree.price)];
    if let Some(d) = tree.root_delta() {
        rows.push(Row::exact("root_delta", d));
    }
    let steps = model.steps as f64;
    for node in crr_np_power_gap(&model).nodes {
        let t = node.step as f64 / steps;
        let id = format!("node[{},{}]", node.step, node.ups);
        rows.push(Row::exact(format!("{id}.delta"), node.delta).at(t));
        rows.push(Row::exact(format!("{id}.power"), node.power).at(t));
        rows.push(Row::exact(format!("{id}.level"), node.level).at(t));
        rows.push(Row::exact(format!("{id}.gap"), node.gap).at(t));
    }
    Ok(rows)
}

fn hazard_check(ctx: &Ctx) -> Result<Vec<Row>> {
    let cfg = ctx.cfg;
    let g = tangent(cfg);
    let pair = HazardPair::from_tangent(g.clone());
    // the same tangent stripped of its closed forms
    let bare = {
        let f = g.clone();
        TangentFunction::new(format!("{} (quadrature)", g.label()), g.bound(), move |x| {
            f.eval(x)
        })
    };
    let numeric = hazard_derivative(&bare);
    let points = positive("grid_points", cfg.count("grid_points"))?;
    let end = numeric.domain_end();
    let mut closed_vs_numeric: f64 = 0.0;
    let mut roundtrip: f64 = 0.0;
    let back = inverse_hazard(&pair.gamma)?;
    for k in 0..points {
        let x = if points == 1 {
            0.0
        } else {
            k as f64 / (points - 1) as f64
        };
        roundtrip = roundtrip.max((back.eval(x) - g.eval(x)).abs());
        let xn = x.min(end);
        closed_vs_numeric = closed_vs_numeric.max((pair.gamma.eval(xn)? - numeric.eval(xn)?).abs());
    }
    let t = cfg.float("t");
    let report = validate_tangent(&g, 1e-8)?;
    let mut rows = vec![
        Row::exact("tangent.mean", report.mean),
        Row::exact("tangent.second_moment", report.second_moment),
        Row::exact("isometry_gap", pair.isometry_gap()?),
        Row::exact("closed_vs_quadrature.max_abs", closed_vs_numeric),
        Row::exact("round_trip.max_abs", roundtrip),
        Row::exact("cumulative_variance", cumulative_variance(&pair.gamma, t)?).at(t),
    ];
    for x in [0.5 * t, t + 0.5 * (1.0 - t)] {
        rows.push(
            Row::exact(
                format!("projection[x={x}]"),
                conditional_projection(&pair.gamma, t, x)?,
            )
            .at(t),
        );
    }
    Ok(rows)
}

fn tangents() -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for e in list_builtin_tangents() {
        rows.push(Row::exact(format!("{}.bound", e.name), e.bound));
        rows.push(Row::exact(
            format!("{}.second_moment", e.name),
            e.second_moment,
        ));
        rows.push(Row::exact(
            format!("{}.closed_form", e.name),
            if e.closed_form { 1.0 } else { 0.0 },
        ));
    }
    Ok(rows)
}
