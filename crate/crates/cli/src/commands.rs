use std::path::Path;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::SeedableRng;
use serde_json::{json, Value};

use rpfkit_core::cms::{self, CmsMethod, Reduction, DEFAULT_LEVELS};
use rpfkit_core::involution::{
    bilateral_measure, build_kernel, check_marginals, reconstruct_eigenfunction,
    verify_transpose_lemma,
};
use rpfkit_core::thermo::{recurrence_sums, variational_audit};
use rpfkit_core::transfer::{eigendata, eigenmeasure_cylinders, gibbs_cylinders};
use rpfkit_core::zerotemp::{ground_state_detect, temperature_sweep};
use rpfkit_core::{
    CylinderMeasure, Error, GapRatio, Potential, SubshiftModel, DEFAULT_MAX_ITER, DEFAULT_TOL,
};

use crate::input::{self, Loaded, RunSpec};
use crate::report::{num, nums, sha256_hex, Outcome, Table};
use crate::{CliError, Command, Overrides};

const DEFAULT_T_LIST: [f64; 6] = [1.0, 2.0, 5.0, 10.0, 20.0, 50.0];

struct Ctx {
    run: RunSpec,
    tol: f64,
    max_iter: usize,
    depth: Option<usize>,
    t_list: Option<Vec<f64>>,
    method: Option<String>,
}

pub fn execute(command: Command, path: &Path, ov: &Overrides) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let bytes = std::fs::read(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|_| CliError::Parse("model file is not UTF-8".into()))?;
    let (file, loaded) = input::parse(text)?;
    let ctx = Ctx {
        tol: ov.tol.or(file.run.tol).unwrap_or(DEFAULT_TOL),
        max_iter: ov.max_iter.or(file.run.max_iter).unwrap_or(DEFAULT_MAX_ITER),
        depth: ov.depth.or(file.run.depth),
        t_list: ov.t_list.clone().or_else(|| file.run.t_list.clone()),
        method: ov.method.clone().or_else(|| file.run.method.clone()),
        run: file.run.clone(),
    };
    if !(ctx.tol > 0.0 && ctx.tol.is_finite()) || ctx.max_iter == 0 {
        return Err(CliError::Parse("tol must be positive and max-iter nonzero".into()));
    }
    let mut outcome = match command {
        Command::Eigen => eigen(&ctx, loaded)?,
        Command::Thermo => thermo(&ctx, loaded)?,
        Command::Zerotemp => zerotemp(&ctx, loaded)?,
        Command::Involution => involution(&ctx, loaded)?,
        Command::Cms => cms_command(&ctx, loaded)?,
    };
    outcome.command = command.name();
    outcome.input_name = file.name;
    outcome.input_sha256 = sha256_hex(&bytes);
    outcome.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(outcome)
}

fn outcome(parameters: Value, result: Value, residuals: Value, tables: Vec<Table>) -> Outcome {
    Outcome {
        command: "",
        input_name: None,
        input_sha256: String::new(),
        parameters,
        result,
        residuals,
        tables,
        wall_time_ms: 0.0,
        deferred_error: None,
    }
}

fn levels(ctx: &Ctx) -> Vec<usize> {
    ctx.run.levels.clone().unwrap_or_else(|| DEFAULT_LEVELS.to_vec())
}

/// Finite model for the non-CMS commands: tail models are lumped, or cut at
/// the largest truncation level with `--method truncate`.
fn finite(ctx: &Ctx, loaded: Loaded) -> Result<(SubshiftModel, Potential, Option<Reduction>), CliError> {
    match loaded {
        Loaded::Finite { model, potential } => Ok((model, potential, None)),
        Loaded::Tail { spec, rule } => {
            let red = match ctx.method.as_deref() {
                None | Some("aggregate") => cms::compactify(&spec, &rule)?,
                Some("truncate") | Some("truncate-sweep") => {
                    let k = *levels(ctx).iter().max().ok_or_else(|| CliError::Parse("empty levels".into()))?;
                    cms::truncate(&spec, k, &rule, ctx.run.renormalize.unwrap_or(false))?
                }
                Some(other) => return Err(CliError::Parse(format!("unknown method '{other}'"))),
            };
            Ok((red.model.clone(), red.potential.clone(), Some(red)))
        }
    }
}

fn reduction_json(red: &Option<Reduction>) -> Value {
    match red {
        None => Value::Null,
        Some(r) => json!({
            "symbols": r.model.alphabet().symbols(),
            "weights": nums(r.model.apriori().weights()),
            "represents": r.symbols.iter().map(|s| match s {
                Some(k) => json!(format!("b_{k}")),
                None => json!("tail"),
            }).collect::<Vec<_>>(),
        }),
    }
}

fn word(model: &SubshiftModel, w: &rpfkit_core::Word) -> String {
    model.format_word(w)
}

fn base_params(ctx: &Ctx) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("tol".into(), num(ctx.tol));
    m.insert("max_iter".into(), json!(ctx.max_iter));
    m
}

fn eigen(ctx: &Ctx, loaded: Loaded) -> Result<Outcome, CliError> {
    let (model, phi, red) = finite(ctx, loaded)?;
    let spec = eigendata(&model, &phi, ctx.tol, ctx.max_iter)?;
    let k = spec.depth();
    let depth = ctx.depth.unwrap_or((k - 1).max(2));
    let rho = eigenmeasure_cylinders(&model, &phi, &spec, depth)?;
    let mu = gibbs_cylinders(&model, &phi, &spec, depth)?;

    let mut states = Table::new("states", &["state", "f", "rho"]);
    let mut state_json = Vec::new();
    for (i, s) in spec.states().iter().enumerate() {
        let (f, r) = (spec.eigenfunction()[i], spec.eigenmeasure_base()[i]);
        states.push(vec![word(&model, s), f.to_string(), r.to_string()]);
        state_json.push(json!({ "state": word(&model, s), "f": num(f), "rho": num(r) }));
    }
    let mut cyl = Table::new("cylinders", &["word", "rho", "mu"]);
    let mut cyl_json = Vec::new();
    for len in 1..=depth {
        for (w, r) in rho.level(len) {
            let m = mu.mass(w);
            cyl.push(vec![word(&model, w), r.to_string(), m.to_string()]);
            cyl_json.push(json!({ "word": word(&model, w), "rho": num(r), "mu": num(m) }));
        }
    }
    let normalized: Vec<Value> = spec
        .normalized_potential()
        .entries()
        .map(|(w, v)| json!({ "word": word(&model, w), "value": num(v) }))
        .collect();
    let gap = match spec.gap_ratio() {
        GapRatio::Ratio(r) => num(r),
        GapRatio::Periodic => json!("periodic"),
    };
    let mut params = base_params(ctx);
    params.insert("depth".into(), json!(depth));
    if red.is_some() {
        params.insert("method".into(), json!(ctx.method.clone().unwrap_or("aggregate".into())));
    }
    Ok(outcome(
        Value::Object(params),
        json!({
            "lambda": num(spec.lambda()),
            "log_lambda": num(spec.log_lambda()),
            "period": spec.period(),
            "potential_depth": k,
            "gap_ratio": gap,
            "states": state_json,
            "cylinders": cyl_json,
            "normalized_potential": normalized,
            "reduction": reduction_json(&red),
        }),
        json!({
            "eigen": num(spec.residual()),
            "adjoint": num(spec.adjoint_residual()),
            "normalized_operator": num(spec.normalization_residual()),
            "right_consistency": num(rho.right_consistency_deviation(&model)),
            "gibbs_shift_invariance": num(mu.left_consistency_deviation(&model)),
            "iterations": spec.iterations(),
        }),
        vec![states, cyl],
    ))
}

fn thermo(ctx: &Ctx, loaded: Loaded) -> Result<Outcome, CliError> {
    let (model, phi, red) = finite(ctx, loaded)?;
    let spec = eigendata(&model, &phi, ctx.tol, ctx.max_iter)?;
    let k = spec.depth();
    let n_trials = ctx.run.trials.unwrap_or(100);
    let seed = ctx.run.seed.unwrap_or(1);
    let mut rng = StdRng::seed_from_u64(seed);
    let trials = (0..n_trials)
        .map(|_| CylinderMeasure::random_markov(&model, &mut rng, k))
        .collect::<Result<Vec<_>, _>>()?;
    let audit = variational_audit(&model, &phi, &spec, &trials)?;

    let mut trial_table = Table::new("trials", &["index", "entropy", "energy", "slack"]);
    for (i, t) in audit.trials.iter().enumerate() {
        trial_table.push(vec![
            i.to_string(),
            t.entropy.to_string(),
            t.energy.to_string(),
            t.slack.to_string(),
        ]);
    }
    let mut tables = vec![trial_table];

    let symbol = match &ctx.run.recurrence_symbol {
        Some(s) => model.symbol_index(s)?,
        None => 0,
    };
    let n_max = ctx.run.recurrence_n_max.unwrap_or(30);
    let recurrence = match recurrence_sums(&model, &phi, symbol, 1..=n_max) {
        Ok(rep) => {
            let mut t = Table::new("recurrence", &["n", "z_n_over_lambda_n"]);
            for (n, v) in &rep.values {
                t.push(vec![n.to_string(), v.to_string()]);
            }
            tables.push(t);
            json!({
                "symbol": model.alphabet().symbols()[symbol],
                "start": rep.start,
                "n_max": n_max,
                "band": [num(rep.band.0), num(rep.band.1)],
                "spread": num(rep.spread()),
            })
        }
        Err(e @ (Error::PeriodicModel { .. } | Error::Unsupported(_))) => {
            json!({ "skipped": e.to_string() })
        }
        Err(e) => return Err(e.into()),
    };
    let mut params = base_params(ctx);
    params.insert("trials".into(), json!(n_trials));
    params.insert("seed".into(), json!(seed));
    Ok(outcome(
        Value::Object(params),
        json!({
            "pressure": num(audit.pressure),
            "entropy": num(audit.entropy),
            "energy": num(audit.energy),
            "gibbs_markov_entropy": num(audit.gibbs_markov_entropy),
            "max_trial_excess": num(audit.max_trial_excess()),
            "min_trial_entropy": audit.min_trial_entropy().map(num),
            "recurrence": recurrence,
            "reduction": reduction_json(&red),
        }),
        json!({
            "variational_slack": num(audit.variational_slack),
            "entropy_cross_check": num((audit.entropy - audit.gibbs_markov_entropy).abs()),
            "eigen": num(spec.residual()),
        }),
        tables,
    ))
}

fn zerotemp(ctx: &Ctx, loaded: Loaded) -> Result<Outcome, CliError> {
    let (model, phi, red) = finite(ctx, loaded)?;
    let t_list = ctx.t_list.clone().unwrap_or_else(|| DEFAULT_T_LIST.to_vec());
    let depth = ctx.depth.unwrap_or(3);
    let gs_tol = ctx.run.ground_state_tol.unwrap_or(1e-4);
    let sweep = temperature_sweep(&model, &phi, &t_list, depth, ctx.tol, ctx.max_iter)?;

    let mut table = Table::new(
        "sweep",
        &["t", "pressure", "pressure_over_t", "energy", "tv_to_previous"],
    );
    let slopes = sweep.slopes();
    let mut rows = Vec::new();
    for i in 0..sweep.temperatures.len() {
        let tv = sweep.tv_to_previous[i];
        table.push(vec![
            sweep.temperatures[i].to_string(),
            sweep.pressures[i].to_string(),
            slopes[i].to_string(),
            sweep.energies[i].to_string(),
            tv.map(|x| x.to_string()).unwrap_or_default(),
        ]);
        rows.push(json!({
            "t": num(sweep.temperatures[i]),
            "pressure": num(sweep.pressures[i]),
            "pressure_over_t": num(slopes[i]),
            "energy": num(sweep.energies[i]),
            "entropy": num(sweep.entropies[i]),
            "tv_to_previous": tv.map(num),
        }));
    }
    let ground = if sweep.tracks.len() >= 3 {
        let gs = ground_state_detect(&model, &sweep, gs_tol)?;
        let masses: Vec<Value> = gs
            .measure
            .level(2.min(gs.measure.depth()))
            .filter(|(_, m)| *m > 0.0)
            .map(|(w, m)| json!({ "word": word(&model, w), "mass": num(m) }))
            .collect();
        json!({
            "flag": gs.flag.as_str(),
            "value": num(gs.value),
            "last_tv": nums(&gs.last_tv),
            "diagnostics": gs.diagnostics,
            "masses": masses,
        })
    } else {
        json!({ "skipped": "fewer than 3 temperatures" })
    };
    let names = model.alphabet().symbols();
    let oracle = &sweep.oracle;
    let mut params = base_params(ctx);
    params.insert("t_list".into(), nums(&t_list));
    params.insert("depth".into(), json!(depth));
    params.insert("ground_state_tol".into(), num(gs_tol));
    let last = sweep.temperatures.len() - 1;
    let mut out = outcome(
        Value::Object(params),
        json!({
            "oracle": {
                "value": num(oracle.value),
                "cycle": oracle.cycle.iter().map(|&s| names[s].clone()).collect::<Vec<_>>(),
                "cycle_mean": num(oracle.cycle_mean),
            },
            "sweep": rows,
            "m_estimate": num(sweep.m_estimate),
            "slope_constant": num(sweep.slope_constant),
            "energies_monotone": sweep.energies_monotone,
            "ground_state": ground,
            "completed": sweep.failure.is_none(),
            "reduction": reduction_json(&red),
        }),
        json!({
            "oracle_witness": num((oracle.cycle_mean - oracle.value).abs()),
            "final_slope_gap": num((slopes[last] - oracle.value).abs()),
        }),
        vec![table],
    );
    if let Some((t, e)) = sweep.failure {
        eprintln!("rpfkit: sweep stopped at t = {t}");
        out.deferred_error = Some(e.into());
    }
    Ok(out)
}

fn involution(ctx: &Ctx, loaded: Loaded) -> Result<Outcome, CliError> {
    let (model, phi, red) = finite(ctx, loaded)?;
    let mut inv = build_kernel(&model, &phi)?;
    inv.attach_eigendata(ctx.tol, ctx.max_iter)?;
    let identity = inv.kernel_identity_deviation()?;
    let samples = ctx.run.lemma_samples.unwrap_or(256);
    let lemma = verify_transpose_lemma(&model, &inv, samples)?;
    let rec = reconstruct_eigenfunction(&model, &inv)?;
    let k = inv.potential().depth();
    let depths = ctx
        .run
        .bilateral_depths
        .unwrap_or((k - 1, ctx.depth.unwrap_or(k)));
    let bil = bilateral_measure(&model, &inv, depths)?;
    let marg = check_marginals(&model, &inv, &bil)?;
    let future_energy = if depths.1 >= k {
        num(bil.integrate_future(inv.potential())?)
    } else {
        Value::Null
    };

    let dual = inv.transpose().dual();
    let mut kt = Table::new("kernel", &["y", "x", "w"]);
    let mut kernel_json = Vec::new();
    for ((y, x), w) in inv.kernel() {
        kt.push(vec![word(dual, y), word(&model, x), w.to_string()]);
        kernel_json.push(json!({ "y": word(dual, y), "x": word(&model, x), "w": num(*w) }));
    }
    let mut bt = Table::new("bilateral", &["y", "x", "mass"]);
    for ((y, x), m) in bil.masses() {
        bt.push(vec![word(dual, y), word(&model, x), m.to_string()]);
    }
    let dual_json: Vec<Value> = inv
        .dual_potential()
        .entries()
        .map(|(w, v)| json!({ "word": word(dual, w), "value": num(v) }))
        .collect();
    let (base, _) = inv.spectra()?;
    let states: Vec<String> = base.states().iter().map(|s| word(&model, s)).collect();
    let mut params = base_params(ctx);
    params.insert("bilateral_depths".into(), json!([depths.0, depths.1]));
    params.insert("lemma_samples".into(), json!(samples));
    Ok(outcome(
        Value::Object(params),
        json!({
            "kernel_depth": inv.kernel_depth(),
            "kernel": kernel_json,
            "dual_potential": dual_json,
            "c": num(inv.c()?),
            "lambda": num(rec.lambda),
            "lambda_dual": num(rec.lambda_dual),
            "states": states,
            "f_power_iteration": nums(base.eigenfunction()),
            "f_reconstructed": nums(&rec.f),
            "bilateral_total_mass": num(marg.total_mass),
            "future_energy": future_energy,
            "reduction": reduction_json(&red),
        }),
        json!({
            "kernel_identity": num(identity),
            "transpose_lemma": num(lemma),
            "reconstruction": num(rec.deviation),
            "reconstruction_dual": num(rec.dual_deviation),
            "reconstruction_eigen": num(rec.residual),
            "rho_f_minus_one": num(rec.normalization),
            "lambda_symmetry": num((rec.lambda - rec.lambda_dual).abs()),
            "x_marginal_tv": num(marg.x_tv),
            "y_marginal_tv": num(marg.y_tv),
            "total_mass": num((marg.total_mass - 1.0).abs()),
        }),
        vec![kt, bt],
    ))
}

fn cms_command(ctx: &Ctx, loaded: Loaded) -> Result<Outcome, CliError> {
    let Loaded::Tail { spec, rule } = loaded else {
        return Err(CliError::Parse(
            "the cms command needs a model with a tail_spec admissibility section".into(),
        ));
    };
    let method = match ctx.method.as_deref() {
        None | Some("aggregate") => CmsMethod::Aggregate,
        Some("truncate") | Some("truncate-sweep") => CmsMethod::TruncateSweep,
        Some(other) => return Err(CliError::Parse(format!("unknown method '{other}'"))),
    };
    let levels = levels(ctx);
    let renormalize = ctx.run.renormalize.unwrap_or(false);
    let res = cms::cms_eigendata(&spec, &rule, method, &levels, renormalize, ctx.tol, ctx.max_iter)?;
    let red = &res.reduction;
    let names = red.model.alphabet().symbols();
    let recurrence = match recurrence_sums(&red.model, &red.potential, 0, 1..=30) {
        Ok(r) => json!({
            "symbol": names[0],
            "start": r.start,
            "band": [num(r.band.0), num(r.band.1)],
            "spread": num(r.spread()),
        }),
        Err(e) => json!({ "skipped": e.to_string() }),
    };
    let rep = &res.report;
    let mut table = Table::new("truncation", &["level", "lambda", "deviation"]);
    for (i, k) in rep.levels.iter().enumerate() {
        table.push(vec![
            k.to_string(),
            rep.lambdas[i].to_string(),
            rep.deviations.get(i).map(|d| d.to_string()).unwrap_or_default(),
        ]);
    }
    let split = match &red.symbols.last() {
        Some(None) => red.symbols.len(),
        _ => red.symbols.len() + 1,
    };
    let mut params = base_params(ctx);
    params.insert(
        "method".into(),
        json!(match method {
            CmsMethod::Aggregate => "aggregate",
            CmsMethod::TruncateSweep => "truncate-sweep",
        }),
    );
    params.insert("levels".into(), json!(levels));
    params.insert("renormalize".into(), json!(renormalize));
    params.insert("ratio".into(), num(spec.weights().ratio));
    Ok(outcome(
        Value::Object(params),
        json!({
            "j0": spec.j0(),
            "lambda": num(res.spectral.lambda()),
            "log_lambda": num(res.spectral.log_lambda()),
            "eigenfunction": nums(res.spectral.eigenfunction()),
            "states": res.spectral.states().iter().map(|s| word(&red.model, s)).collect::<Vec<_>>(),
            "reduction": reduction_json(&Some(red.clone())),
            "truncation": {
                "levels": rep.levels,
                "lambdas": nums(&rep.lambdas),
                "aggregated_lambda": rep.aggregated_lambda.map(num),
                "deviations": nums(&rep.deviations),
                "strictly_decreasing": rep.strictly_decreasing,
            },
            "recurrence": recurrence,
        }),
        json!({
            "eigen": num(res.spectral.residual()),
            "conjugacy_matrix": num(res.conjugacy.matrix_deviation),
            "conjugacy_lambda": num(res.conjugacy.lambda_deviation),
            "conjugacy_eigenfunction": num(res.conjugacy.eigenfunction_deviation),
            "weight_sum": num(spec.weight_sum_error(split)),
        }),
        vec![table],
    ))
}
