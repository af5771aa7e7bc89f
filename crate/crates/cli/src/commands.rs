use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use wbp_core::clustering::{choose_k, cluster_materials, default_k_table, DEFAULT_K};
use wbp_core::features::{load_manifest, sequence_features, Manifest, DEFAULT_INCENTIVE};
use wbp_core::model::{wundt_eval, ChannelState, LwcModel, PARAM_NAMES};
use wbp_core::oracle::{
    baseline_greedy, baseline_random, brute_force_storyline, expected_revenue_uplift, RevenueInput,
};
use wbp_core::seed::{sub_seed, BASELINES, SYNTHESIS};
use wbp_core::sequencer::{generate_storyline_with, StorylineConfig};
use wbp_core::training::{
    gradient_check, mse_loss, synth_dataset, train, GradCheckConfig, InitPreset, TrainConfig,
};

use crate::config::{pick, require_path, FileConfig};
use crate::ratings::{parse_ratings, RatingsDoc};
use crate::{Command, Failure, GradcheckArgs, OracleArgs, ScoreArgs, SolverArgs, SynthArgs, TrainArgs, UpliftArgs};

/// Objectives closer than this count as equal in the oracle verdict.
const ORACLE_TOL: f64 = 1e-9;

pub fn dispatch(cmd: &Command, file: &FileConfig, seed: u64) -> Result<(), Failure> {
    match cmd {
        Command::Train(a) => cmd_train(a, file, seed),
        Command::Storyline(a) => cmd_storyline(&a.solver, file, seed),
        Command::Score(a) => cmd_score(a, file),
        Command::Gradcheck(a) => cmd_gradcheck(a, file, seed),
        Command::Oracle(a) => cmd_oracle(a, file, seed),
        Command::Uplift(a) => cmd_uplift(a),
        Command::Synth(a) => cmd_synth(a, seed),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn load_model(path: &Path) -> Result<LwcModel<f64>, Failure> {
    LwcModel::from_text(&read(path)?).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn load_set(path: &Path) -> Result<Manifest, Failure> {
    load_manifest(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn incentive(flag: Option<f64>, file: &FileConfig, manifest: Option<&Manifest>) -> f64 {
    pick(&flag, &file.incentive)
        .or_else(|| manifest.and_then(|m| m.incentive))
        .unwrap_or(DEFAULT_INCENTIVE)
}

fn cmd_train(a: &TrainArgs, file: &FileConfig, seed: u64) -> Result<(), Failure> {
    let ratings = require_path(&a.ratings, &file.ratings, "ratings")?;
    let manifest = pick(&a.manifest, &file.manifest).map(|p| load_set(&p)).transpose()?;
    let inc = incentive(a.incentive, file, manifest.as_ref());
    let data = parse_ratings(&read(&ratings)?, manifest.as_ref().map(|m| &m.set), inc)?;

    let preset = InitPreset::parse(&pick(&a.init, &file.init).unwrap_or_else(|| "canonical".into()))?;
    let cfg = TrainConfig {
        learning_rate: pick(&a.lr, &file.lr).unwrap_or(0.01),
        epochs: pick(&a.epochs, &file.epochs).unwrap_or(5000),
        seed,
        grad_clip: pick(&a.grad_clip, &file.grad_clip),
        init: preset,
    };
    let init = match pick(&a.model, &file.model) {
        Some(p) => load_model(&p)?,
        None => preset.build(seed),
    };
    let initial = mse_loss(&init, &data)?;
    let out = train(&init, &data, &cfg)?;
    let fin = mse_loss(&out.model, &data)?;
    if let Some(p) = &a.loss_out {
        let mut csv = String::from("epoch,loss\n");
        for (i, l) in out.loss_trace.iter().enumerate() {
            writeln!(csv, "{i},{l:?}").expect("string write");
        }
        emit(&Some(p.clone()), &csv)?;
    }
    emit(&a.out, &out.model.to_text())?;
    eprintln!("examples={} epochs={} initial_mse={initial:?} final_mse={fin:?}", data.len(), cfg.epochs);
    Ok(())
}

/// Storyline settings from flags, then the config file, then defaults. An
/// unset k larger than the material count is capped at it.
fn solver_config(a: &SolverArgs, file: &FileConfig, seed: u64, n: usize, inc: f64) -> Result<StorylineConfig, Failure> {
    let mut table = default_k_table();
    table.extend(file.categories.clone());
    let explicit = pick(&a.k, &file.k);
    let k = match (explicit, pick(&a.category, &file.category)) {
        (Some(k), _) => k,
        (None, Some(cat)) => choose_k(&cat, &table),
        (None, None) => DEFAULT_K,
    };
    let k = if explicit.is_none() && k > n {
        log::info!("capping k = {k} at the {n} available materials");
        n
    } else {
        k
    };
    let d = StorylineConfig::default();
    Ok(StorylineConfig {
        k,
        n_max: pick(&a.n_max, &file.n_max).unwrap_or(d.n_max),
        seed,
        exhaustive_threshold: pick(&a.exhaustive_threshold, &file.exhaustive_threshold).unwrap_or(d.exhaustive_threshold),
        enumeration_cap: pick(&a.enumeration_cap, &file.enumeration_cap).map_or(d.enumeration_cap, u128::from),
        beam_width: pick(&a.beam_width, &file.beam_width).unwrap_or(d.beam_width),
        incentive: inc,
        ..d
    })
}

struct Prepared {
    manifest: Manifest,
    model: LwcModel<f64>,
    cfg: StorylineConfig,
}

fn prepare(a: &SolverArgs, file: &FileConfig, seed: u64) -> Result<Prepared, Failure> {
    let manifest = load_set(&require_path(&a.manifest, &file.manifest, "manifest")?)?;
    let model = load_model(&require_path(&a.model, &file.model, "model")?)?;
    let inc = incentive(a.incentive, file, Some(&manifest));
    let cfg = solver_config(a, file, seed, manifest.set.len(), inc)?;
    if cfg.k == 0 || cfg.k > manifest.set.len() {
        return Err(Failure::usage(format!(
            "k = {} must lie in [1, {}]",
            cfg.k,
            manifest.set.len()
        )));
    }
    Ok(Prepared { manifest, model, cfg })
}

fn cmd_storyline(a: &SolverArgs, file: &FileConfig, seed: u64) -> Result<(), Failure> {
    let p = prepare(a, file, seed)?;
    let set = &p.manifest.set;
    let labels = cluster_materials::<f64>(set, p.cfg.k, p.cfg.clustering_seed(), p.cfg.max_iter, p.cfg.tol)?;
    let story = generate_storyline_with(set, &p.model, &labels, &p.cfg)?;
    story.check(p.cfg.n_max).map_err(|e| Failure::Verify(e.to_string()))?;
    emit(&a.out, &story.to_json())
}

#[derive(Serialize)]
struct StepReport {
    id: String,
    d: f64,
    a: f64,
    e: f64,
    s_d: f64,
    s_a: f64,
    s_e: f64,
    x: f64,
    score: f64,
}

fn cmd_score(a: &ScoreArgs, file: &FileConfig) -> Result<(), Failure> {
    if a.order.is_empty() {
        return Err(Failure::usage("--order is required"));
    }
    let manifest = load_set(&require_path(&a.manifest, &file.manifest, "manifest")?)?;
    let model = load_model(&require_path(&a.model, &file.model, "model")?)?;
    let inc = incentive(a.incentive, file, Some(&manifest));
    let seq = sequence_features::<f64, _>(&a.order, &manifest.set, inc)?;

    let mut state = ChannelState::default();
    let mut steps = Vec::with_capacity(seq.len());
    for (id, step) in a.order.iter().zip(seq.steps()) {
        state = state.push(step, &model.accum);
        let x = state.intensity(&model.accum);
        let [d, a_, e] = step.channels();
        steps.push(StepReport {
            id: id.clone(),
            d,
            a: a_,
            e,
            s_d: state.s[0],
            s_a: state.s[1],
            s_e: state.s[2],
            x,
            score: wundt_eval(&model.wundt, x)?,
        });
    }
    let last = steps.last().expect("order is non-empty");
    let report = json!({
        "order": a.order,
        "incentive": inc,
        "steps": steps,
        "accumulations": { "d": last.s_d, "a": last.s_a, "e": last.s_e },
        "x": last.x,
        "score": last.score,
    });
    emit(&a.out, &to_json(&report))
}

fn cmd_gradcheck(a: &GradcheckArgs, file: &FileConfig, seed: u64) -> Result<(), Failure> {
    let model = pick(&a.model, &file.model).map(|p| load_model(&p)).transpose()?;
    let corrupt = a
        .corrupt_param
        .as_deref()
        .map(|name| {
            wbp_core::model::param_index(name).ok_or_else(|| {
                Failure::usage(format!("unknown parameter `{name}`; expected one of {}", PARAM_NAMES.join(", ")))
            })
        })
        .transpose()?;
    let cfg = GradCheckConfig {
        draws: pick(&a.draws, &file.draws).unwrap_or(200),
        seed,
        corrupt,
        ..GradCheckConfig::default()
    };
    let r = gradient_check(model.as_ref(), &cfg)?;
    let report = json!({
        "draws": r.draws,
        "seed": seed,
        "h": cfg.h,
        "rel_tol": cfg.rel_tol,
        "abs_tol": cfg.abs_tol,
        "comparisons": r.comparisons,
        "failures": r.failures,
        "passed": r.passed(),
        "worst": r.worst.as_ref().map(|w| json!({
            "draw": w.draw,
            "param": w.param,
            "analytic": w.analytic,
            "numeric": w.numeric,
            "abs_err": w.abs_err,
            "rel_err": w.rel_err,
        })),
    });
    emit(&a.out, &to_json(&report))?;
    if r.passed() {
        Ok(())
    } else {
        let w = r.worst.expect("a failure has a worst offender");
        Err(Failure::Verify(format!(
            "gradient check failed: {} of {} components; worst `{}` (analytic {:e}, numeric {:e})",
            r.failures, r.comparisons, w.param, w.analytic, w.numeric
        )))
    }
}

fn cmd_oracle(a: &OracleArgs, file: &FileConfig, seed: u64) -> Result<(), Failure> {
    let p = prepare(&a.solver, file, seed)?;
    let set = &p.manifest.set;
    let cfg = &p.cfg;
    let labels = cluster_materials::<f64>(set, cfg.k, cfg.clustering_seed(), cfg.max_iter, cfg.tol)?;
    let brute = brute_force_storyline(set, &p.model, &labels, cfg.n_max, cfg.incentive)?;
    let wbp = generate_storyline_with(set, &p.model, &labels, cfg)?;
    let greedy = baseline_greedy(set, &p.model, cfg.n_max, cfg.incentive)?;
    let random = baseline_random(set, &p.model, cfg.n_max, sub_seed(seed, BASELINES), cfg.incentive)?;

    let equal = (wbp.total_objective - brute.storyline.total_objective).abs() <= ORACLE_TOL;
    let verdict = if equal { "WBP == oracle" } else { "WBP != oracle" };
    let report = json!({
        "materials": set.len(),
        "k": cfg.k,
        "n_max": cfg.n_max,
        "seed": seed,
        "tolerance": ORACLE_TOL,
        "enumerated": brute.enumerated,
        "objectives": {
            "oracle": brute.storyline.total_objective,
            "wbp": wbp.total_objective,
            "greedy": greedy.total_objective,
            "random": random.total_objective,
        },
        "orders": {
            "oracle": brute.storyline.ids(),
            "wbp": wbp.ids(),
            "greedy": greedy.ids(),
            "random": random.ids(),
        },
        "wbp_matches_oracle": equal,
        "verdict": verdict,
    });
    emit(&a.solver.out, &to_json(&report))?;
    if equal {
        Ok(())
    } else {
        Err(Failure::Verify(format!(
            "solver objective {} differs from brute force {}",
            wbp.total_objective, brute.storyline.total_objective
        )))
    }
}

fn cmd_uplift(a: &UpliftArgs) -> Result<(), Failure> {
    let input = RevenueInput::<f64>::parse(&read(&a.revenue)?)?;
    let uplift = expected_revenue_uplift(&input)?;
    let report = json!({
        "categories": input.categories.iter().map(|c| json!({
            "name": c.name,
            "weight": c.weight,
            "x": c.x,
            "y": c.y,
            "relative": (c.x - c.y) / c.y,
        })).collect::<Vec<_>>(),
        "uplift": uplift,
    });
    emit(&a.out, &to_json(&report))
}

fn cmd_synth(a: &SynthArgs, seed: u64) -> Result<(), Failure> {
    let gt = match &a.model {
        Some(p) => load_model(p)?,
        None => LwcModel::reference(),
    };
    let data = synth_dataset(
        &gt,
        a.n.unwrap_or(40),
        a.sigma.unwrap_or(0.02),
        (a.min_len.unwrap_or(1), a.max_len.unwrap_or(8)),
        sub_seed(seed, SYNTHESIS),
    )?;
    emit(&a.out, &to_json(&RatingsDoc::from_examples(&data)))
}
