use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::json;

use feedback_bandit::hypothesis::{cohort_summary, llr_statistic};
use feedback_bandit::io::{parse_event_log, write_event_log, write_json, write_regret_csv, write_report_lines};
use feedback_bandit::sim::{digest_of, run_ordered, run_rng};
use feedback_bandit::{
    appendix_walk, compute_regret, fit_linear_loss, fit_mle, monte_carlo_regret, run_episode, sample_scenario,
    BetaPrior, ChoiceRule, Error, EstConfig, FeedbackLog, GenConfig, McConfig, Policy, ScenarioSource,
};

use crate::args::{EstimateArgs, FitArgs, Method, PriorArgs, RegretArgs, SimulateArgs, TestArgs, WalkArgs};

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn prior(p: &PriorArgs) -> Result<BetaPrior<f64>> {
    Ok(BetaPrior::new(p.alpha, p.beta)?)
}

fn load_log(path: &Path, fit: &FitArgs) -> Result<FeedbackLog> {
    parse_event_log(path, fit.topics, fit.followers).with_context(|| format!("reading {}", path.display()))
}

fn estimation_config(fit: &FitArgs) -> Result<EstConfig> {
    let cfg = EstConfig {
        lambda: fit.lambda,
        prior: prior(&fit.prior)?,
        variant: fit.variant.into(),
        samples: fit.samples,
        solver: fit.solver.into(),
        max_iters: fit.max_iters,
        step_scale: fit.step_scale,
        step_rule: fit.step.into(),
        restarts: fit.restarts,
        seed: fit.seed,
        ..Default::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Document wrapper shared by every JSON artifact.
fn document<C: Serialize, B: Serialize>(command: &str, config: &C, body: B) -> serde_json::Value {
    json!({
        "command": command,
        "config": config,
        "config_digest": digest_of(config),
        "result": body,
    })
}

pub fn simulate(a: &SimulateArgs) -> Result<()> {
    let s = &a.scenario;
    let gen = GenConfig {
        topics: s.topics,
        followers: s.followers,
        gamma: s.gamma,
        mu_bar: s.mu_bar,
        horizon: s.horizon,
        self_weight: s.self_weight,
        ..Default::default()
    };
    let mut policy = Policy::new(a.estimator.into(), a.external.on()).with_prior(prior(&a.prior)?);
    if let Some(lambda) = a.softmax {
        policy = policy.with_choice(ChoiceRule::Softmax { lambda });
    }
    let mut rng = run_rng(a.seed, 0);
    let scenario = sample_scenario(&gen, &mut rng)?;
    let trajectory = run_episode(&scenario, &policy, &mut rng)?;
    let log = FeedbackLog::from_trajectory(&trajectory);
    let regret = compute_regret(&trajectory, &scenario)?;

    let mut out = BufWriter::new(File::create(&a.log).with_context(|| format!("creating {}", a.log.display()))?);
    write_event_log(&log, &mut out)?;
    out.flush()?;

    let body = json!({
        "scenario": scenario,
        "optimal_topic": scenario.optimal_topic().0,
        "topic_counts": trajectory.topic_counts(),
        "topics": trajectory.topics().iter().map(|c| c.0).collect::<Vec<_>>(),
        "final_regret": regret.final_regret(),
    });
    let mut w = sink(a.out.as_deref())?;
    write_json(&document("simulate", a, body), &mut w)?;
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct RegretSetting<'a> {
    estimator: crate::args::Estimator,
    external: crate::args::Switch,
    topics: usize,
    followers: usize,
    horizon: usize,
    mu_bar: f64,
    gamma: f64,
    prior: &'a PriorArgs,
    runs: usize,
    seed: u64,
}

pub fn regret(a: &RegretArgs) -> Result<()> {
    let mut settings = Vec::new();
    for &estimator in &a.estimator {
        for &topics in &a.topics {
            for &mu_bar in &a.mu_bar {
                settings.push(RegretSetting {
                    estimator,
                    external: a.external,
                    topics,
                    followers: a.followers,
                    horizon: a.horizon,
                    mu_bar,
                    gamma: a.gamma,
                    prior: &a.prior,
                    runs: a.runs,
                    seed: a.seed,
                });
            }
        }
    }
    if settings.len() > 1 && a.out_dir.is_none() {
        bail!(
            "{} settings requested; pass --out-dir to receive one CSV each",
            settings.len()
        );
    }
    if let Some(dir) = &a.out_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    for setting in &settings {
        let cfg = McConfig {
            source: ScenarioSource::Generated(GenConfig {
                topics: setting.topics,
                followers: setting.followers,
                gamma: setting.gamma,
                mu_bar: setting.mu_bar,
                horizon: setting.horizon,
                ..Default::default()
            }),
            policy: Policy::new(setting.estimator.into(), setting.external.on()).with_prior(prior(&a.prior)?),
            runs: setting.runs,
            master_seed: setting.seed,
        };
        let trace = monte_carlo_regret(&cfg, a.threads)?;
        let comments = vec![
            ("command".to_string(), "regret".to_string()),
            ("config".to_string(), serde_json::to_string(setting)?),
            ("config_digest".to_string(), digest_of(setting)),
            ("seed".to_string(), setting.seed.to_string()),
        ];
        let path: Option<PathBuf> = match &a.out_dir {
            Some(dir) => Some(dir.join(format!(
                "regret_{}_K{}_mu{}.csv",
                serde_json::to_value(setting.estimator)?.as_str().unwrap_or("x"),
                setting.topics,
                setting.mu_bar
            ))),
            None => a.out.clone(),
        };
        let mut w = sink(path.as_deref())?;
        write_regret_csv(&trace, &comments, &mut w)?;
        w.flush()?;
    }
    Ok(())
}

pub fn estimate(a: &EstimateArgs) -> Result<()> {
    let log = load_log(&a.log, &a.fit)?;
    let cfg = estimation_config(&a.fit)?;
    let result = match a.fit.method {
        Method::Linear => fit_linear_loss(&log, &cfg)?,
        Method::Mle => fit_mle(&log, &cfg)?,
    };
    let body = json!({
        "log_digest": digest_of(&log),
        "topics": log.num_topics(),
        "followers": log.num_followers(),
        "posts": log.posted_topics().len(),
        "estimation": cfg,
        "fit": result,
    });
    let mut w = sink(a.out.as_deref())?;
    write_json(&document("estimate", a, body), &mut w)?;
    w.flush()?;
    Ok(())
}

fn user_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

pub fn test(a: &TestArgs) -> Result<()> {
    let cfg = estimation_config(&a.fit)?;
    let logs = a
        .logs
        .iter()
        .map(|p| load_log(p, &a.fit).map(|log| (user_id(p), log)))
        .collect::<Result<Vec<_>>>()?;
    let outcomes = run_ordered(logs.len(), a.threads, |i| {
        let (user, log) = &logs[i];
        match llr_statistic(user.clone(), log, &cfg, a.dof, &a.levels) {
            Ok(r) => Ok(Ok(r)),
            Err(Error::Untestable(reason)) => Ok(Err(reason)),
            Err(e) => Err(e),
        }
    })?;
    let mut reports = Vec::new();
    let mut untestable = Vec::new();
    for (i, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(r) => reports.push(r),
            Err(reason) => untestable.push(json!({ "user": logs[i].0, "reason": reason })),
        }
    }

    let mut w = sink(a.out.as_deref())?;
    write_report_lines(&reports, &mut w)?;
    w.flush()?;

    let summary = if reports.is_empty() {
        serde_json::Value::Null
    } else {
        serde_json::to_value(cohort_summary(&reports, &a.levels)?)?
    };
    let body = json!({
        "estimation": cfg,
        "summary": summary,
        "untestable": untestable,
    });
    let doc = document("test", a, body);
    match &a.summary {
        Some(p) => {
            let mut w = sink(Some(p))?;
            write_json(&doc, &mut w)?;
            w.flush()?;
        }
        None => write_json(&doc, io::stderr().lock())?,
    }
    Ok(())
}

pub fn a1_walk(a: &WalkArgs) -> Result<()> {
    let report = appendix_walk(a.horizon, a.runs, a.seed, a.threads)?;
    let mut w = sink(a.out.as_deref())?;
    write_json(&document("a1-walk", a, &report), &mut w)?;
    w.flush()?;
    Ok(())
}
