use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use laserwall_agents::checkpoint;
use laserwall_agents::{
    evaluate, hill_climb, Agent, AgentConfig, AgentError, EvalSummary, HillClimbAgent, PpoAgent, PpoConfig,
    RandomAgent, TemperatureSchedule, TrainReport,
};
use laserwall_core::env::RewardSpec;
use laserwall_core::partition::InfiltrationMode;
use laserwall_core::render::{raster, svg, LabelView};
use laserwall_core::trajectory::{read_trajectory, TrajectoryWriter};
use laserwall_core::{
    builtin, builtins, compute_metrics, one_shot_plan, AssignmentMode, EnvConfig, LayoutEnv, LightMode, Pick, WallTypes,
};
use serde::{Deserialize, Serialize};

use crate::args::{
    AgentArg, AssignmentArg, EnvArgs, EvalArgs, FrameFormat, InfiltrationArg, PlanArgs, PlotArgs, RenderArgs, TrainArgs,
};

const CELL_PX: u32 = 16;

/// Contents of a `--config` file. Every field is optional and wins over the
/// matching flag.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub light_mode: Option<LightMode>,
    pub infiltration: Option<InfiltrationMode>,
    pub wall_types: Option<WallTypes>,
    pub max_steps: Option<usize>,
    pub reward: Option<RewardSpec>,
    pub agent: Option<AgentConfig>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// The environment configs selected by the shared flags, one per scenario.
pub fn env_configs(args: &EnvArgs, file: &FileConfig) -> Result<Vec<EnvConfig>> {
    let mut out = Vec::with_capacity(args.scenario.0.len());
    for &id in &args.scenario.0 {
        let mut cfg = EnvConfig::new(builtin(id)?);
        cfg.seed = args.seed;
        if let Some(m) = args.light_mode {
            cfg.light_mode = m.into();
        }
        if let Some(i) = args.infiltration_mode(cfg.scenario.grid) {
            cfg.infiltration = i;
        }
        if let Some(w) = args.walls {
            cfg.wall_types = w.into();
        }
        if let Some(n) = args.max_steps {
            cfg.max_steps = n;
        }
        if let Some(m) = file.light_mode {
            cfg.light_mode = m;
        }
        if let Some(i) = file.infiltration {
            cfg.infiltration = i;
        }
        if let Some(w) = file.wall_types {
            cfg.wall_types = w;
        }
        if let Some(n) = file.max_steps {
            cfg.max_steps = n;
        }
        if let Some(r) = file.reward {
            cfg.reward = r;
        }
        cfg.validate()?;
        out.push(cfg);
    }
    Ok(out)
}

pub fn scenarios(json: bool, out: &mut dyn Write) -> Result<()> {
    let all = builtins();
    if json {
        serde_json::to_writer_pretty(&mut *out, &all)?;
        writeln!(out)?;
        return Ok(());
    }
    writeln!(
        out,
        "{:<3} {:>5} {:>7} {:<8} {:<30} {:>11}",
        "id", "rooms", "grid", "entrance", "desired areas", "connections"
    )?;
    let mut total = 0;
    for s in &all {
        let areas = s.desired_areas.iter().map(u32::to_string).collect::<Vec<_>>().join(",");
        let grid = format!("{}x{}", s.grid.width, s.grid.height);
        let facade = format!("{:?}", s.entrance_facade);
        writeln!(
            out,
            "{:<3} {:>5} {:>7} {:<8} {:<30} {:>11}",
            s.id,
            s.n_rooms,
            grid,
            facade,
            areas,
            s.connections_required()
        )?;
        total += s.connections_required();
    }
    writeln!(out, "total connections: {total}")?;
    Ok(())
}

/// Plan output written to `metrics.json`.
#[derive(Debug, Serialize, Deserialize)]
pub struct PlanSummary {
    pub scenario: u32,
    pub assignment: AssignmentMode,
    pub closeness: f64,
    pub metrics: laserwall_core::LayoutMetrics,
    pub labels: LabelView,
}

pub fn plan(args: &PlanArgs, out: &mut dyn Write) -> Result<()> {
    let scenario = builtin(args.scenario)?;
    let text = fs::read_to_string(&args.picks).with_context(|| format!("reading {}", args.picks.display()))?;
    let picks: Vec<Pick> = serde_json::from_str(&text).with_context(|| format!("parsing {}", args.picks.display()))?;
    let mode = match args.assignment {
        AssignmentArg::Full => AssignmentMode::IdentityFull,
        AssignmentArg::Less => AssignmentMode::IdentityLess,
        AssignmentArg::Auto if !picks.is_empty() && picks.iter().all(|p| p.room_index.is_some()) => {
            AssignmentMode::IdentityFull
        }
        AssignmentArg::Auto => AssignmentMode::IdentityLess,
    };
    let infiltration = match args.infiltration {
        InfiltrationArg::Fixed => InfiltrationMode::Fixed,
        InfiltrationArg::Decreasing => InfiltrationMode::decreasing_for(scenario.grid),
    };
    let state = one_shot_plan(&scenario, &picks, mode, infiltration)?;
    let metrics = compute_metrics(&state, &scenario);
    let closeness = laserwall_core::closeness(&metrics, &scenario);

    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    fs::write(args.out.join("layout.svg"), svg(&state, &metrics, CELL_PX))?;
    let summary =
        PlanSummary { scenario: scenario.id, assignment: mode, closeness, metrics, labels: LabelView::of(&state) };
    fs::write(args.out.join("metrics.json"), serde_json::to_vec_pretty(&summary)?)?;

    writeln!(out, "scenario {} ({} rooms), closeness {:.3}", scenario.id, scenario.n_rooms, closeness)?;
    for (r, area) in summary.metrics.areas.iter().enumerate() {
        writeln!(out, "  room {r}: area {area} (desired {})", scenario.desired_areas[r])?;
    }
    writeln!(
        out,
        "connections {}/{}; wrote {}",
        summary.metrics.connections_satisfied,
        summary.metrics.connections_required,
        args.out.display()
    )?;
    Ok(())
}

fn ppo_config(file: &FileConfig, seed: u64) -> Result<PpoConfig> {
    match &file.agent {
        None => Ok(PpoConfig { seed, ..PpoConfig::default() }),
        Some(AgentConfig::Ppo(c)) => Ok(c.clone()),
        Some(other) => bail!("config file agent {other:?} is not a PPO config"),
    }
}

pub fn train(args: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    ensure!(args.agent == AgentArg::Ppo, "only the ppo agent is trainable");
    let file = FileConfig::load(args.env.config.as_deref())?;
    let configs = env_configs(&args.env, &file)?;
    let [env_cfg] = configs.as_slice() else { bail!("train takes exactly one scenario") };
    let cfg = ppo_config(&file, args.env.seed)?;

    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let ckpt = args.out.join("policy.ckpt");
    let (_, report) = laserwall_agents::train(&cfg, env_cfg, args.iterations, Some(&ckpt))?;
    fs::write(args.out.join("report.json"), serde_json::to_vec_pretty(&report)?)?;
    for it in &report.iterations {
        writeln!(
            out,
            "iter {:>4}  reward {:>9.3}  closeness {:.3}  success {:.2}",
            it.iteration, it.mean_reward, it.mean_closeness, it.success_rate
        )?;
    }
    writeln!(out, "wrote {} and report.json in {:.1}s", ckpt.display(), report.wall_clock_secs)?;
    Ok(())
}

/// One scenario row of an evaluation table.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvalRow {
    pub scenario: u32,
    pub agent: String,
    pub runs: usize,
    pub success_rate: f64,
    pub best_closeness: f64,
    pub connections_satisfied: usize,
    pub connections_required: usize,
}

fn rollout(agent: &mut dyn Agent, cfg: &EnvConfig, seed: u64, log: &Path) -> Result<()> {
    let mut env = LayoutEnv::new(cfg.clone())?;
    env.reset(seed)?;
    agent.begin_episode(seed);
    let mut writer = TrajectoryWriter::new(BufWriter::new(File::create(log)?), cfg, seed)?;
    while !env.is_finished() {
        let a = match agent.act(&env) {
            Ok(a) => a,
            Err(AgentError::NoLegalAction) => break,
            Err(e) => return Err(e.into()),
        };
        let tr = env.step(a)?;
        writer.record(a, &tr)?;
    }
    writer.finish()?;
    Ok(())
}

fn agent_name(a: AgentArg) -> &'static str {
    match a {
        AgentArg::Random => "random",
        AgentArg::Hillclimb => "hillclimb",
        AgentArg::Ppo => "ppo",
    }
}

fn summary_row(s: EvalSummary, agent: AgentArg, best_closeness: f64) -> EvalRow {
    EvalRow {
        scenario: s.scenario,
        agent: agent_name(agent).into(),
        runs: s.episodes,
        success_rate: s.success_rate,
        best_closeness,
        connections_satisfied: s.best_satisfied,
        connections_required: s.connections_required,
    }
}

/// Best final closeness over the evaluation episodes, recomputed cheaply
/// from the same seeds so the table can show it next to the summary.
fn best_closeness(agent: &mut dyn Agent, cfg: &EnvConfig, episodes: usize, seed: u64) -> Result<f64> {
    let mut env = LayoutEnv::new(cfg.clone())?;
    let mut best = 0.0f64;
    for k in 0..episodes {
        let s = seed.wrapping_add(k as u64);
        env.reset(s)?;
        agent.begin_episode(s);
        while !env.is_finished() {
            match agent.act(&env) {
                Ok(a) => {
                    env.step(a)?;
                }
                Err(AgentError::NoLegalAction) => break,
                Err(e) => return Err(e.into()),
            }
        }
        best = best.max(env.closeness());
    }
    Ok(best)
}

pub fn eval_rows(args: &EvalArgs) -> Result<Vec<EvalRow>> {
    let file = FileConfig::load(args.env.config.as_deref())?;
    let configs = env_configs(&args.env, &file)?;
    let seed = args.env.seed;
    let policy = match args.agent {
        AgentArg::Ppo => {
            let path = args.checkpoint.as_deref().context("--agent ppo needs --checkpoint")?;
            Some(checkpoint::load(path).with_context(|| format!("loading {}", path.display()))?)
        }
        _ => None,
    };
    let schedule = match &file.agent {
        Some(AgentConfig::HillClimb { schedule, .. }) => *schedule,
        _ => TemperatureSchedule::GREEDY,
    };
    let restarts = match &file.agent {
        Some(AgentConfig::HillClimb { restarts, .. }) => *restarts,
        _ => args.restarts,
    };
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }

    let mut rows = Vec::with_capacity(configs.len());
    for cfg in &configs {
        let fresh = |cfg: &EnvConfig| -> Result<Box<dyn Agent>> {
            Ok(match args.agent {
                AgentArg::Random => Box::new(RandomAgent::new(seed)),
                AgentArg::Hillclimb => Box::new(HillClimbAgent::new(schedule, seed)),
                AgentArg::Ppo => {
                    let p = policy.clone().expect("loaded above");
                    ensure!(
                        p.config.net_shape(cfg) == p.net.shape,
                        "checkpoint does not fit scenario {} (different grid or wall count)",
                        cfg.scenario.id
                    );
                    Box::new(PpoAgent::new(p, true, seed))
                }
            })
        };
        let row = match args.agent {
            AgentArg::Hillclimb => {
                let r = hill_climb(cfg, restarts, schedule, seed, false)?;
                EvalRow {
                    scenario: cfg.scenario.id,
                    agent: agent_name(args.agent).into(),
                    runs: r.restarts_run,
                    success_rate: r.success_rate(),
                    best_closeness: r.best_closeness,
                    connections_satisfied: r.best_satisfied,
                    connections_required: cfg.scenario.connections_required(),
                }
            }
            _ => {
                let summary = evaluate(fresh(cfg)?.as_mut(), cfg, args.episodes, seed)?;
                let best = best_closeness(fresh(cfg)?.as_mut(), cfg, args.episodes, seed)?;
                summary_row(summary, args.agent, best)
            }
        };
        if let Some(dir) = &args.out {
            rollout(fresh(cfg)?.as_mut(), cfg, seed, &dir.join(format!("scenario-{}.jsonl", cfg.scenario.id)))?;
        }
        rows.push(row);
    }
    if let Some(dir) = &args.out {
        fs::write(dir.join("eval.json"), serde_json::to_vec_pretty(&rows)?)?;
    }
    Ok(rows)
}

pub fn eval(args: &EvalArgs, out: &mut dyn Write) -> Result<()> {
    let rows = eval_rows(args)?;
    writeln!(
        out,
        "{:<8} {:<9} {:>5} {:>8} {:>9} {:>9}",
        "scenario", "agent", "runs", "success", "closeness", "satisfied"
    )?;
    let (mut sat, mut req) = (0, 0);
    for r in &rows {
        writeln!(
            out,
            "{:<8} {:<9} {:>5} {:>8.2} {:>9.3} {:>9}",
            r.scenario,
            r.agent,
            r.runs,
            r.success_rate,
            r.best_closeness,
            format!("{}/{}", r.connections_satisfied, r.connections_required)
        )?;
        sat += r.connections_satisfied;
        req += r.connections_required;
    }
    writeln!(out, "connections satisfied: {sat} out of {req}")?;
    Ok(())
}

pub fn render(args: &RenderArgs, out: &mut dyn Write) -> Result<()> {
    let file = File::open(&args.log).with_context(|| format!("opening {}", args.log.display()))?;
    let (header, steps) =
        read_trajectory(BufReader::new(file)).with_context(|| format!("reading {}", args.log.display()))?;
    let mut env = LayoutEnv::new(header.config)?;
    env.reset(header.seed)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;

    let write_frame = |env: &LayoutEnv, k: usize| -> Result<()> {
        let state = env.state().expect("reset above");
        match args.format {
            FrameFormat::Png => {
                let path = args.out.join(format!("frame-{k:04}.png"));
                raster(&LabelView::of(state), args.cell_px)
                    .save(&path)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            FrameFormat::Svg => {
                let metrics = env.metrics().expect("reset above");
                fs::write(args.out.join(format!("frame-{k:04}.svg")), svg(state, metrics, args.cell_px))?;
            }
        }
        Ok(())
    };
    write_frame(&env, 0)?;
    for (k, rec) in steps.iter().enumerate() {
        let tr = env.step(rec.action)?;
        ensure!(
            tr.reward.to_bits() == rec.total_reward.to_bits() && tr.info.closeness.to_bits() == rec.closeness.to_bits(),
            "step {} does not replay: log reward {} vs {}",
            rec.step,
            rec.total_reward,
            tr.reward
        );
        write_frame(&env, k + 1)?;
    }
    writeln!(out, "wrote {} frames to {}", steps.len() + 1, args.out.display())?;
    Ok(())
}

/// SVG learning curve: mean episode reward (blue) and success rate (green,
/// right-hand scale) per iteration.
pub fn plot_svg(report: &TrainReport) -> String {
    const W: f64 = 640.0;
    const H: f64 = 360.0;
    const PAD: f64 = 40.0;
    let its = &report.iterations;
    let n = its.len().max(2) as f64 - 1.0;
    let (lo, hi) = its
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), it| (lo.min(it.mean_reward), hi.max(it.mean_reward)));
    let (lo, hi) = if lo.is_finite() && hi > lo { (lo, hi) } else { (lo.min(0.0) - 1.0, hi.max(0.0) + 1.0) };
    let x = |i: usize| PAD + (W - 2.0 * PAD) * i as f64 / n;
    let y = |v: f64, lo: f64, hi: f64| H - PAD - (H - 2.0 * PAD) * (v - lo) / (hi - lo);
    let line = |f: &dyn Fn(usize) -> f64| {
        its.iter().enumerate().map(|(i, _)| format!("{:.1},{:.1}", x(i), f(i))).collect::<Vec<_>>().join(" ")
    };
    let reward = line(&|i| y(its[i].mean_reward, lo, hi));
    let success = line(&|i| y(its[i].success_rate, 0.0, 1.0));
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<path d="M{PAD},{PAD} V{} H{}" fill="none" stroke="black"/>"#, H - PAD, W - PAD);
    let _ = writeln!(s, r#"<text x="{PAD}" y="{}" font-size="12">{hi:.1}</text>"#, PAD - 6.0);
    let _ = writeln!(s, r#"<text x="{PAD}" y="{}" font-size="12">{lo:.1}</text>"#, H - PAD + 16.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="12">iteration</text>"#, W / 2.0, H - 8.0);
    let _ =
        writeln!(s, r#"<polyline class="reward" points="{reward}" fill="none" stroke="steelblue" stroke-width="2"/>"#);
    let _ = writeln!(
        s,
        r#"<polyline class="success" points="{success}" fill="none" stroke="seagreen" stroke-width="1.5" stroke-dasharray="4 3"/>"#
    );
    s.push_str("</svg>\n");
    s
}

pub fn plot(args: &PlotArgs, out: &mut dyn Write) -> Result<()> {
    let text = fs::read_to_string(&args.report).with_context(|| format!("reading {}", args.report.display()))?;
    let report: TrainReport =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", args.report.display()))?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(&args.out, plot_svg(&report))?;
    writeln!(out, "plotted {} iterations to {}", report.iterations.len(), args.out.display())?;
    Ok(())
}
