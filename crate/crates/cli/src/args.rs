//! Command-line grammar.

use std::ops::RangeInclusive;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use laserwall_core::partition::InfiltrationMode;
use laserwall_core::{LightMode, WallTypes};

#[derive(Debug, Parser)]
#[command(name = "laserwall", version, about = "Laser-wall floor-plan layout planning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the built-in design scenarios.
    Scenarios {
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Place every wall once from a picks file and write the layout.
    Plan(PlanArgs),
    /// Train a policy and write a checkpoint plus a training report.
    Train(TrainArgs),
    /// Run an agent and tabulate satisfied connections per scenario.
    Eval(EvalArgs),
    /// Replay a trajectory log into PNG or SVG frames.
    Render(RenderArgs),
    /// Draw a training report as an SVG learning curve.
    Plot(PlotArgs),
    /// Serve the session API over HTTP.
    Serve(ServeArgs),
}

/// Inclusive list of scenario ids: `3`, `1..6` or `1,2,5`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScenarioSet(pub Vec<u32>);

impl FromStr for ScenarioSet {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse = |t: &str| t.trim().parse::<u32>().map_err(|_| format!("bad scenario id {t:?}"));
        let mut ids = Vec::new();
        for part in s.split(',') {
            if let Some((a, b)) = part.split_once("..") {
                let b = b.strip_prefix('=').unwrap_or(b);
                let range: RangeInclusive<u32> = parse(a)?..=parse(b)?;
                if range.is_empty() {
                    return Err(format!("empty scenario range {part:?}"));
                }
                ids.extend(range);
            } else {
                ids.push(parse(part)?);
            }
        }
        if ids.is_empty() {
            return Err("no scenario given".into());
        }
        Ok(Self(ids))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LightArg {
    On,
    Off,
}

impl From<LightArg> for LightMode {
    fn from(v: LightArg) -> Self {
        match v {
            LightArg::On => LightMode::OnLight,
            LightArg::Off => LightMode::OffLight,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum InfiltrationArg {
    Fixed,
    Decreasing,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum WallsArg {
    Straight,
    Angled,
    Both,
}

impl From<WallsArg> for WallTypes {
    fn from(v: WallsArg) -> Self {
        match v {
            WallsArg::Straight => WallTypes::StraightOnly,
            WallsArg::Angled => WallTypes::AngledOnly,
            WallsArg::Both => WallTypes::Both,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AgentArg {
    Random,
    Hillclimb,
    Ppo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FrameFormat {
    Png,
    Svg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AssignmentArg {
    /// Identity-full when every pick names a room, identity-less otherwise.
    Auto,
    Full,
    Less,
}

/// Environment flags shared by the episodic commands.
#[derive(Clone, Debug, Args)]
pub struct EnvArgs {
    #[arg(long, default_value = "1")]
    pub scenario: ScenarioSet,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum)]
    pub light_mode: Option<LightArg>,
    #[arg(long, value_enum)]
    pub infiltration: Option<InfiltrationArg>,
    #[arg(long, value_enum)]
    pub walls: Option<WallsArg>,
    #[arg(long)]
    pub max_steps: Option<usize>,
    /// JSON file whose fields override the flags above.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl EnvArgs {
    pub fn infiltration_mode(&self, size: laserwall_core::PlanSize) -> Option<InfiltrationMode> {
        self.infiltration.map(|i| match i {
            InfiltrationArg::Fixed => InfiltrationMode::Fixed,
            InfiltrationArg::Decreasing => InfiltrationMode::decreasing_for(size),
        })
    }
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long, default_value_t = 1)]
    pub scenario: u32,
    /// JSON array of `{shape, pivot: {x, y}, room_index?}`.
    #[arg(long)]
    pub picks: PathBuf,
    #[arg(long, value_enum, default_value_t = AssignmentArg::Auto)]
    pub assignment: AssignmentArg,
    #[arg(long, value_enum, default_value_t = InfiltrationArg::Fixed)]
    pub infiltration: InfiltrationArg,
    #[arg(long, default_value = "plan-out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub env: EnvArgs,
    #[arg(long, value_enum, default_value_t = AgentArg::Ppo)]
    pub agent: AgentArg,
    #[arg(long, default_value_t = 20)]
    pub iterations: usize,
    #[arg(long, default_value = "train-out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub env: EnvArgs,
    #[arg(long, value_enum, default_value_t = AgentArg::Hillclimb)]
    pub agent: AgentArg,
    /// Episodes per scenario for the random and PPO agents.
    #[arg(long, default_value_t = 20)]
    pub episodes: usize,
    /// Restarts per scenario for the hill-climbing agent.
    #[arg(long, default_value_t = 20)]
    pub restarts: usize,
    /// Policy checkpoint, required for `--agent ppo`.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Directory for `eval.json` and one trajectory log per scenario.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub log: PathBuf,
    #[arg(long, default_value = "frames")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = FrameFormat::Png)]
    pub format: FrameFormat,
    #[arg(long, default_value_t = 16)]
    pub cell_px: u32,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long, default_value = "curve.svg")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "PORT", default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Sessions are restored from this file at start-up when it exists and
    /// written back on shutdown.
    #[arg(long)]
    pub snapshot: Option<PathBuf>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_sets() {
        assert_eq!("3".parse::<ScenarioSet>().unwrap().0, vec![3]);
        assert_eq!("1..6".parse::<ScenarioSet>().unwrap().0, vec![1, 2, 3, 4, 5, 6]);
        assert_eq!("1..=2,5".parse::<ScenarioSet>().unwrap().0, vec![1, 2, 5]);
        assert!("6..1".parse::<ScenarioSet>().is_err());
        assert!("x".parse::<ScenarioSet>().is_err());
    }
}
