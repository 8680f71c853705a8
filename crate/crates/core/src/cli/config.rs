//! Run configuration: flat `key = value` lines with dotted section
//! prefixes (`scenario.*`, `filter.*`, `metrics.*`). `#` starts a comment.
//! Unknown and duplicate keys are errors.
//!
//! Required keys: `scenario.kind`, `scenario.num_frames`, `scenario.num_targets`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::filter::{FilterConfig, Region};
use crate::interaction::InteractionModel;
use crate::metrics::OspaParams;
use crate::motion::NcvParams;
use crate::par::Execution;
use crate::rfs::ExtractionMode;
use crate::scenario::{ScenarioConfig, ScenarioKind};

/// Birth model settings; components are placed at the scenario's entry points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BirthSettings {
    pub r: f64,
    pub pos_std: f64,
    pub vel_std: f64,
}

impl Default for BirthSettings {
    fn default() -> Self {
        Self {
            r: 0.2,
            pos_std: 5.0,
            vel_std: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    /// Filter parameters; `birth` is filled in from the scenario at run time.
    pub filter: FilterConfig,
    pub birth: BirthSettings,
    pub metrics: OspaParams,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = Entries::parse(text)?;
        let cfg = Self::from_entries(&mut kv)?;
        if let Some(key) = kv.0.keys().next() {
            return Err(config_err(key, "unknown key"));
        }
        Ok(cfg)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.scenario.seed = seed;
        self
    }

    fn from_entries(kv: &mut Entries) -> Result<Self> {
        let seed = kv.get("seed", 0u64)?;
        let output_dir = kv.take("output_dir").map(PathBuf::from);

        let kind = match kv.required("scenario.kind")?.as_str() {
            "swarm" => ScenarioKind::Swarm,
            "vehicles" | "vehicle_following" => ScenarioKind::VehicleFollowing,
            other => return Err(config_err("scenario.kind", format!("expected swarm or vehicles, got `{other}`"))),
        };
        let num_frames = kv.parse_required::<u64>("scenario.num_frames")?;
        let num_targets = kv.parse_required::<usize>("scenario.num_targets")?;
        let mut sc = ScenarioConfig::new(kind, num_frames, num_targets);
        sc.seed = seed;
        let dt = kv.get("scenario.dt", sc.motion.dt())?;
        let sigma_sq = kv.get("scenario.sigma_sq", sc.motion.sigma_motion_sq())?;
        sc.motion = NcvParams::new(dt, sigma_sq).map_err(|e| scoped("scenario", e))?;
        sc.max_speed = kv.get("scenario.max_speed", sc.max_speed)?;

        let s = &mut sc.swarm;
        s.origin[0] = kv.get("scenario.swarm.origin_x", s.origin[0])?;
        s.origin[1] = kv.get("scenario.swarm.origin_y", s.origin[1])?;
        s.spacing = kv.get("scenario.swarm.spacing", s.spacing)?;
        s.jitter = kv.get("scenario.swarm.jitter", s.jitter)?;
        s.velocity[0] = kv.get("scenario.swarm.vx", s.velocity[0])?;
        s.velocity[1] = kv.get("scenario.swarm.vy", s.velocity[1])?;
        s.individual_noise_var = kv.get("scenario.swarm.noise_var", s.individual_noise_var)?;
        s.gap_gain = kv.get("scenario.swarm.gap_gain", s.gap_gain)?;
        s.align_gain = kv.get("scenario.swarm.align_gain", s.align_gain)?;
        s.birth_stagger = kv.get("scenario.swarm.birth_stagger", s.birth_stagger)?;
        s.death_stagger = kv.get("scenario.swarm.death_stagger", s.death_stagger)?;

        let v = &mut sc.vehicles;
        v.lanes = kv.get("scenario.vehicles.lanes", v.lanes)?;
        v.opposing_lanes = kv.get("scenario.vehicles.opposing_lanes", v.opposing_lanes)?;
        v.lane_width = kv.get("scenario.vehicles.lane_width", v.lane_width)?;
        v.gap = kv.get("scenario.vehicles.gap", v.gap)?;
        v.speed = kv.get("scenario.vehicles.speed", v.speed)?;
        v.start[0] = kv.get("scenario.vehicles.start_x", v.start[0])?;
        v.start[1] = kv.get("scenario.vehicles.start_y", v.start[1])?;
        v.brake_frame = match kv.take("scenario.vehicles.brake_frame") {
            None => v.brake_frame,
            Some(s) if s == "none" => None,
            Some(s) => Some(parse_value("scenario.vehicles.brake_frame", &s)?),
        };
        v.brake_intensity = kv.get("scenario.vehicles.brake_intensity", v.brake_intensity)?;
        v.follow_gain = kv.get("scenario.vehicles.follow_gain", v.follow_gain)?;
        v.max_accel = kv.get("scenario.vehicles.max_accel", v.max_accel)?;
        sc.validate().map_err(|e| scoped("scenario", e))?;

        let mut f = FilterConfig::default();
        f.p_s = kv.get("filter.p_s", f.p_s)?;
        f.p_d = kv.get("filter.p_d", f.p_d)?;
        f.clutter_rate = kv.get("filter.clutter_rate", f.clutter_rate)?;
        if let Some(s) = kv.take("filter.clutter_region") {
            f.clutter_region = parse_region(&s)?;
        }
        f.obs_noise_var = kv.get("filter.obs_noise_var", f.obs_noise_var)?;
        f.num_particles = kv.get("filter.num_particles", f.num_particles)?;
        f.prune_threshold = kv.get("filter.prune_threshold", f.prune_threshold)?;
        f.gate_prob = kv.get("filter.gate_prob", f.gate_prob)?;
        f.interaction_warmup = kv.get("filter.interaction_warmup", f.interaction_warmup)?;
        let fdt = kv.get("filter.dt", f.motion.dt())?;
        let fsig = kv.get("filter.sigma_sq", f.motion.sigma_motion_sq())?;
        f.motion = NcvParams::new(fdt, fsig).map_err(|e| scoped("filter", e))?;
        if let Some(s) = kv.take("filter.extraction") {
            f.extraction = parse_extraction(&s)?;
        }
        f.max_group_tracks = kv.get("filter.max_group_tracks", f.max_group_tracks)?;
        f.max_group_measurements = kv.get("filter.max_group_measurements", f.max_group_measurements)?;
        f.execution = match kv.take("filter.execution").as_deref() {
            None | Some("parallel") => Execution::Parallel,
            Some("sequential") => Execution::Sequential,
            Some(other) => {
                return Err(config_err("filter.execution", format!("expected parallel or sequential, got `{other}`")))
            }
        };

        let i = &mut f.interaction;
        i.model = match kv.take("filter.interaction.model").as_deref() {
            None | Some("auto") => match kind {
                ScenarioKind::Swarm => InteractionModel::Swarm,
                ScenarioKind::VehicleFollowing => InteractionModel::FrontVehicle,
            },
            Some("none") => InteractionModel::None,
            Some("swarm") => InteractionModel::Swarm,
            Some("front_vehicle") => InteractionModel::FrontVehicle,
            Some(other) => {
                return Err(config_err(
                    "filter.interaction.model",
                    format!("expected auto, none, swarm or front_vehicle, got `{other}`"),
                ))
            }
        };
        i.d_th = kv.get("filter.interaction.d_th", i.d_th)?;
        i.alpha_th = kv.get("filter.interaction.alpha_th", i.alpha_th)?;
        i.beta_th = kv.get("filter.interaction.beta_th", i.beta_th)?;
        i.sigma_d = kv.get("filter.interaction.sigma_d", i.sigma_d)?;
        i.front_filter = kv.get("filter.interaction.front_filter", i.front_filter)?;
        f.validate().map_err(|e| scoped("filter", e))?;

        let d = BirthSettings::default();
        let birth = BirthSettings {
            r: kv.get("filter.birth.r", d.r)?,
            pos_std: kv.get("filter.birth.pos_std", d.pos_std)?,
            vel_std: kv.get("filter.birth.vel_std", d.vel_std)?,
        };
        if !(birth.r > 0.0 && birth.r < 1.0) {
            return Err(config_err("filter.birth.r", "must lie in (0, 1)"));
        }
        if !(birth.pos_std > 0.0 && birth.vel_std > 0.0) {
            return Err(config_err("filter.birth", "standard deviations must be positive"));
        }

        let m = OspaParams::default();
        let metrics = OspaParams {
            c: kv.get("metrics.c", m.c)?,
            p: kv.get("metrics.p", m.p)?,
            window: kv.get("metrics.window", m.window)?,
        };
        metrics.validate().map_err(|e| scoped("metrics", e))?;

        Ok(Self {
            scenario: sc,
            filter: f,
            birth,
            metrics,
            seed,
            output_dir,
        })
    }
}

fn config_err(key: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.into(),
        message: message.into(),
    }
}

/// Qualifies a validation error with its config section.
fn scoped(section: &str, e: Error) -> Error {
    match e {
        Error::InvalidParameter { name, reason } if name.starts_with(section) => config_err(name, reason),
        Error::InvalidParameter { name, reason } => config_err(format!("{section}.{name}"), reason),
        other => other,
    }
}

fn parse_value<T: FromStr>(key: &str, s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| config_err(key, format!("cannot parse `{s}`")))
}

fn parse_region(s: &str) -> Result<Region> {
    let key = "filter.clutter_region";
    let v: Vec<f64> = s
        .split(',')
        .map(|p| parse_value(key, p.trim()))
        .collect::<Result<_>>()?;
    if v.len() != 4 {
        return Err(config_err(key, "expected x_min, x_max, y_min, y_max"));
    }
    Ok(Region::new(v[0], v[1], v[2], v[3]))
}

fn parse_extraction(s: &str) -> Result<ExtractionMode> {
    let key = "filter.extraction";
    match s.split_once(':') {
        _ if s == "map" => Ok(ExtractionMode::MapCardinality),
        Some(("threshold", t)) => Ok(ExtractionMode::Threshold(parse_value(key, t.trim())?)),
        _ => Err(config_err(key, format!("expected map or threshold:<value>, got `{s}`"))),
    }
}

struct Entries(BTreeMap<String, String>);

impl Entries {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(config_err(format!("line {}", n + 1), format!("expected `key = value`, got `{line}`")));
            };
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(config_err(format!("line {}", n + 1), "empty key"));
            }
            if map.insert(k.to_string(), v.to_string()).is_some() {
                return Err(config_err(k, "duplicate key"));
            }
        }
        Ok(Self(map))
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.0.remove(key)
    }

    fn required(&mut self, key: &str) -> Result<String> {
        self.take(key).ok_or_else(|| config_err(key, "required key is missing"))
    }

    fn parse_required<T: FromStr>(&mut self, key: &str) -> Result<T> {
        let s = self.required(key)?;
        parse_value(key, &s)
    }

    fn get<T: FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        match self.take(key) {
            None => Ok(default),
            Some(s) => parse_value(key, &s),
        }
    }
}
