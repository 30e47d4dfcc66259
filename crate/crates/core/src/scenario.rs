//! Scenario files: a flat `key = value` text format with dotted sections.
//!
//! ```text
//! # comment
//! name = narrow_passage
//! formation.n = 5
//! formation.d = 0.8
//! formation.alpha = 3*pi/4
//! gains.k_r = 1.0
//! sim.seed = 7
//! start = 2, 3.5
//! goal = 44, 3.5
//! obstacle.1.type = rect
//! obstacle.1.min_x = 20
//! obstacle.1.min_y = -2
//! obstacle.1.max_x = 24
//! obstacle.1.max_y = 2.9
//! obstacle.2.type = circle
//! obstacle.2.center = 30, 1
//! obstacle.2.radius = 0.5
//! obstacle.3.type = polygon
//! obstacle.3.vertices = 0, 0; 1, 0; 0, 1
//! reconfig_mode = signed
//! leader_delay = 0
//! ```
//!
//! Scalars accept plain decimals or products/quotients with `pi`
//! (`3*pi/4`, `0.75*pi`). Omitted gain and simulation keys take the
//! library defaults; unknown keys are rejected.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::behaviors::{BehaviorError, Gains, ReconfigMode};
use crate::formation::{leader_index, FormationError, FormationSpec};
use crate::geometry::{GeometryError, Obstacle, Vec2};
use crate::scalar::Scalar;
use crate::simulator::{default_force_cap, default_leader_speed, Controller, SimConfig, SimError};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("`{key}`: {message}")]
    Invalid { key: String, message: String },
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl ScenarioError {
    fn invalid(key: impl Into<String>, message: impl ToString) -> Self {
        ScenarioError::Invalid {
            key: key.into(),
            message: message.to_string(),
        }
    }

    /// Offending key for validation failures.
    pub fn key(&self) -> Option<&str> {
        match self {
            ScenarioError::Invalid { key, .. } => Some(key),
            _ => None,
        }
    }
}

/// A fully specified, seeded experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Scenario<T> {
    pub name: String,
    pub formation: FormationSpec<T>,
    pub gains: Gains<T>,
    pub sim: SimConfig<T>,
    pub start: Vec2<T>,
    pub goal: Vec2<T>,
    pub obstacles: Vec<Obstacle<T>>,
}

impl<T: Scalar> Scenario<T> {
    pub fn controller(&self) -> Controller<T> {
        Controller {
            spec: self.formation,
            gains: self.gains,
            cfg: self.sim,
        }
    }

    /// Checks every embedded invariant, naming the offending key.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.formation.validate().map_err(|e| {
            let key = match e {
                FormationError::TooFewUavs(_) => "formation.n",
                FormationError::NonPositiveSpacing(_) => "formation.d",
                FormationError::AlphaOutOfRange(_) => "formation.alpha",
                _ => "formation.leader",
            };
            ScenarioError::invalid(key, e)
        })?;
        self.gains.validate().map_err(|e| match e {
            BehaviorError::NonPositiveGain(name) => {
                ScenarioError::invalid(format!("gains.{name}"), e)
            }
            other => ScenarioError::invalid("gains", other),
        })?;
        self.sim.validate().map_err(|e| match e {
            SimError::InvalidConfig(name) => {
                let key = match name {
                    "reconfig_mode" | "leader_delay" => name.to_string(),
                    _ => format!("sim.{name}"),
                };
                ScenarioError::invalid(key, e)
            }
            other => ScenarioError::invalid("sim.r_a", other),
        })?;
        for (key, p) in [("start", self.start), ("goal", self.goal)] {
            if !p.is_finite() {
                return Err(ScenarioError::invalid(key, "not finite"));
            }
        }
        for (k, o) in self.obstacles.iter().enumerate() {
            o.validate()
                .map_err(|e| ScenarioError::invalid(format!("obstacle.{}", k + 1), e))?;
            for (key, p) in [("start", self.start), ("goal", self.goal)] {
                if o.contains(p) {
                    return Err(ScenarioError::invalid(
                        key,
                        format!("lies inside obstacle {}", k + 1),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Serializes to the text format; [`parse_scenario`] reads it back exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let s = &self.sim;
        let g = &self.gains;
        let f = &self.formation;
        let mut line = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        line("name", self.name.clone());
        line("formation.n", f.n.to_string());
        line("formation.d", num(f.d));
        line("formation.alpha", num(f.alpha));
        line("formation.leader", f.leader.to_string());
        for (name, value) in g.named() {
            line(&format!("gains.{name}"), num(value));
        }
        line("sim.dt", num(s.dt));
        line("sim.max_steps", s.max_steps.to_string());
        line("sim.v_max", num(s.v_max));
        line("sim.leader_speed", num(s.leader_speed));
        line("sim.leader_wait", num(s.leader_wait));
        line("sim.r_a", num(s.ranges.r_a));
        line("sim.r_s", num(s.ranges.r_s));
        line("sim.goal_tolerance", num(s.goal_tolerance));
        line("sim.seed", s.seed.to_string());
        line("sim.spawn_radius", num(s.spawn_radius));
        line("sim.force_cap", num(s.force_cap));
        line("start", vec2(self.start));
        line("goal", vec2(self.goal));
        for (k, o) in self.obstacles.iter().enumerate() {
            let prefix = format!("obstacle.{}", k + 1);
            match o {
                Obstacle::Circle { center, radius } => {
                    line(&format!("{prefix}.type"), "circle".into());
                    line(&format!("{prefix}.center"), vec2(*center));
                    line(&format!("{prefix}.radius"), num(*radius));
                }
                Obstacle::ConvexPolygon { vertices } => {
                    if let Some((min, max)) = as_rect(vertices) {
                        line(&format!("{prefix}.type"), "rect".into());
                        line(&format!("{prefix}.min_x"), num(min.x));
                        line(&format!("{prefix}.min_y"), num(min.y));
                        line(&format!("{prefix}.max_x"), num(max.x));
                        line(&format!("{prefix}.max_y"), num(max.y));
                    } else {
                        line(&format!("{prefix}.type"), "polygon".into());
                        let list: Vec<String> = vertices.iter().map(|v| vec2(*v)).collect();
                        line(&format!("{prefix}.vertices"), list.join("; "));
                    }
                }
            }
        }
        let mode = match s.reconfig_mode {
            ReconfigMode::Literal => "literal",
            ReconfigMode::Signed => "signed",
        };
        line("reconfig_mode", mode.into());
        line("leader_delay", s.leader_delay.to_string());
        out
    }
}

fn num<T: Scalar>(x: T) -> String {
    format!("{x}")
}

fn vec2<T: Scalar>(v: Vec2<T>) -> String {
    format!("{}, {}", v.x, v.y)
}

/// Recognizes the vertex order produced by [`Obstacle::rect`].
fn as_rect<T: Scalar>(vertices: &[Vec2<T>]) -> Option<(Vec2<T>, Vec2<T>)> {
    if let [a, b, c, d] = vertices {
        let canonical =
            b.x == c.x && b.y == a.y && d.x == a.x && d.y == c.y && a.x < c.x && a.y < c.y;
        canonical.then_some((*a, *c))
    } else {
        None
    }
}

/// `key = value` entries with their 1-based line numbers.
#[derive(Debug, Clone, Default)]
struct Entries {
    map: BTreeMap<String, (String, usize)>,
}

impl Entries {
    fn parse(text: &str) -> Result<Self, ScenarioError> {
        let mut map = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| ScenarioError::Parse {
                    line,
                    message: format!("expected `key = value`, found `{content}`"),
                })?;
            let key = key.trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(ScenarioError::Parse {
                    line,
                    message: format!("malformed key `{key}`"),
                });
            }
            if map
                .insert(key.to_string(), (value.trim().to_string(), line))
                .is_some()
            {
                return Err(ScenarioError::Parse {
                    line,
                    message: format!("duplicate key `{key}`"),
                });
            }
        }
        Ok(Self { map })
    }

    fn set(&mut self, key: &str, value: &str) {
        self.map.insert(key.to_string(), (value.to_string(), 0));
    }

    fn take(&mut self, key: &str) -> Option<(String, usize)> {
        self.map.remove(key)
    }

    fn scalar<T: Scalar>(&mut self, key: &str, default: Option<T>) -> Result<T, ScenarioError> {
        match self.take(key) {
            Some((v, line)) => parse_scalar(&v).map(T::lit).map_err(|m| at(line, key, m)),
            None => default.ok_or_else(|| ScenarioError::invalid(key, "missing required key")),
        }
    }

    fn integer<I: std::str::FromStr>(
        &mut self,
        key: &str,
        default: Option<I>,
    ) -> Result<I, ScenarioError> {
        match self.take(key) {
            Some((v, line)) => v.parse::<I>().map_err(|_| {
                at(
                    line,
                    key,
                    format!("expected a non-negative integer, found `{v}`"),
                )
            }),
            None => default.ok_or_else(|| ScenarioError::invalid(key, "missing required key")),
        }
    }

    fn vec2<T: Scalar>(&mut self, key: &str) -> Result<Vec2<T>, ScenarioError> {
        let (v, line) = self
            .take(key)
            .ok_or_else(|| ScenarioError::invalid(key, "missing required key"))?;
        parse_vec2(&v).map_err(|m| at(line, key, m))
    }
}

fn at(line: usize, key: &str, message: impl Into<String>) -> ScenarioError {
    let message = message.into();
    if line == 0 {
        ScenarioError::invalid(key, message)
    } else {
        ScenarioError::Parse {
            line,
            message: format!("`{key}`: {message}"),
        }
    }
}

/// Parses a decimal or a `*`/`/` product of decimals and `pi`.
pub fn parse_scalar(text: &str) -> Result<f64, String> {
    let text = text.trim();
    if text.is_empty() {
        return Err("empty value".into());
    }
    let mut value = 1.0;
    let mut op = '*';
    let mut rest = text;
    loop {
        let end = rest.find(['*', '/']).unwrap_or(rest.len());
        let token = rest[..end].trim();
        let (negative, body) = match token.strip_prefix('-') {
            Some(b) => (true, b.trim()),
            None => (false, token),
        };
        let mut factor = if body.eq_ignore_ascii_case("pi") {
            std::f64::consts::PI
        } else {
            body.parse::<f64>()
                .map_err(|_| format!("cannot parse `{text}` as a number"))?
        };
        if negative {
            factor = -factor;
        }
        value = if op == '*' {
            value * factor
        } else {
            value / factor
        };
        if end == rest.len() {
            break;
        }
        op = rest.as_bytes()[end] as char;
        rest = &rest[end + 1..];
    }
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("`{text}` is not finite"))
    }
}

fn parse_vec2<T: Scalar>(text: &str) -> Result<Vec2<T>, String> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected `x, y`, found `{text}`"));
    }
    Ok(Vec2::new(
        T::lit(parse_scalar(parts[0])?),
        T::lit(parse_scalar(parts[1])?),
    ))
}

/// Parses, defaults and validates a scenario from text. `overrides` are
/// `key=value` strings applied on top of the file.
pub fn parse_scenario<T: Scalar>(
    text: &str,
    overrides: &[String],
) -> Result<Scenario<T>, ScenarioError> {
    let mut e = Entries::parse(text)?;
    for o in overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| ScenarioError::invalid(o.clone(), "override must be `key=value`"))?;
        let k = k.trim();
        e.set(k, v.trim());
    }

    let name = e
        .take("name")
        .map(|(v, _)| v)
        .unwrap_or_else(|| "unnamed".into());

    let n: usize = e.integer("formation.n", None)?;
    let default_leader =
        leader_index(n).map_err(|err| ScenarioError::invalid("formation.n", err))?;
    let formation = FormationSpec {
        n,
        d: e.scalar("formation.d", Some(T::lit(0.8)))?,
        alpha: e.scalar("formation.alpha", Some(T::lit(0.75) * T::PI()))?,
        leader: e.integer("formation.leader", Some(default_leader))?,
    };

    let dg = Gains::<T>::default();
    let gains = Gains {
        k_f: e.scalar("gains.k_f", Some(dg.k_f))?,
        k_g: e.scalar("gains.k_g", Some(dg.k_g))?,
        k_o: e.scalar("gains.k_o", Some(dg.k_o))?,
        k_c: e.scalar("gains.k_c", Some(dg.k_c))?,
        k_r: e.scalar("gains.k_r", Some(dg.k_r))?,
        beta_c: e.scalar("gains.beta_c", Some(dg.beta_c))?,
        beta_r: e.scalar("gains.beta_r", Some(dg.beta_r))?,
    };

    let ds = SimConfig::<T>::default();
    let v_max = e.scalar("sim.v_max", Some(ds.v_max))?;
    let mut sim = SimConfig {
        dt: e.scalar("sim.dt", Some(ds.dt))?,
        max_steps: e.integer("sim.max_steps", Some(ds.max_steps))?,
        v_max,
        leader_speed: e.scalar("sim.leader_speed", Some(default_leader_speed(v_max)))?,
        leader_wait: e.scalar("sim.leader_wait", Some(ds.leader_wait))?,
        ranges: crate::behaviors::SensingRanges {
            r_a: e.scalar("sim.r_a", Some(ds.ranges.r_a))?,
            r_s: e.scalar("sim.r_s", Some(ds.ranges.r_s))?,
        },
        goal_tolerance: e.scalar("sim.goal_tolerance", Some(ds.goal_tolerance))?,
        seed: e.integer("sim.seed", Some(ds.seed))?,
        spawn_radius: e.scalar("sim.spawn_radius", Some(ds.spawn_radius))?,
        force_cap: e.scalar("sim.force_cap", Some(default_force_cap(v_max)))?,
        ..ds
    };
    if let Some((v, line)) = e.take("reconfig_mode") {
        sim.reconfig_mode = match v.to_ascii_lowercase().as_str() {
            "signed" => ReconfigMode::Signed,
            "literal" => ReconfigMode::Literal,
            _ => {
                return Err(at(
                    line,
                    "reconfig_mode",
                    format!("expected `signed` or `literal`, found `{v}`"),
                ))
            }
        };
    }
    sim.leader_delay = e.integer("leader_delay", Some(0u8))?;

    let start = e.vec2("start")?;
    let goal = e.vec2("goal")?;

    let mut obstacles = Vec::new();
    for k in 1.. {
        let prefix = format!("obstacle.{k}");
        let Some((kind, line)) = e.take(&format!("{prefix}.type")) else {
            break;
        };
        let obstacle = match kind.as_str() {
            "circle" => {
                let center = e.vec2(&format!("{prefix}.center"))?;
                let radius = e.scalar(&format!("{prefix}.radius"), None)?;
                Obstacle::circle(center, radius)
            }
            "rect" => {
                let min = Vec2::new(
                    e.scalar(&format!("{prefix}.min_x"), None)?,
                    e.scalar(&format!("{prefix}.min_y"), None)?,
                );
                let max = Vec2::new(
                    e.scalar(&format!("{prefix}.max_x"), None)?,
                    e.scalar(&format!("{prefix}.max_y"), None)?,
                );
                if !(min.x < max.x && min.y < max.y) {
                    return Err(ScenarioError::invalid(
                        &prefix,
                        "rect needs min < max on both axes",
                    ));
                }
                Obstacle::rect(min, max)
            }
            "polygon" => {
                let key = format!("{prefix}.vertices");
                let (list, vline) = e
                    .take(&key)
                    .ok_or_else(|| ScenarioError::invalid(&key, "missing required key"))?;
                let vertices = list
                    .split(';')
                    .map(parse_vec2)
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|m| at(vline, &key, m))?;
                Obstacle::polygon(vertices)
            }
            other => {
                return Err(at(
                    line,
                    &format!("{prefix}.type"),
                    format!("unknown obstacle type `{other}` (circle, rect, polygon)"),
                ))
            }
        };
        obstacles
            .push(obstacle.map_err(|err: GeometryError| ScenarioError::invalid(&prefix, err))?);
    }

    if let Some((key, (_, line))) = e.map.into_iter().next() {
        return Err(at(line, &key, "unknown key"));
    }

    let scenario = Scenario {
        name,
        formation,
        gains,
        sim,
        start,
        goal,
        obstacles,
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Reads and parses a scenario file.
pub fn load_scenario<T: Scalar>(
    path: &Path,
    overrides: &[String],
) -> Result<Scenario<T>, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario(&text, overrides)
}
