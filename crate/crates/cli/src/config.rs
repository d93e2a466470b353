//! Scenario configuration in TOML.
//!
//! ```toml
//! [fiber]
//! L = 100
//! tau = 0.99          # scalar or a list of L values
//! theta = 0.5
//! energy = 1e7
//!
//! [[attacks]]
//! position = 50
//! tau = 0.4
//! theta = 0.5
//!
//! [[attack_grids]]    # optional; expands to every (tau, theta) pair
//! position = 20
//! tau = [0.2, 0.6]
//! theta = [0.5]
//! ```
//!
//! `[numerics]`, `[mc]` and `[output]` are optional and fall back to
//! [`Numerics::default`], [`MonteCarlo::default`] and `directory = "out"`.

use std::ops::Range;
use std::path::PathBuf;

use otdr_core::rates::RateSettings;
use otdr_core::{AttackSpec, Error as CoreError, FiberSpec};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use toml::Spanned;

/// The shipped default, matching the Figure 3 scenario.
pub const DEFAULT_CONFIG: &str = include_str!("../configs/fig3.toml");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{0}")]
    Syntax(String),
    #[error("{path} (line {line}): {message}")]
    Invalid { path: String, line: usize, message: String },
    #[error("cannot emit config: {0}")]
    Emit(String),
}

impl ConfigError {
    pub fn path(&self) -> Option<&str> {
        match self {
            Self::Invalid { path, .. } => Some(path),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackGrid {
    pub position: usize,
    pub tau: Vec<f64>,
    pub theta: Vec<f64>,
}

impl AttackGrid {
    pub fn expand(&self) -> impl Iterator<Item = AttackSpec> + '_ {
        self.tau.iter().flat_map(move |&t| self.theta.iter().map(move |&h| AttackSpec::new(self.position, t, h)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    /// Grid points on `[0, π]` for the symbol supremum search.
    pub xi_grid: usize,
    pub quadrature_nodes: usize,
    /// Largest `n` for which a dense `G_n` is formed.
    pub dense_n_limit: usize,
    /// Sizes for the spectrum and Szegő convergence runs.
    pub n_list: Vec<usize>,
    pub lambda_points: usize,
    /// Block length for the finite-n POVM/Helstrom exponent check.
    pub exponent_n: usize,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            xi_grid: 1 << 16,
            quadrature_nodes: 4096,
            dense_n_limit: 2048,
            n_list: vec![50, 100, 200, 400],
            lambda_points: 101,
            exponent_n: 512,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarlo {
    pub samples: u64,
    pub seed: u64,
    pub workers: usize,
    /// Block lengths for the determinant-vs-sampling check on the configured attacks.
    pub n_list: Vec<usize>,
    pub homodyne_pulses: usize,
    /// Random small scenarios (n ≤ 16, E ≤ 1) drawn for the calibration run.
    pub calibration_scenarios: usize,
}

impl Default for MonteCarlo {
    fn default() -> Self {
        Self {
            samples: 1_000_000,
            seed: 1,
            workers: 4,
            n_list: vec![4, 8, 16],
            homodyne_pulses: 20,
            calibration_scenarios: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub fiber: FiberSpec,
    pub attacks: Vec<AttackSpec>,
    pub attack_grids: Vec<AttackGrid>,
    pub numerics: Numerics,
    pub mc: MonteCarlo,
    pub output_directory: PathBuf,
}

impl ScenarioConfig {
    /// Explicit attacks followed by every grid expansion, in file order.
    pub fn all_attacks(&self) -> Vec<AttackSpec> {
        let mut all = self.attacks.clone();
        for grid in &self.attack_grids {
            all.extend(grid.expand());
        }
        all
    }

    pub fn rate_settings(&self) -> RateSettings {
        RateSettings {
            xi_grid: self.numerics.xi_grid,
            quadrature_nodes: self.numerics.quadrature_nodes,
            lambda_points: self.numerics.lambda_points,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum ScalarOrList {
    Scalar(f64),
    List(Vec<f64>),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFiber {
    #[serde(rename = "L")]
    blocks: Spanned<i64>,
    tau: Spanned<ScalarOrList>,
    theta: Spanned<ScalarOrList>,
    energy: Spanned<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAttack {
    position: Spanned<i64>,
    tau: Spanned<f64>,
    theta: Spanned<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    position: Spanned<i64>,
    tau: Spanned<Vec<f64>>,
    theta: Spanned<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    directory: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    fiber: RawFiber,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    attacks: Vec<RawAttack>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    attack_grids: Vec<RawGrid>,
    #[serde(default)]
    numerics: Option<Spanned<Numerics>>,
    #[serde(default)]
    mc: Option<Spanned<MonteCarlo>>,
    #[serde(default)]
    output: Option<RawOutput>,
}

struct Lines<'a>(&'a str);

impl Lines<'_> {
    fn of(&self, span: Range<usize>) -> usize {
        self.0[..span.start.min(self.0.len())].matches('\n').count() + 1
    }

    fn invalid(&self, path: impl Into<String>, span: Range<usize>, message: impl Into<String>) -> ConfigError {
        ConfigError::Invalid { path: path.into(), line: self.of(span), message: message.into() }
    }
}

fn expand(
    lines: &Lines,
    name: &str,
    value: &Spanned<ScalarOrList>,
    blocks: usize,
) -> Result<(Vec<f64>, bool), ConfigError> {
    match value.get_ref() {
        ScalarOrList::Scalar(x) => Ok((vec![*x; blocks], false)),
        ScalarOrList::List(list) if list.len() == blocks => Ok((list.clone(), true)),
        ScalarOrList::List(list) => Err(lines.invalid(
            format!("fiber.{name}"),
            value.span(),
            format!("has {} entries but L = {blocks}", list.len()),
        )),
    }
}

fn count(lines: &Lines, path: &str, value: &Spanned<i64>, min: i64) -> Result<usize, ConfigError> {
    let v = *value.get_ref();
    if v < min {
        return Err(lines.invalid(path, value.span(), format!("must be at least {min}, got {v}")));
    }
    Ok(v as usize)
}

fn fiber_spec(lines: &Lines, raw: &RawFiber) -> Result<FiberSpec, ConfigError> {
    let blocks = count(lines, "fiber.L", &raw.blocks, 1)?;
    let (tau, tau_list) = expand(lines, "tau", &raw.tau, blocks)?;
    let (theta, theta_list) = expand(lines, "theta", &raw.theta, blocks)?;
    let element = |name: &str, listed: bool, index: usize| {
        if listed {
            format!("fiber.{name}[{index}]")
        } else {
            format!("fiber.{name}")
        }
    };
    FiberSpec::new(tau, theta, *raw.energy.get_ref()).map_err(|e| match e {
        CoreError::InvalidTau { index, .. } => {
            lines.invalid(element("tau", tau_list, index), raw.tau.span(), e.to_string())
        }
        CoreError::InvalidTheta { index, .. } => {
            lines.invalid(element("theta", theta_list, index), raw.theta.span(), e.to_string())
        }
        _ => lines.invalid("fiber.energy", raw.energy.span(), e.to_string()),
    })
}

fn check_attack(
    lines: &Lines,
    spec: &FiberSpec,
    prefix: &str,
    attack: AttackSpec,
    spans: [Range<usize>; 3],
    fields: [String; 3],
) -> Result<(), ConfigError> {
    let [position, tau, theta] = spans;
    let [position_path, tau_path, theta_path] = fields;
    attack.validate(spec).map_err(|e| {
        let (path, span) = match e {
            CoreError::AttackPosition { .. } => (position_path, position),
            CoreError::AttackTheta { .. } => (theta_path, theta),
            _ => (tau_path, tau),
        };
        lines.invalid(format!("{prefix}.{path}"), span, e.to_string())
    })
}

fn check_numerics(lines: &Lines, n: &Spanned<Numerics>) -> Result<(), ConfigError> {
    let span = n.span();
    let v = n.get_ref();
    let fail = |field: &str, msg: String| Err(lines.invalid(format!("numerics.{field}"), span.clone(), msg));
    if v.xi_grid < 16 {
        return fail("xi_grid", format!("must be at least 16, got {}", v.xi_grid));
    }
    if v.quadrature_nodes < 64 {
        return fail("quadrature_nodes", format!("must be at least 64, got {}", v.quadrature_nodes));
    }
    if v.dense_n_limit == 0 {
        return fail("dense_n_limit", "must be at least 1".into());
    }
    if v.n_list.is_empty() {
        return fail("n_list", "must not be empty".into());
    }
    for (i, &n) in v.n_list.iter().enumerate() {
        if n == 0 || n > v.dense_n_limit {
            return fail(&format!("n_list[{i}]"), format!("{n} is outside [1, dense_n_limit = {}]", v.dense_n_limit));
        }
    }
    if v.lambda_points < 2 {
        return fail("lambda_points", format!("must be at least 2, got {}", v.lambda_points));
    }
    if v.exponent_n == 0 || v.exponent_n > v.dense_n_limit {
        return fail("exponent_n", format!("{} is outside [1, dense_n_limit = {}]", v.exponent_n, v.dense_n_limit));
    }
    Ok(())
}

fn check_mc(lines: &Lines, mc: &Spanned<MonteCarlo>, dense_limit: usize) -> Result<(), ConfigError> {
    let span = mc.span();
    let v = mc.get_ref();
    let fail = |field: &str, msg: String| Err(lines.invalid(format!("mc.{field}"), span.clone(), msg));
    if v.samples < 2 {
        return fail("samples", format!("must be at least 2 so a standard error exists, got {}", v.samples));
    }
    if v.workers == 0 {
        return fail("workers", "must be at least 1".into());
    }
    for (i, &n) in v.n_list.iter().enumerate() {
        if n == 0 || n > dense_limit {
            return fail(&format!("n_list[{i}]"), format!("{n} is outside [1, dense_n_limit = {dense_limit}]"));
        }
    }
    if v.homodyne_pulses == 0 {
        return fail("homodyne_pulses", "must be at least 1".into());
    }
    Ok(())
}

/// Parses and validates a scenario; unknown keys are rejected.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    let lines = Lines(text);
    let fiber = fiber_spec(&lines, &raw.fiber)?;

    let mut attacks = Vec::with_capacity(raw.attacks.len());
    for (i, a) in raw.attacks.iter().enumerate() {
        let prefix = format!("attacks[{i}]");
        let position = count(&lines, &format!("{prefix}.position"), &a.position, 1)?;
        let attack = AttackSpec::new(position, *a.tau.get_ref(), *a.theta.get_ref());
        let spans = [a.position.span(), a.tau.span(), a.theta.span()];
        check_attack(&lines, &fiber, &prefix, attack, spans, ["position".into(), "tau".into(), "theta".into()])?;
        attacks.push(attack);
    }

    let mut attack_grids = Vec::with_capacity(raw.attack_grids.len());
    for (i, g) in raw.attack_grids.iter().enumerate() {
        let prefix = format!("attack_grids[{i}]");
        let position = count(&lines, &format!("{prefix}.position"), &g.position, 1)?;
        for (name, list) in [("tau", &g.tau), ("theta", &g.theta)] {
            if list.get_ref().is_empty() {
                return Err(lines.invalid(format!("{prefix}.{name}"), list.span(), "must not be empty"));
            }
        }
        for (j, &t) in g.tau.get_ref().iter().enumerate() {
            for (k, &h) in g.theta.get_ref().iter().enumerate() {
                let spans = [g.position.span(), g.tau.span(), g.theta.span()];
                let fields = ["position".into(), format!("tau[{j}]"), format!("theta[{k}]")];
                check_attack(&lines, &fiber, &prefix, AttackSpec::new(position, t, h), spans, fields)?;
            }
        }
        attack_grids.push(AttackGrid { position, tau: g.tau.get_ref().clone(), theta: g.theta.get_ref().clone() });
    }
    if attacks.is_empty() && attack_grids.is_empty() {
        return Err(lines.invalid("attacks", 0..0, "at least one attack or attack grid is required"));
    }

    let numerics = match &raw.numerics {
        Some(n) => {
            check_numerics(&lines, n)?;
            n.get_ref().clone()
        }
        None => Numerics::default(),
    };
    let band = 2 * fiber.blocks();
    if numerics.exponent_n <= band {
        let span = raw.numerics.as_ref().map_or(0..0, |n| n.span());
        return Err(lines.invalid(
            "numerics.exponent_n",
            span,
            format!("{} must exceed the response length 2L = {band} so steady-state slots exist", numerics.exponent_n),
        ));
    }
    let mc = match &raw.mc {
        Some(m) => {
            check_mc(&lines, m, numerics.dense_n_limit)?;
            m.get_ref().clone()
        }
        None => MonteCarlo::default(),
    };
    let output_directory = raw.output.map_or_else(|| PathBuf::from("out"), |o| PathBuf::from(o.directory));
    Ok(ScenarioConfig { fiber, attacks, attack_grids, numerics, mc, output_directory })
}

pub fn default_config() -> ScenarioConfig {
    parse_config(DEFAULT_CONFIG).expect("shipped default config is valid")
}

fn spanned<T>(value: T) -> Spanned<T> {
    Spanned::new(0..0, value)
}

fn compact(values: &[f64]) -> ScalarOrList {
    match values {
        [first, rest @ ..] if rest.iter().all(|v| v.to_bits() == first.to_bits()) => ScalarOrList::Scalar(*first),
        _ => ScalarOrList::List(values.to_vec()),
    }
}

fn integer(value: usize) -> Result<i64, ConfigError> {
    i64::try_from(value).map_err(|_| ConfigError::Emit(format!("{value} does not fit a TOML integer")))
}

/// Renders a config as TOML that [`parse_config`] maps back to an equal value.
pub fn emit_config(config: &ScenarioConfig) -> Result<String, ConfigError> {
    let raw = RawConfig {
        fiber: RawFiber {
            blocks: spanned(integer(config.fiber.blocks())?),
            tau: spanned(compact(config.fiber.tau())),
            theta: spanned(compact(config.fiber.theta())),
            energy: spanned(config.fiber.energy()),
        },
        attacks: config
            .attacks
            .iter()
            .map(|a| {
                Ok(RawAttack { position: spanned(integer(a.position)?), tau: spanned(a.tau), theta: spanned(a.theta) })
            })
            .collect::<Result<_, ConfigError>>()?,
        attack_grids: config
            .attack_grids
            .iter()
            .map(|g| {
                Ok(RawGrid {
                    position: spanned(integer(g.position)?),
                    tau: spanned(g.tau.clone()),
                    theta: spanned(g.theta.clone()),
                })
            })
            .collect::<Result<_, ConfigError>>()?,
        numerics: Some(spanned(config.numerics.clone())),
        mc: Some(spanned(config.mc.clone())),
        output: Some(RawOutput {
            directory: config
                .output_directory
                .to_str()
                .ok_or_else(|| ConfigError::Emit("output directory is not valid UTF-8".into()))?
                .to_owned(),
        }),
    };
    toml::to_string(&raw).map_err(|e| ConfigError::Emit(e.to_string()))
}
