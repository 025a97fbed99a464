//! Flat `key = value` run configuration with command-line overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::coefficients::{CoefficientField, InnerBox};
use crate::error::{Error, Result};
use crate::timestepper::RunSpec;

pub const KNOWN_KEYS: &[&str] = &[
    "problem",
    "problem.m",
    "coeff.m",
    "coeff.sigma_scale",
    "coeff.box",
    "mesh.levels",
    "time.T",
    "time.tau",
    "time.cfl_C",
    "time.cfl_override",
    "output.dir",
    "output.every",
    "output.operators",
    "seed",
    "verify.mutation",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Convergence,
    Solve,
    Verify,
    Cfl,
}

impl std::str::FromStr for Command {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "convergence" => Ok(Command::Convergence),
            "solve" => Ok(Command::Solve),
            "verify" => Ok(Command::Verify),
            "cfl" => Ok(Command::Cfl),
            other => Err(Error::Config(format!("unknown command `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Problem {
    Manufactured,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    None,
    /// Negate the stabilization operator in every scheme-based property.
    FlipStab,
}

/// Raw key/value pairs, later entries winning.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = RawConfig::default();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
            raw.set(k.trim(), v.trim())?;
        }
        Ok(raw)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(Error::Config(format!("unknown key `{key}`")));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }
}

/// Validated run settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: Problem,
    pub m: Option<u32>,
    /// Absolute prefactor of σ; `None` keeps the profile default.
    pub sigma_scale: Option<f64>,
    pub inner_box: InnerBox,
    pub levels: Vec<u32>,
    pub t_final: f64,
    pub tau: f64,
    pub cfl_c: f64,
    pub cfl_override: bool,
    pub output_dir: PathBuf,
    pub output_every: usize,
    pub output_operators: bool,
    pub seed: u64,
    pub mutation: Mutation,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problem: Problem::Manufactured,
            m: Some(6),
            sigma_scale: None,
            inner_box: InnerBox::DEFAULT,
            levels: vec![3, 4, 5, 6],
            t_final: 0.25,
            tau: 0.0005,
            cfl_c: crate::timestepper::DEFAULT_CFL_C,
            cfl_override: false,
            output_dir: PathBuf::from("out"),
            output_every: 50,
            output_operators: false,
            seed: 1,
            mutation: Mutation::None,
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse `{v}`")))
}

fn boolean(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true or false, got `{v}`"))),
    }
}

fn profile_m(key: &str, v: &str) -> Result<Option<u32>> {
    if v == "uniform" || v == "0" {
        return Ok(None);
    }
    let m: u32 = num(key, v)?;
    if m < 2 || m % 2 != 0 {
        return Err(Error::Config(format!("{key}: m must be an even integer >= 2 or `uniform`")));
    }
    Ok(Some(m))
}

/// `3..6`, `3-6` or `3,4,5,6`.
pub fn parse_levels(v: &str) -> Result<Vec<u32>> {
    let range = v.split_once("..").or_else(|| v.split_once('-'));
    let levels: Vec<u32> = match range {
        Some((a, b)) => {
            let (a, b): (u32, u32) = (num("mesh.levels", a.trim())?, num("mesh.levels", b.trim())?);
            (a..=b).collect()
        }
        None => v
            .split(',')
            .map(|s| num("mesh.levels", s.trim()))
            .collect::<Result<_>>()?,
    };
    if levels.is_empty() {
        return Err(Error::Config("mesh.levels: no levels".into()));
    }
    if levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("mesh.levels: levels must be increasing".into()));
    }
    if levels.iter().any(|&l| !(1..=12).contains(&l)) {
        return Err(Error::Config("mesh.levels: levels must lie in 1..=12".into()));
    }
    Ok(levels)
}

fn parse_box(v: &str) -> Result<InnerBox> {
    let inner = v.trim().trim_start_matches('[').trim_end_matches(']');
    let vals: Vec<f64> = inner
        .split(',')
        .map(|s| num("coeff.box", s.trim()))
        .collect::<Result<_>>()?;
    let [x0, x1, y0, y1] = vals[..] else {
        return Err(Error::Config("coeff.box: expected four numbers x0,x1,y0,y1".into()));
    };
    if !(0.0 < x0 && x0 < x1 && x1 < 1.0 && 0.0 < y0 && y0 < y1 && y1 < 1.0) {
        return Err(Error::Config("coeff.box: need 0 < x0 < x1 < 1 and 0 < y0 < y1 < 1".into()));
    }
    Ok(InnerBox { x0, x1, y0, y1 })
}

impl RunConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let mut c = RunConfig::default();
        if let Some(v) = raw.get("problem") {
            c.problem = match v {
                "manufactured" => Problem::Manufactured,
                "zero" => Problem::Zero,
                _ => return Err(Error::Config(format!("problem: unknown problem `{v}`"))),
            };
        }
        let pm = raw.get("problem.m").map(|v| profile_m("problem.m", v)).transpose()?;
        let cm = raw.get("coeff.m").map(|v| profile_m("coeff.m", v)).transpose()?;
        if let (Some(a), Some(b)) = (pm, cm) {
            if a != b {
                return Err(Error::Config(
                    "problem.m and coeff.m disagree; the exact solution uses the coefficient profile".into(),
                ));
            }
        }
        if let Some(m) = cm.or(pm) {
            c.m = m;
        }
        if let Some(v) = raw.get("coeff.sigma_scale") {
            let s: f64 = num("coeff.sigma_scale", v)?;
            c.sigma_scale = Some(s);
            if !(s >= 0.0) {
                return Err(Error::Config("coeff.sigma_scale must be >= 0".into()));
            }
        }
        if let Some(v) = raw.get("coeff.box") {
            c.inner_box = parse_box(v)?;
        }
        if let Some(v) = raw.get("mesh.levels") {
            c.levels = parse_levels(v)?;
        }
        if let Some(v) = raw.get("time.T") {
            c.t_final = num("time.T", v)?;
        }
        if let Some(v) = raw.get("time.tau") {
            c.tau = num("time.tau", v)?;
        }
        if !(c.t_final > 0.0 && c.t_final.is_finite()) || !(c.tau > 0.0 && c.tau.is_finite()) {
            return Err(Error::Config("time.T and time.tau must be positive".into()));
        }
        if let Some(v) = raw.get("time.cfl_C") {
            c.cfl_c = num("time.cfl_C", v)?;
            if !(c.cfl_c > 0.0) {
                return Err(Error::Config("time.cfl_C must be positive".into()));
            }
        }
        if let Some(v) = raw.get("time.cfl_override") {
            c.cfl_override = boolean("time.cfl_override", v)?;
        }
        if let Some(v) = raw.get("output.dir") {
            c.output_dir = PathBuf::from(v);
        }
        if let Some(v) = raw.get("output.every") {
            c.output_every = num("output.every", v)?;
        }
        if let Some(v) = raw.get("output.operators") {
            c.output_operators = boolean("output.operators", v)?;
        }
        if let Some(v) = raw.get("seed") {
            c.seed = num("seed", v)?;
        }
        if let Some(v) = raw.get("verify.mutation") {
            c.mutation = match v {
                "none" => Mutation::None,
                "flip_stab" => Mutation::FlipStab,
                _ => return Err(Error::Config(format!("verify.mutation: unknown mutation `{v}`"))),
            };
        }
        c.run_spec().num_levels().map_err(|e| Error::Config(e.to_string()))?;
        Ok(c)
    }

    pub fn field(&self) -> CoefficientField {
        let base = match self.m {
            Some(m) => CoefficientField::bumps(m).expect("m validated at parse time"),
            None => CoefficientField::uniform(),
        };
        let base = match self.sigma_scale {
            Some(s) => base.with_sigma_scale(s),
            None => base,
        };
        base.with_inner_box(self.inner_box)
    }

    pub fn run_spec(&self) -> RunSpec {
        RunSpec {
            t_final: self.t_final,
            tau: self.tau,
            cfl_c: self.cfl_c,
            cfl_override: self.cfl_override,
        }
    }

    /// Canonical `key=value` lines of every setting, in key order.
    pub fn canonical(&self) -> String {
        let b = &self.inner_box;
        let mut pairs = vec![
            ("coeff.box", format!("{},{},{},{}", b.x0, b.x1, b.y0, b.y1)),
            ("coeff.m", self.m.map_or("uniform".into(), |m| m.to_string())),
            ("coeff.sigma_scale", self.sigma_scale.map_or("default".into(), |s| s.to_string())),
            (
                "mesh.levels",
                self.levels.iter().map(u32::to_string).collect::<Vec<_>>().join(","),
            ),
            ("output.every", self.output_every.to_string()),
            ("output.operators", self.output_operators.to_string()),
            (
                "problem",
                match self.problem {
                    Problem::Manufactured => "manufactured".into(),
                    Problem::Zero => "zero".into(),
                },
            ),
            ("seed", self.seed.to_string()),
            ("time.T", self.t_final.to_string()),
            ("time.cfl_C", self.cfl_c.to_string()),
            ("time.cfl_override", self.cfl_override.to_string()),
            ("time.tau", self.tau.to_string()),
            (
                "verify.mutation",
                match self.mutation {
                    Mutation::None => "none".into(),
                    Mutation::FlipStab => "flip_stab".into(),
                },
            ),
        ];
        pairs.sort();
        pairs.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    /// SHA-256 of [`RunConfig::canonical`]; the output directory is deliberately excluded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}

/// Parsed command line: command, optional config file and `--key value` overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct Invocation {
    pub command: Command,
    pub config: RunConfig,
}

pub fn parse_args<I: IntoIterator<Item = String>>(args: I) -> Result<Invocation> {
    let mut it = args.into_iter();
    let command: Command = it
        .next()
        .ok_or_else(|| Error::Config("usage: maxwell convergence|solve|verify|cfl [--config path] [--key value]...".into()))?
        .parse()?;
    let mut file: Option<PathBuf> = None;
    let mut overrides = Vec::new();
    while let Some(flag) = it.next() {
        let key = flag
            .strip_prefix("--")
            .ok_or_else(|| Error::Config(format!("expected --key, got `{flag}`")))?;
        let value = it
            .next()
            .ok_or_else(|| Error::Config(format!("--{key} needs a value")))?;
        if key == "config" {
            file = Some(PathBuf::from(value));
        } else {
            overrides.push((key.to_string(), value));
        }
    }
    let mut raw = match &file {
        Some(p) => RawConfig::load(p).map_err(|e| match e {
            Error::Io { path, source } => Error::Config(format!("cannot read {}: {source}", path.display())),
            other => other,
        })?,
        None => RawConfig::default(),
    };
    for (k, v) in &overrides {
        raw.set(k, v)?;
    }
    Ok(Invocation {
        command,
        config: RunConfig::from_raw(&raw)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn defaults_match_the_reference_study() {
        let c = RunConfig::from_raw(&RawConfig::default()).unwrap();
        assert_eq!(c.levels, vec![3, 4, 5, 6]);
        assert_eq!(c.m, Some(6));
        assert_eq!(c.run_spec().num_levels().unwrap(), 500);
    }

    #[test]
    fn file_then_overrides() {
        let raw = RawConfig::parse("# comment\ncoeff.m = 8\ntime.tau=0.001  # trailing\n\n").unwrap();
        let c = RunConfig::from_raw(&raw).unwrap();
        assert_eq!(c.m, Some(8));
        assert_eq!(c.tau, 0.001);

        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.cfg");
        std::fs::write(&p, "coeff.m = 8\nmesh.levels = 3..4\n").unwrap();
        let inv = parse_args(args(&format!("convergence --config {} --coeff.m 10", p.display()))).unwrap();
        assert_eq!(inv.command, Command::Convergence);
        assert_eq!(inv.config.m, Some(10));
        assert_eq!(inv.config.levels, vec![3, 4]);
    }

    #[test]
    fn rejects_bad_input() {
        for bad in [
            "bogus",
            "solve --nope 1",
            "solve --time.tau",
            "solve --time.tau -1",
            "solve --time.tau 0.0007",
            "solve --coeff.m 7",
            "solve --mesh.levels 4,3",
            "solve --coeff.box 0.5,0.2,0.1,0.9",
            "solve --problem.m 6 --coeff.m 8",
            "solve --time.cfl_override maybe",
            "solve stray",
            "solve --config /definitely/missing.cfg",
        ] {
            assert!(matches!(parse_args(args(bad)), Err(Error::Config(_))), "{bad}");
        }
        assert!(RawConfig::parse("no equals sign").is_err());
    }

    #[test]
    fn level_syntaxes() {
        assert_eq!(parse_levels("3..6").unwrap(), vec![3, 4, 5, 6]);
        assert_eq!(parse_levels("3-5").unwrap(), vec![3, 4, 5]);
        assert_eq!(parse_levels("2, 4").unwrap(), vec![2, 4]);
        assert_eq!(parse_box("[0.2,0.8,0.3,0.7]").unwrap().y0, 0.3);
    }

    #[test]
    fn hash_tracks_settings_not_output_location() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.output_dir = PathBuf::from("elsewhere");
        assert_eq!(a.hash(), b.hash());
        b.tau = 0.00025;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn sigma_scale_defaults_to_the_profile() {
        let c = RunConfig::default();
        assert_eq!(c.field(), CoefficientField::bumps(6).unwrap());
        let inv = parse_args(args("cfl --coeff.sigma_scale 0")).unwrap();
        assert_eq!(inv.config.field().sigma_at([0.5, 0.5]), 0.0);
    }

    #[test]
    fn uniform_profile() {
        let inv = parse_args(args("cfl --coeff.m uniform")).unwrap();
        assert_eq!(inv.config.m, None);
        assert_eq!(inv.config.field().epsilon_at([0.5, 0.5]), 1.0);
    }
}
