//! Flat `key = value` run configuration.
//!
//! Each command declares its keys with a kind and a default. Values from a config
//! file and from `--set` are checked against the declaration as they arrive, so a
//! resolved [`Config`] only ever holds known keys with well-formed values.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::error::CliError;
use crate::manifest::Command;

/// Value shape of a configuration key.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Real,
    Count,
    Seed,
    Flag,
    /// Comma-separated reals.
    Reals,
    /// Comma-separated counts.
    Counts,
    /// A real or `auto`.
    RealOrAuto,
    /// A positive real or `measure`.
    RealOrMeasure,
    /// A real or `none`.
    RealOrNone,
    /// `lo..hi` (dyadic) or comma-separated integers.
    Modes,
    /// `random`, `zero` or a path to a field file.
    Initial,
    /// Comma-separated campaign names.
    Campaigns,
}

pub const CAMPAIGNS: &[&str] = &["linear", "product", "kernel", "bilinear", "smoothing"];

struct Key {
    name: &'static str,
    kind: Kind,
    default: &'static str,
}

const fn key(name: &'static str, kind: Kind, default: &'static str) -> Key {
    Key { name, kind, default }
}

const COMMON: &[Key] = &[
    key("beta", Kind::Real, "1"),
    key("eta", Kind::Real, "1"),
    key("seed", Kind::Seed, "2023"),
];

const SOLVER_DATA: &[Key] = &[
    key("initial", Kind::Initial, "random"),
    key("profile", Kind::Real, "0"),
    key("amplitude", Kind::Real, "1"),
    key("sample", Kind::Seed, "0"),
];

const SIMULATE: &[Key] = &[
    key("s", Kind::Real, "0"),
    key("max_mode", Kind::Count, "64"),
    key("horizon", Kind::Real, "1"),
    key("n_steps", Kind::Count, "200"),
    key("nonlinear", Kind::Flag, "true"),
    key("energy_slack", Kind::Real, "1e-10"),
];

const PICARD: &[Key] = &[
    key("s", Kind::Real, "0"),
    key("max_mode", Kind::Count, "32"),
    key("horizon", Kind::RealOrAuto, "auto"),
    key("n_steps", Kind::Count, "16"),
    key("picard_tol", Kind::Real, "1e-10"),
    key("picard_max_iter", Kind::Count, "40"),
    key("quadrature_nodes_per_step", Kind::Count, "8"),
    key("contraction_constant", Kind::RealOrMeasure, "measure"),
    key("measure_samples", Kind::Count, "20"),
    key("measure_max_mode", Kind::Count, "64"),
    key("data_norm", Kind::RealOrNone, "0.1"),
];

const VERIFY: &[Key] = &[
    key("campaigns", Kind::Campaigns, "linear,product,kernel,bilinear,smoothing"),
    key("linear_samples", Kind::Count, "10000"),
    key("linear_max_mode", Kind::Count, "64"),
    key("linear_refinements", Kind::Count, "2"),
    key("uniform_bound_constant", Kind::Real, "1"),
    key("product_samples", Kind::Count, "1000"),
    key("product_max_mode", Kind::Count, "32"),
    key("product_bound_constant", Kind::Real, "1"),
    key("kernel_n_times", Kind::Count, "40"),
    key("bilinear_s", Kind::Reals, "-0.25,0"),
    key("bilinear_horizons", Kind::Reals, "0.25,0.0625,0.015625"),
    key("bilinear_samples", Kind::Count, "10"),
    key("bilinear_max_mode", Kind::Count, "64"),
    key("smoothing_s", Kind::Real, "-0.25"),
    key("smoothing_time", Kind::Real, "0.1"),
    key("smoothing_max_modes", Kind::Counts, "64,128,256"),
    key("smoothing_n_steps", Kind::Count, "400"),
    key("smoothing_samples", Kind::Count, "4"),
    key("smoothing_floor", Kind::Real, "1e-13"),
];

const INFLATION: &[Key] = &[
    key("s", Kind::Real, "-1.5"),
    key("t", Kind::Real, "1"),
    key("n", Kind::Modes, "16..1024"),
];

const ORACLE: &[Key] = &[
    key("n", Kind::Count, "4"),
    key("s", Kind::Real, "-1.5"),
    key("t", Kind::Real, "1"),
    key("n_steps", Kind::Count, "4"),
    key("quadrature_nodes_per_step", Kind::Count, "8"),
    key("max_refinements", Kind::Count, "4"),
    key("tolerance", Kind::Real, "1e-8"),
];

fn keys(command: Command) -> impl Iterator<Item = &'static Key> {
    let own: &[&[Key]] = match command {
        Command::Simulate => &[SIMULATE, SOLVER_DATA],
        Command::Picard => &[PICARD, SOLVER_DATA],
        Command::VerifyEstimates => &[VERIFY],
        Command::InflationScan => &[INFLATION],
        Command::OracleCheck => &[ORACLE],
    };
    COMMON.iter().chain(own.iter().flat_map(|k| k.iter()))
}

/// Resolved configuration of one command.
#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    command: Command,
    values: BTreeMap<String, String>,
}

/// Splits config text into `(line, key, value)` triples. `#` starts a comment.
pub fn parse_config(text: &str) -> Result<Vec<(usize, String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| CliError::ConfigSyntax {
            line: i + 1,
            text: raw.to_string(),
        })?;
        out.push((i + 1, k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Splits a `--set key=value` argument.
pub fn parse_override(arg: &str) -> Result<(String, String), CliError> {
    let (k, v) = arg
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("--set expects key=value, got {arg:?}")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

impl Config {
    pub fn defaults(command: Command) -> Self {
        Config {
            command,
            values: keys(command).map(|k| (k.name.to_string(), k.default.to_string())).collect(),
        }
    }

    pub fn command(&self) -> Command {
        self.command
    }

    /// Sets a key after checking that the command knows it and the value parses.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let kind = keys(self.command)
            .find(|k| k.name == key)
            .map(|k| k.kind)
            .ok_or_else(|| CliError::UnknownKey {
                key: key.to_string(),
                command: self.command.name().to_string(),
            })?;
        check(kind, key, value)?;
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    fn raw(&self, key: &str) -> &str {
        self.values
            .get(key)
            .unwrap_or_else(|| panic!("key {key} is not declared for {}", self.command.name()))
    }

    pub fn real(&self, key: &str) -> f64 {
        self.raw(key).parse().expect("checked on set")
    }

    pub fn count(&self, key: &str) -> usize {
        self.raw(key).parse().expect("checked on set")
    }

    pub fn seed(&self) -> u64 {
        self.raw("seed").parse().expect("checked on set")
    }

    pub fn whole(&self, key: &str) -> u64 {
        self.raw(key).parse().expect("checked on set")
    }

    pub fn flag(&self, key: &str) -> bool {
        self.raw(key) == "true"
    }

    pub fn reals(&self, key: &str) -> Vec<f64> {
        list(self.raw(key)).map(|v| v.parse().expect("checked on set")).collect()
    }

    pub fn counts(&self, key: &str) -> Vec<usize> {
        list(self.raw(key)).map(|v| v.parse().expect("checked on set")).collect()
    }

    /// `None` for `auto`, `measure` or `none`.
    pub fn optional_real(&self, key: &str) -> Option<f64> {
        self.raw(key).parse().ok()
    }

    pub fn modes(&self, key: &str) -> Vec<u64> {
        parse_modes(self.raw(key)).expect("checked on set")
    }

    pub fn initial(&self) -> Initial {
        match self.raw("initial") {
            "random" => Initial::Random,
            "zero" => Initial::Zero,
            path => Initial::File(PathBuf::from(path)),
        }
    }

    pub fn campaigns(&self) -> Vec<String> {
        list(self.raw("campaigns")).map(str::to_string).collect()
    }

    /// `key = value` lines in key order.
    pub fn lines(&self) -> Vec<String> {
        self.values.iter().map(|(k, v)| format!("{k} = {v}")).collect()
    }

    pub fn render(&self) -> String {
        let mut out = format!("# chenlee {}\n", self.command.name());
        for l in self.lines() {
            out.push_str(&l);
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Object(
            self.values
                .iter()
                .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
                .collect(),
        )
    }
}

/// Source of the initial data of the solver commands.
#[derive(Clone, Debug, PartialEq)]
pub enum Initial {
    Random,
    Zero,
    File(PathBuf),
}

fn list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|x| !x.is_empty())
}

/// `lo..hi` gives the powers of two times `lo` up to `hi`; otherwise a comma list.
pub fn parse_modes(v: &str) -> Option<Vec<u64>> {
    if let Some((lo, hi)) = v.split_once("..") {
        let lo: u64 = lo.trim().parse().ok()?;
        let hi: u64 = hi.trim().parse().ok()?;
        if lo == 0 || hi < lo {
            return None;
        }
        return Some(chenlee::illposed::dyadic_range(lo, hi));
    }
    let ns: Option<Vec<u64>> = list(v).map(|x| x.parse().ok()).collect();
    ns.filter(|n| !n.is_empty())
}

fn check(kind: Kind, key: &str, value: &str) -> Result<(), CliError> {
    let finite = |v: &str| v.parse::<f64>().is_ok_and(f64::is_finite);
    let ok = match kind {
        Kind::Real => finite(value),
        Kind::Count => value.parse::<usize>().is_ok(),
        Kind::Seed => value.parse::<u64>().is_ok(),
        Kind::Flag => matches!(value, "true" | "false"),
        Kind::Reals => list(value).count() > 0 && list(value).all(finite),
        Kind::Counts => list(value).count() > 0 && list(value).all(|v| v.parse::<usize>().is_ok()),
        Kind::RealOrAuto => value == "auto" || finite(value),
        Kind::RealOrMeasure => value == "measure" || finite(value),
        Kind::RealOrNone => value == "none" || finite(value),
        Kind::Modes => parse_modes(value).is_some(),
        Kind::Initial => !value.is_empty(),
        Kind::Campaigns => list(value).count() > 0 && list(value).all(|c| CAMPAIGNS.contains(&c)),
    };
    if ok {
        Ok(())
    } else {
        Err(CliError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
            expected: expected(kind),
        })
    }
}

fn expected(kind: Kind) -> &'static str {
    match kind {
        Kind::Real => "a finite number",
        Kind::Count => "a non-negative integer",
        Kind::Seed => "an unsigned 64-bit integer",
        Kind::Flag => "true or false",
        Kind::Reals => "comma-separated numbers",
        Kind::Counts => "comma-separated non-negative integers",
        Kind::RealOrAuto => "a number or `auto`",
        Kind::RealOrMeasure => "a number or `measure`",
        Kind::RealOrNone => "a number or `none`",
        Kind::Modes => "`lo..hi` or comma-separated integers",
        Kind::Initial => "`random`, `zero` or a field file path",
        Kind::Campaigns => "comma-separated names from linear, product, kernel, bilinear, smoothing",
    }
}
