//! Sectioned key-value experiment configuration.
//!
//! ```text
//! [lattice]
//! L = 32
//!
//! [sweep]
//! lambdas = 0.6, 0.4, 0.28, 0.2
//! T = 0.5
//! r = 2
//! replicas = 200
//! seed = 1
//!
//! [wkb]
//! h.centers = 0,0,0            ; triples separated by ';'
//! h.widths = 0.2
//! h.weights = 1
//! S.type = linear              ; linear | quadratic
//! S.p = 0.25, 0, 0
//! S.hessian = 1,0,0; 0,1,0; 0,0,1
//! eta = 0.04                   ; only used for lambda = 0
//!
//! [J]
//! x.centers = 0,0,0            ; omit the x.* keys for J constant in X
//! x.widths = 0.3
//! x.weights = 1
//! v.cos = 1,0,0:0.5; 0,0,0:1   ; mode:coefficient of cos(2π mode·v)
//!
//! [evolve]
//! method = split_step          ; split_step | fourth | exact
//! dt = 0.1
//!
//! [boltzmann]
//! particles = 100000
//! dt = 0.05
//! shell_width = 0.01
//! rate_samples = 1000000
//! bins = 60
//! ```
//!
//! Every key is optional and falls back to [`ExperimentConfig::default`].

use std::path::Path;
use std::str::FromStr;

use ini::{Ini, Properties};

use crate::dynamics::Method;
use crate::error::{Error, Result};
use crate::initial::{Phase, WkbSpec};
use crate::lattice::LatticeSpec;
use crate::mixture::GaussianMixture;
use crate::wigner::{TestFunction, TrigPoly};

#[derive(Clone, Debug, PartialEq)]
pub struct EvolveConfig {
    pub method: Method,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoltzmannConfig {
    pub particles: usize,
    pub dt: f64,
    pub shell_width: f64,
    pub rate_samples: usize,
    pub bins: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub lattice: LatticeSpec,
    pub lambdas: Vec<f64>,
    pub t_macro: f64,
    pub r: usize,
    pub replicas: usize,
    pub seed: u64,
    /// Initial state; its `eta` is replaced by `λ²` for every `λ > 0`.
    pub wkb: WkbSpec,
    pub j: TestFunction,
    pub evolve: EvolveConfig,
    pub boltzmann: BoltzmannConfig,
    /// Text the configuration was parsed from, hashed into run manifests.
    pub source: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            lattice: LatticeSpec::unit(32).expect("valid lattice"),
            lambdas: vec![0.6, 0.4, 0.28, 0.2],
            t_macro: 0.5,
            r: 2,
            replicas: 200,
            seed: 1,
            wkb: WkbSpec::plane_wave(0.2, [0.25, 0.0, 0.0], 0.04).expect("valid state"),
            j: default_test_function(),
            evolve: EvolveConfig { method: Method::SplitStep { dt: 0.1 } },
            boltzmann: BoltzmannConfig {
                particles: 100_000,
                dt: 0.05,
                shell_width: 0.01,
                rate_samples: 1_000_000,
                bins: 60,
            },
            source: String::new(),
        }
    }
}

fn default_test_function() -> TestFunction {
    let x = GaussianMixture::centered(0.3).expect("valid width");
    TestFunction::product(x, TrigPoly::cosines(&[([1, 0, 0], 0.5), ([0, 0, 0], 1.0)]))
}

fn bad(section: &str, key: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("[{section}] {key}: {msg}"))
}

fn scalar<T: FromStr>(props: Option<&Properties>, section: &str, key: &str, default: T) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    match props.and_then(|p| p.get(key)) {
        None => Ok(default),
        Some(raw) => raw.trim().parse().map_err(|e| bad(section, key, e)),
    }
}

fn list(raw: &str, section: &str, key: &str) -> Result<Vec<f64>> {
    raw.split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|e| bad(section, key, e)))
        .collect()
}

fn triple(raw: &str, section: &str, key: &str) -> Result<[f64; 3]> {
    let v = list(raw, section, key)?;
    <[f64; 3]>::try_from(v.as_slice()).map_err(|_| bad(section, key, format!("expected 3 numbers, got {}", v.len())))
}

fn triples(raw: &str, section: &str, key: &str) -> Result<Vec<[f64; 3]>> {
    raw.split(';').filter(|s| !s.trim().is_empty()).map(|s| triple(s, section, key)).collect()
}

fn mixture(props: &Properties, section: &str, prefix: &str, defaults: (&[[f64; 3]], &[f64], &[f64])) -> Result<GaussianMixture> {
    let get = |k: &str| props.get(format!("{prefix}.{k}").as_str());
    let key = |k: &str| format!("{prefix}.{k}");
    let centers = match get("centers") {
        Some(raw) => triples(raw, section, &key("centers"))?,
        None => defaults.0.to_vec(),
    };
    let widths = match get("widths") {
        Some(raw) => list(raw, section, &key("widths"))?,
        None => defaults.1.to_vec(),
    };
    let weights = match get("weights") {
        Some(raw) => list(raw, section, &key("weights"))?,
        None => defaults.2.to_vec(),
    };
    GaussianMixture::from_lists(&centers, &widths, &weights).map_err(|e| bad(section, prefix, e))
}

fn cosine_terms(raw: &str) -> Result<Vec<([i32; 3], f64)>> {
    raw.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|entry| {
            let (mode, coeff) =
                entry.split_once(':').ok_or_else(|| bad("J", "v.cos", format!("'{}' lacks ':'", entry.trim())))?;
            let m = triple(mode, "J", "v.cos")?;
            if m.iter().any(|c| c.fract() != 0.0) {
                return Err(bad("J", "v.cos", "modes must be integers"));
            }
            let c: f64 = coeff.trim().parse().map_err(|e| bad("J", "v.cos", e))?;
            Ok(([m[0] as i32, m[1] as i32, m[2] as i32], c))
        })
        .collect()
}

fn parse_method(name: &str, dt: f64) -> Result<Method> {
    match name.trim() {
        "split_step" => Ok(Method::SplitStep { dt }),
        "fourth" => Ok(Method::Fourth { dt }),
        "exact" => Ok(Method::ExactDiag),
        other => Err(bad("evolve", "method", format!("unknown method '{other}'"))),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let d = Self::default();
        let sec = |name: &str| ini.section(Some(name));

        let half_width = scalar(sec("lattice"), "lattice", "L", d.lattice.half_width())?;
        let lattice = LatticeSpec::unit(half_width)?;

        let sweep = sec("sweep");
        let lambdas = match sweep.and_then(|p| p.get("lambdas")) {
            Some(raw) => list(raw, "sweep", "lambdas")?,
            None => d.lambdas.clone(),
        };
        let t_macro = scalar(sweep, "sweep", "T", d.t_macro)?;
        let r = scalar(sweep, "sweep", "r", d.r)?;
        let replicas = scalar(sweep, "sweep", "replicas", d.replicas)?;
        let seed = scalar(sweep, "sweep", "seed", d.seed)?;

        let wkb = match sec("wkb") {
            None => d.wkb.clone(),
            Some(p) => {
                let envelope = mixture(p, "wkb", "h", (&[[0.0; 3]], &[0.2], &[1.0]))?;
                let momentum = match p.get("S.p") {
                    Some(raw) => triple(raw, "wkb", "S.p")?,
                    None => [0.25, 0.0, 0.0],
                };
                let phase = match p.get("S.type").map(str::trim).unwrap_or("linear") {
                    "linear" => Phase::Linear { p: momentum },
                    "quadratic" => {
                        let raw = p.get("S.hessian").ok_or_else(|| bad("wkb", "S.hessian", "required for a quadratic phase"))?;
                        let rows = triples(raw, "wkb", "S.hessian")?;
                        let hessian = <[[f64; 3]; 3]>::try_from(rows.as_slice())
                            .map_err(|_| bad("wkb", "S.hessian", "expected three rows"))?;
                        Phase::Quadratic { hessian, p: momentum }
                    }
                    other => return Err(bad("wkb", "S.type", format!("unknown phase '{other}'"))),
                };
                let eta = scalar(Some(p), "wkb", "eta", d.wkb.eta())?;
                WkbSpec::new(envelope, phase, eta)?
            }
        };

        let j = match sec("J") {
            None => d.j.clone(),
            Some(p) => {
                let v = match p.get("v.cos") {
                    Some(raw) => TrigPoly::cosines(&cosine_terms(raw)?),
                    None => TrigPoly::constant(1.0),
                };
                if p.get("x.centers").is_some() || p.get("x.widths").is_some() {
                    TestFunction::product(mixture(p, "J", "x", (&[[0.0; 3]], &[0.3], &[1.0]))?, v)
                } else {
                    TestFunction::v_only(v)
                }
            }
        };

        let ev = sec("evolve");
        let dt = scalar(ev, "evolve", "dt", 0.1)?;
        let method = match ev.and_then(|p| p.get("method")) {
            Some(name) => parse_method(name, dt)?,
            None => Method::SplitStep { dt },
        };

        let b = sec("boltzmann");
        let boltzmann = BoltzmannConfig {
            particles: scalar(b, "boltzmann", "particles", d.boltzmann.particles)?,
            dt: scalar(b, "boltzmann", "dt", d.boltzmann.dt)?,
            shell_width: scalar(b, "boltzmann", "shell_width", d.boltzmann.shell_width)?,
            rate_samples: scalar(b, "boltzmann", "rate_samples", d.boltzmann.rate_samples)?,
            bins: scalar(b, "boltzmann", "bins", d.boltzmann.bins)?,
        };

        let config = Self {
            lattice,
            lambdas,
            t_macro,
            r,
            replicas,
            seed,
            wkb,
            j,
            evolve: EvolveConfig { method },
            boltzmann,
            source: text.to_string(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambdas.is_empty() {
            return Err(bad("sweep", "lambdas", "empty grid"));
        }
        if let Some(l) = self.lambdas.iter().find(|l| !(l.is_finite() && **l >= 0.0 && **l <= 1.0)) {
            return Err(bad("sweep", "lambdas", format!("coupling {l} outside [0, 1]")));
        }
        if !(self.t_macro >= 0.0 && self.t_macro.is_finite()) {
            return Err(bad("sweep", "T", "must be a non-negative number"));
        }
        if self.r < 2 || self.r % 2 != 0 {
            return Err(bad("sweep", "r", format!("moment order {} must be even and >= 2", self.r)));
        }
        Ok(())
    }

    /// `(η, t)` for coupling `λ`: `η = λ²`, `t = T/λ²`; at `λ = 0` the
    /// configured `η` is kept and `t = T/η`.
    pub fn scaling(&self, lambda: f64) -> (f64, f64) {
        let eta = if lambda > 0.0 { lambda * lambda } else { self.wkb.eta() };
        (eta, self.t_macro / eta)
    }

    /// Same experiment with every `J` coefficient multiplied by `s`.
    pub fn with_scaled_observable(&self, s: f64) -> Self {
        Self { j: self.j.scaled(s), ..self.clone() }
    }
}
