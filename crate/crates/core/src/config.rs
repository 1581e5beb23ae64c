//! Flat `key = value` run configuration.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::formulations::{Formulation, Linearization};
use crate::linear_solver::PreconditionerKind;
use crate::spline::SpaceVariant;

/// Initial velocity field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialCondition {
    TaylorGreen,
    Rest,
}

impl FromStr for InitialCondition {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "taylor-green" => Ok(Self::TaylorGreen),
            "rest" => Ok(Self::Rest),
            _ => Err(format!("unknown initial condition `{s}` (expected taylor-green or rest)")),
        }
    }
}

/// Everything needed to set up and run one simulation on `[0, 2pi]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub formulation: Formulation,
    pub dim: usize,
    pub elements: usize,
    pub degree: usize,
    pub variant: SpaceVariant,
    /// Gauss points per direction; `None` means `degree + 2`.
    pub quadrature: Option<usize>,
    pub reynolds: f64,
    /// Fixed time step; `None` selects `4h / (5 pi)`.
    pub dt: Option<f64>,
    pub t_end: f64,
    /// Optional cap on the number of steps.
    pub max_steps: Option<usize>,
    pub alpha_m: f64,
    pub alpha_f: f64,
    pub gamma: f64,
    pub c_i: f64,
    pub tau_max: f64,
    pub convection: bool,
    pub linearization: Linearization,
    pub initial_condition: InitialCondition,
    pub nonlinear_tol: f64,
    pub nonlinear_abs_tol: f64,
    pub min_correctors: usize,
    pub max_correctors: usize,
    pub tau_update_passes: usize,
    pub linear_tol: f64,
    pub linear_max_iter: usize,
    pub linear_restart: usize,
    pub preconditioner: PreconditionerKind,
    pub schwarz_block: usize,
    pub output_dir: PathBuf,
    pub history_file: String,
    pub checkpoint_every: usize,
    pub snapshot_every: usize,
    pub deterministic_reductions: bool,
}

impl RunConfig {
    /// Defaults for every key except the formulation.
    pub fn with_formulation(formulation: Formulation) -> Self {
        Self {
            formulation,
            dim: 3,
            elements: 8,
            degree: 2,
            variant: SpaceVariant::DivConforming,
            quadrature: None,
            reynolds: 1600.0,
            dt: None,
            t_end: 10.0,
            max_steps: None,
            alpha_m: 0.5,
            alpha_f: 0.5,
            gamma: 0.5,
            c_i: crate::stabilization::DEFAULT_C_I,
            tau_max: 1e6,
            convection: true,
            linearization: Linearization::Newton,
            initial_condition: InitialCondition::TaylorGreen,
            nonlinear_tol: 1e-3,
            nonlinear_abs_tol: 1e-13,
            min_correctors: 3,
            max_correctors: 12,
            tau_update_passes: 2,
            linear_tol: 1e-10,
            linear_max_iter: 500,
            linear_restart: 100,
            preconditioner: PreconditionerKind::AdditiveSchwarz,
            schwarz_block: 2,
            output_dir: PathBuf::from("output"),
            history_file: "history.csv".into(),
            checkpoint_every: 0,
            snapshot_every: 0,
            deterministic_reductions: false,
        }
    }

    pub fn nu(&self) -> f64 {
        1.0 / self.reynolds
    }

    pub fn element_size(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.elements as f64
    }

    pub fn time_step(&self) -> f64 {
        self.dt
            .unwrap_or_else(|| 4.0 * self.element_size() / (5.0 * std::f64::consts::PI))
    }

    pub fn quadrature_points(&self) -> usize {
        self.quadrature.unwrap_or(self.degree + 2)
    }

    /// Parses a whole configuration file.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<(String, String)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body.split_once('=').ok_or_else(|| Error::ConfigLine {
                line,
                message: format!("expected `key = value`, found `{body}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(Error::ConfigLine { line, message: "empty key".into() });
            }
            if entries.iter().any(|(k, _)| k == key) {
                return Err(Error::ConfigLine { line, message: format!("duplicate key `{key}`") });
            }
            if key != "formulation" {
                check_key(key).map_err(|message| Error::ConfigLine { line, message })?;
            }
            entries.push((key.to_string(), value.to_string()));
        }
        let formulation = match entries.iter().find(|(k, _)| k == "formulation") {
            Some((_, v)) => {
                let line = line_of(text, "formulation");
                v.parse::<Formulation>()
                    .map_err(|e| Error::ConfigLine { line, message: e.to_string() })?
            }
            None => return Err(Error::MissingKey("formulation".into())),
        };
        let mut cfg = Self::with_formulation(formulation);
        for (key, value) in entries.iter().filter(|(k, _)| k != "formulation") {
            cfg.apply(key, value).map_err(|message| Error::ConfigLine {
                line: line_of(text, key),
                message,
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies a `key=value` override.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment.split_once('=').ok_or_else(|| Error::ConfigValue {
            key: assignment.to_string(),
            message: "expected key=value".into(),
        })?;
        let (key, value) = (key.trim(), value.trim());
        self.apply(key, value).map_err(|message| Error::ConfigValue {
            key: key.to_string(),
            message,
        })?;
        self.validate()
    }

    fn apply(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        match key {
            "formulation" => self.formulation = value.parse()?,
            "dim" => self.dim = num(value)?,
            "elements" => self.elements = num(value)?,
            "degree" => self.degree = num(value)?,
            "space" => {
                self.variant = match value {
                    "div-conforming" => SpaceVariant::DivConforming,
                    "elevated" => SpaceVariant::Elevated,
                    _ => return Err(format!("unknown space `{value}` (expected div-conforming or elevated)")),
                }
            }
            "quadrature" => self.quadrature = Some(num(value)?),
            "reynolds" => self.reynolds = num(value)?,
            "dt" => self.dt = if value == "auto" { None } else { Some(num(value)?) },
            "t_end" => self.t_end = num(value)?,
            "max_steps" => self.max_steps = if value == "none" { None } else { Some(num(value)?) },
            "alpha_m" => self.alpha_m = num(value)?,
            "alpha_f" => self.alpha_f = num(value)?,
            "gamma" => self.gamma = num(value)?,
            "c_i" => self.c_i = num(value)?,
            "tau_max" => self.tau_max = num(value)?,
            "convection" => self.convection = num(value)?,
            "linearization" => self.linearization = value.parse()?,
            "initial_condition" => self.initial_condition = value.parse()?,
            "nonlinear_tol" => self.nonlinear_tol = num(value)?,
            "nonlinear_abs_tol" => self.nonlinear_abs_tol = num(value)?,
            "min_correctors" => self.min_correctors = num(value)?,
            "max_correctors" => self.max_correctors = num(value)?,
            "tau_update_passes" => self.tau_update_passes = num(value)?,
            "linear_tol" => self.linear_tol = num(value)?,
            "linear_max_iter" => self.linear_max_iter = num(value)?,
            "linear_restart" => self.linear_restart = num(value)?,
            "preconditioner" => self.preconditioner = value.parse()?,
            "schwarz_block" => self.schwarz_block = num(value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "history_file" => self.history_file = value.to_string(),
            "checkpoint_every" => self.checkpoint_every = num(value)?,
            "snapshot_every" => self.snapshot_every = num(value)?,
            "deterministic_reductions" => self.deterministic_reductions = num(value)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        let bad = |key: &str, message: &str| {
            Err(Error::ConfigValue {
                key: key.into(),
                message: message.into(),
            })
        };
        if !(2..=3).contains(&self.dim) {
            return bad("dim", "must be 2 or 3");
        }
        if self.degree < 1 {
            return bad("degree", "must be at least 1");
        }
        if self.elements < self.degree + 2 {
            return bad("elements", "too few elements for the velocity degree");
        }
        for (key, v) in [
            ("reynolds", self.reynolds),
            ("t_end", self.t_end),
            ("c_i", self.c_i),
            ("tau_max", self.tau_max),
            ("nonlinear_tol", self.nonlinear_tol),
            ("linear_tol", self.linear_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(key, "must be positive");
            }
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad("dt", "must be positive");
            }
        }
        for (key, v) in [("alpha_m", self.alpha_m), ("alpha_f", self.alpha_f), ("gamma", self.gamma)] {
            if !(v > 0.0 && v <= 1.0) {
                return bad(key, "must lie in (0, 1]");
            }
        }
        if self.quadrature == Some(0) {
            return bad("quadrature", "must be positive");
        }
        if self.max_correctors == 0 {
            return bad("max_correctors", "must be positive");
        }
        if self.linear_restart == 0 || self.linear_max_iter == 0 {
            return bad("linear_restart", "linear iteration limits must be positive");
        }
        if self.schwarz_block == 0 {
            return bad("schwarz_block", "must be positive");
        }
        Ok(())
    }

    /// Serializes to the text format accepted by [`RunConfig::parse`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("formulation", self.formulation.name().to_string());
        put("dim", self.dim.to_string());
        put("elements", self.elements.to_string());
        put("degree", self.degree.to_string());
        put(
            "space",
            match self.variant {
                SpaceVariant::DivConforming => "div-conforming",
                SpaceVariant::Elevated => "elevated",
            }
            .into(),
        );
        if let Some(q) = self.quadrature {
            put("quadrature", q.to_string());
        }
        put("reynolds", fmt_f64(self.reynolds));
        put("dt", self.dt.map_or("auto".into(), fmt_f64));
        put("t_end", fmt_f64(self.t_end));
        put("max_steps", self.max_steps.map_or("none".into(), |n| n.to_string()));
        put("alpha_m", fmt_f64(self.alpha_m));
        put("alpha_f", fmt_f64(self.alpha_f));
        put("gamma", fmt_f64(self.gamma));
        put("c_i", fmt_f64(self.c_i));
        put("tau_max", fmt_f64(self.tau_max));
        put("convection", self.convection.to_string());
        put(
            "linearization",
            match self.linearization {
                Linearization::Newton => "newton",
                Linearization::Picard => "picard",
            }
            .into(),
        );
        put(
            "initial_condition",
            match self.initial_condition {
                InitialCondition::TaylorGreen => "taylor-green",
                InitialCondition::Rest => "rest",
            }
            .into(),
        );
        put("nonlinear_tol", fmt_f64(self.nonlinear_tol));
        put("nonlinear_abs_tol", fmt_f64(self.nonlinear_abs_tol));
        put("min_correctors", self.min_correctors.to_string());
        put("max_correctors", self.max_correctors.to_string());
        put("tau_update_passes", self.tau_update_passes.to_string());
        put("linear_tol", fmt_f64(self.linear_tol));
        put("linear_max_iter", self.linear_max_iter.to_string());
        put("linear_restart", self.linear_restart.to_string());
        put(
            "preconditioner",
            match self.preconditioner {
                PreconditionerKind::None => "none",
                PreconditionerKind::AdditiveSchwarz => "asm",
            }
            .into(),
        );
        put("schwarz_block", self.schwarz_block.to_string());
        put("output_dir", self.output_dir.display().to_string());
        put("history_file", self.history_file.clone());
        put("checkpoint_every", self.checkpoint_every.to_string());
        put("snapshot_every", self.snapshot_every.to_string());
        put("deterministic_reductions", self.deterministic_reductions.to_string());
        s
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn num<T: FromStr>(value: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| format!("cannot parse `{value}`: {e}"))
}

fn check_key(key: &str) -> std::result::Result<(), String> {
    let mut probe = RunConfig::with_formulation(Formulation::Galerkin);
    match probe.apply(key, "") {
        Err(m) if m.starts_with("unknown key") => Err(m),
        _ => Ok(()),
    }
}

fn line_of(text: &str, key: &str) -> usize {
    text.lines()
        .position(|l| {
            l.split('#')
                .next()
                .and_then(|b| b.split_once('='))
                .is_some_and(|(k, _)| k.trim() == key)
        })
        .map_or(0, |i| i + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_file_with_defaults() {
        let cfg = RunConfig::parse("formulation = glsdd\n").unwrap();
        assert_eq!(cfg.formulation, Formulation::Glsdd);
        assert_eq!(cfg.dim, 3);
        assert_eq!(cfg.elements, 8);
        assert!((cfg.nu() - 1.0 / 1600.0).abs() < 1e-18);
        let h = 2.0 * std::f64::consts::PI / 8.0;
        assert!((cfg.time_step() - 4.0 * h / (5.0 * std::f64::consts::PI)).abs() < 1e-15);
        assert_eq!(cfg.time_step(), 0.2);
    }

    #[test]
    fn missing_formulation_names_key() {
        let err = RunConfig::parse("dim = 2\n").unwrap_err();
        assert!(matches!(err, Error::MissingKey(ref k) if k == "formulation"));
        assert!(err.to_string().contains("formulation"));
        assert!(err.is_config_error());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = "formulation = gal\n# comment\n\nelements = eight\n";
        match RunConfig::parse(text).unwrap_err() {
            Error::ConfigLine { line, message } => {
                assert_eq!(line, 4);
                assert!(message.contains("eight"));
            }
            e => panic!("unexpected {e}"),
        }
        match RunConfig::parse("formulation = gal\nbogus = 1\n").unwrap_err() {
            Error::ConfigLine { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e}"),
        }
        match RunConfig::parse("formulation = gal\nno equals sign\n").unwrap_err() {
            Error::ConfigLine { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e}"),
        }
        match RunConfig::parse("formulation = nope\n").unwrap_err() {
            Error::ConfigLine { line, .. } => assert_eq!(line, 1),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn rejects_duplicates_and_bad_values() {
        assert!(RunConfig::parse("formulation = gal\ndim = 2\ndim = 3\n").is_err());
        assert!(RunConfig::parse("formulation = gal\ndim = 4\n").is_err());
        assert!(RunConfig::parse("formulation = gal\nalpha_f = 1.5\n").is_err());
        assert!(RunConfig::parse("formulation = gal\nreynolds = -1\n").is_err());
    }

    #[test]
    fn overrides_apply_after_file() {
        let mut cfg = RunConfig::parse("formulation = vmss\nelements = 8\n").unwrap();
        cfg.set("elements=16").unwrap();
        cfg.set("dt = 0.01").unwrap();
        assert_eq!(cfg.elements, 16);
        assert_eq!(cfg.dt, Some(0.01));
        assert!(cfg.set("elements").is_err());
        assert!(cfg.set("wat=1").unwrap_err().is_config_error());
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = RunConfig::with_formulation(Formulation::Glsdd);
        cfg.dim = 2;
        cfg.dt = Some(0.1 + 0.2);
        cfg.quadrature = Some(5);
        cfg.max_steps = Some(7);
        cfg.variant = SpaceVariant::Elevated;
        cfg.linearization = Linearization::Picard;
        let back = RunConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
    }
}
