//! `key = value` run configuration.

use std::collections::HashSet;
use std::f64::consts::E;
use std::path::{Path, PathBuf};

use agelab::renewal::default_max_age;
use agelab::{AgeProfile, BirthKernel, GammaShape};

use crate::error::{CliError, Result};

pub const DEFAULT_DT: f64 = 0.01;
pub const DEFAULT_HORIZON: f64 = 200.0;
pub const DEFAULT_K_MAX: u32 = 5;
pub const DEFAULT_SPECTRUM: [f64; 5] = [0.5, 1.0, 2.0, 4.0, 8.0];

const KEYS: &[&str] = &[
    "alpha",
    "mu",
    "kernel.type",
    "kernel.tau",
    "kernel.kappa",
    "kernel.n",
    "kernel.path",
    "kernel.support_end",
    "dt",
    "T",
    "A_max",
    "u0",
    "sweep.param",
    "sweep.lo",
    "sweep.hi",
    "sweep.steps",
    "hopf.k_max",
    "spectrum.m",
    "out",
    "tol.final_error",
    "tol.lyapunov_slack",
    "tol.dissipativity",
    "tol.amplitude_fraction",
    "tol.sandwich",
];

#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    ShiftedGamma { tau: f64, kappa: f64, n: u32 },
    Tabulated { path: PathBuf, support_end: Option<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialSpec {
    Equilibrium,
    ScaledEquilibrium(f64),
    /// Unit density on `[a* + 1, a* + 5]`, invisible to the kernel.
    BoundaryTail,
    /// `h (1 - ((a - c) / w)^2)^2` on `|a - c| < w`; `h` defaults to `2 ln(alpha)`.
    Bump { center: f64, width: f64, height: Option<f64> },
    Csv(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl SweepSpec {
    /// `steps` evenly spaced values from `lo` to `hi` inclusive.
    pub fn values(&self) -> Vec<f64> {
        match self.steps {
            0 => Vec::new(),
            1 => vec![self.lo],
            n => (0..n)
                .map(|i| self.lo + (self.hi - self.lo) * i as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub final_error: f64,
    pub lyapunov_slack: f64,
    pub dissipativity: f64,
    pub amplitude_fraction: f64,
    pub sandwich: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            final_error: 1e-3,
            lyapunov_slack: 1e-6,
            dissipativity: 1e-6,
            amplitude_fraction: 0.2,
            sandwich: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub alpha: Option<f64>,
    pub mu: f64,
    pub kernel: KernelSpec,
    pub dt: f64,
    pub horizon: f64,
    pub max_age: Option<f64>,
    pub u0: InitialSpec,
    pub sweep: Option<SweepSpec>,
    pub hopf_k_max: u32,
    pub spectrum_m: Vec<f64>,
    pub out: PathBuf,
    pub tol: Tolerances,
}

struct Entry<'a> {
    line: usize,
    key: &'a str,
    value: &'a str,
}

fn parse_error(line: usize, message: impl Into<String>) -> CliError {
    CliError::Parse {
        line,
        message: message.into(),
    }
}

fn number(e: &Entry) -> Result<f64> {
    e.value
        .parse::<f64>()
        .map_err(|_| parse_error(e.line, format!("`{}` expects a number, got `{}`", e.key, e.value)))
}

fn integer(e: &Entry) -> Result<u32> {
    e.value
        .parse::<u32>()
        .map_err(|_| parse_error(e.line, format!("`{}` expects a non-negative integer, got `{}`", e.key, e.value)))
}

fn numbers(e: &Entry, s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| parse_error(e.line, format!("`{}`: cannot parse `{}` as a number", e.key, p.trim())))
        })
        .collect()
}

fn parse_initial(e: &Entry) -> Result<InitialSpec> {
    let (name, args) = match e.value.split_once(':') {
        Some((n, a)) => (n.trim(), Some(a.trim())),
        None => (e.value, None),
    };
    match (name, args) {
        ("equilibrium", None) => Ok(InitialSpec::Equilibrium),
        ("scaled_equilibrium", Some(a)) => Ok(InitialSpec::ScaledEquilibrium(numbers(e, a)?[0])),
        ("boundary_tail", None) => Ok(InitialSpec::BoundaryTail),
        ("bump", None) => Ok(InitialSpec::Bump {
            center: 2.0,
            width: 1.5,
            height: None,
        }),
        ("bump", Some(a)) => {
            let v = numbers(e, a)?;
            if v.len() < 2 || v.len() > 3 {
                return Err(parse_error(e.line, "bump expects `bump:center,width[,height]`"));
            }
            Ok(InitialSpec::Bump {
                center: v[0],
                width: v[1],
                height: v.get(2).copied(),
            })
        }
        ("csv", Some(p)) => Ok(InitialSpec::Csv(PathBuf::from(p))),
        _ => Err(parse_error(
            e.line,
            format!(
                "unknown u0 `{}` (expected equilibrium, scaled_equilibrium:c, boundary_tail, bump[:c,w[,h]] or csv:path)",
                e.value
            ),
        )),
    }
}

/// Parses and validates a config; relative paths resolve against `base`.
pub fn parse_config_in(text: &str, base: &Path) -> Result<RunConfig> {
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| parse_error(line, format!("expected `key = value`, got `{content}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(parse_error(line, format!("unknown key `{key}`")));
        }
        if value.is_empty() {
            return Err(parse_error(line, format!("`{key}` has no value")));
        }
        if !seen.insert(key) {
            return Err(parse_error(line, format!("duplicate key `{key}`")));
        }
        entries.push(Entry { line, key, value });
    }

    let mut alpha = None;
    let mut mu = None;
    let mut kernel_type = None;
    let (mut tau, mut kappa, mut n) = (None, None, None);
    let (mut kpath, mut support_end) = (None, None);
    let mut cfg_dt = DEFAULT_DT;
    let mut cfg_t = DEFAULT_HORIZON;
    let mut max_age = None;
    let mut u0 = InitialSpec::Bump {
        center: 2.0,
        width: 1.5,
        height: None,
    };
    let mut sweep_param = None;
    let (mut lo, mut hi, mut steps) = (None, None, None);
    let mut k_max = DEFAULT_K_MAX;
    let mut spectrum = DEFAULT_SPECTRUM.to_vec();
    let mut out = PathBuf::from(".");
    let mut tol = Tolerances::default();

    for e in &entries {
        match e.key {
            "alpha" => alpha = Some(number(e)?),
            "mu" => mu = Some(number(e)?),
            "kernel.type" => kernel_type = Some((e.line, e.value)),
            "kernel.tau" => tau = Some(number(e)?),
            "kernel.kappa" => kappa = Some(number(e)?),
            "kernel.n" => n = Some(integer(e)?),
            "kernel.path" => kpath = Some(base.join(e.value)),
            "kernel.support_end" => support_end = Some(number(e)?),
            "dt" => cfg_dt = number(e)?,
            "T" => cfg_t = number(e)?,
            "A_max" => max_age = Some(number(e)?),
            "u0" => {
                u0 = match parse_initial(e)? {
                    InitialSpec::Csv(p) => InitialSpec::Csv(base.join(p)),
                    other => other,
                }
            }
            "sweep.param" => sweep_param = Some(e.value),
            "sweep.lo" => lo = Some(number(e)?),
            "sweep.hi" => hi = Some(number(e)?),
            "sweep.steps" => steps = Some(integer(e)? as usize),
            "hopf.k_max" => k_max = integer(e)?,
            "spectrum.m" => spectrum = numbers(e, e.value)?,
            "out" => out = base.join(e.value),
            "tol.final_error" => tol.final_error = number(e)?,
            "tol.lyapunov_slack" => tol.lyapunov_slack = number(e)?,
            "tol.dissipativity" => tol.dissipativity = number(e)?,
            "tol.amplitude_fraction" => tol.amplitude_fraction = number(e)?,
            "tol.sandwich" => tol.sandwich = number(e)?,
            _ => unreachable!("key list and match arms agree"),
        }
    }

    let mu = mu.ok_or_else(|| CliError::validation("mu", "is required"))?;
    let kernel = match kernel_type {
        None => return Err(CliError::validation("kernel.type", "is required")),
        Some((_, "shifted_gamma")) => KernelSpec::ShiftedGamma {
            tau: tau.ok_or_else(|| CliError::validation("kernel.tau", "is required for shifted_gamma"))?,
            kappa: kappa.unwrap_or(0.0),
            n: n.unwrap_or(0),
        },
        Some((_, "tabulated")) => KernelSpec::Tabulated {
            path: kpath.ok_or_else(|| CliError::validation("kernel.path", "is required for tabulated"))?,
            support_end,
        },
        Some((line, other)) => {
            return Err(parse_error(
                line,
                format!("unknown kernel.type `{other}` (expected shifted_gamma or tabulated)"),
            ))
        }
    };
    let sweep = match (sweep_param, lo, hi, steps) {
        (None, None, None, None) => None,
        (p, lo, hi, steps) => {
            if let Some(p) = p {
                if p != "alpha" {
                    return Err(CliError::validation("sweep.param", format!("only `alpha` can be swept, got `{p}`")));
                }
            }
            Some(SweepSpec {
                lo: lo.ok_or_else(|| CliError::validation("sweep.lo", "is required for a sweep"))?,
                hi: hi.ok_or_else(|| CliError::validation("sweep.hi", "is required for a sweep"))?,
                steps: steps.ok_or_else(|| CliError::validation("sweep.steps", "is required for a sweep"))?,
            })
        }
    };

    let cfg = RunConfig {
        alpha,
        mu,
        kernel,
        dt: cfg_dt,
        horizon: cfg_t,
        max_age,
        u0,
        sweep,
        hopf_k_max: k_max,
        spectrum_m: spectrum,
        out,
        tol,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_in(text, Path::new("."))
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config_in(&text, base)
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CliError::validation(field, format!("must be positive, got {v}")))
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(a) = self.alpha {
            positive("alpha", a)?;
        }
        positive("mu", self.mu)?;
        positive("dt", self.dt)?;
        positive("T", self.horizon)?;
        if self.horizon < self.dt {
            return Err(CliError::validation("T", format!("must be at least dt = {}", self.dt)));
        }
        if let Some(a) = self.max_age {
            positive("A_max", a)?;
        }
        match &self.kernel {
            KernelSpec::ShiftedGamma { tau, kappa, n } => {
                positive("kernel.tau", *tau)?;
                if !(kappa.is_finite() && *kappa >= 0.0) {
                    return Err(CliError::validation("kernel.kappa", format!("must be non-negative, got {kappa}")));
                }
                if *kappa == 0.0 && *n > 0 {
                    return Err(CliError::validation("kernel.n", "must be 0 when kernel.kappa = 0"));
                }
            }
            KernelSpec::Tabulated { path, support_end } => {
                if !path.is_file() {
                    return Err(CliError::validation("kernel.path", format!("{} does not exist", path.display())));
                }
                if let Some(s) = support_end {
                    positive("kernel.support_end", *s)?;
                }
            }
        }
        match &self.u0 {
            InitialSpec::ScaledEquilibrium(c) if !(c.is_finite() && *c >= 0.0) => {
                return Err(CliError::validation("u0", format!("scale must be non-negative, got {c}")));
            }
            InitialSpec::Bump { width, height, center } => {
                positive("u0", *width)?;
                if !(center.is_finite() && *center >= 0.0) || height.is_some_and(|h| !(h.is_finite() && h >= 0.0)) {
                    return Err(CliError::validation("u0", "bump center and height must be non-negative"));
                }
            }
            InitialSpec::Csv(p) if !p.is_file() => {
                return Err(CliError::validation("u0", format!("{} does not exist", p.display())));
            }
            _ => {}
        }
        if let Some(s) = &self.sweep {
            if !(s.lo.is_finite() && s.lo > 0.0) {
                return Err(CliError::validation("sweep.lo", format!("must be positive, got {}", s.lo)));
            }
            if !(s.hi.is_finite() && s.hi >= s.lo) {
                return Err(CliError::validation("sweep.hi", format!("must be >= sweep.lo, got {}", s.hi)));
            }
        }
        if self.spectrum_m.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
            return Err(CliError::validation("spectrum.m", "multipliers must be positive"));
        }
        for (field, v) in [
            ("tol.final_error", self.tol.final_error),
            ("tol.lyapunov_slack", self.tol.lyapunov_slack),
            ("tol.dissipativity", self.tol.dissipativity),
            ("tol.sandwich", self.tol.sandwich),
        ] {
            positive(field, v)?;
        }
        if !(self.tol.amplitude_fraction > 0.0 && self.tol.amplitude_fraction <= 0.5) {
            return Err(CliError::validation("tol.amplitude_fraction", "must lie in (0, 0.5]"));
        }
        Ok(())
    }

    pub fn alpha(&self) -> Result<f64> {
        self.alpha.ok_or_else(|| CliError::validation("alpha", "is required for this subcommand"))
    }

    pub fn gamma_shape(&self) -> Result<GammaShape> {
        match self.kernel {
            KernelSpec::ShiftedGamma { tau, kappa, n } => Ok(GammaShape::new(tau, kappa, n)),
            KernelSpec::Tabulated { .. } => Err(CliError::validation(
                "kernel.type",
                "Hopf analysis needs a shifted_gamma kernel",
            )),
        }
    }

    pub fn build_kernel(&self) -> Result<BirthKernel> {
        match &self.kernel {
            KernelSpec::ShiftedGamma { tau, kappa, n } => {
                Ok(BirthKernel::shifted_gamma(GammaShape::new(*tau, *kappa, *n), self.mu)?)
            }
            KernelSpec::Tabulated { path, support_end } => {
                let pairs = read_pairs(path)?;
                Ok(BirthKernel::from_pairs(&pairs, *support_end, self.mu)?)
            }
        }
    }

    /// Initial profile on the `dt` age grid for the given `alpha`.
    pub fn build_initial(&self, alpha: f64, kernel: &BirthKernel) -> Result<AgeProfile> {
        let dt = self.dt;
        let mu = self.mu;
        let span = |extra: f64| self.max_age.unwrap_or((30.0 / mu).max(extra));
        let equilibrium = |c: f64| -> Result<AgeProfile> {
            if !(alpha > 1.0) {
                return Err(CliError::validation(
                    "u0",
                    format!("equilibrium-based u0 needs alpha > 1, got {alpha}"),
                ));
            }
            let eq = alpha.ln();
            Ok(AgeProfile::from_fn(dt, span(0.0), |a| c * eq * (-mu * a).exp())?)
        };
        let profile = match &self.u0 {
            InitialSpec::Equilibrium => equilibrium(1.0)?,
            InitialSpec::ScaledEquilibrium(c) => equilibrium(*c)?,
            InitialSpec::BoundaryTail => {
                let a_star = kernel.reproductive_horizon();
                if !a_star.is_finite() {
                    return Err(CliError::validation(
                        "u0",
                        "boundary_tail needs a kernel with finite reproductive horizon (tabulated)",
                    ));
                }
                let (lo, hi) = (a_star + 1.0, a_star + 5.0);
                AgeProfile::from_fn(dt, span(hi), |a| if a >= lo && a <= hi { 1.0 } else { 0.0 })?
            }
            InitialSpec::Bump { center, width, height } => {
                let h = height.unwrap_or(if alpha > 1.0 { 2.0 * alpha.ln() } else { 1.0 });
                AgeProfile::from_fn(dt, span(center + width), |a| {
                    let z = (a - center) / width;
                    if z.abs() < 1.0 {
                        h * (1.0 - z * z).powi(2)
                    } else {
                        0.0
                    }
                })?
            }
            InitialSpec::Csv(path) => {
                let pairs = read_pairs(path)?;
                if pairs.len() < 2 || pairs[0].0.abs() > 1e-12 {
                    return Err(CliError::Data {
                        path: path.clone(),
                        message: "need at least two rows with ages starting at 0".into(),
                    });
                }
                let step = pairs[1].0;
                let raw = AgeProfile::new(step, pairs.iter().map(|p| p.1).collect())?;
                let resampled = raw.resample(dt)?;
                match self.max_age {
                    Some(a) => resampled.truncated(a),
                    None => resampled,
                }
            }
        };
        if let Some(a) = self.max_age {
            let needed = profile.support_end();
            if a + 1e-12 < needed {
                return Err(CliError::validation(
                    "A_max",
                    format!("{a} is below the support of u0 ({needed})"),
                ));
            }
        }
        Ok(profile)
    }

    /// Age grid extent used for simulations.
    pub fn simulation_age(&self, kernel: &BirthKernel, u0: &AgeProfile) -> f64 {
        self.max_age.unwrap_or_else(|| default_max_age(kernel, u0))
    }

    pub fn in_gas_regime(alpha: f64) -> bool {
        alpha > 1.0 && alpha <= E * E
    }
}

/// Two-column numeric CSV; a non-numeric first row is treated as a header.
pub fn read_pairs(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| CliError::Data {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Data {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        if rec.len() != 2 {
            return Err(CliError::Data {
                path: path.to_path_buf(),
                message: format!("row {} has {} columns, expected 2", i + 1, rec.len()),
            });
        }
        match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
            (Ok(a), Ok(v)) => out.push((a, v)),
            _ if i == 0 => continue,
            _ => {
                return Err(CliError::Data {
                    path: path.to_path_buf(),
                    message: format!("row {} is not numeric", i + 1),
                })
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "alpha = 2\nmu = 1\nkernel.type = shifted_gamma\nkernel.tau = 1\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.alpha, Some(2.0));
        assert_eq!(c.dt, DEFAULT_DT);
        assert_eq!(c.horizon, DEFAULT_HORIZON);
        assert_eq!(c.kernel, KernelSpec::ShiftedGamma { tau: 1.0, kappa: 0.0, n: 0 });
        assert_eq!(c.tol, Tolerances::default());
        assert!(c.sweep.is_none());
    }

    #[test]
    fn negative_alpha_names_field() {
        let err = parse_config(&MINIMAL.replace("alpha = 2", "alpha = -1")).unwrap_err();
        assert!(matches!(err, CliError::Validation { ref field, .. } if field == "alpha"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = parse_config(&format!("{MINIMAL}# comment\nbogus = 3\n")).unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 6, .. }), "{err}");
    }

    #[test]
    fn malformed_and_duplicate_lines() {
        assert!(matches!(parse_config("alpha 2").unwrap_err(), CliError::Parse { line: 1, .. }));
        let dup = format!("{MINIMAL}alpha = 3\n");
        assert!(matches!(parse_config(&dup).unwrap_err(), CliError::Parse { line: 5, .. }));
        let bad = MINIMAL.replace("alpha = 2", "alpha = two");
        assert!(matches!(parse_config(&bad).unwrap_err(), CliError::Parse { line: 1, .. }));
    }

    #[test]
    fn kappa_zero_needs_n_zero() {
        let err = parse_config(&format!("{MINIMAL}kernel.n = 2\n")).unwrap_err();
        assert!(matches!(err, CliError::Validation { ref field, .. } if field == "kernel.n"));
    }

    #[test]
    fn u0_presets_parse() {
        let with = |s: &str| parse_config(&format!("{MINIMAL}u0 = {s}\n")).map(|c| c.u0);
        assert_eq!(with("equilibrium").unwrap(), InitialSpec::Equilibrium);
        assert_eq!(with("scaled_equilibrium:1.05").unwrap(), InitialSpec::ScaledEquilibrium(1.05));
        assert_eq!(
            with("bump:3,1,0.5").unwrap(),
            InitialSpec::Bump { center: 3.0, width: 1.0, height: Some(0.5) }
        );
        assert!(matches!(with("triangle"), Err(CliError::Parse { .. })));
        assert!(matches!(with("csv:/nonexistent.csv"), Err(CliError::Validation { .. })));
    }

    #[test]
    fn sweep_values() {
        let s = SweepSpec { lo: 1.0, hi: 2.0, steps: 5 };
        assert_eq!(s.values(), vec![1.0, 1.25, 1.5, 1.75, 2.0]);
        assert!(SweepSpec { lo: 1.0, hi: 2.0, steps: 0 }.values().is_empty());
        let err = parse_config(&format!("{MINIMAL}sweep.lo = 3\nsweep.hi = 2\nsweep.steps = 4\n")).unwrap_err();
        assert!(matches!(err, CliError::Validation { ref field, .. } if field == "sweep.hi"));
    }

    #[test]
    fn equilibrium_initial_needs_alpha_above_one() {
        let c = parse_config(&format!("{MINIMAL}u0 = equilibrium\n")).unwrap();
        let k = c.build_kernel().unwrap();
        assert!(c.build_initial(0.5, &k).is_err());
        let p = c.build_initial(E, &k).unwrap();
        assert!((p.values[0] - 1.0).abs() < 1e-15);
    }
}
