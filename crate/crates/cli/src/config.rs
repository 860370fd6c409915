//! `key=value` run configuration.

use std::fmt::Write as _;
use std::path::PathBuf;

use lossy_helmholtz::Inclusion;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: key `{key}`: {msg}")]
    Invalid {
        line: usize,
        key: String,
        msg: String,
    },
    #[error("command line: key `{key}`: {msg}")]
    InvalidOverride { key: String, msg: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: expected `key=value`")]
    Syntax { line: usize },
    #[error("missing required key `{key}`")]
    Missing { key: String },
    #[error("invalid grid: key `n`: {0}")]
    InvalidGrid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Problem {
    Dirichlet,
    Robin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeSelect {
    Both,
    RealPrimal,
    ImagPrimal,
}

/// Dirichlet boundary data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Case {
    /// Plane wave `exp(2ix + by)` with `b` chosen so it solves the equation
    /// for the configured constant material.
    Manufactured,
    /// Constant boundary value.
    Constant(Complex64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Driver {
    Solve,
    Study,
    Diagnostics,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairSelect {
    Real,
    Imag,
    Complex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Squared,
    Norm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InclusionSpec {
    pub region: Inclusion,
    pub rho: Complex64,
    pub kappa: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StudyRange {
    pub start: usize,
    pub end: usize,
    pub step: usize,
}

impl StudyRange {
    pub fn sizes(&self) -> Vec<usize> {
        (self.start..=self.end).step_by(self.step).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub driver: Driver,
    pub problem: Problem,
    pub mode: ModeSelect,
    pub n: usize,
    pub omega: f64,
    pub rho: Complex64,
    pub kappa: Complex64,
    pub inclusion: Option<InclusionSpec>,
    pub case: Case,
    pub robin_a: Complex64,
    pub robin_g: Complex64,
    pub periodic: bool,
    pub tol: f64,
    pub maxit: Option<usize>,
    pub precondition: bool,
    pub parallel: bool,
    pub eval_n: usize,
    pub pair: PairSelect,
    pub error: ErrorKind,
    pub study: StudyRange,
    pub lanczos_steps: usize,
    pub out: PathBuf,
}

const KEYS: &[&str] = &[
    "driver",
    "bc",
    "mode",
    "n",
    "omega",
    "rho",
    "kappa",
    "inclusion",
    "rho_in",
    "kappa_in",
    "case",
    "dirichlet_value",
    "robin_a",
    "robin_g",
    "periodic",
    "tol",
    "maxit",
    "precond",
    "parallel",
    "eval_n",
    "pair",
    "error",
    "study",
    "lanczos_steps",
    "out",
];

/// One `key=value` assignment; `line == 0` marks a command-line override.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

impl Entry {
    pub fn override_(key: &str, value: impl Into<String>) -> Self {
        Self {
            line: 0,
            key: key.to_string(),
            value: value.into(),
        }
    }

    fn err(&self, msg: impl Into<String>) -> ConfigError {
        if self.line == 0 {
            ConfigError::InvalidOverride {
                key: self.key.clone(),
                msg: msg.into(),
            }
        } else {
            ConfigError::Invalid {
                line: self.line,
                key: self.key.clone(),
                msg: msg.into(),
            }
        }
    }
}

/// Splits config text into entries. Blank lines and `#` comments are skipped.
pub fn parse_entries(text: &str) -> Result<Vec<Entry>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or(ConfigError::Syntax { line })?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.to_string(),
            });
        }
        out.push(Entry {
            line,
            key: key.to_string(),
            value: value.trim().to_string(),
        });
    }
    Ok(out)
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    RunConfig::from_entries(&parse_entries(text)?)
}

/// Parses `a`, `bi`, `a+bi` or `a-bi` (exponents allowed in either part).
pub fn parse_complex(s: &str) -> Option<Complex64> {
    let s = s.trim();
    let Some(body) = s.strip_suffix('i') else {
        return finite(s.parse().ok()?).map(|re| Complex64::new(re, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (finite(body[..k].parse().ok()?)?, &body[k..]),
        None => (0.0, body),
    };
    let (neg, mag) = match im.as_bytes().first() {
        Some(b'-') => (true, &im[1..]),
        Some(b'+') => (false, &im[1..]),
        _ => (false, im),
    };
    if mag.starts_with(['+', '-']) {
        return None;
    }
    let mag: f64 = if mag.is_empty() {
        1.0
    } else {
        finite(mag.parse().ok()?)?
    };
    Some(Complex64::new(re, if neg { -mag } else { mag }))
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// Inverse of [`parse_complex`], exact for finite values.
pub fn format_complex(z: Complex64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{:?}{sign}{:?}i", z.re, z.im.abs())
}

fn floats(e: &Entry, words: &[&str]) -> Result<Vec<f64>, ConfigError> {
    words
        .iter()
        .map(|w| {
            w.parse::<f64>()
                .ok()
                .and_then(finite)
                .ok_or_else(|| e.err(format!("bad number `{w}`")))
        })
        .collect()
}

fn parse_inclusion(e: &Entry) -> Result<Inclusion, ConfigError> {
    let words: Vec<&str> = e.value.split_whitespace().collect();
    match words.as_slice() {
        ["disc", rest @ ..] if rest.len() == 3 => {
            let v = floats(e, rest)?;
            if v[2] <= 0.0 {
                return Err(e.err("radius must be positive"));
            }
            Ok(Inclusion::Disc {
                center: [v[0], v[1]],
                radius: v[2],
            })
        }
        ["bar", rest @ ..] if rest.len() == 5 => {
            let v = floats(e, rest)?;
            if v[4] <= 0.0 {
                return Err(e.err("width must be positive"));
            }
            Ok(Inclusion::Bar {
                start: [v[0], v[1]],
                end: [v[2], v[3]],
                width: v[4],
            })
        }
        _ => Err(e.err("expected `disc cx cy r` or `bar x0 y0 x1 y1 w`")),
    }
}

fn format_inclusion(r: &Inclusion) -> String {
    match r {
        Inclusion::Disc { center, radius } => {
            format!("disc {:?} {:?} {:?}", center[0], center[1], radius)
        }
        Inclusion::Bar { start, end, width } => {
            format!(
                "bar {:?} {:?} {:?} {:?} {:?}",
                start[0], start[1], end[0], end[1], width
            )
        }
    }
}

pub fn parse_study(s: &str) -> Option<StudyRange> {
    let parts: Vec<usize> = s
        .split(':')
        .map(|p| p.trim().parse().ok())
        .collect::<Option<_>>()?;
    match parts.as_slice() {
        &[start, end, step] if step > 0 && start <= end => Some(StudyRange { start, end, step }),
        _ => None,
    }
}

fn parse_bool(e: &Entry) -> Result<bool, ConfigError> {
    match e.value.as_str() {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(e.err("expected on/off")),
    }
}

fn choice<T: Copy>(e: &Entry, table: &[(&str, T)]) -> Result<T, ConfigError> {
    table
        .iter()
        .find(|(k, _)| *k == e.value)
        .map(|(_, v)| *v)
        .ok_or_else(|| {
            let names: Vec<&str> = table.iter().map(|(k, _)| *k).collect();
            e.err(format!("expected one of {}", names.join(", ")))
        })
}

const DRIVERS: &[(&str, Driver)] = &[
    ("solve", Driver::Solve),
    ("study", Driver::Study),
    ("diagnostics", Driver::Diagnostics),
];
const PROBLEMS: &[(&str, Problem)] =
    &[("dirichlet", Problem::Dirichlet), ("robin", Problem::Robin)];
const MODES: &[(&str, ModeSelect)] = &[
    ("both", ModeSelect::Both),
    ("real-primal", ModeSelect::RealPrimal),
    ("imag-primal", ModeSelect::ImagPrimal),
];
const PAIRS: &[(&str, PairSelect)] = &[
    ("real", PairSelect::Real),
    ("imag", PairSelect::Imag),
    ("complex", PairSelect::Complex),
];
const ERRORS: &[(&str, ErrorKind)] = &[("squared", ErrorKind::Squared), ("norm", ErrorKind::Norm)];

fn name_of<T: PartialEq>(table: &[(&'static str, T)], v: &T) -> &'static str {
    table
        .iter()
        .find(|(_, t)| t == v)
        .map(|(k, _)| *k)
        .expect("every variant is named")
}

impl RunConfig {
    /// Applies entries in order (later ones win) over the defaults, then validates.
    pub fn from_entries(entries: &[Entry]) -> Result<Self, ConfigError> {
        let mut c = RunConfig {
            driver: Driver::Solve,
            problem: Problem::Dirichlet,
            mode: ModeSelect::Both,
            n: 0,
            omega: 2.0,
            rho: Complex64::new(-5.0, 5.0),
            kappa: Complex64::new(4.0, -4.0),
            inclusion: None,
            case: Case::Manufactured,
            robin_a: Complex64::new(-1.0, 0.0),
            robin_g: Complex64::new(0.0, 0.0),
            periodic: false,
            tol: 1e-8,
            maxit: None,
            precondition: true,
            parallel: true,
            eval_n: 1500,
            pair: PairSelect::Real,
            error: ErrorKind::Squared,
            study: StudyRange {
                start: 30,
                end: 100,
                step: 10,
            },
            lanczos_steps: 80,
            out: PathBuf::from("out"),
        };
        let mut have_n = false;
        let mut region = None;
        let mut rho_in = None;
        let mut kappa_in = None;
        let mut case_name: Option<&Entry> = None;
        let mut value = None;

        for e in entries {
            let v = e.value.as_str();
            let complex =
                || parse_complex(v).ok_or_else(|| e.err(format!("bad complex literal `{v}`")));
            let real = || {
                v.parse::<f64>()
                    .ok()
                    .and_then(finite)
                    .ok_or_else(|| e.err(format!("bad number `{v}`")))
            };
            let count = || {
                v.parse::<usize>()
                    .map_err(|_| e.err(format!("bad integer `{v}`")))
            };
            match e.key.as_str() {
                "driver" => c.driver = choice(e, DRIVERS)?,
                "bc" => c.problem = choice(e, PROBLEMS)?,
                "mode" => c.mode = choice(e, MODES)?,
                "n" => {
                    c.n = count()?;
                    have_n = true;
                }
                "omega" => {
                    c.omega = real()?;
                    if c.omega <= 0.0 {
                        return Err(e.err("must be positive"));
                    }
                }
                "rho" => c.rho = complex()?,
                "kappa" => c.kappa = complex()?,
                "inclusion" => region = Some(parse_inclusion(e)?),
                "rho_in" => rho_in = Some(complex()?),
                "kappa_in" => kappa_in = Some(complex()?),
                "case" => {
                    if !matches!(v, "manufactured" | "constant") {
                        return Err(e.err("expected manufactured or constant"));
                    }
                    case_name = Some(e);
                }
                "dirichlet_value" => value = Some(complex()?),
                "robin_a" => {
                    c.robin_a = complex()?;
                    if c.robin_a.re == 0.0 {
                        return Err(e.err("real part must be nonzero"));
                    }
                }
                "robin_g" => c.robin_g = complex()?,
                "periodic" => c.periodic = parse_bool(e)?,
                "tol" => {
                    c.tol = real()?;
                    if c.tol <= 0.0 {
                        return Err(e.err("must be positive"));
                    }
                }
                "maxit" => {
                    c.maxit = match v {
                        "auto" => None,
                        _ => Some(count()?),
                    }
                }
                "precond" => c.precondition = parse_bool(e)?,
                "parallel" => c.parallel = parse_bool(e)?,
                "eval_n" => {
                    c.eval_n = count()?;
                    if c.eval_n < 2 {
                        return Err(e.err("must be at least 2"));
                    }
                }
                "pair" => c.pair = choice(e, PAIRS)?,
                "error" => c.error = choice(e, ERRORS)?,
                "study" => {
                    c.study = parse_study(v).ok_or_else(|| e.err("expected `start:end:step`"))?;
                    if c.study.start < 3 {
                        return Err(e.err("sizes must be at least 3"));
                    }
                }
                "lanczos_steps" => c.lanczos_steps = count()?,
                "out" => c.out = PathBuf::from(v),
                other => {
                    return Err(ConfigError::UnknownKey {
                        line: e.line,
                        key: other.to_string(),
                    })
                }
            }
        }

        if !have_n && c.driver == Driver::Study {
            // the study sizes replace the single grid size
            c.n = c.study.start;
        } else if !have_n {
            return Err(ConfigError::Missing { key: "n".into() });
        }
        if c.n < 3 {
            return Err(ConfigError::InvalidGrid(format!(
                "N = {} but at least 3 nodes per side are needed",
                c.n
            )));
        }
        if let Some(region) = region {
            let missing = |k: &str| ConfigError::Missing { key: k.into() };
            c.inclusion = Some(InclusionSpec {
                region,
                rho: rho_in.ok_or_else(|| missing("rho_in"))?,
                kappa: kappa_in.ok_or_else(|| missing("kappa_in"))?,
            });
        }
        if let Some(e) = case_name {
            c.case = match e.value.as_str() {
                "constant" => Case::Constant(value.ok_or(ConfigError::Missing {
                    key: "dirichlet_value".into(),
                })?),
                _ => Case::Manufactured,
            };
        }
        Ok(c)
    }

    /// Canonical text form; `parse_config(&c.to_config_text())` returns `c`.
    pub fn to_config_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        put("driver", name_of(DRIVERS, &self.driver).into());
        put("bc", name_of(PROBLEMS, &self.problem).into());
        put("mode", name_of(MODES, &self.mode).into());
        put("n", self.n.to_string());
        put("omega", format!("{:?}", self.omega));
        put("rho", format_complex(self.rho));
        put("kappa", format_complex(self.kappa));
        if let Some(inc) = &self.inclusion {
            put("inclusion", format_inclusion(&inc.region));
            put("rho_in", format_complex(inc.rho));
            put("kappa_in", format_complex(inc.kappa));
        }
        match self.case {
            Case::Manufactured => put("case", "manufactured".into()),
            Case::Constant(z) => {
                put("case", "constant".into());
                put("dirichlet_value", format_complex(z));
            }
        }
        put("robin_a", format_complex(self.robin_a));
        put("robin_g", format_complex(self.robin_g));
        put("periodic", self.periodic.to_string());
        put("tol", format!("{:?}", self.tol));
        put("maxit", self.maxit.map_or("auto".into(), |m| m.to_string()));
        put("precond", self.precondition.to_string());
        put("parallel", self.parallel.to_string());
        put("eval_n", self.eval_n.to_string());
        put("pair", name_of(PAIRS, &self.pair).into());
        put("error", name_of(ERRORS, &self.error).into());
        put(
            "study",
            format!(
                "{}:{}:{}",
                self.study.start, self.study.end, self.study.step
            ),
        );
        put("lanczos_steps", self.lanczos_steps.to_string());
        put("out", self.out.display().to_string());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_run() {
        let c =
            parse_config("n=30\nomega=2\nrho=-5+5i\nkappa=4-4i\nbc=dirichlet\ncase=manufactured")
                .unwrap();
        assert_eq!(c.n, 30);
        assert_eq!(c.rho, Complex64::new(-5.0, 5.0));
        assert_eq!(c.kappa, Complex64::new(4.0, -4.0));
        assert_eq!(c.problem, Problem::Dirichlet);
        assert_eq!(c.case, Case::Manufactured);
        assert_eq!(c.tol, 1e-8);
        assert!(c.precondition);
        assert_eq!(c.eval_n, 1500);
    }

    #[test]
    fn empty_text_needs_n() {
        assert_eq!(
            parse_config(""),
            Err(ConfigError::Missing { key: "n".into() })
        );
        assert_eq!(
            parse_config("# nothing\n\n"),
            Err(ConfigError::Missing { key: "n".into() })
        );
    }

    #[test]
    fn study_does_not_need_n() {
        assert_eq!(parse_config("driver=study\nstudy=20:40:10").unwrap().n, 20);
    }

    #[test]
    fn tiny_grid_rejected() {
        assert!(matches!(
            parse_config("n=2"),
            Err(ConfigError::InvalidGrid(_))
        ));
    }

    #[test]
    fn errors_name_line_and_key() {
        let e = parse_config("n=10\n\nkappa=4-4j").unwrap_err();
        assert_eq!(
            e.to_string(),
            "line 3: key `kappa`: bad complex literal `4-4j`"
        );
        let e = parse_config("n=10\nfoo=1").unwrap_err();
        assert_eq!(e.to_string(), "line 2: unknown key `foo`");
        let e = parse_config("n=10\ntol=-1").unwrap_err();
        assert!(e.to_string().starts_with("line 2: key `tol`"));
        let e = parse_config("n=10\ninclusion=disc 0.5 0.5 0.2\nrho_in=2").unwrap_err();
        assert_eq!(
            e,
            ConfigError::Missing {
                key: "kappa_in".into()
            }
        );
        assert!(matches!(
            parse_config("n=10\njunk"),
            Err(ConfigError::Syntax { line: 2 })
        ));
    }

    #[test]
    fn comments_and_whitespace() {
        let c = parse_config("  n = 12  # grid\n# omega=9\nomega=3 ").unwrap();
        assert_eq!((c.n, c.omega), (12, 3.0));
    }

    #[test]
    fn complex_literals() {
        let c = |re, im| Some(Complex64::new(re, im));
        assert_eq!(parse_complex("-5+5i"), c(-5.0, 5.0));
        assert_eq!(parse_complex("4-4i"), c(4.0, -4.0));
        assert_eq!(parse_complex("1+.011i"), c(1.0, 0.011));
        assert_eq!(parse_complex("3.33i"), c(0.0, 3.33));
        assert_eq!(parse_complex("-i"), c(0.0, -1.0));
        assert_eq!(parse_complex("2"), c(2.0, 0.0));
        assert_eq!(parse_complex("1e-3-2.5e+2i"), c(1e-3, -250.0));
        for bad in ["", "i+1", "1+-2i", "abc", "1+2", "inf", "nan+1i", "1++i"] {
            assert_eq!(parse_complex(bad), None, "{bad}");
        }
    }

    #[test]
    fn inclusion_grammar() {
        let c = parse_config("n=10\ninclusion=bar 0.1 0.2 0.9 0.8 0.05\nrho_in=2\nkappa_in=1-1i")
            .unwrap();
        let inc = c.inclusion.unwrap();
        assert_eq!(
            inc.region,
            Inclusion::Bar {
                start: [0.1, 0.2],
                end: [0.9, 0.8],
                width: 0.05
            }
        );
        assert!(parse_config("n=10\ninclusion=disc 0.5 0.5").is_err());
        assert!(parse_config("n=10\ninclusion=square 0 0 1").is_err());
    }

    #[test]
    fn study_range() {
        assert_eq!(parse_study("30:100:10").unwrap().sizes().len(), 8);
        assert_eq!(parse_study("30:100:0"), None);
        assert_eq!(parse_study("40:30:5"), None);
    }

    #[test]
    fn later_entries_override() {
        let mut es = parse_entries("n=10\ntol=1e-4").unwrap();
        es.push(Entry::override_("tol", "1e-6"));
        assert_eq!(RunConfig::from_entries(&es).unwrap().tol, 1e-6);
        es.push(Entry::override_("tol", "zero"));
        assert_eq!(
            RunConfig::from_entries(&es).unwrap_err().to_string(),
            "command line: key `tol`: bad number `zero`"
        );
    }

    #[test]
    fn round_trip_full_config() {
        let text = "n=60\nbc=robin\nperiodic=on\ninclusion=disc 0.5 0.5 0.2\nrho=1+0.011i\nkappa=1-0.011i\n\
                    rho_in=2+0.011i\nkappa_in=1-0.011i\nrobin_a=-1+0.333i\nrobin_g=3.33i\nomega=10\n\
                    maxit=500\nprecond=off\nmode=imag-primal\nout=a/b\ncase=constant\ndirichlet_value=-0.0-0.0i";
        let c = parse_config(text).unwrap();
        assert_eq!(parse_config(&c.to_config_text()).unwrap(), c);
    }
}
