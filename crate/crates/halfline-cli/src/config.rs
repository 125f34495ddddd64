//! TOML run configuration. Every table rejects unknown keys.

use halfline::model::{BoundaryParam, Samples};
use halfline::testfn::TestFunction;
use halfline::{Complex64, Potential, Problem};
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: Option<ProblemSpec>,
    #[serde(default)]
    pub m: MConfig,
    #[serde(default)]
    pub amplitude: AmplitudeConfig,
    #[serde(default)]
    pub laplace: LaplaceConfig,
    #[serde(default)]
    pub invert: InvertConfig,
    #[serde(default)]
    pub rho: RhoConfig,
    #[serde(default)]
    pub bridge: BridgeConfig,
    #[serde(default)]
    pub scatter: ScatterConfig,
    #[serde(default)]
    pub hbc: HbcConfig,
    #[serde(default)]
    pub probe: ProbeConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    Zero,
    Constant,
    Sampled,
    BargmannOneEigenvalue,
    BargmannResonance,
}

#[derive(Debug, Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
    Robin,
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub potential: PotentialKind,
    pub q0: Option<f64>,
    pub kappa1: Option<f64>,
    pub c1: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    /// Two-column CSV `x,q`, relative to the config file.
    pub table: Option<PathBuf>,
    /// Cut q to zero beyond this point.
    pub cutoff: Option<f64>,
    /// Right endpoint; absent for the half-line.
    pub b: Option<f64>,
    pub boundary: Option<BoundaryKind>,
    /// Robin parameter at b.
    pub h: Option<f64>,
}

/// A κ given as a real number or as `[re, im]`.
#[derive(Debug, Deserialize, Clone, Copy)]
#[serde(untagged)]
pub enum KappaSpec {
    Real(f64),
    Complex([f64; 2]),
}

impl KappaSpec {
    pub fn value(self) -> Complex64 {
        match self {
            KappaSpec::Real(r) => Complex64::new(r, 0.0),
            KappaSpec::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

/// `count` points `r e^{i arg}` with r log-spaced on `[from, to]`.
#[derive(Debug, Deserialize, Clone, Copy)]
#[serde(deny_unknown_fields)]
pub struct Ray {
    pub arg: f64,
    pub from: f64,
    pub to: f64,
    pub count: usize,
}

impl Ray {
    pub fn points(&self) -> Vec<Complex64> {
        let n = self.count.max(1);
        (0..n)
            .map(|i| {
                let t = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
                let r = self.from * (self.to / self.from).powf(t);
                Complex64::from_polar(r, self.arg)
            })
            .collect()
    }
}

fn kappa_list(list: &[KappaSpec], ray: Option<Ray>, default: &[f64]) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = list.iter().map(|k| k.value()).collect();
    if let Some(r) = ray {
        out.extend(r.points());
    }
    if out.is_empty() {
        out = default.iter().map(|&k| Complex64::new(k, 0.0)).collect();
    }
    out
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct MConfig {
    #[serde(default)]
    pub kappas: Vec<KappaSpec>,
    pub ray: Option<Ray>,
    /// Comparison point and window for the a-priori bounds.
    pub a: Option<f64>,
    pub delta: Option<f64>,
}

impl MConfig {
    pub fn kappas(&self) -> Vec<Complex64> {
        kappa_list(&self.kappas, self.ray, &[1.0, 2.0, 5.0, 10.0])
    }
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct AmplitudeConfig {
    pub a: Option<f64>,
    pub d_alpha: Option<f64>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct LaplaceConfig {
    pub a: Option<f64>,
    pub d_alpha: Option<f64>,
    #[serde(default)]
    pub kappas: Vec<KappaSpec>,
    pub ray: Option<Ray>,
}

impl LaplaceConfig {
    pub fn kappas(&self) -> Vec<Complex64> {
        kappa_list(&self.kappas, self.ray, &[3.0, 5.0, 8.0])
    }
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct InvertConfig {
    #[serde(default)]
    pub centers: Vec<f64>,
    pub width: Option<f64>,
    pub kappa0: Option<f64>,
}

#[derive(Debug, Deserialize, Clone, Copy, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum RhoMethod {
    /// Closed form when the problem is a reference family, else finite differences.
    #[default]
    Auto,
    FiniteDifference,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RhoConfig {
    #[serde(default)]
    pub method: RhoMethod,
    /// Box length, grid cells and eigenvalue count for the finite-difference spectrum.
    pub length: Option<f64>,
    pub cells: Option<usize>,
    pub count: Option<usize>,
    /// Sample points for the density column.
    #[serde(default)]
    pub lambdas: Vec<f64>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct BridgeConfig {
    #[serde(default)]
    pub alphas: Vec<f64>,
    /// ε schedule; the per-α default when absent.
    pub eps: Option<Vec<f64>>,
    /// Test functions for the smeared identity.
    #[serde(default)]
    pub smeared: Vec<TestFunction>,
    /// Grid for the amplitude used in the smeared identity.
    pub a: Option<f64>,
    pub d_alpha: Option<f64>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ScatterConfig {
    #[serde(default)]
    pub alphas: Vec<f64>,
    pub eps: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct HbcConfig {
    pub h: Option<f64>,
    #[serde(default)]
    pub kappas: Vec<KappaSpec>,
    pub ray: Option<Ray>,
    #[serde(default)]
    pub centers: Vec<f64>,
    pub width: Option<f64>,
    /// Fit the large-κ coefficients.
    #[serde(default)]
    pub fit: bool,
}

impl HbcConfig {
    pub fn kappas(&self) -> Vec<Complex64> {
        kappa_list(&self.kappas, self.ray, &[1.0, 2.0, 5.0, 10.0])
    }
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    pub alpha: Option<f64>,
    #[serde(default)]
    pub r_grid: Vec<f64>,
    pub del_rio: Option<DelRioConfig>,
}

#[derive(Debug, Deserialize, Clone, Copy)]
#[serde(deny_unknown_fields)]
pub struct DelRioConfig {
    pub b: f64,
    pub a0: f64,
    pub n_max: usize,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// Subset of criteria; all twelve when empty.
    #[serde(default)]
    pub criteria: Vec<u32>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut cfg: RunConfig = toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        if let Some(p) = cfg.problem.as_mut() {
            if let Some(t) = p.table.as_mut() {
                if t.is_relative() {
                    *t = path.parent().unwrap_or(Path::new(".")).join(&*t);
                }
            }
        }
        Ok(cfg)
    }

    pub fn problem(&self) -> Result<Problem, String> {
        let table = self.problem.as_ref().ok_or("missing [problem] table")?;
        table.build()
    }
}

fn need(v: Option<f64>, key: &str, kind: &str) -> Result<f64, String> {
    v.ok_or_else(|| format!("potential = \"{kind}\" needs `{key}`"))
}

impl ProblemSpec {
    pub fn build(&self) -> Result<Problem, String> {
        let mut pot = match self.potential {
            PotentialKind::Zero => Potential::Zero,
            PotentialKind::Constant => Potential::Constant { q0: need(self.q0, "q0", "constant")? },
            PotentialKind::Sampled => {
                let path = self.table.as_ref().ok_or("potential = \"sampled\" needs `table`")?;
                Potential::Sampled { samples: read_table(path)? }
            }
            PotentialKind::BargmannOneEigenvalue => Potential::BargmannOneEigenvalue {
                kappa1: need(self.kappa1, "kappa1", "bargmann_one_eigenvalue")?,
                c1: need(self.c1, "c1", "bargmann_one_eigenvalue")?,
            },
            PotentialKind::BargmannResonance => Potential::BargmannResonance {
                beta: need(self.beta, "beta", "bargmann_resonance")?,
                gamma: need(self.gamma, "gamma", "bargmann_resonance")?,
            },
        };
        if let Some(c) = self.cutoff {
            pot = Potential::truncated(pot, c);
        }
        let boundary = match (self.boundary, self.h) {
            (None | Some(BoundaryKind::Dirichlet), None) => BoundaryParam::Dirichlet,
            (Some(BoundaryKind::Neumann), None) => BoundaryParam::Robin(0.0),
            (Some(BoundaryKind::Robin) | None, Some(h)) => BoundaryParam::Robin(h),
            (Some(BoundaryKind::Robin), None) => return Err("boundary = \"robin\" needs `h`".into()),
            (Some(_), Some(_)) => return Err("`h` is only allowed with boundary = \"robin\"".into()),
        };
        let problem = match self.b {
            Some(b) => Problem::interval(pot, b, boundary),
            None if self.boundary.is_some() || self.h.is_some() => {
                return Err("`boundary` and `h` need a finite `b`".into());
            }
            None => Problem::half_line(pot),
        };
        problem.validate().map_err(|e| e.to_string())?;
        Ok(problem)
    }
}

/// Two-column `x,q` table; a non-numeric first row is taken as a header.
pub fn read_table(path: &Path) -> Result<Samples, String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| format!("{}: {e}", path.display()))?;
    let (mut xs, mut qs) = (Vec::new(), Vec::new());
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| format!("{}: {e}", path.display()))?;
        if rec.len() != 2 {
            return Err(format!("{}: row {} has {} columns, expected 2", path.display(), i + 1, rec.len()));
        }
        let parsed = (rec[0].parse::<f64>(), rec[1].parse::<f64>());
        match parsed {
            (Ok(x), Ok(q)) => {
                xs.push(x);
                qs.push(q);
            }
            _ if i == 0 => continue,
            _ => return Err(format!("{}: row {} is not numeric", path.display(), i + 1)),
        }
    }
    Samples::new(xs, qs).map_err(|e| format!("{}: {e}", path.display()))
}
