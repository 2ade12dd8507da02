//! Experiment configuration: a versioned TOML file with no defaults for
//! seeds or tolerances.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use horoflow::calculus::{ScalarField, TimeChange, STEP_RANGE};
use horoflow::flows::{check_tol, HyperbolicBackend, PlanarBackend};
use horoflow::planar_toy::{gaussian_packet, hermite_packet, planar_bump, GaussianSampler, PlanarPoint};
use horoflow::spectral::Window;
use horoflow::surface::{build_bolza, FuchsianGroup, PhasePoint, PoincareSeries, SeriesLimits};
use horoflow::{HPoint, Orientation};
use serde::{Deserialize, Serialize};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Bolza,
    Planar,
}

impl BackendKind {
    pub fn name(self) -> &'static str {
        match self {
            BackendKind::Bolza => "bolza",
            BackendKind::Planar => "planar",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Local error bound of the reparametrization integrator.
    pub ode: f64,
    /// Finite-difference step along the flows.
    pub fd_step: f64,
}

/// The time change `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TimeChangeSpec {
    Constant {
        value: f64,
    },
    /// `1 + epsilon u` with `u` a Poincare series.
    Poincare {
        epsilon: f64,
        beta: f64,
        /// Cap on the orbit enumeration radius.
        radius: f64,
        center: [f64; 2],
    },
    PlanarBump {
        amplitude: f64,
        width: f64,
    },
}

/// The observable `phi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableSpec {
    Constant { value: f64 },
    Poincare { beta: f64, radius: f64, center: [f64; 2] },
    Gaussian { center: [f64; 2], sigma: f64 },
    Hermite { center: [f64; 2], sigma: f64 },
}

/// Importance sampler for the planar backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSpec {
    pub center: [f64; 2],
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSpec {
    pub t_max: f64,
    pub dt: f64,
    pub n_samples: usize,
    pub window: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssumptionSpec {
    pub n_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MourreSpec {
    /// Intervals `J` of the spectrum of `H^2`.
    pub intervals: Vec<[f64; 2]>,
}

/// Sample sizes of the invariant suites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    /// Mobius laws, surface reduction and flow-level conjugation.
    #[serde(default = "VerifySpec::default_points")]
    pub points: usize,
    /// Reparametrization identities, per backend.
    #[serde(default = "VerifySpec::default_cases")]
    pub flow_cases: usize,
    #[serde(default = "VerifySpec::default_cases")]
    pub defect_points: usize,
    #[serde(default = "VerifySpec::default_hsq")]
    pub hsq_points: usize,
}

impl VerifySpec {
    fn default_points() -> usize {
        10_000
    }
    fn default_cases() -> usize {
        1000
    }
    fn default_hsq() -> usize {
        100
    }
}

impl Default for VerifySpec {
    fn default() -> Self {
        Self {
            points: Self::default_points(),
            flow_cases: Self::default_cases(),
            defect_points: Self::default_cases(),
            hsq_points: Self::default_hsq(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub backend: BackendKind,
    #[serde(default)]
    pub orientation: Orientation,
    pub seed: u64,
    /// Output directory, relative to the config file; `--out` overrides it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Generator file in the format of `FuchsianGroup::to_text`; the built-in
    /// Bolza group when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generators: Option<PathBuf>,
    pub tolerances: Tolerances,
    pub time_change: TimeChangeSpec,
    pub observable: ObservableSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampler: Option<SamplerSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assumption: Option<AssumptionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mourre: Option<MourreSpec>,
    #[serde(default)]
    pub verify: VerifySpec,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).context("invalid configuration")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg = Self::from_toml(&text)?;
        // relative paths are taken from the config's directory
        if let Some(dir) = path.parent() {
            for p in [&mut cfg.generators, &mut cfg.out].into_iter().flatten() {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is plain data")
    }

    /// Checks every tolerance and size before any computation.
    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            bail!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            );
        }
        check_tol(self.tolerances.ode).context("tolerances.ode")?;
        let (lo, hi) = STEP_RANGE;
        if !(self.tolerances.fd_step >= lo && self.tolerances.fd_step <= hi) {
            bail!(
                "tolerances.fd_step = {} is outside [{lo}, {hi}]",
                self.tolerances.fd_step
            );
        }
        match (&self.time_change, self.backend) {
            (TimeChangeSpec::Poincare { .. }, BackendKind::Planar) => {
                bail!("a poincare time change needs the bolza backend")
            }
            (TimeChangeSpec::PlanarBump { .. }, BackendKind::Bolza) => {
                bail!("a planar_bump time change needs the planar backend")
            }
            (TimeChangeSpec::Constant { value }, _) if !(*value > 0.0) => {
                bail!("constant time change must be positive, got {value}")
            }
            _ => {}
        }
        match (&self.observable, self.backend) {
            (ObservableSpec::Poincare { .. }, BackendKind::Planar) => {
                bail!("a poincare observable needs the bolza backend")
            }
            (ObservableSpec::Gaussian { .. } | ObservableSpec::Hermite { .. }, BackendKind::Bolza) => {
                bail!("gaussian and hermite observables live on the planar backend")
            }
            _ => {}
        }
        if self.backend == BackendKind::Planar && self.orientation != Orientation::Negative {
            bail!("the planar backend has a single orientation (negative)");
        }
        if let Some(s) = &self.spectrum {
            s.window
                .parse::<Window>()
                .map_err(|e| anyhow::anyhow!("spectrum.window: {e}"))?;
            if !(s.dt > 0.0 && s.t_max > s.dt) {
                bail!("spectrum needs 0 < dt < t_max");
            }
        }
        if let Some(m) = &self.mourre {
            for j in &m.intervals {
                if !(j[0] > 0.0 && j[1] > j[0]) {
                    bail!("mourre interval {j:?} must satisfy 0 < lo < hi");
                }
            }
        }
        Ok(())
    }

    pub fn out_dir(&self, flag: Option<&Path>) -> Result<PathBuf> {
        match (flag, &self.out) {
            (Some(p), _) => Ok(p.to_path_buf()),
            (None, Some(p)) => Ok(p.clone()),
            (None, None) => bail!("no output directory: pass --out or set `out` in the config"),
        }
    }

    pub fn group(&self) -> Result<Arc<FuchsianGroup>> {
        let g = match &self.generators {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                FuchsianGroup::from_text(&text).with_context(|| format!("generator file {}", path.display()))?
            }
            None => build_bolza()?,
        };
        Ok(Arc::new(g))
    }

    pub fn planar_sampler(&self) -> GaussianSampler {
        let s = self.sampler.clone().unwrap_or(SamplerSpec {
            center: [0.0, 0.0],
            sigma: 1.0,
        });
        GaussianSampler::new((s.center[0], s.center[1]), s.sigma)
    }

    pub fn bolza_time_change(&self, group: Arc<FuchsianGroup>) -> Result<TimeChange<HyperbolicBackend>> {
        let backend = Arc::new(HyperbolicBackend::new(group.clone(), self.orientation));
        let tc = match &self.time_change {
            TimeChangeSpec::Constant { value } => TimeChange::constant(backend, *value),
            TimeChangeSpec::Poincare {
                epsilon,
                beta,
                radius,
                center,
            } => {
                let u = series_field(group, *beta, *radius, *center)?;
                TimeChange::new(backend, u.affine(1.0, *epsilon))
            }
            TimeChangeSpec::PlanarBump { .. } => bail!("planar_bump on the bolza backend"),
        };
        Ok(tc.with_step(self.tolerances.fd_step)?)
    }

    pub fn planar_time_change(&self) -> Result<TimeChange<PlanarBackend>> {
        let tc = match &self.time_change {
            TimeChangeSpec::Constant { value } => TimeChange::constant(Arc::new(PlanarBackend), *value),
            TimeChangeSpec::PlanarBump { amplitude, width } => planar_bump(*amplitude, *width),
            TimeChangeSpec::Poincare { .. } => bail!("poincare time change on the planar backend"),
        };
        Ok(tc.with_step(self.tolerances.fd_step)?)
    }

    pub fn bolza_observable(&self, group: Arc<FuchsianGroup>) -> Result<ScalarField<PhasePoint>> {
        match &self.observable {
            ObservableSpec::Constant { value } => Ok(ScalarField::constant(*value)),
            ObservableSpec::Poincare { beta, radius, center } => series_field(group, *beta, *radius, *center),
            _ => bail!("observable is not defined on the bolza backend"),
        }
    }

    pub fn planar_observable(&self) -> Result<ScalarField<PlanarPoint>> {
        match &self.observable {
            ObservableSpec::Constant { value } => Ok(ScalarField::constant(*value)),
            ObservableSpec::Gaussian { center, sigma } => Ok(gaussian_packet((center[0], center[1]), *sigma)),
            ObservableSpec::Hermite { center, sigma } => Ok(hermite_packet((center[0], center[1]), *sigma)),
            ObservableSpec::Poincare { .. } => bail!("poincare observable on the planar backend"),
        }
    }
}

fn series_field(
    group: Arc<FuchsianGroup>,
    beta: f64,
    radius: f64,
    center: [f64; 2],
) -> Result<ScalarField<PhasePoint>> {
    let c = HPoint::new(center[0], center[1])?;
    let limits = SeriesLimits {
        max_radius: radius,
        ..SeriesLimits::default()
    };
    let series = Arc::new(PoincareSeries::new(group, beta, c, limits)?);
    Ok(series.field(HPoint::i()))
}
