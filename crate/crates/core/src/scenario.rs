//! Scenario files: a TOML description of mesh, material, forcing, initial data,
//! solver settings and output.
//!
//! Every section has defaults except the mesh. Physical constants (`m`, `ω`,
//! `g`, `c_ocean`, `θ`) fall back to typical literature values when omitted, but
//! a run relying on them must opt in with `[defaults] physical = true`.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forcing::{
    read_scalar_series, read_vector_series, BodyForcing, IceStrengthField, NodalSeries, OceanForcing, PhysParams,
};
use crate::mesh::{build_rect_mesh, DofVector, TriMesh};
use crate::problem::Problem;
use crate::rheology::{CutoffMode, RheologyParams, DEFAULT_DELTA_HI, DEFAULT_DELTA_LO, DEFAULT_E_BAR};
use crate::solver::SolverConfig;
use crate::vector::Vec2;
use crate::verify::{manufactured_load, manufactured_velocity};

/// Ice mass per area, kg m⁻² (about 1 m of ice).
pub const DEFAULT_MASS: f64 = 900.0;
/// Coriolis parameter ω, s⁻¹, at high northern latitudes.
pub const DEFAULT_OMEGA: f64 = 1.46e-4;
pub const DEFAULT_GRAVITY: f64 = 9.81;
/// Ocean drag coefficient ρ_w C_w with ρ_w = 1026 kg m⁻³, C_w = 5.5·10⁻³.
pub const DEFAULT_C_OCEAN: f64 = 1026.0 * 5.5e-3;
pub const DEFAULT_THETA: f64 = 0.0;
/// Ice strength P*, N m⁻¹, for thickness and concentration one.
pub const DEFAULT_STRENGTH: f64 = 27_500.0;

/// Overrides `[output] out_dir` when set.
pub const OUT_DIR_ENV: &str = "SEAICE_OUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshSpec {
    Rect { nx: usize, ny: usize, lx: f64, ly: f64 },
    File { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RheologySpec {
    pub e_bar: f64,
    /// Derived as `2 / e_bar²`; echoed for reference and checked if given.
    pub lambda: Option<f64>,
    pub delta_lo: f64,
    pub delta_hi: f64,
    pub epsilon: f64,
    pub mode: CutoffMode,
}

impl Default for RheologySpec {
    fn default() -> Self {
        Self {
            e_bar: DEFAULT_E_BAR,
            lambda: None,
            delta_lo: DEFAULT_DELTA_LO,
            delta_hi: DEFAULT_DELTA_HI,
            epsilon: 0.0,
            mode: CutoffMode::CutoffBoth,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysSpec {
    pub m: Option<f64>,
    pub omega: Option<f64>,
    pub g: Option<f64>,
}

/// Named closed-form fields, evaluated at the vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalyticField {
    /// `scale · (−cos(π y / ly), sin(π x / lx))`: a basin-scale circulation.
    Gyre,
    /// `scale · sin(π x / lx) sin(π y / ly) (1, 1)`.
    Bump,
    /// Load balancing the manufactured steady state of amplitude `scale`
    /// (needs constant strength and the lower cut-off regime).
    Manufactured,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VectorFieldSpec {
    Zero,
    Constant {
        value: [f64; 2],
    },
    /// CSV with header `t,node_id,vx,vy`; node ids are vertex indices.
    File {
        path: PathBuf,
    },
    Analytic {
        id: AnalyticField,
        scale: f64,
    },
}

impl Default for VectorFieldSpec {
    fn default() -> Self {
        VectorFieldSpec::Zero
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OceanSpec {
    pub c_ocean: Option<f64>,
    pub theta: Option<f64>,
    pub current: VectorFieldSpec,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BodySpec {
    pub tau_atm: VectorFieldSpec,
    pub grad_h: VectorFieldSpec,
    pub f_extra: VectorFieldSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StrengthSpec {
    Constant {
        value: f64,
    },
    /// `value + gradient · x`, with an explicit floor.
    Ramp {
        value: f64,
        gradient: [f64; 2],
        p_floor: f64,
    },
    /// CSV with header `t,node_id,val`.
    File {
        path: PathBuf,
        p_floor: f64,
    },
}

impl Default for StrengthSpec {
    fn default() -> Self {
        StrengthSpec::Constant {
            value: DEFAULT_STRENGTH,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    /// Write a snapshot every this many steps; 0 writes only the initial and final states.
    pub snapshot_every: usize,
    pub out_dir: PathBuf,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            snapshot_every: 0,
            out_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DefaultsSpec {
    /// Allows `run` to use the built-in physical constants for omitted keys.
    pub physical: bool,
}

/// The scenario file as written, and after [`parse_scenario`] with every default resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub defaults: DefaultsSpec,
    pub mesh: MeshSpec,
    #[serde(default)]
    pub rheology: RheologySpec,
    #[serde(default)]
    pub phys: PhysSpec,
    #[serde(default)]
    pub ocean: OceanSpec,
    #[serde(default)]
    pub body: BodySpec,
    #[serde(default)]
    pub strength: StrengthSpec,
    #[serde(default)]
    pub initial: VectorFieldSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: ScenarioConfig,
    /// Directory that relative paths in the file are resolved against.
    pub base_dir: PathBuf,
    /// Physical keys that were filled from the built-in defaults.
    pub defaults_used: Vec<&'static str>,
}

fn fill(slot: &mut Option<f64>, value: f64, key: &'static str, used: &mut Vec<&'static str>) {
    if slot.is_none() {
        *slot = Some(value);
        used.push(key);
    }
}

/// Parses and validates a scenario from TOML text; relative paths resolve against `base_dir`.
pub fn parse_scenario_str(text: &str, base_dir: &Path) -> Result<Scenario> {
    let mut config: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let mut used = Vec::new();
    fill(&mut config.phys.m, DEFAULT_MASS, "phys.m", &mut used);
    fill(&mut config.phys.omega, DEFAULT_OMEGA, "phys.omega", &mut used);
    fill(&mut config.phys.g, DEFAULT_GRAVITY, "phys.g", &mut used);
    fill(&mut config.ocean.c_ocean, DEFAULT_C_OCEAN, "ocean.c_ocean", &mut used);
    fill(&mut config.ocean.theta, DEFAULT_THETA, "ocean.theta", &mut used);
    let rheology = rheology_params(&config.rheology)?;
    config.rheology.lambda = Some(rheology.lambda());
    let scenario = Scenario {
        config,
        base_dir: base_dir.to_path_buf(),
        defaults_used: used,
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Reads, parses and validates a scenario file.
pub fn parse_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read scenario {}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_scenario_str(&text, &base).map_err(|e| match e {
        Error::Config(msg) => Error::Parse {
            path: path.to_path_buf(),
            message: msg,
        },
        other => other,
    })
}

fn rheology_params(spec: &RheologySpec) -> Result<RheologyParams> {
    let params = RheologyParams::new(spec.e_bar, spec.delta_lo, spec.delta_hi, spec.epsilon, spec.mode)?;
    if let Some(l) = spec.lambda {
        if (l - params.lambda()).abs() > 1e-12 * params.lambda() {
            return Err(Error::InvalidParameter(format!(
                "lambda = {l} contradicts e_bar = {} (lambda = 2 / e_bar^2 = {})",
                spec.e_bar,
                params.lambda()
            )));
        }
    }
    Ok(params)
}

impl Scenario {
    /// Echo of the resolved configuration; parsing it reproduces `self.config`.
    pub fn echo(&self) -> String {
        toml::to_string(&self.config).expect("scenario serializes")
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Output directory, honouring [`OUT_DIR_ENV`].
    pub fn out_dir(&self) -> PathBuf {
        match std::env::var_os(OUT_DIR_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.resolve(&self.config.output.out_dir),
        }
    }

    pub fn rheology(&self) -> Result<RheologyParams> {
        rheology_params(&self.config.rheology)
    }

    pub fn phys(&self) -> Result<PhysParams> {
        let p = &self.config.phys;
        PhysParams::new(
            p.m.unwrap_or(DEFAULT_MASS),
            p.omega.unwrap_or(DEFAULT_OMEGA),
            p.g.unwrap_or(DEFAULT_GRAVITY),
        )
    }

    /// Refuses to proceed if physical defaults were filled in without opt-in.
    pub fn require_explicit_physics(&self) -> Result<()> {
        if !self.defaults_used.is_empty() && !self.config.defaults.physical {
            return Err(Error::Config(format!(
                "keys {} use built-in physical defaults; set them or add `[defaults] physical = true`",
                self.defaults_used.join(", ")
            )));
        }
        Ok(())
    }

    pub fn mesh(&self) -> Result<TriMesh> {
        match &self.config.mesh {
            MeshSpec::Rect { nx, ny, lx, ly } => build_rect_mesh(*nx, *ny, *lx, *ly),
            MeshSpec::File { path } => TriMesh::read(&self.resolve(path)),
        }
    }

    fn validate(&self) -> Result<()> {
        let c = &self.config;
        self.rheology()?;
        self.phys()?;
        c.solver.validate()?;
        let theta = c.ocean.theta.unwrap_or(DEFAULT_THETA);
        let c_ocean = c.ocean.c_ocean.unwrap_or(DEFAULT_C_OCEAN);
        // same checks as the forcing types, before any file is touched
        OceanForcing::new(c_ocean, theta, NodalSeries::uniform(Vec2::ZERO, 0))?;
        match &c.strength {
            StrengthSpec::Constant { value } => {
                IceStrengthField::constant(*value, 1)?;
            }
            StrengthSpec::Ramp { p_floor, .. } | StrengthSpec::File { p_floor, .. } => {
                IceStrengthField::new(NodalSeries::Steady(vec![]), *p_floor)?;
            }
        }
        if let MeshSpec::File { path } = &c.mesh {
            let p = self.resolve(path);
            if !p.is_file() {
                return Err(Error::Config(format!("mesh file {} does not exist", p.display())));
            }
        }
        for spec in [
            &c.ocean.current,
            &c.body.tau_atm,
            &c.body.grad_h,
            &c.body.f_extra,
            &c.initial,
        ] {
            if let VectorFieldSpec::File { path } = spec {
                let p = self.resolve(path);
                if !p.is_file() {
                    return Err(Error::Config(format!("forcing file {} does not exist", p.display())));
                }
            }
        }
        if let StrengthSpec::File { path, .. } = &c.strength {
            let p = self.resolve(path);
            if !p.is_file() {
                return Err(Error::Config(format!("strength file {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    fn domain(mesh: &TriMesh) -> (Vec2, Vec2) {
        let vs = mesh.vertices();
        let lo = vs.iter().fold(Vec2::new(f64::INFINITY, f64::INFINITY), |a, v| {
            Vec2::new(a.x.min(v.x), a.y.min(v.y))
        });
        let hi = vs.iter().fold(Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY), |a, v| {
            Vec2::new(a.x.max(v.x), a.y.max(v.y))
        });
        (lo, hi - lo)
    }

    fn analytic(&self, mesh: &TriMesh, id: AnalyticField, scale: f64) -> Result<Vec<Vec2>> {
        let (origin, size) = Self::domain(mesh);
        let unit = |x: Vec2| Vec2::new((x.x - origin.x) / size.x, (x.y - origin.y) / size.y);
        Ok(match id {
            AnalyticField::Gyre => mesh
                .vertices()
                .iter()
                .map(|&x| {
                    let s = unit(x);
                    scale * Vec2::new(-(PI * s.y).cos(), (PI * s.x).sin())
                })
                .collect(),
            AnalyticField::Bump => mesh
                .vertices()
                .iter()
                .map(|&x| manufactured_velocity(scale, unit(x)))
                .collect(),
            AnalyticField::Manufactured => {
                let p = match self.config.strength {
                    StrengthSpec::Constant { value } => value,
                    _ => {
                        return Err(Error::Config(
                            "the manufactured load needs a constant ice strength".into(),
                        ))
                    }
                };
                if (size.x - 1.0).abs() > 1e-12 || (size.y - 1.0).abs() > 1e-12 {
                    return Err(Error::Config(
                        "the manufactured load is defined on the unit square".into(),
                    ));
                }
                let params = self.rheology()?;
                mesh.vertices()
                    .iter()
                    .map(|&x| manufactured_load(scale, p, &params, unit(x)))
                    .collect()
            }
        })
    }

    fn vector_series(&self, mesh: &TriMesh, spec: &VectorFieldSpec) -> Result<NodalSeries<Vec2>> {
        let n = mesh.n_vertices();
        Ok(match spec {
            VectorFieldSpec::Zero => NodalSeries::uniform(Vec2::ZERO, n),
            VectorFieldSpec::Constant { value } => NodalSeries::uniform(Vec2::new(value[0], value[1]), n),
            VectorFieldSpec::File { path } => read_vector_series(&self.resolve(path), n)?,
            VectorFieldSpec::Analytic { id, scale } => NodalSeries::Steady(self.analytic(mesh, *id, *scale)?),
        })
    }

    /// Builds the discrete problem and the initial velocity.
    pub fn build(&self) -> Result<(Problem, DofVector)> {
        let c = &self.config;
        let mesh = self.mesh()?;
        let n = mesh.n_vertices();
        let ocean = OceanForcing::new(
            c.ocean.c_ocean.unwrap_or(DEFAULT_C_OCEAN),
            c.ocean.theta.unwrap_or(DEFAULT_THETA),
            self.vector_series(&mesh, &c.ocean.current)?,
        )?;
        let body = BodyForcing {
            tau_atm: self.vector_series(&mesh, &c.body.tau_atm)?,
            grad_h: self.vector_series(&mesh, &c.body.grad_h)?,
            f_extra: self.vector_series(&mesh, &c.body.f_extra)?,
        };
        let strength = match &c.strength {
            StrengthSpec::Constant { value } => IceStrengthField::constant(*value, n)?,
            StrengthSpec::Ramp {
                value,
                gradient,
                p_floor,
            } => {
                let g = Vec2::new(gradient[0], gradient[1]);
                let p = mesh.vertices().iter().map(|&x| value + g.dot(x)).collect();
                IceStrengthField::new(NodalSeries::Steady(p), *p_floor)?
            }
            StrengthSpec::File { path, p_floor } => {
                IceStrengthField::new(read_scalar_series(&self.resolve(path), n)?, *p_floor)?
            }
        };
        let initial = match &c.initial {
            VectorFieldSpec::File { path } => {
                let series = read_vector_series(&self.resolve(path), n)?;
                series.at(series_start(&series))?.into_owned()
            }
            spec => self.vector_series(&mesh, spec)?.at(0.0)?.into_owned(),
        };
        let mut u0 = DofVector::zeros(&mesh);
        for (node, &v) in mesh.interior_vertices().iter().enumerate() {
            u0.set_node(node, initial[v]);
        }
        let problem = Problem::new(mesh, self.rheology()?, self.phys()?, ocean, body, strength)?;
        Ok((problem, u0))
    }
}

fn series_start<T>(series: &NodalSeries<T>) -> f64 {
    match series {
        NodalSeries::Steady(_) => 0.0,
        NodalSeries::Sampled { times, .. } => times[0],
    }
}
