//! TOML run specifications.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use crate::assembly::assemble_core;
use crate::ensemble::{select_gamma, Algorithm, CflPolicy, EnsembleConfig, InitialData, MemberData};
use crate::experiments::benchmarks::{
    contraction_initial, contraction_member_data, cylinder_member_data, graded_cylinder_mesh, random_smooth_ensemble, CYLINDER_CENTER,
    CYLINDER_HEIGHT, CYLINDER_LENGTH, CYLINDER_RADIUS,
};
use crate::experiments::{calibrate_inverse_constant, ConvergenceSetup, MmsFamily};
use crate::fespace::{build_space, TaylorHoodSpace, ThetaParams};
use crate::mesh::{
    contraction_channel, generate_channel, generate_unit_square, import_mesh, import_text, tags, BoundaryPartition,
    Hole, Mesh,
};

use super::CliError;

fn invalid(field: &str, message: impl Into<String>) -> CliError {
    CliError::Invalid {
        field: field.to_string(),
        message: message.into(),
    }
}

/// A number or a keyword such as `"auto"` / `"auto:0.5"`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum NumberOrKeyword {
    Number(f64),
    Keyword(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub mesh: MeshSpec,
    #[serde(default)]
    pub boundary: BoundarySpec,
    pub ensemble: EnsembleSpec,
    #[serde(default)]
    pub problem: ProblemSpec,
    pub time: TimeSpec,
    #[serde(default)]
    pub output: OutputSpec,
    pub convergence: Option<ConvergenceSpec>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    /// `unit_square`, `channel`, `cylinder` or `contraction`.
    pub generator: Option<String>,
    /// Gmsh ASCII or plain-text mesh, relative to the spec file.
    pub file: Option<PathBuf>,
    pub n: Option<usize>,
    pub nx: Option<usize>,
    pub ny: Option<usize>,
    pub length: Option<f64>,
    pub height: Option<f64>,
    pub h: Option<f64>,
    /// Spacing on the obstacle of the graded cylinder mesh.
    pub h_near: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Dirichlet,
    /// Dirichlet and counted in the inlet length.
    Inlet,
    Open,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySpec {
    /// Tag (as a string key) to role; generators supply defaults.
    #[serde(default)]
    pub roles: BTreeMap<String, Role>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub algorithm: String,
    pub nu: Option<Vec<f64>>,
    pub gamma: Option<NumberOrKeyword>,
    pub l: Option<NumberOrKeyword>,
    /// Width of the smoothed Heaviside.
    #[serde(default = "default_theta_eps")]
    pub epsilon: f64,
    #[serde(default = "one")]
    pub u0: f64,
    pub c_inverse: Option<NumberOrKeyword>,
    pub lambda1: Option<f64>,
    #[serde(default)]
    pub require_guarantee: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    /// `rest`, `mms`, `cylinder`, `contraction` or `random`.
    #[serde(default = "default_kind")]
    pub kind: String,
    /// Member perturbation (mms scales, contraction inflow).
    pub epsilon: Option<f64>,
    /// Base viscosity of the manufactured family.
    pub nu: Option<f64>,
    pub members: Option<usize>,
    /// Body-force perturbation of the contraction Stokes start.
    pub force_epsilon: Option<f64>,
    /// L-infinity size of random initial fields.
    pub amplitude: Option<f64>,
}

impl Default for ProblemSpec {
    fn default() -> Self {
        Self {
            kind: default_kind(),
            epsilon: None,
            nu: None,
            members: None,
            force_epsilon: None,
            amplitude: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    pub dt: f64,
    pub t_final: f64,
    #[serde(default = "default_floor")]
    pub dt_floor: f64,
    #[serde(default = "yes")]
    pub halve: bool,
    #[serde(default = "one")]
    pub safety: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
    /// VTK snapshot every this many steps (0 disables).
    #[serde(default)]
    pub vtk_every: usize,
    /// Subset of `velocity`, `pressure`.
    #[serde(default = "default_fields")]
    pub fields: Vec<String>,
    /// Members to dump (all when absent).
    pub members: Option<Vec<usize>>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: None,
            vtk_every: 0,
            fields: default_fields(),
            members: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceSpec {
    pub dts: Vec<f64>,
    #[serde(default = "yes")]
    pub exact_history: bool,
}

fn default_theta_eps() -> f64 {
    ThetaParams::default().epsilon
}
fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn default_kind() -> String {
    "rest".into()
}
fn default_floor() -> f64 {
    CflPolicy::default().dt_floor
}
fn default_fields() -> Vec<String> {
    vec!["velocity".into(), "pressure".into()]
}

/// Ensemble inputs resolved from a spec.
pub struct ResolvedRun {
    pub space: Arc<TaylorHoodSpace>,
    pub config: EnsembleConfig,
    pub members: Vec<MemberData>,
    pub initial: InitialData,
    pub inlet_length: f64,
}

impl RunSpec {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        let spec: RunSpec = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Reads a spec; relative mesh paths are resolved against its directory.
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
        let mut spec = Self::from_toml_str(&text).map_err(|e| match e {
            CliError::Parse(m) => CliError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })?;
        if let Some(f) = spec.mesh.file.as_mut() {
            if f.is_relative() {
                if let Some(dir) = path.parent() {
                    *f = dir.join(&*f);
                }
            }
        }
        Ok(spec)
    }

    pub fn algorithm(&self) -> Result<Algorithm, CliError> {
        self.ensemble
            .algorithm
            .parse()
            .map_err(|e: crate::ensemble::EnsembleError| invalid("ensemble.algorithm", e.to_string()))
    }

    fn validate(&self) -> Result<(), CliError> {
        match (&self.mesh.generator, &self.mesh.file) {
            (Some(_), Some(_)) => return Err(invalid("mesh", "give either `generator` or `file`, not both")),
            (None, None) => return Err(invalid("mesh", "one of `generator` or `file` is required")),
            _ => {}
        }
        self.algorithm()?;
        if !(self.time.dt > 0.0) {
            return Err(invalid("time.dt", "must be positive"));
        }
        if !(self.time.t_final > 0.0) {
            return Err(invalid("time.t_final", "must be positive"));
        }
        for f in &self.output.fields {
            if f != "velocity" && f != "pressure" {
                return Err(invalid("output.fields", format!("unknown field '{f}' (expected velocity or pressure)")));
            }
        }
        for key in self.boundary.roles.keys() {
            key.parse::<i32>()
                .map_err(|_| invalid("boundary.roles", format!("key '{key}' is not an integer tag")))?;
        }
        match self.problem.kind.as_str() {
            "rest" | "cylinder" | "contraction" | "random" => {}
            "mms" => {
                if self.ensemble.nu.is_some() {
                    return Err(invalid("ensemble.nu", "omit for problem.kind = \"mms\"; viscosities follow the family"));
                }
            }
            other => {
                return Err(invalid(
                    "problem.kind",
                    format!("unknown problem '{other}' (expected rest, mms, cylinder, contraction or random)"),
                ))
            }
        }
        Ok(())
    }

    pub fn mms_family(&self) -> MmsFamily {
        MmsFamily::new(
            self.problem.members.unwrap_or(2),
            self.problem.epsilon.unwrap_or(0.1),
            self.problem.nu.unwrap_or(1.0),
        )
    }

    pub fn viscosities(&self) -> Result<Vec<f64>, CliError> {
        if self.problem.kind == "mms" {
            return Ok(self.mms_family().viscosities());
        }
        let nu = self.ensemble.nu.clone().ok_or_else(|| invalid("ensemble.nu", "missing viscosity list"))?;
        if nu.is_empty() {
            return Err(invalid("ensemble.nu", "needs at least one viscosity"));
        }
        Ok(nu)
    }

    pub fn build_mesh(&self) -> Result<Mesh, CliError> {
        let m = &self.mesh;
        if let Some(path) = &m.file {
            return read_mesh_file(path);
        }
        let g = m.generator.as_deref().unwrap_or_default();
        let need = |v: Option<usize>, f: &str| v.ok_or_else(|| invalid(&format!("mesh.{f}"), format!("required by generator '{g}'")));
        let mesh = match g {
            "unit_square" => generate_unit_square(need(m.n, "n")?)?,
            "channel" => generate_channel(
                m.length.unwrap_or(1.0),
                m.height.unwrap_or(1.0),
                need(m.nx, "nx")?,
                need(m.ny, "ny")?,
                None,
            )?,
            "cylinder" if m.h.is_some() => graded_cylinder_mesh(m.h.unwrap_or_default(), m.h_near.or(m.h).unwrap_or_default())?,
            "cylinder" => generate_channel(
                CYLINDER_LENGTH,
                CYLINDER_HEIGHT,
                need(m.nx, "nx")?,
                need(m.ny, "ny")?,
                Some(Hole {
                    center: CYLINDER_CENTER,
                    radius: CYLINDER_RADIUS,
                }),
            )?,
            "contraction" => contraction_channel(m.h.ok_or_else(|| invalid("mesh.h", "required by generator 'contraction'"))?)?,
            other => {
                return Err(invalid(
                    "mesh.generator",
                    format!("unknown generator '{other}' (expected unit_square, channel, cylinder or contraction)"),
                ))
            }
        };
        Ok(mesh)
    }

    /// Explicit roles override the generator defaults tag by tag.
    pub fn roles(&self, mesh: &Mesh) -> Result<BTreeMap<i32, Role>, CliError> {
        let mut roles: BTreeMap<i32, Role> = match self.mesh.generator.as_deref() {
            Some("channel") => [(tags::INLET, Role::Inlet), (tags::WALL, Role::Dirichlet), (tags::OUTLET, Role::Open)].into(),
            Some("cylinder") => [
                (tags::INLET, Role::Inlet),
                (tags::WALL, Role::Dirichlet),
                (tags::CYLINDER, Role::Dirichlet),
                (tags::OUTLET, Role::Open),
            ]
            .into(),
            Some("contraction") => [
                (tags::INLET, Role::Inlet),
                (tags::WALL, Role::Dirichlet),
                (tags::OUTLET, Role::Open),
                (tags::TOP_OUTLET, Role::Open),
            ]
            .into(),
            Some("unit_square") => mesh.boundary_tags().into_iter().map(|t| (t, Role::Dirichlet)).collect(),
            _ => BTreeMap::new(),
        };
        for (k, r) in &self.boundary.roles {
            let tag = k.parse::<i32>().map_err(|_| invalid("boundary.roles", format!("key '{k}' is not an integer tag")))?;
            roles.insert(tag, *r);
        }
        for t in mesh.boundary_tags() {
            if !roles.contains_key(&t) {
                return Err(invalid("boundary.roles", format!("mesh boundary tag {t} has no role")));
            }
        }
        Ok(roles)
    }

    pub fn build_space(&self) -> Result<(Arc<TaylorHoodSpace>, BTreeMap<i32, Role>), CliError> {
        let mesh = self.build_mesh()?;
        let roles = self.roles(&mesh)?;
        let dirichlet = roles.iter().filter(|(_, r)| **r != Role::Open).map(|(t, _)| *t);
        let open = roles.iter().filter(|(_, r)| **r == Role::Open).map(|(t, _)| *t);
        let part = BoundaryPartition::new(&mesh, dirichlet, open)?;
        Ok((build_space(Arc::new(mesh), part), roles))
    }

    /// `gamma`: a number, or `"auto"` for the stability-function optimum.
    pub fn resolve_gamma(&self, algorithm: Algorithm, nu: &[f64]) -> Result<f64, CliError> {
        match &self.ensemble.gamma {
            None => Ok(0.0),
            Some(NumberOrKeyword::Number(g)) => Ok(*g),
            Some(NumberOrKeyword::Keyword(k)) if k == "auto" => {
                Ok(if algorithm.is_second_order() { select_gamma(nu).gamma } else { 0.0 })
            }
            Some(NumberOrKeyword::Keyword(k)) => Err(invalid("ensemble.gamma", format!("expected a number or \"auto\", got '{k}'"))),
        }
    }

    /// `l`: a number, or `"auto:tau"` for `tau` times the inlet length.
    pub fn resolve_l(&self, inlet_length: f64) -> Result<f64, CliError> {
        match &self.ensemble.l {
            None => Ok(0.0),
            Some(NumberOrKeyword::Number(l)) => Ok(*l),
            Some(NumberOrKeyword::Keyword(k)) => {
                let tau = k
                    .strip_prefix("auto:")
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| invalid("ensemble.l", format!("expected a number or \"auto:<factor>\", got '{k}'")))?;
                if !(inlet_length > 0.0) {
                    return Err(invalid("ensemble.l", "\"auto\" needs a boundary tag with role \"inlet\""));
                }
                Ok(tau * inlet_length)
            }
        }
    }

    fn resolve_c_inverse(&self, space: &TaylorHoodSpace) -> Result<f64, CliError> {
        match &self.ensemble.c_inverse {
            None => Ok(1.0),
            Some(NumberOrKeyword::Number(c)) => Ok(*c),
            Some(NumberOrKeyword::Keyword(k)) if k == "auto" => Ok(calibrate_inverse_constant(space)?.c_inverse),
            Some(NumberOrKeyword::Keyword(k)) => {
                Err(invalid("ensemble.c_inverse", format!("expected a number or \"auto\", got '{k}'")))
            }
        }
    }

    /// Space, configuration, member data and initial ensemble.
    pub fn resolve(&self, seed: u64) -> Result<ResolvedRun, CliError> {
        let algorithm = self.algorithm()?;
        let nu = self.viscosities()?;
        let (space, roles) = self.build_space()?;
        let inlet_length: f64 = space
            .mesh()
            .boundary_edges()
            .iter()
            .enumerate()
            .filter(|(_, e)| roles.get(&e.tag) == Some(&Role::Inlet))
            .map(|(k, _)| space.boundary_length(k))
            .sum();

        let mut config = EnsembleConfig::new(algorithm, nu.clone(), self.time.dt, self.time.t_final);
        config.gamma = self.resolve_gamma(algorithm, &nu)?;
        config.l = self.resolve_l(inlet_length)?;
        config.theta = ThetaParams::new(self.ensemble.epsilon, self.ensemble.u0)
            .map_err(|e| invalid("ensemble.epsilon", e.to_string()))?;
        config.policy = CflPolicy {
            halve_on_violation: self.time.halve,
            safety: self.time.safety,
            dt_floor: self.time.dt_floor,
        };
        config.c_inverse = self.resolve_c_inverse(&space)?;
        config.require_guarantee = self.ensemble.require_guarantee;
        config.lambda1 = self.ensemble.lambda1;
        config.validate().map_err(|e| invalid(gamma_or_config(&e), e.to_string()))?;

        let jn = nu.len();
        let (members, initial) = match self.problem.kind.as_str() {
            "rest" => (Vec::new(), InitialData::at_rest(&space, jn)),
            "mms" => {
                let fam = self.mms_family();
                let mut init = InitialData::new(fam.interpolate(&space, 0.0));
                if algorithm.is_second_order() {
                    init.u_prev = Some(fam.interpolate(&space, -self.time.dt));
                }
                ((0..jn).map(|j| fam.member_data(j)).collect(), init)
            }
            "cylinder" => (vec![cylinder_member_data(); jn], InitialData::at_rest(&space, jn)),
            "contraction" => {
                let eps = self.problem.epsilon.unwrap_or(0.1);
                let ops = assemble_core(&space);
                let u0 = contraction_initial(&space, &ops, &nu, eps, self.problem.force_epsilon.unwrap_or(1e-2))?;
                ((0..jn).map(|j| contraction_member_data(j, eps)).collect(), InitialData::new(u0))
            }
            "random" => {
                let ops = assemble_core(&space);
                let u0 = random_smooth_ensemble(&space, &ops, jn, seed, self.problem.amplitude.unwrap_or(1.0))?;
                (Vec::new(), InitialData::new(u0))
            }
            _ => unreachable!("validated"),
        };
        Ok(ResolvedRun {
            space,
            config,
            members,
            initial,
            inlet_length,
        })
    }

    pub fn convergence_setup(&self) -> Result<ConvergenceSetup, CliError> {
        let conv = self
            .convergence
            .as_ref()
            .ok_or_else(|| invalid("convergence", "section missing"))?;
        if self.problem.kind != "mms" {
            return Err(invalid("problem.kind", "convergence studies need \"mms\""));
        }
        if self.mesh.generator.as_deref() != Some("unit_square") {
            return Err(invalid("mesh.generator", "convergence studies run on \"unit_square\""));
        }
        if conv.dts.is_empty() || conv.dts.iter().any(|d| !(*d > 0.0)) {
            return Err(invalid("convergence.dts", "needs positive timesteps"));
        }
        let algorithm = self.algorithm()?;
        let family = self.mms_family();
        let gamma = self.resolve_gamma(algorithm, &family.viscosities())?;
        let l = self.resolve_l(0.0)?;
        let mut cfg = EnsembleConfig::new(algorithm, family.viscosities(), conv.dts[0], self.time.t_final);
        cfg.gamma = gamma;
        cfg.l = l;
        cfg.validate().map_err(|e| invalid(gamma_or_config(&e), e.to_string()))?;
        Ok(ConvergenceSetup {
            algorithm,
            family,
            gamma,
            l,
            n: self.mesh.n.ok_or_else(|| invalid("mesh.n", "required by generator 'unit_square'"))?,
            dts: conv.dts.clone(),
            t_final: self.time.t_final,
            exact_history: conv.exact_history,
        })
    }
}

fn gamma_or_config(e: &crate::ensemble::EnsembleError) -> &'static str {
    if e.to_string().contains("gamma") {
        "ensemble.gamma"
    } else {
        "ensemble"
    }
}

/// Gmsh ASCII when the text starts with `$MeshFormat`, the plain-text dump otherwise.
pub fn read_mesh_file(path: &Path) -> Result<Mesh, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
    let mesh = if text.trim_start().starts_with("$MeshFormat") {
        import_mesh(&text)?
    } else {
        import_text(&text)?
    };
    Ok(mesh)
}
