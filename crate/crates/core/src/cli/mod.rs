//! Command implementations behind the `nsensemble` binary.

pub mod spec;

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::assembly::assemble_core;
use crate::ensemble::output::{write_halving_csv, write_step_csv};
use crate::ensemble::{Ensemble, EnsembleError, RunSummary, StepReport};
use crate::experiments::benchmarks::{force_extremes, run_with_forces, write_force_csv, ForceSample};
use crate::experiments::forces::PRESSURE_PROBES;
use crate::experiments::{calibrate_inverse_constant, convergence_study, CalibrationReport, ConvergenceTable, ExperimentError};
use crate::fespace::vtk::write_vtk;
use crate::linsolve::{smallest_mixed_eigenvalue, EigenResult, SolveError};
use crate::mesh::{tags, Mesh, MeshError, MeshMetrics};

pub use spec::{read_mesh_file, RunSpec};

/// Thread-count override read by the binary.
pub const THREADS_ENV: &str = "NSENSEMBLE_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("spec parse error: {0}")]
    Parse(String),
    #[error("invalid value for `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Settings shared by every command.
#[derive(Debug, Clone, Default)]
pub struct Options {
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl Options {
    fn out_dir(&self, spec: &RunSpec) -> PathBuf {
        self.out_dir
            .clone()
            .or_else(|| spec.output.dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"))
    }

    fn seed(&self, spec: &RunSpec) -> u64 {
        self.seed.or(spec.seed).unwrap_or(0)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })
}

fn io_at(path: &Path) -> impl Fn(io::Error) -> CliError + '_ {
    move |e| CliError::Io { path: path.to_path_buf(), source: e }
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_at(dir))
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: RunSummary,
    pub final_energies: Vec<f64>,
    pub forces: Vec<ForceSample>,
    pub warnings: Vec<String>,
    pub gamma: f64,
    pub l: f64,
    pub sigma: Option<f64>,
    pub lambda1: Option<f64>,
    pub artifacts: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn render(&self) -> String {
        let s = &self.summary;
        let mut out = String::new();
        writeln!(out, "steps            {}", s.steps).unwrap();
        writeln!(out, "final t          {:.6}", s.final_t).unwrap();
        writeln!(out, "final dt         {:.6e}", s.final_dt).unwrap();
        writeln!(out, "halvings         {}", s.halvings.len()).unwrap();
        writeln!(out, "factorizations   {}", s.counters.factorizations).unwrap();
        writeln!(out, "solves           {}", s.counters.solves).unwrap();
        if s.steps > 0 {
            writeln!(out, "factorizations/step {:.3}", s.counters.factorizations as f64 / s.steps as f64).unwrap();
        }
        writeln!(out, "gamma            {}", self.gamma).unwrap();
        writeln!(out, "L                {}", self.l).unwrap();
        if let Some(sig) = self.sigma {
            writeln!(out, "sigma            {sig:.6}").unwrap();
        }
        if let Some(l1) = self.lambda1 {
            writeln!(out, "lambda1          {l1:.6}").unwrap();
        }
        for (j, e) in self.final_energies.iter().enumerate() {
            writeln!(out, "energy[{j}]        {e:.12e}").unwrap();
        }
        let jn = self.final_energies.len();
        for j in 0..jn {
            if let Some(f) = force_extremes(&self.forces, j) {
                writeln!(
                    out,
                    "forces[{j}]        max drag {:.6} max lift {:.6} final dp {:.6}",
                    f.drag, f.lift, f.pressure_drop
                )
                .unwrap();
            }
        }
        for w in &self.warnings {
            writeln!(out, "warning: {w}").unwrap();
        }
        out
    }
}

fn write_snapshot(dir: &Path, spec: &RunSpec, e: &Ensemble, step: usize, paths: &mut Vec<PathBuf>) -> Result<(), CliError> {
    let jn = e.config().members();
    let members: Vec<usize> = spec
        .output
        .members
        .clone()
        .unwrap_or_else(|| (0..jn).collect())
        .into_iter()
        .filter(|&j| j < jn)
        .collect();
    let want = |f: &str| spec.output.fields.iter().any(|x| x == f);
    for j in members {
        let path = dir.join(format!("member{j}_{step:06}.vtk"));
        let mut w = create(&path)?;
        let st = e.state();
        write_vtk(
            &mut w,
            e.space(),
            &format!("member {j} t = {}", st.t),
            want("velocity").then_some(st.u[j].as_slice()),
            want("pressure").then_some(st.p[j].as_slice()),
            true,
        )
        .map_err(io_at(&path))?;
        w.flush().map_err(io_at(&path))?;
        paths.push(path);
    }
    Ok(())
}

/// Runs the ensemble described by the spec and writes step, halving, force
/// and snapshot files.
pub fn cmd_run(spec_path: &Path, opts: &Options) -> Result<RunOutcome, CliError> {
    let spec = RunSpec::from_path(spec_path)?;
    run_spec(&spec, opts)
}

pub fn run_spec(spec: &RunSpec, opts: &Options) -> Result<RunOutcome, CliError> {
    let resolved = spec.resolve(opts.seed(spec))?;
    let dir = opts.out_dir(spec);
    ensure_dir(&dir)?;
    let vtk_dir = dir.join("vtk");
    if spec.output.vtk_every > 0 {
        ensure_dir(&vtk_dir)?;
    }
    let gamma = resolved.config.gamma;
    let l = resolved.config.l;
    let algorithm = resolved.config.algorithm;
    let mut e = Ensemble::new(resolved.space, resolved.config, resolved.members, resolved.initial)?;
    let mut artifacts = Vec::new();
    if spec.output.vtk_every > 0 {
        write_snapshot(&vtk_dir, spec, &e, 0, &mut artifacts)?;
    }
    let mut io_error = None;
    let mut observer = |e: &Ensemble, r: &StepReport| {
        if spec.output.vtk_every > 0 && r.step % spec.output.vtk_every == 0 && io_error.is_none() {
            if let Err(err) = write_snapshot(&vtk_dir, spec, e, r.step, &mut artifacts) {
                io_error = Some(err);
            }
        }
    };
    let (summary, forces) = if spec.problem.kind == "cylinder" {
        run_with_forces(&mut e, tags::CYLINDER, PRESSURE_PROBES, &mut observer)?
    } else {
        (e.run_with(&mut observer)?, Vec::new())
    };
    if let Some(err) = io_error {
        return Err(err);
    }

    let steps = dir.join("steps.csv");
    let mut w = create(&steps)?;
    write_step_csv(&mut w, algorithm, &summary.reports).map_err(io_at(&steps))?;
    w.flush().map_err(io_at(&steps))?;
    artifacts.push(steps);

    let halvings = dir.join("halvings.csv");
    let mut w = create(&halvings)?;
    write_halving_csv(&mut w, &summary.halvings).map_err(io_at(&halvings))?;
    w.flush().map_err(io_at(&halvings))?;
    artifacts.push(halvings);

    if !forces.is_empty() {
        let path = dir.join("forces.csv");
        let mut w = create(&path)?;
        write_force_csv(&mut w, &forces).map_err(io_at(&path))?;
        w.flush().map_err(io_at(&path))?;
        artifacts.push(path);
    }

    let outcome = RunOutcome {
        final_energies: (0..e.config().members()).map(|j| e.energy(j)).collect(),
        warnings: e.warnings().to_vec(),
        gamma,
        l,
        sigma: algorithm.is_second_order().then(|| e.sigma()),
        lambda1: e.lambda1(),
        summary,
        forces,
        artifacts,
    };
    let path = dir.join("summary.txt");
    fs::write(&path, outcome.render()).map_err(io_at(&path))?;
    let mut outcome = outcome;
    outcome.artifacts.push(path);
    Ok(outcome)
}

/// Runs the manufactured-solution study and writes `convergence.csv`.
pub fn cmd_convergence(spec_path: &Path, opts: &Options) -> Result<ConvergenceTable, CliError> {
    let spec = RunSpec::from_path(spec_path)?;
    let setup = spec.convergence_setup()?;
    let table = convergence_study(&setup)?;
    let dir = opts.out_dir(&spec);
    ensure_dir(&dir)?;
    let path = dir.join("convergence.csv");
    let mut w = create(&path)?;
    table.write_csv(&mut w).map_err(io_at(&path))?;
    w.flush().map_err(io_at(&path))?;
    Ok(table)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigReport {
    pub result: EigenResult,
    pub has_dirichlet: bool,
    pub n_p2: usize,
}

impl EigReport {
    pub fn render(&self) -> String {
        let mut s = format!(
            "lambda1     {:.8}\niterations  {}\nresidual    {:.3e}\nP2 dofs     {}\n",
            self.result.lambda, self.result.iterations, self.result.residual, self.n_p2
        );
        if !self.has_dirichlet {
            s += "note: no Dirichlet boundary, constants are eigenfunctions and lambda1 = 0\n";
        }
        s
    }
}

/// Smallest mixed Dirichlet/Neumann Laplace eigenvalue on the spec mesh.
pub fn cmd_eig(spec_path: &Path) -> Result<EigReport, CliError> {
    let spec = RunSpec::from_path(spec_path)?;
    eig_spec(&spec)
}

pub fn eig_spec(spec: &RunSpec) -> Result<EigReport, CliError> {
    let (space, _) = spec.build_space()?;
    let ops = assemble_core(&space);
    Ok(EigReport {
        result: smallest_mixed_eigenvalue(&space, &ops)?,
        has_dirichlet: space.partition().has_dirichlet(),
        n_p2: space.n_p2(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshInfo {
    pub vertices: usize,
    pub triangles: usize,
    pub edges: usize,
    pub metrics: MeshMetrics,
    /// `(tag, edge count, length)`.
    pub boundary: Vec<(i32, usize, f64)>,
    pub velocity_dofs: usize,
    pub pressure_dofs: usize,
}

impl MeshInfo {
    pub fn of(mesh: &Mesh) -> Self {
        let mut boundary: Vec<(i32, usize, f64)> = mesh.boundary_tags().into_iter().map(|t| (t, 0, 0.0)).collect();
        for e in mesh.boundary_edges() {
            let [a, b] = e.vertices.map(|v| mesh.vertices()[v]);
            let slot = boundary.iter_mut().find(|s| s.0 == e.tag).expect("tag listed");
            slot.1 += 1;
            slot.2 += ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        }
        let n2 = mesh.n_vertices() + mesh.n_edges();
        Self {
            vertices: mesh.n_vertices(),
            triangles: mesh.n_triangles(),
            edges: mesh.n_edges(),
            metrics: mesh.metrics(),
            boundary,
            velocity_dofs: 2 * n2,
            pressure_dofs: mesh.n_vertices(),
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        writeln!(s, "vertices    {}", self.vertices).unwrap();
        writeln!(s, "triangles   {}", self.triangles).unwrap();
        writeln!(s, "edges       {}", self.edges).unwrap();
        writeln!(s, "h           {:.8}", self.metrics.h).unwrap();
        writeln!(s, "diam        {:.8}", self.metrics.diam).unwrap();
        writeln!(s, "area        {:.8}", self.metrics.total_area).unwrap();
        writeln!(s, "dofs        {} velocity + {} pressure", self.velocity_dofs, self.pressure_dofs).unwrap();
        for (t, n, len) in &self.boundary {
            writeln!(s, "tag {t:<4}    {n} edges, length {len:.8}").unwrap();
        }
        s
    }
}

/// Mesh metrics for a spec (`.toml`) or a mesh file.
pub fn cmd_mesh_info(path: &Path) -> Result<MeshInfo, CliError> {
    let mesh = if path.extension().is_some_and(|e| e == "toml") {
        RunSpec::from_path(path)?.build_mesh()?
    } else {
        read_mesh_file(path)?
    };
    Ok(MeshInfo::of(&mesh))
}

/// Inverse-inequality constant of the spec mesh.
pub fn cmd_calibrate_c(spec_path: &Path) -> Result<CalibrationReport, CliError> {
    let spec = RunSpec::from_path(spec_path)?;
    let (space, _) = spec.build_space()?;
    Ok(calibrate_inverse_constant(&space)?)
}

pub fn render_calibration(r: &CalibrationReport) -> String {
    format!(
        "c_inverse        {:.8}\nh                {:.8}\nlambda_max       {:.8e}\nworst element    {}\nlocal ratio max  {:.8}\n",
        r.c_inverse, r.h, r.lambda_max, r.worst_element, r.local_ratio_max
    )
}

#[cfg(test)]
mod tests;
