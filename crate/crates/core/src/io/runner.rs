//! Executes a scenario and writes its artifacts plus `manifest.json` into
//! one output directory.
//!
//! Every artifact is listed in the manifest with its SHA-256. Artifacts
//! are byte-deterministic for a given scenario; the manifest differs
//! between runs only in `wall_time_s`.

use super::gridfile::{encode_grid, Dtype, GridData, GridHeader};
use super::points::PointSet;
use super::render::{render_gray, render_overlay, render_signed, Image};
use super::scenario::{ExperimentKind, Outputs, Scenario, SourceSpec};
use super::IoError;
use crate::classical::{
    default_cadence, median, paired_log_divergence, propagate_ensemble, sample_gaussian_source, sample_plane_manifold,
    sample_point_source, ClassicalError, DensityGrid, Ensemble, PropagationConfig, Status,
};
use crate::experiments::{cross_arm_contrast, shadow_comparison, ShadowSetup};
use crate::grid::{GridSpec, Rect};
use crate::mathieu::{
    energetic_lines, retention_diagram, stability_contours, stability_diagram, summarize_retention, MathieuError,
    RetentionScan, Segment, StabilityGrid,
};
use crate::potential::{make_zero, PotentialError, PotentialField};
use crate::quantum::{
    axial_spectrum, bloch_state, energy_expectation, gaussian_packet, make_absorber, peak_offset_bins, propagate,
    superwire_filter, AbsorberGeometry, EnergyAccumulator, QuantumConfig, QuantumError, SuperwireConfig, WaveField,
};
use crate::stdmap::{
    evolve_manifold, fit_slope, max_momentum_excursion, momentum_diffusion, stripes_and_circles, MapError,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("potential: {0}")]
    Potential(#[from] PotentialError),
    #[error("classical propagation: {0}")]
    Classical(#[from] ClassicalError),
    #[error("quantum propagation: {0}")]
    Quantum(QuantumError),
    #[error("stability analysis: {0}")]
    Mathieu(#[from] MathieuError),
    #[error("standard map: {0}")]
    Map(#[from] MapError),
    #[error("non-finite wave field at step {step}; last finite state written to {}", snapshot.display())]
    NonFinite { step: usize, snapshot: PathBuf },
    #[error("scenario is missing [{0}]")]
    Missing(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageInfo {
    /// Raw data range behind the min-max normalisation.
    pub range: [f64; 2],
    pub nan_pixels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub kind: ExperimentKind,
    pub version: String,
    /// SHA-256 of the canonical (fully defaulted) scenario text.
    pub input_hash: String,
    pub wall_time_s: f64,
    pub metrics: BTreeMap<String, f64>,
    pub images: BTreeMap<String, ImageInfo>,
    /// File name to SHA-256 of its bytes.
    pub artifacts: BTreeMap<String, String>,
    pub warnings: Vec<String>,
    /// Failed physics-validity checks; any entry makes the run fail.
    pub failures: Vec<String>,
    pub passed: bool,
}

impl Manifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serialises")
    }

    /// The manifest with timing fields cleared, for run-to-run comparison.
    pub fn without_timing(&self) -> Self {
        Self { wall_time_s: 0.0, ..self.clone() }
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

struct Writer<'a> {
    dir: &'a Path,
    outputs: Outputs,
    artifacts: BTreeMap<String, String>,
    images: BTreeMap<String, ImageInfo>,
}

impl Writer<'_> {
    fn put(&mut self, file: String, bytes: &[u8]) -> Result<PathBuf, RunError> {
        let path = self.dir.join(&file);
        std::fs::write(&path, bytes).map_err(|e| IoError::Io(path.display().to_string(), e))?;
        self.artifacts.insert(file, sha256_hex(bytes));
        Ok(path)
    }

    fn grid(&mut self, stem: &str, field: &str, grid: &GridSpec, data: GridData) -> Result<(), RunError> {
        if self.outputs.grids {
            let header = GridHeader::new(field, grid, data.dtype());
            self.put(format!("{stem}.bflow"), &encode_grid(&header, &data)?)?;
        }
        Ok(())
    }

    fn image(&mut self, file: String, img: Image) -> Result<(), RunError> {
        if self.outputs.images {
            self.images.insert(file.clone(), ImageInfo { range: [img.range.0, img.range.1], nan_pixels: img.nan_pixels });
            self.put(file, &img.bytes)?;
        }
        Ok(())
    }

    fn gray(&mut self, stem: &str, v: &[f64], g: &GridSpec) -> Result<(), RunError> {
        self.image(format!("{stem}.pgm"), render_gray(v, g.nx, g.ny))
    }

    fn signed(&mut self, stem: &str, v: &[f64], g: &GridSpec) -> Result<(), RunError> {
        self.image(format!("{stem}.ppm"), render_signed(v, g.nx, g.ny))
    }

    fn overlay(&mut self, stem: &str, v: &[f64], background: &[f64], g: &GridSpec) -> Result<(), RunError> {
        self.image(format!("{stem}.ppm"), render_overlay(v, background, g.nx, g.ny))
    }

    fn points(&mut self, stem: &str, p: &PointSet) -> Result<(), RunError> {
        if self.outputs.points {
            self.put(format!("{stem}.bflowp"), &p.encode()?)?;
        }
        Ok(())
    }

    /// Writes the wave field, its density and its real part.
    fn wave(&mut self, stem: &str, psi: &WaveField) -> Result<(), RunError> {
        self.grid(stem, stem, &psi.grid, GridData::C128(psi.amplitudes.clone()))?;
        self.gray(&format!("{stem}_density"), &psi.density(), &psi.grid)?;
        let re: Vec<f64> = psi.amplitudes.iter().map(|z| z.re).collect();
        self.signed(&format!("{stem}_real"), &re, &psi.grid)
    }

    /// Converts a propagation error, writing the diagnostic snapshot on NaN.
    fn quantum<T>(&mut self, r: Result<T, QuantumError>) -> Result<T, RunError> {
        match r {
            Err(QuantumError::NonFinite { step, snapshot }) => {
                let header = GridHeader::new("last-finite-state", &snapshot.grid, Dtype::C128);
                let bytes = encode_grid(&header, &GridData::C128(snapshot.amplitudes))?;
                let path = self.put(format!("diagnostic_step{step}.bflow"), &bytes)?;
                Err(RunError::NonFinite { step, snapshot: path })
            }
            r => r.map_err(RunError::Quantum),
        }
    }
}

struct Run<'a> {
    s: &'a Scenario,
    w: Writer<'a>,
    metrics: BTreeMap<String, f64>,
    warnings: Vec<String>,
    failures: Vec<String>,
}

impl Run<'_> {
    fn metric(&mut self, key: &str, v: f64) {
        self.metrics.insert(key.to_string(), v);
    }

    fn grid_spec(&self) -> Result<GridSpec, RunError> {
        let n = &self.s.numerics;
        Ok(GridSpec::new(n.grid[0], n.grid[1], n.rect()).map_err(PotentialError::from)?)
    }

    fn spectral_grid(&self) -> Result<GridSpec, RunError> {
        let n = &self.s.numerics;
        GridSpec::spectral(n.grid[0], n.grid[1], n.rect()).map_err(|e| RunError::Quantum(e.into()))
    }
}

/// Runs `s`, writing artifacts into `out_dir` (created if needed). Failed
/// physics checks are reported in the manifest (`passed = false`); errors
/// that stop the run are returned.
pub fn run_scenario(s: &Scenario, out_dir: &Path) -> Result<Manifest, RunError> {
    let start = Instant::now();
    std::fs::create_dir_all(out_dir).map_err(|e| IoError::Io(out_dir.display().to_string(), e))?;
    let canonical = s.to_toml();
    let mut run = Run {
        s,
        w: Writer { dir: out_dir, outputs: s.outputs.clone(), artifacts: BTreeMap::new(), images: BTreeMap::new() },
        metrics: BTreeMap::new(),
        warnings: Vec::new(),
        failures: Vec::new(),
    };
    run.w.put("scenario.toml".into(), canonical.as_bytes())?;
    match s.kind {
        ExperimentKind::ClassicalDensity => classical_density(&mut run)?,
        ExperimentKind::QuantumBranched => quantum_branched(&mut run)?,
        ExperimentKind::ShadowComparison => shadow(&mut run)?,
        ExperimentKind::ManifoldMap => manifold_map(&mut run)?,
        ExperimentKind::StabilityScan => stability_scan(&mut run)?,
        ExperimentKind::RetentionScan => retention_scan(&mut run)?,
        ExperimentKind::Superwire => superwire(&mut run)?,
    }
    let Run { w, metrics, warnings, failures, .. } = run;
    let manifest = Manifest {
        name: s.name.clone(),
        kind: s.kind,
        version: env!("CARGO_PKG_VERSION").to_string(),
        input_hash: sha256_hex(canonical.as_bytes()),
        wall_time_s: start.elapsed().as_secs_f64(),
        metrics,
        images: w.images,
        artifacts: w.artifacts,
        passed: failures.is_empty(),
        warnings,
        failures,
    };
    let path = out_dir.join("manifest.json");
    std::fs::write(&path, manifest.to_json()).map_err(|e| IoError::Io(path.display().to_string(), e))?;
    Ok(manifest)
}

fn classical_source(s: &Scenario, field: &PotentialField) -> Result<(Ensemble, [f64; 2]), RunError> {
    let speed = |e: f64| (2.0 * e).sqrt();
    Ok(match s.source.as_ref().ok_or(RunError::Missing("source"))? {
        SourceSpec::Point { center, energy, angle_deg, wedge_deg, count } => (
            sample_point_source(*center, speed(*energy), angle_deg.to_radians(), wedge_deg.to_radians(), *count, field)?,
            *center,
        ),
        SourceSpec::Plane { x0, y_min, y_max, energy, count } => {
            (sample_plane_manifold([*y_min, *y_max], *x0, speed(*energy), *count, field)?, [*x0, 0.5 * (y_min + y_max)])
        }
        SourceSpec::Gaussian { center, sigma, k0, count } => {
            let h = s.numerics.hbar;
            (sample_gaussian_source(*center, *sigma, [h * k0[0], h * k0[1]], h, *count, s.seed, field)?, *center)
        }
        SourceSpec::Bloch { .. } => return Err(RunError::Missing("classical source")),
    })
}

fn classical_density(run: &mut Run) -> Result<(), RunError> {
    let s = run.s;
    let n = &s.numerics;
    let field = s.build_potential()?;
    let grid = run.grid_spec()?;
    let (mut e, center) = classical_source(s, &field)?;
    let starts = e.points.clone();
    let cadence = if n.cadence > 0 { n.cadence } else { default_cadence(n.dt) };
    let cfg = PropagationConfig::new(n.dt, n.steps).with_integrator(n.integrator).with_domain(grid.extent).with_cadence(cadence);
    let mut density = DensityGrid::new(grid);
    propagate_ensemble(&mut e, &field, &cfg, &mut density)?;

    let drift = e.max_relative_energy_drift(&field);
    run.metric("energy_drift", drift);
    if drift > s.checks.max_energy_drift {
        run.failures.push(format!("energy drift {drift:.3e} exceeds {:.3e}", s.checks.max_energy_drift));
    }
    let diverged: Vec<usize> = (0..e.len()).filter(|&i| e.status[i] == Status::Diverged).collect();
    if !diverged.is_empty() {
        let mut p = PointSet::new("diverged", &["trajectory", "x", "y", "px", "py"]);
        for &i in &diverged {
            let q = e.points[i];
            p.push(&[i as f64, q.x, q.y, q.px, q.py]);
        }
        run.w.put("diagnostic_diverged.bflowp".into(), &p.encode()?)?;
        run.failures.push(format!("{} trajectories produced non-finite coordinates", diverged.len()));
    }
    run.metric("trajectories", e.len() as f64);
    run.metric("exited_fraction", e.status.iter().filter(|s| **s == Status::Exited).count() as f64 / e.len() as f64);
    run.metric("recorded_samples", density.recorded() as f64);
    run.metric("in_grid_samples", density.in_grid() as f64);

    let values = density.as_f64();
    run.metric("arm_contrast", cross_arm_contrast(&values, &grid, center, PI, TAU));

    // Chaos indicator over an evenly strided subset of the launch points.
    let stride = starts.len().div_ceil(64).max(1);
    let subset: Vec<_> = starts.iter().step_by(stride).copied().collect();
    let lyap = paired_log_divergence(&field, &subset, 1e-8, n.dt, n.steps, n.integrator);
    run.metric("median_log_divergence", median(&lyap));

    let background = field.sample_on_grid(&grid)?.values;
    run.w.grid("density", "density", &grid, GridData::F64(values.clone()))?;
    run.w.gray("density", &values, &grid)?;
    run.w.overlay("density_overlay", &values, &background, &grid)
}

/// Initial wave function from the `[source]` table.
fn initial_wave(run: &Run, grid: GridSpec, field: &PotentialField) -> Result<WaveField, RunError> {
    let s = run.s;
    let n = &s.numerics;
    let psi = match s.source.as_ref().ok_or(RunError::Missing("source"))? {
        SourceSpec::Gaussian { center, sigma, k0, .. } => gaussian_packet(grid, *center, *sigma, *k0),
        SourceSpec::Bloch { k, band, envelope_sigma, envelope_center } => {
            bloch_state(grid, field, *k, *band, n.hbar, n.mass).and_then(|b| {
                let mut psi = b.psi;
                if let Some(w) = envelope_sigma {
                    let c = envelope_center.unwrap_or([0.0, 0.0]);
                    let g = psi.grid;
                    for j in 0..g.ny {
                        for i in 0..g.nx {
                            let r2 = (g.x(i) - c[0]).powi(2) + (g.y(j) - c[1]).powi(2);
                            psi.amplitudes[g.index(i, j)] *= (-r2 / (4.0 * w * w)).exp();
                        }
                    }
                }
                psi.normalize()?;
                Ok(psi)
            })
        }
        _ => return Err(RunError::Missing("wave source")),
    };
    let psi = psi.and_then(|p| p.with_units(n.hbar, n.mass)).map_err(RunError::Quantum)?;
    Ok(psi)
}

/// Fraction of the norm within four cells of an edge of the box.
fn edge_fraction(psi: &WaveField) -> f64 {
    let g = psi.grid;
    let m = 4;
    let (mut edge, mut total) = (0.0, 0.0);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let p = psi.amplitudes[g.index(i, j)].norm_sqr();
            total += p;
            if i < m || j < m || i >= g.nx - m || j >= g.ny - m {
                edge += p;
            }
        }
    }
    edge / total
}

fn quantum_branched(run: &mut Run) -> Result<(), RunError> {
    let s = run.s;
    let n = &s.numerics;
    let field = s.build_potential()?;
    let grid = run.spectral_grid()?;
    let v = field.sample_on_grid(&grid)?;
    let mut psi = initial_wave(run, grid, &field)?;
    let e0 = run.w.quantum(energy_expectation(&psi, &v))?;
    run.metric("initial_energy", e0);
    run.w.wave("psi_initial", &psi)?;
    let edge0 = edge_fraction(&psi);

    let mask = if s.absorber.is_empty() { None } else { Some(run.w.quantum(make_absorber(grid, &s.absorber))?) };
    let duration = n.dt * n.steps as f64;
    let mut accs: Vec<EnergyAccumulator> = s
        .filter
        .iter()
        .map(|f| EnergyAccumulator::new(f.energy.unwrap_or(e0), grid, f.window.window(duration)))
        .collect();
    let cadence = n.cadence.max(1);
    let weight = n.dt * cadence as f64;
    let mut integrated = vec![0.0; grid.len()];
    let cfg = QuantumConfig::new(n.dt, n.steps).with_splitting(n.splitting).with_cadence(cadence);
    let r = propagate(&mut psi, &v, &cfg, mask.as_ref(), &mut accs, &mut |_, p| {
        integrated.iter_mut().zip(&p.amplitudes).for_each(|(a, z)| *a += z.norm_sqr() * weight);
    });
    let report = run.w.quantum(r)?;

    run.metric("norm_loss", report.norm_loss());
    if mask.is_none() {
        let drift = (report.final_norm / report.initial_norm - 1.0).abs();
        run.metric("norm_drift", drift);
        if drift > s.checks.max_norm_drift {
            run.failures.push(format!("norm drift {drift:.3e} exceeds {:.3e}", s.checks.max_norm_drift));
        }
        let e1 = run.w.quantum(energy_expectation(&psi, &v))?;
        let rel = ((e1 - e0) / e0.abs().max(f64::MIN_POSITIVE)).abs();
        run.metric("energy_drift", rel);
        if rel > s.checks.max_energy_drift {
            run.failures.push(format!("energy drift {rel:.3e} exceeds {:.3e}", s.checks.max_energy_drift));
        }
    }
    if !s.absorber.iter().any(|a| matches!(a, AbsorberGeometry::Border { .. })) {
        // Flux reaching the seam of the periodic box; states that fill the
        // box from the start (Bloch waves) are not flagged.
        let f = edge_fraction(&psi);
        run.metric("edge_fraction", f);
        if f - edge0 > 1e-6 {
            run.warnings.push(format!("{f:.2e} of the final norm sits at the unabsorbed periodic boundary"));
        }
    }

    run.w.wave("psi_final", &psi)?;
    let background = v.values;
    run.w.grid("integrated_density", "integrated_density", &grid, GridData::F64(integrated.clone()))?;
    run.w.gray("integrated_density", &integrated, &grid)?;
    run.w.overlay("integrated_density_overlay", &integrated, &background, &grid)?;
    for acc in &accs {
        run.metric("filter_energy", acc.energy);
        let mut psi_e = run.w.quantum(acc.to_wave_field(n.hbar, n.mass))?;
        if psi_e.normalize().is_ok() {
            run.w.wave("psi_e", &psi_e)?;
        } else {
            run.warnings.push("filtered state is identically zero".into());
        }
    }
    Ok(())
}

fn shadow(run: &mut Run) -> Result<(), RunError> {
    let s = run.s;
    let n = &s.numerics;
    let sh = s.shadow.as_ref().ok_or(RunError::Missing("shadow"))?;
    let Some(SourceSpec::Gaussian { center, sigma, k0, .. }) = s.source else {
        return Err(RunError::Missing("gaussian source"));
    };
    let grid = run.spectral_grid()?;
    let lattice = s.build_potential()?;
    let setup = ShadowSetup {
        grid,
        lattice: lattice.clone(),
        center,
        sigma0: sigma,
        k0,
        hbar: n.hbar,
        mass: n.mass,
        dt: n.dt,
        steps: n.steps,
        frame: s.absorber.clone(),
        disk_center: sh.disk_center,
        disk_radius: sh.disk_radius,
        disk_width: sh.disk_width,
        disk_strength: sh.disk_strength,
        wedge_half_angle: sh.wedge_half_angle_deg.to_radians(),
        wedge_depth: sh.wedge_depth,
    };
    let out = run.w.quantum(shadow_comparison(&setup))?;
    run.metric("lattice_shadow_ratio", out.lattice_ratio);
    run.metric("free_shadow_ratio", out.free_ratio);
    run.metric("wedge_nodes", out.wedge.iter().filter(|b| **b).count() as f64);

    // All four grids share one header so they can be compared directly.
    let field = "integrated_density";
    for (stem, data) in [
        ("lattice_with_disk", &out.lattice_with_disk),
        ("lattice_without_disk", &out.lattice_without_disk),
        ("free_with_disk", &out.free_with_disk),
        ("free_without_disk", &out.free_without_disk),
    ] {
        run.w.grid(stem, field, &grid, GridData::F64(data.clone()))?;
    }
    let background = lattice.sample_on_grid(&grid)?.values;
    run.w.overlay("lattice_with_disk_overlay", &out.lattice_with_disk, &background, &grid)?;
    run.w.gray("free_with_disk", &out.free_with_disk, &grid)?;
    let wedge: Vec<f64> = out.wedge.iter().map(|&b| b as u8 as f64).collect();
    run.w.gray("wedge", &wedge, &grid)
}

fn manifold_map(run: &mut Run) -> Result<(), RunError> {
    let s = run.s;
    let m = s.map.as_ref().ok_or(RunError::Missing("map"))?;
    let start = stripes_and_circles(m.points_per_stripe, m.points_per_circle);
    let snaps = evolve_manifold(&start, m.k, m.steps, &m.snapshots)?;
    let img_grid = GridSpec::new(m.image_size, m.image_size, Rect::new(0.0, TAU, -PI, PI)).expect("image grid");
    for snap in &snaps {
        let stem = format!("manifold_{:04}", snap.n);
        let mut p = PointSet::new(stem.clone(), &["x", "p", "label"]);
        let mut d = DensityGrid::new(img_grid);
        for (pt, label) in snap.points.iter().zip(&snap.labels) {
            p.push(&[pt.x, pt.p, *label as f64]);
            d.add([pt.x.rem_euclid(TAU), (pt.p + PI).rem_euclid(TAU) - PI]);
        }
        run.w.points(&stem, &p)?;
        run.w.gray(&stem, &d.as_f64(), &img_grid)?;
    }
    let msd = momentum_diffusion(m.k, m.diffusion_trajectories, m.diffusion_steps, s.seed)?;
    let slope = fit_slope(&msd, m.diffusion_steps / 2..m.diffusion_steps + 1);
    run.metric("diffusion_slope", slope);
    run.metric("diffusion_slope_over_quasilinear", slope / (0.5 * m.k * m.k));
    run.metric("max_momentum_excursion", max_momentum_excursion(m.k, m.diffusion_trajectories, m.diffusion_steps, s.seed));
    let mut p = PointSet::new("momentum_diffusion", &["n", "msd"]);
    msd.iter().enumerate().for_each(|(i, v)| p.push(&[i as f64, *v]));
    run.w.points("momentum_diffusion", &p)
}

fn segments(name: &str, segs: &[Segment]) -> PointSet {
    let mut p = PointSet::new(name, &["a0", "q0", "a1", "q1"]);
    segs.iter().for_each(|s| p.push(&[s[0][0], s[0][1], s[1][0], s[1][1]]));
    p
}

fn write_stability(run: &mut Run, g: &StabilityGrid) -> Result<(), RunError> {
    let spec = GridSpec::new(g.na(), g.nq(), g.extent()).expect("scan grid");
    let stable: Vec<f64> = g.stable.iter().map(|&b| b as u8 as f64).collect();
    let boundary = g.boundary_function();
    let det_err = g.det.iter().map(|d| (d - 1.0).abs()).fold(0.0, f64::max);
    run.metric("stable_fraction", stable.iter().sum::<f64>() / stable.len() as f64);
    run.metric("max_det_error", det_err);
    if det_err > 1e-6 {
        run.warnings.push(format!("monodromy determinant deviates from 1 by {det_err:.2e}"));
    }
    run.w.grid("trace", "trace", &spec, GridData::F64(g.trace.clone()))?;
    run.w.grid("stable", "stable", &spec, GridData::F64(stable.clone()))?;
    run.w.gray("stable", &stable, &spec)?;
    // |trace| - 2 clipped so the stable region keeps its contrast.
    let clipped: Vec<f64> = boundary.iter().map(|b| b.clamp(-2.0, 2.0)).collect();
    run.w.signed("stability_margin", &clipped, &spec)?;
    run.w.points("stability_contours", &segments("stability_contours", &stability_contours(g)))
}

fn stability_scan(run: &mut Run) -> Result<(), RunError> {
    let sc = run.s.scan.as_ref().ok_or(RunError::Missing("scan"))?;
    let g = stability_diagram(sc.a, sc.q, sc.resolution, sc.omega)?;
    write_stability(run, &g)
}

fn retention_scan(run: &mut Run) -> Result<(), RunError> {
    let s = run.s;
    let sc = s.scan.as_ref().ok_or(RunError::Missing("scan"))?;
    let scan = RetentionScan {
        kinetic_energy: sc.kinetic_energy,
        wedge: sc.wedge_deg.to_radians(),
        n_traj: sc.trajectories,
        t_final: sc.t_final,
        half_width: sc.half_width,
        dt_safety: sc.dt_safety,
        max_dt: sc.max_dt,
        integrator: s.numerics.integrator,
    };
    let g = retention_diagram(sc.a, sc.q, sc.resolution, &scan)?;
    write_stability(run, &g)?;
    let spec = GridSpec::new(g.na(), g.nq(), g.extent()).expect("scan grid");
    let ret = g.retention.clone().unwrap_or_default();
    run.w.grid("retention", "retention", &spec, GridData::F64(ret.clone()))?;
    run.w.gray("retention", &ret, &spec)?;
    run.w.points("energetic_lines", &segments("energetic_lines", &energetic_lines(g.extent(), sc.kinetic_energy)))?;
    if let Some(sum) = summarize_retention(&g) {
        run.metric("trapped_nodes", sum.trapped_nodes as f64);
        run.metric("trapped_min_retention", sum.trapped_min);
        run.metric("stable_over_barrier_nodes", sum.stable_over_barrier_nodes as f64);
        run.metric("unstable_over_barrier_nodes", sum.unstable_over_barrier_nodes as f64);
        run.metric("stable_over_barrier_mean", sum.stable_over_barrier_mean);
        run.metric("unstable_over_barrier_mean", sum.unstable_over_barrier_mean);
        run.metric("stability_contrast", sum.contrast());
        if sum.diverged_nodes > 0 {
            run.failures.push(format!("{} scan nodes diverged", sum.diverged_nodes));
        }
    }
    Ok(())
}

fn superwire(run: &mut Run) -> Result<(), RunError> {
    let s = run.s;
    let n = &s.numerics;
    let f = s.filter.as_ref().ok_or(RunError::Missing("filter"))?;
    let Some(SourceSpec::Gaussian { center, sigma, k0, .. }) = s.source else {
        return Err(RunError::Missing("gaussian source"));
    };
    let Some((width, strength)) = s.absorber.iter().find_map(|a| match *a {
        AbsorberGeometry::Border { width, strength } => Some((width, strength)),
        _ => None,
    }) else {
        return Err(RunError::Missing("border absorber"));
    };
    let grid = run.spectral_grid()?;
    let field = s.build_potential()?;
    let cfg = SuperwireConfig {
        grid,
        hbar: n.hbar,
        mass: n.mass,
        center,
        sigma0: sigma,
        k0: k0[0],
        energy: f.energy,
        dt: n.dt,
        steps: n.steps,
        absorber_width: width,
        absorber_strength: strength,
        channel_y: f.channel_y,
        channel_half_width: f.channel_half_width,
        window: Some(f.window.window(n.dt * n.steps as f64)),
    };
    let res = run.w.quantum(superwire_filter(&field, &cfg))?;
    run.metric("filter_energy", res.energy);
    run.metric("confinement_ratio", res.confinement_ratio);
    run.metric("norm_loss", res.report.norm_loss());
    let spec = axial_spectrum(&res.psi_e, f.channel_y, f.channel_half_width);
    let dk = TAU / grid.extent.width();
    if let Some([period, _]) = field.periodic_cell() {
        let (k, off) = peak_offset_bins(&spec, period, dk);
        run.metric("axial_peak_k", k);
        run.metric("axial_peak_offset_bins", off);
    }
    run.w.wave("psi_e", &res.psi_e)?;
    let mut p = PointSet::new("axial_spectrum", &["k", "power"]);
    spec.iter().for_each(|(k, w)| p.push(&[*k, *w]));
    run.w.points("axial_spectrum", &p)?;
    if f.baseline {
        let base = run.w.quantum(superwire_filter(&make_zero(), &cfg))?;
        run.metric("baseline_confinement_ratio", base.confinement_ratio);
        run.metric("confinement_gain", res.confinement_ratio / base.confinement_ratio);
        run.w.wave("baseline_psi_e", &base.psi_e)?;
    }
    Ok(())
}
