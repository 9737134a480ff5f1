//! Scenario files.
//!
//! A scenario is a TOML document with a few top-level keys and one table
//! per concern:
//!
//! ```toml
//! name = "integrable-cross"
//! kind = "classical-density"
//! seed = 1
//!
//! [potential]
//! type = "cosine-integrable"
//! amplitude = 1.0
//!
//! [source]
//! type = "point"
//! energy = 8.0
//! count = 2000
//!
//! [numerics]
//! dt = 0.01
//! steps = 4000
//! grid = [128, 128]
//! extent = [-30.0, 30.0, -30.0, 30.0]
//! ```
//!
//! Parsing is strict: unknown keys are errors (with the nearest valid key
//! suggested), and every problem in the file is reported, not just the
//! first. Missing optional keys are filled with defaults, so serialising a
//! parsed scenario gives a complete, equivalent file.

use crate::classical::Integrator;
use crate::grid::{GridSpec, Rect};
use crate::potential::{
    make_cosine_integrable, make_fermi_lattice, make_mathieu_channel, make_zero, LatticeSpec, PotentialError,
    PotentialField,
};
use crate::quantum::{AbsorberGeometry, Splitting, Window};
use serde::{Deserialize, Serialize};
use std::fmt;
use toml::{Table, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    ClassicalDensity,
    QuantumBranched,
    ShadowComparison,
    ManifoldMap,
    StabilityScan,
    RetentionScan,
    Superwire,
}

impl ExperimentKind {
    pub const ALL: [(&'static str, ExperimentKind); 7] = [
        ("classical-density", Self::ClassicalDensity),
        ("quantum-branched", Self::QuantumBranched),
        ("shadow-comparison", Self::ShadowComparison),
        ("manifold-map", Self::ManifoldMap),
        ("stability-scan", Self::StabilityScan),
        ("retention-scan", Self::RetentionScan),
        ("superwire", Self::Superwire),
    ];

    pub fn is_quantum(self) -> bool {
        matches!(self, Self::QuantumBranched | Self::ShadowComparison | Self::Superwire)
    }

    pub fn name(self) -> &'static str {
        Self::ALL.iter().find(|(_, k)| *k == self).map(|(n, _)| *n).unwrap_or("?")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatticeName {
    Square,
    Triangular,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum PotentialSpec {
    Zero,
    CosineIntegrable {
        amplitude: f64,
    },
    MathieuChannel {
        a: f64,
        q: f64,
    },
    FermiLattice {
        lattice: LatticeName,
        #[serde(skip_serializing_if = "Option::is_none")]
        constant: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        count: Option<usize>,
        #[serde(skip_serializing_if = "Option::is_none")]
        min_spacing: Option<f64>,
        extent: [f64; 4],
        origin: [f64; 2],
        amplitude: f64,
        softness: f64,
        offset: f64,
    },
}

impl PotentialSpec {
    /// Builds the field; random lattices draw from `seed`.
    pub fn build(&self, seed: u64) -> Result<PotentialField, PotentialError> {
        match self {
            PotentialSpec::Zero => Ok(make_zero()),
            PotentialSpec::CosineIntegrable { amplitude } => make_cosine_integrable(*amplitude),
            PotentialSpec::MathieuChannel { a, q } => Ok(make_mathieu_channel(*a, *q)),
            PotentialSpec::FermiLattice { lattice, constant, count, min_spacing, extent, origin, amplitude, softness, offset } => {
                let ext = Rect::new(extent[0], extent[1], extent[2], extent[3]);
                let spec = match lattice {
                    LatticeName::Square => LatticeSpec::square(constant.unwrap_or(f64::NAN), ext),
                    LatticeName::Triangular => LatticeSpec::triangular(constant.unwrap_or(f64::NAN), ext),
                    LatticeName::Random => {
                        LatticeSpec::random(seed, count.unwrap_or(0), min_spacing.unwrap_or(0.0), ext)
                    }
                }
                .with_origin(*origin);
                make_fermi_lattice(&spec, *amplitude, *softness, *offset)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum SourceSpec {
    /// Rays from one point; `energy` is the launch kinetic energy.
    Point { center: [f64; 2], energy: f64, angle_deg: f64, wedge_deg: f64, count: usize },
    /// Parallel rays along `+x` from the segment `x = x0`, `y_min <= y <= y_max`.
    Plane { x0: f64, y_min: f64, y_max: f64, energy: f64, count: usize },
    /// Gaussian packet; classical runs sample `count` points of its Wigner
    /// distribution.
    Gaussian { center: [f64; 2], sigma: f64, k0: [f64; 2], count: usize },
    /// Bloch state, optionally under a Gaussian envelope.
    Bloch {
        k: [f64; 2],
        band: usize,
        #[serde(skip_serializing_if = "Option::is_none")]
        envelope_sigma: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        envelope_center: Option<[f64; 2]>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Numerics {
    pub dt: f64,
    pub steps: usize,
    pub integrator: Integrator,
    pub splitting: Splitting,
    pub grid: [usize; 2],
    pub extent: [f64; 4],
    /// Steps between observations; 0 picks a default per experiment.
    pub cadence: usize,
    pub hbar: f64,
    pub mass: f64,
}

impl Numerics {
    pub fn rect(&self) -> Rect {
        Rect::new(self.extent[0], self.extent[1], self.extent[2], self.extent[3])
    }

    pub fn grid_spec(&self) -> Option<GridSpec> {
        GridSpec::new(self.grid[0], self.grid[1], self.rect()).ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowKind {
    Hann,
    Rectangular,
}

impl WindowKind {
    pub fn window(self, duration: f64) -> Window {
        match self {
            WindowKind::Hann => Window::Hann { duration },
            WindowKind::Rectangular => Window::Rectangular,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy: Option<f64>,
    pub window: WindowKind,
    pub channel_y: f64,
    pub channel_half_width: f64,
    /// Also run the same geometry in free space for comparison.
    pub baseline: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowSpec {
    pub disk_center: [f64; 2],
    pub disk_radius: f64,
    pub disk_width: f64,
    pub disk_strength: f64,
    /// Half opening angle of the wedge behind the disk, measured from the
    /// packet's direction of motion.
    pub wedge_half_angle_deg: f64,
    /// Wedge spans distances `disk_radius .. disk_radius + wedge_depth`
    /// from the disk centre.
    pub wedge_depth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    pub a: [f64; 2],
    pub q: [f64; 2],
    pub resolution: [usize; 2],
    pub omega: f64,
    pub kinetic_energy: f64,
    pub wedge_deg: f64,
    pub trajectories: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    pub half_width: f64,
    pub dt_safety: f64,
    pub max_dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSpec {
    pub k: f64,
    pub steps: usize,
    pub snapshots: Vec<usize>,
    pub points_per_stripe: usize,
    pub points_per_circle: usize,
    pub diffusion_trajectories: usize,
    pub diffusion_steps: usize,
    pub image_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outputs {
    pub grids: bool,
    pub images: bool,
    pub points: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checks {
    /// Largest tolerated relative energy drift of classical trajectories.
    pub max_energy_drift: f64,
    /// Largest tolerated norm change of absorber-free quantum runs.
    pub max_norm_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub kind: ExperimentKind,
    pub seed: u64,
    pub potential: PotentialSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<SourceSpec>,
    pub numerics: Numerics,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub absorber: Vec<AbsorberGeometry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filter: Option<FilterSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shadow: Option<ShadowSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub map: Option<MapSpec>,
    pub outputs: Outputs,
    pub checks: Checks,
}

impl Scenario {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serialises")
    }

    pub fn build_potential(&self) -> Result<PotentialField, PotentialError> {
        self.potential.build(self.seed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioError {
    /// Dotted key path, e.g. `source.sigma` or `absorber[1].width`.
    pub location: String,
    pub message: String,
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioErrors(pub Vec<ScenarioError>);

impl fmt::Display for ScenarioErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ScenarioErrors {}

type Errs = Vec<ScenarioError>;

fn err(errs: &mut Errs, location: impl Into<String>, message: impl Into<String>) {
    errs.push(ScenarioError { location: location.into(), message: message.into() });
}

/// Closest known key by edit distance, if reasonably close.
fn nearest<'a>(key: &str, known: &[&'a str]) -> Option<&'a str> {
    known
        .iter()
        .map(|k| (strsim::levenshtein(key, k), *k))
        .filter(|(d, k)| *d <= 2.max(k.len() / 3))
        .min()
        .map(|(_, k)| k)
}

/// One table being consumed; whatever is left at `finish` is unknown.
struct Sec {
    path: String,
    table: Table,
    known: Vec<&'static str>,
}

impl Sec {
    fn new(path: impl Into<String>, table: Table) -> Self {
        Self { path: path.into(), table, known: Vec::new() }
    }

    fn loc(&self, key: &str) -> String {
        if self.path.is_empty() { key.to_string() } else { format!("{}.{key}", self.path) }
    }

    fn take(&mut self, key: &'static str) -> Option<Value> {
        self.known.push(key);
        self.table.remove(key)
    }

    fn num(&self, key: &str, v: &Value, errs: &mut Errs) -> Option<f64> {
        match v {
            Value::Float(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            other => {
                err(errs, self.loc(key), format!("expected a number, found {}", other.type_str()));
                None
            }
        }
    }

    fn int(&self, key: &str, v: &Value, errs: &mut Errs) -> Option<u64> {
        match v {
            Value::Integer(i) if *i >= 0 => Some(*i as u64),
            other => {
                err(errs, self.loc(key), format!("expected a non-negative integer, found {other}"));
                None
            }
        }
    }

    fn f64(&mut self, key: &'static str, default: Option<f64>, errs: &mut Errs) -> f64 {
        match self.take(key) {
            Some(v) => self.num(key, &v, errs).unwrap_or(f64::NAN),
            None => default.unwrap_or_else(|| {
                err(errs, self.loc(key), "required key is missing");
                f64::NAN
            }),
        }
    }

    fn opt_f64(&mut self, key: &'static str, errs: &mut Errs) -> Option<f64> {
        let v = self.take(key)?;
        self.num(key, &v, errs)
    }

    fn usize(&mut self, key: &'static str, default: Option<usize>, errs: &mut Errs) -> usize {
        match self.take(key) {
            Some(v) => self.int(key, &v, errs).unwrap_or(0) as usize,
            None => default.unwrap_or_else(|| {
                err(errs, self.loc(key), "required key is missing");
                0
            }),
        }
    }

    fn opt_usize(&mut self, key: &'static str, errs: &mut Errs) -> Option<usize> {
        let v = self.take(key)?;
        self.int(key, &v, errs).map(|x| x as usize)
    }

    fn bool(&mut self, key: &'static str, default: bool, errs: &mut Errs) -> bool {
        match self.take(key) {
            Some(Value::Boolean(b)) => b,
            Some(other) => {
                err(errs, self.loc(key), format!("expected true or false, found {other}"));
                default
            }
            None => default,
        }
    }

    fn string(&mut self, key: &'static str, default: Option<&str>, errs: &mut Errs) -> Option<String> {
        match self.take(key) {
            Some(Value::String(s)) => Some(s),
            Some(other) => {
                err(errs, self.loc(key), format!("expected a string, found {other}"));
                None
            }
            None => match default {
                Some(d) => Some(d.to_string()),
                None => {
                    err(errs, self.loc(key), "required key is missing");
                    None
                }
            },
        }
    }

    fn choice<T: Copy>(
        &mut self,
        key: &'static str,
        default: Option<T>,
        options: &[(&str, T)],
        errs: &mut Errs,
    ) -> Option<T> {
        if !self.table.contains_key(key) {
            self.known.push(key);
            if default.is_none() {
                err(errs, self.loc(key), "required key is missing");
            }
            return default;
        }
        let s = self.string(key, None, errs)?;
        if let Some((_, v)) = options.iter().find(|(n, _)| *n == s) {
            return Some(*v);
        }
        let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
        let hint = nearest(&s, &names).map(|n| format!("; did you mean \"{n}\"?")).unwrap_or_default();
        err(errs, self.loc(key), format!("unknown value \"{s}\", expected one of {}{hint}", names.join(", ")));
        None
    }

    fn floats(&self, key: &str, v: &Value, errs: &mut Errs) -> Option<Vec<f64>> {
        let Value::Array(a) = v else {
            err(errs, self.loc(key), format!("expected an array of numbers, found {}", v.type_str()));
            return None;
        };
        a.iter().map(|x| self.num(key, x, errs)).collect()
    }

    fn arr<const N: usize>(&mut self, key: &'static str, default: Option<[f64; N]>, errs: &mut Errs) -> [f64; N] {
        let Some(v) = self.take(key) else {
            return default.unwrap_or_else(|| {
                err(errs, self.loc(key), "required key is missing");
                [f64::NAN; N]
            });
        };
        match self.floats(key, &v, errs) {
            Some(xs) if xs.len() == N => xs.try_into().expect("length checked"),
            Some(xs) => {
                err(errs, self.loc(key), format!("expected {N} numbers, found {}", xs.len()));
                [f64::NAN; N]
            }
            None => [f64::NAN; N],
        }
    }

    fn opt_arr<const N: usize>(&mut self, key: &'static str, errs: &mut Errs) -> Option<[f64; N]> {
        self.table.contains_key(key).then(|| self.arr::<N>(key, None, errs))
    }

    fn ints(&mut self, key: &'static str, default: Vec<usize>, errs: &mut Errs) -> Vec<usize> {
        match self.take(key) {
            Some(Value::Array(a)) => a.iter().filter_map(|x| self.int(key, x, errs).map(|n| n as usize)).collect(),
            Some(other) => {
                err(errs, self.loc(key), format!("expected an array of integers, found {}", other.type_str()));
                default
            }
            None => default,
        }
    }

    fn uarr<const N: usize>(&mut self, key: &'static str, default: [usize; N], errs: &mut Errs) -> [usize; N] {
        let present = self.table.contains_key(key);
        let v = self.ints(key, default.to_vec(), errs);
        match v.try_into() {
            Ok(a) => a,
            Err(v) => {
                if present {
                    err(errs, self.loc(key), format!("expected {N} integers, found {}", v.len()));
                }
                default
            }
        }
    }

    fn sub(&mut self, key: &'static str, errs: &mut Errs) -> Option<Sec> {
        match self.take(key)? {
            Value::Table(t) => Some(Sec::new(self.loc(key), t)),
            other => {
                err(errs, self.loc(key), format!("expected a table, found {}", other.type_str()));
                None
            }
        }
    }

    fn finish(self, errs: &mut Errs) {
        for key in self.table.keys() {
            let hint = nearest(key, &self.known).map(|k| format!("; did you mean `{k}`?")).unwrap_or_default();
            err(errs, self.loc(key), format!("unknown key `{key}`{hint}"));
        }
    }
}

const INTEGRATORS: [(&str, Integrator); 2] = [("verlet", Integrator::Verlet), ("yoshida4", Integrator::Yoshida4)];
const SPLITTINGS: [(&str, Splitting); 2] = [("strang", Splitting::Strang), ("lie", Splitting::Lie)];

fn parse_potential(sec: Option<Sec>, numerics_extent: [f64; 4], errs: &mut Errs) -> PotentialSpec {
    let Some(mut s) = sec else { return PotentialSpec::Zero };
    let kinds = [("zero", 0), ("cosine-integrable", 1), ("mathieu-channel", 2), ("fermi-lattice", 3)];
    let spec = match s.choice("type", None, &kinds, errs) {
        Some(0) => PotentialSpec::Zero,
        Some(1) => PotentialSpec::CosineIntegrable { amplitude: s.f64("amplitude", Some(1.0), errs) },
        Some(2) => PotentialSpec::MathieuChannel { a: s.f64("a", None, errs), q: s.f64("q", None, errs) },
        Some(_) => {
            let lattices = [
                ("square", LatticeName::Square),
                ("triangular", LatticeName::Triangular),
                ("random", LatticeName::Random),
            ];
            let lattice = s.choice("lattice", None, &lattices, errs).unwrap_or(LatticeName::Square);
            let (constant, count, min_spacing) = if lattice == LatticeName::Random {
                (None, Some(s.usize("count", None, errs)), Some(s.f64("min_spacing", Some(0.0), errs)))
            } else {
                (Some(s.f64("constant", None, errs)), None, None)
            };
            PotentialSpec::FermiLattice {
                lattice,
                constant,
                count,
                min_spacing,
                extent: s.arr("extent", Some(numerics_extent), errs),
                origin: s.arr("origin", Some([0.0, 0.0]), errs),
                amplitude: s.f64("amplitude", Some(1.0), errs),
                softness: s.f64("softness", None, errs),
                offset: s.f64("offset", Some(0.0), errs),
            }
        }
        None => PotentialSpec::Zero,
    };
    s.finish(errs);
    spec
}

fn parse_source(mut s: Sec, errs: &mut Errs) -> Option<SourceSpec> {
    let kinds = [("point", 0), ("plane", 1), ("gaussian", 2), ("bloch", 3)];
    let spec = match s.choice("type", None, &kinds, errs) {
        Some(0) => Some(SourceSpec::Point {
            center: s.arr("center", Some([0.0, 0.0]), errs),
            energy: s.f64("energy", None, errs),
            angle_deg: s.f64("angle_deg", Some(0.0), errs),
            wedge_deg: s.f64("wedge_deg", Some(360.0), errs),
            count: s.usize("count", None, errs),
        }),
        Some(1) => Some(SourceSpec::Plane {
            x0: s.f64("x0", None, errs),
            y_min: s.f64("y_min", None, errs),
            y_max: s.f64("y_max", None, errs),
            energy: s.f64("energy", None, errs),
            count: s.usize("count", None, errs),
        }),
        Some(2) => Some(SourceSpec::Gaussian {
            center: s.arr("center", Some([0.0, 0.0]), errs),
            sigma: s.f64("sigma", None, errs),
            k0: s.arr("k0", Some([0.0, 0.0]), errs),
            count: s.usize("count", Some(0), errs),
        }),
        Some(_) => Some(SourceSpec::Bloch {
            k: s.arr("k", Some([0.0, 0.0]), errs),
            band: s.usize("band", Some(0), errs),
            envelope_sigma: s.opt_f64("envelope_sigma", errs),
            envelope_center: s.opt_arr("envelope_center", errs),
        }),
        None => None,
    };
    s.finish(errs);
    spec
}

fn parse_numerics(sec: Option<Sec>, errs: &mut Errs) -> Numerics {
    let mut s = sec.unwrap_or_else(|| Sec::new("numerics", Table::new()));
    let n = Numerics {
        dt: s.f64("dt", Some(0.01), errs),
        steps: s.usize("steps", Some(1000), errs),
        integrator: s.choice("integrator", Some(Integrator::Yoshida4), &INTEGRATORS, errs).unwrap_or_default(),
        splitting: s.choice("splitting", Some(Splitting::Strang), &SPLITTINGS, errs).unwrap_or_default(),
        grid: s.uarr("grid", [128, 128], errs),
        extent: s.arr("extent", Some([-10.0, 10.0, -10.0, 10.0]), errs),
        cadence: s.usize("cadence", Some(0), errs),
        hbar: s.f64("hbar", Some(1.0), errs),
        mass: s.f64("mass", Some(1.0), errs),
    };
    s.finish(errs);
    n
}

fn parse_absorbers(v: Option<Value>, errs: &mut Errs) -> Vec<AbsorberGeometry> {
    let items = match v {
        None => return Vec::new(),
        Some(Value::Array(a)) => a,
        Some(Value::Table(t)) => vec![Value::Table(t)],
        Some(other) => {
            err(errs, "absorber", format!("expected [[absorber]] tables, found {}", other.type_str()));
            return Vec::new();
        }
    };
    let mut out = Vec::new();
    for (i, item) in items.into_iter().enumerate() {
        let path = format!("absorber[{i}]");
        let Value::Table(t) = item else {
            err(errs, path, "expected a table");
            continue;
        };
        let mut s = Sec::new(path, t);
        match s.choice("shape", None, &[("border", 0), ("disk", 1)], errs) {
            Some(0) => out.push(AbsorberGeometry::Border {
                width: s.f64("width", None, errs),
                strength: s.f64("strength", Some(0.2), errs),
            }),
            Some(_) => out.push(AbsorberGeometry::Disk {
                center: s.arr("center", Some([0.0, 0.0]), errs),
                radius: s.f64("radius", None, errs),
                width: s.f64("width", None, errs),
                strength: s.f64("strength", Some(0.2), errs),
            }),
            None => {}
        }
        s.finish(errs);
    }
    out
}

fn parse_filter(mut s: Sec, errs: &mut Errs) -> FilterSpec {
    let windows = [("hann", WindowKind::Hann), ("rectangular", WindowKind::Rectangular)];
    let f = FilterSpec {
        energy: s.opt_f64("energy", errs),
        window: s.choice("window", Some(WindowKind::Hann), &windows, errs).unwrap_or(WindowKind::Hann),
        channel_y: s.f64("channel_y", Some(0.0), errs),
        channel_half_width: s.f64("channel_half_width", Some(std::f64::consts::FRAC_PI_2), errs),
        baseline: s.bool("baseline", false, errs),
    };
    s.finish(errs);
    f
}

fn parse_shadow(mut s: Sec, errs: &mut Errs) -> ShadowSpec {
    let sh = ShadowSpec {
        disk_center: s.arr("disk_center", Some([0.0, 0.0]), errs),
        disk_radius: s.f64("disk_radius", None, errs),
        disk_width: s.f64("disk_width", None, errs),
        disk_strength: s.f64("disk_strength", Some(0.2), errs),
        wedge_half_angle_deg: s.f64("wedge_half_angle_deg", Some(20.0), errs),
        wedge_depth: s.f64("wedge_depth", None, errs),
    };
    s.finish(errs);
    sh
}

fn parse_scan(mut s: Sec, errs: &mut Errs) -> ScanSpec {
    let sc = ScanSpec {
        a: s.arr("a", None, errs),
        q: s.arr("q", None, errs),
        resolution: s.uarr("resolution", [40, 40], errs),
        omega: s.f64("omega", Some(1.0), errs),
        kinetic_energy: s.f64("kinetic_energy", Some(1.0), errs),
        wedge_deg: s.f64("wedge_deg", Some(60.0), errs),
        trajectories: s.usize("trajectories", Some(500), errs),
        t_final: s.opt_f64("t_final", errs),
        half_width: s.f64("half_width", Some(std::f64::consts::FRAC_PI_2), errs),
        dt_safety: s.f64("dt_safety", Some(0.05), errs),
        max_dt: s.f64("max_dt", Some(0.05), errs),
    };
    s.finish(errs);
    sc
}

fn parse_map(mut s: Sec, errs: &mut Errs) -> MapSpec {
    let m = MapSpec {
        k: s.f64("k", None, errs),
        steps: s.usize("steps", None, errs),
        snapshots: s.ints("snapshots", Vec::new(), errs),
        points_per_stripe: s.usize("points_per_stripe", Some(400), errs),
        points_per_circle: s.usize("points_per_circle", Some(100), errs),
        diffusion_trajectories: s.usize("diffusion_trajectories", Some(1000), errs),
        diffusion_steps: s.usize("diffusion_steps", Some(1000), errs),
        image_size: s.usize("image_size", Some(256), errs),
    };
    s.finish(errs);
    m
}

fn parse_table(root: Table) -> Result<Scenario, ScenarioErrors> {
    let mut errs = Errs::new();
    let mut top = Sec::new("", root);
    let name = top.string("name", None, &mut errs).unwrap_or_default();
    let kind = top.choice("kind", None, &ExperimentKind::ALL, &mut errs);
    let seed = top.opt_usize("seed", &mut errs).unwrap_or(0) as u64;
    let numerics = {
        let s = top.sub("numerics", &mut errs);
        parse_numerics(s, &mut errs)
    };
    let potential = {
        let s = top.sub("potential", &mut errs);
        parse_potential(s, numerics.extent, &mut errs)
    };
    let source = top.sub("source", &mut errs).and_then(|s| parse_source(s, &mut errs));
    let absorber = {
        let v = top.take("absorber");
        parse_absorbers(v, &mut errs)
    };
    let filter = top.sub("filter", &mut errs).map(|s| parse_filter(s, &mut errs));
    let shadow = top.sub("shadow", &mut errs).map(|s| parse_shadow(s, &mut errs));
    let scan = top.sub("scan", &mut errs).map(|s| parse_scan(s, &mut errs));
    let map = top.sub("map", &mut errs).map(|s| parse_map(s, &mut errs));
    let outputs = {
        let mut s = top.sub("outputs", &mut errs).unwrap_or_else(|| Sec::new("outputs", Table::new()));
        let o = Outputs {
            grids: s.bool("grids", true, &mut errs),
            images: s.bool("images", true, &mut errs),
            points: s.bool("points", true, &mut errs),
        };
        s.finish(&mut errs);
        o
    };
    let checks = {
        let mut s = top.sub("checks", &mut errs).unwrap_or_else(|| Sec::new("checks", Table::new()));
        let c = Checks {
            max_energy_drift: s.f64("max_energy_drift", Some(1e-4), &mut errs),
            max_norm_drift: s.f64("max_norm_drift", Some(1e-8), &mut errs),
        };
        s.finish(&mut errs);
        c
    };
    top.finish(&mut errs);

    let Some(kind) = kind else { return Err(ScenarioErrors(errs)) };
    let scenario = Scenario {
        name,
        kind,
        seed,
        potential,
        source,
        numerics,
        absorber,
        filter,
        shadow,
        scan,
        map,
        outputs,
        checks,
    };
    if errs.is_empty() {
        validate(&scenario, &mut errs);
    }
    if errs.is_empty() { Ok(scenario) } else { Err(ScenarioErrors(errs)) }
}

fn positive(errs: &mut Errs, loc: &str, v: f64) {
    if !(v > 0.0 && v.is_finite()) {
        err(errs, loc, format!("must be positive, got {v}"));
    }
}

/// Cross-field and dimensional checks on an otherwise well-formed scenario.
fn validate(s: &Scenario, errs: &mut Errs) {
    use ExperimentKind as K;
    if s.name.trim().is_empty() || s.name.contains(['\n', '/', '\\']) {
        err(errs, "name", "must be a non-empty single-line name without path separators");
    }
    let n = &s.numerics;
    positive(errs, "numerics.dt", n.dt);
    if n.steps == 0 {
        err(errs, "numerics.steps", "must be at least 1");
    }
    positive(errs, "numerics.hbar", n.hbar);
    positive(errs, "numerics.mass", n.mass);
    let min_nodes = if s.kind.is_quantum() { 8 } else { 2 };
    if n.grid[0] < min_nodes || n.grid[1] < min_nodes {
        err(errs, "numerics.grid", format!("needs at least {min_nodes} nodes per axis"));
    }
    if !n.rect().is_valid() {
        err(errs, "numerics.extent", "must be [x0, x1, y0, y1] with x0 < x1 and y0 < y1");
    }
    let grid = n.grid_spec();
    let spacing = grid.map(|g| g.dx().max(g.dy())).unwrap_or(f64::NAN);

    let needs_source = matches!(s.kind, K::ClassicalDensity | K::QuantumBranched | K::ShadowComparison | K::Superwire);
    match (&s.source, needs_source) {
        (None, true) => err(errs, "source", format!("a [source] table is required for {}", s.kind.name())),
        (Some(src), true) => {
            let ok = match src {
                SourceSpec::Point { .. } | SourceSpec::Plane { .. } => s.kind == K::ClassicalDensity,
                SourceSpec::Gaussian { .. } => true,
                SourceSpec::Bloch { .. } => s.kind == K::QuantumBranched,
            };
            if !ok {
                err(errs, "source.type", format!("this source type is not supported by {}", s.kind.name()));
            }
            match src {
                SourceSpec::Point { energy, count, wedge_deg, .. } => {
                    positive(errs, "source.energy", *energy);
                    positive(errs, "source.wedge_deg", *wedge_deg);
                    if *count == 0 {
                        err(errs, "source.count", "must be at least 1");
                    }
                }
                SourceSpec::Plane { energy, count, y_min, y_max, .. } => {
                    positive(errs, "source.energy", *energy);
                    if *count == 0 {
                        err(errs, "source.count", "must be at least 1");
                    }
                    if !(y_max >= y_min) {
                        err(errs, "source.y_max", "must not be below y_min");
                    }
                }
                SourceSpec::Gaussian { sigma, count, .. } => {
                    positive(errs, "source.sigma", *sigma);
                    if s.kind.is_quantum() && !(*sigma > spacing) {
                        err(errs, "source.sigma", format!("packet width {sigma} is not resolved by grid spacing {spacing:.4}"));
                    }
                    if s.kind == K::ClassicalDensity && *count == 0 {
                        err(errs, "source.count", "classical runs need at least 1 sample");
                    }
                }
                SourceSpec::Bloch { envelope_sigma, .. } => {
                    if let Some(w) = envelope_sigma {
                        if !(*w > spacing) {
                            err(errs, "source.envelope_sigma", format!("envelope {w} is not resolved by grid spacing {spacing:.4}"));
                        }
                    }
                }
            }
        }
        (Some(_), false) => err(errs, "source", format!("{} does not use a source", s.kind.name())),
        (None, false) => {}
    }

    for (i, a) in s.absorber.iter().enumerate() {
        let (w, st) = match *a {
            AbsorberGeometry::Border { width, strength } => (width, strength),
            AbsorberGeometry::Disk { width, strength, radius, .. } => {
                positive(errs, &format!("absorber[{i}].radius"), radius);
                (width, strength)
            }
        };
        if !(w >= 4.0 * spacing) {
            err(errs, format!("absorber[{i}].width"), format!("absorber is too thin: {w} spans {:.1} cells, need at least 4", w / spacing));
        }
        if !(0.0..1.0).contains(&st) {
            err(errs, format!("absorber[{i}].strength"), "must lie in [0, 1)");
        }
    }
    if !s.absorber.is_empty() && !s.kind.is_quantum() {
        err(errs, "absorber", format!("{} does not use absorbers", s.kind.name()));
    }

    match (s.kind, &s.filter) {
        (K::Superwire, None) => err(errs, "filter", "a [filter] table is required for superwire"),
        (K::QuantumBranched | K::Superwire, Some(f)) => {
            positive(errs, "filter.channel_half_width", f.channel_half_width);
        }
        (_, Some(_)) => err(errs, "filter", format!("{} does not use a filter", s.kind.name())),
        _ => {}
    }
    if s.kind == K::Superwire && !s.absorber.iter().any(|a| matches!(a, AbsorberGeometry::Border { .. })) {
        err(errs, "absorber", "superwire needs a border absorber");
    }
    match (s.kind, &s.shadow) {
        (K::ShadowComparison, None) => err(errs, "shadow", "a [shadow] table is required for shadow-comparison"),
        (K::ShadowComparison, Some(sh)) => {
            positive(errs, "shadow.disk_radius", sh.disk_radius);
            positive(errs, "shadow.wedge_depth", sh.wedge_depth);
            if !(sh.disk_width >= 4.0 * spacing) {
                err(errs, "shadow.disk_width", format!("absorber is too thin: {} spans {:.1} cells, need at least 4", sh.disk_width, sh.disk_width / spacing));
            }
            if !(0.0..1.0).contains(&sh.disk_strength) {
                err(errs, "shadow.disk_strength", "must lie in [0, 1)");
            }
            if !(sh.disk_width <= sh.disk_radius) {
                err(errs, "shadow.disk_width", "must not exceed disk_radius");
            }
        }
        (_, Some(_)) => err(errs, "shadow", format!("{} does not use [shadow]", s.kind.name())),
        _ => {}
    }
    match (s.kind, &s.scan) {
        (K::StabilityScan | K::RetentionScan, None) => err(errs, "scan", format!("a [scan] table is required for {}", s.kind.name())),
        (K::StabilityScan | K::RetentionScan, Some(sc)) => {
            for (key, r) in [("scan.a", sc.a), ("scan.q", sc.q)] {
                if !(r[1] > r[0]) {
                    err(errs, key, "range must be [min, max] with min < max");
                }
            }
            if sc.resolution[0] < 2 || sc.resolution[1] < 2 {
                err(errs, "scan.resolution", "needs at least 2 nodes per axis");
            }
            positive(errs, "scan.omega", sc.omega);
            positive(errs, "scan.kinetic_energy", sc.kinetic_energy);
            positive(errs, "scan.wedge_deg", sc.wedge_deg);
            positive(errs, "scan.half_width", sc.half_width);
            positive(errs, "scan.dt_safety", sc.dt_safety);
            positive(errs, "scan.max_dt", sc.max_dt);
            if let Some(t) = sc.t_final {
                positive(errs, "scan.t_final", t);
            }
            if sc.trajectories == 0 {
                err(errs, "scan.trajectories", "must be at least 1");
            }
        }
        (_, Some(_)) => err(errs, "scan", format!("{} does not use [scan]", s.kind.name())),
        _ => {}
    }
    match (s.kind, &s.map) {
        (K::ManifoldMap, None) => err(errs, "map", "a [map] table is required for manifold-map"),
        (K::ManifoldMap, Some(m)) => {
            if let Some(bad) = m.snapshots.iter().find(|&&t| t > m.steps) {
                err(errs, "map.snapshots", format!("snapshot {bad} is beyond steps = {}", m.steps));
            }
            if m.points_per_stripe == 0 || m.points_per_circle < 3 {
                err(errs, "map.points_per_stripe", "need at least 1 point per stripe and 3 per circle");
            }
            if m.image_size < 2 {
                err(errs, "map.image_size", "must be at least 2");
            }
        }
        (_, Some(_)) => err(errs, "map", format!("{} does not use [map]", s.kind.name())),
        _ => {}
    }
    if matches!(s.kind, K::ClassicalDensity | K::QuantumBranched | K::ShadowComparison | K::Superwire) {
        if let Err(e) = s.build_potential() {
            err(errs, "potential", e.to_string());
        }
    }
}

/// Parses and validates a scenario.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioErrors> {
    parse_scenario_with_overrides(text, &[])
}

/// Applies `key=value` overrides (dotted paths, TOML values) to the raw
/// document before validation.
pub fn parse_scenario_with_overrides(text: &str, overrides: &[String]) -> Result<Scenario, ScenarioErrors> {
    let mut root: Table = text.parse().map_err(|e: toml::de::Error| {
        let location = match e.span() {
            Some(span) => {
                let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
                format!("line {line}")
            }
            None => "document".to_string(),
        };
        ScenarioErrors(vec![ScenarioError { location, message: e.message().to_string() }])
    })?;
    let mut errs = Errs::new();
    for o in overrides {
        if let Err(e) = apply_override(&mut root, o) {
            errs.push(e);
        }
    }
    if !errs.is_empty() {
        return Err(ScenarioErrors(errs));
    }
    parse_table(root)
}

fn apply_override(root: &mut Table, spec: &str) -> Result<(), ScenarioError> {
    let fail = |m: String| ScenarioError { location: format!("--override {spec}"), message: m };
    let (path, raw) = spec.split_once('=').ok_or_else(|| fail("expected key=value".into()))?;
    let value = format!("v = {}", raw.trim())
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.trim().to_string()));
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(fail("empty key segment".into()));
    }
    let mut cur = root;
    for k in &keys[..keys.len() - 1] {
        let entry = cur.entry(k.to_string()).or_insert_with(|| Value::Table(Table::new()));
        cur = match entry {
            Value::Table(t) => t,
            _ => return Err(fail(format!("`{k}` is not a table"))),
        };
    }
    cur.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "free"
kind = "classical-density"

[source]
type = "point"
energy = 0.5
count = 10
"#;

    #[test]
    fn minimal_scenario_gets_defaults() {
        let s = parse_scenario(MINIMAL).unwrap();
        assert_eq!(s.potential, PotentialSpec::Zero);
        assert_eq!(s.numerics.dt, 0.01);
        assert_eq!(s.numerics.grid, [128, 128]);
        assert_eq!(s.numerics.integrator, Integrator::Yoshida4);
        assert!(s.outputs.images);
        let Some(SourceSpec::Point { wedge_deg, center, .. }) = s.source else { panic!() };
        assert_eq!((wedge_deg, center), (360.0, [0.0, 0.0]));
    }

    #[test]
    fn unknown_key_names_nearest() {
        let text = r#"
name = "x"
kind = "quantum-branched"
[source]
type = "gaussian"
sigmma = 1.0
"#;
        let e = parse_scenario(text).unwrap_err();
        let hit = e.0.iter().find(|e| e.location == "source.sigmma").expect("error for sigmma");
        assert!(hit.message.contains("`sigma`"), "{}", hit.message);
    }

    #[test]
    fn all_errors_are_reported() {
        let text = r#"
name = "x"
kind = "classical-density"
colour = 3
[numerics]
dt = "fast"
stepz = 10
[source]
type = "point"
count = 5
"#;
        let e = parse_scenario(text).unwrap_err();
        let locs: Vec<&str> = e.0.iter().map(|e| e.location.as_str()).collect();
        for want in ["colour", "numerics.dt", "numerics.stepz", "source.energy"] {
            assert!(locs.contains(&want), "{want} missing from {locs:?}");
        }
    }

    #[test]
    fn dimensional_checks() {
        let text = r#"
name = "q"
kind = "quantum-branched"
[numerics]
grid = [64, 64]
extent = [-8.0, 8.0, -8.0, 8.0]
[source]
type = "gaussian"
sigma = 0.1
[[absorber]]
shape = "border"
width = 0.5
"#;
        let e = parse_scenario(text).unwrap_err();
        let locs: Vec<&str> = e.0.iter().map(|e| e.location.as_str()).collect();
        assert!(locs.contains(&"source.sigma") && locs.contains(&"absorber[0].width"), "{locs:?}");
    }

    #[test]
    fn bad_enum_value_suggests() {
        let text = MINIMAL.replace("kind = \"classical-density\"", "kind = \"classical-densty\"");
        let e = parse_scenario(&text).unwrap_err();
        assert!(e.0[0].message.contains("classical-density"));
    }

    #[test]
    fn round_trip_through_toml() {
        let text = r#"
name = "fermi"
kind = "shadow-comparison"
seed = 3
[potential]
type = "fermi-lattice"
lattice = "triangular"
constant = 2.0
softness = 0.2
[source]
type = "gaussian"
sigma = 1.0
k0 = [0.0, -3.0]
[numerics]
grid = [64, 64]
extent = [-16.0, 16.0, -16.0, 16.0]
[[absorber]]
shape = "border"
width = 2.5
[shadow]
disk_radius = 3.0
disk_width = 2.0
wedge_depth = 6.0
"#;
        let s = parse_scenario(text).unwrap();
        let again = parse_scenario(&s.to_toml()).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn overrides_apply_and_validate() {
        let s = parse_scenario_with_overrides(MINIMAL, &["numerics.dt=0.5".into(), "seed=9".into()]).unwrap();
        assert_eq!((s.numerics.dt, s.seed), (0.5, 9));
        let e = parse_scenario_with_overrides(MINIMAL, &["numerics.dtt=0.5".into()]).unwrap_err();
        assert_eq!(e.0[0].location, "numerics.dtt");
        assert!(parse_scenario_with_overrides(MINIMAL, &["novalue".into()]).is_err());
    }

    #[test]
    fn syntax_error_has_a_line() {
        let e = parse_scenario("name = \"a\"\nkind = \n").unwrap_err();
        assert!(e.0[0].location.starts_with("line"));
    }
}
