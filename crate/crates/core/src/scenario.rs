//! Declarative problem descriptions and the two built-in benchmarks.
//!
//! Units are fixed per model kind. Plane strain: mm, N, MPa (tractions in
//! N/mm² of unit thickness, resultants in N per mm of thickness). Winkler
//! beam: m, kN, kN/m² for the pile modulus and MPa-per-length for the soil
//! springs (see [`PileSpec::spring_scale`]).

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::beam::{BeamError, BeamSection, SoilLayer, SoilLayerTable, WinklerModel};
use crate::constitutive::{MaterialParams, ReturnMapOptions};
use crate::fem2d::{edge_length, EdgeTraction, PlateError, PlateMeshSpec, PlateModel};
use crate::incremental::SolverSettings;
use crate::model::StructuralModel;
use crate::pgd::PgdSettings;
use crate::time::{dof_counts, LoadProgram, LoadShape, TimeGrid};

pub const SCHEMA_VERSION: u32 = 1;
pub const BUILTIN: [&str; 2] = ["plate-benchmark", "monopile-benchmark"];

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid field `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("unknown built-in scenario `{0}` (available: plate-benchmark, monopile-benchmark)")]
    Unknown(String),
    #[error("built-in scenario `{name}` drifted from its reference value for `{field}`: {got} != {expected}")]
    SelfCheck { name: String, field: String, got: f64, expected: f64 },
    #[error(transparent)]
    Plate(#[from] PlateError),
    #[error(transparent)]
    Beam(#[from] BeamError),
}

fn invalid(field: &str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid { field: field.into(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlateLoadKind {
    /// Amplitude is a traction (MPa).
    Traction,
    /// Amplitude is the resultant force on the edge (N per mm thickness).
    Resultant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlateLoad {
    pub edge: String,
    /// Unit direction of the load.
    pub direction: [f64; 2],
    pub kind: PlateLoadKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlateSpec {
    pub mesh: PlateMeshSpec,
    pub fixed_set: String,
    pub material: MaterialParams<f64>,
    #[serde(default)]
    pub return_map: ReturnMapOptions,
    pub load: PlateLoad,
    /// Node whose displacement is traced.
    pub probe_set: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PileSpec {
    pub section: BeamSection<f64>,
    pub layers: Vec<SoilLayer<f64>>,
    /// Factor applied to every stress-like soil parameter (`E`, `σ_p`,
    /// `H_iso`, `H_kin`) to obtain spring values per unit depth. 1 uses the
    /// tabulated values as given.
    #[serde(default = "one")]
    pub spring_scale: f64,
    /// Depths (m) at which profiles are reported.
    #[serde(default = "default_depths")]
    pub profile_depths: Vec<f64>,
}

fn one() -> f64 {
    1.0
}

fn default_depths() -> Vec<f64> {
    (0..10).map(|i| 1.5 * i as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelSpec {
    PlaneStrain(PlateSpec),
    WinklerBeam(PileSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    pub n_tau: usize,
    pub period: f64,
    /// Large-time scale sizes; their product is the number of decomposed
    /// cycles.
    pub scales: Vec<usize>,
    /// Plain cycles solved step by step before the decomposed block.
    #[serde(default = "two")]
    pub warmup_cycles: usize,
}

fn two() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub model: ModelSpec,
    pub load: LoadProgram,
    pub time: TimeSpec,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub pgd: PgdSettings,
}

/// A constructed model of either kind.
pub enum BuiltModel {
    Plate { model: PlateModel<f64>, probe: usize },
    Pile { model: WinklerModel<f64>, depths: Vec<f64> },
}

impl BuiltModel {
    pub fn n_dofs(&self) -> usize {
        match self {
            BuiltModel::Plate { model, .. } => StructuralModel::<f64>::n_dofs(model),
            BuiltModel::Pile { model, .. } => StructuralModel::<f64>::n_dofs(model),
        }
    }

    /// Column names of [`probe`](Self::probe).
    pub fn probe_names(&self) -> Vec<String> {
        match self {
            BuiltModel::Plate { .. } => vec!["probe_ux".into(), "probe_uy".into()],
            BuiltModel::Pile { .. } => vec!["head_deflection".into(), "head_rotation".into()],
        }
    }

    /// Traced displacements: the probe node of a plate, the pile head.
    pub fn probe(&self, u: &[f64]) -> Vec<f64> {
        match self {
            BuiltModel::Plate { model, probe } => model.node_displacement(u, *probe).to_vec(),
            BuiltModel::Pile { .. } => vec![u[0], u[1]],
        }
    }

    /// Profiles `(name, values at the profile depths)` of a pile; empty for
    /// plates.
    pub fn profiles(&self, u: &[f64]) -> Vec<(&'static str, Vec<f64>)> {
        match self {
            BuiltModel::Plate { .. } => Vec::new(),
            BuiltModel::Pile { model, depths } => {
                let p = model.profile(u, depths);
                vec![
                    ("deflection", p.iter().map(|s| s.deflection).collect()),
                    ("shear", p.iter().map(|s| s.shear).collect()),
                    ("moment", p.iter().map(|s| s.moment).collect()),
                ]
            }
        }
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = serde_json::from_str(text)
            .map_err(|e| ScenarioError::Parse { line: e.line(), column: e.column(), message: e.to_string() })?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("scenario serializes");
        Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// A built-in scenario, checked against its reference table.
    pub fn builtin(name: &str) -> Result<Self, ScenarioError> {
        let s = match name {
            "plate-benchmark" => plate_benchmark(),
            "monopile-benchmark" => monopile_benchmark(),
            _ => return Err(ScenarioError::Unknown(name.into())),
        };
        s.self_check()?;
        s.validate()?;
        Ok(s)
    }

    /// Compares a built-in scenario with the quoted benchmark values.
    pub fn self_check(&self) -> Result<(), ScenarioError> {
        let table: &[(&str, f64)] = match self.name.as_str() {
            "plate-benchmark" => PLATE_TABLE,
            "monopile-benchmark" => PILE_TABLE,
            _ => return Ok(()),
        };
        for &(field, expected) in table {
            let got = self.lookup(field).ok_or_else(|| invalid(field, "missing from built-in scenario"))?;
            if (got - expected).abs() > 1e-12 * expected.abs().max(1.0) {
                return Err(ScenarioError::SelfCheck { name: self.name.clone(), field: field.into(), got, expected });
            }
        }
        Ok(())
    }

    fn lookup(&self, field: &str) -> Option<f64> {
        let v = serde_json::to_value(self).ok()?;
        let mut cur = &v;
        for part in field.split('.') {
            cur = match part.parse::<usize>() {
                Ok(i) => cur.get(i)?,
                Err(_) => cur.get(part)?,
            };
        }
        cur.as_f64()
    }

    pub fn grid(&self) -> Result<TimeGrid, ScenarioError> {
        TimeGrid::new(self.time.n_tau, self.time.scales.clone(), self.time.period).map_err(|e| invalid("time", e.to_string()))
    }

    pub fn n_cycles(&self) -> usize {
        self.time.scales.iter().product()
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid("schema_version", format!("expected {SCHEMA_VERSION}, got {}", self.schema_version)));
        }
        let grid = self.grid()?;
        self.load.validate(&grid).map_err(|e| invalid("load", e.to_string()))?;
        if !self.load.shape.is_periodic() {
            return Err(invalid("load.shape", "amplitude at the start and end of a cycle must agree"));
        }
        self.solver.validate().map_err(|e| invalid("solver", e.to_string()))?;
        self.pgd.validate().map_err(|e| invalid("pgd", e.to_string()))?;
        match &self.model {
            ModelSpec::PlaneStrain(p) => {
                let d = p.load.direction;
                if !((d[0] * d[0] + d[1] * d[1] - 1.0).abs() < 1e-9) {
                    return Err(invalid("model.load.direction", "must be a unit vector"));
                }
                if p.mesh.n_side == 0 || p.mesh.n_radial == 0 || !(p.mesh.radius > 0.0) || !(p.mesh.width > 2.0 * p.mesh.radius) {
                    return Err(invalid("model.mesh", "need positive element counts and a hole inside the square"));
                }
            }
            ModelSpec::WinklerBeam(p) => {
                if !(p.spring_scale > 0.0) {
                    return Err(invalid("model.spring_scale", "must be positive"));
                }
                if p.profile_depths.iter().any(|&z| !(0.0..=p.section.length).contains(&z)) {
                    return Err(invalid("model.profile_depths", "depths must lie on the pile"));
                }
            }
        }
        Ok(())
    }

    /// Number of unknowns of the model (builds the mesh for plates).
    pub fn n_dofs(&self) -> Result<usize, ScenarioError> {
        Ok(self.build()?.n_dofs())
    }

    /// `(incremental, decomposed)` unknown counts for `modes` modes.
    pub fn dof_counts(&self, modes: usize) -> Result<(u64, u64), ScenarioError> {
        Ok(dof_counts(&self.grid()?, self.n_dofs()? as u64, modes as u64))
    }

    pub fn build(&self) -> Result<BuiltModel, ScenarioError> {
        match &self.model {
            ModelSpec::PlaneStrain(p) => {
                let mesh = p.mesh.build::<f64>();
                let scale = match p.load.kind {
                    PlateLoadKind::Traction => 1.0,
                    PlateLoadKind::Resultant => 1.0 / edge_length(&mesh, &p.load.edge).map_err(PlateError::from)?,
                };
                let load = [EdgeTraction { set: p.load.edge.clone(), traction: p.load.direction.map(|d| d * scale) }];
                let probe = *mesh
                    .node_set(&p.probe_set)
                    .map_err(PlateError::from)?
                    .first()
                    .ok_or_else(|| invalid("model.probe_set", "empty node set"))?;
                let model = PlateModel::new(mesh, &p.fixed_set, p.material, p.return_map, &load)?;
                Ok(BuiltModel::Plate { model, probe })
            }
            ModelSpec::WinklerBeam(p) => {
                let k = p.spring_scale;
                let layers = p
                    .layers
                    .iter()
                    .map(|l| {
                        let m = l.material;
                        SoilLayer {
                            material: MaterialParams { e: m.e * k, sigma_p: m.sigma_p * k, h_iso: m.h_iso * k, h_kin: m.h_kin * k, ..m },
                            ..*l
                        }
                    })
                    .collect();
                let model = WinklerModel::new(p.section, SoilLayerTable { layers })?;
                Ok(BuiltModel::Pile { model, depths: p.profile_depths.clone() })
            }
        }
    }
}

const PLATE_TABLE: &[(&str, f64)] = &[
    ("model.material.e", 205.0),
    ("model.material.nu", 0.3),
    ("model.material.sigma_p", 100.0),
    ("model.material.h_iso", 1140.0),
    ("model.material.h_kin", 21640.0),
    ("model.material.beta", 0.4),
    ("model.mesh.width", 30.0),
    ("model.mesh.radius", 6.0),
    ("load.shape.points.1.1", 250.0),
    ("load.shape.points.2.1", -50.0),
];

const PILE_TABLE: &[(&str, f64)] = &[
    ("model.section.e", 210e6),
    ("model.section.r_outer", 1.0),
    ("model.section.r_inner", 0.92),
    ("model.section.length", 15.0),
    ("model.layers.0.material.e", 266.67),
    ("model.layers.0.material.sigma_p", 2.0),
    ("model.layers.0.material.h_kin", 1466.7),
    ("model.layers.1.material.e", 1000.0),
    ("model.layers.1.material.sigma_p", 2.67),
    ("model.layers.1.material.h_kin", 2666.7),
    ("model.layers.2.material.e", 1333.3),
    ("model.layers.2.material.sigma_p", 3.33),
    ("model.layers.2.material.h_kin", 4666.7),
    ("model.layers.0.material.h_iso", 0.0),
    ("model.layers.0.material.beta", 0.01),
    ("load.shape.points.0.1", 30.0),
    ("load.shape.points.1.1", 130.0),
];

fn plate_benchmark() -> Scenario {
    Scenario {
        schema_version: SCHEMA_VERSION,
        name: "plate-benchmark".into(),
        description: "Perforated plate in plane strain under cyclic traction on the top edge, bottom edge clamped".into(),
        model: ModelSpec::PlaneStrain(PlateSpec {
            mesh: PlateMeshSpec::default(),
            fixed_set: "bottom".into(),
            material: MaterialParams { e: 205.0, nu: 0.3, sigma_p: 100.0, h_iso: 1140.0, h_kin: 21640.0, beta: 0.4 },
            return_map: ReturnMapOptions::default(),
            load: PlateLoad { edge: "top".into(), direction: [0.0, 1.0], kind: PlateLoadKind::Traction },
            probe_set: "top_left".into(),
        }),
        load: LoadProgram::constant(LoadShape { points: vec![(0.0, 0.0), (0.25, 250.0), (0.75, -50.0), (1.0, 0.0)] }),
        time: TimeSpec { n_tau: 101, period: 1.0, scales: vec![5, 4], warmup_cycles: 2 },
        solver: SolverSettings::default(),
        pgd: PgdSettings::default(),
    }
}

fn soil(top: f64, bottom: f64, e: f64, sigma_p: f64, h_kin: f64) -> SoilLayer<f64> {
    SoilLayer { top, bottom, material: MaterialParams { e, nu: 0.3, sigma_p, h_iso: 0.0, h_kin, beta: 0.01 } }
}

fn monopile_benchmark() -> Scenario {
    Scenario {
        schema_version: SCHEMA_VERSION,
        name: "monopile-benchmark".into(),
        description: "Laterally loaded monopile on elastoplastic Winkler springs, cyclic head load between 30 and 130 kN".into(),
        model: ModelSpec::WinklerBeam(PileSpec {
            section: BeamSection { e: 210e6, r_outer: 1.0, r_inner: 0.92, length: 15.0, n_elements: 45 },
            layers: vec![
                soil(0.0, 5.0, 266.67, 2.0, 1466.7),
                soil(5.0, 10.0, 1000.0, 2.67, 2666.7),
                soil(10.0, 15.0, 1333.3, 3.33, 4666.7),
            ],
            spring_scale: 1.0,
            profile_depths: default_depths(),
        }),
        load: LoadProgram::constant(LoadShape { points: vec![(0.0, 30.0), (0.5, 130.0), (1.0, 30.0)] }),
        time: TimeSpec { n_tau: 101, period: 1.0, scales: vec![20, 10], warmup_cycles: 2 },
        solver: SolverSettings::default(),
        pgd: PgdSettings::default(),
    }
}
