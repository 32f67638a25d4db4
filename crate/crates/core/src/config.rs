//! TOML run configuration: parsing, cross-field validation (every
//! violation reported, not just the first), and assembly of a ready-to-run
//! model.

use crate::error::{Error, Result};
use crate::mesh::{LayerTag, Symmetry};
use crate::phasefield::{
    calibrate, CalibrationInput, EnergySplit, FormulationKind, PhaseFieldFormulation, Reduction,
    SolveScheme,
};
use crate::scenarios::{
    apply_initial_cracks, build_scenario, BuiltScenario, FourPointScenario, InitialCrackSpec,
    Layup,
};
use crate::materials::{BoxRegion, MaterialGlass};
use crate::solver::{RunOptions, Schedule, StaggeredConfig};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

fn default_width() -> f64 {
    0.36
}
fn default_length() -> f64 {
    1.1
}
fn default_support_offset() -> f64 {
    0.05
}
fn default_load_offset() -> f64 {
    0.1
}
fn default_rate() -> f64 {
    3.0e-5
}
fn default_temperature() -> f64 {
    25.0
}
fn default_symmetry() -> Symmetry {
    Symmetry::Half
}

// no deny_unknown_fields here: serde cannot combine it with `flatten`
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioSection {
    #[serde(flatten)]
    pub layup: Layup,
    #[serde(default = "default_length")]
    pub length: f64,
    #[serde(default = "default_width")]
    pub width: f64,
    #[serde(default = "default_support_offset")]
    pub support_offset: f64,
    #[serde(default = "default_load_offset")]
    pub load_offset: f64,
    #[serde(default = "default_rate")]
    pub rate: f64,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_symmetry")]
    pub symmetry: Symmetry,
    pub strength_override: Option<f64>,
    #[serde(default)]
    pub strength_patches: Vec<StrengthPatch>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrengthPatch {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub factor: f64,
}

fn default_young() -> f64 {
    70e9
}
fn default_poisson() -> f64 {
    0.22
}
fn default_tensile() -> f64 {
    45e6
}
fn default_residual() -> f64 {
    1e-6
}
fn default_reduction() -> Reduction {
    Reduction::PlaneStress
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormulationSection {
    pub kind: FormulationKind,
    pub split: EnergySplit,
    pub scheme: SolveScheme,
    /// Exactly one of `length_scale`/`fracture_energy`; the other is
    /// derived from the calibration relation.
    pub length_scale: Option<f64>,
    pub fracture_energy: Option<f64>,
    #[serde(default = "default_reduction")]
    pub reduction: Reduction,
    #[serde(default = "default_young")]
    pub young_modulus: f64,
    #[serde(default = "default_poisson")]
    pub poisson_ratio: f64,
    #[serde(default = "default_tensile")]
    pub tensile_strength: f64,
    #[serde(default = "default_residual")]
    pub residual_stiffness: f64,
}

fn default_localization_drop() -> f64 {
    0.9
}

// no deny_unknown_fields here: serde cannot combine it with `flatten`
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverSection {
    /// Segments of (until_s, increment_s).
    pub schedule: Vec<(f64, f64)>,
    #[serde(flatten)]
    pub staggered: StaggeredConfig,
    #[serde(default = "default_localization_drop")]
    pub localization_drop: f64,
}

fn default_snapshot_every() -> usize {
    25
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub directory: PathBuf,
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    /// Element target size inside the refinement band (m).
    pub refined_size: f64,
    /// Element target size outside the band (m).
    pub coarse_size: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialCracksSection {
    pub layer: LayerTag,
    pub positions: Vec<f64>,
    pub width: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioSection,
    pub formulation: FormulationSection,
    pub solver: SolverSection,
    pub mesh: MeshSection,
    pub output: OutputSection,
    pub initial_cracks: Option<InitialCracksSection>,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| Error::Config(vec![format!("{}: {e}", path.display())]))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Collects every violation across sections.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        let collect = |r: Result<()>, errs: &mut Vec<String>| {
            if let Err(Error::Config(mut v)) = r {
                errs.append(&mut v);
            } else if let Err(e) = r {
                errs.push(e.to_string());
            }
        };

        collect(self.scenario_spec().validate(), &mut errs);
        match (
            self.formulation.length_scale,
            self.formulation.fracture_energy,
        ) {
            (None, None) => errs.push(
                "formulation: one of length_scale or fracture_energy is required".to_string(),
            ),
            (Some(_), Some(_)) => errs.push(
                "formulation: length_scale and fracture_energy are mutually exclusive; \
                 give exactly one"
                    .to_string(),
            ),
            (Some(v), None) | (None, Some(v)) => {
                if !(v > 0.0) {
                    errs.push("formulation: calibration input must be > 0".to_string());
                }
            }
        }
        if !(self.formulation.young_modulus > 0.0) {
            errs.push("formulation: young_modulus must be > 0".to_string());
        }
        if !(self.formulation.tensile_strength > 0.0) {
            errs.push("formulation: tensile_strength must be > 0".to_string());
        }
        if !(0.0..0.5).contains(&self.formulation.poisson_ratio) {
            errs.push("formulation: poisson_ratio must be in [0, 0.5)".to_string());
        }
        if self.formulation.residual_stiffness < 0.0 {
            errs.push("formulation: residual_stiffness must be >= 0".to_string());
        }
        collect(Schedule(self.solver.schedule.clone()).validate(), &mut errs);
        collect(self.solver.staggered.validate(), &mut errs);
        if !(0.0..=1.0).contains(&self.solver.localization_drop) {
            errs.push("solver: localization_drop must be in [0, 1]".to_string());
        }
        if !(self.mesh.refined_size > 0.0 && self.mesh.coarse_size >= self.mesh.refined_size) {
            errs.push(
                "mesh: need 0 < refined_size <= coarse_size".to_string(),
            );
        }
        if self.output.snapshot_every == 0 {
            errs.push("output: snapshot_every must be >= 1".to_string());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    pub fn scenario_spec(&self) -> FourPointScenario {
        let s = &self.scenario;
        FourPointScenario {
            length: s.length,
            width: s.width,
            layup: s.layup,
            support_offset: s.support_offset,
            load_offset: s.load_offset,
            rate: s.rate,
            temperature: s.temperature,
            symmetry: s.symmetry,
            strength_override: s.strength_override,
            strength_patches: s
                .strength_patches
                .iter()
                .map(|p| {
                    (
                        BoxRegion {
                            x_min: p.x_min,
                            x_max: p.x_max,
                            y_min: p.y_min,
                            y_max: p.y_max,
                        },
                        p.factor,
                    )
                })
                .collect(),
        }
    }

    /// Resolves the (l_c, G_f) pair via the calibration relation; the
    /// effective strength is the scenario override when present.
    pub fn glass_material(&self) -> MaterialGlass {
        let f = &self.formulation;
        let ft = self
            .scenario
            .strength_override
            .unwrap_or(f.tensile_strength);
        let mut mat = MaterialGlass {
            young_modulus: f.young_modulus,
            poisson_ratio: f.poisson_ratio,
            tensile_strength: ft,
            fracture_energy: 1.0,
            length_scale: 1.0,
        };
        let (input, value) = match (f.length_scale, f.fracture_energy) {
            (Some(lc), None) => (CalibrationInput::Lc, lc),
            (None, Some(gf)) => (CalibrationInput::Gf, gf),
            _ => unreachable!("validated to exactly one"),
        };
        let cal = calibrate(f.kind, f.reduction, input, value, &mat);
        mat.length_scale = cal.length_scale;
        mat.fracture_energy = cal.fracture_energy;
        mat
    }

    pub fn formulation(&self) -> PhaseFieldFormulation {
        let f = &self.formulation;
        PhaseFieldFormulation {
            kind: f.kind,
            split: f.split,
            scheme: f.scheme,
            residual_stiffness: f.residual_stiffness,
        }
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            rate: self.scenario.rate,
            temperature: self.scenario.temperature,
            localization_drop: self.solver.localization_drop,
        }
    }

    pub fn schedule(&self) -> Schedule {
        Schedule(self.solver.schedule.clone())
    }

    /// Builds the full scenario (mesh, materials, loading, probes) and
    /// applies any configured initial cracks.
    pub fn build(&self) -> Result<BuiltScenario> {
        let spec = self.scenario_spec();
        let mut built = build_scenario(
            &spec,
            self.glass_material(),
            self.formulation(),
            self.mesh.refined_size,
            self.mesh.coarse_size,
        )?;
        if let Some(cracks) = &self.initial_cracks {
            let mut d = vec![0.0; built.model.sub.node_map.len()];
            apply_initial_cracks(
                &built.model,
                &mut d,
                &InitialCrackSpec {
                    layer: cracks.layer,
                    positions: cracks.positions.clone(),
                    width: cracks.width,
                },
            )?;
            built.model.initial_damage = Some(d);
        }
        Ok(built)
    }

    /// Defaulted values that affect physics or reporting, for the manifest.
    pub fn assumptions(&self) -> BTreeMap<String, serde_json::Value> {
        let mut a = BTreeMap::new();
        a.insert(
            "support_offset_m".to_string(),
            serde_json::json!(self.scenario.support_offset),
        );
        a.insert(
            "load_offset_from_midspan_m".to_string(),
            serde_json::json!(self.scenario.load_offset),
        );
        a.insert(
            "interlayer_poisson_ratio".to_string(),
            serde_json::json!(0.49),
        );
        a.insert(
            "localization_reaction_drop".to_string(),
            serde_json::json!(self.solver.localization_drop),
        );
        a.insert(
            "shear_correction_factor".to_string(),
            serde_json::json!(5.0 / 6.0),
        );
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
        [scenario]
        kind = "monolith"
        thickness = 0.02

        [formulation]
        kind = "pf-p"
        split = "spectral"
        scheme = "hybrid"
        length_scale = 3e-3

        [solver]
        schedule = [[10.0, 0.5]]
        energy_tolerance = 1e-6
        newton_tolerance = 1e-11
        max_staggered_iters = 500
        max_newton_iters = 50
        kkt_tolerance = 1e-8

        [mesh]
        refined_size = 2e-3
        coarse_size = 8e-3

        [output]
        directory = "out"
    "#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg: RunConfig = toml::from_str(BASE).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.scenario.rate, 3.0e-5);
        assert_eq!(cfg.scenario.width, 0.36);
        assert_eq!(cfg.output.snapshot_every, 25);
        let mat = cfg.glass_material();
        assert!((mat.fracture_energy - 231.4).abs() < 1.0);
        assert_eq!(mat.length_scale, 3e-3);
    }

    #[test]
    fn both_calibration_inputs_rejected_naming_both_keys() {
        let text = BASE.replace(
            "length_scale = 3e-3",
            "length_scale = 3e-3\nfracture_energy = 4.0",
        );
        let cfg: RunConfig = toml::from_str(&text).unwrap();
        match cfg.validate() {
            Err(Error::Config(errs)) => {
                assert!(errs.iter().any(|e| e.contains("length_scale")
                    && e.contains("fracture_energy")));
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn neither_calibration_input_rejected() {
        let text = BASE.replace("length_scale = 3e-3", "");
        let cfg: RunConfig = toml::from_str(&text).unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn violations_accumulate_across_sections() {
        let text = BASE
            .replace("thickness = 0.02", "thickness = -1.0")
            .replace("refined_size = 2e-3", "refined_size = -2e-3")
            .replace("schedule = [[10.0, 0.5]]", "schedule = [[10.0, -0.5]]");
        let cfg: RunConfig = toml::from_str(&text).unwrap();
        match cfg.validate() {
            Err(Error::Config(errs)) => assert!(errs.len() >= 3, "{errs:?}"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn laminate_with_cracks_builds() {
        let text = BASE.replace(
            "kind = \"monolith\"\n        thickness = 0.02",
            "kind = \"laminate\"\n        h_bottom = 0.01\n        h_interlayer = 0.00076\n        h_top = 0.01\n        interlayer = \"eva\"",
        ) + r#"
        [initial_cracks]
        layer = "glass-bottom"
        positions = [0.5]
        "#;
        let cfg: RunConfig = toml::from_str(&text).unwrap();
        cfg.validate().unwrap();
        let built = cfg.build().unwrap();
        let d = built.model.initial_damage.as_ref().unwrap();
        assert!(d.iter().any(|&v| v == 1.0));
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = BASE.replace("refined_size", "typo_key = 1\nrefined_size");
        assert!(toml::from_str::<RunConfig>(&text).is_err());
    }
}
