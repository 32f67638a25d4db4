//! The four-point-bending experiment configurations: monolithic and
//! laminated specimens, edge-weakening strength patches, pre-cracked
//! layers, probe registration, and the expected failure windows.

use crate::error::{Error, Result};
use crate::fem2d::MaterialMap;
use crate::materials::{
    equivalent_elastic_constants, BoxRegion, InterlayerKind, InterlayerModel, MaterialGlass,
    StrengthField,
};
use crate::mesh::{
    build_section_mesh, glass_submesh, LayerTag, RefinementSpec, Symmetry,
};
use crate::phasefield::PhaseFieldFormulation;
use crate::solver::{LoadingPlan, Model2D, ProbeElements};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Glass layup of the specimen cross-section.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Layup {
    Monolith {
        thickness: f64,
    },
    Laminate {
        h_bottom: f64,
        h_interlayer: f64,
        h_top: f64,
        interlayer: InterlayerKind,
    },
}

/// Four-point-bending specimen and loading description.
///
/// Defaults follow the tested plates: 1.1 m x 0.36 m specimen, supports
/// 50 mm from each end (1 m span), load points 100 mm either side of
/// midspan, loading rate 0.03 mm/s.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FourPointScenario {
    pub length: f64,
    pub width: f64,
    pub layup: Layup,
    /// Support distance from each specimen end (m).
    pub support_offset: f64,
    /// Load-point distance from midspan (m).
    pub load_offset: f64,
    /// Loading-head rate (m/s).
    pub rate: f64,
    /// Ambient temperature (deg C), used by viscoelastic interlayers.
    pub temperature: f64,
    pub symmetry: Symmetry,
    /// Overrides the base tensile strength (validation runs set this to a
    /// measured extreme; fracture energy is recalibrated from it).
    pub strength_override: Option<f64>,
    /// (region, factor < 1) strength-reduction patches, e.g. edge flaws.
    pub strength_patches: Vec<(BoxRegion, f64)>,
}

impl FourPointScenario {
    pub fn new(layup: Layup) -> Self {
        FourPointScenario {
            length: 1.1,
            width: 0.36,
            layup,
            support_offset: 0.05,
            load_offset: 0.1,
            rate: 3.0e-5,
            temperature: 25.0,
            symmetry: Symmetry::Half,
            strength_override: None,
            strength_patches: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.length > 0.0) {
            errs.push("length must be > 0".to_string());
        }
        if !(self.width > 0.0) {
            errs.push("width must be > 0".to_string());
        }
        let mid = self.length / 2.0;
        let load_x = mid - self.load_offset;
        if !(self.support_offset > 0.0
            && self.support_offset < load_x
            && load_x < mid)
        {
            errs.push(format!(
                "positions must satisfy 0 < support ({}) < load ({load_x}) < midspan ({mid})",
                self.support_offset
            ));
        }
        match self.layup {
            Layup::Monolith { thickness } => {
                if !(thickness > 0.0) {
                    errs.push("monolith thickness must be > 0".to_string());
                }
            }
            Layup::Laminate {
                h_bottom,
                h_interlayer,
                h_top,
                ..
            } => {
                for (name, h) in [
                    ("h_bottom", h_bottom),
                    ("h_interlayer", h_interlayer),
                    ("h_top", h_top),
                ] {
                    if !(h > 0.0) {
                        errs.push(format!("{name} must be > 0"));
                    }
                }
            }
        }
        if !(self.rate > 0.0) {
            errs.push("rate must be > 0".to_string());
        }
        for (i, &(region, factor)) in self.strength_patches.iter().enumerate() {
            if !(factor > 0.0 && factor <= 1.0) {
                errs.push(format!("strength patch {i}: factor must be in (0, 1]"));
            }
            if region.x_min >= region.x_max || region.y_min >= region.y_max {
                errs.push(format!("strength patch {i}: empty region"));
            }
        }
        if let Some(f) = self.strength_override {
            if !(f > 0.0) {
                errs.push("strength_override must be > 0".to_string());
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    pub fn total_glass_thickness(&self) -> f64 {
        match self.layup {
            Layup::Monolith { thickness } => thickness,
            Layup::Laminate {
                h_bottom,
                h_interlayer,
                h_top,
                ..
            } => h_bottom + h_interlayer + h_top,
        }
    }

    pub fn interlayer_model(&self) -> Option<InterlayerModel> {
        match self.layup {
            Layup::Monolith { .. } => None,
            Layup::Laminate { interlayer, .. } => Some(InterlayerModel::builtin(interlayer)),
        }
    }
}

/// Everything a quasi-static run needs, as built from a scenario.
pub struct BuiltScenario {
    pub model: Model2D,
    pub plan: LoadingPlan,
    pub probes: ProbeElements,
    /// Probe x positions after snapping to mesh nodes (reported in the
    /// manifest).
    pub snapped: BTreeMap<String, f64>,
    pub interlayer: Option<InterlayerModel>,
}

/// Assembles mesh, materials, loading plan, and probes for a scenario.
///
/// The refinement band spans the constant-moment region (between the load
/// points) plus one transition zone of the same width on each side.
pub fn build_scenario(
    spec: &FourPointScenario,
    glass: MaterialGlass,
    formulation: PhaseFieldFormulation,
    refined_size: f64,
    coarse_size: f64,
) -> Result<BuiltScenario> {
    spec.validate()?;
    glass.validate()?;
    let mid = spec.length / 2.0;
    let (model_length, sym_factor) = match spec.symmetry {
        Symmetry::Half => (mid, 2.0),
        Symmetry::Full => (spec.length, 1.0),
    };
    let support_x = spec.support_offset;
    let load_x = mid - spec.load_offset;

    // constant-moment region on the modeled domain, plus transition zones
    let band_lo = (load_x - spec.load_offset).max(0.0);
    let band_hi = match spec.symmetry {
        Symmetry::Half => model_length,
        Symmetry::Full => (mid + 2.0 * spec.load_offset).min(spec.length),
    };
    let refinement = RefinementSpec::with_band(coarse_size, band_lo, band_hi, refined_size);

    let layers: Vec<(f64, LayerTag)> = match spec.layup {
        Layup::Monolith { thickness } => vec![(thickness, LayerTag::GlassMono)],
        Layup::Laminate {
            h_bottom,
            h_interlayer,
            h_top,
            ..
        } => vec![
            (h_bottom, LayerTag::GlassBottom),
            (h_interlayer, LayerTag::Interlayer),
            (h_top, LayerTag::GlassTop),
        ],
    };

    // supports and loads become mesh stations exactly
    let mut breaks = vec![support_x, load_x];
    if spec.symmetry == Symmetry::Full {
        breaks.push(spec.length - support_x);
        breaks.push(mid + spec.load_offset);
        breaks.push(mid);
    }
    let mesh = build_section_mesh(model_length, &layers, &refinement, spec.symmetry, &breaks)?;
    let sub = glass_submesh(&mesh)?;

    let mut glass = glass;
    if let Some(ft) = spec.strength_override {
        glass.tensile_strength = ft;
    }
    let strength = StrengthField {
        base_strength: glass.tensile_strength,
        patches: spec.strength_patches.clone(),
    };
    let interlayer = spec.interlayer_model();
    let interlayer_elastic = match &interlayer {
        Some(model) => Some(equivalent_elastic_constants(model, 0.0, spec.temperature)?),
        None => None,
    };
    let mats = MaterialMap {
        glass,
        strength,
        interlayer: interlayer_elastic,
    };

    let thickness = spec.total_glass_thickness();
    let mut snapped = BTreeMap::new();
    let mut fixed = Vec::new();
    // supports: vertical pin at the bottom fiber
    let sx = mesh.snap_x(support_x);
    snapped.insert("support".to_string(), sx);
    let support_node = mesh
        .node_at(sx, 0.0)
        .ok_or_else(|| Error::config("support position not on the mesh"))?;
    fixed.push((2 * support_node + 1, 0.0));
    match spec.symmetry {
        Symmetry::Half => {
            // symmetry plane: no axial displacement
            for (n, &(x, _)) in mesh.nodes.iter().enumerate() {
                if (x - model_length).abs() < 1e-12 {
                    fixed.push((2 * n, 0.0));
                }
            }
        }
        Symmetry::Full => {
            let sx2 = mesh.snap_x(spec.length - support_x);
            let n2 = mesh
                .node_at(sx2, 0.0)
                .ok_or_else(|| Error::config("support position not on the mesh"))?;
            fixed.push((2 * n2 + 1, 0.0));
            // pin one axial dof to remove the rigid-body translation
            fixed.push((2 * support_node, 0.0));
        }
    }

    // load points: vertical prescribed displacement at the top fiber
    let mut driven = Vec::new();
    let lx = mesh.snap_x(load_x);
    snapped.insert("load".to_string(), lx);
    let load_node = mesh
        .node_at(lx, thickness)
        .ok_or_else(|| Error::config("load position not on the mesh"))?;
    driven.push(2 * load_node + 1);
    if spec.symmetry == Symmetry::Full {
        let lx2 = mesh.snap_x(mid + spec.load_offset);
        let n2 = mesh
            .node_at(lx2, thickness)
            .ok_or_else(|| Error::config("load position not on the mesh"))?;
        driven.push(2 * n2 + 1);
    }

    // probes: midspan bottom fiber (peak tension) and quarter-span top
    // fiber (compression side)
    let probe_mid_x = match spec.symmetry {
        Symmetry::Half => model_length - 1e-9,
        Symmetry::Full => mid,
    };
    let mid_bottom = mesh
        .bottom_element_at(mesh.snap_x(probe_mid_x))
        .ok_or_else(|| Error::config("midspan probe not on the mesh"))?;
    // triangle pairs of the bottom two cells in the probe column, for
    // extrapolation of the probe stress to the bottom surface
    let mid_stack = if mesh.y_levels.len() >= 3 {
        let (cx, _) = mesh.element_centroid(mid_bottom);
        let ix = mesh
            .x_stations
            .windows(2)
            .position(|w| w[0] <= cx && cx <= w[1]);
        ix.and_then(|ix| {
            let (x0, x1) = (mesh.x_stations[ix], mesh.x_stations[ix + 1]);
            let mut lo = Vec::new();
            let mut hi = Vec::new();
            for e in 0..mesh.elements.len() {
                let (ex, ey) = mesh.element_centroid(e);
                if ex < x0 || ex > x1 {
                    continue;
                }
                if ey > mesh.y_levels[0] && ey < mesh.y_levels[1] {
                    lo.push(e);
                } else if ey > mesh.y_levels[1] && ey < mesh.y_levels[2] {
                    hi.push(e);
                }
            }
            match (lo.as_slice(), hi.as_slice()) {
                (&[a, b], &[c, d]) => Some([a, b, c, d]),
                _ => None,
            }
        })
    } else {
        None
    };
    let quarter_x = mesh.snap_x(mid - 0.25 * (mid - support_x));
    snapped.insert("sigma_mid".to_string(), mesh.snap_x(probe_mid_x));
    snapped.insert("sigma_quarter_top".to_string(), quarter_x);
    let quarter_top = mesh.top_element_at(quarter_x);

    let plan = LoadingPlan {
        fixed,
        driven,
        reaction_scale: spec.width * sym_factor,
    };
    let probes = ProbeElements {
        mid_bottom,
        mid_stack,
        quarter_top,
    };
    Ok(BuiltScenario {
        model: Model2D {
            mesh,
            sub,
            mats,
            formulation,
            initial_damage: None,
        },
        plan,
        probes,
        snapped,
        interlayer,
    })
}

/// Initial through-damage crack bands in one glass layer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InitialCrackSpec {
    pub layer: LayerTag,
    /// Crack x positions (m, model coordinates).
    pub positions: Vec<f64>,
    /// Full band width; defaults to 2 l_c.
    pub width: Option<f64>,
}

/// Sets d = 1 on glass-submesh nodes of the named layer within half the
/// band width of each position. The modified damage becomes the
/// irreversibility lower bound of every later step.
pub fn apply_initial_cracks(
    model: &Model2D,
    d: &mut [f64],
    spec: &InitialCrackSpec,
) -> Result<()> {
    if !spec.layer.is_glass() {
        return Err(Error::config("initial cracks must target a glass layer"));
    }
    let half_width = spec.width.unwrap_or(2.0 * model.mats.glass.length_scale) / 2.0;
    let (x_lo, x_hi) = (
        model.mesh.x_stations[0],
        *model.mesh.x_stations.last().unwrap(),
    );
    // y extent of the target layer from the elements carrying its tag
    let mut y_lo = f64::INFINITY;
    let mut y_hi = f64::NEG_INFINITY;
    for (e, &tag) in model.mesh.layer_tags.iter().enumerate() {
        if tag == spec.layer {
            for &n in &model.mesh.elements[e] {
                y_lo = y_lo.min(model.mesh.nodes[n].1);
                y_hi = y_hi.max(model.mesh.nodes[n].1);
            }
        }
    }
    if !y_lo.is_finite() {
        return Err(Error::config(format!(
            "mesh has no elements of layer {:?}",
            spec.layer
        )));
    }
    for &pos in &spec.positions {
        if pos < x_lo - 1e-12 || pos > x_hi + 1e-12 {
            return Err(Error::config(format!(
                "initial crack at x = {pos} outside the mesh [{x_lo}, {x_hi}]"
            )));
        }
        for (s, &parent) in model.sub.node_map.iter().enumerate() {
            let (x, y) = model.mesh.nodes[parent];
            if (x - pos).abs() <= half_width && y >= y_lo - 1e-12 && y <= y_hi + 1e-12 {
                d[s] = 1.0;
            }
        }
    }
    Ok(())
}

/// Specimen families with measured failure windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleType {
    AngEva,
    AngPvb,
    Monolith,
}

/// Extreme bottom-surface tensile failure stresses (min, max) in Pa.
pub fn expected_failure_window(sample: SampleType) -> (f64, f64) {
    match sample {
        SampleType::AngEva => (32e6, 60e6),
        SampleType::AngPvb => (28e6, 69e6),
        SampleType::Monolith => (45e6, 45e6),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phasefield::{EnergySplit, FormulationKind, SolveScheme};

    fn formulation() -> PhaseFieldFormulation {
        PhaseFieldFormulation::new(
            FormulationKind::PfP,
            EnergySplit::Spectral,
            SolveScheme::Hybrid,
        )
    }

    #[test]
    fn monolith_scenario_is_all_glass() {
        let spec = FourPointScenario::new(Layup::Monolith { thickness: 0.02 });
        let built = build_scenario(
            &spec,
            MaterialGlass::annealed(231.4, 3e-3),
            formulation(),
            2e-3,
            8e-3,
        )
        .unwrap();
        assert!(built
            .model
            .mesh
            .layer_tags
            .iter()
            .all(|t| *t == LayerTag::GlassMono));
        assert!(built.interlayer.is_none());
        assert_eq!(built.plan.driven.len(), 1);
        assert_eq!(built.plan.reaction_scale, 0.36 * 2.0);
        // probes snapped onto stations
        assert!(built.snapped.contains_key("sigma_mid"));
        assert!((built.snapped["support"] - 0.05).abs() < 1e-12);
        assert!((built.snapped["load"] - 0.45).abs() < 1e-12);
    }

    #[test]
    fn laminate_interlayer_starts_at_instantaneous_modulus() {
        let spec = FourPointScenario::new(Layup::Laminate {
            h_bottom: 0.01,
            h_interlayer: 0.00076,
            h_top: 0.01,
            interlayer: InterlayerKind::Eva,
        });
        let built = build_scenario(
            &spec,
            MaterialGlass::annealed(231.4, 3e-3),
            formulation(),
            2e-3,
            8e-3,
        )
        .unwrap();
        let model = built.interlayer.unwrap();
        let g0 = model.prony.instantaneous_modulus();
        let (e, nu) = built.model.mats.interlayer.unwrap();
        assert!((e - 2.0 * g0 * (1.0 + nu)).abs() < 1e-6 * e);
        // non-glass tags present
        assert!(built
            .model
            .mesh
            .layer_tags
            .iter()
            .any(|t| *t == LayerTag::Interlayer));
    }

    #[test]
    fn strength_patch_reduces_effective_strength() {
        let mut spec = FourPointScenario::new(Layup::Monolith { thickness: 0.02 });
        let lc: f64 = 3.2e-3;
        let patch = 1.5 * lc;
        // 50 mm from midspan, on the bottom surface of the half model
        let x0 = 0.55 - 0.05;
        spec.strength_patches.push((
            BoxRegion {
                x_min: x0 - patch / 2.0,
                x_max: x0 + patch / 2.0,
                y_min: 0.0,
                y_max: patch,
            },
            0.8,
        ));
        let built = build_scenario(
            &spec,
            MaterialGlass::annealed(231.4, lc),
            formulation(),
            2e-3,
            8e-3,
        )
        .unwrap();
        let inside = built.model.mats.strength.effective_strength(x0, 1e-4);
        let outside = built.model.mats.strength.effective_strength(0.2, 1e-4);
        assert!((inside - 36e6).abs() < 1.0);
        assert!((outside - 45e6).abs() < 1.0);
    }

    #[test]
    fn invalid_specs_report_all_violations() {
        let mut spec = FourPointScenario::new(Layup::Monolith { thickness: -1.0 });
        spec.rate = 0.0;
        spec.support_offset = 0.6; // beyond the load point
        match spec.validate() {
            Err(Error::Config(errs)) => assert!(errs.len() >= 3, "{errs:?}"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn initial_cracks_paint_disjoint_bands_in_one_layer() {
        let spec = FourPointScenario::new(Layup::Laminate {
            h_bottom: 0.01,
            h_interlayer: 0.00076,
            h_top: 0.01,
            interlayer: InterlayerKind::Eva,
        });
        let built = build_scenario(
            &spec,
            MaterialGlass::annealed(231.4, 3e-3),
            formulation(),
            2e-3,
            8e-3,
        )
        .unwrap();
        let model = &built.model;
        let mut d = vec![0.0; model.sub.node_map.len()];

        // empty spec: unchanged
        apply_initial_cracks(
            model,
            &mut d,
            &InitialCrackSpec {
                layer: LayerTag::GlassBottom,
                positions: vec![],
                width: None,
            },
        )
        .unwrap();
        assert!(d.iter().all(|&v| v == 0.0));

        let lc = model.mats.glass.length_scale;
        apply_initial_cracks(
            model,
            &mut d,
            &InitialCrackSpec {
                layer: LayerTag::GlassBottom,
                positions: vec![0.46, 0.50, 0.54],
                width: None,
            },
        )
        .unwrap();
        // damage confined to the bottom layer
        for (s, &parent) in model.sub.node_map.iter().enumerate() {
            let (x, y) = model.mesh.nodes[parent];
            if d[s] == 1.0 {
                assert!(y <= 0.01 + 1e-12, "crack leaked into y = {y}");
                assert!(
                    [0.46, 0.50, 0.54].iter().any(|&p| (x - p).abs() <= lc + 1e-12),
                    "crack node at x = {x}"
                );
            }
        }
        // each band non-empty and measure close to 2 lc * h1 (+/- one element)
        let mut area = 0.0;
        for (se, &pe) in model.sub.elem_map.iter().enumerate() {
            let tri = model.sub.elements[se];
            if tri.iter().all(|&n| d[n] == 1.0) {
                area += model.mesh.element_area(pe);
            }
        }
        let expected = 3.0 * 2.0 * lc * 0.01;
        assert!(
            area > 0.3 * expected && area < 1.5 * expected,
            "band area {area} vs nominal {expected}"
        );

        // out-of-mesh position rejected
        let err = apply_initial_cracks(
            model,
            &mut d,
            &InitialCrackSpec {
                layer: LayerTag::GlassBottom,
                positions: vec![2.0],
                width: None,
            },
        );
        assert!(err.is_err());
    }

    #[test]
    fn failure_windows_match_measured_extremes() {
        assert_eq!(expected_failure_window(SampleType::AngEva), (32e6, 60e6));
        assert_eq!(expected_failure_window(SampleType::AngPvb), (28e6, 69e6));
        assert_eq!(expected_failure_window(SampleType::Monolith), (45e6, 45e6));
    }
}
