//! Dimensionally reduced beam model: monolithic and three-layer laminated
//! Timoshenko kinematics with per-glass-layer damage fields driven by a
//! thickness-integrated (or surface) tensile energy.
//!
//! Kinematics: every glass layer i carries an independent centerline axial
//! displacement u_i and cross-section rotation phi_i; all layers share one
//! transverse deflection w (interlayer transverse compressibility
//! neglected). The axial displacement field of layer i is
//! u_x = u_i + (z - z_i) phi_i, giving the layer strain
//! eps(x, z) = u_i' + (z - z_i) phi_i' and shear gamma = phi_i + w'.
//! The interlayer transfers shear only; its engineering shear strain is
//! the relative slip of the adjacent glass faces over its thickness plus
//! the common rotation of the section normal:
//!   gamma_int = ([u_top - (h_top/2) phi_top] - [u_bot + (h_bot/2) phi_bot]) / h_int + w'
//! with the coupling energy 1/2 G_int b h_int \int gamma_int^2 dx, never
//! degraded. Linear interpolation for all fields with one-point reduced
//! integration on every shear-like term (locking).

use crate::bounds::solve_box_constrained;
use crate::error::{Error, Result};
use crate::linalg::BandMatrix;
use crate::materials::MaterialGlass;
use crate::mesh::Mesh1D;
use crate::output::{write_atomic, ProbeRecord};
use crate::phasefield::{
    degradation, geometric_function, macaulay, scaling_constant, FormulationKind,
    PhaseFieldFormulation,
};
use crate::solver::{RunOptions, Schedule, StaggeredConfig, Termination};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Which thickness reduction feeds the damage driving force.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DrivingForceMode {
    /// Exact integral of the positive-part energy over the thickness.
    Integrated,
    /// Max of the two surface-fiber tensile energies.
    Surface,
}

/// Cross-section of the layered beam: glass layers (thickness, centroid
/// height) from bottom to top plus an optional shear-coupling interlayer.
#[derive(Debug, Clone)]
pub struct LayeredBeamSection {
    pub width: f64,
    pub glass: MaterialGlass,
    /// (thickness, centroid z) per glass layer, bottom first.
    pub layers: Vec<(f64, f64)>,
    /// (thickness, equivalent shear modulus) of the interlayer.
    pub interlayer: Option<(f64, f64)>,
}

/// Shear correction factor for rectangular sections.
pub const SHEAR_CORRECTION: f64 = 5.0 / 6.0;

impl LayeredBeamSection {
    pub fn monolith(width: f64, thickness: f64, glass: MaterialGlass) -> Self {
        LayeredBeamSection {
            width,
            glass,
            layers: vec![(thickness, 0.0)],
            interlayer: None,
        }
    }

    /// Bottom glass / interlayer / top glass, z = 0 at the mid-thickness.
    pub fn laminate(
        width: f64,
        h_bottom: f64,
        h_interlayer: f64,
        h_top: f64,
        glass: MaterialGlass,
        g_interlayer: f64,
    ) -> Self {
        // centroids measured from the interlayer mid-plane
        let z_b = -(h_bottom + h_interlayer) / 2.0;
        let z_t = (h_top + h_interlayer) / 2.0;
        LayeredBeamSection {
            width,
            glass,
            layers: vec![(h_bottom, z_b), (h_top, z_t)],
            interlayer: Some((h_interlayer, g_interlayer)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.width > 0.0) {
            errs.push("width must be > 0".to_string());
        }
        if self.layers.is_empty() || self.layers.len() > 2 {
            errs.push(format!(
                "section must have 1 or 2 glass layers, got {}",
                self.layers.len()
            ));
        }
        for (i, &(h, _)) in self.layers.iter().enumerate() {
            if !(h > 0.0) {
                errs.push(format!("glass layer {i} thickness must be > 0"));
            }
        }
        match (&self.interlayer, self.layers.len()) {
            (Some((h_int, g)), 2) => {
                if !(*h_int > 0.0) {
                    errs.push("interlayer thickness must be > 0".to_string());
                }
                if !(*g > 0.0) {
                    errs.push("interlayer shear modulus must be > 0".to_string());
                }
                let (h1, z1) = self.layers[0];
                let (h2, z2) = self.layers[1];
                let gap = z2 - z1 - (h1 + h2) / 2.0;
                if (gap - h_int).abs() > 1e-12 * h_int.max(1e-6) {
                    errs.push(format!(
                        "layer offsets inconsistent with stacking: gap {gap} vs interlayer {h_int}"
                    ));
                }
            }
            (None, 1) => {}
            (Some(_), 1) => errs.push("monolith section cannot have an interlayer".to_string()),
            (None, 2) => errs.push("two-layer section requires an interlayer".to_string()),
            _ => {}
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    /// Dofs per node: (u_i, phi_i) per glass layer plus the shared w.
    pub fn dofs_per_node(&self) -> usize {
        2 * self.layers.len() + 1
    }

    pub fn layer_area(&self, i: usize) -> f64 {
        self.width * self.layers[i].0
    }

    pub fn layer_inertia(&self, i: usize) -> f64 {
        self.width * self.layers[i].0.powi(3) / 12.0
    }
}

/// The discrete beam problem.
pub struct BeamModel {
    pub mesh: Mesh1D,
    pub section: LayeredBeamSection,
    pub formulation: PhaseFieldFormulation,
    pub mode: DrivingForceMode,
}

impl BeamModel {
    pub fn n_dofs(&self) -> usize {
        self.mesh.nodes.len() * self.section.dofs_per_node()
    }

    pub fn u_dof(&self, node: usize, layer: usize) -> usize {
        node * self.section.dofs_per_node() + 2 * layer
    }

    pub fn phi_dof(&self, node: usize, layer: usize) -> usize {
        node * self.section.dofs_per_node() + 2 * layer + 1
    }

    pub fn w_dof(&self, node: usize) -> usize {
        node * self.section.dofs_per_node() + 2 * self.section.n_layers()
    }
}

/// Fields of one beam simulation: displacement dofs plus per-layer nodal
/// damage.
#[derive(Debug, Clone)]
pub struct BeamState {
    pub t: f64,
    pub w_bar: f64,
    pub q: Vec<f64>,
    /// damage\[layer\]\[node\]
    pub d: Vec<Vec<f64>>,
}

impl BeamState {
    pub fn new(model: &BeamModel) -> Self {
        BeamState {
            t: 0.0,
            w_bar: 0.0,
            q: vec![0.0; model.n_dofs()],
            d: vec![vec![0.0; model.mesh.nodes.len()]; model.section.n_layers()],
        }
    }
}

fn mean_damage(d: &[f64], e: usize) -> f64 {
    0.5 * (d[e] + d[e + 1])
}

/// Per-element (row, stiffness-coefficient) contributions: each row is a
/// linear functional of the element dof vector whose square, times the
/// coefficient and the element length, is twice the stored energy.
fn element_rows(
    model: &BeamModel,
    e: usize,
    d: &[Vec<f64>],
) -> (Vec<(Vec<(usize, f64)>, f64)>, f64) {
    let sec = &model.section;
    let le = model.mesh.element_size(e);
    let glass_e = sec.glass.young_modulus;
    let glass_g = sec.glass.shear_modulus();
    let res = model.formulation.residual_stiffness;
    let mut rows = Vec::new();
    for i in 0..sec.n_layers() {
        let (g, _) = degradation(mean_damage(&d[i], e).clamp(0.0, 1.0), res);
        let u1 = model.u_dof(e, i);
        let u2 = model.u_dof(e + 1, i);
        let p1 = model.phi_dof(e, i);
        let p2 = model.phi_dof(e + 1, i);
        let w1 = model.w_dof(e);
        let w2 = model.w_dof(e + 1);
        // axial: u'
        rows.push((
            vec![(u1, -1.0 / le), (u2, 1.0 / le)],
            g * glass_e * sec.layer_area(i),
        ));
        // bending: phi'
        rows.push((
            vec![(p1, -1.0 / le), (p2, 1.0 / le)],
            g * glass_e * sec.layer_inertia(i),
        ));
        // shear at the midpoint: phi + w'
        rows.push((
            vec![(p1, 0.5), (p2, 0.5), (w1, -1.0 / le), (w2, 1.0 / le)],
            g * SHEAR_CORRECTION * glass_g * sec.layer_area(i),
        ));
    }
    if let Some((h_int, g_int)) = sec.interlayer {
        let (h_b, _) = sec.layers[0];
        let (h_t, _) = sec.layers[1];
        let ub = [model.u_dof(e, 0), model.u_dof(e + 1, 0)];
        let pb = [model.phi_dof(e, 0), model.phi_dof(e + 1, 0)];
        let ut = [model.u_dof(e, 1), model.u_dof(e + 1, 1)];
        let pt = [model.phi_dof(e, 1), model.phi_dof(e + 1, 1)];
        let w1 = model.w_dof(e);
        let w2 = model.w_dof(e + 1);
        // gamma_int at the midpoint (reduced integration)
        let mut row = Vec::new();
        for k in 0..2 {
            row.push((ut[k], 0.5 / h_int));
            row.push((pt[k], -0.5 * h_t / 2.0 / h_int));
            row.push((ub[k], -0.5 / h_int));
            row.push((pb[k], -0.5 * h_b / 2.0 / h_int));
        }
        row.push((w1, -1.0 / le));
        row.push((w2, 1.0 / le));
        rows.push((row, g_int * sec.width * h_int));
    }
    (rows, le)
}

fn bandwidth(model: &BeamModel) -> usize {
    2 * model.section.dofs_per_node() - 1
}

/// Degraded linear stiffness of the whole beam.
pub fn assemble_beam_stiffness(model: &BeamModel, d: &[Vec<f64>]) -> BandMatrix {
    let mut k = BandMatrix::new(model.n_dofs(), bandwidth(model));
    for e in 0..model.mesh.n_elements() {
        let (rows, le) = element_rows(model, e, d);
        for (row, coeff) in rows {
            for &(gi, vi) in &row {
                for &(gj, vj) in &row {
                    if gi >= gj {
                        k.add(gi, gj, coeff * le * vi * vj);
                    }
                }
            }
        }
    }
    k
}

/// Solves the beam displacement problem under Dirichlet constraints. The
/// degraded stress is linear in the dofs, so one solve suffices.
pub fn solve_beam(
    model: &BeamModel,
    d: &[Vec<f64>],
    constraints: &[(usize, f64)],
) -> Result<Vec<f64>> {
    let mut k = assemble_beam_stiffness(model, d);
    let mut rhs = vec![0.0; model.n_dofs()];
    k.apply_dirichlet(&mut rhs, constraints);
    Ok(k.cholesky()?.solve(&rhs))
}

/// Centerline strain and curvature of a layer on an element.
pub fn strain_measures(model: &BeamModel, q: &[f64], layer: usize, e: usize) -> (f64, f64) {
    let le = model.mesh.element_size(e);
    let ec = (q[model.u_dof(e + 1, layer)] - q[model.u_dof(e, layer)]) / le;
    let kappa = (q[model.phi_dof(e + 1, layer)] - q[model.phi_dof(e, layer)]) / le;
    (ec, kappa)
}

/// Exact \int ⟨eps(z)⟩^2 dz over a thickness h for the linear profile with
/// surface values e1 (bottom) and e2 (top).
pub fn positive_strain_sq_integral(e1: f64, e2: f64, h: f64) -> f64 {
    if (e2 - e1).abs() <= 1e-14 * e1.abs().max(e2.abs()).max(1e-300) {
        h * macaulay(e1).powi(2)
    } else {
        h * (macaulay(e2).powi(3) - macaulay(e1).powi(3)) / (3.0 * (e2 - e1))
    }
}

/// Thickness-averaged tensile energy density (J/m^3) of a layer.
pub fn mean_tensile_energy(
    glass_e: f64,
    h: f64,
    ec: f64,
    kappa: f64,
    mode: DrivingForceMode,
) -> f64 {
    let e_bot = ec - 0.5 * h * kappa;
    let e_top = ec + 0.5 * h * kappa;
    match mode {
        DrivingForceMode::Integrated => {
            0.5 * glass_e * positive_strain_sq_integral(e_bot, e_top, h) / h
        }
        DrivingForceMode::Surface => {
            0.5 * glass_e * macaulay(e_bot).powi(2).max(macaulay(e_top).powi(2))
        }
    }
}

/// Dimensionless damage driving force of one element of one layer.
pub fn beam_driving_force(model: &BeamModel, q: &[f64], layer: usize, e: usize) -> f64 {
    let glass = &model.section.glass;
    let (h, _) = model.section.layers[layer];
    let (ec, kappa) = strain_measures(model, q, layer, e);
    match model.formulation.kind {
        FormulationKind::PfB | FormulationKind::PfP => {
            let psi_bar = mean_tensile_energy(glass.young_modulus, h, ec, kappa, model.mode);
            2.0 * psi_bar * glass.length_scale / glass.fracture_energy
        }
        FormulationKind::PfM => {
            // Rankine criterion on the larger surface effective stress
            let e_bot = ec - 0.5 * h * kappa;
            let e_top = ec + 0.5 * h * kappa;
            let s = glass.young_modulus * macaulay(e_bot).max(macaulay(e_top));
            macaulay(s * s / (glass.tensile_strength * glass.tensile_strength) - 1.0)
        }
    }
}

/// Bound-constrained damage update of one layer given the displacements.
pub fn solve_layer_damage(
    model: &BeamModel,
    q: &[f64],
    layer: usize,
    d_lower: &[f64],
    kkt_tol: f64,
) -> Result<Vec<f64>> {
    let n = model.mesh.nodes.len();
    let c_alpha = scaling_constant(model.formulation.kind);
    let lc = model.section.glass.length_scale;
    let mut a = BandMatrix::new(n, 1);
    let mut b = vec![0.0; n];
    for e in 0..model.mesh.n_elements() {
        let le = model.mesh.element_size(e);
        let f_tilde = beam_driving_force(model, q, layer, e);
        let (mass_coeff, source) = match model.formulation.kind {
            FormulationKind::PfB | FormulationKind::PfM => (2.0 / c_alpha + f_tilde, f_tilde),
            FormulationKind::PfP => (f_tilde, f_tilde - 1.0 / c_alpha),
        };
        let mass = le / 4.0; // one-point: shape functions are 1/2 each
        let grad = 2.0 * lc * lc / c_alpha / le;
        let nodes = [e, e + 1];
        for (i, &ni) in nodes.iter().enumerate() {
            for (j, &nj) in nodes.iter().enumerate() {
                if ni >= nj {
                    let g = if i == j { grad } else { -grad };
                    a.add(ni, nj, mass_coeff * mass + g);
                }
            }
            b[ni] += source * le / 2.0;
        }
    }
    let sol = solve_box_constrained(&a, &b, d_lower, &vec![1.0; n], kkt_tol)?;
    Ok(sol.x)
}

/// Total energy: degraded elastic energy plus per-layer crack dissipation.
pub fn beam_total_energy(model: &BeamModel, q: &[f64], d: &[Vec<f64>]) -> f64 {
    let c_alpha = scaling_constant(model.formulation.kind);
    let glass = &model.section.glass;
    let lc = glass.length_scale;
    let mut elastic = 0.0;
    for e in 0..model.mesh.n_elements() {
        let (rows, le) = element_rows(model, e, d);
        for (row, coeff) in rows {
            let v: f64 = row.iter().map(|&(dof, w)| w * q[dof]).sum();
            elastic += 0.5 * coeff * le * v * v;
        }
    }
    let mut dissipated = 0.0;
    for (i, di) in d.iter().enumerate() {
        let area = model.section.layer_area(i);
        for e in 0..model.mesh.n_elements() {
            let le = model.mesh.element_size(e);
            let a1 = geometric_function(model.formulation.kind, di[e].clamp(0.0, 1.0)).0;
            let a2 = geometric_function(model.formulation.kind, di[e + 1].clamp(0.0, 1.0)).0;
            let grad = (di[e + 1] - di[e]) / le;
            dissipated += glass.fracture_energy * area / c_alpha
                * (0.5 * (a1 + a2) / lc + lc * grad * grad)
                * le;
        }
    }
    elastic + dissipated
}

/// Surface axial stress (degraded) of a layer on an element; `top` selects
/// the fiber.
pub fn surface_stress(model: &BeamModel, q: &[f64], d: &[Vec<f64>], layer: usize, e: usize, top: bool) -> f64 {
    let (h, _) = model.section.layers[layer];
    let (ec, kappa) = strain_measures(model, q, layer, e);
    let z = if top { 0.5 * h } else { -0.5 * h };
    let (g, _) = degradation(
        mean_damage(&d[layer], e).clamp(0.0, 1.0),
        model.formulation.residual_stiffness,
    );
    g * model.section.glass.young_modulus * (ec + z * kappa)
}

/// Alternating minimization at fixed (t, w_bar), as in the 2D solver.
pub fn staggered_beam_step(
    model: &BeamModel,
    constraints: &[(usize, f64)],
    state: &mut BeamState,
    cfg: &StaggeredConfig,
) -> Result<usize> {
    let d_lower = state.d.clone();
    let mut e_prev = f64::NAN;
    for i in 0..cfg.max_staggered_iters {
        state.q = solve_beam(model, &state.d, constraints)?;
        for layer in 0..model.section.n_layers() {
            state.d[layer] =
                solve_layer_damage(model, &state.q, layer, &d_lower[layer], cfg.kkt_tolerance)?;
        }
        let e = beam_total_energy(model, &state.q, &state.d);
        if !e.is_finite() {
            return Err(Error::Solver(format!("non-finite beam energy at t = {}", state.t)));
        }
        let xi = if e.abs() < 1e-20 {
            (e - e_prev).abs()
        } else {
            ((e - e_prev) / e).abs()
        };
        if i > 0 && xi <= cfg.energy_tolerance {
            return Ok(i + 1);
        }
        e_prev = e;
    }
    Err(Error::Solver(format!(
        "beam staggered loop did not converge in {} iterations at t = {}",
        cfg.max_staggered_iters, state.t
    )))
}

/// Dirichlet loading of the beam driver (same convention as the 2D plan).
#[derive(Debug, Clone)]
pub struct BeamLoadingPlan {
    pub fixed: Vec<(usize, f64)>,
    /// Dofs prescribed to -w_bar.
    pub driven: Vec<usize>,
    /// Symmetry multiplier on the reported reaction (width is already in
    /// the section stiffness).
    pub reaction_scale: f64,
}

pub struct BeamRunResult {
    pub records: Vec<ProbeRecord>,
    pub termination: Termination,
    pub state: BeamState,
    pub peak_reaction: f64,
    pub failure_stress: f64,
}

/// Quasi-static prescribed-displacement driver; probes the bottom fiber of
/// the bottom layer on `probe_element`.
pub fn run_quasistatic_beam(
    model: &BeamModel,
    plan: &BeamLoadingPlan,
    probe_element: usize,
    schedule: &Schedule,
    opts: &RunOptions,
    cfg: &StaggeredConfig,
) -> Result<BeamRunResult> {
    schedule.validate()?;
    cfg.validate()?;
    let mut state = BeamState::new(model);
    let mut records = Vec::new();
    let mut peak_reaction = 0.0f64;
    let mut failure_stress = 0.0f64;
    let mut termination = Termination::ScheduleComplete;
    'time: for &(until, dt) in &schedule.0 {
        while state.t < until - 1e-12 {
            let t = (state.t + dt).min(until);
            state.t = t;
            state.w_bar = opts.rate * t;
            let mut constraints = plan.fixed.clone();
            constraints.extend(plan.driven.iter().map(|&dof| (dof, -state.w_bar)));
            let iters = staggered_beam_step(model, &constraints, &mut state, cfg)?;

            let k = assemble_beam_stiffness(model, &state.d);
            let f_int = k.matvec(&state.q);
            let reaction =
                -plan.driven.iter().map(|&dof| f_int[dof]).sum::<f64>() * plan.reaction_scale;
            let sigma = surface_stress(model, &state.q, &state.d, 0, probe_element, false);
            let max_d = state
                .d
                .iter()
                .flat_map(|l| l.iter())
                .cloned()
                .fold(0.0, f64::max);
            records.push(ProbeRecord {
                t_s: t,
                w_bar_m: state.w_bar,
                r_n: reaction,
                sigma_mid_pa: sigma,
                sigma_quarter_top_pa: f64::NAN,
                max_d,
                staggered_iters: iters,
            });
            if reaction > peak_reaction {
                peak_reaction = reaction;
                failure_stress = sigma;
            }
            if peak_reaction > 0.0 && reaction < (1.0 - opts.localization_drop) * peak_reaction {
                termination = Termination::Localization;
                break 'time;
            }
        }
    }
    Ok(BeamRunResult {
        records,
        termination,
        state,
        peak_reaction,
        failure_stress,
    })
}

/// Per-node result CSV (RFC-4180). Monolith sections repeat the single
/// layer in both the `bot` and `top` column groups.
pub fn write_beam_csv(path: &Path, model: &BeamModel, state: &BeamState) -> Result<()> {
    let n = model.mesh.nodes.len();
    let top_layer = model.section.n_layers() - 1;
    let mut s = String::from(
        "x,w,u_bot,phi_bot,u_top,phi_top,d_bot,d_top,sigma_bot_surface,sigma_top_surface\r\n",
    );
    let node_stress = |layer: usize, node: usize, top: bool| -> f64 {
        // average of adjacent element-constant stresses
        let mut sum = 0.0;
        let mut cnt = 0.0;
        if node > 0 {
            sum += surface_stress(model, &state.q, &state.d, layer, node - 1, top);
            cnt += 1.0;
        }
        if node < n - 1 {
            sum += surface_stress(model, &state.q, &state.d, layer, node, top);
            cnt += 1.0;
        }
        sum / cnt
    };
    for node in 0..n {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\r\n",
            model.mesh.nodes[node],
            state.q[model.w_dof(node)],
            state.q[model.u_dof(node, 0)],
            state.q[model.phi_dof(node, 0)],
            state.q[model.u_dof(node, top_layer)],
            state.q[model.phi_dof(node, top_layer)],
            state.d[0][node],
            state.d[top_layer][node],
            node_stress(0, node, false),
            node_stress(top_layer, node, true),
        ));
    }
    write_atomic(path, s.as_bytes())
}
