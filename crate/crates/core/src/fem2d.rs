//! Plane-stress finite-element assembly on linear triangles: degraded
//! elastic stiffness, nonlinear internal forces for the split-consistent
//! scheme, element energy densities, the phase-field system, boundary
//! conditions, and reactions.
//!
//! One-point quadrature throughout (exact for the constant-strain
//! triangle); damage at the quadrature point is the mean of the three
//! nodal values.

use crate::error::{Error, Result};
use crate::linalg::BandMatrix;
use crate::materials::{MaterialGlass, StrengthField};
use crate::mesh::{GlassSubmesh, LayerTag, Mesh2D};
use crate::phasefield::{
    degradation, driving_force, geometric_function, scaling_constant, split_energy, split_stress,
    FormulationKind, PhaseFieldFormulation, SolveScheme, StrainState2D, Stress2D,
};

/// Per-tag material data: one glass material for all glass tags plus an
/// optional equivalent-elastic interlayer (E, nu).
#[derive(Debug, Clone)]
pub struct MaterialMap {
    pub glass: MaterialGlass,
    pub strength: StrengthField,
    pub interlayer: Option<(f64, f64)>,
}

impl MaterialMap {
    /// Plane-stress Lame parameters for a layer tag.
    pub fn lame(&self, tag: LayerTag) -> Result<(f64, f64)> {
        if tag.is_glass() {
            Ok((self.glass.lambda_plane_stress(), self.glass.shear_modulus()))
        } else {
            let (e, nu) = self.interlayer.ok_or_else(|| {
                Error::Assembly("mesh has interlayer elements but no interlayer material".into())
            })?;
            Ok((e * nu / (1.0 - nu * nu), e / (2.0 * (1.0 + nu))))
        }
    }
}

/// Precomputed constant-strain-triangle geometry.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    pub area: f64,
    pub dndx: [f64; 3],
    pub dndy: [f64; 3],
}

pub fn element_geometry(mesh: &Mesh2D, e: usize) -> ElementGeometry {
    let [a, b, c] = mesh.elements[e];
    let (xa, ya) = mesh.nodes[a];
    let (xb, yb) = mesh.nodes[b];
    let (xc, yc) = mesh.nodes[c];
    let two_a = (xb - xa) * (yc - ya) - (xc - xa) * (yb - ya);
    ElementGeometry {
        area: 0.5 * two_a,
        dndx: [(yb - yc) / two_a, (yc - ya) / two_a, (ya - yb) / two_a],
        dndy: [(xc - xb) / two_a, (xa - xc) / two_a, (xb - xa) / two_a],
    }
}

/// Element strain from the nodal displacement vector (2 dofs per node).
pub fn element_strain(mesh: &Mesh2D, geo: &ElementGeometry, e: usize, u: &[f64]) -> StrainState2D {
    let tri = mesh.elements[e];
    let mut eps = StrainState2D::zero();
    for (k, &n) in tri.iter().enumerate() {
        let ux = u[2 * n];
        let uy = u[2 * n + 1];
        eps.eps_xx += geo.dndx[k] * ux;
        eps.eps_yy += geo.dndy[k] * uy;
        eps.eps_xy += 0.5 * (geo.dndy[k] * ux + geo.dndx[k] * uy);
    }
    eps
}

/// Mean of the three nodal damage values (zero off the glass submesh).
pub fn element_damage(mesh: &Mesh2D, sub: &GlassSubmesh, e: usize, d: &[f64]) -> f64 {
    let tri = mesh.elements[e];
    let mut sum = 0.0;
    for &n in &tri {
        if let Some(s) = sub.node_inv[n] {
            sum += d[s];
        }
    }
    sum / 3.0
}

fn isotropic_stress(strain: &StrainState2D, lam: f64, mu: f64) -> Stress2D {
    let tr = strain.trace();
    Stress2D {
        sig_xx: lam * tr + 2.0 * mu * strain.eps_xx,
        sig_yy: lam * tr + 2.0 * mu * strain.eps_yy,
        sig_xy: 2.0 * mu * strain.eps_xy,
    }
}

/// Degraded stress of the active scheme at the element quadrature point.
pub fn element_stress(
    formulation: &PhaseFieldFormulation,
    strain: &StrainState2D,
    lam: f64,
    mu: f64,
    d: f64,
    glass: bool,
) -> Stress2D {
    if !glass {
        return isotropic_stress(strain, lam, mu);
    }
    let (g, _) = degradation(d, formulation.residual_stiffness);
    match formulation.scheme {
        SolveScheme::Hybrid => {
            let s = isotropic_stress(strain, lam, mu);
            Stress2D {
                sig_xx: g * s.sig_xx,
                sig_yy: g * s.sig_yy,
                sig_xy: g * s.sig_xy,
            }
        }
        SolveScheme::Anisotropic => {
            let (sp, sm) = split_stress(formulation.split, strain, lam, mu);
            sm.add_scaled(&sp, g)
        }
    }
}

/// dof indices of an element (ux, uy per node).
fn element_dofs(mesh: &Mesh2D, e: usize) -> [usize; 6] {
    let [a, b, c] = mesh.elements[e];
    [2 * a, 2 * a + 1, 2 * b, 2 * b + 1, 2 * c, 2 * c + 1]
}

fn displacement_bandwidth(mesh: &Mesh2D) -> usize {
    let mut bw = 0;
    for tri in &mesh.elements {
        let max = *tri.iter().max().unwrap();
        let min = *tri.iter().min().unwrap();
        bw = bw.max(2 * (max - min) + 1);
    }
    bw
}

/// Assembled, constrained displacement system; the pre-constraint operator
/// is retained for reaction recovery.
pub struct DisplacementSystem {
    pub matrix: BandMatrix,
    pub rhs: Vec<f64>,
    pub full: BandMatrix,
    pub constraints: Vec<(usize, f64)>,
}

/// Linear (hybrid-scheme) stiffness with degraded glass elements.
pub fn assemble_stiffness(
    mesh: &Mesh2D,
    sub: &GlassSubmesh,
    mats: &MaterialMap,
    formulation: &PhaseFieldFormulation,
    d: &[f64],
) -> Result<BandMatrix> {
    let n = 2 * mesh.nodes.len();
    let mut k = BandMatrix::new(n, displacement_bandwidth(mesh));
    for e in 0..mesh.elements.len() {
        let tag = mesh.layer_tags[e];
        let (lam, mu) = mats.lame(tag)?;
        let geo = element_geometry(mesh, e);
        let factor = if tag.is_glass() {
            degradation(element_damage(mesh, sub, e, d), formulation.residual_stiffness).0
        } else {
            1.0
        };
        let ke = element_stiffness(&geo, lam, mu, factor);
        let dofs = element_dofs(mesh, e);
        for (i, &gi) in dofs.iter().enumerate() {
            for (j, &gj) in dofs.iter().enumerate() {
                if gi >= gj {
                    k.add(gi, gj, ke[i][j]);
                }
            }
        }
    }
    Ok(k)
}

/// 6x6 CST stiffness for an isotropic material scaled by `factor`.
fn element_stiffness(geo: &ElementGeometry, lam: f64, mu: f64, factor: f64) -> [[f64; 6]; 6] {
    let mut k = [[0.0; 6]; 6];
    // column j: internal force of a unit displacement at local dof j
    for j in 0..6 {
        let mut eps = StrainState2D::zero();
        let node = j / 2;
        if j % 2 == 0 {
            eps.eps_xx = geo.dndx[node];
            eps.eps_xy = 0.5 * geo.dndy[node];
        } else {
            eps.eps_yy = geo.dndy[node];
            eps.eps_xy = 0.5 * geo.dndx[node];
        }
        let s = isotropic_stress(&eps, lam, mu);
        let f = internal_force_of_stress(geo, &s, factor);
        for i in 0..6 {
            k[i][j] = f[i];
        }
    }
    k
}

fn internal_force_of_stress(geo: &ElementGeometry, s: &Stress2D, factor: f64) -> [f64; 6] {
    let mut f = [0.0; 6];
    for node in 0..3 {
        f[2 * node] = factor * geo.area * (s.sig_xx * geo.dndx[node] + s.sig_xy * geo.dndy[node]);
        f[2 * node + 1] =
            factor * geo.area * (s.sig_yy * geo.dndy[node] + s.sig_xy * geo.dndx[node]);
    }
    f
}

/// Internal force vector of the split-consistent (anisotropic) stress.
pub fn assemble_internal_force(
    mesh: &Mesh2D,
    sub: &GlassSubmesh,
    mats: &MaterialMap,
    formulation: &PhaseFieldFormulation,
    d: &[f64],
    u: &[f64],
) -> Result<Vec<f64>> {
    let mut f = vec![0.0; 2 * mesh.nodes.len()];
    for e in 0..mesh.elements.len() {
        let tag = mesh.layer_tags[e];
        let (lam, mu) = mats.lame(tag)?;
        let geo = element_geometry(mesh, e);
        let eps = element_strain(mesh, &geo, e, u);
        let de = if tag.is_glass() {
            element_damage(mesh, sub, e, d)
        } else {
            0.0
        };
        let s = element_stress(formulation, &eps, lam, mu, de, tag.is_glass());
        let fe = internal_force_of_stress(&geo, &s, 1.0);
        let dofs = element_dofs(mesh, e);
        for (i, &gi) in dofs.iter().enumerate() {
            f[gi] += fe[i];
        }
    }
    Ok(f)
}

/// Algorithmic tangent for the anisotropic Newton loop, built per element
/// by finite differences of the split stress and symmetrized.
pub fn assemble_tangent(
    mesh: &Mesh2D,
    sub: &GlassSubmesh,
    mats: &MaterialMap,
    formulation: &PhaseFieldFormulation,
    d: &[f64],
    u: &[f64],
) -> Result<BandMatrix> {
    let n = 2 * mesh.nodes.len();
    let mut k = BandMatrix::new(n, displacement_bandwidth(mesh));
    for e in 0..mesh.elements.len() {
        let tag = mesh.layer_tags[e];
        let (lam, mu) = mats.lame(tag)?;
        let geo = element_geometry(mesh, e);
        let glass = tag.is_glass();
        let de = if glass {
            element_damage(mesh, sub, e, d)
        } else {
            0.0
        };
        let mut ke = [[0.0; 6]; 6];
        if glass && formulation.scheme == SolveScheme::Anisotropic {
            let eps0 = element_strain(mesh, &geo, e, u);
            let h = 1e-8 * eps0.norm().max(1e-8);
            for j in 0..6 {
                let node = j / 2;
                let (de_xx, de_yy, de_xy) = if j % 2 == 0 {
                    (geo.dndx[node], 0.0, 0.5 * geo.dndy[node])
                } else {
                    (0.0, geo.dndy[node], 0.5 * geo.dndx[node])
                };
                let perturb = |s: f64| StrainState2D {
                    eps_xx: eps0.eps_xx + s * de_xx,
                    eps_yy: eps0.eps_yy + s * de_yy,
                    eps_xy: eps0.eps_xy + s * de_xy,
                };
                let sp = element_stress(formulation, &perturb(h), lam, mu, de, true);
                let sm = element_stress(formulation, &perturb(-h), lam, mu, de, true);
                let dsig = Stress2D {
                    sig_xx: (sp.sig_xx - sm.sig_xx) / (2.0 * h),
                    sig_yy: (sp.sig_yy - sm.sig_yy) / (2.0 * h),
                    sig_xy: (sp.sig_xy - sm.sig_xy) / (2.0 * h),
                };
                let col = internal_force_of_stress(&geo, &dsig, 1.0);
                for i in 0..6 {
                    ke[i][j] = col[i];
                }
            }
            // symmetrize: the exact tangent is symmetric wherever defined
            for i in 0..6 {
                for j in 0..i {
                    let avg = 0.5 * (ke[i][j] + ke[j][i]);
                    ke[i][j] = avg;
                    ke[j][i] = avg;
                }
            }
        } else {
            let factor = if glass {
                degradation(de, formulation.residual_stiffness).0
            } else {
                1.0
            };
            ke = element_stiffness(&geo, lam, mu, factor);
        }
        let dofs = element_dofs(mesh, e);
        for (i, &gi) in dofs.iter().enumerate() {
            for (j, &gj) in dofs.iter().enumerate() {
                if gi >= gj {
                    k.add(gi, gj, ke[i][j]);
                }
            }
        }
    }
    Ok(k)
}

/// Outcome of a displacement solve.
pub struct DisplacementSolution {
    pub u: Vec<f64>,
    pub newton_iters: usize,
}

/// Solves the displacement sub-problem under Dirichlet constraints.
///
/// Hybrid: one linear solve. Anisotropic: Newton on the split-consistent
/// residual with relative tolerance `newton_tol`.
pub fn solve_displacement(
    mesh: &Mesh2D,
    sub: &GlassSubmesh,
    mats: &MaterialMap,
    formulation: &PhaseFieldFormulation,
    d: &[f64],
    constraints: &[(usize, f64)],
    u_init: &[f64],
    newton_tol: f64,
    max_newton: usize,
) -> Result<DisplacementSolution> {
    let n = 2 * mesh.nodes.len();
    match formulation.scheme {
        SolveScheme::Hybrid => {
            let mut k = assemble_stiffness(mesh, sub, mats, formulation, d)?;
            let mut rhs = vec![0.0; n];
            k.apply_dirichlet(&mut rhs, constraints);
            let u = k.cholesky()?.solve(&rhs);
            Ok(DisplacementSolution { u, newton_iters: 1 })
        }
        SolveScheme::Anisotropic => {
            let mut u = u_init.to_vec();
            for &(dof, v) in constraints {
                u[dof] = v;
            }
            let fixed: Vec<(usize, f64)> = constraints.iter().map(|&(d, _)| (d, 0.0)).collect();
            let mut is_fixed = vec![false; n];
            for &(dof, _) in constraints {
                is_fixed[dof] = true;
            }
            let mut ref_norm = 0.0f64;
            for it in 0..max_newton {
                let f_int = assemble_internal_force(mesh, sub, mats, formulation, d, &u)?;
                let mut r: Vec<f64> = f_int.iter().map(|&v| -v).collect();
                for &(dof, _) in constraints {
                    r[dof] = 0.0;
                }
                let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
                if it == 0 {
                    // reference: constraint reaction magnitude, so a zero
                    // initial residual (linear regime) terminates at once
                    let reac: f64 = constraints
                        .iter()
                        .map(|&(dof, _)| f_int[dof] * f_int[dof])
                        .sum::<f64>()
                        .sqrt();
                    ref_norm = norm.max(reac).max(1e-30);
                }
                if norm <= newton_tol * ref_norm {
                    return Ok(DisplacementSolution {
                        u,
                        newton_iters: it + 1,
                    });
                }
                let mut kt = assemble_tangent(mesh, sub, mats, formulation, d, &u)?;
                kt.apply_dirichlet(&mut r, &fixed);
                let du = kt.cholesky()?.solve(&r);
                // backtracking on the residual norm; the split stress is
                // only piecewise smooth and a full step can cycle
                let mut alpha = 1.0f64;
                loop {
                    let trial: Vec<f64> = u
                        .iter()
                        .zip(&du)
                        .map(|(ui, di)| ui + alpha * di)
                        .collect();
                    let f_trial = assemble_internal_force(mesh, sub, mats, formulation, d, &trial)?;
                    let trial_norm = f_trial
                        .iter()
                        .enumerate()
                        .filter(|&(dof, _)| !is_fixed[dof])
                        .map(|(_, v)| v * v)
                        .sum::<f64>()
                        .sqrt();
                    if trial_norm <= (1.0 - 1e-4 * alpha) * norm {
                        u = trial;
                        break;
                    }
                    alpha *= 0.5;
                    if alpha < 1.0 / 1024.0 {
                        // no descent direction left: the residual sits at
                        // the assembly roundoff floor, which can exceed a
                        // very tight relative tolerance
                        if norm <= 1e-6 * ref_norm {
                            return Ok(DisplacementSolution {
                                u,
                                newton_iters: it + 1,
                            });
                        }
                        if trial_norm < norm {
                            u = trial;
                        }
                        break;
                    }
                }
            }
            Err(Error::Solver(format!(
                "Newton did not converge in {max_newton} iterations"
            )))
        }
    }
}

/// Reaction forces (per unit out-of-plane width) at the given constrained
/// dofs, recovered from the internal force of the converged state.
pub fn reactions_at(
    mesh: &Mesh2D,
    sub: &GlassSubmesh,
    mats: &MaterialMap,
    formulation: &PhaseFieldFormulation,
    d: &[f64],
    u: &[f64],
    dofs: &[usize],
) -> Result<Vec<f64>> {
    let f_int = assemble_internal_force(mesh, sub, mats, formulation, d, u)?;
    Ok(dofs.iter().map(|&dof| f_int[dof]).collect())
}

/// Bound-constrained linear phase-field system on the glass submesh.
pub struct DamageSystem {
    pub matrix: BandMatrix,
    pub rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

fn damage_bandwidth(sub: &GlassSubmesh) -> usize {
    let mut bw = 0;
    for tri in &sub.elements {
        let max = *tri.iter().max().unwrap();
        let min = *tri.iter().min().unwrap();
        bw = bw.max(max - min);
    }
    bw
}

/// Assembles the damage evolution system, linear in d for all three
/// formulations given the displacement field. The lower bound carries the
/// irreversibility constraint.
pub fn assemble_damage(
    mesh: &Mesh2D,
    sub: &GlassSubmesh,
    mats: &MaterialMap,
    formulation: &PhaseFieldFormulation,
    u: &[f64],
    d_lower: &[f64],
) -> Result<DamageSystem> {
    let n = sub.node_map.len();
    let mut a = BandMatrix::new(n, damage_bandwidth(sub));
    let mut rhs = vec![0.0; n];
    let c_alpha = scaling_constant(formulation.kind);
    let lc = mats.glass.length_scale;
    let (lam, mu) = mats.lame(LayerTag::GlassMono)?;

    for (se, &pe) in sub.elem_map.iter().enumerate() {
        let geo = element_geometry(mesh, pe);
        let eps = element_strain(mesh, &geo, pe, u);
        let (psi_plus, _) = split_energy(formulation.split, &eps, lam, mu);
        let (cx, cy) = mesh.element_centroid(pe);
        let sigma_c = mats.strength.effective_strength(cx, cy);
        let f_tilde = match formulation.kind {
            FormulationKind::PfM => {
                let eff = isotropic_stress(&eps, lam, mu);
                let (s1, s2) = eff.principal();
                driving_force(formulation.kind, psi_plus, &[s1, s2, 0.0], &mats.glass, sigma_c)
            }
            _ => driving_force(formulation.kind, psi_plus, &[], &mats.glass, sigma_c),
        };

        let tri = sub.elements[se];
        let area = geo.area;
        // one-point mass (phi_i = 1/3 at the centroid) and exact gradients
        let mass = area / 9.0;
        let grad_coeff = 2.0 * lc * lc / c_alpha;
        let (mass_coeff, source) = match formulation.kind {
            FormulationKind::PfB | FormulationKind::PfM => (2.0 / c_alpha + f_tilde, f_tilde),
            FormulationKind::PfP => (f_tilde, f_tilde - 1.0 / c_alpha),
        };
        for (i, &ni) in tri.iter().enumerate() {
            for (j, &nj) in tri.iter().enumerate() {
                if ni >= nj {
                    let grad = geo.dndx[i] * geo.dndx[j] + geo.dndy[i] * geo.dndy[j];
                    a.add(ni, nj, mass_coeff * mass + grad_coeff * grad * area);
                }
            }
            rhs[ni] += source * area / 3.0;
        }
    }
    Ok(DamageSystem {
        matrix: a,
        rhs,
        lower: d_lower.to_vec(),
        upper: vec![1.0; n],
    })
}

/// Total-energy breakdown of a state (per unit out-of-plane width).
#[derive(Debug, Clone, Copy, Default)]
pub struct EnergyBreakdown {
    pub elastic: f64,
    pub surface: f64,
}

impl EnergyBreakdown {
    pub fn total(&self) -> f64 {
        self.elastic + self.surface
    }
}

/// Evaluates the regularized energy functional (split form) at (u, d).
pub fn total_energy(
    mesh: &Mesh2D,
    sub: &GlassSubmesh,
    mats: &MaterialMap,
    formulation: &PhaseFieldFormulation,
    u: &[f64],
    d: &[f64],
) -> Result<EnergyBreakdown> {
    let c_alpha = scaling_constant(formulation.kind);
    let lc = mats.glass.length_scale;
    let ft = mats.glass.tensile_strength;
    let mut out = EnergyBreakdown::default();
    let (lam_g, mu_g) = mats.lame(LayerTag::GlassMono)?;
    for (se, &pe) in sub.elem_map.iter().enumerate() {
        let geo = element_geometry(mesh, pe);
        let eps = element_strain(mesh, &geo, pe, u);
        let de = element_damage(mesh, sub, pe, d);
        let (g, _) = degradation(de.clamp(0.0, 1.0), formulation.residual_stiffness);
        let (psi_plus, psi_minus) = split_energy(formulation.split, &eps, lam_g, mu_g);
        out.elastic += geo.area * (g * psi_plus + psi_minus);

        // local fracture energy follows the strength field
        let (cx, cy) = mesh.element_centroid(pe);
        let scale = (mats.strength.effective_strength(cx, cy) / ft).powi(2);
        let gf = mats.glass.fracture_energy * scale;
        let (alpha, _) = geometric_function(formulation.kind, de.clamp(0.0, 1.0));
        let tri = sub.elements[se];
        let mut gx = 0.0;
        let mut gy = 0.0;
        for (k, &n) in tri.iter().enumerate() {
            gx += geo.dndx[k] * d[n];
            gy += geo.dndy[k] * d[n];
        }
        out.surface += gf / c_alpha * (alpha / lc + lc * (gx * gx + gy * gy)) * geo.area;
    }
    for e in 0..mesh.elements.len() {
        let tag = mesh.layer_tags[e];
        if tag.is_glass() {
            continue;
        }
        let (lam, mu) = mats.lame(tag)?;
        let geo = element_geometry(mesh, e);
        let eps = element_strain(mesh, &geo, e, u);
        let s = isotropic_stress(&eps, lam, mu);
        let psi =
            0.5 * (s.sig_xx * eps.eps_xx + s.sig_yy * eps.eps_yy + 2.0 * s.sig_xy * eps.eps_xy);
        out.elastic += geo.area * psi;
    }
    Ok(out)
}

/// Element-constant probe stress of the containing (or nearest bottom/top
/// boundary) element.
pub fn probe_stress(
    mesh: &Mesh2D,
    sub: &GlassSubmesh,
    mats: &MaterialMap,
    formulation: &PhaseFieldFormulation,
    u: &[f64],
    d: &[f64],
    element: usize,
) -> Result<Stress2D> {
    if element >= mesh.elements.len() {
        return Err(Error::Query(format!("element {element} out of range")));
    }
    let tag = mesh.layer_tags[element];
    let (lam, mu) = mats.lame(tag)?;
    let geo = element_geometry(mesh, element);
    let eps = element_strain(mesh, &geo, element, u);
    let de = if tag.is_glass() {
        element_damage(mesh, sub, element, d)
    } else {
        0.0
    };
    Ok(element_stress(formulation, &eps, lam, mu, de, tag.is_glass()))
}
