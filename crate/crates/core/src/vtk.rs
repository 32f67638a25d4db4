//! Legacy-VTK ASCII export of the strip mesh and field snapshots.

use crate::error::Result;
use crate::mesh::{LayerTag, Mesh2D};
use std::fmt::Write as _;
use std::path::Path;

fn tag_id(tag: LayerTag) -> i32 {
    match tag {
        LayerTag::GlassBottom => 0,
        LayerTag::Interlayer => 1,
        LayerTag::GlassTop => 2,
        LayerTag::GlassMono => 3,
    }
}

fn header(mesh: &Mesh2D, title: &str) -> String {
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\n");
    s.push_str(title);
    s.push('\n');
    s.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    writeln!(s, "POINTS {} double", mesh.nodes.len()).unwrap();
    for &(x, y) in &mesh.nodes {
        writeln!(s, "{x} {y} 0").unwrap();
    }
    writeln!(s, "CELLS {} {}", mesh.elements.len(), 4 * mesh.elements.len()).unwrap();
    for tri in &mesh.elements {
        writeln!(s, "3 {} {} {}", tri[0], tri[1], tri[2]).unwrap();
    }
    writeln!(s, "CELL_TYPES {}", mesh.elements.len()).unwrap();
    for _ in &mesh.elements {
        s.push_str("5\n");
    }
    s
}

/// Mesh with layer tags as cell data.
pub fn write_mesh(path: &Path, mesh: &Mesh2D) -> Result<()> {
    let mut s = header(mesh, "glasspf mesh");
    writeln!(s, "CELL_DATA {}", mesh.elements.len()).unwrap();
    s.push_str("SCALARS layer_tag int 1\nLOOKUP_TABLE default\n");
    for &t in &mesh.layer_tags {
        writeln!(s, "{}", tag_id(t)).unwrap();
    }
    crate::output::write_atomic(path, s.as_bytes())
}

/// Field snapshot: nodal displacement and damage, element stress and
/// tensile energy density.
pub fn write_fields(
    path: &Path,
    mesh: &Mesh2D,
    u: &[f64],
    d: &[f64],
    sigma_xx: &[f64],
    psi_plus: &[f64],
) -> Result<()> {
    let mut s = header(mesh, "glasspf fields");
    writeln!(s, "POINT_DATA {}", mesh.nodes.len()).unwrap();
    s.push_str("VECTORS u double\n");
    for n in 0..mesh.nodes.len() {
        writeln!(s, "{} {} 0", u[2 * n], u[2 * n + 1]).unwrap();
    }
    s.push_str("SCALARS d double 1\nLOOKUP_TABLE default\n");
    for &v in d {
        writeln!(s, "{v}").unwrap();
    }
    writeln!(s, "CELL_DATA {}", mesh.elements.len()).unwrap();
    s.push_str("SCALARS sigma_xx double 1\nLOOKUP_TABLE default\n");
    for &v in sigma_xx {
        writeln!(s, "{v}").unwrap();
    }
    s.push_str("SCALARS psi_plus double 1\nLOOKUP_TABLE default\n");
    for &v in psi_plus {
        writeln!(s, "{v}").unwrap();
    }
    crate::output::write_atomic(path, s.as_bytes())
}

/// Snapshot of a running 2D simulation: expands the glass-submesh damage
/// to the full node set and evaluates element stress and tensile energy.
pub fn write_state_fields(
    path: &Path,
    model: &crate::solver::Model2D,
    state: &crate::solver::SimulationState,
) -> Result<()> {
    use crate::fem2d::{element_geometry, element_strain, probe_stress};
    use crate::phasefield::split_energy;

    let mesh = &model.mesh;
    let mut d_full = vec![0.0; mesh.nodes.len()];
    for (s, &parent) in model.sub.node_map.iter().enumerate() {
        d_full[parent] = state.d[s];
    }
    let mut sigma_xx = Vec::with_capacity(mesh.elements.len());
    let mut psi_plus = Vec::with_capacity(mesh.elements.len());
    for e in 0..mesh.elements.len() {
        let stress = probe_stress(
            mesh,
            &model.sub,
            &model.mats,
            &model.formulation,
            &state.u,
            &state.d,
            e,
        )?;
        sigma_xx.push(stress.sig_xx);
        let (lam, mu) = model.mats.lame(mesh.layer_tags[e])?;
        let geo = element_geometry(mesh, e);
        let eps = element_strain(mesh, &geo, e, &state.u);
        psi_plus.push(if mesh.layer_tags[e].is_glass() {
            split_energy(model.formulation.split, &eps, lam, mu).0
        } else {
            0.0
        });
    }
    write_fields(path, mesh, &state.u, &d_full, &sigma_xx, &psi_plus)
}
