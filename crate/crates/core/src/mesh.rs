//! Structured 1D/2D mesh generation with graded refinement bands, layered
//! lamination tagging, and extraction of the glass-only damage subdomain.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Per-element lamination tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayerTag {
    GlassBottom,
    Interlayer,
    GlassTop,
    GlassMono,
}

impl LayerTag {
    pub fn is_glass(self) -> bool {
        !matches!(self, LayerTag::Interlayer)
    }
}

/// Whether a model spans the full specimen or a symmetric half.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Symmetry {
    Half,
    Full,
}

/// Local x-refinement bands with a geometric grading transition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RefinementSpec {
    /// (x_min, x_max, target element size) in meters.
    pub bands: Vec<(f64, f64, f64)>,
    pub default_size: f64,
    /// Upper bound on the ratio of adjacent element sizes, >= 1.
    pub grading_ratio: f64,
}

impl RefinementSpec {
    pub fn uniform(size: f64) -> Self {
        RefinementSpec {
            bands: Vec::new(),
            default_size: size,
            grading_ratio: 1.3,
        }
    }

    pub fn with_band(size: f64, x_min: f64, x_max: f64, target: f64) -> Self {
        RefinementSpec {
            bands: vec![(x_min, x_max, target)],
            default_size: size,
            grading_ratio: 1.3,
        }
    }

    fn validate(&self, length: f64) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.default_size > 0.0) {
            errs.push("default_size must be > 0".into());
        }
        if !(self.grading_ratio >= 1.0) {
            errs.push(format!("grading_ratio must be >= 1, got {}", self.grading_ratio));
        }
        for &(a, b, t) in &self.bands {
            if !(t > 0.0) || t > self.default_size {
                errs.push(format!("band target {t} must be in (0, default_size]"));
            }
            if !(a < b) {
                errs.push(format!("band [{a}, {b}] is empty"));
            }
            if b < 0.0 || a > length {
                errs.push(format!("band [{a}, {b}] outside the domain [0, {length}]"));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    /// Target size at `x`: band targets inside bands, grown away from them
    /// with a slope that keeps adjacent marching sizes within the ratio.
    fn size_at(&self, x: f64, cap: f64) -> f64 {
        let slope = 1.0 - 1.0 / self.grading_ratio;
        let mut s = self.default_size.min(cap);
        for &(a, b, t) in &self.bands {
            let dist = if x < a {
                a - x
            } else if x > b {
                x - b
            } else {
                0.0
            };
            s = s.min(t + slope * dist);
        }
        s
    }
}

/// Generates strictly increasing stations over [0, length] honoring the
/// refinement spec, a hard size cap, and mandatory break points.
fn generate_stations(
    length: f64,
    refinement: &RefinementSpec,
    cap: f64,
    breaks: &[f64],
) -> Vec<f64> {
    let mut cuts: Vec<f64> = vec![0.0, length];
    for &(a, b, _) in &refinement.bands {
        if a > 0.0 && a < length {
            cuts.push(a);
        }
        if b > 0.0 && b < length {
            cuts.push(b);
        }
    }
    for &p in breaks {
        if p > 1e-12 && p < length - 1e-12 {
            cuts.push(p);
        }
    }
    cuts.sort_by(|a, b| a.total_cmp(b));
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    let mut stations = vec![0.0];
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let seg = b - a;
        // provisional sizes marched from the left
        let mut sizes = Vec::new();
        let mut cum = 0.0;
        while cum < seg {
            let h = refinement.size_at(a + cum, cap).min(seg);
            sizes.push(h);
            cum += h;
        }
        // rescale so the last node lands exactly on the cut
        let f = seg / cum;
        let mut x = a;
        for (k, h) in sizes.iter().enumerate() {
            x += h * f;
            if k + 1 == sizes.len() {
                stations.push(b);
            } else {
                stations.push(x);
            }
        }
    }
    stations
}

/// Conforming triangulated strip of stacked layers.
#[derive(Debug, Clone)]
pub struct Mesh2D {
    /// Node coordinates (x, y) in meters.
    pub nodes: Vec<(f64, f64)>,
    /// Counterclockwise 3-node triangles.
    pub elements: Vec<[usize; 3]>,
    pub layer_tags: Vec<LayerTag>,
    pub symmetry: Symmetry,
    /// Generated x stations (useful for snapping probes and constraints).
    pub x_stations: Vec<f64>,
    /// Generated y levels including every layer interface.
    pub y_levels: Vec<f64>,
}

impl Mesh2D {
    pub fn element_area(&self, e: usize) -> f64 {
        let [a, b, c] = self.elements[e];
        let (xa, ya) = self.nodes[a];
        let (xb, yb) = self.nodes[b];
        let (xc, yc) = self.nodes[c];
        0.5 * ((xb - xa) * (yc - ya) - (xc - xa) * (yb - ya))
    }

    pub fn element_centroid(&self, e: usize) -> (f64, f64) {
        let [a, b, c] = self.elements[e];
        let (xa, ya) = self.nodes[a];
        let (xb, yb) = self.nodes[b];
        let (xc, yc) = self.nodes[c];
        ((xa + xb + xc) / 3.0, (ya + yb + yc) / 3.0)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.elements.len()).map(|e| self.element_area(e)).sum()
    }

    /// Nearest generated station to `x`.
    pub fn snap_x(&self, x: f64) -> f64 {
        *self
            .x_stations
            .iter()
            .min_by(|a, b| (*a - x).abs().total_cmp(&(*b - x).abs()))
            .expect("mesh has stations")
    }

    /// Node index at the given station/level pair (exact coordinates from
    /// the generator grid).
    pub fn node_at(&self, x: f64, y: f64) -> Option<usize> {
        let ny = self.y_levels.len();
        let i = self.x_stations.iter().position(|&s| (s - x).abs() < 1e-12)?;
        let j = self.y_levels.iter().position(|&l| (l - y).abs() < 1e-12)?;
        Some(i * ny + j)
    }

    /// Index of the element adjacent to the bottom boundary whose x-extent
    /// contains `x`, preferring the one with the larger centroid weight.
    pub fn bottom_element_at(&self, x: f64) -> Option<usize> {
        self.boundary_element_at(x, true)
    }

    pub fn top_element_at(&self, x: f64) -> Option<usize> {
        self.boundary_element_at(x, false)
    }

    fn boundary_element_at(&self, x: f64, bottom: bool) -> Option<usize> {
        let extreme = if bottom {
            self.y_levels[0]
        } else {
            *self.y_levels.last().unwrap()
        };
        let mut best: Option<(usize, f64)> = None;
        for (e, tri) in self.elements.iter().enumerate() {
            // element touching the boundary by two nodes
            let on = tri
                .iter()
                .filter(|&&n| (self.nodes[n].1 - extreme).abs() < 1e-12)
                .count();
            if on < 2 {
                continue;
            }
            let (cx, _) = self.element_centroid(e);
            let d = (cx - x).abs();
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((e, d));
            }
        }
        best.map(|(e, _)| e)
    }

    /// Element containing the point, by barycentric test.
    pub fn element_containing(&self, x: f64, y: f64) -> Option<usize> {
        for (e, tri) in self.elements.iter().enumerate() {
            let [a, b, c] = *tri;
            let (xa, ya) = self.nodes[a];
            let (xb, yb) = self.nodes[b];
            let (xc, yc) = self.nodes[c];
            let det = (xb - xa) * (yc - ya) - (xc - xa) * (yb - ya);
            let l1 = ((xb - x) * (yc - y) - (xc - x) * (yb - y)) / det;
            let l2 = ((xc - x) * (ya - y) - (xa - x) * (yc - y)) / det;
            let l3 = 1.0 - l1 - l2;
            let eps = -1e-10;
            if l1 >= eps && l2 >= eps && l3 >= eps {
                return Some(e);
            }
        }
        None
    }
}

/// Ratio cap between the two legs of the generated right triangles; keeps
/// the minimum triangle angle above 20 degrees.
const LEG_RATIO_CAP: f64 = 2.7;

/// Builds the layered plane-stress strip mesh.
///
/// `layers` are (thickness, tag) pairs from the bottom up. Node layers align
/// across material interfaces; every glass layer gets at least 4 elements
/// through its thickness and the interlayer at least 2.
pub fn build_section_mesh(
    length: f64,
    layers: &[(f64, LayerTag)],
    refinement: &RefinementSpec,
    symmetry: Symmetry,
    breaks: &[f64],
) -> Result<Mesh2D> {
    if layers.is_empty() {
        return Err(Error::config("at least one layer required"));
    }
    if layers.iter().any(|&(h, _)| !(h > 0.0)) {
        return Err(Error::config("layer thicknesses must be > 0"));
    }
    refinement.validate(length)?;

    let min_band = refinement
        .bands
        .iter()
        .map(|&(_, _, t)| t)
        .fold(refinement.default_size, f64::min);

    // y subdivision per layer, limited so band-size x elements stay well shaped
    let target_y = refinement.default_size.min(LEG_RATIO_CAP * min_band);
    let mut y_levels = vec![0.0];
    let mut row_tags = Vec::new();
    let mut y = 0.0;
    for &(h, tag) in layers {
        let min_n = if tag.is_glass() { 4 } else { 2 };
        let n = ((h / target_y).ceil() as usize).max(min_n);
        for k in 1..=n {
            y_levels.push(y + h * k as f64 / n as f64);
            row_tags.push(tag);
        }
        y += h;
        // interfaces land exactly on the accumulated thickness
        *y_levels.last_mut().unwrap() = y;
    }

    let min_sy = y_levels
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let cap = LEG_RATIO_CAP * min_sy;
    let x_stations = generate_stations(length, refinement, cap, breaks);

    let ny = y_levels.len();
    let mut nodes = Vec::with_capacity(x_stations.len() * ny);
    for &x in &x_stations {
        for &yy in &y_levels {
            nodes.push((x, yy));
        }
    }
    let mut elements = Vec::new();
    let mut layer_tags = Vec::new();
    for i in 0..x_stations.len() - 1 {
        for j in 0..ny - 1 {
            let a = i * ny + j;
            let b = (i + 1) * ny + j;
            let c = (i + 1) * ny + j + 1;
            let d = i * ny + j + 1;
            if (i + j) % 2 == 0 {
                elements.push([a, b, c]);
                elements.push([a, c, d]);
            } else {
                elements.push([a, b, d]);
                elements.push([b, c, d]);
            }
            layer_tags.push(row_tags[j]);
            layer_tags.push(row_tags[j]);
        }
    }

    Ok(Mesh2D {
        nodes,
        elements,
        layer_tags,
        symmetry,
        x_stations,
        y_levels,
    })
}

/// Maps between a glass-only submesh and its parent mesh. Damage degrees of
/// freedom exist only on the submesh; glass-polymer interfaces carry
/// homogeneous natural boundary conditions for d.
#[derive(Debug, Clone)]
pub struct GlassSubmesh {
    /// submesh node -> parent node
    pub node_map: Vec<usize>,
    /// parent node -> submesh node
    pub node_inv: Vec<Option<usize>>,
    /// submesh element -> parent element
    pub elem_map: Vec<usize>,
    /// submesh elements in submesh node numbering
    pub elements: Vec<[usize; 3]>,
}

pub fn glass_submesh(mesh: &Mesh2D) -> Result<GlassSubmesh> {
    let glass_elems: Vec<usize> = (0..mesh.elements.len())
        .filter(|&e| mesh.layer_tags[e].is_glass())
        .collect();
    if glass_elems.is_empty() {
        return Err(Error::config("mesh has no glass-tagged elements"));
    }
    let mut node_inv = vec![None; mesh.nodes.len()];
    let mut node_map = Vec::new();
    for &e in &glass_elems {
        for &n in &mesh.elements[e] {
            if node_inv[n].is_none() {
                node_inv[n] = Some(node_map.len());
                node_map.push(n);
            }
        }
    }
    let elements = glass_elems
        .iter()
        .map(|&e| {
            let [a, b, c] = mesh.elements[e];
            [
                node_inv[a].unwrap(),
                node_inv[b].unwrap(),
                node_inv[c].unwrap(),
            ]
        })
        .collect();
    Ok(GlassSubmesh {
        node_map,
        node_inv,
        elem_map: glass_elems,
        elements,
    })
}

/// 1D graded mesh over [0, length] (half-beam by convention).
#[derive(Debug, Clone)]
pub struct Mesh1D {
    pub nodes: Vec<f64>,
}

impl Mesh1D {
    pub fn n_elements(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn element_size(&self, e: usize) -> f64 {
        self.nodes[e + 1] - self.nodes[e]
    }

    pub fn nearest_node(&self, x: f64) -> usize {
        (0..self.nodes.len())
            .min_by(|&a, &b| (self.nodes[a] - x).abs().total_cmp(&(self.nodes[b] - x).abs()))
            .unwrap()
    }
}

pub fn build_beam_mesh(length: f64, refinement: &RefinementSpec, breaks: &[f64]) -> Result<Mesh1D> {
    if !(length > 0.0) {
        return Err(Error::config("beam length must be > 0"));
    }
    refinement.validate(length)?;
    let nodes = generate_stations(length, refinement, f64::INFINITY, breaks);
    Ok(Mesh1D { nodes })
}
