//! Glass elastic/strength data and the viscoelastic interlayer model with
//! its equivalent-elastic reduction.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Isotropic elastic glass with a tensile strength and fracture parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MaterialGlass {
    /// Young's modulus E [Pa].
    pub young_modulus: f64,
    /// Poisson's ratio [-].
    pub poisson_ratio: f64,
    /// Tensile strength f_t [Pa].
    pub tensile_strength: f64,
    /// Fracture energy G_f [J/m^2].
    pub fracture_energy: f64,
    /// Regularization length l_c [m].
    pub length_scale: f64,
}

impl MaterialGlass {
    /// Annealed glass constants: E = 70 GPa, nu = 0.22, f_t = 45 MPa.
    /// Fracture parameters must still be calibrated for the chosen mesh.
    pub fn annealed(fracture_energy: f64, length_scale: f64) -> Self {
        MaterialGlass {
            young_modulus: 70e9,
            poisson_ratio: 0.22,
            tensile_strength: 45e6,
            fracture_energy,
            length_scale,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.young_modulus > 0.0) {
            errs.push(format!("young_modulus must be > 0, got {}", self.young_modulus));
        }
        if !(0.0..0.5).contains(&self.poisson_ratio) {
            errs.push(format!("poisson_ratio must be in [0, 0.5), got {}", self.poisson_ratio));
        }
        if !(self.tensile_strength > 0.0) {
            errs.push(format!("tensile_strength must be > 0, got {}", self.tensile_strength));
        }
        if !(self.fracture_energy > 0.0) {
            errs.push(format!("fracture_energy must be > 0, got {}", self.fracture_energy));
        }
        if !(self.length_scale > 0.0) {
            errs.push(format!("length_scale must be > 0, got {}", self.length_scale));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    /// Plane-stress Lame parameter lambda* = E nu / (1 - nu^2).
    pub fn lambda_plane_stress(&self) -> f64 {
        self.young_modulus * self.poisson_ratio / (1.0 - self.poisson_ratio * self.poisson_ratio)
    }

    /// Shear modulus mu = E / (2 (1 + nu)).
    pub fn shear_modulus(&self) -> f64 {
        self.young_modulus / (2.0 * (1.0 + self.poisson_ratio))
    }
}

/// Axis-aligned box region in model coordinates.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BoxRegion {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl BoxRegion {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }
}

/// Spatially varying tensile strength: a base value with reduction patches.
///
/// Overlapping patches compose by minimum, so nested refinement regions do
/// not double-reduce.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StrengthField {
    pub base_strength: f64,
    pub patches: Vec<(BoxRegion, f64)>,
}

impl StrengthField {
    pub fn uniform(base_strength: f64) -> Self {
        StrengthField {
            base_strength,
            patches: Vec::new(),
        }
    }

    pub fn effective_strength(&self, x: f64, y: f64) -> f64 {
        let mut factor: f64 = 1.0;
        for (region, f) in &self.patches {
            if region.contains(x, y) {
                factor = factor.min(*f);
            }
        }
        self.base_strength * factor
    }
}

/// Prony series of a generalized Maxwell model: long-term shear modulus plus
/// decaying terms (relaxation_time [s], shear_modulus [Pa]).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PronySeries {
    pub long_term_modulus: f64,
    pub terms: Vec<(f64, f64)>,
}

impl PronySeries {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.long_term_modulus > 0.0) {
            errs.push("long-term modulus must be > 0".into());
        }
        let mut prev = 0.0;
        for &(tau, g) in &self.terms {
            if !(tau > prev) {
                errs.push(format!("relaxation times must be strictly increasing, got {tau}"));
            }
            if !(g > 0.0) {
                errs.push(format!("term modulus must be > 0, got {g}"));
            }
            prev = tau;
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    /// Instantaneous modulus: long-term plus the sum of all term moduli.
    pub fn instantaneous_modulus(&self) -> f64 {
        self.long_term_modulus + self.terms.iter().map(|&(_, g)| g).sum::<f64>()
    }

    /// Reads a two-column CSV `tau_s, G_Pa` (header row required).
    pub fn from_csv(path: &std::path::Path, long_term_modulus: f64) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut terms = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if lineno == 0 {
                // header
                continue;
            }
            let mut cols = line.split(',');
            let tau: f64 = cols
                .next()
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::config(format!("{}: bad tau_s on line {}", path.display(), lineno + 1)))?;
            let g: f64 = cols
                .next()
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::config(format!("{}: bad G_Pa on line {}", path.display(), lineno + 1)))?;
            terms.push((tau, g));
        }
        let series = PronySeries {
            long_term_modulus,
            terms,
        };
        series.validate()?;
        Ok(series)
    }
}

/// Williams-Landel-Ferry time-temperature shift parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WlfShift {
    /// Reference temperature T0 [degC].
    pub reference_temperature: f64,
    pub c1: f64,
    /// C2 [degC].
    pub c2: f64,
}

/// log10 a_T = -C1 (T - T0) / (C2 + T - T0).
pub fn wlf_shift_factor(wlf: &WlfShift, temperature: f64) -> Result<f64> {
    let dt = temperature - wlf.reference_temperature;
    let den = wlf.c2 + dt;
    if den.abs() < 1e-12 {
        return Err(Error::Domain(format!(
            "WLF shift singular at T = {temperature} degC (C2 + T - T0 = 0)"
        )));
    }
    Ok(10f64.powf(-wlf.c1 * dt / den))
}

/// Viscoelastic interlayer: Prony series, WLF shift, and Poisson ratio for
/// the equivalent-elastic reconstruction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InterlayerModel {
    pub prony: PronySeries,
    pub wlf: WlfShift,
    pub poisson_ratio: f64,
}

/// Built-in interlayer types with Prony/WLF constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InterlayerKind {
    Eva,
    Pvb,
}

impl InterlayerModel {
    /// EVALAM 80-120, reference temperature 20 degC, G_inf = 682.18 kPa.
    pub fn eva() -> Self {
        let k = 1e3; // tabulated in kPa
        InterlayerModel {
            prony: PronySeries {
                long_term_modulus: 682.18 * k,
                terms: vec![
                    (1e-9, 6933.9 * k),
                    (1e-8, 3898.6 * k),
                    (1e-7, 2289.2 * k),
                    (1e-6, 1672.7 * k),
                    (1e-5, 761.6 * k),
                    (1e-4, 2401.0 * k),
                    (1e-3, 65.2 * k),
                    (1e-2, 248.0 * k),
                    (1e-1, 575.6 * k),
                    (1e0, 56.3 * k),
                    (1e1, 188.6 * k),
                    (1e2, 445.1 * k),
                    (1e3, 300.1 * k),
                    (1e4, 401.6 * k),
                    (1e5, 348.1 * k),
                    (1e6, 111.6 * k),
                    (1e7, 127.2 * k),
                    (1e8, 137.8 * k),
                    (1e9, 50.5 * k),
                    (1e10, 322.9 * k),
                    (1e11, 100.0 * k),
                    (1e12, 199.9 * k),
                ],
            },
            wlf: WlfShift {
                reference_temperature: 20.0,
                c1: 339.102,
                c2: 1185.816,
            },
            poisson_ratio: 0.49,
        }
    }

    /// TROSIFOL BG R20, reference temperature 20 degC, G_inf = 232.26 kPa.
    pub fn pvb() -> Self {
        let k = 1e3;
        InterlayerModel {
            prony: PronySeries {
                long_term_modulus: 232.26 * k,
                terms: vec![
                    (1e-5, 1_782_124.2 * k),
                    (1e-4, 519_208.7 * k),
                    (1e-3, 546_176.8 * k),
                    (1e-2, 216_893.2 * k),
                    (1e-1, 13_618.3 * k),
                    (1e0, 4988.3 * k),
                    (1e1, 1663.8 * k),
                    (1e2, 587.2 * k),
                    (1e3, 258.0 * k),
                    (1e4, 63.8 * k),
                    (1e5, 168.4 * k),
                ],
            },
            wlf: WlfShift {
                reference_temperature: 20.0,
                c1: 8.635,
                c2: 42.422,
            },
            poisson_ratio: 0.49,
        }
    }

    pub fn builtin(kind: InterlayerKind) -> Self {
        match kind {
            InterlayerKind::Eva => Self::eva(),
            InterlayerKind::Pvb => Self::pvb(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.prony.validate()?;
        if !(0.0..0.5).contains(&self.poisson_ratio) {
            return Err(Error::config(format!(
                "interlayer poisson_ratio must be in [0, 0.5), got {}",
                self.poisson_ratio
            )));
        }
        Ok(())
    }
}

/// Equivalent elastic shear modulus G(t, T) for a total load duration and
/// temperature. The Prony exponentials are evaluated at mid-interval t/2.
pub fn equivalent_shear_modulus(model: &InterlayerModel, duration: f64, temperature: f64) -> Result<f64> {
    assert!(duration >= 0.0, "duration must be nonnegative");
    let a_t = wlf_shift_factor(&model.wlf, temperature)?;
    let mut g = model.prony.long_term_modulus;
    for &(tau, gp) in &model.prony.terms {
        g += gp * (-(duration / 2.0) / (a_t * tau)).exp();
    }
    Ok(g)
}

/// Isotropic reconstruction E = 2 G(t, T) (1 + nu) around the
/// equivalent-elastic interlayer assumption.
pub fn equivalent_elastic_constants(
    model: &InterlayerModel,
    duration: f64,
    temperature: f64,
) -> Result<(f64, f64)> {
    let g = equivalent_shear_modulus(model, duration, temperature)?;
    Ok((2.0 * g * (1.0 + model.poisson_ratio), model.poisson_ratio))
}
