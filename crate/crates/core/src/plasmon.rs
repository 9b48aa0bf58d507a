//! Surface-plasmon dispersion relation: lossless closed form, lossy complex
//! root-finding by continuation, decay constants, and p-polarization
//! residues with analytic frequency derivatives.

use crate::error::{MaterialError, RootError};
use crate::materials::{epsilon, kappa, kappa_medium, SurfaceModel};
use crate::quadrature::refine_root;
use num_complex::Complex64;

/// Residual tolerance for the lossy dispersion root, in reduced units.
const ROOT_TOL: f64 = 1e-10;
const MAX_ROOT_ITER: usize = 100;

/// One point of the surface-plasmon branch.
#[derive(Debug, Clone, Copy)]
pub struct PlasmonMode {
    /// In-plane wavevector magnitude.
    pub p: f64,
    /// Complex mode frequency on the lower-half-plane branch (Re < 0).
    pub omega_bar: Complex64,
    /// Real decay constant of the mode outside the material, Re kappa(omega_bar, p).
    pub kappa_bar: f64,
    /// p-polarization residue, when computed.
    pub residue: Option<Complex64>,
}

/// Dispersion denominator D(omega) = eps(omega) kappa + kappa_m whose zeros
/// are the surface-plasmon poles of r_p.
fn dispersion_residual(
    model: &SurfaceModel,
    omega: Complex64,
    p: f64,
) -> Result<Complex64, MaterialError> {
    let eps = epsilon(model, omega)?;
    Ok(eps * kappa(omega, p) + kappa_medium(model, omega, p)?)
}

/// Analytic omega-derivative of the dispersion denominator:
/// d eps/d omega = omega_p^2 (2 omega + i gamma) / (omega^2 (omega + i gamma)^2),
/// d kappa/d omega = -omega / kappa,
/// d kappa_m/d omega = -(2 omega eps + omega^2 d eps)/(2 kappa_m).
fn dispersion_derivative(
    model: &SurfaceModel,
    omega: Complex64,
    p: f64,
) -> Result<Complex64, MaterialError> {
    let (wp, gamma) = model.drude_parameters()?;
    let ig = Complex64::new(0.0, gamma);
    let eps = epsilon(model, omega)?;
    let deps = wp * wp * (2.0 * omega + ig) / (omega * omega * (omega + ig) * (omega + ig));
    let k = kappa(omega, p);
    let km = kappa_medium(model, omega, p)?;
    let dk = -omega / k;
    let dkm = -(2.0 * omega * eps + omega * omega * deps) / (2.0 * km);
    Ok(deps * k + eps * dk + dkm)
}

/// Lossless branch of the dispersion relation inside the post-transit
/// contour (with omega_sp = omega_p / sqrt(2)):
/// omega_bar(p) = -sqrt(omega_sp^2 + p^2 - sqrt(omega_sp^4 + p^4)) - i0+,
/// kappa_bar(p) = sqrt(sqrt(omega_sp^4 + p^4) - omega_sp^2).
pub fn dispersion_lossless(model: &SurfaceModel, p: f64) -> Result<PlasmonMode, MaterialError> {
    let wsp = model.surface_plasmon_frequency()?;
    if !(p >= 0.0) {
        return Err(MaterialError::InvalidParameters(format!(
            "momentum must be nonnegative, got {p}"
        )));
    }
    let wsp2 = wsp * wsp;
    let p2 = p * p;
    let root = (wsp2 * wsp2 + p2 * p2).sqrt();
    // Rationalized forms avoid the cancellation at small momenta:
    // root - wsp^2 = p^4 / (root + wsp^2).
    let delta = p2 * p2 / (root + wsp2);
    let magnitude = (p2 - delta).max(0.0).sqrt();
    let kappa_bar = delta.sqrt();
    Ok(PlasmonMode {
        p,
        omega_bar: Complex64::new(-magnitude, 0.0),
        kappa_bar,
        residue: None,
    })
}

/// Lossy branch by Newton refinement of eps kappa + kappa_m = 0, seeded from
/// the lossless closed form (or a caller-provided seed from a continuation
/// scan). The root must stay in the quadrant Re < 0, -gamma/2 - tol <= Im <= 0.
pub fn dispersion_lossy(
    model: &SurfaceModel,
    p: f64,
    seed: Option<Complex64>,
) -> Result<PlasmonMode, RootError> {
    let (_, gamma) = model
        .drude_parameters()
        .map_err(|_| RootError::NoConvergence {
            last: Complex64::new(0.0, 0.0),
            residual: f64::INFINITY,
        })?;
    let lossless = dispersion_lossless(model, p).map_err(|_| RootError::NoConvergence {
        last: Complex64::new(0.0, 0.0),
        residual: f64::INFINITY,
    })?;
    if p == 0.0 {
        // The branch terminates at the origin.
        return Ok(PlasmonMode {
            p,
            omega_bar: Complex64::new(0.0, 0.0),
            kappa_bar: 0.0,
            residue: None,
        });
    }
    let start = seed.unwrap_or(lossless.omega_bar - Complex64::new(0.0, 0.5 * gamma.min(1e-3)));

    let f = |w: Complex64| {
        dispersion_residual(model, w, p).unwrap_or(Complex64::new(f64::NAN, f64::NAN))
    };
    let df = |w: Complex64| {
        dispersion_derivative(model, w, p).unwrap_or(Complex64::new(f64::NAN, f64::NAN))
    };
    let root = refine_root(f, Some(df), start, ROOT_TOL, MAX_ROOT_ITER)?;

    let quadrant_tol = 1e-6 * root.norm().max(1.0);
    if root.re > quadrant_tol || root.im > quadrant_tol || root.im < -0.5 * gamma - quadrant_tol {
        return Err(RootError::QuadrantEscape { root });
    }
    let kappa_bar = kappa(root, p).re;
    Ok(PlasmonMode {
        p,
        omega_bar: root,
        kappa_bar,
        residue: None,
    })
}

/// Residue of r_p at a converged dispersion root:
/// R_p = (eps kappa - kappa_m) / (d/d omega [eps kappa + kappa_m]),
/// using analytic derivatives throughout.
pub fn residue_rp(
    model: &SurfaceModel,
    omega: Complex64,
    p: f64,
) -> Result<Complex64, RootError> {
    let numerator = {
        let eps = epsilon(model, omega).map_err(material_as_root(omega))?;
        let k = kappa(omega, p);
        let km = kappa_medium(model, omega, p).map_err(material_as_root(omega))?;
        eps * k - km
    };
    let derivative = dispersion_derivative(model, omega, p).map_err(material_as_root(omega))?;
    if derivative.norm() < 1e-12 * numerator.norm() {
        return Err(RootError::DegeneratePole {
            magnitude: derivative.norm(),
        });
    }
    Ok(numerator / derivative)
}

fn material_as_root(omega: Complex64) -> impl Fn(MaterialError) -> RootError {
    move |_| RootError::NoConvergence {
        last: omega,
        residual: f64::INFINITY,
    }
}

/// Near-field (large-p) pole of the reflection coefficient:
/// omega_bar(inf) = -omega_sp - i gamma / 2.
pub fn near_field_pole(model: &SurfaceModel) -> Result<Complex64, MaterialError> {
    let wsp = model.surface_plasmon_frequency()?;
    let (_, gamma) = model.drude_parameters()?;
    Ok(Complex64::new(-wsp, -0.5 * gamma))
}

/// Dispersion branch selector for resonant-contribution evaluators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchKind {
    Lossless,
    Lossy,
}

/// Continuation scan state for the lossy branch: walks p from large to small
/// values reusing the previous root as seed, which avoids branch hopping
/// near the light cone. One scanner per worker; not shared.
#[derive(Debug, Clone)]
pub struct PlasmonBranch {
    model: SurfaceModel,
    kind: BranchKind,
    cache: std::cell::RefCell<Vec<(f64, Complex64)>>,
}

impl PlasmonBranch {
    pub fn new(model: SurfaceModel, kind: BranchKind) -> Self {
        Self {
            model,
            kind,
            cache: std::cell::RefCell::new(Vec::new()),
        }
    }

    pub fn kind(&self) -> BranchKind {
        self.kind
    }

    /// Populate the continuation cache by walking from large to small
    /// momenta, so later root refinements start from a neighboring root.
    /// This keeps the branch from hopping near the light cone and in the
    /// overdamped small-p region. Idempotent once seeded.
    pub fn prewalk(&self, p_max: f64) {
        if self.kind != BranchKind::Lossy || self.cache.borrow().len() >= 8 {
            return;
        }
        let p_min = p_max * 1e-8;
        let steps = 160usize;
        let ratio = (p_min / p_max).powf(1.0 / steps as f64);
        let mut p = p_max;
        let mut seed: Option<Complex64> = None;
        for _ in 0..=steps {
            match dispersion_lossy(&self.model, p, seed) {
                Ok(mode) => {
                    seed = Some(mode.omega_bar);
                    let mut cache = self.cache.borrow_mut();
                    match cache.binary_search_by(|probe| probe.0.partial_cmp(&p).unwrap()) {
                        Ok(i) => cache[i] = (p, mode.omega_bar),
                        Err(i) => cache.insert(i, (p, mode.omega_bar)),
                    }
                }
                Err(_) => {
                    seed = None;
                }
            }
            p *= ratio;
        }
    }

    /// Mode at momentum p, with the residue populated.
    pub fn mode(&self, p: f64) -> Result<PlasmonMode, RootError> {
        let mut mode = match self.kind {
            BranchKind::Lossless => {
                dispersion_lossless(&self.model, p).map_err(|_| RootError::NoConvergence {
                    last: Complex64::new(0.0, 0.0),
                    residual: f64::INFINITY,
                })?
            }
            BranchKind::Lossy => {
                let seed = self.nearest_seed(p);
                let m = dispersion_lossy(&self.model, p, seed)?;
                let mut cache = self.cache.borrow_mut();
                match cache.binary_search_by(|probe| probe.0.partial_cmp(&p).unwrap()) {
                    Ok(i) => cache[i] = (p, m.omega_bar),
                    Err(i) => cache.insert(i, (p, m.omega_bar)),
                }
                m
            }
        };
        if p > 0.0 {
            mode.residue = Some(residue_rp(&self.model, mode.omega_bar, p)?);
        }
        Ok(mode)
    }

    fn nearest_seed(&self, p: f64) -> Option<Complex64> {
        let cache = self.cache.borrow();
        if cache.is_empty() {
            return None;
        }
        let idx = match cache.binary_search_by(|probe| probe.0.partial_cmp(&p).unwrap()) {
            Ok(i) => i,
            Err(i) => i.min(cache.len() - 1),
        };
        let mut best = cache[idx];
        if idx > 0 {
            let other = cache[idx - 1];
            if (other.0 - p).abs() < (best.0 - p).abs() {
                best = other;
            }
        }
        // Seeds only help when reasonably close in momentum.
        if (best.0 - p).abs() < 0.5 * (p.abs() + best.0.abs()) {
            Some(best.1)
        } else {
            None
        }
    }
}
