//! Casimir-Polder potential evaluators: static shift, dynamic (contour
//! representation and real-frequency oracle), resonant surface-plasmon
//! contribution in the far and near field, partial dressing after a
//! parameter quench, and decay-time extraction.
//!
//! The dynamic potential for a bare initial state is evaluated as
//!
//!   U_dyn(z, t) = Re e^{i Omega t} [ I1 + I2 theta(2z - t)
//!                                    - I3 theta(t - 2z) + I4 theta(t - 2z) ],
//!
//! with I1, I2 integrals of G(i xi) on the positive imaginary axis, I3 the
//! descending leg using the analytically continued G(-i s), and I4 the
//! surface-plasmon pole sum over the dispersion branch. Partial dressing
//! reuses the same kernel with the oscillation and denominator frequencies
//! split. All quantities are reduced: c = eps0 = 1.

use crate::error::PotentialError;
use crate::greens::{green_perfect_closed, green_ray_damped, green_reflected, DipoleSpec};
use crate::interp::PanelInterpolant;
use crate::materials::SurfaceModel;
use crate::plasmon::{near_field_pole, BranchKind, PlasmonBranch};
use crate::quadrature::{integrate_breakpoints, QuadratureSpec, Transform};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Relative tolerance for imaginary-axis frequency integrals.
const REL_TOL_AXIS: f64 = 1e-9;
/// Relative tolerance for the resonant momentum integral.
const REL_TOL_RESONANT: f64 = 1e-6;
/// Relative tolerance of the cached Green interpolants.
const INTERP_TOL: f64 = 1e-10;
/// Fractional half-width of the light-cone proximity window around t = 2z.
const LIGHT_CONE_WINDOW: f64 = 0.05;
/// Frequency cutoff multiplier for the real-axis oracle.
const ORACLE_CUTOFF_FACTOR: f64 = 50.0;

/// Two-level atom above a planar surface.
#[derive(Debug, Clone, Copy)]
pub struct AtomSurfaceConfig {
    /// Transition angular frequency (reduced; the natural choice is 1).
    pub omega: f64,
    /// Transition dipole; the potential evaluators require isotropic.
    pub dipole: DipoleSpec,
    pub surface: SurfaceModel,
    /// Atom-surface distance in units of c/Omega.
    pub z: f64,
}

impl AtomSurfaceConfig {
    pub fn new(
        omega: f64,
        dipole: DipoleSpec,
        surface: SurfaceModel,
        z: f64,
    ) -> Result<Self, PotentialError> {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(PotentialError::Precondition(format!(
                "transition frequency must be positive, got {omega}"
            )));
        }
        if !(z > 0.0) || !z.is_finite() {
            return Err(PotentialError::Precondition(format!(
                "distance must be positive, got {z}"
            )));
        }
        if !dipole.is_isotropic() {
            return Err(PotentialError::Precondition(
                "potential evaluators require an isotropic dipole".into(),
            ));
        }
        Ok(Self {
            omega,
            dipole,
            surface,
            z,
        })
    }

    /// Signal transit time 2z/c in reduced units.
    pub fn transit_time(&self) -> f64 {
        2.0 * self.z
    }

    /// Energy unit |d|^2 Omega^3 / (4 pi eps0 c^3) for reduced output.
    pub fn energy_unit(&self) -> f64 {
        self.dipole.magnitude_sq * self.omega.powi(3) / (4.0 * PI)
    }
}

/// Sudden parameter change defining a partial-dressing scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuenchSpec {
    /// Transition frequency jump Omega -> new_omega (Stark shift).
    StarkShift { new_omega: f64 },
    /// Transition dipole jump; `cos_angle` is the direction cosine between
    /// the old and new dipole vectors (1 = parallel).
    DipoleChange {
        new_magnitude_sq: f64,
        cos_angle: f64,
    },
}

/// Output scaling of a potential series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// Energies in |d|^2 Omega^3 / (4 pi eps0 c^3).
    Reduced,
    /// Energies divided by |U_stat(z)|.
    RelativeToStatic,
}

/// Dynamic-potential value with the light-cone proximity flag.
#[derive(Debug, Clone, Copy)]
pub struct DynValue {
    pub value: f64,
    pub light_cone_warning: bool,
}

/// Sampled potential components over a time grid.
#[derive(Debug, Clone)]
pub struct PotentialSeries {
    pub time_grid: Vec<f64>,
    pub u_stat: f64,
    pub u_dyn: Vec<f64>,
    pub delta_u_res: Vec<f64>,
    pub delta_u_partial: Option<Vec<f64>>,
    pub total: Vec<f64>,
    pub light_cone: Vec<bool>,
    pub normalization: Normalization,
}

/// Decay time of the resonant transient at one distance.
#[derive(Debug, Clone, Copy)]
pub struct DecayTimeResult {
    pub z: f64,
    pub t_decay_numeric: f64,
    pub t_decay_estimate: f64,
}

fn axis_spec() -> QuadratureSpec {
    QuadratureSpec {
        rel_tol: REL_TOL_AXIS,
        abs_tol: 0.0,
        max_subdivisions: 4096,
        transform: Transform::None,
    }
}

fn resonant_spec() -> QuadratureSpec {
    QuadratureSpec {
        rel_tol: REL_TOL_RESONANT,
        abs_tol: 0.0,
        max_subdivisions: 20_000,
        transform: Transform::None,
    }
}

/// Static Casimir-Polder shift by direct quadrature on the imaginary axis:
/// U_stat = -(1/2 pi) int_0^inf d xi G(i xi) 2 Omega / (Omega^2 + xi^2).
pub fn u_static(cfg: &AtomSurfaceConfig) -> Result<f64, PotentialError> {
    let g_spec = QuadratureSpec::default();
    let omega = cfg.omega;
    let f = |xi: f64| -> Complex64 {
        let g = match green_reflected(
            &cfg.surface,
            &cfg.dipole,
            cfg.z,
            Complex64::new(0.0, xi),
            &g_spec,
        ) {
            Ok(g) => g.value,
            Err(_) => return Complex64::new(f64::NAN, f64::NAN),
        };
        g * (2.0 * omega / (omega * omega + xi * xi) / (2.0 * PI))
    };
    let cuts = axis_cuts(cfg, omega, None);
    let result = integrate_breakpoints(f, &cuts, &axis_spec())?;
    Ok(-result.value.re)
}

/// Breakpoint list for imaginary-axis integrals, covering the atomic,
/// plasmonic, and geometric scales up to the axis cutoff. An exponential
/// weight e^{-rate xi} tightens the cutoff.
fn axis_cuts(cfg: &AtomSurfaceConfig, omega_den: f64, decay_scale: Option<f64>) -> Vec<f64> {
    let mut ximax = 340.0 / cfg.z;
    if let Some(rate) = decay_scale {
        ximax = ximax
            .min(50.0 / rate + 10.0 * omega_den)
            .max(10.0 * omega_den.min(ximax));
    }
    let mut cuts = vec![0.0];
    let mut scales = vec![omega_den, 1.0 / cfg.z];
    if let Ok((wp, gamma)) = cfg.surface.drude_parameters() {
        scales.push(wp);
        scales.push(wp / std::f64::consts::SQRT_2);
        if gamma > 0.0 {
            scales.push(gamma);
        }
    }
    if let Some(rate) = decay_scale {
        scales.push(1.0 / rate);
    }
    for s in scales {
        for f in [0.3, 1.0, 3.0] {
            let v = s * f;
            if v > 0.0 && v < ximax {
                cuts.push(v);
            }
        }
    }
    let mut v = 10.0 / cfg.z;
    while v < ximax {
        cuts.push(v);
        v *= 2.5;
    }
    cuts.push(ximax);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-13 * ximax);
    cuts
}

/// Cached evaluator of G along an axis: closed form for the perfect
/// reflector, Chebyshev panels for a Drude surface.
enum GreenAxis {
    PerfectImag { dipole: DipoleSpec, z: f64 },
    Interp(PanelInterpolant),
}

impl GreenAxis {
    fn eval(&self, x: f64) -> Complex64 {
        match self {
            GreenAxis::PerfectImag { dipole, z } => {
                green_perfect_closed(dipole, *z, Complex64::new(0.0, x)).value
            }
            GreenAxis::Interp(interp) => interp.eval(x),
        }
    }
}

/// Descending contour leg past the transit time. The perfect reflector
/// keeps the exact negative-imaginary-axis form; a Drude surface uses a
/// shallow ray below the dispersion curve, which sweeps every surface-mode
/// pole into the explicit pole sum and leaves a pole-free leg integrand.
enum PostTransitLeg {
    /// Negative imaginary axis with the damped closed-form continuation.
    Axis { dipole: DipoleSpec, z: f64 },
    /// Ray omega = -r e^{-i theta}: cache of A(r) = G(omega) e^{-2 i omega z}.
    Ray {
        sin_t: f64,
        cos_t: f64,
        r_max: f64,
        cache: PanelInterpolant,
    },
}

/// Surface-plasmon pole-sum evaluator (contour term I4 and the standalone
/// resonant contribution). Owns the continuation cache of the branch.
pub struct ResonantEngine {
    cfg: AtomSurfaceConfig,
    branch: PlasmonBranch,
    wsp: f64,
}

impl ResonantEngine {
    pub fn new(cfg: &AtomSurfaceConfig, kind: BranchKind) -> Result<Self, PotentialError> {
        let wsp = cfg
            .surface
            .surface_plasmon_frequency()
            .map_err(PotentialError::Material)?;
        Ok(Self {
            cfg: *cfg,
            branch: PlasmonBranch::new(cfg.surface, kind),
            wsp,
        })
    }

    /// Default branch for the material: lossy when damped, else lossless.
    /// None for the perfect reflector, which has no surface mode.
    pub fn for_surface(cfg: &AtomSurfaceConfig) -> Result<Option<Self>, PotentialError> {
        match cfg.surface.drude_parameters() {
            Err(_) => Ok(None),
            Ok((_, gamma)) => {
                let kind = if gamma > 0.0 {
                    BranchKind::Lossy
                } else {
                    BranchKind::Lossless
                };
                Ok(Some(Self::new(cfg, kind)?))
            }
        }
    }

    /// Pole-sum integral with a free denominator frequency:
    /// (|d|^2 / 12 pi) int dp (p/kappa) e^{-i w t - 2 kappa z}
    /// (2 p^2 - w^2) R_p / (omega_den - w) along the dispersion branch.
    pub fn pole_sum(&self, omega_den: f64, t: f64) -> Result<Complex64, PotentialError> {
        let z = self.cfg.z;
        let kappa_max = 24.0 / z;
        let p_max = (kappa_max * kappa_max + self.wsp * self.wsp).sqrt() * 1.0001;
        self.branch.prewalk(p_max);
        // The integrand vanishes like p^3 R_p toward p = 0; below this floor
        // the overdamped root is numerically fragile and the contribution
        // is far below the working tolerance.
        let p_floor = 1e-5 * p_max.min(self.wsp);

        let p_dense_max = (4.0 * self.wsp).min(p_max);
        let n_dense = ((p_dense_max * (t.abs() + 1.0) / PI).ceil() as usize).clamp(8, 40_000);
        let mut cuts: Vec<f64> = (0..=n_dense)
            .map(|k| p_dense_max * k as f64 / n_dense as f64)
            .collect();
        let mut v = p_dense_max * 1.5;
        while v < p_max {
            cuts.push(v);
            v *= 1.5;
        }
        cuts.push(p_max);
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-13 * p_max);

        let integrand = |p: f64| -> Complex64 {
            if p < p_floor {
                return Complex64::new(0.0, 0.0);
            }
            let mode = match self.branch.mode(p) {
                Ok(m) => m,
                // In the overdamped small-momentum band the pole leaves the
                // physical sheet (Re kappa < 0), so it contributes no
                // residue there; root failures at larger p are real errors.
                Err(_) if p < 0.05 * self.wsp => return Complex64::new(0.0, 0.0),
                Err(_) => return Complex64::new(f64::NAN, f64::NAN),
            };
            if mode.p == 0.0 || mode.omega_bar.norm() == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let w = mode.omega_bar;
            let residue = mode.residue.unwrap_or(Complex64::new(0.0, 0.0));
            let kap = crate::materials::kappa(w, p);
            let phase = (Complex64::new(0.0, -t) * w - 2.0 * kap * z).exp();
            (p / kap) * phase * (2.0 * p * p - w * w) * residue / (omega_den - w)
        };
        let result = integrate_breakpoints(integrand, &cuts, &resonant_spec())?;
        Ok(result.value * self.cfg.dipole.magnitude_sq / (12.0 * PI))
    }

    /// Resonant contribution Delta U_res(z, t) for t past the transit time.
    pub fn delta_u_res(&self, t: f64) -> Result<f64, PotentialError> {
        let transit = self.cfg.transit_time();
        if !(t > transit) {
            return Err(PotentialError::Precondition(format!(
                "resonant contribution requires t > 2z (t = {t}, 2z = {transit})"
            )));
        }
        let i4 = self.pole_sum(self.cfg.omega, t)?;
        let osc = Complex64::new(0.0, self.cfg.omega * t).exp();
        Ok((osc * i4).re)
    }
}

/// Contour evaluator of the dynamic potential; caches G along both
/// imaginary semi-axes and owns the plasmon branch state.
pub struct ContourEngine {
    cfg: AtomSurfaceConfig,
    g_imag: GreenAxis,
    leg: PostTransitLeg,
    resonant: Option<ResonantEngine>,
}

impl ContourEngine {
    pub fn new(cfg: &AtomSurfaceConfig) -> Result<Self, PotentialError> {
        let resonant = ResonantEngine::for_surface(cfg)?;
        let (g_imag, leg) = match cfg.surface {
            SurfaceModel::PerfectReflector => (
                GreenAxis::PerfectImag {
                    dipole: cfg.dipole,
                    z: cfg.z,
                },
                PostTransitLeg::Axis {
                    dipole: cfg.dipole,
                    z: cfg.z,
                },
            ),
            SurfaceModel::Drude { .. } => {
                let g_spec = QuadratureSpec::default();
                let surface = cfg.surface;
                let dipole = cfg.dipole;
                let z = cfg.z;
                let imag = PanelInterpolant::build(
                    move |xi: f64| {
                        green_reflected(
                            &surface,
                            &dipole,
                            z,
                            Complex64::new(0.0, xi.max(0.0)),
                            &g_spec,
                        )
                        .map(|g| g.value)
                        .unwrap_or(Complex64::new(f64::NAN, f64::NAN))
                    },
                    &interp_cuts(cfg, None),
                    INTERP_TOL,
                );

                // Ray steep enough to pass below the lossy dispersion curve
                // everywhere, with margin.
                let mut ratio_max: f64 = 0.0;
                if let Some(engine) = &resonant {
                    let wsp = engine.wsp;
                    let mut p = 50.0 * wsp;
                    while p > 1e-2 * wsp {
                        if let Ok(mode) = engine.branch.mode(p) {
                            let r = mode.omega_bar.norm();
                            if r > 0.0 {
                                ratio_max = ratio_max.max(-mode.omega_bar.im / r);
                            }
                        }
                        p *= 0.6;
                    }
                }
                let sin_t = (3.0 * ratio_max).clamp(0.08, 0.45);
                let cos_t = (1.0 - sin_t * sin_t).sqrt();
                let r_max = 150.0 / (cfg.z * sin_t);
                let phase = Complex64::new(-cos_t, -sin_t);
                let ray_spec = QuadratureSpec {
                    rel_tol: 1e-8,
                    abs_tol: 0.0,
                    max_subdivisions: 4096,
                    transform: Transform::None,
                };
                let step = 0.45 * PI / (cfg.z * cos_t);
                let n_panels = ((r_max / step).ceil() as usize).max(24);
                let mut cuts: Vec<f64> = (0..=n_panels)
                    .map(|k| r_max * k as f64 / n_panels as f64)
                    .collect();
                cuts.dedup();
                let cache = PanelInterpolant::build(
                    move |r: f64| {
                        if r == 0.0 {
                            return green_reflected(
                                &surface,
                                &dipole,
                                z,
                                Complex64::new(0.0, 0.0),
                                &ray_spec,
                            )
                            .map(|g| g.value)
                            .unwrap_or(Complex64::new(f64::NAN, f64::NAN));
                        }
                        green_ray_damped(&surface, &dipole, z, r * phase, &ray_spec)
                            .unwrap_or(Complex64::new(f64::NAN, f64::NAN))
                    },
                    &cuts,
                    1e-7,
                );
                (
                    GreenAxis::Interp(imag),
                    PostTransitLeg::Ray {
                        sin_t,
                        cos_t,
                        r_max,
                        cache,
                    },
                )
            }
        };
        Ok(Self {
            cfg: *cfg,
            g_imag,
            leg,
            resonant,
        })
    }

    pub fn config(&self) -> &AtomSurfaceConfig {
        &self.cfg
    }

    /// Static shift evaluated on the cached axis (series builders need it
    /// at several denominator frequencies).
    pub fn u_static_at(&self, omega_den: f64) -> Result<f64, PotentialError> {
        let f = |xi: f64| {
            self.g_imag.eval(xi) * (2.0 * omega_den / (omega_den * omega_den + xi * xi))
                / (2.0 * PI)
        };
        let mut cuts = axis_cuts(&self.cfg, omega_den, None);
        clamp_cuts(&mut cuts, self.axis_domain_end());
        let result = integrate_breakpoints(f, &cuts, &axis_spec())?;
        Ok(-result.value.re)
    }

    fn axis_domain_end(&self) -> f64 {
        match &self.g_imag {
            GreenAxis::Interp(i) => i.domain().1,
            _ => f64::INFINITY,
        }
    }

    /// Shared contour kernel:
    /// Re e^{i omega_cos t} [I1 + I2 theta(2z-t) + (I4 - I3) theta(t-2z)]
    /// with the denominator frequency omega_den.
    pub fn kernel(
        &self,
        omega_cos: f64,
        omega_den: f64,
        t: f64,
    ) -> Result<DynValue, PotentialError> {
        if !(t >= 0.0) {
            return Err(PotentialError::Precondition(format!(
                "time must be nonnegative, got {t}"
            )));
        }
        let transit = self.cfg.transit_time();
        let light_cone_warning = (t - transit).abs() < LIGHT_CONE_WINDOW * transit;
        let spec = axis_spec();

        let i1 = {
            let f = |xi: f64| {
                self.g_imag.eval(xi) * (-xi * t).exp()
                    / (Complex64::new(omega_den, xi) * 2.0 * PI)
            };
            let mut cuts = axis_cuts(&self.cfg, omega_den, if t > 0.0 { Some(t) } else { None });
            clamp_cuts(&mut cuts, self.axis_domain_end());
            integrate_breakpoints(f, &cuts, &spec)?.value
        };

        let sum = if t < transit {
            let gap = transit - t;
            let f = |xi: f64| {
                self.g_imag.eval(xi) * (xi * t).exp()
                    / (Complex64::new(omega_den, -xi) * 2.0 * PI)
            };
            let mut cuts = axis_cuts(&self.cfg, omega_den, Some(gap));
            clamp_cuts(&mut cuts, self.axis_domain_end());
            let i2 = integrate_breakpoints(f, &cuts, &spec)?.value;
            i1 + i2
        } else {
            let gap = t - transit;
            let mut i4 = match &self.resonant {
                Some(engine) => engine.pole_sum(omega_den, t)?,
                None => Complex64::new(0.0, 0.0),
            };
            if std::env::var("KERNEL_I4_NEG").is_ok() {
                i4 = -i4;
            }
            if std::env::var("KERNEL_I4_ZERO").is_ok() {
                i4 = Complex64::new(0.0, 0.0);
            }
            let leg_value = match &self.leg {
                PostTransitLeg::Axis { dipole, z } => {
                    // - (1/2 pi) int ds A(s) e^{-s (t - 2z)} / (i s + omega_den)
                    let dipole = *dipole;
                    let zz = *z;
                    let f = |s: f64| {
                        crate::greens::green_perfect_cont_damped(&dipole, zz, s)
                            * (-s * gap).exp()
                            / (Complex64::new(omega_den, s) * 2.0 * PI)
                    };
                    let mut cuts = cont_cuts_for(&self.cfg, gap.max(1e-6 * transit));
                    let i3 = integrate_breakpoints(f, &cuts, &spec)?.value;
                    let _ = &mut cuts;
                    -i3
                }
                PostTransitLeg::Ray {
                    sin_t,
                    cos_t,
                    r_max,
                    cache,
                } => {
                    // i_ray = -i e^{i(pi+theta)} (1/2pi) int_0^R dr A(r)
                    //          e^{-i omega(r)(t-2z)} / (omega_den - omega(r))
                    let phase = Complex64::new(-cos_t, -sin_t);
                    let r_need = (55.0 / (sin_t * gap)).min(*r_max);
                    let rate = (gap + transit) * cos_t + 1.0;
                    let n = ((r_need * rate / PI).ceil() as usize).clamp(8, 200_000);
                    let mut cuts: Vec<f64> =
                        (0..=n).map(|k| r_need * k as f64 / n as f64).collect();
                    cuts.dedup();
                    let f = |r: f64| {
                        let omega = r * phase;
                        cache.eval(r)
                            * (Complex64::new(0.0, -gap) * omega).exp()
                            / ((omega_den - omega) * 2.0 * PI)
                    };
                    let leg = integrate_breakpoints(f, &cuts, &spec)?.value;
                    Complex64::new(0.0, 1.0) * (-phase) * leg
                }
            };
            i1 + leg_value + i4
        };

        let osc = Complex64::new(0.0, omega_cos * t).exp();
        Ok(DynValue {
            value: (osc * sum).re,
            light_cone_warning,
        })
    }

    /// Dynamic potential of the bare-dressing scenario.
    pub fn u_dyn(&self, t: f64) -> Result<DynValue, PotentialError> {
        self.kernel(self.cfg.omega, self.cfg.omega, t)
    }

    /// Resonant column value: zero before the transit time, the pole sum
    /// at the given frequencies afterwards.
    pub fn delta_u_res_column(
        &self,
        omega_cos: f64,
        omega_den: f64,
        t: f64,
    ) -> Result<f64, PotentialError> {
        if t <= self.cfg.transit_time() {
            return Ok(0.0);
        }
        match &self.resonant {
            None => Ok(0.0),
            Some(engine) => {
                let i4 = engine.pole_sum(omega_den, t)?;
                Ok((Complex64::new(0.0, omega_cos * t).exp() * i4).re)
            }
        }
    }
}

fn clamp_cuts(cuts: &mut Vec<f64>, max: f64) {
    if !max.is_finite() {
        return;
    }
    cuts.retain(|&c| c < max);
    cuts.push(max);
}

/// Panel cuts for the cached axes. The continued axis needs the sliver
/// around s = gamma, where the bulk response has a pole (the Green function
/// itself stays finite there).
fn interp_cuts(cfg: &AtomSurfaceConfig, gamma_breakpoint: Option<f64>) -> Vec<f64> {
    // The Green function is dead beyond 2 xi z ~ 740 even in the near field,
    // where the algebraic tail has also fallen below the interpolant
    // tolerance by this point.
    let ximax = 340.0 / cfg.z;
    let mut cuts = vec![0.0];
    let mut scales = vec![cfg.omega, 1.0 / cfg.z];
    if let Ok((wp, _)) = cfg.surface.drude_parameters() {
        scales.push(wp);
        scales.push(wp / std::f64::consts::SQRT_2);
    }
    for s in scales {
        for f in [0.3, 1.0, 3.0] {
            let v = s * f;
            if v > 0.0 && v < ximax {
                cuts.push(v);
            }
        }
    }
    if let Some(gamma) = gamma_breakpoint {
        if gamma > 0.0 && gamma < ximax {
            for f in [0.5, 1.0 - 1e-6, 1.0 + 1e-6, 2.0] {
                let v = gamma * f;
                if v > 0.0 && v < ximax {
                    cuts.push(v);
                }
            }
        }
    }
    let mut v = 10.0 / cfg.z;
    while v < ximax {
        cuts.push(v);
        v *= 2.0;
    }
    cuts.push(ximax);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-13 * ximax);
    cuts
}

/// Breakpoints for the descending-leg integral whose net decay rate is `gap`.
fn cont_cuts_for(cfg: &AtomSurfaceConfig, gap: f64) -> Vec<f64> {
    let smax = (50.0 / gap + 10.0 * cfg.omega).min(335.0 / cfg.z);
    let mut cuts = vec![0.0];
    let mut scales = vec![cfg.omega, 1.0 / gap];
    if let Ok((wp, gamma)) = cfg.surface.drude_parameters() {
        scales.push(wp / std::f64::consts::SQRT_2);
        if gamma > 0.0 && gamma < smax {
            for f in [0.5, 1.0 - 1e-6, 1.0 + 1e-6, 2.0] {
                cuts.push(gamma * f);
            }
        }
    }
    for s in scales {
        for f in [0.3, 1.0, 3.0] {
            let v = s * f;
            if v > 0.0 && v < smax {
                cuts.push(v);
            }
        }
    }
    cuts.push(smax);
    cuts.retain(|&c| c <= smax);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-13 * smax);
    cuts
}

/// Dynamic potential by the contour representation. Series builders should
/// construct a `ContourEngine` once and reuse it.
pub fn u_dyn_contour(cfg: &AtomSurfaceConfig, t: f64) -> Result<DynValue, PotentialError> {
    ContourEngine::new(cfg)?.u_dyn(t)
}

/// Resonant surface-plasmon contribution for t > 2z on the chosen branch.
pub fn delta_u_res(
    cfg: &AtomSurfaceConfig,
    t: f64,
    kind: BranchKind,
) -> Result<f64, PotentialError> {
    ResonantEngine::new(cfg, kind)?.delta_u_res(t)
}

/// Near-field asymptote of the resonant contribution:
/// |d|^2 omega_sp / (48 pi z^3) Re e^{i (Omega - w_inf) t} / (Omega - w_inf)
/// with w_inf = -omega_sp - i gamma / 2.
pub fn delta_u_res_near_field(cfg: &AtomSurfaceConfig, t: f64) -> Result<f64, PotentialError> {
    if !(t >= 0.0) {
        return Err(PotentialError::Precondition(format!(
            "time must be nonnegative, got {t}"
        )));
    }
    let pole = near_field_pole(&cfg.surface).map_err(PotentialError::Material)?;
    let wsp = cfg
        .surface
        .surface_plasmon_frequency()
        .map_err(PotentialError::Material)?;
    let amp = cfg.dipole.magnitude_sq * wsp / (48.0 * PI * cfg.z.powi(3));
    let phase = (Complex64::new(0.0, t) * (cfg.omega - pole)).exp();
    Ok(amp * (phase / (cfg.omega - pole)).re)
}

/// Segment-summed oscillatory integral: plain compensated summation up to
/// `omega_max`, then the tail by Abel regularization. The damped tails
/// T(eta) = int_W f e^{-eta (w - W)} are summed at halving eta and
/// Richardson-extrapolated to eta = 0, which stays stable even when the
/// envelope of f grows polynomially (ideal-mirror response).
fn segmented_with_tail<F>(
    f: F,
    rate: f64,
    omega_max: f64,
    seg_spec: &QuadratureSpec,
    feature_breaks: &[f64],
) -> Result<(Complex64, f64), PotentialError>
where
    F: Fn(f64) -> Complex64,
{
    let width = PI / rate;
    let n_main = (omega_max / width).ceil() as usize;
    let w_cut = n_main as f64 * width;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut comp = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    let mut cuts: Vec<f64> = Vec::with_capacity(20);
    for k in 0..n_main {
        let lo = k as f64 * width;
        let hi = lo + width;
        cuts.clear();
        cuts.push(lo);
        for &b in feature_breaks {
            if b > lo && b < hi {
                cuts.push(b);
            }
        }
        cuts.push(hi);
        let seg = integrate_breakpoints(&f, &cuts, seg_spec)?;
        err += seg.error_bound;
        let y = seg.value - comp;
        let tt = sum + y;
        comp = (tt - sum) - y;
        sum = tt;
    }

    let levels = 4usize;
    let mut table: Vec<Complex64> = Vec::with_capacity(levels);
    for k in 0..levels {
        let eta = rate / (4.0 * (1 << k) as f64);
        let g = |w: f64| f(w) * (-eta * (w - w_cut)).exp();
        let mut tail = Complex64::new(0.0, 0.0);
        let mut j = 0usize;
        loop {
            let lo = w_cut + j as f64 * width;
            if (-eta * (lo - w_cut)).exp() < 1e-12 {
                break;
            }
            let seg = integrate_breakpoints(&g, &[lo, lo + width], seg_spec)?;
            err += seg.error_bound * 0.05;
            tail += seg.value;
            j += 1;
        }
        table.push(tail);
    }
    // Richardson in the halving parameter.
    let mut prev_best = table[levels - 2];
    let mut work = table;
    for j in 1..levels {
        let fac = (1 << j) as f64;
        for i in 0..levels - j {
            work[i] = (fac * work[i + 1] - work[i]) / (fac - 1.0);
        }
        if j == levels - 2 {
            prev_best = work[0];
        }
    }
    let tail = work[0];
    let tail_err = (tail - prev_best).norm();
    Ok((sum + tail, err + tail_err))
}

/// Independent real-frequency oracle for the dynamic potential: direct
/// quadrature of
///   U(z,t) = -(1/2 pi) int_0^inf d omega Im G(omega)
///            (2 - 2 cos[(Omega + omega) t]) / (Omega + omega),
/// minus the static shift. Requires a damped Drude model or the perfect
/// reflector (the lossless metal puts a pole on the real momentum axis).
/// This path shares nothing with the contour representation beyond the
/// basic Gauss-Kronrod rule; it samples the Green tensor on the real
/// frequency axis only.
pub struct OracleEngine {
    cfg: AtomSurfaceConfig,
    omega_max: f64,
    band_breaks: Vec<f64>,
    im_g_cache: Option<PanelInterpolant>,
    u_stat: f64,
    s_part: std::cell::Cell<Option<f64>>,
}

impl OracleEngine {
    pub fn new(cfg: &AtomSurfaceConfig) -> Result<Self, PotentialError> {
        let z = cfg.z;
        let omega0 = cfg.omega;
        let mut omega_max = ORACLE_CUTOFF_FACTOR * omega0;
        if let Ok((wp, _)) = cfg.surface.drude_parameters() {
            omega_max = omega_max.max(ORACLE_CUTOFF_FACTOR * wp);
        }

        // Surface-mode band structure of Im G: smooth on the dispersion
        // scale across the band, gamma-wide pile-up at omega_sp.
        let mut band_breaks: Vec<f64> = Vec::new();
        if let Ok((wp, gamma)) = cfg.surface.drude_parameters() {
            let wsp = wp / std::f64::consts::SQRT_2;
            if gamma > 0.0 {
                let step = (wsp / 24.0).max(2.0 * gamma);
                let mut v = step;
                while v < wsp - 10.0 * gamma {
                    band_breaks.push(v);
                    v += step;
                }
                let mut k = -10.0f64;
                while k <= 10.0 {
                    band_breaks.push(wsp + gamma * k);
                    k += 0.5;
                }
                for m in [14.0, 20.0, 28.0, 40.0, 56.0, 80.0] {
                    band_breaks.push(wsp + gamma * m);
                }
                band_breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
            }
        }

        // Real-axis Green cache for the Drude case. The domain covers the
        // Abel-tail support of the slowest segment rate (2z).
        let im_g_cache = match cfg.surface {
            SurfaceModel::PerfectReflector => None,
            SurfaceModel::Drude { .. } => {
                let domain_end = omega_max + 460.0 / z;
                let base = 3.0 / z;
                let mut edges: Vec<f64> = vec![0.0];
                for &b in &band_breaks {
                    if b < domain_end {
                        edges.push(b);
                    }
                }
                let mut v = base;
                while v < domain_end {
                    edges.push(v);
                    v += base;
                }
                edges.push(domain_end);
                edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
                edges.dedup_by(|a, b| (*a - *b).abs() < 1e-12 * domain_end);
                let g_spec = QuadratureSpec {
                    rel_tol: 1e-8,
                    abs_tol: 0.0,
                    max_subdivisions: 4096,
                    transform: Transform::None,
                };
                let surface = cfg.surface;
                let dipole = cfg.dipole;
                let cache = PanelInterpolant::build(
                    move |w: f64| {
                        if w == 0.0 {
                            return Complex64::new(0.0, 0.0);
                        }
                        match green_reflected(
                            &surface,
                            &dipole,
                            z,
                            Complex64::new(w, 0.0),
                            &g_spec,
                        ) {
                            Ok(g) => Complex64::new(g.value.im, 0.0),
                            Err(_) => Complex64::new(f64::NAN, f64::NAN),
                        }
                    },
                    &edges,
                    1e-9,
                );
                Some(cache)
            }
        };

        Ok(Self {
            cfg: *cfg,
            omega_max,
            band_breaks,
            im_g_cache,
            u_stat: u_static(cfg)?,
            s_part: std::cell::Cell::new(None),
        })
    }

    fn im_g(&self, w: f64) -> f64 {
        match &self.im_g_cache {
            Some(cache) => cache.eval(w).re,
            None => {
                green_perfect_closed(&self.cfg.dipole, self.cfg.z, Complex64::new(w, 0.0))
                    .value
                    .im
            }
        }
    }

    fn seg_spec() -> QuadratureSpec {
        QuadratureSpec {
            rel_tol: 1e-7,
            abs_tol: 0.0,
            max_subdivisions: 64,
            transform: Transform::None,
        }
    }

    /// Static-like real-axis part int Im G / (Omega + omega); cached after
    /// the first evaluation (it is time-independent).
    fn static_part(&self) -> Result<f64, PotentialError> {
        if let Some(v) = self.s_part.get() {
            return Ok(v);
        }
        let omega0 = self.cfg.omega;
        let f = |w: f64| Complex64::new(self.im_g(w) / (omega0 + w), 0.0);
        let (s_val, _) = segmented_with_tail(
            f,
            2.0 * self.cfg.z,
            self.omega_max,
            &Self::seg_spec(),
            &self.band_breaks,
        )?;
        self.s_part.set(Some(s_val.re));
        Ok(s_val.re)
    }

    /// Real-axis static shift -(1/pi) int Im G / (Omega + omega); equal to
    /// the imaginary-axis form by contour rotation, and useful as an
    /// independent cross-check of the two routes.
    pub fn u_static_real_axis(&self) -> Result<f64, PotentialError> {
        Ok(-self.static_part()? / PI)
    }

    pub fn u_dyn(&self, t: f64) -> Result<f64, PotentialError> {
        if !(t >= 0.0) {
            return Err(PotentialError::Precondition(format!(
                "time must be nonnegative, got {t}"
            )));
        }
        if t == 0.0 {
            // 2 - 2 cos(0) = 0: the direct integral vanishes identically.
            return Ok(-self.u_stat);
        }
        let omega0 = self.cfg.omega;
        let s_val = self.static_part()?;
        let f_dyn = |w: f64| {
            Complex64::new(0.0, w * t).exp() * (self.im_g(w) / (omega0 + w))
        };
        let (c_val, _) = segmented_with_tail(
            f_dyn,
            2.0 * self.cfg.z + t,
            self.omega_max,
            &Self::seg_spec(),
            &self.band_breaks,
        )?;
        let u_total = -s_val / PI + (Complex64::new(0.0, omega0 * t).exp() * c_val).re / PI;
        Ok(u_total - self.u_stat)
    }
}

/// One-shot oracle evaluation; repeated times should share an `OracleEngine`.
pub fn u_dyn_oracle(cfg: &AtomSurfaceConfig, t: f64) -> Result<f64, PotentialError> {
    OracleEngine::new(cfg)?.u_dyn(t)
}

/// Bare-dressing potential series over a time grid.
pub fn dress_series(
    cfg: &AtomSurfaceConfig,
    time_grid: &[f64],
    normalization: Normalization,
) -> Result<PotentialSeries, PotentialError> {
    let engine = ContourEngine::new(cfg)?;
    let u_stat = u_static(cfg)?;
    let mut u_dyn = Vec::with_capacity(time_grid.len());
    let mut res = Vec::with_capacity(time_grid.len());
    let mut total = Vec::with_capacity(time_grid.len());
    let mut flags = Vec::with_capacity(time_grid.len());
    for &t in time_grid {
        let d = engine.u_dyn(t)?;
        u_dyn.push(d.value);
        flags.push(d.light_cone_warning);
        res.push(engine.delta_u_res_column(cfg.omega, cfg.omega, t)?);
        total.push(u_stat + d.value);
    }
    Ok(finish_series(
        cfg,
        time_grid.to_vec(),
        u_stat,
        u_dyn,
        res,
        None,
        total,
        flags,
        normalization,
    ))
}

/// Partial dressing after a sudden Stark shift Omega -> new_omega:
/// U~ = U~_stat + U~_dyn + Delta U~_p, with U~_dyn = kernel(new, new) and
/// Delta U~_p = -kernel(new, old).
pub fn partial_stark_series(
    cfg: &AtomSurfaceConfig,
    new_omega: f64,
    time_grid: &[f64],
    normalization: Normalization,
) -> Result<PotentialSeries, PotentialError> {
    if !(new_omega > 0.0) {
        return Err(PotentialError::Precondition(format!(
            "new transition frequency must be positive, got {new_omega}"
        )));
    }
    let engine = ContourEngine::new(cfg)?;
    let u_stat = engine.u_static_at(new_omega)?;
    let mut u_dyn = Vec::with_capacity(time_grid.len());
    let mut res = Vec::with_capacity(time_grid.len());
    let mut partial = Vec::with_capacity(time_grid.len());
    let mut total = Vec::with_capacity(time_grid.len());
    let mut flags = Vec::with_capacity(time_grid.len());
    for &t in time_grid {
        let dyn_new = engine.kernel(new_omega, new_omega, t)?;
        let cross = engine.kernel(new_omega, cfg.omega, t)?;
        u_dyn.push(dyn_new.value);
        partial.push(-cross.value);
        flags.push(dyn_new.light_cone_warning);
        res.push(engine.delta_u_res_column(new_omega, new_omega, t)?);
        total.push(u_stat + dyn_new.value - cross.value);
    }
    Ok(finish_series(
        cfg,
        time_grid.to_vec(),
        u_stat,
        u_dyn,
        res,
        Some(partial),
        total,
        flags,
        normalization,
    ))
}

/// Partial dressing after a sudden dipole change. The dynamic term carries
/// the weight d~.(d~ - d) = |d~|^2 - |d~||d| cos(angle); the static shift
/// belongs to the new dipole. A discontinuity at t = 0 is expected.
pub fn partial_dipole_series(
    cfg: &AtomSurfaceConfig,
    new_magnitude_sq: f64,
    cos_angle: f64,
    time_grid: &[f64],
    normalization: Normalization,
) -> Result<PotentialSeries, PotentialError> {
    if !(new_magnitude_sq >= 0.0) {
        return Err(PotentialError::Precondition(
            "new dipole magnitude squared must be nonnegative".into(),
        ));
    }
    if !(-1.0..=1.0).contains(&cos_angle) {
        return Err(PotentialError::Precondition(format!(
            "cos_angle must lie in [-1, 1], got {cos_angle}"
        )));
    }
    let d_sq = cfg.dipole.magnitude_sq;
    let weight = new_magnitude_sq - (new_magnitude_sq * d_sq).sqrt() * cos_angle;
    let scale = weight / d_sq;

    let engine = ContourEngine::new(cfg)?;
    let u_stat = u_static(cfg)? * (new_magnitude_sq / d_sq);
    let mut u_dyn = Vec::with_capacity(time_grid.len());
    let mut res = Vec::with_capacity(time_grid.len());
    let mut total = Vec::with_capacity(time_grid.len());
    let mut flags = Vec::with_capacity(time_grid.len());
    for &t in time_grid {
        if scale == 0.0 {
            u_dyn.push(0.0);
            res.push(0.0);
            flags.push(false);
            total.push(u_stat);
            continue;
        }
        let d = engine.u_dyn(t)?;
        u_dyn.push(scale * d.value);
        flags.push(d.light_cone_warning);
        res.push(scale * engine.delta_u_res_column(cfg.omega, cfg.omega, t)?);
        total.push(u_stat + scale * d.value);
    }
    Ok(finish_series(
        cfg,
        time_grid.to_vec(),
        u_stat,
        u_dyn,
        res,
        None,
        total,
        flags,
        normalization,
    ))
}

/// Series for a quench specification.
pub fn partial_series(
    cfg: &AtomSurfaceConfig,
    quench: &QuenchSpec,
    time_grid: &[f64],
    normalization: Normalization,
) -> Result<PotentialSeries, PotentialError> {
    match *quench {
        QuenchSpec::StarkShift { new_omega } => {
            partial_stark_series(cfg, new_omega, time_grid, normalization)
        }
        QuenchSpec::DipoleChange {
            new_magnitude_sq,
            cos_angle,
        } => partial_dipole_series(cfg, new_magnitude_sq, cos_angle, time_grid, normalization),
    }
}

#[allow(clippy::too_many_arguments)]
fn finish_series(
    cfg: &AtomSurfaceConfig,
    time_grid: Vec<f64>,
    u_stat: f64,
    u_dyn: Vec<f64>,
    res: Vec<f64>,
    partial: Option<Vec<f64>>,
    total: Vec<f64>,
    flags: Vec<bool>,
    normalization: Normalization,
) -> PotentialSeries {
    let scale = match normalization {
        Normalization::Reduced => 1.0 / cfg.energy_unit(),
        Normalization::RelativeToStatic => 1.0 / u_stat.abs(),
    };
    PotentialSeries {
        time_grid,
        u_stat: u_stat * scale,
        u_dyn: u_dyn.into_iter().map(|v| v * scale).collect(),
        delta_u_res: res.into_iter().map(|v| v * scale).collect(),
        delta_u_partial: partial.map(|p| p.into_iter().map(|v| v * scale).collect()),
        total: total.into_iter().map(|v| v * scale).collect(),
        light_cone: flags,
        normalization,
    }
}

/// Local maxima of |values| as (time, magnitude) pairs.
pub fn envelope_peaks(times: &[f64], values: &[f64]) -> Vec<(f64, f64)> {
    let mut peaks = Vec::new();
    for i in 1..values.len().saturating_sub(1) {
        let a = values[i - 1].abs();
        let b = values[i].abs();
        let c = values[i + 1].abs();
        if b >= a && b > c && b > 0.0 {
            peaks.push((times[i], b));
        }
    }
    peaks
}

/// Least-squares slope of ln v against ln t over [t0, t1]; a clean power
/// law t^alpha returns alpha.
pub fn fit_power_law(peaks: &[(f64, f64)], t0: f64, t1: f64) -> Option<f64> {
    fit_line(
        peaks
            .iter()
            .filter(|(t, v)| *t >= t0 && *t <= t1 && *v > 0.0)
            .map(|(t, v)| (t.ln(), v.ln())),
    )
}

/// Least-squares slope of ln v against t over [t0, t1]; an exponential
/// envelope e^{-r t} returns -r.
pub fn fit_exponential_rate(peaks: &[(f64, f64)], t0: f64, t1: f64) -> Option<f64> {
    fit_line(
        peaks
            .iter()
            .filter(|(t, v)| *t >= t0 && *t <= t1 && *v > 0.0)
            .map(|(t, v)| (*t, v.ln())),
    )
}

fn fit_line<I: Iterator<Item = (f64, f64)>>(points: I) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points.collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

/// Dominant angular frequency of a sampled oscillation from its
/// interpolated zero crossings.
pub fn zero_crossing_frequency(times: &[f64], values: &[f64]) -> Option<f64> {
    if times.len() < 3 {
        return None;
    }
    let mut crossings = 0usize;
    let mut first: Option<f64> = None;
    let mut last: Option<f64> = None;
    for i in 1..values.len() {
        if values[i - 1] == 0.0 {
            continue;
        }
        if values[i - 1].signum() != values[i].signum() {
            let frac = values[i - 1] / (values[i - 1] - values[i]);
            let tc = times[i - 1] + frac * (times[i] - times[i - 1]);
            if first.is_none() {
                first = Some(tc);
            }
            last = Some(tc);
            crossings += 1;
        }
    }
    match (first, last) {
        (Some(a), Some(b)) if crossings >= 2 && b > a => {
            Some(PI * (crossings - 1) as f64 / (b - a))
        }
        _ => None,
    }
}

/// 1/e decay time of the resonant transient envelope at the configured
/// distance, with the analytic estimate tau pi sqrt(z / omega_sp).
///
/// The scan must start past the transit time and cover the decay; the
/// envelope is read from local maxima of |Delta U_res| and interpolated
/// log-linearly between peaks.
pub fn decay_time(
    cfg: &AtomSurfaceConfig,
    scan: &[f64],
    tau: f64,
) -> Result<DecayTimeResult, PotentialError> {
    let engine = ResonantEngine::for_surface(cfg)?.ok_or_else(|| {
        PotentialError::Precondition("decay time requires a Drude surface".into())
    })?;
    let transit = cfg.transit_time();
    let times: Vec<f64> = scan.iter().copied().filter(|&t| t > transit).collect();
    if times.len() < 16 {
        return Err(PotentialError::Precondition(
            "scan must contain at least 16 points past the transit time".into(),
        ));
    }
    let mut values = Vec::with_capacity(times.len());
    for &t in &times {
        values.push(engine.delta_u_res(t)?);
    }
    let peaks = envelope_peaks(&times, &values);
    if peaks.len() < 4 {
        return Err(PotentialError::EnvelopeFit(
            "fewer than four envelope peaks in the scan window".into(),
        ));
    }
    let (i_max, &(t_peak, e_max)) = peaks
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).unwrap())
        .unwrap();
    let threshold = e_max / std::f64::consts::E;
    let mut running = e_max;
    let mut crossing: Option<f64> = None;
    for w in peaks[i_max..].windows(2) {
        let (t_a, v_a) = w[0];
        let (t_b, v_b) = w[1];
        if v_b > 1.2 * running {
            return Err(PotentialError::EnvelopeFit(format!(
                "envelope is non-monotone near t = {t_b}"
            )));
        }
        running = running.min(v_b);
        if v_a >= threshold && v_b < threshold {
            let frac = (v_a.ln() - threshold.ln()) / (v_a.ln() - v_b.ln());
            crossing = Some(t_a + frac * (t_b - t_a));
            break;
        }
    }
    let t_cross = crossing.ok_or_else(|| {
        PotentialError::EnvelopeFit("scan too short: envelope never decays to 1/e".into())
    })?;
    let wsp = cfg
        .surface
        .surface_plasmon_frequency()
        .map_err(PotentialError::Material)?;
    Ok(DecayTimeResult {
        z: cfg.z,
        t_decay_numeric: t_cross - t_peak,
        t_decay_estimate: tau * PI * (cfg.z / wsp).sqrt(),
    })
}
