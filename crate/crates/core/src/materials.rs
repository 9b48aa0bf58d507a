//! Dielectric models, propagation constants, and Fresnel reflection
//! coefficients with fixed branch conventions.
//!
//! Everything works in reduced units (c = 1, eps0 = 1, frequencies in units
//! of the atomic transition). The retarded branch conventions are:
//! Re kappa >= 0 always, and for real omega the sign of Im kappa follows the
//! limit from the upper half-plane (Im kappa <= 0 for omega > 0).

use crate::error::MaterialError;
use num_complex::Complex64;

/// Ratio of the relative pole-proximity tolerance in `reflection`.
const POLE_PROXIMITY_RATIO: f64 = 1e-12;

/// Optical response of the half-space below the atom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SurfaceModel {
    /// Drude metal with plasma frequency and damping rate (both rad, reduced).
    Drude {
        plasma_frequency: f64,
        damping_rate: f64,
    },
    /// Ideal mirror: r_p = 1, r_s = -1 at every frequency and momentum.
    PerfectReflector,
}

/// Polarization label for the Fresnel coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarization {
    S,
    P,
}

impl SurfaceModel {
    /// Drude model with validation: omega_p > 0, gamma >= 0.
    pub fn drude(plasma_frequency: f64, damping_rate: f64) -> Result<Self, MaterialError> {
        if !(plasma_frequency > 0.0) || !plasma_frequency.is_finite() {
            return Err(MaterialError::InvalidParameters(format!(
                "plasma frequency must be positive, got {plasma_frequency}"
            )));
        }
        if !(damping_rate >= 0.0) || !damping_rate.is_finite() {
            return Err(MaterialError::InvalidParameters(format!(
                "damping rate must be nonnegative, got {damping_rate}"
            )));
        }
        Ok(SurfaceModel::Drude {
            plasma_frequency,
            damping_rate,
        })
    }

    pub fn perfect_reflector() -> Self {
        SurfaceModel::PerfectReflector
    }

    pub fn is_drude(&self) -> bool {
        matches!(self, SurfaceModel::Drude { .. })
    }

    /// Surface-plasmon asymptote omega_sp = omega_p / sqrt(2).
    pub fn surface_plasmon_frequency(&self) -> Result<f64, MaterialError> {
        match self {
            SurfaceModel::Drude {
                plasma_frequency, ..
            } => Ok(plasma_frequency / std::f64::consts::SQRT_2),
            SurfaceModel::PerfectReflector => Err(MaterialError::Unsupported),
        }
    }

    pub fn drude_parameters(&self) -> Result<(f64, f64), MaterialError> {
        match self {
            SurfaceModel::Drude {
                plasma_frequency,
                damping_rate,
            } => Ok((*plasma_frequency, *damping_rate)),
            SurfaceModel::PerfectReflector => Err(MaterialError::Unsupported),
        }
    }
}

/// Drude dielectric function eps(omega) = 1 - omega_p^2 / (omega (omega + i gamma)).
pub fn epsilon(model: &SurfaceModel, omega: Complex64) -> Result<Complex64, MaterialError> {
    let (wp, gamma) = model.drude_parameters()?;
    if omega.norm() == 0.0 {
        return Err(MaterialError::DcPole);
    }
    let denom = omega * (omega + Complex64::new(0.0, gamma));
    Ok(Complex64::new(1.0, 0.0) - wp * wp / denom)
}

/// Dielectric function on the imaginary axis omega = i xi, where it is real:
/// eps(i xi) = 1 + omega_p^2 / (xi (xi + gamma)). Valid for xi != 0, -gamma.
pub fn epsilon_imag_axis(model: &SurfaceModel, xi: f64) -> Result<f64, MaterialError> {
    let (wp, gamma) = model.drude_parameters()?;
    let denom = xi * (xi + gamma);
    if denom == 0.0 {
        return Err(MaterialError::DcPole);
    }
    Ok(1.0 + wp * wp / denom)
}

/// Vacuum propagation constant kappa = sqrt(p^2 - omega^2) on the retarded
/// branch: Re kappa >= 0, and Im kappa <= 0 for real omega > 0.
pub fn kappa(omega: Complex64, p: f64) -> Complex64 {
    if omega.im == 0.0 {
        let rr = p * p - omega.re * omega.re;
        if rr >= 0.0 {
            Complex64::new(rr.sqrt(), 0.0)
        } else {
            // Propagating sector: the upper-half-plane limit fixes the sign.
            Complex64::new(0.0, -omega.re.signum() * (-rr).sqrt())
        }
    } else {
        let mut k = (Complex64::new(p * p, 0.0) - omega * omega).sqrt();
        if k.re < 0.0 {
            k = -k;
        }
        k
    }
}

/// Propagation constant inside the bulk, kappa_m = sqrt(p^2 - eps omega^2),
/// on the Re >= 0 branch, continuous along the caller's contours.
///
/// On the imaginary axis the radicand is real; a negative radicand (eddy
/// window) maps to +i sqrt(|.|), the principal continuation.
pub fn kappa_medium(
    model: &SurfaceModel,
    omega: Complex64,
    p: f64,
) -> Result<Complex64, MaterialError> {
    let (wp, gamma) = model.drude_parameters()?;
    if omega.re == 0.0 && omega.im != 0.0 {
        let xi = omega.im;
        let eps = epsilon_imag_axis(model, xi)?;
        let rad = p * p + eps * xi * xi;
        if rad >= 0.0 {
            return Ok(Complex64::new(rad.sqrt(), 0.0));
        }
        return Ok(Complex64::new(0.0, (-rad).sqrt()));
    }
    let eps = epsilon(model, omega)?;
    let rad = Complex64::new(p * p, 0.0) - eps * omega * omega;
    if omega.im == 0.0 && gamma == 0.0 {
        // Lossless metal on the real axis: real radicand, retarded sign rule.
        let rr = rad.re;
        if rr >= 0.0 {
            return Ok(Complex64::new(rr.sqrt(), 0.0));
        }
        return Ok(Complex64::new(0.0, -omega.re.signum() * (-rr).sqrt()));
    }
    let _ = wp;
    let mut k = rad.sqrt();
    if k.re < 0.0 {
        k = -k;
    }
    Ok(k)
}

/// Fresnel amplitude for the given polarization:
/// r_s = (kappa - kappa_m)/(kappa + kappa_m),
/// r_p = (eps kappa - kappa_m)/(eps kappa + kappa_m).
///
/// The perfect reflector returns the constants -1 and +1. Evaluation within
/// the pole-proximity tolerance of a denominator zero is an error; callers
/// on the dispersion branch must use the residue path instead.
pub fn reflection(
    model: &SurfaceModel,
    omega: Complex64,
    p: f64,
    pol: Polarization,
) -> Result<Complex64, MaterialError> {
    match model {
        SurfaceModel::PerfectReflector => Ok(match pol {
            Polarization::S => Complex64::new(-1.0, 0.0),
            Polarization::P => Complex64::new(1.0, 0.0),
        }),
        SurfaceModel::Drude { .. } => {
            let (rs, rp) = fresnel_pair(model, omega, p)?;
            Ok(match pol {
                Polarization::S => rs,
                Polarization::P => rp,
            })
        }
    }
}

/// eps(omega) - 1 without the subtractive loss of the one-based form:
/// -omega_p^2 / (omega (omega + i gamma)).
pub fn epsilon_minus_one(
    model: &SurfaceModel,
    omega: Complex64,
) -> Result<Complex64, MaterialError> {
    let (wp, gamma) = model.drude_parameters()?;
    if omega.norm() == 0.0 {
        return Err(MaterialError::DcPole);
    }
    if omega.re == 0.0 {
        let xi = omega.im;
        let denom = xi * (xi + gamma);
        if denom == 0.0 {
            return Err(MaterialError::DcPole);
        }
        return Ok(Complex64::new(wp * wp / denom, 0.0));
    }
    Ok(-wp * wp / (omega * (omega + Complex64::new(0.0, gamma))))
}

/// Both Fresnel amplitudes (r_s, r_p) in one pass, sharing the propagation
/// constants; the hot path of the Weyl quadratures.
///
/// In the transparent regime |eps - 1| << 1 the plain numerators
/// kappa - kappa_m and eps kappa - kappa_m cancel catastrophically; there
/// the rationalized forms
///   r_s = (eps - 1) omega^2 / (kappa + kappa_m)^2,
///   r_p = (eps - 1)[p^2 (eps + 1) - eps omega^2] / (eps kappa + kappa_m)^2
/// apply (no surface-mode pole can exist with eps near unity). Near the
/// metallic regime the direct forms keep the pole structure exact.
pub fn fresnel_pair(
    model: &SurfaceModel,
    omega: Complex64,
    p: f64,
) -> Result<(Complex64, Complex64), MaterialError> {
    match model {
        SurfaceModel::PerfectReflector => {
            Ok((Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)))
        }
        SurfaceModel::Drude { .. } => {
            let k = kappa(omega, p);
            let km = kappa_medium(model, omega, p)?;
            let em1 = epsilon_minus_one(model, omega)?;
            let eps = em1 + 1.0;
            let rs_den = k + km;
            let rp_den = eps * k + km;
            if em1.norm() < 1e-3 {
                let omega_sq = omega * omega;
                let rs = em1 * omega_sq / (rs_den * rs_den);
                let rp = em1 * (p * p * (eps + 1.0) - eps * omega_sq) / (rp_den * rp_den);
                return Ok((rs, rp));
            }
            let rp_num = eps * k - km;
            if rp_den.norm() < POLE_PROXIMITY_RATIO * rp_num.norm() {
                return Err(MaterialError::PoleProximity { omega, p });
            }
            Ok(((k - km) / rs_den, rp_num / rp_den))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Gold Drude parameters in units of the rubidium D2 transition
    /// (Omega = 0.18 omega_p, 1/gamma = 19 fs at h-bar omega_p = 8.9 eV).
    pub(crate) fn gold() -> SurfaceModel {
        let wp = 1.0 / 0.18;
        SurfaceModel::drude(wp, 3.892442e-3 * wp).unwrap()
    }

    fn gold_lossless() -> SurfaceModel {
        SurfaceModel::drude(1.0 / 0.18, 0.0).unwrap()
    }

    #[test]
    fn drude_rejects_bad_parameters() {
        assert!(SurfaceModel::drude(0.0, 0.1).is_err());
        assert!(SurfaceModel::drude(-1.0, 0.1).is_err());
        assert!(SurfaceModel::drude(1.0, -0.1).is_err());
        assert!(SurfaceModel::drude(1.0, 0.0).is_ok());
    }

    #[test]
    fn epsilon_vanishes_at_plasma_frequency_when_lossless() {
        let m = gold_lossless();
        let (wp, _) = m.drude_parameters().unwrap();
        let e = epsilon(&m, Complex64::new(wp, 0.0)).unwrap();
        assert!(e.norm() < 1e-14);
    }

    #[test]
    fn epsilon_on_imaginary_axis_at_xi_equal_wp() {
        let m = gold();
        let (wp, gamma) = m.drude_parameters().unwrap();
        let e = epsilon(&m, Complex64::new(0.0, wp)).unwrap();
        assert_relative_eq!(e.re, 1.0 + wp / (wp + gamma), max_relative = 1e-14);
        assert_eq!(e.im, 0.0);
        let er = epsilon_imag_axis(&m, wp).unwrap();
        assert_relative_eq!(er, e.re, max_relative = 1e-14);
    }

    #[test]
    fn epsilon_metallic_below_plasma_frequency() {
        // Real omega = 0.18 omega_p (the atomic line) sits deep in the
        // metallic regime: Re eps < 0.
        let m = gold();
        let e = epsilon(&m, Complex64::new(1.0, 0.0)).unwrap();
        assert!(e.re < 0.0, "expected metallic response, got {e}");
        assert!(e.im > 0.0);
    }

    #[test]
    fn epsilon_error_paths() {
        let m = gold();
        assert!(matches!(
            epsilon(&m, Complex64::new(0.0, 0.0)),
            Err(MaterialError::DcPole)
        ));
        assert!(matches!(
            epsilon(&SurfaceModel::perfect_reflector(), Complex64::new(1.0, 0.0)),
            Err(MaterialError::Unsupported)
        ));
    }

    #[test]
    fn kappa_static_and_axis_values() {
        assert_eq!(kappa(Complex64::new(0.0, 0.0), 2.5), Complex64::new(2.5, 0.0));
        let k = kappa(Complex64::new(0.0, 3.0), 0.0);
        assert_relative_eq!(k.re, 3.0, max_relative = 1e-15);
        assert_eq!(k.im, 0.0);
    }

    #[test]
    fn kappa_propagating_branch_has_negative_imaginary_part() {
        let omega = Complex64::new(2.0, 0.0);
        let p = 1.0;
        let k = kappa(omega, p);
        assert_relative_eq!(k.im, -(3.0f64).sqrt(), max_relative = 1e-15);
        assert_eq!(k.re, 0.0);
        // e^{-2 kappa z} then has unit modulus: a propagating wave.
        let z = 7.3;
        assert_relative_eq!((-2.0 * k * z).exp().norm(), 1.0, max_relative = 1e-12);
        // Schwarz partner at -omega.
        let k_neg = kappa(-omega, p);
        assert_eq!(k_neg, k.conj());
    }

    #[test]
    fn kappa_medium_reduces_to_vacuum_for_weak_plasma() {
        let m = SurfaceModel::drude(1e-7, 0.0).unwrap();
        for (w, p) in [(0.7, 0.3), (2.0, 1.5), (0.3, 2.0)] {
            let omega = Complex64::new(w, 0.0);
            let km = kappa_medium(&m, omega, p).unwrap();
            let k = kappa(omega, p);
            assert!((km - k).norm() <= 1e-10 * k.norm().max(1.0));
        }
    }

    #[test]
    fn kappa_medium_real_positive_on_imaginary_axis() {
        let m = gold();
        for xi in [0.1, 1.0, 10.0] {
            for p in [0.0, 0.5, 4.0] {
                let km = kappa_medium(&m, Complex64::new(0.0, xi), p).unwrap();
                assert!(km.re > 0.0);
                assert_eq!(km.im, 0.0);
            }
        }
    }

    #[test]
    fn perfect_reflector_constants() {
        let m = SurfaceModel::perfect_reflector();
        for (w, p) in [(0.5, 0.1), (3.0, 2.0)] {
            let omega = Complex64::new(w, 0.0);
            assert_eq!(
                reflection(&m, omega, p, Polarization::P).unwrap(),
                Complex64::new(1.0, 0.0)
            );
            assert_eq!(
                reflection(&m, omega, p, Polarization::S).unwrap(),
                Complex64::new(-1.0, 0.0)
            );
        }
    }

    #[test]
    fn large_momentum_limits_of_fresnel_coefficients() {
        let m = gold();
        let omega = Complex64::new(0.7, 0.0);
        let eps = epsilon(&m, omega).unwrap();
        let quasi_static = (eps - 1.0) / (eps + 1.0);
        let mut prev_p_err = f64::INFINITY;
        let mut prev_s_err = f64::INFINITY;
        for p in [50.0, 500.0, 5000.0] {
            let rp = reflection(&m, omega, p, Polarization::P).unwrap();
            let rs = reflection(&m, omega, p, Polarization::S).unwrap();
            let p_err = (rp - quasi_static).norm();
            // r_s ~ (eps - 1) omega^2 / (4 p^2)
            let rs_limit = (eps - 1.0) * omega * omega / (4.0 * p * p);
            let s_err = (rs / rs_limit - 1.0).norm();
            assert!(p_err < prev_p_err);
            assert!(s_err < prev_s_err || s_err < 1e-6);
            prev_p_err = p_err;
            prev_s_err = s_err;
        }
        assert!(prev_p_err < 1e-6);
        assert!(prev_s_err < 1e-3);
    }

    #[test]
    fn drude_approaches_perfect_reflector_at_large_plasma_frequency() {
        let omega = Complex64::new(1.0, 0.0);
        let m = SurfaceModel::drude(1e3, 0.0).unwrap();
        for p in [0.1, 0.8, 3.0] {
            let rp = reflection(&m, omega, p, Polarization::P).unwrap();
            assert!(
                (rp - Complex64::new(1.0, 0.0)).norm() < 5e-3,
                "r_p = {rp} at p = {p}"
            );
        }
    }

    #[test]
    fn schwarz_symmetry_on_the_real_axis() {
        let m = gold();
        for w in [0.3, 1.1, 4.2, 9.0] {
            let omega = Complex64::new(w, 0.0);
            let e = epsilon(&m, omega).unwrap();
            let e_neg = epsilon(&m, -omega).unwrap();
            assert!((e_neg - e.conj()).norm() < 1e-13 * e.norm());
            for pol in [Polarization::S, Polarization::P] {
                for p in [0.2, 0.9, 2.5] {
                    let r = reflection(&m, omega, p, pol).unwrap();
                    let r_neg = reflection(&m, -omega, p, pol).unwrap();
                    assert!(
                        (r_neg - r.conj()).norm() < 1e-12,
                        "pol {pol:?} w {w} p {p}: {r_neg} vs {r}"
                    );
                }
            }
        }
    }

    proptest! {
        // On the positive imaginary axis all response quantities are real
        // with r_p in (0,1) and r_s in (-1,0).
        #[test]
        fn imaginary_axis_reflection_bounds(
            xi in 1e-3f64..50.0,
            p in 1e-3f64..100.0,
        ) {
            let m = gold();
            let omega = Complex64::new(0.0, xi);
            let rp = reflection(&m, omega, p, Polarization::P).unwrap();
            let rs = reflection(&m, omega, p, Polarization::S).unwrap();
            prop_assert_eq!(rp.im, 0.0);
            prop_assert_eq!(rs.im, 0.0);
            prop_assert!(rp.re > 0.0 && rp.re < 1.0, "r_p = {}", rp.re);
            prop_assert!(rs.re > -1.0 && rs.re < 0.0, "r_s = {}", rs.re);
        }

        #[test]
        fn kappa_branch_is_total(
            w in -20.0f64..20.0,
            p in 0.0f64..30.0,
        ) {
            let k = kappa(Complex64::new(w, 0.0), p);
            prop_assert!(k.re >= 0.0);
            if w > 0.0 {
                prop_assert!(k.im <= 0.0);
            }
            prop_assert!(k.norm().is_finite());
        }
    }
}
