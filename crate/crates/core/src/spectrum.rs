//! Nonequilibrium dipole statistics of the moving particle: the dissipation
//! kernel (bath plus field channel), the dressed polarizability, the power
//! spectrum and the force functional
//!
//! ```text
//! F = −2 Tr ∫₀^∞ dω ∫ dq/2π q Sᵀ(qv − ω, v) G_Im(q, z_a, ω).
//! ```

use std::f64::consts::PI;

use nalgebra::Matrix3;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::forces::MotionSpec;
use crate::greens::green_q;
use crate::quadrature::{
    try_integrate_from, try_integrate_fullline, try_integrate_halfline, try_integrate_interval,
    QuadratureResult, QuadratureSpec,
};
use crate::units::{CavityGeometry, ParticleModel, EPS0, HBAR};

/// Upper frequency cutoff in units of `v / decay_scale`.
pub const OMEGA_CUTOFF: f64 = 20.0;

/// Largest condition number accepted for the dressing bracket.
const MAX_CONDITION: f64 = 1e12;

type CMatrix = Matrix3<Complex64>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipationKernel {
    pub omega: f64,
    pub v: f64,
    /// Hermitian; the field channel carries an antisymmetric spin part.
    pub d: CMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSpectrum {
    pub omega: f64,
    pub v: f64,
    pub s: CMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpectrumMode {
    /// `S ≈ (ħα0²/π) D`.
    #[default]
    LowFrequency,
    /// `S = (ħ/π) α D α†` with the dressed polarizability.
    Dressed,
}

fn real_to_complex(m: &Matrix3<f64>) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

fn theta(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// One-sided spectral density of the Langevin force,
/// `4πħ θ(ω) ε0 ω μ_Re(ω) / α0`.
pub fn langevin_spectrum(omega: f64, particle: &ParticleModel) -> Matrix3<f64> {
    particle.dissipation().real_part()
        * (4.0 * PI * HBAR * theta(omega) * EPS0 * omega / particle.alpha0())
}

/// Bath channel `(ωε0θ(ω)/α0) μ_Re(ω)`.
pub fn bath_dissipation(omega: f64, particle: &ParticleModel) -> CMatrix {
    real_to_complex(
        &(particle.dissipation().real_part() * (omega * EPS0 * theta(omega) / particle.alpha0())),
    )
}

/// `∫_a^∞` split at zero, where the `p_y`-integrated kernels have a
/// logarithmic kink.
fn integrate_from_split<F>(f: F, a: f64, spec: &QuadratureSpec) -> Result<CMatrix>
where
    F: Fn(f64) -> Result<CMatrix>,
{
    if a < 0.0 {
        let left = try_integrate_interval(&f, a, 0.0, spec)?.value;
        let right = try_integrate_halfline(&f, spec)?.value;
        Ok(left + right)
    } else {
        Ok(try_integrate_from(&f, a, spec)?.value)
    }
}

fn kernel_spec(geom: &CavityGeometry, spec: &QuadratureSpec) -> QuadratureSpec {
    spec.with_decay_scale(geom.decay_scale())
}

/// Field channel `∫ dq/2π θ(ω + qv) G_Im(q, z_a, ω + qv)`.
pub fn field_dissipation(
    omega: f64,
    v: f64,
    geom: &CavityGeometry,
    spec: &QuadratureSpec,
) -> Result<CMatrix> {
    if v < 0.0 {
        return Err(Error::InvalidModel(format!(
            "velocity must be nonnegative, got {v}"
        )));
    }
    let spec = kernel_spec(geom, spec);
    let g_im = |q: f64| -> Result<CMatrix> { Ok(green_q(q, geom, omega + q * v, &spec)?.g_im()) };
    let integral = if v == 0.0 {
        if omega <= 0.0 {
            return Ok(CMatrix::zeros());
        }
        try_integrate_fullline(g_im, &spec)?.value
    } else {
        integrate_from_split(g_im, -omega / v, &spec)?
    };
    Ok(integral / Complex64::new(2.0 * PI, 0.0))
}

/// Dissipation kernel: bath and field channels added.
pub fn dissipation_kernel(
    omega: f64,
    v: f64,
    geom: &CavityGeometry,
    particle: &ParticleModel,
    spec: &QuadratureSpec,
) -> Result<DissipationKernel> {
    let d = bath_dissipation(omega, particle) + field_dissipation(omega, v, geom, spec)?;
    Ok(DissipationKernel { omega, v, d })
}

fn condition_number(m: &CMatrix) -> f64 {
    let sv = m.singular_values();
    let (max, min) = (sv.max(), sv.min());
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Doppler-shifted scattered field at the particle, `∫ dq/2π G(q, z_a, ω + qv)`.
pub fn scattered_field(
    omega: f64,
    v: f64,
    geom: &CavityGeometry,
    spec: &QuadratureSpec,
) -> Result<CMatrix> {
    let spec = kernel_spec(geom, spec);
    let g = try_integrate_fullline(|q| Ok(green_q(q, geom, omega + q * v, &spec)?.g), &spec)?.value;
    Ok(g / Complex64::new(2.0 * PI, 0.0))
}

/// Dressed polarizability `α = α_μ [1 − ∫dq/2π G(q, z_a, ω + qv) α_μ]⁻¹`.
pub fn dressed_alpha(
    omega: f64,
    v: f64,
    geom: &CavityGeometry,
    particle: &ParticleModel,
    spec: &QuadratureSpec,
) -> Result<CMatrix> {
    let alpha_mu = particle.alpha_mu(omega)?;
    let g = scattered_field(omega, v, geom, spec)?;
    let bracket = CMatrix::identity() - g * alpha_mu;
    let condition = condition_number(&bracket);
    if !(condition < MAX_CONDITION) {
        return Err(Error::Singular {
            what: "dressed polarizability",
            condition,
        });
    }
    let inverse = bracket.try_inverse().ok_or(Error::Singular {
        what: "dressed polarizability",
        condition,
    })?;
    Ok(alpha_mu * inverse)
}

pub fn power_spectrum(
    omega: f64,
    v: f64,
    geom: &CavityGeometry,
    particle: &ParticleModel,
    mode: SpectrumMode,
    spec: &QuadratureSpec,
) -> Result<PowerSpectrum> {
    let d = dissipation_kernel(omega, v, geom, particle, spec)?.d;
    let s = match mode {
        SpectrumMode::LowFrequency => {
            d * Complex64::new(HBAR * particle.alpha0().powi(2) / PI, 0.0)
        }
        SpectrumMode::Dressed => {
            let a = dressed_alpha(omega, v, geom, particle, spec)?;
            a * d * a.adjoint() * Complex64::new(HBAR / PI, 0.0)
        }
    };
    Ok(PowerSpectrum { omega, v, s })
}

/// `Re Tr[Sᵀ G] = Re Σ_jk S_jk G_jk`.
fn transpose_trace(s: &CMatrix, g: &CMatrix) -> f64 {
    s.iter().zip(g.iter()).map(|(a, b)| (a * b).re).sum()
}

/// Default upper limit of the frequency integral, `20 v / decay_scale`.
pub fn frequency_cutoff(geom: &CavityGeometry, v: f64) -> f64 {
    OMEGA_CUTOFF * v / geom.decay_scale()
}

/// Friction force from the full functional, to be compared with the
/// leading-order evaluators for small `v`.
pub fn force_full(
    geom: &CavityGeometry,
    particle: &ParticleModel,
    motion: &MotionSpec,
    mode: SpectrumMode,
    spec: &QuadratureSpec,
) -> Result<f64> {
    force_full_with_cutoff(
        geom,
        particle,
        motion,
        mode,
        frequency_cutoff(geom, motion.v),
        spec,
    )
}

/// As [`force_full`] with the frequency integral restricted to `0 < ω ≤ cutoff`.
pub fn force_full_with_cutoff(
    geom: &CavityGeometry,
    particle: &ParticleModel,
    motion: &MotionSpec,
    mode: SpectrumMode,
    cutoff: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if !(cutoff > 0.0) {
        return Err(Error::InvalidModel(format!(
            "frequency cutoff must be positive, got {cutoff}"
        )));
    }
    geom.validate()?;
    particle.validate()?;
    motion.validate()?;
    let v = motion.v;
    if v > geom.decay_scale() * particle.omega_a() {
        log::warn!(
            "v = {v} exceeds decay scale × ω_a = {}; the low-velocity expansion is unreliable",
            geom.decay_scale() * particle.omega_a()
        );
    }
    // each nesting level runs ten times tighter than the one enclosing it so
    // that inner quadrature noise stays below the outer error estimate
    let q_spec = kernel_spec(geom, &spec.with_rel_tol(spec.rel_tol * 0.1));
    let inner = spec.with_rel_tol(spec.rel_tol * 0.01);
    let g_spec = kernel_spec(geom, &inner);
    // With Ω = qv − ω as the outer variable the spectrum is evaluated once per
    // node; 0 < ω ≤ cutoff becomes the window Ω/v ≤ q ≤ (Ω + cutoff)/v.
    let outer = |big_omega: f64| -> Result<f64> {
        let s = power_spectrum(big_omega, v, geom, particle, mode, &inner)?.s;
        if s.iter().all(|c| *c == Complex64::new(0.0, 0.0)) {
            return Ok(0.0);
        }
        let weighted = |q: f64| -> Result<CMatrix> {
            Ok(green_q(q, geom, q * v - big_omega, &g_spec)?.g_im() * Complex64::new(q, 0.0))
        };
        let (lo, hi) = (big_omega / v, (big_omega + cutoff) / v);
        let k = if lo < 0.0 && hi > 0.0 {
            try_integrate_interval(&weighted, lo, 0.0, &q_spec)?.value
                + try_integrate_interval(&weighted, 0.0, hi, &q_spec)?.value
        } else {
            try_integrate_interval(&weighted, lo, hi, &q_spec)?.value
        };
        Ok(transpose_trace(&s, &k) / (2.0 * PI))
    };
    let omega_spec = spec.with_decay_scale(v / geom.decay_scale());
    let above = try_integrate_halfline(&outer, &omega_spec)?;
    let below = try_integrate_halfline(|x: f64| outer(-x), &omega_spec)?;
    let integral = QuadratureResult {
        value: above.value + below.value,
        error_estimate: above.error_estimate + below.error_estimate,
        evals: above.evals + below.evals,
    };
    log::debug!(
        "force functional: {} evaluations of the frequency integrand, error {:e}",
        integral.evals,
        integral.error_estimate
    );
    Ok(-2.0 * integral.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{InternalDissipationModel, ReflectionModel};
    use approx::assert_relative_eq;

    fn particle(mu: f64) -> ParticleModel {
        ParticleModel::new(1.0, 1.0, InternalDissipationModel::isotropic(mu).unwrap()).unwrap()
    }

    fn single(z: f64, r0: f64, rho: f64) -> CavityGeometry {
        CavityGeometry::single_plane(z, ReflectionModel::new(r0, rho).unwrap()).unwrap()
    }

    #[test]
    fn langevin_examples() {
        let p = particle(1.0);
        assert_eq!(langevin_spectrum(-1.0, &p), Matrix3::zeros());
        assert_eq!(langevin_spectrum(0.0, &p), Matrix3::zeros());
        let s = langevin_spectrum(2.0, &p);
        assert_relative_eq!(s, Matrix3::identity() * (8.0 * PI), max_relative = 1e-15);
    }

    #[test]
    fn kernel_examples() {
        let spec = QuadratureSpec::default().with_rel_tol(1e-8);
        let g = single(0.5, 0.8, 0.5);
        let d = dissipation_kernel(-0.3, 0.0, &g, &particle(1.0), &spec).unwrap();
        assert_eq!(d.d, CMatrix::zeros());

        let bare = single(0.5, 0.0, 0.0);
        let d = dissipation_kernel(0.4, 0.0, &bare, &particle(2.0), &spec).unwrap();
        assert_relative_eq!(
            d.d.map(|c| c.re),
            Matrix3::identity() * 0.8,
            max_relative = 1e-15
        );
        assert_eq!(d.d.map(|c| c.im), Matrix3::zeros());
    }

    #[test]
    fn moving_particle_sees_field_dissipation_at_zero_frequency() {
        let spec = QuadratureSpec::default().with_rel_tol(1e-8);
        let g = single(0.5, 0.8, 0.5);
        let d = field_dissipation(0.0, 0.2, &g, &spec).unwrap();
        // oracle: G_Im over the q > 0 window, integrated directly
        let kspec = spec.with_decay_scale(g.decay_scale());
        let direct =
            try_integrate_halfline(|q| Ok(green_q(q, &g, 0.2 * q, &kspec)?.g_im()), &kspec)
                .unwrap()
                .value
                / Complex64::new(2.0 * PI, 0.0);
        assert!(d[(2, 2)].re > 0.0);
        assert!((d - direct).norm() < 1e-8 * direct.norm());
    }

    #[test]
    fn dressed_alpha_without_field() {
        let spec = QuadratureSpec::default();
        let p = particle(1.0);
        let bare = single(0.5, 0.0, 0.0);
        let a = dressed_alpha(0.3, 0.1, &bare, &p, &spec).unwrap();
        assert!((a - p.alpha_mu(0.3).unwrap()).norm() < 1e-15);
        let far = single(1e4, 1.0, 0.0);
        let a = dressed_alpha(0.0, 0.0, &far, &p, &spec).unwrap();
        assert!((a - CMatrix::identity()).norm() < 1e-9);
    }

    #[test]
    fn resonant_particle_is_singular() {
        let spec = QuadratureSpec::default();
        let p = particle(0.0);
        let bare = single(0.5, 0.0, 0.0);
        assert!(matches!(
            dressed_alpha(1.0, 0.0, &bare, &p, &spec),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn no_dissipation_no_force() {
        let spec = QuadratureSpec::default().with_rel_tol(1e-4);
        let g = single(0.5, 0.9, 0.0);
        let f = force_full(
            &g,
            &particle(0.0),
            &MotionSpec::new(0.05).unwrap(),
            SpectrumMode::LowFrequency,
            &spec,
        )
        .unwrap();
        assert_eq!(f, 0.0);
    }
}
