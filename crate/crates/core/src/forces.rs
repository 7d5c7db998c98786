//! Leading-order (cubic in `v`) friction forces on a particle moving parallel
//! to a single plane or inside a planar cavity, their additive baselines and
//! the nonadditivity factors `η = F / F_add`.
//!
//! Both channels need only the full-line moments `∫ dq qᵏ Σ′(q)` and
//! `∫ dq qᵏ s′_y(q)` for `k ≤ 4`: the radiative double integral has weight
//! `(q̃ + q)⁴`, which expands into products of single moments.

use std::f64::consts::PI;

use nalgebra::Matrix3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greens::{GreenDerivative, KernelMoments};
use crate::quadrature::{integrate_nested, try_integrate_halfline, Domain, QuadratureSpec};
use crate::units::{CavityGeometry, InternalDissipationModel, ParticleModel, EPS0, HBAR};

pub const LORENTZ_LAMBDA: f64 = 0.42;
pub const LORENTZ_GAMMA: f64 = 0.15;

/// Guard band, in units of `w`, kept free next to each plate in sweeps.
pub const PLATE_GUARD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionSpec {
    pub v: f64,
}

impl MotionSpec {
    pub fn new(v: f64) -> Result<Self> {
        let m = Self { v };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v > 0.0 && self.v.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "velocity must be positive, got {}",
                self.v
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiativeForce {
    pub total: f64,
    pub sigma_term: f64,
    pub spin_term: f64,
}

impl RadiativeForce {
    fn scaled(&self, factor: f64) -> Self {
        Self {
            total: self.total * factor,
            sigma_term: self.sigma_term * factor,
            spin_term: self.spin_term * factor,
        }
    }

    /// Spin suppression `φ = sigma_term / total`.
    pub fn suppression(&self) -> Option<f64> {
        (self.total != 0.0).then(|| self.sigma_term / self.total)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForceReport {
    pub z_a: f64,
    /// `None` for a single plane.
    pub w: Option<f64>,
    pub v: f64,
    pub f_int: f64,
    pub f_rad: f64,
    pub f_int_additive: f64,
    pub f_rad_additive: f64,
    pub eta_int: Option<f64>,
    pub eta_rad: Option<f64>,
    pub rad_sigma_term: f64,
    pub rad_spin_term: f64,
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den != 0.0).then(|| num / den)
}

/// Which force the `η` curve tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Intrinsic,
    Radiative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonadditivityCurve {
    pub channel: Channel,
    /// `(z_a / w, η)`; `η` is NaN where the additive force vanishes.
    pub points: Vec<(f64, f64)>,
    pub lorentz_lambda: f64,
    pub lorentz_gamma: f64,
}

impl NonadditivityCurve {
    /// The Lorentzian approximation at every sampled position.
    pub fn model(&self) -> Vec<f64> {
        self.points
            .iter()
            .map(|&(x, _)| lorentz_model(x, self.lorentz_lambda, self.lorentz_gamma))
            .collect()
    }
}

/// `η(x) ≈ 1 + Λ² / ((1 − x)² + Γ²)` with `x = z_a / w`.
pub fn lorentz_model(x: f64, lambda: f64, gamma: f64) -> f64 {
    1.0 + lambda * lambda / ((1.0 - x).powi(2) + gamma * gamma)
}

/// Single-plane intrinsic force
/// `−(15/(2π)²) ħα0ε0 (5μxx + μyy + 6μzz) ρ v³ / (2z)⁷`.
pub fn single_plane_int_closed_form(
    z_a: f64,
    rho: f64,
    particle: &ParticleModel,
    motion: &MotionSpec,
) -> f64 {
    let [mxx, myy, mzz] = particle.dissipation().diag();
    let bracket = 5.0 * mxx + myy + 6.0 * mzz;
    -15.0 / (4.0 * PI * PI) * HBAR * particle.alpha0() * EPS0 * bracket * rho * motion.v.powi(3)
        / (2.0 * z_a).powi(7)
}

/// Single-plane radiative force `−(18ħ/π³) α0² ρ² v³ / (2z)¹⁰`.
pub fn single_plane_rad_closed_form(
    z_a: f64,
    rho: f64,
    particle: &ParticleModel,
    motion: &MotionSpec,
) -> f64 {
    -18.0 / PI.powi(3) * HBAR * particle.alpha0().powi(2) * rho * rho * motion.v.powi(3)
        / (2.0 * z_a).powi(10)
}

/// `F_s(z_a; ρ1) + F_s(2w − z_a; ρ2)`, or just the first term for a single plane.
pub fn additive_forces(
    geom: &CavityGeometry,
    particle: &ParticleModel,
    motion: &MotionSpec,
) -> (f64, f64) {
    let rho1 = geom.plate1().rho();
    let mut f_int = single_plane_int_closed_form(geom.z_a(), rho1, particle, motion);
    let mut f_rad = single_plane_rad_closed_form(geom.z_a(), rho1, particle, motion);
    if !geom.is_single_plane() {
        let (z2, rho2) = (geom.distance_to_plate2(), geom.plate2().rho());
        f_int += single_plane_int_closed_form(z2, rho2, particle, motion);
        f_rad += single_plane_rad_closed_form(z2, rho2, particle, motion);
    }
    (f_int, f_rad)
}

fn int_from_moments(
    m: &KernelMoments,
    mu: &InternalDissipationModel,
    particle: &ParticleModel,
    v: f64,
) -> f64 {
    if mu.is_zero() {
        return 0.0;
    }
    let mu_re: Matrix3<f64> = mu.real_part();
    // Tr[μᵀ Σ′₄] over the half line is half the full-line moment
    let trace = (mu_re.transpose() * m.sigma[4]).trace();
    -(HBAR * particle.alpha0() * EPS0 / PI) * v.powi(3) * trace / (2.0 * PI) / 3.0 * 0.5
}

fn binomial4(n: usize) -> f64 {
    [1.0, 4.0, 6.0, 4.0, 1.0][n]
}

fn rad_from_moments(m: &KernelMoments, particle: &ParticleModel, v: f64) -> RadiativeForce {
    let mut sigma = 0.0;
    let mut spin = 0.0;
    for n in 0..5 {
        sigma += binomial4(n) * (m.sigma[n] * m.sigma[4 - n]).trace();
        spin += binomial4(n) * m.spin[n] * m.spin[4 - n];
    }
    let pref = -(HBAR * particle.alpha0().powi(2) / PI) * v.powi(3) / (4.0 * PI * PI);
    let sigma_term = pref * sigma / 12.0;
    let spin_term = -pref * 2.0 * spin / 12.0;
    RadiativeForce {
        total: sigma_term + spin_term,
        sigma_term,
        spin_term,
    }
}

/// Intrinsic-damping force for an arbitrary derivative kernel. The kernel is
/// sampled on `q ≥ 0` and extended by parity (`Σ′` even, `s′_y` odd).
pub fn force_int_general<K>(
    kernel: K,
    mu: &InternalDissipationModel,
    motion: &MotionSpec,
    particle: &ParticleModel,
    spec: &QuadratureSpec,
) -> Result<f64>
where
    K: Fn(f64) -> Result<GreenDerivative>,
{
    motion.validate()?;
    if mu.is_zero() {
        return Ok(0.0);
    }
    let m = KernelMoments::from_kernel(kernel, spec)?;
    Ok(int_from_moments(&m, mu, particle, motion.v))
}

/// Radiative force for an arbitrary derivative kernel, split into the
/// `Tr[Σ′Σ′]` part and the spin part `−2 s′·s′`.
pub fn force_rad_general<K>(
    kernel: K,
    motion: &MotionSpec,
    particle: &ParticleModel,
    spec: &QuadratureSpec,
) -> Result<RadiativeForce>
where
    K: Fn(f64) -> Result<GreenDerivative>,
{
    motion.validate()?;
    let m = KernelMoments::from_kernel(kernel, spec)?;
    Ok(rad_from_moments(&m, particle, motion.v))
}

/// Full report for a cavity or single plane. The `v`-independent coefficients
/// are computed once and scaled by `v³`.
pub fn force_cavity(
    geom: &CavityGeometry,
    particle: &ParticleModel,
    motion: &MotionSpec,
    spec: &QuadratureSpec,
) -> Result<ForceReport> {
    geom.validate()?;
    particle.validate()?;
    motion.validate()?;
    let m = KernelMoments::cavity(geom, spec)?;
    let v3 = motion.v.powi(3);
    let f_int = int_from_moments(&m, particle.dissipation(), particle, 1.0) * v3;
    let rad = rad_from_moments(&m, particle, 1.0).scaled(v3);
    let (f_int_additive, f_rad_additive) = additive_forces(geom, particle, motion);
    Ok(ForceReport {
        z_a: geom.z_a(),
        w: (!geom.is_single_plane()).then(|| geom.half_width()),
        v: motion.v,
        f_int,
        f_rad: rad.total,
        f_int_additive,
        f_rad_additive,
        eta_int: ratio(f_int, f_int_additive),
        eta_rad: ratio(rad.total, f_rad_additive),
        rad_sigma_term: rad.sigma_term,
        rad_spin_term: rad.spin_term,
    })
}

/// `n_points` equally spaced positions `z_a / w` in `[lo, hi]`.
pub fn positions(lo: f64, hi: f64, n_points: usize) -> Vec<f64> {
    (0..n_points)
        .map(|i| lo + (hi - lo) * i as f64 / (n_points - 1) as f64)
        .collect()
}

/// `η(z_a)` across the cavity, leaving a guard band of `0.05 w` at each plate.
pub fn eta_curve(
    geom: &CavityGeometry,
    particle: &ParticleModel,
    motion: &MotionSpec,
    channel: Channel,
    n_points: usize,
    spec: &QuadratureSpec,
) -> Result<NonadditivityCurve> {
    eta_curve_between(
        geom,
        particle,
        motion,
        channel,
        PLATE_GUARD,
        2.0 - PLATE_GUARD,
        n_points,
        spec,
    )
}

/// `η` at `n_points` positions `z_a / w ∈ [lo, hi]`, computed in parallel and
/// returned in order.
#[allow(clippy::too_many_arguments)]
pub fn eta_curve_between(
    geom: &CavityGeometry,
    particle: &ParticleModel,
    motion: &MotionSpec,
    channel: Channel,
    lo: f64,
    hi: f64,
    n_points: usize,
    spec: &QuadratureSpec,
) -> Result<NonadditivityCurve> {
    if n_points < 3 {
        return Err(Error::InvalidModel(format!(
            "a curve needs at least 3 points, got {n_points}"
        )));
    }
    if geom.is_single_plane() {
        return Err(Error::InvalidModel("η curve requires a cavity".into()));
    }
    if !(lo > 0.0 && hi < 2.0 && lo < hi) {
        return Err(Error::InvalidModel(format!(
            "positions [{lo}, {hi}] must lie inside (0, 2)"
        )));
    }
    let w = geom.half_width();
    let points = positions(lo, hi, n_points)
        .into_par_iter()
        .map(|x| {
            let report = force_cavity(&geom.with_z_a(x * w)?, particle, motion, spec)?;
            let eta = match channel {
                Channel::Intrinsic => report.eta_int,
                Channel::Radiative => report.eta_rad,
            };
            Ok((x, eta.unwrap_or(f64::NAN)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NonadditivityCurve {
        channel,
        points,
        lorentz_lambda: LORENTZ_LAMBDA,
        lorentz_gamma: LORENTZ_GAMMA,
    })
}

/// `η^int` at the cavity center for `μ = diag(1, 1, 0)` and `μ = diag(0, 0, 1)`.
pub fn anisotropy_shift(
    geom: &CavityGeometry,
    particle: &ParticleModel,
    motion: &MotionSpec,
    spec: &QuadratureSpec,
) -> Result<(f64, f64)> {
    if geom.is_single_plane() || !geom.has_identical_plates() {
        return Err(Error::InvalidModel(
            "anisotropy shift needs two identical plates".into(),
        ));
    }
    let center = geom.with_z_a(geom.half_width())?;
    let eta = |mu: InternalDissipationModel| -> Result<f64> {
        let report = force_cavity(&center, &particle.with_dissipation(mu), motion, spec)?;
        report
            .eta_int
            .ok_or_else(|| Error::InvalidModel("additive intrinsic force vanishes".into()))
    };
    Ok((
        eta(InternalDissipationModel::new(1.0, 1.0, 0.0)?)?,
        eta(InternalDissipationModel::new(0.0, 0.0, 1.0)?)?,
    ))
}

/// Both sides of `∫∫ dq̃ dq (q̃ + q)⁴ s′(q̃) s′(q) = 32 (∫₀^∞ q³ s′)(∫₀^∞ q s′)`
/// for an odd kernel: the left side by direct 2D quadrature.
pub fn spin_factorization_check<K>(kernel: K, spec: &QuadratureSpec) -> Result<(f64, f64)>
where
    K: Fn(f64) -> f64,
{
    let lhs = integrate_nested(
        |x| (x[0] + x[1]).powi(4) * kernel(x[0]) * kernel(x[1]),
        &[Domain::FullLine, Domain::FullLine],
        spec,
    )?
    .value;
    let moments = try_integrate_halfline(
        |q: f64| {
            let s = kernel(q);
            Ok([q * s, q.powi(3) * s])
        },
        spec,
    )?
    .value;
    Ok((lhs, 32.0 * moments[1] * moments[0]))
}
