//! Reduced units, plate reflection models and the particle model.
//!
//! Everything is expressed in units where `ħ = ε0 = 1`. A length unit `ℓ0`
//! fixes the rest: wavevectors are measured in `1/ℓ0`, frequencies and the
//! Ohmic slope `ρ` in the time unit `ħ/(ε0 ℓ0^3)`-derived reduced scale, and
//! velocities in reduced length per reduced time. Dimensionless outputs
//! (nonadditivity factors, ratios) never depend on the choice of `ℓ0`.

use nalgebra::Matrix3;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Reduced Planck constant.
pub const HBAR: f64 = 1.0;
/// Vacuum permittivity.
pub const EPS0: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitSystem {
    /// Meters per reduced length unit. Only used when converting reports.
    pub length_unit: f64,
}

impl UnitSystem {
    pub fn new(length_unit: f64) -> Result<Self> {
        if !(length_unit.is_finite() && length_unit > 0.0) {
            return Err(Error::InvalidModel(format!(
                "length unit must be positive, got {length_unit}"
            )));
        }
        Ok(Self { length_unit })
    }

    pub fn length_to_si(&self, reduced: f64) -> f64 {
        reduced * self.length_unit
    }

    pub fn length_from_si(&self, meters: f64) -> f64 {
        meters / self.length_unit
    }
}

impl Default for UnitSystem {
    fn default() -> Self {
        Self { length_unit: 1e-9 }
    }
}

/// Low-frequency TM reflection amplitude `r(ω) = r0 + 2iε0ρω` of a plate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionModel {
    r0: f64,
    rho: f64,
    perfect_conductor: bool,
}

impl ReflectionModel {
    pub fn new(r0: f64, rho: f64) -> Result<Self> {
        let model = Self {
            r0,
            rho,
            perfect_conductor: false,
        };
        model.validate()?;
        Ok(model)
    }

    /// Ideal mirror: `r = 1` at every frequency, no dissipation.
    pub fn perfect_conductor() -> Self {
        Self {
            r0: 1.0,
            rho: 0.0,
            perfect_conductor: true,
        }
    }

    /// Non-reflecting, non-dissipative plate.
    pub fn transparent() -> Self {
        Self {
            r0: 0.0,
            rho: 0.0,
            perfect_conductor: false,
        }
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn is_perfect_conductor(&self) -> bool {
        self.perfect_conductor
    }

    pub fn is_dissipative(&self) -> bool {
        self.rho > 0.0
    }

    pub fn validate(&self) -> Result<()> {
        if !self.rho.is_finite() || self.rho < 0.0 {
            return Err(Error::InvalidModel(format!(
                "passivity violated: Ohmic slope rho = {} must be nonnegative",
                self.rho
            )));
        }
        if !(0.0..=1.0).contains(&self.r0) {
            return Err(Error::InvalidModel(format!(
                "static reflection r0 = {} outside [0, 1]",
                self.r0
            )));
        }
        if self.perfect_conductor && (self.rho != 0.0 || self.r0 != 1.0) {
            return Err(Error::InvalidModel(
                "perfect conductor must have r0 = 1 and rho = 0".into(),
            ));
        }
        Ok(())
    }

    /// Reflection amplitude at real frequency `omega`.
    pub fn at(&self, omega: f64) -> Complex64 {
        if self.perfect_conductor {
            return Complex64::new(1.0, 0.0);
        }
        Complex64::new(self.r0, 2.0 * EPS0 * self.rho * omega)
    }

    /// `∂ω Im r` at `ω = 0`.
    pub fn dissipative_slope(&self) -> f64 {
        2.0 * EPS0 * self.rho
    }
}

/// Ohmic internal bath, diagonal in the cavity frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InternalDissipationModel {
    mu_diag: [f64; 3],
}

impl InternalDissipationModel {
    pub fn new(mu_xx: f64, mu_yy: f64, mu_zz: f64) -> Result<Self> {
        let model = Self {
            mu_diag: [mu_xx, mu_yy, mu_zz],
        };
        model.validate()?;
        Ok(model)
    }

    pub fn isotropic(mu: f64) -> Result<Self> {
        Self::new(mu, mu, mu)
    }

    pub fn none() -> Self {
        Self { mu_diag: [0.0; 3] }
    }

    pub fn diag(&self) -> [f64; 3] {
        self.mu_diag
    }

    pub fn is_zero(&self) -> bool {
        self.mu_diag.iter().all(|&m| m == 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        for (axis, &m) in ["xx", "yy", "zz"].iter().zip(&self.mu_diag) {
            if !m.is_finite() || m < 0.0 {
                return Err(Error::InvalidModel(format!(
                    "internal dissipation must be positive semidefinite: mu_{axis} = {m}"
                )));
            }
        }
        Ok(())
    }

    /// `μ(ω)`; frequency independent for the Ohmic bath.
    pub fn tensor(&self, _omega: f64) -> Matrix3<Complex64> {
        Matrix3::from_diagonal(&self.real_part().map(|m| Complex64::new(m, 0.0)).diagonal())
    }

    /// `μ_Re(ω) = [μ + μ†]/2`.
    pub fn real_part(&self) -> Matrix3<f64> {
        Matrix3::from_diagonal(&nalgebra::Vector3::from(self.mu_diag))
    }
}

/// Drude-Lorentz particle with scalar static polarizability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleModel {
    alpha0: f64,
    omega_a: f64,
    dissipation: InternalDissipationModel,
}

impl ParticleModel {
    pub fn new(alpha0: f64, omega_a: f64, dissipation: InternalDissipationModel) -> Result<Self> {
        let particle = Self {
            alpha0,
            omega_a,
            dissipation,
        };
        particle.validate()?;
        Ok(particle)
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    pub fn omega_a(&self) -> f64 {
        self.omega_a
    }

    pub fn dissipation(&self) -> &InternalDissipationModel {
        &self.dissipation
    }

    pub fn with_dissipation(&self, dissipation: InternalDissipationModel) -> Self {
        Self {
            dissipation,
            ..*self
        }
    }

    pub fn with_alpha0(&self, alpha0: f64) -> Result<Self> {
        Self::new(alpha0, self.omega_a, self.dissipation)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha0.is_finite() && self.alpha0 > 0.0) {
            return Err(Error::InvalidModel(format!(
                "static polarizability must be positive, got {}",
                self.alpha0
            )));
        }
        if !(self.omega_a.is_finite() && self.omega_a > 0.0) {
            return Err(Error::InvalidModel(format!(
                "transition frequency must be positive, got {}",
                self.omega_a
            )));
        }
        self.dissipation.validate()
    }

    /// Intrinsically damped polarizability `α0 [1 − ω²/ω_a² − iε0ωμ(ω)]⁻¹`.
    pub fn alpha_mu(&self, omega: f64) -> Result<Matrix3<Complex64>> {
        let mu = self.dissipation.tensor(omega);
        let bracket = Matrix3::<Complex64>::identity()
            * Complex64::new(1.0 - omega * omega / (self.omega_a * self.omega_a), 0.0)
            - mu * Complex64::new(0.0, EPS0 * omega);
        // mu is diagonal, so the inverse is taken entrywise
        let mut out = Matrix3::<Complex64>::zeros();
        for i in 0..3 {
            let d = bracket[(i, i)];
            if d.norm() <= f64::EPSILON {
                return Err(Error::Singular {
                    what: "intrinsic polarizability",
                    condition: f64::INFINITY,
                });
            }
            out[(i, i)] = Complex64::new(self.alpha0, 0.0) / d;
        }
        Ok(out)
    }
}

/// Planar cavity of width `2w` with plate 1 at `z = 0` and plate 2 at `z = 2w`.
/// A single plane is the `w → ∞` limit with plate 2 ignored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityGeometry {
    half_width: f64,
    z_a: f64,
    plate1: ReflectionModel,
    plate2: ReflectionModel,
    single_plane: bool,
}

impl CavityGeometry {
    pub fn cavity(
        half_width: f64,
        z_a: f64,
        plate1: ReflectionModel,
        plate2: ReflectionModel,
    ) -> Result<Self> {
        let geom = Self {
            half_width,
            z_a,
            plate1,
            plate2,
            single_plane: false,
        };
        geom.validate()?;
        Ok(geom)
    }

    pub fn single_plane(z_a: f64, plate: ReflectionModel) -> Result<Self> {
        let geom = Self {
            half_width: f64::INFINITY,
            z_a,
            plate1: plate,
            plate2: ReflectionModel::transparent(),
            single_plane: true,
        };
        geom.validate()?;
        Ok(geom)
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn z_a(&self) -> f64 {
        self.z_a
    }

    pub fn plate1(&self) -> &ReflectionModel {
        &self.plate1
    }

    pub fn plate2(&self) -> &ReflectionModel {
        &self.plate2
    }

    pub fn is_single_plane(&self) -> bool {
        self.single_plane
    }

    /// Distance from the particle to plate 2 (`2w − z_a`), infinite for a single plane.
    pub fn distance_to_plate2(&self) -> f64 {
        if self.single_plane {
            f64::INFINITY
        } else {
            2.0 * self.half_width - self.z_a
        }
    }

    pub fn has_identical_plates(&self) -> bool {
        !self.single_plane && self.plate1 == self.plate2
    }

    pub fn with_z_a(&self, z_a: f64) -> Result<Self> {
        let geom = Self { z_a, ..*self };
        geom.validate()?;
        Ok(geom)
    }

    pub fn with_half_width(&self, half_width: f64) -> Result<Self> {
        let geom = Self {
            half_width,
            ..*self
        };
        geom.validate()?;
        Ok(geom)
    }

    pub fn with_plates(&self, plate1: ReflectionModel, plate2: ReflectionModel) -> Result<Self> {
        let geom = Self {
            plate1,
            plate2,
            ..*self
        };
        geom.validate()?;
        Ok(geom)
    }

    /// Mirror image `z_a → 2w − z_a` with the plates swapped.
    pub fn mirrored(&self) -> Result<Self> {
        if self.single_plane {
            return Err(Error::InvalidModel(
                "a single plane has no mirror configuration".into(),
            ));
        }
        Self::cavity(
            self.half_width,
            2.0 * self.half_width - self.z_a,
            self.plate2,
            self.plate1,
        )
    }

    /// Single plane formed by plate 1 alone at the same particle position.
    pub fn plate1_alone(&self) -> Result<Self> {
        Self::single_plane(self.z_a, self.plate1)
    }

    /// Characteristic 1/e decay length of the evanescent kernels in wavevector
    /// space: wavevectors are limited by `max(1/z_a, 1/(2w − z_a))`.
    pub fn decay_scale(&self) -> f64 {
        self.z_a.min(self.distance_to_plate2()) / 2.0
    }

    pub fn validate(&self) -> Result<()> {
        self.plate1.validate()?;
        self.plate2.validate()?;
        if !(self.z_a.is_finite() && self.z_a > 0.0) {
            return Err(Error::InvalidModel(format!(
                "position on plate: z_a = {} must be positive",
                self.z_a
            )));
        }
        if !self.single_plane {
            if !(self.half_width.is_finite() && self.half_width > 0.0) {
                return Err(Error::InvalidModel(format!(
                    "cavity half width must be positive, got {}",
                    self.half_width
                )));
            }
            if self.z_a >= 2.0 * self.half_width {
                return Err(Error::InvalidModel(format!(
                    "position on plate: z_a = {} must lie inside (0, 2w) = (0, {})",
                    self.z_a,
                    2.0 * self.half_width
                )));
            }
        }
        Ok(())
    }
}
