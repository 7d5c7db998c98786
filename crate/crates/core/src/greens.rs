//! Near-field (TM, quasistatic) scattered Green tensor of a planar cavity and
//! of a single plane, its split into a symmetric part `Σ` and a spin vector
//! `s⊥`, and the frequency-derivative kernels at `ω = 0`.
//!
//! Conventions: motion along `x`, plate 1 at `z = 0`, plate 2 at `z = 2w`,
//! `q = p_x` and `p = |(p_x, p_y)|`. The Green tensor returned by
//! [`green_q`] is already integrated over `p_y`:
//!
//! ```text
//! G(q, z_a, ω) = ∫ dp_y/2π { p/(2ε0) [P₊ Π − R M·Π] − q/(2ε0) P₋ L_y }
//! ```
//!
//! with `Π = diag(q²/p², p_y²/p², 1)` and `M = diag(1, 1, −1)`.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::{try_integrate_halfline, QuadratureSpec};
use crate::units::{CavityGeometry, EPS0};

/// Smallest admissible `|1 − r1 r2 e^{−4pw}|`.
const DIVERGENCE_GUARD: f64 = 1e-12;

const MIRROR: [f64; 3] = [1.0, 1.0, -1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// Rotation generator `(L_i)_{jk} = −i ε_{ijk}`.
pub fn rotation_generator(axis: usize) -> Matrix3<Complex64> {
    let mut l = Matrix3::zeros();
    let (j, k) = ((axis + 1) % 3, (axis + 2) % 3);
    l[(j, k)] = Complex64::new(0.0, -1.0);
    l[(k, j)] = Complex64::new(0.0, 1.0);
    l
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Amplitudes {
    p_plus: Complex64,
    p_minus: Complex64,
    r: Complex64,
    denominator: Complex64,
}

/// `1 − c e^{−4pw}` written as `(1 − c) − c·expm1(−4pw)` so the perfectly
/// reflecting limit `c → 1`, `p → 0` keeps full relative precision.
fn fabry_perot_denominator(c: Complex64, p: f64, w: f64) -> Complex64 {
    (Complex64::new(1.0, 0.0) - c) - c * (-4.0 * p * w).exp_m1()
}

fn amplitudes(p: f64, geom: &CavityGeometry, omega: f64) -> Amplitudes {
    let r1 = geom.plate1().at(omega);
    let near = (-2.0 * p * geom.z_a()).exp();
    if geom.is_single_plane() {
        let ps = r1 * near;
        return Amplitudes {
            p_plus: ps,
            p_minus: ps,
            r: Complex64::new(0.0, 0.0),
            denominator: Complex64::new(1.0, 0.0),
        };
    }
    let w = geom.half_width();
    let r2 = geom.plate2().at(omega);
    let far = (-2.0 * p * geom.distance_to_plate2()).exp();
    let round_trip = (-4.0 * p * w).exp();
    let d = fabry_perot_denominator(r1 * r2, p, w);
    Amplitudes {
        p_plus: (r1 * near + r2 * far) / d,
        p_minus: (r1 * near - r2 * far) / d,
        r: r1 * r2 * round_trip * 2.0 / d,
        denominator: d,
    }
}

fn checked_amplitudes(p: f64, geom: &CavityGeometry, omega: f64) -> Result<Amplitudes> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidModel(format!(
            "radial wavevector must be positive, got {p}"
        )));
    }
    let a = amplitudes(p, geom, omega);
    if a.denominator.norm() < DIVERGENCE_GUARD {
        return Err(Error::Divergence(a.denominator.norm()));
    }
    Ok(a)
}

/// Fabry-Perot function `R = 2 r1 r2 e^{−4pw} / (1 − r1 r2 e^{−4pw})`.
pub fn fabry_perot_r(p: f64, geom: &CavityGeometry, omega: f64) -> Result<Complex64> {
    checked_amplitudes(p, geom, omega).map(|a| a.r)
}

/// `P± = e^{−2pw}[r1 e^{2p(w−z_a)} ± r2 e^{−2p(w−z_a)}] / (1 − r1 r2 e^{−4pw})`.
pub fn cavity_p(p: f64, geom: &CavityGeometry, omega: f64, sign: Sign) -> Result<Complex64> {
    checked_amplitudes(p, geom, omega).map(|a| match sign {
        Sign::Plus => a.p_plus,
        Sign::Minus => a.p_minus,
    })
}

/// `Im ∂ω` of `P₊`, `P₋` and `R` at `ω = 0` for the Ohmic reflection model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialDerivatives {
    pub p_plus: f64,
    pub p_minus: f64,
    pub r: f64,
}

/// Analytic `ω`-derivatives at zero frequency with `r_k(ω) = r0_k + iσ_kω`.
/// At `ω = 0` numerators and denominators are real while their derivatives
/// are purely imaginary, so `Im (N/D)' = Im N'/D − N Im D'/D²`.
pub fn radial_derivatives(p: f64, geom: &CavityGeometry) -> RadialDerivatives {
    let (r01, s1) = (geom.plate1().r0(), geom.plate1().dissipative_slope());
    let near = (-2.0 * p * geom.z_a()).exp();
    if geom.is_single_plane() {
        let ps = s1 * near;
        return RadialDerivatives {
            p_plus: ps,
            p_minus: ps,
            r: 0.0,
        };
    }
    let (r02, s2) = (geom.plate2().r0(), geom.plate2().dissipative_slope());
    let w = geom.half_width();
    let far = (-2.0 * p * geom.distance_to_plate2()).exp();
    let round_trip = (-4.0 * p * w).exp();
    let d = fabry_perot_denominator(Complex64::new(r01 * r02, 0.0), p, w).re;
    // Im D' = −(σ1 r02 + r01 σ2) e^{−4pw}
    let cross = s1 * r02 + r01 * s2;
    let dd = -cross * round_trip;
    let quotient = |n: f64, dn: f64| dn / d - n * dd / (d * d);
    RadialDerivatives {
        p_plus: quotient(r01 * near + r02 * far, s1 * near + s2 * far),
        p_minus: quotient(r01 * near - r02 * far, s1 * near - s2 * far),
        r: quotient(2.0 * r01 * r02 * round_trip, 2.0 * cross * round_trip),
    }
}

/// Green tensor at fixed `q`, integrated over `p_y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenSample {
    pub q: f64,
    pub g: Matrix3<Complex64>,
}

impl GreenSample {
    /// `G_Im = (G − G†)/(2i)`.
    pub fn g_im(&self) -> Matrix3<Complex64> {
        (self.g - self.g.adjoint()) / Complex64::new(0.0, 2.0)
    }

    pub fn sigma_spin(&self) -> SigmaSpin {
        sigma_s_decompose(&self.g_im())
    }
}

/// `G_Im = Σ + s⊥·L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaSpin {
    pub sigma: Matrix3<f64>,
    pub s_perp: Vector3<f64>,
}

impl SigmaSpin {
    pub fn reconstruct(&self) -> Matrix3<Complex64> {
        let mut m = self.sigma.map(|x| Complex64::new(x, 0.0));
        for i in 0..3 {
            m += rotation_generator(i) * Complex64::new(self.s_perp[i], 0.0);
        }
        m
    }
}

/// Splits a Hermitian `G_Im` into its real symmetric part and the spin
/// vector of its imaginary antisymmetric part.
pub fn sigma_s_decompose(g_im: &Matrix3<Complex64>) -> SigmaSpin {
    let re = g_im.map(|c| c.re);
    let im = g_im.map(|c| c.im);
    let sigma = (re + re.transpose()) * 0.5;
    // Im(s·L)_{jk} = −s_i ε_{ijk}
    let s_perp = Vector3::new(
        -0.5 * (im[(1, 2)] - im[(2, 1)]),
        -0.5 * (im[(2, 0)] - im[(0, 2)]),
        -0.5 * (im[(0, 1)] - im[(1, 0)]),
    );
    SigmaSpin { sigma, s_perp }
}

fn pi_diag(q: f64, p_y: f64, p: f64) -> [f64; 3] {
    let p2 = p * p;
    [q * q / p2, p_y * p_y / p2, 1.0]
}

fn kernel_spec(geom: &CavityGeometry, spec: &QuadratureSpec) -> QuadratureSpec {
    spec.with_decay_scale(geom.decay_scale())
}

/// Scattered Green tensor at wavevector `q` along the motion and real
/// frequency `omega`; the `p_y` integral runs over the even half line.
pub fn green_q(
    q: f64,
    geom: &CavityGeometry,
    omega: f64,
    spec: &QuadratureSpec,
) -> Result<GreenSample> {
    let integrand = |p_y: f64| -> Result<[f64; 8]> {
        let p = q.hypot(p_y);
        if p == 0.0 {
            return Ok([0.0; 8]);
        }
        let a = amplitudes(p, geom, omega);
        let pi = pi_diag(q, p_y, p);
        let mut out = [0.0; 8];
        for j in 0..3 {
            let c = (a.p_plus - a.r * MIRROR[j]) * (0.5 * p * pi[j]);
            out[2 * j] = c.re;
            out[2 * j + 1] = c.im;
        }
        out[6] = a.p_minus.re;
        out[7] = a.p_minus.im;
        Ok(out)
    };
    let r = try_integrate_halfline(integrand, &kernel_spec(geom, spec))?;
    let v = r.value;
    let norm = 1.0 / (PI * EPS0);
    let mut g = Matrix3::zeros();
    for j in 0..3 {
        g[(j, j)] = Complex64::new(v[2 * j], v[2 * j + 1]) * norm;
    }
    // −q/(2ε0) P₋ L_y with (L_y)_{xz} = i, (L_y)_{zx} = −i
    let spin = Complex64::new(v[6], v[7]) * (-0.5 * q * norm);
    let l_y = rotation_generator(1);
    g[(0, 2)] += spin * l_y[(0, 2)];
    g[(2, 0)] += spin * l_y[(2, 0)];
    Ok(GreenSample { q, g })
}

/// `ω`-derivative at zero frequency of `(Σ, s⊥)` at fixed `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenDerivative {
    pub dsigma: Matrix3<f64>,
    pub ds_y: f64,
}

impl GreenDerivative {
    pub fn zero() -> Self {
        Self {
            dsigma: Matrix3::zeros(),
            ds_y: 0.0,
        }
    }
}

/// Derivative kernels `Σ′(q, z_a, 0)` and `s′_y(q, z_a, 0)` from the analytic
/// `ω`-derivatives of `P±` and `R`, integrated over `p_y`.
pub fn green_derivative_at0(
    q: f64,
    geom: &CavityGeometry,
    spec: &QuadratureSpec,
) -> Result<GreenDerivative> {
    if !geom.plate1().is_dissipative()
        && (geom.is_single_plane() || !geom.plate2().is_dissipative())
    {
        return Ok(GreenDerivative::zero());
    }
    let integrand = |p_y: f64| -> Result<[f64; 4]> {
        let p = q.hypot(p_y);
        if p == 0.0 {
            return Ok([0.0; 4]);
        }
        let d = radial_derivatives(p, geom);
        let pi = pi_diag(q, p_y, p);
        Ok([
            0.5 * p * (d.p_plus - MIRROR[0] * d.r) * pi[0],
            0.5 * p * (d.p_plus - MIRROR[1] * d.r) * pi[1],
            0.5 * p * (d.p_plus - MIRROR[2] * d.r) * pi[2],
            d.p_minus,
        ])
    };
    let v = try_integrate_halfline(integrand, &kernel_spec(geom, spec))?.value;
    let norm = 1.0 / (PI * EPS0);
    Ok(GreenDerivative {
        dsigma: Matrix3::from_diagonal(&Vector3::new(v[0], v[1], v[2])) * norm,
        ds_y: -0.5 * q * v[3] * norm,
    })
}

/// Full-line moments `∫ dq q^k Σ′(q)` and `∫ dq q^k s′_y(q)` for `k = 0..=4`,
/// the only kernel information the leading-order force integrals need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelMoments {
    pub sigma: [Matrix3<f64>; 5],
    pub spin: [f64; 5],
}

/// `∫_0^{2π} cosⁿθ dθ`
fn cos_moment(n: u32) -> f64 {
    if n % 2 == 1 {
        return 0.0;
    }
    (1..n)
        .step_by(2)
        .fold(2.0 * PI, |acc, i| acc * i as f64 / (i + 1) as f64)
}

/// `∫_0^{2π} cosᵏθ Π_jj(θ) dθ` for `j = x, y, z`.
fn pi_angular_moment(k: u32) -> [f64; 3] {
    let c_k = cos_moment(k);
    let c_k2 = cos_moment(k + 2);
    [c_k2, c_k - c_k2, c_k]
}

impl KernelMoments {
    /// Moments of a user kernel by quadrature over `q ≥ 0`. The kernel must
    /// have the planar parities: `Σ′` even and `s′_y` odd in `q`.
    pub fn from_kernel<K>(kernel: K, spec: &QuadratureSpec) -> Result<Self>
    where
        K: Fn(f64) -> Result<GreenDerivative>,
    {
        let integrand = |q: f64| -> Result<[f64; 50]> {
            let k = kernel(q)?;
            let mut out = [0.0; 50];
            let mut qk = 1.0;
            for order in 0..5 {
                let base = order * 10;
                for i in 0..9 {
                    out[base + i] = qk * k.dsigma[i];
                }
                out[base + 9] = qk * k.ds_y;
                qk *= q;
            }
            Ok(out)
        };
        let half = try_integrate_halfline(integrand, spec)?.value;
        let mut sigma = [Matrix3::zeros(); 5];
        let mut spin = [0.0; 5];
        for order in 0..5 {
            let base = order * 10;
            if order % 2 == 0 {
                sigma[order] = Matrix3::from_iterator(half[base..base + 9].iter().map(|x| 2.0 * x));
            } else {
                spin[order] = 2.0 * half[base + 9];
            }
        }
        Ok(Self { sigma, spin })
    }

    /// Moments of the cavity (or single-plane) kernels via the angular
    /// reduction: the `P±`, `R` derivatives depend on `p = |p|` only, so every
    /// moment is a radial integral times a closed-form `cosⁿθ` moment.
    pub fn cavity(geom: &CavityGeometry, spec: &QuadratureSpec) -> Result<Self> {
        let integrand = |p: f64| -> Result<[f64; 8]> {
            let d = radial_derivatives(p, geom);
            let p2 = p * p;
            let p3 = p2 * p;
            let p4 = p2 * p2;
            Ok([
                p2 * d.p_plus,
                p4 * d.p_plus,
                p4 * p2 * d.p_plus,
                p2 * d.r,
                p4 * d.r,
                p4 * p2 * d.r,
                p3 * d.p_minus,
                p4 * p * d.p_minus,
            ])
        };
        let radial = try_integrate_halfline(integrand, &kernel_spec(geom, spec))?.value;
        let norm = 1.0 / (4.0 * PI * EPS0);
        let mut sigma = [Matrix3::zeros(); 5];
        for (slot, k) in [0u32, 2, 4].iter().enumerate() {
            let ang = pi_angular_moment(*k);
            let (ip, ir) = (radial[slot], radial[3 + slot]);
            sigma[*k as usize] = Matrix3::from_diagonal(&Vector3::from_fn(|j, _| {
                (ip - MIRROR[j] * ir) * ang[j] * norm
            }));
        }
        let mut spin = [0.0; 5];
        spin[1] = -radial[6] * cos_moment(2) * norm;
        spin[3] = -radial[7] * cos_moment(4) * norm;
        Ok(Self { sigma, spin })
    }

    /// Contribution of the `R′` (anisotropy) part alone to the 4th `Σ′` moment.
    pub fn cavity_r_term_fourth_moment(
        geom: &CavityGeometry,
        spec: &QuadratureSpec,
    ) -> Result<Matrix3<f64>> {
        let ir = try_integrate_halfline(
            |p: f64| Ok(p.powi(6) * radial_derivatives(p, geom).r),
            &kernel_spec(geom, spec),
        )?
        .value;
        let ang = pi_angular_moment(4);
        let norm = 1.0 / (4.0 * PI * EPS0);
        Ok(Matrix3::from_diagonal(&Vector3::from_fn(|j, _| {
            -MIRROR[j] * ir * ang[j] * norm
        })))
    }
}
