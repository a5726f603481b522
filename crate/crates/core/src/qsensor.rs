//! Two-level Rydberg sensor model on the `S1/2 <-> P1/2` manifold.
//!
//! An RF field couples the four Zeeman sublevels through π and σ± transitions
//! whose relative weights depend on the field direction `(θ, φ)` relative to
//! the quantization axis. The coupling matrix squares to `|Ω|²/4 · I` for every
//! orientation, so the spectrum is always `{±|Ω|/2}` (each two-fold) and the
//! Autler-Townes splitting equals `|Ω|`. That orientation independence is why
//! the receiver is modelled downstream as an isotropic, polarization-blind
//! scalar sensor.
//!
//! Basis order (public contract):
//! `|S1/2,-1/2>`, `|S1/2,+1/2>`, `|P1/2,-1/2>`, `|P1/2,+1/2>`.

use nalgebra::{Matrix4, SymmetricEigen};
use num_complex::Complex;

use crate::error::{invalid, Result};
use crate::scalar::{cis, Real};

/// Reduced Planck constant, J·s (CODATA 2018 exact value).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Relative tolerance on `H - H^H` accepted by [`eigenvalues`].
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Rabi frequency `Ω` in rad/s. May be complex; only `|Ω|` is observable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RabiFrequency<T: Real>(Complex<T>);

impl<T: Real> RabiFrequency<T> {
    pub fn new(omega: Complex<T>) -> Result<Self> {
        if !(omega.re.is_finite() && omega.im.is_finite()) {
            return Err(invalid("Rabi frequency must be finite"));
        }
        Ok(Self(omega))
    }

    pub fn real(omega: T) -> Result<Self> {
        Self::new(Complex::new(omega, T::zero()))
    }

    /// Rabi frequency `|μE/ħ|` driven by a field of amplitude `field` (V/m).
    pub fn from_field(field: T, mu: TransitionDipole<T>) -> Result<Self> {
        let omega = (mu.0 * field / T::lit(HBAR)).abs();
        Self::real(omega)
    }

    pub fn value(&self) -> Complex<T> {
        self.0
    }

    pub fn magnitude(&self) -> T {
        self.0.norm_sqr().sqrt()
    }
}

/// Direction of the RF electric field relative to the quantization axis `+z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldOrientation<T: Real> {
    theta: T,
    phi: T,
}

impl<T: Real> FieldOrientation<T> {
    /// `theta` in `[0, π]`, `phi` in `[0, 2π)`.
    pub fn new(theta: T, phi: T) -> Result<Self> {
        if !(theta.is_finite() && phi.is_finite()) {
            return Err(invalid("orientation angles must be finite"));
        }
        if theta < T::zero() || theta > T::pi() {
            return Err(invalid(format!("theta = {theta} outside [0, π]")));
        }
        if phi < T::zero() || phi >= T::two_pi() {
            return Err(invalid(format!("phi = {phi} outside [0, 2π)")));
        }
        Ok(Self { theta, phi })
    }

    pub fn theta(&self) -> T {
        self.theta
    }

    pub fn phi(&self) -> T {
        self.phi
    }
}

/// Transition dipole moment `μ` in C·m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionDipole<T: Real>(T);

impl<T: Real> TransitionDipole<T> {
    pub fn new(mu: T) -> Result<Self> {
        if !mu.is_finite() {
            return Err(invalid("transition dipole must be finite"));
        }
        Ok(Self(mu))
    }

    pub fn value(&self) -> T {
        self.0
    }
}

/// Interaction Hamiltonian (units of ħ·rad/s) in the basis documented at the
/// module level.
#[derive(Debug, Clone, PartialEq)]
pub struct RotatedHamiltonian<T: Real> {
    matrix: Matrix4<Complex<T>>,
}

impl<T: Real> RotatedHamiltonian<T> {
    /// Wraps an arbitrary matrix. Hermiticity is checked when the spectrum is
    /// requested, not here.
    pub fn from_matrix(matrix: Matrix4<Complex<T>>) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> &Matrix4<Complex<T>> {
        &self.matrix
    }

    pub fn trace(&self) -> Complex<T> {
        self.matrix.trace()
    }
}

/// Coupling Hamiltonian for a field of Rabi frequency `omega` pointing along
/// `orient`.
///
/// The z-component drives the π transitions (`Δm = 0`, entries 1-3 and 2-4);
/// the in-plane component drives σ± (entries 1-4 and 2-3) with phase `e^{±jφ}`.
/// At `θ = 0` the σ entries vanish and only `∓Ω/2` on the π entries remain.
pub fn build_rotated_hamiltonian<T: Real>(
    omega: RabiFrequency<T>,
    orient: FieldOrientation<T>,
) -> RotatedHamiltonian<T> {
    let half = T::lit(0.5);
    let om = omega.value();
    let pi_amp = om * (orient.theta.cos() * half);
    let sigma_amp = om * (orient.theta.sin() * half);
    let e_minus = cis(-orient.phi);
    let e_plus = cis(orient.phi);

    let zero = Complex::new(T::zero(), T::zero());
    let mut m = Matrix4::from_element(zero);
    // Upper-right block; lower-left is its conjugate transpose.
    m[(0, 2)] = -pi_amp;
    m[(0, 3)] = sigma_amp * e_minus;
    m[(1, 2)] = sigma_amp * e_plus;
    m[(1, 3)] = pi_amp;
    for r in 0..2 {
        for c in 2..4 {
            m[(c, r)] = m[(r, c)].conj();
        }
    }
    RotatedHamiltonian { matrix: m }
}

/// Eigenvalues of `h`, ascending.
pub fn eigenvalues<T: Real>(h: &RotatedHamiltonian<T>) -> Result<[T; 4]> {
    let m = &h.matrix;
    let scale = m
        .iter()
        .fold(T::zero(), |acc, z| acc.max(z.norm_sqr().sqrt()));
    if m.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(invalid("Hamiltonian has non-finite entries"));
    }
    let mut asym = T::zero();
    for r in 0..4 {
        for c in 0..4 {
            let d = m[(r, c)] - m[(c, r)].conj();
            asym = asym.max(d.norm_sqr().sqrt());
        }
    }
    if asym > T::lit(HERMITIAN_TOL) * scale {
        return Err(invalid(format!(
            "Hamiltonian is not Hermitian (max |H - H^H| = {asym})"
        )));
    }
    if scale == T::zero() {
        return Ok([T::zero(); 4]);
    }

    let eig = SymmetricEigen::new(*m);
    let mut vals = [T::zero(); 4];
    for (dst, src) in vals.iter_mut().zip(eig.eigenvalues.iter()) {
        *dst = *src;
    }
    vals.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    Ok(vals)
}

/// Autler-Townes splitting: spread between the largest and smallest
/// eigenvalue, in rad/s. Equals `|Ω|` for any orientation.
pub fn at_splitting<T: Real>(h: &RotatedHamiltonian<T>) -> Result<T> {
    let ev = eigenvalues(h)?;
    Ok(ev[3] - ev[0])
}

/// Field amplitude (V/m) recovered from a measured splitting: `E = ħΔ / |μ|`.
pub fn field_from_splitting<T: Real>(delta_at: T, mu: TransitionDipole<T>) -> Result<T> {
    if !delta_at.is_finite() || delta_at < T::zero() {
        return Err(invalid(format!(
            "splitting must be finite and >= 0, got {delta_at}"
        )));
    }
    if mu.0 == T::zero() {
        return Err(invalid("transition dipole is zero"));
    }
    Ok(T::lit(HBAR) * delta_at / mu.0.abs())
}
