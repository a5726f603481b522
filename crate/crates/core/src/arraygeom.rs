//! Planar array layouts and element radiation patterns.
//!
//! All lengths are in wavelengths, so the free-space wavenumber is `2π`.

use num_complex::Complex;

use crate::error::{invalid, Result};
use crate::scalar::{cis, Real};

/// A point in 3-space, wavelength units.
pub type Point3<T> = [T; 3];

/// Wavenumber for positions expressed in wavelengths.
pub fn wavenumber<T: Real>() -> T {
    T::two_pi()
}

/// Far-field amplitude law of one element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PatternKind {
    /// Unit amplitude in every direction (atomic receiver).
    Isotropic,
    /// `cos θ` amplitude with θ measured from the array normal (`+z`).
    Dipole,
}

/// `N × N` elements on a centered `L × L` square grid in the plane `z = plane_z`.
///
/// Elements are stored row by row: index `m = iy * N + ix`, with `ix` running
/// along `+x`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarArray<T: Real> {
    side: usize,
    aperture: T,
    plane_z: T,
    pitch: T,
    positions: Vec<Point3<T>>,
}

/// Builds a uniform `n × n` grid on an `aperture × aperture` square.
///
/// Pitch is `aperture / n`, so each element occupies an `(L/N)²` cell and the
/// outermost elements sit half a pitch inside the aperture edge.
pub fn uniform_planar_array<T: Real>(aperture: T, n: usize, plane_z: T) -> Result<PlanarArray<T>> {
    if n == 0 {
        return Err(invalid("array side count must be >= 1"));
    }
    if !aperture.is_finite() || aperture <= T::zero() {
        return Err(invalid(format!("aperture must be > 0, got {aperture}")));
    }
    if !plane_z.is_finite() {
        return Err(invalid("plane_z must be finite"));
    }
    let nt = T::from_usize(n).expect("side count representable");
    let pitch = aperture / nt;
    let center = T::from_usize(n - 1).expect("representable") * T::lit(0.5);
    let coord = |i: usize| (T::from_usize(i).expect("representable") - center) * pitch;

    let mut positions = Vec::with_capacity(n * n);
    for iy in 0..n {
        for ix in 0..n {
            positions.push([coord(ix), coord(iy), plane_z]);
        }
    }
    Ok(PlanarArray {
        side: n,
        aperture,
        plane_z,
        pitch,
        positions,
    })
}

impl<T: Real> PlanarArray<T> {
    pub fn side_count(&self) -> usize {
        self.side
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn aperture(&self) -> T {
        self.aperture
    }

    pub fn plane_z(&self) -> T {
        self.plane_z
    }

    /// Element spacing `L / N`, wavelengths.
    pub fn pitch(&self) -> T {
        self.pitch
    }

    /// Area of one element cell `(L / N)²`, square wavelengths.
    pub fn element_area(&self) -> T {
        self.pitch * self.pitch
    }

    pub fn positions(&self) -> &[Point3<T>] {
        &self.positions
    }

    /// Grid indices `(ix, iy)` of element `m`.
    pub fn grid_index(&self, m: usize) -> (usize, usize) {
        (m % self.side, m / self.side)
    }

    /// Pattern of element `m`.
    pub fn element(&self, m: usize, kind: PatternKind) -> ElementPattern<T> {
        ElementPattern::new(kind, self.positions[m])
    }
}

/// Propagation direction on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction<T: Real> {
    theta: T,
    phi: T,
}

impl<T: Real> Direction<T> {
    /// `theta` in `[0, π]`, `phi` in `[0, 2π)`.
    pub fn new(theta: T, phi: T) -> Result<Self> {
        if !(theta.is_finite() && phi.is_finite()) {
            return Err(invalid("direction angles must be finite"));
        }
        if theta < T::zero() || theta > T::pi() || phi < T::zero() || phi >= T::two_pi() {
            return Err(invalid(format!("direction ({theta}, {phi}) out of range")));
        }
        Ok(Self { theta, phi })
    }

    pub(crate) fn new_unchecked(theta: T, phi: T) -> Self {
        Self { theta, phi }
    }

    pub fn theta(&self) -> T {
        self.theta
    }

    pub fn phi(&self) -> T {
        self.phi
    }

    /// Unit vector `(sinθ cosφ, sinθ sinφ, cosθ)`.
    pub fn unit(&self) -> Point3<T> {
        let s = self.theta.sin();
        [s * self.phi.cos(), s * self.phi.sin(), self.theta.cos()]
    }
}

/// One element: amplitude law plus reference position `r'`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementPattern<T: Real> {
    pub kind: PatternKind,
    pub position: Point3<T>,
}

impl<T: Real> ElementPattern<T> {
    pub fn new(kind: PatternKind, position: Point3<T>) -> Self {
        Self { kind, position }
    }

    /// Amplitude factor without the steering phase.
    pub fn amplitude(&self, dir: &Direction<T>) -> T {
        match self.kind {
            PatternKind::Isotropic => T::one(),
            PatternKind::Dipole => dir.theta.cos(),
        }
    }
}

/// Complex far-field pattern `A(θ) · exp(+j k·r')`.
pub fn pattern_value<T: Real>(p: &ElementPattern<T>, dir: &Direction<T>) -> Complex<T> {
    let u = dir.unit();
    let r = &p.position;
    let phase = wavenumber::<T>() * (u[0] * r[0] + u[1] * r[1] + u[2] * r[2]);
    cis(phase) * p.amplitude(dir)
}
