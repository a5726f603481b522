//! Deterministic near-field channels between two coaxial planar arrays with
//! no scatterers in between.
//!
//! The scalar kernel is `g = exp(-jkR) / (4πR)`. The dyadic Green's function
//! `(I + ∇∇/k²) g` maps a source polarization to the vector field at the
//! receiver; classical ports read one field component, while an atomic
//! receiver reads the magnitude of the whole vector with the scalar kernel's
//! phase.
//!
//! Classical receivers are linear (`y = Hx`). A total-field receiver is really
//! `y = |Hx| P` with `P` holding the propagation phases, which is nonlinear in
//! `x` at short range. Capacity is evaluated on the per-link element matrix
//! from [`rydberg_channel`], not on that nonlinear map.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::arraygeom::{uniform_planar_array, wavenumber, PlanarArray, Point3};
use crate::channel::{ChannelKind, ChannelMatrix};
use crate::error::{invalid, Error, Result};
use crate::scalar::{cis, Real};

fn separation<T: Real>(r: &Point3<T>, r_src: &Point3<T>) -> Result<(T, [T; 3])> {
    let d = [r[0] - r_src[0], r[1] - r_src[1], r[2] - r_src[2]];
    let dist = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    if !dist.is_finite() {
        return Err(invalid("non-finite point coordinates"));
    }
    if dist == T::zero() {
        return Err(Error::Singularity);
    }
    Ok((dist, d))
}

/// Free-space scalar Green's function `exp(-jk|r-r'|) / (4π|r-r'|)`.
pub fn scalar_green<T: Real>(r: &Point3<T>, r_src: &Point3<T>, k: T) -> Result<Complex<T>> {
    let (dist, _) = separation(r, r_src)?;
    Ok(cis(-k * dist) / (T::lit(4.0) * T::pi() * dist))
}

/// Cartesian field / current component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarization {
    X,
    Y,
    Z,
}

impl Polarization {
    pub fn index(self) -> usize {
        match self {
            Polarization::X => 0,
            Polarization::Y => 1,
            Polarization::Z => 2,
        }
    }
}

/// 3×3 dyad, `entries[p][q] = G_pq` (field component `p`, source `q`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreensDyad<T: Real> {
    pub entries: [[Complex<T>; 3]; 3],
}

impl<T: Real> GreensDyad<T> {
    pub fn get(&self, field: Polarization, source: Polarization) -> Complex<T> {
        self.entries[field.index()][source.index()]
    }

    /// Magnitude of the field vector radiated by a unit `source` current.
    pub fn column_norm(&self, source: Polarization) -> T {
        let q = source.index();
        (0..3)
            .fold(T::zero(), |acc, p| acc + self.entries[p][q].norm_sqr())
            .sqrt()
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> T {
        self.entries
            .iter()
            .flatten()
            .fold(T::zero(), |acc, z| acc.max(z.norm_sqr().sqrt()))
    }
}

/// Closed-form dyadic Green's function for the `exp(-jkR)` kernel:
///
/// `G = g · [(1 - j/kR - 1/(kR)²) I + (-1 + 3j/kR + 3/(kR)²) R̂R̂]`.
pub fn dyadic_green<T: Real>(r: &Point3<T>, r_src: &Point3<T>, k: T) -> Result<GreensDyad<T>> {
    let (dist, d) = separation(r, r_src)?;
    let g = cis(-k * dist) / (T::lit(4.0) * T::pi() * dist);
    let inv = T::one() / (k * dist);
    let inv2 = inv * inv;
    let a = Complex::new(T::one() - inv2, -inv);
    let b = Complex::new(T::lit(3.0) * inv2 - T::one(), T::lit(3.0) * inv);
    let unit = [d[0] / dist, d[1] / dist, d[2] / dist];

    let zero = Complex::new(T::zero(), T::zero());
    let mut entries = [[zero; 3]; 3];
    for p in 0..3 {
        for q in 0..3 {
            let mut coeff = b * (unit[p] * unit[q]);
            if p == q {
                coeff += a;
            }
            entries[p][q] = g * coeff;
        }
    }
    // R̂R̂ is symmetric; copy so that G_pq == G_qp bit for bit
    for p in 0..3 {
        for q in 0..p {
            entries[p][q] = entries[q][p];
        }
    }
    Ok(GreensDyad { entries })
}

/// Ordered, duplicate-free set of port polarizations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolarizationSet(Vec<Polarization>);

impl PolarizationSet {
    pub fn new(pols: Vec<Polarization>) -> Result<Self> {
        if pols.is_empty() {
            return Err(invalid("polarization set is empty"));
        }
        for (i, p) in pols.iter().enumerate() {
            if pols[..i].contains(p) {
                return Err(invalid(format!("duplicate polarization {p:?}")));
            }
        }
        Ok(Self(pols))
    }

    pub fn single(p: Polarization) -> Self {
        Self(vec![p])
    }

    pub fn as_slice(&self) -> &[Polarization] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Two parallel, coaxial arrays facing each other across a gap.
#[derive(Debug, Clone)]
pub struct NearFieldScenario<T: Real> {
    tx: PlanarArray<T>,
    rx: PlanarArray<T>,
    separation: T,
    tx_pols: PolarizationSet,
    rx_pols: PolarizationSet,
}

impl<T: Real> NearFieldScenario<T> {
    /// The receive plane must lie strictly above the transmit plane. Both
    /// arrays are centered grids, so they are coaxial by construction.
    pub fn new(
        tx: PlanarArray<T>,
        rx: PlanarArray<T>,
        tx_pols: PolarizationSet,
        rx_pols: PolarizationSet,
    ) -> Result<Self> {
        let separation = rx.plane_z() - tx.plane_z();
        if !(separation > T::zero()) {
            return Err(invalid(format!(
                "array separation must be > 0, got {separation}"
            )));
        }
        Ok(Self {
            tx,
            rx,
            separation,
            tx_pols,
            rx_pols,
        })
    }

    /// Identical `n × n` arrays on `aperture × aperture`, transmitter at
    /// `z = 0` and receiver at `z = separation`.
    pub fn coaxial(
        aperture: T,
        n: usize,
        separation: T,
        tx_pols: PolarizationSet,
        rx_pols: PolarizationSet,
    ) -> Result<Self> {
        if !separation.is_finite() || separation <= T::zero() {
            return Err(invalid(format!(
                "array separation must be > 0, got {separation}"
            )));
        }
        let tx = uniform_planar_array(aperture, n, T::zero())?;
        let rx = uniform_planar_array(aperture, n, separation)?;
        Self::new(tx, rx, tx_pols, rx_pols)
    }

    pub fn tx(&self) -> &PlanarArray<T> {
        &self.tx
    }

    pub fn rx(&self) -> &PlanarArray<T> {
        &self.rx
    }

    pub fn separation(&self) -> T {
        self.separation
    }

    pub fn tx_pols(&self) -> &PolarizationSet {
        &self.tx_pols
    }

    pub fn rx_pols(&self) -> &PolarizationSet {
        &self.rx_pols
    }
}

/// Block channel of classical polarized ports.
///
/// Block `(q, p)` pairs receive polarization `q` with transmit polarization
/// `p`; its `(m, n)` element is `G_qp(r_m, r'_n)`. Blocks follow the order of
/// the scenario's polarization sets, giving an
/// `(N_r·|rx_pols|) × (N_t·|tx_pols|)` matrix.
pub fn classical_channel<T: Real>(sc: &NearFieldScenario<T>) -> Result<ChannelMatrix<T>> {
    let k = wavenumber::<T>();
    let (nr, nt) = (sc.rx.len(), sc.tx.len());
    let (rx_pols, tx_pols) = (sc.rx_pols.as_slice(), sc.tx_pols.as_slice());
    let zero = Complex::new(T::zero(), T::zero());
    let mut h = DMatrix::from_element(nr * rx_pols.len(), nt * tx_pols.len(), zero);
    for (m, r) in sc.rx.positions().iter().enumerate() {
        for (n, r_src) in sc.tx.positions().iter().enumerate() {
            let dyad = dyadic_green(r, r_src, k)?;
            for (bq, &q) in rx_pols.iter().enumerate() {
                for (bp, &p) in tx_pols.iter().enumerate() {
                    h[(bq * nr + m, bp * nt + n)] = dyad.get(q, p);
                }
            }
        }
    }
    Ok(ChannelMatrix::new(h, ChannelKind::NearFieldClassical))
}

/// Channel of total-field-amplitude receivers driven by a single transmit
/// polarization `i`:
///
/// `h_R(r, r') = exp(-jk|r-r'|) · ‖G(r, r') e_i‖`.
///
/// The receiver cannot tell polarizations apart, so the scenario's receive
/// polarizations are ignored. More than one transmit polarization is
/// rejected as [`Error::Unsupported`] since the combining rule for several
/// simultaneously driven source polarizations is not defined here.
pub fn rydberg_channel<T: Real>(sc: &NearFieldScenario<T>) -> Result<ChannelMatrix<T>> {
    let [tx_pol] = sc.tx_pols.as_slice() else {
        return Err(Error::Unsupported(format!(
            "total-field receiver channel needs exactly one transmit polarization, got {}",
            sc.tx_pols.len()
        )));
    };
    let k = wavenumber::<T>();
    let zero = Complex::new(T::zero(), T::zero());
    let mut h = DMatrix::from_element(sc.rx.len(), sc.tx.len(), zero);
    for (m, r) in sc.rx.positions().iter().enumerate() {
        for (n, r_src) in sc.tx.positions().iter().enumerate() {
            let dyad = dyadic_green(r, r_src, k)?;
            let (dist, _) = separation(r, r_src)?;
            h[(m, n)] = cis(-k * dist) * dyad.column_norm(*tx_pol);
        }
    }
    Ok(ChannelMatrix::new(h, ChannelKind::NearFieldRydberg))
}
