//! Far-field stochastic channels in an isotropic scattering environment.
//!
//! Receive correlation comes from the overlap integral of element patterns
//! over the full sphere; element efficiency from the Hannan area bound; and
//! channel draws from the Kronecker model `H = √e · R^{1/2} · H_w` with an
//! i.i.d. circular Gaussian core and an ideal (uncorrelated) transmitter.

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::arraygeom::{pattern_value, wavenumber, ElementPattern, PatternKind, PlanarArray};
use crate::channel::{ChannelKind, ChannelMatrix};
use crate::error::{invalid, Error, Result};
use crate::linalg::PackedLower;
use crate::quadrature::SphereQuadrature;
use crate::scalar::{cis, complex_normal, Real};

/// Most negative eigenvalue of `R` tolerated (and clamped to zero) before the
/// matrix is rejected as non-PSD.
pub const PSD_CLAMP_TOL: f64 = 1e-6;

/// Eigenmodes of `R` are discarded from the small end while their summed
/// eigenvalues stay below this. The resulting capacity bias is at most
/// `γ · e · MODE_DROP_TOL / ln 2` bits/s/Hz.
pub const MODE_DROP_TOL: f64 = 1e-9;

const UNIT_DIAGONAL_TOL: f64 = 1e-12;

/// Pattern-overlap correlation coefficient between two elements.
///
/// Numerator and both self-powers use the same quadrature, so `m == n`
/// yields exactly one.
pub fn correlation<T: Real>(
    p_m: &ElementPattern<T>,
    p_n: &ElementPattern<T>,
    quad: &SphereQuadrature<T>,
) -> Result<Complex<T>> {
    let zero = Complex::new(T::zero(), T::zero());
    let (mut cross, mut pow_m, mut pow_n) = (zero, T::zero(), T::zero());
    let mut total = T::zero();
    for node in quad.nodes() {
        total += node.weight;
        let em = pattern_value(p_m, &node.direction);
        let en = pattern_value(p_n, &node.direction);
        cross += em * en.conj() * node.weight;
        pow_m += em.norm_sqr() * node.weight;
        pow_n += en.norm_sqr() * node.weight;
    }
    normalize_overlap(cross, pow_m, pow_n, total)
}

/// `total_weight` sets the scale below which a self-power counts as zero.
fn normalize_overlap<T: Real>(
    cross: Complex<T>,
    pow_m: T,
    pow_n: T,
    total_weight: T,
) -> Result<Complex<T>> {
    let floor = T::epsilon() * T::epsilon() * total_weight;
    if !(pow_m > floor && pow_n > floor) {
        return Err(Error::DegeneratePattern);
    }
    Ok(cross / (pow_m * pow_n).sqrt())
}

/// Receive-side spatial correlation matrix with quadrature metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix<T: Real> {
    matrix: DMatrix<Complex<T>>,
    theta_nodes: usize,
    phi_nodes: usize,
}

impl<T: Real> CorrelationMatrix<T> {
    /// Wraps a caller-supplied matrix after checking it is square, Hermitian
    /// and has unit diagonal.
    pub fn from_matrix(matrix: DMatrix<Complex<T>>) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 || matrix.ncols() != n {
            return Err(invalid("correlation matrix must be square and non-empty"));
        }
        let tol = T::lit(UNIT_DIAGONAL_TOL);
        for i in 0..n {
            let d = matrix[(i, i)] - Complex::new(T::one(), T::zero());
            if d.norm_sqr().sqrt() > tol {
                return Err(invalid(format!("correlation diagonal entry {i} is not 1")));
            }
            for j in 0..i {
                if (matrix[(i, j)] - matrix[(j, i)].conj()).norm_sqr().sqrt() > tol {
                    return Err(invalid("correlation matrix is not Hermitian"));
                }
            }
        }
        Ok(Self {
            matrix,
            theta_nodes: 0,
            phi_nodes: 0,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            matrix: DMatrix::identity(n, n),
            theta_nodes: 0,
            phi_nodes: 0,
        }
    }

    pub fn matrix(&self) -> &DMatrix<Complex<T>> {
        &self.matrix
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.nrows() == 0
    }

    /// `(θ, φ)` node counts used to build the matrix; zero when supplied
    /// directly.
    pub fn quadrature_nodes(&self) -> (usize, usize) {
        (self.theta_nodes, self.phi_nodes)
    }

    /// Two co-located orthogonal ports per element with zero cross-polar
    /// correlation: `diag(R, R)`. Ports are ordered polarization-major.
    pub fn dual_polarized(&self) -> Self {
        let n = self.len();
        let zero = Complex::new(T::zero(), T::zero());
        let mut m = DMatrix::from_element(2 * n, 2 * n, zero);
        m.view_mut((0, 0), (n, n)).copy_from(&self.matrix);
        m.view_mut((n, n), (n, n)).copy_from(&self.matrix);
        Self {
            matrix: m,
            theta_nodes: self.theta_nodes,
            phi_nodes: self.phi_nodes,
        }
    }

    /// Eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<T> {
        let mut ev: Vec<T> = SymmetricEigen::new(self.matrix.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
        ev
    }
}

/// Correlation matrix of `arr` with every element using pattern `kind`.
///
/// The overlap of two steered patterns depends only on the displacement
/// `r_m - r_n`, so each distinct grid offset is integrated once. The upper
/// triangle is filled and mirrored, making the result Hermitian exactly.
pub fn correlation_matrix<T: Real>(
    arr: &PlanarArray<T>,
    kind: PatternKind,
    quad: &SphereQuadrature<T>,
) -> Result<CorrelationMatrix<T>> {
    let n = arr.len();
    let side = arr.side_count() as isize;
    let pitch = arr.pitch();
    let k = wavenumber::<T>();

    // amplitude² · weight per node; shared by every offset
    let origin = ElementPattern::new(kind, [T::zero(); 3]);
    let nodes: Vec<(T, T, T)> = quad
        .nodes()
        .iter()
        .map(|nd| {
            let a = origin.amplitude(&nd.direction);
            (
                a * a * nd.weight,
                nd.unit[0] * k * pitch,
                nd.unit[1] * k * pitch,
            )
        })
        .collect();
    let self_power = nodes.iter().fold(T::zero(), |acc, nd| acc + nd.0);
    let total_weight = quad
        .nodes()
        .iter()
        .fold(T::zero(), |acc, nd| acc + nd.weight);

    // Offsets (dx, dy) with dy > 0, or dy == 0 and dx >= 0; the rest are conjugates.
    let offsets: Vec<(isize, isize)> = (0..side)
        .flat_map(|dy| (-(side - 1)..side).map(move |dx| (dx, dy)))
        .filter(|&(dx, dy)| dy > 0 || dx >= 0)
        .collect();
    let values: Vec<Result<Complex<T>>> = offsets
        .par_iter()
        .map(|&(dx, dy)| {
            let (fx, fy) = (
                T::from_isize(dx).expect("offset"),
                T::from_isize(dy).expect("offset"),
            );
            let zero = Complex::new(T::zero(), T::zero());
            let cross = nodes
                .iter()
                .fold(zero, |acc, &(w, kx, ky)| acc + cis(kx * fx + ky * fy) * w);
            normalize_overlap(cross, self_power, self_power, total_weight)
        })
        .collect();
    let mut table = HashMap::with_capacity(offsets.len());
    for (off, v) in offsets.into_iter().zip(values) {
        table.insert(off, v?);
    }

    let zero = Complex::new(T::zero(), T::zero());
    let mut m = DMatrix::from_element(n, n, zero);
    for a in 0..n {
        let (ax, ay) = arr.grid_index(a);
        for b in a..n {
            let (bx, by) = arr.grid_index(b);
            let (dx, dy) = (ax as isize - bx as isize, ay as isize - by as isize);
            let r = if dy > 0 || (dy == 0 && dx >= 0) {
                table[&(dx, dy)]
            } else {
                table[&(-dx, -dy)].conj()
            };
            m[(a, b)] = r;
            m[(b, a)] = r.conj();
        }
    }
    for a in 0..n {
        m[(a, a)] = Complex::new(m[(a, a)].re, T::zero());
    }
    Ok(CorrelationMatrix {
        matrix: m,
        theta_nodes: quad.theta_nodes(),
        phi_nodes: quad.phi_nodes(),
    })
}

/// Which Hannan bound applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EfficiencyKind {
    /// `e = π S / λ²` (directivity ≈ 4 element).
    Dipole,
    /// `e = 4π S / λ²` (unit-directivity element).
    Atomic,
}

/// Uncapped Hannan bound for element area `area` in `λ²`.
pub fn hannan_bound<T: Real>(area: T, kind: EfficiencyKind) -> Result<T> {
    if !area.is_finite() || area <= T::zero() {
        return Err(invalid(format!("element area must be > 0, got {area}")));
    }
    Ok(match kind {
        EfficiencyKind::Dipole => T::pi() * area,
        EfficiencyKind::Atomic => T::lit(4.0) * T::pi() * area,
    })
}

/// Element efficiency `min(1, bound)`.
pub fn hannan_efficiency<T: Real>(area: T, kind: EfficiencyKind) -> Result<T> {
    Ok(hannan_bound(area, kind)?.min(T::one()))
}

/// Receive-side factors of `R`, computed once per ensemble.
#[derive(Debug, Clone)]
struct ReceiveFactor<T: Real> {
    sqrt_matrix: DMatrix<Complex<T>>,
    /// `√λ` of the retained eigenmodes, descending.
    mode_gains: Vec<T>,
    min_eigenvalue: T,
}

impl<T: Real> ReceiveFactor<T> {
    fn new(r: &CorrelationMatrix<T>) -> Result<Self> {
        let eig = SymmetricEigen::new(r.matrix().clone());
        let min_eigenvalue = eig
            .eigenvalues
            .iter()
            .copied()
            .reduce(T::min)
            .unwrap_or(T::zero());
        if min_eigenvalue < -T::lit(PSD_CLAMP_TOL) {
            return Err(Error::Numerical(format!(
                "correlation matrix is not PSD (min eigenvalue {min_eigenvalue})"
            )));
        }
        let clamped: Vec<T> = eig.eigenvalues.iter().map(|&l| l.max(T::zero())).collect();
        let n = r.len();

        let mut u_scaled = eig.eigenvectors.clone();
        for (j, &l) in clamped.iter().enumerate() {
            let s = l.sqrt();
            u_scaled.column_mut(j).iter_mut().for_each(|z| *z *= s);
        }
        let sqrt_matrix = &u_scaled * eig.eigenvectors.adjoint();

        let mut sorted = clamped;
        sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
        let mut keep = n;
        let mut dropped = T::zero();
        while keep > 1 && dropped + sorted[keep - 1] <= T::lit(MODE_DROP_TOL) {
            dropped += sorted[keep - 1];
            keep -= 1;
        }
        let mode_gains = sorted[..keep].iter().map(|l| l.sqrt()).collect();
        Ok(Self {
            sqrt_matrix,
            mode_gains,
            min_eigenvalue,
        })
    }
}

/// Everything needed to draw far-field channel realizations.
#[derive(Debug, Clone)]
pub struct ChannelEnsembleSpec<T: Real> {
    correlation: CorrelationMatrix<T>,
    efficiency: T,
    n_tx: usize,
    seed: u64,
    trials: usize,
    factor: ReceiveFactor<T>,
}

impl<T: Real> ChannelEnsembleSpec<T> {
    /// Fails if `R` is not PSD within [`PSD_CLAMP_TOL`], or on out-of-range
    /// efficiency / counts.
    pub fn new(
        correlation: CorrelationMatrix<T>,
        efficiency: T,
        n_tx: usize,
        seed: u64,
        trials: usize,
    ) -> Result<Self> {
        if !(efficiency > T::zero() && efficiency <= T::one()) {
            return Err(invalid(format!(
                "efficiency must lie in (0, 1], got {efficiency}"
            )));
        }
        if n_tx == 0 {
            return Err(invalid("transmit port count must be >= 1"));
        }
        if trials == 0 {
            return Err(invalid("trial count must be >= 1"));
        }
        let factor = ReceiveFactor::new(&correlation)?;
        Ok(Self {
            correlation,
            efficiency,
            n_tx,
            seed,
            trials,
            factor,
        })
    }

    pub fn correlation(&self) -> &CorrelationMatrix<T> {
        &self.correlation
    }

    pub fn efficiency(&self) -> T {
        self.efficiency
    }

    pub fn n_rx(&self) -> usize {
        self.correlation.len()
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn trials(&self) -> usize {
        self.trials
    }

    /// Same ensemble with a different efficiency; reuses the factorization.
    pub fn with_efficiency(&self, efficiency: T) -> Result<Self> {
        if !(efficiency > T::zero() && efficiency <= T::one()) {
            return Err(invalid(format!(
                "efficiency must lie in (0, 1], got {efficiency}"
            )));
        }
        Ok(Self {
            efficiency,
            ..self.clone()
        })
    }

    /// `R^{1/2}` from the clamped eigendecomposition.
    pub fn receive_sqrt(&self) -> &DMatrix<Complex<T>> {
        &self.factor.sqrt_matrix
    }

    pub fn min_eigenvalue(&self) -> T {
        self.factor.min_eigenvalue
    }

    /// Number of eigenmodes of `R` retained by [`sample_modal_channel`].
    pub fn retained_modes(&self) -> usize {
        self.factor.mode_gains.len()
    }
}

/// Random stream for one trial. ChaCha's 64-bit stream id keeps trials
/// independent of evaluation order.
pub fn trial_rng(seed: u64, trial_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial_index);
    rng
}

/// One realization `H = √e · R^{1/2} · H_w` (`N_r × N_t`).
///
/// `H_w` is filled column by column from the trial's stream; the same
/// `(seed, trial_index)` always returns the same matrix.
pub fn sample_channel<T: Real>(
    spec: &ChannelEnsembleSpec<T>,
    trial_index: u64,
) -> ChannelMatrix<T> {
    let mut rng = trial_rng(spec.seed, trial_index);
    let white = DMatrix::from_fn(spec.n_rx(), spec.n_tx, |_, _| {
        complex_normal::<T, _>(&mut rng)
    });
    let h = spec.receive_sqrt() * white * Complex::new(spec.efficiency.sqrt(), T::zero());
    ChannelMatrix::new(h, ChannelKind::FarFieldRandom)
}

/// A channel with the same capacity distribution as [`sample_channel`],
/// expressed in the eigenbasis of `R`.
///
/// With `R = U Λ Uᴴ`, `det(I + c H Hᴴ)` is unchanged by the left rotation
/// `Uᴴ`, and `Uᴴ H_w` is again i.i.d. circular Gaussian. The draw is therefore
/// `√e · Λ^{1/2} · W` (`r × N_t`), keeping only the `r` retained modes. Costs
/// `O(r · N_t)` to sample instead of `O(N_r² · N_t)`.
pub fn sample_modal_channel<T: Real>(
    spec: &ChannelEnsembleSpec<T>,
    trial_index: u64,
) -> ChannelMatrix<T> {
    let mut rng = trial_rng(spec.seed, trial_index);
    let gains: Vec<T> = spec
        .factor
        .mode_gains
        .iter()
        .map(|&g| g * spec.efficiency.sqrt())
        .collect();
    let h = DMatrix::from_fn(gains.len(), spec.n_tx, |i, _| {
        complex_normal::<T, _>(&mut rng) * gains[i]
    });
    ChannelMatrix::new(h, ChannelKind::FarFieldRandom)
}

/// Lower-triangular `A` (`r × r`) such that `A Aᴴ` has the distribution of
/// `M Mᴴ` for the `r × N_t` draw `M` of [`sample_modal_channel`].
///
/// `W Wᴴ` with `W` an `r × N_t` i.i.d. circular Gaussian block is complex
/// Wishart; its Bartlett factor `L` has `L_ii² ~ Gamma(N_t - i, 1)` and
/// `L_ij ~ CN(0, 1)` below the diagonal, all independent. Row `i` of `A` is
/// row `i` of `L` scaled by `√(e λ_i)`. Sampling and forming the Gram matrix
/// then cost `O(r²)` and `O(r³)` regardless of `N_t`.
///
/// Returns `None` when `N_t` is smaller than the retained mode count.
pub fn sample_wishart_factor<T: Real>(
    spec: &ChannelEnsembleSpec<T>,
    trial_index: u64,
) -> Option<PackedLower<T>> {
    let r = spec.retained_modes();
    if spec.n_tx < r {
        return None;
    }
    let mut rng = trial_rng(spec.seed, trial_index);
    let root_e = spec.efficiency.sqrt();
    let mut a = PackedLower::zeros(r);
    for i in 0..r {
        let gain = spec.factor.mode_gains[i] * root_e;
        let row = a.row_mut(i);
        for z in row[..i].iter_mut() {
            *z = complex_normal::<T, _>(&mut rng) * gain;
        }
        let shape = T::from_usize(spec.n_tx - i).expect("representable");
        row[i] = Complex::new(T::standard_gamma(shape, &mut rng).sqrt() * gain, T::zero());
    }
    Some(a)
}
