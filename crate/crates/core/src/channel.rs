use nalgebra::DMatrix;
use num_complex::Complex;

use crate::scalar::Real;

/// How a channel matrix was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelKind {
    /// One draw of the correlated Rayleigh (Kronecker) far-field model.
    FarFieldRandom,
    /// Deterministic near-field channel built from dyadic Green's entries.
    NearFieldClassical,
    /// Deterministic near-field channel of total-field-amplitude receivers.
    NearFieldRydberg,
    /// Supplied directly by the caller.
    External,
}

/// Complex `N_r × N_t` channel matrix: rows are receive ports, columns
/// transmit ports.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix<T: Real> {
    matrix: DMatrix<Complex<T>>,
    kind: ChannelKind,
}

impl<T: Real> ChannelMatrix<T> {
    pub fn new(matrix: DMatrix<Complex<T>>, kind: ChannelKind) -> Self {
        Self { matrix, kind }
    }

    pub fn external(matrix: DMatrix<Complex<T>>) -> Self {
        Self::new(matrix, ChannelKind::External)
    }

    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    pub fn matrix(&self) -> &DMatrix<Complex<T>> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex<T>> {
        self.matrix
    }

    pub fn n_rx(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_tx(&self) -> usize {
        self.matrix.ncols()
    }

    /// Sum of `|h_ij|²`.
    pub fn power(&self) -> T {
        self.matrix
            .iter()
            .fold(T::zero(), |acc, z| acc + z.norm_sqr())
    }

    pub fn frobenius_norm(&self) -> T {
        self.power().sqrt()
    }

    /// Mean `|h_ij|²` over all entries.
    pub fn mean_entry_power(&self) -> T {
        let count = T::from_usize(self.matrix.len()).expect("representable");
        self.power() / count
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self {
            matrix: self.matrix.map(|z| z * factor),
            kind: self.kind,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.matrix
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}
