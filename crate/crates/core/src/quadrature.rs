//! Product quadrature on the unit sphere: Gauss-Legendre in `cos θ` times the
//! periodic trapezoid rule in `φ`.

use crate::arraygeom::Direction;
use crate::error::{invalid, Result};
use crate::scalar::Real;

pub const DEFAULT_THETA_NODES: usize = 64;
pub const DEFAULT_PHI_NODES: usize = 128;

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes descending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let nf = n as f64;
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        nodes.push(x);
        weights.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    // enforce exact mirror symmetry; odd orders get an exact zero node
    for i in 0..n / 2 {
        let j = n - 1 - i;
        nodes[j] = -nodes[i];
        weights[j] = weights[i];
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// One quadrature node: direction, its unit vector and the solid-angle weight.
#[derive(Debug, Clone, Copy)]
pub struct SphereNode<T: Real> {
    pub direction: Direction<T>,
    pub unit: [T; 3],
    pub weight: T,
}

/// Tensor-product rule over the full sphere. Weights sum to `4π`.
#[derive(Debug, Clone)]
pub struct SphereQuadrature<T: Real> {
    theta_nodes: usize,
    phi_nodes: usize,
    nodes: Vec<SphereNode<T>>,
}

impl<T: Real> SphereQuadrature<T> {
    pub fn new(theta_nodes: usize, phi_nodes: usize) -> Result<Self> {
        if theta_nodes == 0 || phi_nodes == 0 {
            return Err(invalid("quadrature node counts must be >= 1"));
        }
        let (u, w) = gauss_legendre(theta_nodes);
        let dphi = 2.0 * std::f64::consts::PI / phi_nodes as f64;
        let mut nodes = Vec::with_capacity(theta_nodes * phi_nodes);
        for (&ui, &wi) in u.iter().zip(&w) {
            let theta = T::lit(ui.clamp(-1.0, 1.0).acos());
            for j in 0..phi_nodes {
                let phi = T::lit(dphi * j as f64);
                let direction = Direction::new_unchecked(theta, phi);
                nodes.push(SphereNode {
                    direction,
                    unit: direction.unit(),
                    weight: T::lit(wi * dphi),
                });
            }
        }
        Ok(Self {
            theta_nodes,
            phi_nodes,
            nodes,
        })
    }

    pub fn theta_nodes(&self) -> usize {
        self.theta_nodes
    }

    pub fn phi_nodes(&self) -> usize {
        self.phi_nodes
    }

    pub fn nodes(&self) -> &[SphereNode<T>] {
        &self.nodes
    }
}

impl<T: Real> Default for SphereQuadrature<T> {
    fn default() -> Self {
        Self::new(DEFAULT_THETA_NODES, DEFAULT_PHI_NODES).expect("default node counts are valid")
    }
}
