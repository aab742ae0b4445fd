use super::legendre::GaussLegendre;
use super::sum::NeumaierSum;
use nalgebra::Vector3;
use std::f64::consts::PI;

/// Product quadrature on the unit sphere: Gauss–Legendre in `cos(theta)`
/// times the trapezoid rule in `phi`.
///
/// With `order = L` the grid uses `L/2 + 1` polar and `L + 1` azimuthal
/// nodes, which integrates every polynomial in the components of `u` of
/// total degree at most `L` exactly.
#[derive(Debug, Clone)]
pub struct SphereGrid {
    pub nodes: Vec<(Vector3<f64>, f64)>,
    pub order: usize,
}

impl SphereGrid {
    pub const DEFAULT_ORDER: usize = 16;

    pub fn product(order: usize) -> Self {
        let n_theta = order / 2 + 1;
        let n_phi = order + 1;
        let gl = GaussLegendre::new(n_theta);
        let dphi = 2.0 * PI / n_phi as f64;
        let mut nodes = Vec::with_capacity(n_theta * n_phi);
        for (&ct, &wt) in gl.nodes.iter().zip(&gl.weights) {
            let st = (1.0 - ct * ct).max(0.0).sqrt();
            for j in 0..n_phi {
                let phi = (j as f64 + 0.5) * dphi;
                let u = Vector3::new(st * phi.cos(), st * phi.sin(), ct);
                nodes.push((u, wt * dphi));
            }
        }
        Self { nodes, order }
    }

    pub fn total_weight(&self) -> f64 {
        self.nodes.iter().map(|(_, w)| *w).collect::<NeumaierSum>().value()
    }

    /// Sum of `w_i g(u_i)`.
    pub fn integrate_scalar<G: Fn(&Vector3<f64>) -> f64>(&self, g: G) -> f64 {
        self.nodes
            .iter()
            .map(|(u, w)| w * g(u))
            .collect::<NeumaierSum>()
            .value()
    }

    /// Componentwise sum of `w_i g(u_i)`.
    pub fn integrate_vector<G: Fn(&Vector3<f64>) -> Vector3<f64>>(&self, g: G) -> Vector3<f64> {
        let mut acc = [NeumaierSum::new(); 3];
        for (u, w) in &self.nodes {
            let v = g(u);
            for k in 0..3 {
                acc[k].add(w * v[k]);
            }
        }
        Vector3::new(acc[0].value(), acc[1].value(), acc[2].value())
    }
}

impl Default for SphereGrid {
    fn default() -> Self {
        Self::product(Self::DEFAULT_ORDER)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_four_pi() {
        for order in [2, 5, 16, 31] {
            let g = SphereGrid::product(order);
            assert!((g.total_weight() - 4.0 * PI).abs() < 1e-12);
            for (u, _) in &g.nodes {
                assert!((u.norm() - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn odd_vector_integrates_to_zero() {
        let g = SphereGrid::default();
        let v = g.integrate_vector(|u| *u);
        assert!(v.norm() < 1e-12, "{v:?}");
    }

    #[test]
    fn transverse_projector_of_z() {
        let g = SphereGrid::default();
        let z = Vector3::z();
        let v = g.integrate_vector(|u| u.cross(&z.cross(u)));
        let want = Vector3::new(0.0, 0.0, 8.0 * PI / 3.0);
        assert!((v - want).norm() < 1e-10, "{v:?}");
    }
}
