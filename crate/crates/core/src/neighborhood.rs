//! Fixed total-Lagrangian neighborhoods and kernel-gradient correction.
//!
//! Neighbor lists are built once from the reference configuration and are
//! never rebuilt. For every stored pair the reference distance, the unit
//! vector `e⁰_ab = (X_a − X_b)/|X_a − X_b|` and the reference kernel gradient
//! `∇⁰_a W_ab` are cached in compressed-row form.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::tensor::{Tensor, Vector};

#[derive(Clone, Debug, PartialEq)]
pub struct Neighborhood<const D: usize> {
    offsets: Vec<usize>,
    index: Vec<usize>,
    distance: Vec<f64>,
    unit: Vec<Vector<D>>,
    gradient: Vec<Vector<D>>,
    volume: Vec<f64>,
    /// `(X_a − X_b)·∇⁰W_ab / |X_a − X_b|²`, the radial factor used by
    /// Laplacian-type operators. Never positive.
    laplacian: Vec<f64>,
    pairs: Vec<(usize, usize, usize)>,
}

/// One entry of a particle's neighbor list.
#[derive(Clone, Copy, Debug)]
pub struct Neighbor<const D: usize> {
    pub index: usize,
    pub distance: f64,
    pub unit: Vector<D>,
    pub gradient: Vector<D>,
    pub volume: f64,
    pub laplacian: f64,
}

fn cell_of<const D: usize>(p: &Vector<D>, cell: f64) -> [i64; D] {
    std::array::from_fn(|i| (p[i] / cell).floor() as i64)
}

fn for_each_adjacent_cell<const D: usize>(c: [i64; D], mut f: impl FnMut([i64; D])) {
    let total = 3usize.pow(D as u32);
    for code in 0..total {
        let mut rem = code;
        let mut n = c;
        for k in n.iter_mut() {
            *k += (rem % 3) as i64 - 1;
            rem /= 3;
        }
        f(n);
    }
}

impl<const D: usize> Neighborhood<D> {
    /// Builds neighbor lists with a uniform cell grid in the kernel's
    /// isotropic space (cell size = cutoff). Lists are sorted by neighbor id.
    pub fn build(positions: &[Vector<D>], volumes: &[f64], kernel: &KernelSpec<D>) -> Result<Self> {
        assert_eq!(positions.len(), volumes.len(), "one volume per particle");
        for (i, (p, &v)) in positions.iter().zip(volumes).enumerate() {
            if !p.is_finite() || !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParticle(i));
            }
        }
        let cutoff = kernel.cutoff_radius();
        let unit_pos: Vec<Vector<D>> = positions
            .iter()
            .map(|p| p.component_div(&kernel.anisotropy))
            .collect();

        let mut grid: HashMap<[i64; D], Vec<usize>> = HashMap::new();
        for (i, p) in unit_pos.iter().enumerate() {
            grid.entry(cell_of(p, cutoff)).or_default().push(i);
        }

        let n = positions.len();
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let mut index = Vec::new();
        let mut candidates = Vec::new();
        for a in 0..n {
            candidates.clear();
            for_each_adjacent_cell(cell_of(&unit_pos[a], cutoff), |c| {
                if let Some(list) = grid.get(&c) {
                    candidates.extend(list.iter().copied().filter(|&b| b != a));
                }
            });
            candidates.sort_unstable();
            for &b in &candidates {
                let d = (unit_pos[a] - unit_pos[b]).norm();
                if d == 0.0 {
                    return Err(Error::DuplicatePosition {
                        a: a.min(b),
                        b: a.max(b),
                    });
                }
                if d < cutoff {
                    index.push(b);
                }
            }
            offsets.push(index.len());
        }

        let total = index.len();
        let mut distance = Vec::with_capacity(total);
        let mut unit = Vec::with_capacity(total);
        let mut gradient = Vec::with_capacity(total);
        let mut volume = Vec::with_capacity(total);
        let mut laplacian = Vec::with_capacity(total);
        let mut pairs = Vec::with_capacity(total / 2);
        for a in 0..n {
            #[allow(clippy::needless_range_loop)]
            for k in offsets[a]..offsets[a + 1] {
                let b = index[k];
                let r_vec = positions[a] - positions[b];
                let r = r_vec.norm();
                let grad = kernel.kernel_gradient(&r_vec);
                distance.push(r);
                unit.push(r_vec / r);
                gradient.push(grad);
                volume.push(volumes[b]);
                laplacian.push(r_vec.dot(&grad) / (r * r));
                if a < b {
                    pairs.push((a, b, k));
                }
            }
        }

        Ok(Self {
            offsets,
            index,
            distance,
            unit,
            gradient,
            volume,
            laplacian,
            pairs,
        })
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn neighbor_count(&self, a: usize) -> usize {
        self.offsets[a + 1] - self.offsets[a]
    }

    pub fn total_entries(&self) -> usize {
        self.index.len()
    }

    pub fn neighbors(&self, a: usize) -> impl Iterator<Item = Neighbor<D>> + '_ {
        (self.offsets[a]..self.offsets[a + 1]).map(move |k| Neighbor {
            index: self.index[k],
            distance: self.distance[k],
            unit: self.unit[k],
            gradient: self.gradient[k],
            volume: self.volume[k],
            laplacian: self.laplacian[k],
        })
    }

    pub fn neighbor_ids(&self, a: usize) -> &[usize] {
        &self.index[self.offsets[a]..self.offsets[a + 1]]
    }

    /// Every unordered pair `(a, b)` with `a < b`, plus the list slot of `b`
    /// inside `a`'s list. Ordered by `a`, then `b`.
    pub fn pairs(&self) -> &[(usize, usize, usize)] {
        &self.pairs
    }

    pub fn laplacian_factor(&self, slot: usize) -> f64 {
        self.laplacian[slot]
    }

    /// Raw moment matrix `Σ_b V_b (X_b − X_a) ⊗ ∇⁰_a W_ab`.
    pub fn moment_matrix(&self, a: usize) -> Tensor<D> {
        let mut m = Tensor::zeros();
        for nb in self.neighbors(a) {
            let dx = nb.unit * (-nb.distance);
            m += dx.outer(&nb.gradient) * nb.volume;
        }
        m
    }
}

/// Per-particle correction matrices `B⁰_a`, inverses of the moment matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrectionMatrices<const D: usize>(pub Vec<Tensor<D>>);

impl<const D: usize> CorrectionMatrices<D> {
    /// Inverts every moment matrix. Fails on the first particle whose moment
    /// matrix is numerically singular (e.g. collinear neighbors in 2D).
    pub fn compute(nbh: &Neighborhood<D>) -> Result<Self> {
        let mut out = Vec::with_capacity(nbh.len());
        for a in 0..nbh.len() {
            let m = nbh.moment_matrix(a);
            let det = m.determinant();
            let scale = (m.trace().abs() / D as f64).powi(D as i32);
            if !(det.abs() > 1e-10 * scale) {
                return Err(Error::SingularMoment { particle: a, det });
            }
            let inv = m
                .try_inverse()
                .ok_or(Error::SingularMoment { particle: a, det })?;
            out.push(inv);
        }
        Ok(Self(out))
    }

    /// Identity matrices, i.e. the uncorrected operator.
    pub fn identity(n: usize) -> Self {
        Self(vec![Tensor::identity(); n])
    }

    pub fn get(&self, a: usize) -> &Tensor<D> {
        &self.0[a]
    }
}

/// Corrected gradient of a vector field at particle `a`:
/// `(Σ_b V_b (f_b − f_a) ⊗ ∇⁰W_ab) · B⁰_a`. Exact for affine fields.
pub fn vector_gradient<const D: usize>(
    nbh: &Neighborhood<D>,
    correction: &CorrectionMatrices<D>,
    field: &[Vector<D>],
    a: usize,
) -> Tensor<D> {
    let fa = field[a];
    let mut g = Tensor::zeros();
    for nb in nbh.neighbors(a) {
        g += (field[nb.index] - fa).outer(&nb.gradient) * nb.volume;
    }
    g * correction.0[a]
}

/// Corrected gradient of a scalar field at particle `a`.
pub fn scalar_gradient<const D: usize>(
    nbh: &Neighborhood<D>,
    correction: &CorrectionMatrices<D>,
    field: &[f64],
    a: usize,
) -> Vector<D> {
    let fa = field[a];
    let mut g = Vector::zeros();
    for nb in nbh.neighbors(a) {
        g += nb.gradient * ((field[nb.index] - fa) * nb.volume);
    }
    correction.0[a].transpose() * g
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lattice_2d(
        nx: usize,
        ny: usize,
        dp: f64,
        jitter: f64,
        seed: u64,
    ) -> (Vec<Vector<2>>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pos = Vec::new();
        for i in 0..nx {
            for j in 0..ny {
                let jx = rng.gen_range(-jitter..=jitter) * dp;
                let jy = rng.gen_range(-jitter..=jitter) * dp;
                pos.push(Vector([i as f64 * dp + jx, j as f64 * dp + jy]));
            }
        }
        let vol = vec![dp * dp; pos.len()];
        (pos, vol)
    }

    #[test]
    fn single_particle_has_no_neighbors() {
        let k = KernelSpec::<2>::isotropic(0.1).unwrap();
        let nbh = Neighborhood::build(&[Vector([0.0, 0.0])], &[0.01], &k).unwrap();
        assert_eq!(nbh.neighbor_count(0), 0);
    }

    #[test]
    fn far_pair_is_not_connected() {
        let k = KernelSpec::<2>::isotropic(0.1).unwrap();
        let d = 2.0 * k.cutoff_radius();
        let nbh = Neighborhood::build(&[Vector([0.0, 0.0]), Vector([d, 0.0])], &[0.01, 0.01], &k)
            .unwrap();
        assert_eq!(nbh.neighbor_count(0), 0);
        assert_eq!(nbh.neighbor_count(1), 0);
    }

    #[test]
    fn duplicate_positions_rejected() {
        let k = KernelSpec::<2>::isotropic(0.1).unwrap();
        let err = Neighborhood::build(&[Vector([0.0, 0.0]), Vector([0.0, 0.0])], &[0.01, 0.01], &k)
            .unwrap_err();
        assert!(matches!(err, Error::DuplicatePosition { a: 0, b: 1 }));
    }

    #[test]
    fn non_positive_volume_rejected() {
        let k = KernelSpec::<2>::isotropic(0.1).unwrap();
        assert!(Neighborhood::build(&[Vector([0.0, 0.0])], &[0.0], &k).is_err());
    }

    #[test]
    fn counts_match_brute_force() {
        let dp = 1.0;
        let (pos, vol) = lattice_2d(10, 10, dp, 0.0, 0);
        let k = KernelSpec::<2>::isotropic(1.3 * dp).unwrap();
        let nbh = Neighborhood::build(&pos, &vol, &k).unwrap();
        for a in 0..pos.len() {
            let brute: Vec<usize> = (0..pos.len())
                .filter(|&b| b != a && (pos[a] - pos[b]).norm() < k.cutoff_radius())
                .collect();
            assert_eq!(nbh.neighbor_ids(a), brute.as_slice());
        }
        // interior particle of a 10x10 lattice with cutoff 2.6 dp
        assert_eq!(nbh.neighbor_count(5 * 10 + 5), 20);
    }

    #[test]
    fn pairs_are_symmetric_and_antisymmetric_gradients() {
        let (pos, vol) = lattice_2d(8, 7, 0.5, 0.1, 3);
        let k = KernelSpec::<2>::isotropic(0.65).unwrap();
        let nbh = Neighborhood::build(&pos, &vol, &k).unwrap();
        for a in 0..nbh.len() {
            for nb in nbh.neighbors(a) {
                let back = nbh
                    .neighbors(nb.index)
                    .find(|m| m.index == a)
                    .expect("symmetric lists");
                assert_eq!(back.gradient, -nb.gradient);
                assert_eq!(back.unit, -nb.unit);
                assert!(nb.laplacian <= 0.0);
            }
        }
        assert_eq!(nbh.pairs().len() * 2, nbh.total_entries());
    }

    #[test]
    fn correction_inverts_moment_matrix() {
        let (pos, vol) = lattice_2d(12, 12, 0.1, 0.1, 11);
        let k = KernelSpec::<2>::isotropic(0.13).unwrap();
        let nbh = Neighborhood::build(&pos, &vol, &k).unwrap();
        let b = CorrectionMatrices::compute(&nbh).unwrap();
        for a in 0..nbh.len() {
            let p = b.0[a] * nbh.moment_matrix(a);
            assert!((p - Tensor::identity()).max_abs() < 1e-12);
        }
    }

    #[test]
    fn collinear_neighbors_are_singular_in_2d() {
        let pos: Vec<Vector<2>> = (0..5).map(|i| Vector([i as f64 * 0.1, 0.0])).collect();
        let k = KernelSpec::<2>::isotropic(0.13).unwrap();
        let nbh = Neighborhood::build(&pos, &[0.01; 5], &k).unwrap();
        assert!(matches!(
            CorrectionMatrices::compute(&nbh),
            Err(Error::SingularMoment { particle: 0, .. })
        ));
    }

    #[test]
    fn three_particle_chain_matches_hand_inverse() {
        // symmetric stencil x = -dp, 0, dp; center particle sees both neighbors
        let dp = 0.2;
        let h = 1.3 * dp;
        let k = KernelSpec::<1>::isotropic(h).unwrap();
        let pos = [Vector([-dp]), Vector([0.0]), Vector([dp])];
        let vol = [dp; 3];
        let nbh = Neighborhood::build(&pos, &vol, &k).unwrap();
        let b = CorrectionMatrices::compute(&nbh).unwrap();
        // M = Σ V_b (x_b − x_a) dW/dr · (x_a − x_b)/r = −2 V dp W'(dp)
        let q = dp / h;
        let t = 1.0 - 0.5 * q;
        let dw = 5.0 / (8.0 * h) * (-3.0 * q * t * t) / h;
        let expected = 1.0 / (-2.0 * dp * dp * dw);
        assert!(((b.0[1][(0, 0)] - expected) / expected).abs() < 1e-12);
    }

    #[test]
    fn corrected_gradient_reproduces_affine_fields() {
        let (pos, vol) = lattice_2d(14, 11, 0.05, 0.1, 5);
        let k = KernelSpec::<2>::isotropic(1.3 * 0.05).unwrap();
        let nbh = Neighborhood::build(&pos, &vol, &k).unwrap();
        let b = CorrectionMatrices::compute(&nbh).unwrap();
        let a_mat = Tensor([[0.3, -1.2], [2.0, 0.7]]);
        let c = Vector([4.0, -1.0]);
        let field: Vec<Vector<2>> = pos.iter().map(|x| c + a_mat * *x).collect();
        for i in 0..pos.len() {
            let g = vector_gradient(&nbh, &b, &field, i);
            assert!((g - a_mat).max_abs() <= 1e-10 * a_mat.max_abs());
        }
        let grad = Vector([1.5, -0.25]);
        let scalar: Vec<f64> = pos.iter().map(|x| 3.0 + grad.dot(x)).collect();
        for i in 0..pos.len() {
            let g = scalar_gradient(&nbh, &b, &scalar, i);
            assert!((g - grad).max_abs() <= 1e-10 * grad.max_abs());
        }
    }
}
