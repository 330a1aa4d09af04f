//! P1 finite-element assembly on a [`Mesh`].

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::sparse::{SparseOperator, TripletBuilder};
use crate::tensor::SymTensor;

/// Barycentric quadrature rule on a triangle; weights sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// Centroid rule, exact for degree 1.
    pub fn centroid() -> Self {
        Self {
            points: vec![[1.0 / 3.0; 3]],
            weights: vec![1.0],
        }
    }

    /// Vertex rule, exact for degree 1. This is the rule behind mass lumping.
    pub fn vertex() -> Self {
        Self {
            points: vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            weights: vec![1.0 / 3.0; 3],
        }
    }

    /// Edge-midpoint rule, exact for degree 2.
    pub fn edge_midpoint() -> Self {
        Self {
            points: vec![[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]],
            weights: vec![1.0 / 3.0; 3],
        }
    }

    /// Strang–Fix six-point rule, exact for degree 4.
    pub fn degree4() -> Self {
        let (a, b) = (0.445948490915965, 0.091576213509771);
        let (wa, wb) = (0.223381589678011, 0.109951743655322);
        Self {
            points: vec![
                [a, a, 1.0 - 2.0 * a],
                [a, 1.0 - 2.0 * a, a],
                [1.0 - 2.0 * a, a, a],
                [b, b, 1.0 - 2.0 * b],
                [b, 1.0 - 2.0 * b, b],
                [1.0 - 2.0 * b, b, b],
            ],
            weights: vec![wa, wa, wa, wb, wb, wb],
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `∫ f` over the mesh, with `f(element, point_in_physical_coords, barycentric)`.
    pub fn integrate<F>(&self, mesh: &Mesh, mut f: F) -> f64
    where
        F: FnMut(usize, [f64; 2], [f64; 3]) -> f64,
    {
        let mut total = 0.0;
        for (k, tri) in mesh.triangles().iter().enumerate() {
            let p: Vec<[f64; 2]> = tri.iter().map(|&n| mesh.nodes()[n]).collect();
            let mut local = 0.0;
            for (lam, w) in self.points.iter().zip(&self.weights) {
                let x = [
                    lam[0] * p[0][0] + lam[1] * p[1][0] + lam[2] * p[2][0],
                    lam[0] * p[0][1] + lam[1] * p[1][1] + lam[2] * p[2][1],
                ];
                local += w * f(k, x, *lam);
            }
            total += mesh.areas()[k] * local;
        }
        total
    }
}

/// P1 mass matrix: consistent (`area/12·(1+δ_ab)`) or row-sum lumped.
pub fn assemble_mass(mesh: &Mesh, lumped: bool) -> SparseOperator {
    if lumped {
        return SparseOperator::diagonal(&lumped_weights(mesh));
    }
    let n = mesh.num_nodes();
    let mut t = TripletBuilder::with_capacity(n, n, 9 * mesh.num_triangles());
    for (tri, &area) in mesh.triangles().iter().zip(mesh.areas()) {
        for (a, &i) in tri.iter().enumerate() {
            for (b, &j) in tri.iter().enumerate() {
                let m = if a == b { area / 6.0 } else { area / 12.0 };
                t.add(i, j, m);
            }
        }
    }
    t.build(true)
}

/// Nodal lumped-mass weights `m_i = Σ_{K∋i} |K|/3`.
pub fn lumped_weights(mesh: &Mesh) -> Vec<f64> {
    let mut m = vec![0.0; mesh.num_nodes()];
    for (tri, &area) in mesh.triangles().iter().zip(mesh.areas()) {
        for &i in tri {
            m[i] += area / 3.0;
        }
    }
    m
}

/// Scalar diffusion stiffness `∫ κ_K ∇φ_j · ∇φ_i` with one SPD tensor per
/// element. No boundary conditions are imposed (pure Neumann).
pub fn assemble_stiffness(mesh: &Mesh, coeff: &[SymTensor]) -> Result<SparseOperator> {
    if coeff.len() != mesh.num_triangles() {
        return Err(Error::Dimension {
            expected: mesh.num_triangles(),
            got: coeff.len(),
        });
    }
    if let Some((k, c)) = coeff.iter().enumerate().find(|(_, c)| !c.is_spd()) {
        return Err(Error::config(
            "conductivity.spd",
            format!("coefficient on element {k} is not SPD: {c:?}"),
        ));
    }
    let n = mesh.num_nodes();
    let mut t = TripletBuilder::with_capacity(n, n, 9 * mesh.num_triangles());
    for (k, tri) in mesh.triangles().iter().enumerate() {
        let g = mesh.shape_gradients(k);
        let area = mesh.areas()[k];
        for a in 0..3 {
            let kg = coeff[k].apply(g[a]);
            for b in 0..3 {
                t.add(tri[b], tri[a], area * (kg[0] * g[b][0] + kg[1] * g[b][1]));
            }
        }
    }
    Ok(t.build(true))
}

/// Stiffness with the identity coefficient on every element.
pub fn assemble_laplacian(mesh: &Mesh) -> SparseOperator {
    assemble_stiffness(mesh, &vec![SymTensor::IDENTITY; mesh.num_triangles()])
        .expect("identity coefficient is SPD")
}

/// Element-wise symmetric gradient of a P1 vector field (`u[node] = [ux, uy]`).
pub fn element_strain(mesh: &Mesh, u: &[[f64; 2]]) -> Result<Vec<SymTensor>> {
    if u.len() != mesh.num_nodes() {
        return Err(Error::Dimension {
            expected: mesh.num_nodes(),
            got: u.len(),
        });
    }
    Ok((0..mesh.num_triangles())
        .map(|k| {
            let g = mesh.shape_gradients(k);
            let tri = mesh.triangles()[k];
            let mut e = SymTensor::ZERO;
            for a in 0..3 {
                e += shape_strain(g[a], u[tri[a]]);
            }
            e
        })
        .collect())
}

/// Symmetric gradient of `φ·v` for a shape function with gradient `g`.
pub(crate) fn shape_strain(g: [f64; 2], v: [f64; 2]) -> SymTensor {
    SymTensor::new(g[0] * v[0], 0.5 * (g[1] * v[0] + g[0] * v[1]), g[1] * v[1])
}

/// Strain of the basis function for component `comp` at local vertex `a`.
pub(crate) fn basis_strain(g: [f64; 2], comp: usize) -> SymTensor {
    let v = if comp == 0 { [1.0, 0.0] } else { [0.0, 1.0] };
    shape_strain(g, v)
}

/// Applies a scalar operator componentwise to a nodal 2-vector field.
pub fn apply_componentwise(op: &SparseOperator, v: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let x: Vec<f64> = v.iter().map(|p| p[0]).collect();
    let y: Vec<f64> = v.iter().map(|p| p[1]).collect();
    op.mul_vec(&x)
        .into_iter()
        .zip(op.mul_vec(&y))
        .map(|(a, b)| [a, b])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_rect_mesh;

    fn unit(n: usize) -> Mesh {
        build_rect_mesh(n, n, 1.0, 1.0).unwrap()
    }

    #[test]
    fn quadrature_weights_sum_to_one() {
        for q in [
            QuadratureRule::centroid(),
            QuadratureRule::vertex(),
            QuadratureRule::edge_midpoint(),
            QuadratureRule::degree4(),
        ] {
            assert!(q.weights.iter().all(|&w| w > 0.0));
            assert!((q.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn mass_partition_of_unity() {
        for n in [1, 3, 8] {
            let m = assemble_mass(&unit(n), false);
            assert!((m.total_sum() - 1.0).abs() < 1e-13);
            let ml = assemble_mass(&unit(n), true);
            assert!((ml.total_sum() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn lumped_is_positive_diagonal() {
        let ml = assemble_mass(&unit(4), true);
        for i in 0..ml.nrows() {
            for (j, v) in ml.row(i) {
                assert_eq!(i, j);
                assert!(v > 0.0);
            }
        }
    }

    #[test]
    fn mass_of_constant() {
        let mesh = build_rect_mesh(3, 5, 2.0, 0.5).unwrap();
        let m = assemble_mass(&mesh, false);
        let c = 1.7;
        let x = vec![c; mesh.num_nodes()];
        assert!((m.bilinear(&x, &x) - c * c * 1.0).abs() < 1e-13);
    }

    #[test]
    fn stiffness_kernel_and_linear_energy() {
        let mesh = unit(5);
        let k = assemble_laplacian(&mesh);
        let ones = vec![1.0; mesh.num_nodes()];
        assert!(k.mul_vec(&ones).iter().all(|v| v.abs() < 1e-13));
        let x: Vec<f64> = mesh.nodes().iter().map(|p| p[0]).collect();
        assert!((k.bilinear(&x, &x) - 1.0).abs() < 1e-12);
        assert!(k.symmetry_defect() < 1e-12);
    }

    #[test]
    fn stiffness_scales_linearly() {
        let mesh = unit(3);
        let k1 = assemble_laplacian(&mesh);
        let k2 = assemble_stiffness(&mesh, &vec![2.0 * SymTensor::IDENTITY; mesh.num_triangles()])
            .unwrap();
        assert_eq!(k1.scaled(2.0), k2);
    }

    #[test]
    fn stiffness_rejects_non_spd() {
        let mesh = unit(1);
        let bad = vec![SymTensor::new(1.0, 2.0, 1.0); 2];
        assert!(matches!(assemble_stiffness(&mesh, &bad), Err(Error::Config(_))));
    }

    #[test]
    fn strain_of_linear_fields() {
        let mesh = build_rect_mesh(3, 2, 1.0, 1.0).unwrap();
        let cases: [(fn([f64; 2]) -> [f64; 2], SymTensor); 3] = [
            (|p| [p[0], 0.0], SymTensor::new(1.0, 0.0, 0.0)),
            (|p| [-p[1], p[0]], SymTensor::ZERO),
            (|p| [p[1], p[0]], SymTensor::new(0.0, 1.0, 0.0)),
        ];
        for (field, expected) in cases {
            let u: Vec<_> = mesh.nodes().iter().map(|&p| field(p)).collect();
            for e in element_strain(&mesh, &u).unwrap() {
                assert!((e - expected).norm() < 1e-13, "{e:?}");
            }
        }
    }

    #[test]
    fn strain_size_mismatch() {
        let mesh = unit(2);
        assert!(matches!(
            element_strain(&mesh, &[[0.0; 2]; 3]),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn reassembly_is_bit_identical() {
        let mesh = unit(6);
        assert_eq!(assemble_mass(&mesh, false), assemble_mass(&mesh, false));
        assert_eq!(assemble_laplacian(&mesh), assemble_laplacian(&mesh));
    }

    #[test]
    fn quadratic_integration_exact() {
        let mesh = unit(4);
        let v = QuadratureRule::edge_midpoint().integrate(&mesh, |_, x, _| x[0] * x[1]);
        assert!((v - 0.25).abs() < 1e-14);
    }
}
