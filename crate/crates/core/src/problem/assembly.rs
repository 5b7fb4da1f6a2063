//! Element-loop assembly of residuals and Jacobians for operators of the
//! form `<f(u), v> = int F(x, u, grad u) . grad v + G(x, u, grad u) v`.

use super::quadrature::QuadratureRule;
use crate::linalg::CsrMatrix;
use crate::mesh::{ElementKind, MeshLevel};

/// Field values at one quadrature point.
#[derive(Debug, Clone, Copy)]
pub struct QuadPoint {
    pub x: [f64; 2],
    pub u: f64,
    pub grad: [f64; 2],
    /// Interpolated auxiliary nodal field (zero when absent).
    pub aux: f64,
}

/// Derivatives of the flux `F` and scalar term `G` with respect to `u` and
/// `grad u`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Linearization {
    pub flux_u: [f64; 2],
    /// `flux_grad[a][b] = dF_a / d(grad u)_b`
    pub flux_grad: [[f64; 2]; 2],
    pub scalar_u: f64,
    pub scalar_grad: [f64; 2],
}

pub trait PointwiseForm: Send + Sync + std::fmt::Debug {
    /// `(F, G)` at a quadrature point.
    fn eval(&self, q: &QuadPoint) -> ([f64; 2], f64);
    fn linearize(&self, q: &QuadPoint) -> Linearization;
}

#[derive(Debug, Clone)]
struct QuadData {
    w: f64,
    n: [f64; 4],
    dn: [[f64; 2]; 4],
    /// Physical offset from the cell origin.
    offset: [f64; 2],
}

#[derive(Debug, Clone)]
struct Shape {
    nb: usize,
    qps: Vec<QuadData>,
}

/// Basis values and gradients at quadrature points for every cell shape of
/// one level.  All cells of a structured level are translates of one or two
/// shapes.
#[derive(Debug, Clone)]
pub struct ElementTables {
    shapes: Vec<Shape>,
}

fn triangle_shape(x: [[f64; 2]; 3], rule: &QuadratureRule) -> Shape {
    let area2 = (x[1][0] - x[0][0]) * (x[2][1] - x[0][1]) - (x[2][0] - x[0][0]) * (x[1][1] - x[0][1]);
    let grads = [
        [(x[1][1] - x[2][1]) / area2, (x[2][0] - x[1][0]) / area2],
        [(x[2][1] - x[0][1]) / area2, (x[0][0] - x[2][0]) / area2],
        [(x[0][1] - x[1][1]) / area2, (x[1][0] - x[0][0]) / area2],
    ];
    let qps = rule
        .points
        .iter()
        .zip(&rule.weights)
        .map(|(p, &w)| {
            let l = [1.0 - p[0] - p[1], p[0], p[1]];
            let mut offset = [0.0; 2];
            for a in 0..3 {
                offset[0] += l[a] * x[a][0];
                offset[1] += l[a] * x[a][1];
            }
            QuadData {
                w: w * area2.abs(),
                n: [l[0], l[1], l[2], 0.0],
                dn: [grads[0], grads[1], grads[2], [0.0; 2]],
                offset,
            }
        })
        .collect();
    Shape { nb: 3, qps }
}

impl ElementTables {
    pub fn new(level: &MeshLevel) -> Self {
        let [hx, hy] = level.spacing();
        let shapes = if level.dim() == 1 {
            let rule = QuadratureRule::interval();
            let qps = rule
                .points
                .iter()
                .zip(&rule.weights)
                .map(|(p, &w)| QuadData {
                    w: w * hx,
                    n: [1.0 - p[0], p[0], 0.0, 0.0],
                    dn: [[-1.0 / hx, 0.0], [1.0 / hx, 0.0], [0.0; 2], [0.0; 2]],
                    offset: [p[0] * hx, 0.0],
                })
                .collect();
            vec![Shape { nb: 2, qps }]
        } else {
            match level.element() {
                ElementKind::P1 => {
                    let rule = QuadratureRule::triangle();
                    vec![
                        triangle_shape([[0.0, 0.0], [hx, 0.0], [hx, hy]], &rule),
                        triangle_shape([[0.0, 0.0], [hx, hy], [0.0, hy]], &rule),
                    ]
                }
                ElementKind::Q1 => {
                    let rule = QuadratureRule::quad();
                    let qps = rule
                        .points
                        .iter()
                        .zip(&rule.weights)
                        .map(|(p, &w)| {
                            let (s, t) = (p[0], p[1]);
                            QuadData {
                                w: w * hx * hy,
                                n: [(1.0 - s) * (1.0 - t), s * (1.0 - t), s * t, (1.0 - s) * t],
                                dn: [
                                    [-(1.0 - t) / hx, -(1.0 - s) / hy],
                                    [(1.0 - t) / hx, -s / hy],
                                    [t / hx, s / hy],
                                    [-t / hx, (1.0 - s) / hy],
                                ],
                                offset: [s * hx, t * hy],
                            }
                        })
                        .collect();
                    vec![Shape { nb: 4, qps }]
                }
            }
        };
        Self { shapes }
    }
}

/// Visits cells as `(shape, vertex ids, origin)`.
fn for_each_element(
    level: &MeshLevel,
    tables: &ElementTables,
    mut f: impl FnMut(&Shape, &[usize], [f64; 2]),
) {
    let [nx, ny] = level.cells_per_axis();
    if level.dim() == 1 {
        for i in 0..nx {
            f(&tables.shapes[0], &[i, i + 1], level.coords(i));
        }
        return;
    }
    for k in 0..ny {
        for i in 0..nx {
            let v00 = level.vertex_id(i, k);
            let v10 = level.vertex_id(i + 1, k);
            let v11 = level.vertex_id(i + 1, k + 1);
            let v01 = level.vertex_id(i, k + 1);
            let origin = level.coords(v00);
            match level.element() {
                ElementKind::P1 => {
                    f(&tables.shapes[0], &[v00, v10, v11], origin);
                    f(&tables.shapes[1], &[v00, v11, v01], origin);
                }
                ElementKind::Q1 => f(&tables.shapes[0], &[v00, v10, v11, v01], origin),
            }
        }
    }
}

fn quad_point(q: &QuadData, nb: usize, verts: &[usize], origin: [f64; 2], u: &[f64], aux: Option<&[f64]>) -> QuadPoint {
    let mut val = 0.0;
    let mut grad = [0.0; 2];
    let mut a = 0.0;
    for b in 0..nb {
        let ub = u[verts[b]];
        val += q.n[b] * ub;
        grad[0] += q.dn[b][0] * ub;
        grad[1] += q.dn[b][1] * ub;
        if let Some(aux) = aux {
            a += q.n[b] * aux[verts[b]];
        }
    }
    QuadPoint {
        x: [origin[0] + q.offset[0], origin[1] + q.offset[1]],
        u: val,
        grad,
        aux: a,
    }
}

pub fn assemble_residual(
    level: &MeshLevel,
    tables: &ElementTables,
    form: &dyn PointwiseForm,
    u: &[f64],
    aux: Option<&[f64]>,
    out: &mut [f64],
) {
    out.iter_mut().for_each(|x| *x = 0.0);
    for_each_element(level, tables, |shape, verts, origin| {
        for q in &shape.qps {
            let qp = quad_point(q, shape.nb, verts, origin, u, aux);
            let (flux, scalar) = form.eval(&qp);
            for a in 0..shape.nb {
                out[verts[a]] += q.w * (flux[0] * q.dn[a][0] + flux[1] * q.dn[a][1] + scalar * q.n[a]);
            }
        }
    });
}

pub fn assemble_jacobian(
    level: &MeshLevel,
    tables: &ElementTables,
    form: &dyn PointwiseForm,
    u: &[f64],
    aux: Option<&[f64]>,
    mat: &mut CsrMatrix,
) {
    mat.zero();
    for_each_element(level, tables, |shape, verts, origin| {
        let mut local = [[0.0; 4]; 4];
        for q in &shape.qps {
            let qp = quad_point(q, shape.nb, verts, origin, u, aux);
            let lin = form.linearize(&qp);
            for b in 0..shape.nb {
                let (nb, db) = (q.n[b], q.dn[b]);
                let dflux = [
                    lin.flux_u[0] * nb + lin.flux_grad[0][0] * db[0] + lin.flux_grad[0][1] * db[1],
                    lin.flux_u[1] * nb + lin.flux_grad[1][0] * db[0] + lin.flux_grad[1][1] * db[1],
                ];
                let dscalar = lin.scalar_u * nb + lin.scalar_grad[0] * db[0] + lin.scalar_grad[1] * db[1];
                for a in 0..shape.nb {
                    local[a][b] += q.w * (dflux[0] * q.dn[a][0] + dflux[1] * q.dn[a][1] + dscalar * q.n[a]);
                }
            }
        }
        for a in 0..shape.nb {
            for b in 0..shape.nb {
                mat.add(verts[a], verts[b], local[a][b]);
            }
        }
    });
}

/// `<l, psi_p> = int g psi_p`.
pub fn assemble_load(level: &MeshLevel, tables: &ElementTables, g: &dyn Fn([f64; 2]) -> f64, out: &mut [f64]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    for_each_element(level, tables, |shape, verts, origin| {
        for q in &shape.qps {
            let x = [origin[0] + q.offset[0], origin[1] + q.offset[1]];
            let gx = g(x);
            for a in 0..shape.nb {
                out[verts[a]] += q.w * gx * q.n[a];
            }
        }
    });
}

/// Sparsity pattern of the level's stiffness matrices.
pub fn pattern(level: &MeshLevel) -> CsrMatrix {
    let rows = (0..level.num_vertices()).map(|p| level.neighbors(p)).collect();
    CsrMatrix::from_pattern(rows).expect("neighbors are valid vertex ids")
}

pub fn assemble_mass(level: &MeshLevel, tables: &ElementTables) -> CsrMatrix {
    let mut m = pattern(level);
    for_each_element(level, tables, |shape, verts, _| {
        for q in &shape.qps {
            for a in 0..shape.nb {
                for b in 0..shape.nb {
                    m.add(verts[a], verts[b], q.w * q.n[a] * q.n[b]);
                }
            }
        }
    });
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{DirichletSides, Domain, MeshHierarchy};

    #[derive(Debug)]
    struct Laplace;
    impl PointwiseForm for Laplace {
        fn eval(&self, q: &QuadPoint) -> ([f64; 2], f64) {
            (q.grad, 0.0)
        }
        fn linearize(&self, _: &QuadPoint) -> Linearization {
            Linearization {
                flux_grad: [[1.0, 0.0], [0.0, 1.0]],
                ..Default::default()
            }
        }
    }

    fn level(element: ElementKind, dim: usize) -> MeshLevel {
        let d = if dim == 1 {
            Domain::interval(0.0, 1.0).unwrap()
        } else {
            Domain::square(0.0, 1.0).unwrap()
        };
        let h = MeshHierarchy::build(d, [4, if dim == 1 { 0 } else { 3 }], 1, element, DirichletSides::ALL).unwrap();
        h.level(1).clone()
    }

    #[test]
    fn laplacian_of_x_squared_1d() {
        let l = level(ElementKind::P1, 1);
        let t = ElementTables::new(&l);
        let h = l.spacing()[0];
        let u: Vec<f64> = (0..l.num_vertices()).map(|p| l.coords(p)[0].powi(2)).collect();
        let mut r = vec![0.0; u.len()];
        assemble_residual(&l, &t, &Laplace, &u, None, &mut r);
        // -u'' = -2 so <f(u), psi_p> = -2h on interior rows
        for p in 1..u.len() - 1 {
            assert!((r[p] + 2.0 * h).abs() < 1e-13, "{}", r[p]);
        }
    }

    #[test]
    fn linear_functions_have_zero_interior_residual() {
        for e in [ElementKind::P1, ElementKind::Q1] {
            let l = level(e, 2);
            let t = ElementTables::new(&l);
            let u: Vec<f64> = (0..l.num_vertices())
                .map(|p| {
                    let x = l.coords(p);
                    1.0 + 2.0 * x[0] - 3.0 * x[1]
                })
                .collect();
            let mut r = vec![0.0; u.len()];
            assemble_residual(&l, &t, &Laplace, &u, None, &mut r);
            for p in 0..u.len() {
                if !l.is_dirichlet(p) {
                    assert!(r[p].abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn mass_and_load_integrate_constants() {
        for (e, dim) in [(ElementKind::P1, 1), (ElementKind::P1, 2), (ElementKind::Q1, 2)] {
            let l = level(e, dim);
            let t = ElementTables::new(&l);
            let m = assemble_mass(&l, &t);
            let one = vec![1.0; l.num_vertices()];
            let total: f64 = m.matvec(&one).iter().sum();
            assert!((total - 1.0).abs() < 1e-13);
            let mut load = vec![0.0; one.len()];
            assemble_load(&l, &t, &|x| x[0], &mut load);
            assert!((load.iter().sum::<f64>() - 0.5).abs() < 1e-13);
            assert!(m.is_symmetric(1e-15));
        }
    }

    #[test]
    fn stiffness_is_symmetric_and_annihilates_constants() {
        for e in [ElementKind::P1, ElementKind::Q1] {
            let l = level(e, 2);
            let t = ElementTables::new(&l);
            let mut k = pattern(&l);
            let u = vec![0.0; l.num_vertices()];
            assemble_jacobian(&l, &t, &Laplace, &u, None, &mut k);
            assert!(k.is_symmetric(1e-14));
            let ones = vec![1.0; u.len()];
            assert!(k.matvec(&ones).iter().all(|x| x.abs() < 1e-12));
        }
    }
}
