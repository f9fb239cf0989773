//! Extrinsic geometry of the graph hypersurface `x -> (x, f(x))`.
//!
//! In graph coordinates the induced metric is `g = I + grad f grad f^T`, the
//! upward unit normal is `(-grad f, 1) / W` with `W = sqrt(1 + |grad f|^2)`,
//! and the second fundamental form is `Hess f / W`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Serialize, Serializer};

use crate::autodiff::{evaluate_jet, Jet2};
use crate::error::Result;
use crate::prodfun::FunctionExpr;

fn rows<S: Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
    rows.serialize(s)
}

#[derive(Debug, Clone, Serialize)]
pub struct GraphGeometry {
    pub point: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    #[serde(rename = "W")]
    pub w: f64,
    pub unit_normal: Vec<f64>,
    #[serde(serialize_with = "rows")]
    pub metric: DMatrix<f64>,
    #[serde(serialize_with = "rows")]
    pub second_fundamental_form: DMatrix<f64>,
    #[serde(serialize_with = "rows")]
    pub shape_operator: DMatrix<f64>,
    /// Ascending.
    pub principal_curvatures: Vec<f64>,
    pub gauss_kronecker: f64,
    /// `|det Hess f|` over the Hadamard bound of `Hess f`, in `[0, 1]`.
    pub gauss_kronecker_scaled: f64,
    /// Largest `|R_ijkl|` of the induced metric.
    pub riemann_max: f64,
    pub flatness_residual: f64,
}

/// Residuals of the identities tying the computed quantities together.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GeometryConsistency {
    /// `|det S - G|`, relative to `max(|G|, Hadamard bound of S)`.
    pub shape_det: f64,
    /// `|det g - W^2| / W^2`.
    pub metric_det: f64,
    /// `|prod kappa_i - G|`, relative as for `shape_det`.
    pub curvature_product: f64,
    pub normal_norm: f64,
    /// Largest `|<normal, (e_i, f_i)>|`.
    pub normal_tangent: f64,
}

/// Product of the Euclidean row norms; bounds `|det m|`.
pub fn hadamard_bound(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.norm()).product()
}

fn relative_to(a: f64, b: f64, scale: f64) -> f64 {
    let diff = (a - b).abs();
    if diff == 0.0 {
        0.0
    } else {
        diff / scale.max(a.abs()).max(b.abs())
    }
}

/// `R_ijkl = h_ik h_jl - h_il h_jk`, the Gauss equation for a hypersurface of
/// Euclidean space.
pub fn riemann_component(h: &DMatrix<f64>, i: usize, j: usize, k: usize, l: usize) -> f64 {
    h[(i, k)] * h[(j, l)] - h[(i, l)] * h[(j, k)]
}

fn riemann_max(h: &DMatrix<f64>) -> f64 {
    let n = h.nrows();
    let mut max = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            for k in 0..n {
                for l in (k + 1)..n {
                    max = max.max(riemann_component(h, i, j, k, l).abs());
                }
            }
        }
    }
    max
}

/// Embedding point `(x_1, ..., x_n, f(x))`.
pub fn graph_point(expr: &FunctionExpr, x: &[f64]) -> Result<Vec<f64>> {
    let v = expr.value(x)?;
    let mut p = x.to_vec();
    p.push(v);
    Ok(p)
}

fn w_of(gradient: &[f64]) -> f64 {
    (1.0 + gradient.iter().map(|g| g * g).sum::<f64>()).sqrt()
}

/// `det(Hess f) / W^(n+2)`.
pub fn gauss_kronecker(expr: &FunctionExpr, x: &[f64]) -> Result<f64> {
    let jet = evaluate_jet(expr, x)?;
    let n = jet.dim() as i32;
    Ok(jet.hessian_matrix().determinant() / w_of(jet.gradient()).powi(n + 2))
}

/// Largest Riemann component normalized by `1 + |h|_F^2`; zero exactly when
/// every 2x2 minor of the Hessian vanishes.
pub fn flatness_residual(expr: &FunctionExpr, x: &[f64]) -> Result<f64> {
    Ok(graph_geometry(expr, x)?.flatness_residual)
}

pub fn graph_geometry(expr: &FunctionExpr, x: &[f64]) -> Result<GraphGeometry> {
    let jet = evaluate_jet(expr, x)?;
    Ok(GraphGeometry::from_jet(x, &jet))
}

impl GraphGeometry {
    pub fn from_jet(point: &[f64], jet: &Jet2) -> Self {
        let n = jet.dim();
        let grad = nalgebra::DVector::from_column_slice(jet.gradient());
        let hess = jet.hessian_matrix();
        let w = w_of(jet.gradient());
        let w2 = w * w;

        let mut unit_normal: Vec<f64> = jet.gradient().iter().map(|g| -g / w).collect();
        unit_normal.push(1.0 / w);

        let outer = &grad * grad.transpose();
        let metric = DMatrix::identity(n, n) + &outer;
        let metric_inv = DMatrix::identity(n, n) - &outer / w2;
        let sff = &hess / w;
        let shape_operator = &metric_inv * &sff;

        let det_h = hess.determinant();
        let gauss_kronecker = det_h / w.powi(n as i32 + 2);
        let bound = hadamard_bound(&hess);
        let gauss_kronecker_scaled = if bound == 0.0 { 0.0 } else { det_h.abs() / bound };

        let riemann_max = riemann_max(&sff);
        let flatness_residual = riemann_max / (1.0 + sff.norm_squared());

        Self {
            point: point.to_vec(),
            value: jet.value(),
            gradient: jet.gradient().to_vec(),
            w,
            unit_normal,
            principal_curvatures: principal_curvatures(&sff, &metric),
            metric,
            second_fundamental_form: sff,
            shape_operator,
            gauss_kronecker,
            gauss_kronecker_scaled,
            riemann_max,
            flatness_residual,
        }
    }

    pub fn dim(&self) -> usize {
        self.metric.nrows()
    }

    pub fn consistency(&self) -> GeometryConsistency {
        let g = self.gauss_kronecker;
        let det_s = self.shape_operator.determinant();
        let s_bound = hadamard_bound(&self.shape_operator);
        let product: f64 = self.principal_curvatures.iter().product();
        let w2 = self.w * self.w;
        let n = self.dim();
        let normal_tangent =
            (0..n).map(|i| (self.unit_normal[i] + self.unit_normal[n] * self.gradient[i]).abs()).fold(0.0, f64::max);
        GeometryConsistency {
            shape_det: relative_to(det_s, g, s_bound),
            metric_det: (spd_determinant(&self.metric) - w2).abs() / w2,
            curvature_product: relative_to(product, g, s_bound),
            normal_norm: (self.unit_normal.iter().map(|v| v * v).sum::<f64>().sqrt() - 1.0).abs(),
            normal_tangent,
        }
    }
}

/// Determinant of a symmetric positive-definite matrix from its Cholesky
/// factor; its rounding error grows like `cond^(1/2)` rather than `cond`.
pub fn spd_determinant(m: &DMatrix<f64>) -> f64 {
    match m.clone().cholesky() {
        Some(c) => c.l().diagonal().iter().map(|d| d * d).product(),
        None => m.determinant(),
    }
}

/// Eigenvalues of the symmetric pencil `h v = kappa g v`, ascending. With
/// `g = L L^T` they are the eigenvalues of `L^-1 h L^-T`.
fn principal_curvatures(sff: &DMatrix<f64>, metric: &DMatrix<f64>) -> Vec<f64> {
    let l = metric.clone().cholesky().expect("induced metric is positive definite").l();
    let l_inv = l.try_inverse().expect("Cholesky factor is invertible");
    let m = &l_inv * sff * l_inv.transpose();
    let m = (&m + m.transpose()) * 0.5;
    let mut k: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    k.sort_by(f64::total_cmp);
    k
}
