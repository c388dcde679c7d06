//! Continuous problems `-div(Lambda grad u) = f` on the unit square and
//! their per-cell reductions.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{Point2, Vec2};
use crate::mesh::{Cell, Mesh};
use crate::par;

/// Symmetric 2x2 matrix `[[xx, xy], [xy, yy]]`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Sym2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Sym2 {
    pub const IDENTITY: Sym2 = Sym2 {
        xx: 1.0,
        xy: 0.0,
        yy: 1.0,
    };

    pub const fn new(xx: f64, xy: f64, yy: f64) -> Self {
        Self { xx, xy, yy }
    }

    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    pub fn apply(&self, v: Vec2) -> Vec2 {
        Vec2::new(self.xx * v.x + self.xy * v.y, self.xy * v.x + self.yy * v.y)
    }

    pub fn inverse(&self) -> Option<Sym2> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        Some(Sym2::new(self.yy / d, -self.xy / d, self.xx / d))
    }

    /// Eigenvalues in increasing order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let m = 0.5 * self.trace();
        let r = (0.25 * (self.xx - self.yy).powi(2) + self.xy * self.xy).sqrt();
        (m - r, m + r)
    }

    pub fn is_positive_definite(&self) -> bool {
        self.xx > 0.0 && self.det() > 0.0
    }

    /// Spectral norm.
    pub fn norm(&self) -> f64 {
        let (a, b) = self.eigenvalues();
        a.abs().max(b.abs())
    }

    fn scale_add(self, s: f64, o: Sym2) -> Sym2 {
        Sym2::new(self.xx + s * o.xx, self.xy + s * o.xy, self.yy + s * o.yy)
    }
}

pub type ScalarFn = Arc<dyn Fn(Point2) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(Point2) -> Vec2 + Send + Sync>;
type TensorFn = Arc<dyn Fn(Point2) -> Sym2 + Send + Sync>;

/// A symmetric, uniformly coercive diffusion tensor field.
#[derive(Clone)]
pub struct TensorField {
    eval: TensorFn,
    /// Coercivity floor: `Lambda(x) xi . xi >= alpha0 |xi|^2`.
    pub alpha0: f64,
}

impl TensorField {
    pub fn new(alpha0: f64, f: impl Fn(Point2) -> Sym2 + Send + Sync + 'static) -> Self {
        Self {
            eval: Arc::new(f),
            alpha0,
        }
    }

    pub fn constant(m: Sym2) -> Self {
        let alpha0 = m.eigenvalues().0;
        Self::new(alpha0, move |_| m)
    }

    pub fn eval(&self, x: Point2) -> Sym2 {
        (self.eval)(x)
    }

    /// Spot-checks coercivity at the given points.
    pub fn check_coercive(&self, points: &[Point2]) -> Result<()> {
        for &p in points {
            let (lmin, _) = self.eval(p).eigenvalues();
            if lmin < self.alpha0 * (1.0 - 1e-12) {
                return Err(Error::Problem(format!(
                    "tensor smallest eigenvalue {lmin:e} at ({}, {}) is below the coercivity floor {:e}",
                    p.x, p.y, self.alpha0
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Debug for TensorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TensorField")
            .field("alpha0", &self.alpha0)
            .finish_non_exhaustive()
    }
}

/// Exact solution and its gradient.
#[derive(Clone)]
pub struct ExactSolution {
    pub u: ScalarFn,
    pub grad: VectorFn,
}

#[derive(Clone)]
pub struct ProblemCase {
    pub name: String,
    pub tensor: TensorField,
    pub source: ScalarFn,
    pub exact: Option<ExactSolution>,
    /// Dirichlet data on the boundary.
    pub dirichlet: ScalarFn,
    /// Whether `dirichlet` is identically zero.
    pub homogeneous: bool,
}

impl fmt::Debug for ProblemCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemCase")
            .field("name", &self.name)
            .field("tensor", &self.tensor)
            .field("has_exact", &self.exact.is_some())
            .field("homogeneous", &self.homogeneous)
            .finish_non_exhaustive()
    }
}

impl ProblemCase {
    pub fn exact_u(&self, x: Point2) -> Option<f64> {
        self.exact.as_ref().map(|e| (e.u)(x))
    }

    /// Same case with the source multiplied by `c`. Exact data is dropped unless `c == 1`.
    pub fn with_scaled_source(&self, c: f64) -> ProblemCase {
        let f = self.source.clone();
        ProblemCase {
            name: format!("{}*{c}", self.name),
            source: Arc::new(move |x| c * f(x)),
            exact: if c == 1.0 { self.exact.clone() } else { None },
            ..self.clone()
        }
    }

    /// Same tensor, given source, zero boundary data, no exact solution.
    pub fn with_source(
        &self,
        name: &str,
        source: impl Fn(Point2) -> f64 + Send + Sync + 'static,
    ) -> ProblemCase {
        ProblemCase {
            name: name.to_string(),
            tensor: self.tensor.clone(),
            source: Arc::new(source),
            exact: None,
            dirichlet: Arc::new(|_| 0.0),
            homogeneous: true,
        }
    }
}

/// `Lambda = I`, `u = x1(1-x1) x2(1-x2)`.
pub fn case_isotropic() -> ProblemCase {
    ProblemCase {
        name: "isotropic".into(),
        tensor: TensorField::constant(Sym2::IDENTITY),
        source: Arc::new(|p: Point2| 2.0 * (p.x * (1.0 - p.x) + p.y * (1.0 - p.y))),
        exact: Some(ExactSolution {
            u: Arc::new(|p: Point2| p.x * (1.0 - p.x) * p.y * (1.0 - p.y)),
            grad: Arc::new(|p: Point2| {
                Vec2::new(
                    (1.0 - 2.0 * p.x) * p.y * (1.0 - p.y),
                    p.x * (1.0 - p.x) * (1.0 - 2.0 * p.y),
                )
            }),
        }),
        dirichlet: Arc::new(|_| 0.0),
        homogeneous: true,
    }
}

const LEPOTIER_CENTER: Point2 = Point2::new(-0.1, -0.1);
const LEPOTIER_EPS: f64 = 1e-4;

/// Le Potier's heterogeneous anisotropic tensor, anisotropy ratio `1e4`.
pub fn lepotier_tensor(x: Point2) -> Sym2 {
    let (a, b) = (x.x - LEPOTIER_CENTER.x, x.y - LEPOTIER_CENTER.y);
    let eps = LEPOTIER_EPS;
    Sym2::new(
        b * b + eps * a * a,
        -(1.0 - eps) * a * b,
        a * a + eps * b * b,
    )
}

/// Le Potier's test with `u = sin(pi x1) sin(pi x2)`.
pub fn case_lepotier() -> ProblemCase {
    let eps = LEPOTIER_EPS;
    let c = LEPOTIER_CENTER;
    // Smallest eigenvalue eps |x - c|^2 is minimal at the origin corner.
    let alpha0 = eps * c.dot(c);
    ProblemCase {
        name: "lepotier".into(),
        tensor: TensorField::new(alpha0, lepotier_tensor),
        source: Arc::new(move |p: Point2| {
            let (a, b) = (p.x - c.x, p.y - c.y);
            let (s1, c1) = (PI * p.x).sin_cos();
            let (s2, c2) = (PI * p.y).sin_cos();
            PI * PI * (1.0 + eps) * s1 * s2 * (a * a + b * b)
                + PI * (1.0 - 3.0 * eps) * c1 * s2 * a
                + PI * (1.0 - 3.0 * eps) * s1 * c2 * b
                + 2.0 * PI * PI * (1.0 - eps) * c1 * c2 * a * b
        }),
        exact: Some(ExactSolution {
            u: Arc::new(|p: Point2| (PI * p.x).sin() * (PI * p.y).sin()),
            grad: Arc::new(|p: Point2| {
                let (s1, c1) = (PI * p.x).sin_cos();
                let (s2, c2) = (PI * p.y).sin_cos();
                Vec2::new(PI * c1 * s2, PI * s1 * c2)
            }),
        }),
        dirichlet: Arc::new(|_| 0.0),
        homogeneous: true,
    }
}

/// Constant tensor used by the affine patch case.
pub const PATCH_TENSOR: Sym2 = Sym2::new(2.0, 0.5, 1.0);

/// Affine exact solution `u = a + b . x` with constant tensor and `f = 0`,
/// boundary data taken from `u`.
pub fn case_patch_affine_with(lambda: Sym2, a: f64, b: Vec2) -> ProblemCase {
    ProblemCase {
        name: "patch-affine".into(),
        tensor: TensorField::constant(lambda),
        source: Arc::new(|_| 0.0),
        exact: Some(ExactSolution {
            u: Arc::new(move |p: Point2| a + b.dot(p)),
            grad: Arc::new(move |_| b),
        }),
        dirichlet: Arc::new(move |p: Point2| a + b.dot(p)),
        homogeneous: false,
    }
}

pub fn case_patch_affine() -> ProblemCase {
    case_patch_affine_with(PATCH_TENSOR, 0.5, Vec2::new(1.0, -2.0))
}

pub const CASE_NAMES: [&str; 3] = ["isotropic", "lepotier", "patch-affine"];

pub fn case_by_name(name: &str) -> Result<ProblemCase> {
    match name {
        "isotropic" => Ok(case_isotropic()),
        "lepotier" => Ok(case_lepotier()),
        "patch-affine" => Ok(case_patch_affine()),
        other => Err(Error::Problem(format!(
            "unknown case `{other}` (expected one of {})",
            CASE_NAMES.join(", ")
        ))),
    }
}

/// Gauss rules on the reference triangle: barycentric points and weights summing to 1.
fn triangle_rule(order: usize) -> Result<&'static [([f64; 3], f64)]> {
    const R1: [([f64; 3], f64); 1] = [([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 1.0)];
    const A: f64 = 2.0 / 3.0;
    const B: f64 = 1.0 / 6.0;
    const R2: [([f64; 3], f64); 3] = [
        ([A, B, B], 1.0 / 3.0),
        ([B, A, B], 1.0 / 3.0),
        ([B, B, A], 1.0 / 3.0),
    ];
    const P1: f64 = 0.445_948_490_915_964_9;
    const Q1: f64 = 1.0 - 2.0 * P1;
    const W1: f64 = 0.223_381_589_678_011_5;
    const P2: f64 = 0.091_576_213_509_770_74;
    const Q2: f64 = 1.0 - 2.0 * P2;
    const W2: f64 = 0.109_951_743_655_321_9;
    const R4: [([f64; 3], f64); 6] = [
        ([Q1, P1, P1], W1),
        ([P1, Q1, P1], W1),
        ([P1, P1, Q1], W1),
        ([Q2, P2, P2], W2),
        ([P2, Q2, P2], W2),
        ([P2, P2, Q2], W2),
    ];
    match order {
        1 => Ok(&R1),
        2 => Ok(&R2),
        4 => Ok(&R4),
        other => Err(Error::Config(format!(
            "unsupported quadrature order {other} (expected 1, 2 or 4)"
        ))),
    }
}

/// Integrates over a cell by fanning it into triangles from its centroid.
fn integrate_cell<T: Copy>(
    cell: &Cell,
    order: usize,
    zero: T,
    f: impl Fn(Point2) -> T,
    axpy: impl Fn(T, f64, T) -> T,
) -> Result<T> {
    let rule = triangle_rule(order)?;
    let c = cell.polygon.centroid();
    let mut acc = zero;
    for (a, b) in cell.polygon.sides() {
        let area = 0.5 * (a - c).cross(b - c);
        for &([la, lb, lc], w) in rule {
            let p = Point2::new(
                la * a.x + lb * b.x + lc * c.x,
                la * a.y + lb * b.y + lc * c.y,
            );
            acc = axpy(acc, w * area, f(p));
        }
    }
    Ok(acc)
}

/// `(1/m(K)) int_K Lambda`.
pub fn cell_average_tensor(cell: &Cell, tensor: &TensorField, quad_order: usize) -> Result<Sym2> {
    let sum = integrate_cell(
        cell,
        quad_order,
        Sym2::default(),
        |p| tensor.eval(p),
        |acc, w, v| acc.scale_add(w, v),
    )?;
    let avg = Sym2::new(sum.xx / cell.area, sum.xy / cell.area, sum.yy / cell.area);
    if !avg.is_positive_definite() {
        return Err(Error::Problem(format!(
            "cell-averaged tensor {avg:?} is not positive definite"
        )));
    }
    Ok(avg)
}

/// `int_K f`.
pub fn cell_source_integral(
    cell: &Cell,
    source: &(dyn Fn(Point2) -> f64 + Send + Sync),
    quad_order: usize,
) -> Result<f64> {
    integrate_cell(cell, quad_order, 0.0, source, |acc, w, v| acc + w * v)
}

/// Per-cell reduction of the continuous data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellData {
    pub lambda: Sym2,
    pub lambda_inv: Sym2,
    /// `int_K f`.
    pub source: f64,
}

pub fn cell_data(cell: &Cell, case: &ProblemCase, quad_order: usize) -> Result<CellData> {
    let lambda = cell_average_tensor(cell, &case.tensor, quad_order)?;
    let lambda_inv = lambda
        .inverse()
        .ok_or_else(|| Error::Problem("singular cell tensor".into()))?;
    let source = cell_source_integral(cell, case.source.as_ref(), quad_order)?;
    Ok(CellData {
        lambda,
        lambda_inv,
        source,
    })
}

/// Cell data for every cell of the mesh.
pub fn mesh_cell_data(
    mesh: &Mesh,
    case: &ProblemCase,
    quad_order: usize,
    exec: par::Execution,
) -> Result<Vec<CellData>> {
    par::map_indexed(exec, mesh.num_cells(), |k| {
        cell_data(&mesh.cells[k], case, quad_order)
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{gen_distorted_quads, gen_uniform_squares, Distortion};

    fn fd_residual(case: &ProblemCase, p: Point2, h: f64) -> f64 {
        // -div(Lambda grad u) by central differences of the flux Lambda grad u,
        // with grad u itself from central differences of u.
        let u = case.exact.as_ref().unwrap().u.clone();
        let grad = |q: Point2| {
            Vec2::new(
                (u(q + Vec2::new(h, 0.0)) - u(q - Vec2::new(h, 0.0))) / (2.0 * h),
                (u(q + Vec2::new(0.0, h)) - u(q - Vec2::new(0.0, h))) / (2.0 * h),
            )
        };
        let flux = |q: Point2| case.tensor.eval(q).apply(grad(q));
        let dx = (flux(p + Vec2::new(h, 0.0)).x - flux(p - Vec2::new(h, 0.0)).x) / (2.0 * h);
        let dy = (flux(p + Vec2::new(0.0, h)).y - flux(p - Vec2::new(0.0, h)).y) / (2.0 * h);
        -(dx + dy) - (case.source)(p)
    }

    #[test]
    fn isotropic_values() {
        let c = case_isotropic();
        let mid = Point2::new(0.5, 0.5);
        assert_eq!(c.exact_u(mid), Some(1.0 / 16.0));
        assert_eq!((c.source)(mid), 1.0);
        for t in [0.0, 0.3, 0.77, 1.0] {
            for p in [
                Point2::new(t, 0.0),
                Point2::new(t, 1.0),
                Point2::new(0.0, t),
                Point2::new(1.0, t),
            ] {
                assert_eq!(c.exact_u(p), Some(0.0));
            }
        }
        let r = fd_residual(&c, Point2::new(0.31, 0.72), 1e-4);
        assert!(r.abs() < 1e-5, "{r}");
    }

    #[test]
    fn lepotier_eigenvalues() {
        for p in [
            Point2::new(0.0, 0.0),
            Point2::new(0.3, 0.8),
            Point2::new(1.0, 1.0),
        ] {
            let r2 = (p - LEPOTIER_CENTER).dot(p - LEPOTIER_CENTER);
            let (lo, hi) = lepotier_tensor(p).eigenvalues();
            assert!((lo - LEPOTIER_EPS * r2).abs() < 1e-14 * r2);
            assert!((hi - r2).abs() < 1e-14 * r2);
            assert!((hi / lo - 1e4).abs() < 1e-6);
        }
    }

    #[test]
    fn lepotier_l2_norm_is_half() {
        // Tensor-product Gauss-Legendre (10 points) in each direction.
        let (x, w) = gauss_legendre_10();
        let c = case_lepotier();
        let u = &c.exact.as_ref().unwrap().u;
        let mut s = 0.0;
        for i in 0..10 {
            for j in 0..10 {
                let p = Point2::new(0.5 * (x[i] + 1.0), 0.5 * (x[j] + 1.0));
                s += 0.25 * w[i] * w[j] * u(p).powi(2);
            }
        }
        assert!((s.sqrt() - 0.5).abs() < 1e-10, "{}", s.sqrt());
    }

    fn gauss_legendre_10() -> ([f64; 10], [f64; 10]) {
        let x = [
            -0.973_906_528_517_171_7,
            -0.865_063_366_688_984_5,
            -0.679_409_568_299_024_4,
            -0.433_395_394_129_247_2,
            -0.148_874_338_981_631_2,
            0.148_874_338_981_631_2,
            0.433_395_394_129_247_2,
            0.679_409_568_299_024_4,
            0.865_063_366_688_984_5,
            0.973_906_528_517_171_7,
        ];
        let w = [
            0.066_671_344_308_688_1,
            0.149_451_349_150_580_6,
            0.219_086_362_515_982,
            0.269_266_719_309_996_4,
            0.295_524_224_714_752_9,
            0.295_524_224_714_752_9,
            0.269_266_719_309_996_4,
            0.219_086_362_515_982,
            0.149_451_349_150_580_6,
            0.066_671_344_308_688_1,
        ];
        (x, w)
    }

    #[test]
    fn lepotier_source_matches_finite_differences() {
        use rand::{Rng, SeedableRng};
        let c = case_lepotier();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let p = Point2::new(rng.gen_range(0.01..0.99), rng.gen_range(0.01..0.99));
            let r = fd_residual(&c, p, 1e-4);
            assert!(r.abs() <= 1e-5, "residual {r} at {p:?}");
        }
    }

    #[test]
    fn lepotier_is_coercive_and_vanishes_on_boundary() {
        let c = case_lepotier();
        let pts: Vec<Point2> = (0..=10)
            .flat_map(|i| (0..=10).map(move |j| Point2::new(i as f64 / 10.0, j as f64 / 10.0)))
            .collect();
        c.tensor.check_coercive(&pts).unwrap();
        for t in [0.0, 0.25, 0.5, 1.0] {
            assert!(c.exact_u(Point2::new(t, 0.0)).unwrap().abs() < 1e-15);
            assert!(c.exact_u(Point2::new(1.0, t)).unwrap().abs() < 1e-15);
        }
        let weak = TensorField::new(1.0, |_| Sym2::new(0.5, 0.0, 0.5));
        assert!(weak.check_coercive(&pts).is_err());
    }

    #[test]
    fn constant_tensor_average_is_exact() {
        let m = gen_distorted_quads(
            4,
            Distortion::Jitter {
                amplitude: 0.2,
                seed: 1,
            },
        )
        .unwrap();
        let lam = Sym2::new(2.0, 0.5, 1.0);
        let field = TensorField::constant(lam);
        for order in [1, 2, 4] {
            for cell in &m.cells {
                let a = cell_average_tensor(cell, &field, order).unwrap();
                assert!((a.xx - lam.xx).abs() < 1e-14);
                assert!((a.xy - lam.xy).abs() < 1e-14);
                assert!((a.yy - lam.yy).abs() < 1e-14);
            }
        }
        let id =
            cell_average_tensor(&m.cells[0], &TensorField::constant(Sym2::IDENTITY), 2).unwrap();
        assert!((id.xx - 1.0).abs() < 1e-14 && id.xy.abs() < 1e-14);
    }

    #[test]
    fn linear_tensor_average_is_exact_at_order_one() {
        let m = gen_distorted_quads(
            3,
            Distortion::Jitter {
                amplitude: 0.2,
                seed: 5,
            },
        )
        .unwrap();
        let field = TensorField::new(0.1, |p| Sym2::new(2.0 + p.x, 0.3 * p.y, 3.0 - p.x + p.y));
        for cell in &m.cells {
            // A linear field averages to its value at the centroid.
            let c = cell.polygon.centroid();
            let exact = field.eval(c);
            let a = cell_average_tensor(cell, &field, 1).unwrap();
            assert!((a.xx - exact.xx).abs() < 1e-12);
            assert!((a.xy - exact.xy).abs() < 1e-12);
            assert!((a.yy - exact.yy).abs() < 1e-12);
        }
    }

    #[test]
    fn lepotier_quadrature_self_consistency() {
        let m = gen_uniform_squares(40).unwrap();
        let c = case_lepotier();
        let mut worst_t: f64 = 0.0;
        let mut worst_f: f64 = 0.0;
        for cell in &m.cells {
            let a2 = cell_average_tensor(cell, &c.tensor, 2).unwrap();
            let a4 = cell_average_tensor(cell, &c.tensor, 4).unwrap();
            worst_t = worst_t
                .max((a2.xx - a4.xx).abs())
                .max((a2.xy - a4.xy).abs())
                .max((a2.yy - a4.yy).abs());
            let f2 = cell_source_integral(cell, c.source.as_ref(), 2).unwrap();
            let f4 = cell_source_integral(cell, c.source.as_ref(), 4).unwrap();
            worst_f = worst_f.max((f2 - f4).abs());
        }
        assert!(worst_t <= 1e-10, "{worst_t}");
        assert!(worst_f <= 1e-8, "{worst_f}");
    }

    #[test]
    fn source_integrals() {
        let m = gen_uniform_squares(1).unwrap();
        let cell = &m.cells[0];
        for order in [1, 2, 4] {
            assert!((cell_source_integral(cell, &|_| 1.0, order).unwrap() - 1.0).abs() < 1e-15);
            assert!((cell_source_integral(cell, &|p| p.x, order).unwrap() - 0.5).abs() < 1e-15);
        }
        assert!(matches!(
            cell_source_integral(cell, &|_| 1.0, 3),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn non_spd_average_is_rejected() {
        let m = gen_uniform_squares(1).unwrap();
        let bad = TensorField::new(1.0, |_| Sym2::new(1.0, 2.0, 1.0));
        assert!(matches!(
            cell_average_tensor(&m.cells[0], &bad, 2),
            Err(Error::Problem(_))
        ));
    }

    #[test]
    fn case_lookup() {
        for n in CASE_NAMES {
            assert_eq!(case_by_name(n).unwrap().name, n);
        }
        assert!(case_by_name("nope").is_err());
    }
}
