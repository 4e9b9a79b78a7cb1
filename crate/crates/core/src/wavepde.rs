//! Spectral-Galerkin semi-discretization of wave equations
//! `u_tt - b Laplace(u) = f(x, t, u)` on intervals and rectangles with
//! homogeneous Dirichlet data.
//!
//! Each direction uses the interior modes `phi_k = L_{k-1} - L_{k+1}`,
//! `k = 1..M-1`, mapped to the physical interval. Their stiffness matrix is
//! diagonal and their mass matrix pentadiagonal with closed-form entries. In
//! two dimensions the matrices are Kronecker products of the 1D blocks and the
//! unknown `alpha_{p * ny + q}` multiplies `phi_p(x) phi_q(y)`.
//!
//! The coefficient system `B alpha'' + b D alpha = F(t, alpha)` is handed to
//! the time stepper as `alpha'' = -b B^{-1} D alpha + B^{-1} F(t, alpha)` with a
//! [`LinearSplit`]: the linear part is diagonalized by the generalized
//! eigenvectors of `(D, B)`, which factor per direction.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::cpg::{CpgSolution, LinearSplit, ModalStiffness, ProblemDef, RhsFn};
use crate::error::{Error, Result};
use crate::orthopoly::{gauss_legendre_rule, legendre_table};

/// One direction of a tensor spectral space.
#[derive(Debug, Clone)]
pub struct Axis {
    interval: (f64, f64),
    degree: usize,
    mass: DMatrix<f64>,
    stiffness: DMatrix<f64>,
}

impl Axis {
    fn new(interval: (f64, f64), degree: usize) -> Result<Self> {
        let (a, b) = interval;
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::Validation(format!("degenerate interval ({a}, {b})")));
        }
        if degree < 2 {
            return Err(Error::InvalidDegree { degree, min: 2 });
        }
        let n = degree - 1;
        let h = b - a;
        let mut mass = DMatrix::zeros(n, n);
        let mut stiffness = DMatrix::zeros(n, n);
        for i in 0..n {
            let k = (i + 1) as f64;
            mass[(i, i)] = 0.5 * h * (2.0 / (2.0 * k - 1.0) + 2.0 / (2.0 * k + 3.0));
            if i + 2 < n {
                let off = -0.5 * h * 2.0 / (2.0 * k + 3.0);
                mass[(i, i + 2)] = off;
                mass[(i + 2, i)] = off;
            }
            stiffness[(i, i)] = 2.0 / h * 2.0 * (2.0 * k + 1.0);
        }
        Ok(Self {
            interval,
            degree,
            mass,
            stiffness,
        })
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Number of interior modes, `degree - 1`.
    pub fn modes(&self) -> usize {
        self.degree - 1
    }

    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }

    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }

    /// `d^deriv phi_k / dx^deriv (x)` for all modes.
    pub fn basis(&self, x: f64, deriv: usize) -> Vec<f64> {
        let (a, b) = self.interval;
        let h = b - a;
        let xr = (2.0 * x - a - b) / h;
        let mut table = vec![[0.0; 3]; self.degree + 1];
        legendre_table(xr, &mut table);
        let scale = (2.0 / h).powi(deriv as i32);
        (1..self.degree)
            .map(|k| scale * (table[k - 1][deriv] - table[k + 1][deriv]))
            .collect()
    }

    fn contains(&self, x: f64) -> bool {
        let (a, b) = self.interval;
        let slack = 1e-12 * (b - a);
        x >= a - slack && x <= b + slack
    }
}

/// Tensor spectral space on an interval or a rectangle.
#[derive(Debug, Clone)]
pub struct SpectralSpace {
    axes: Vec<Axis>,
}

/// Builds the space on `domain` (one interval per direction) with modal
/// degree `degrees[d]` in direction `d`.
pub fn build_space(domain: &[(f64, f64)], degrees: &[usize]) -> Result<SpectralSpace> {
    if domain.is_empty() || domain.len() > 2 || domain.len() != degrees.len() {
        return Err(Error::Validation(format!(
            "need one or two directions with a degree each, got {} intervals and {} degrees",
            domain.len(),
            degrees.len()
        )));
    }
    let axes = domain
        .iter()
        .zip(degrees)
        .map(|(&iv, &m)| Axis::new(iv, m))
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectralSpace { axes })
}

impl SpectralSpace {
    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn spatial_dim(&self) -> usize {
        self.axes.len()
    }

    /// Total number of basis functions.
    pub fn size(&self) -> usize {
        self.axes.iter().map(Axis::modes).product()
    }

    fn kron(&self, pick: impl Fn(&Axis) -> &DMatrix<f64>) -> DMatrix<f64> {
        self.axes[1..]
            .iter()
            .fold(pick(&self.axes[0]).clone(), |acc, ax| {
                acc.kronecker(pick(ax))
            })
    }

    /// Mass matrix `(phi_i, phi_j)`.
    pub fn mass_matrix(&self) -> DMatrix<f64> {
        self.kron(Axis::mass)
    }

    /// Stiffness matrix `(grad phi_i, grad phi_j)`.
    pub fn stiffness_matrix(&self) -> DMatrix<f64> {
        match self.axes.as_slice() {
            [x] => x.stiffness.clone(),
            [x, y] => x.stiffness.kronecker(&y.mass) + x.mass.kronecker(&y.stiffness),
            _ => unreachable!("spaces have one or two directions"),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.axes.len() && self.axes.iter().zip(x).all(|(ax, &xi)| ax.contains(xi))
    }

    /// Values of all basis functions at `x`.
    pub fn basis_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        if !self.contains(x) {
            return Err(Error::Domain(format!(
                "point {x:?} outside the spatial domain"
            )));
        }
        let per_axis: Vec<Vec<f64>> = self
            .axes
            .iter()
            .zip(x)
            .map(|(ax, &xi)| ax.basis(xi, 0))
            .collect();
        Ok(match per_axis.as_slice() {
            [v] => v.clone(),
            [vx, vy] => vx
                .iter()
                .flat_map(|p| vy.iter().map(move |q| p * q))
                .collect(),
            _ => unreachable!("spaces have one or two directions"),
        })
    }

    /// Evaluates `sum_i phi_i(x) coeffs_i`.
    pub fn evaluate(&self, coeffs: &[f64], x: &[f64]) -> Result<f64> {
        if coeffs.len() != self.size() {
            return Err(Error::Validation(format!(
                "{} coefficients for a space of size {}",
                coeffs.len(),
                self.size()
            )));
        }
        Ok(self
            .basis_values(x)?
            .iter()
            .zip(coeffs)
            .map(|(p, c)| p * c)
            .sum())
    }
}

/// Gauss points per direction for load vectors, initial projections and
/// spatial norms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadConfig {
    pub points: Vec<usize>,
}

impl QuadConfig {
    /// `degree + 4` points per direction.
    pub fn for_space(space: &SpectralSpace) -> Self {
        Self {
            points: space.axes.iter().map(|ax| ax.degree + 4).collect(),
        }
    }

    fn validate(&self, space: &SpectralSpace) -> Result<()> {
        if self.points.len() != space.spatial_dim() {
            return Err(Error::Validation(format!(
                "quadrature given for {} directions, space has {}",
                self.points.len(),
                space.spatial_dim()
            )));
        }
        for (ax, &n) in space.axes.iter().zip(&self.points) {
            if n < ax.degree + 1 {
                return Err(Error::Validation(format!(
                    "{n} quadrature points are too few for degree {} (need at least {})",
                    ax.degree,
                    ax.degree + 1
                )));
            }
        }
        Ok(())
    }
}

/// Per-direction quadrature data: physical nodes and weights and the basis
/// sampled at the nodes (`nq x modes`).
#[derive(Debug, Clone)]
struct AxisQuad {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    values: DMatrix<f64>,
}

impl AxisQuad {
    fn new(axis: &Axis, points: usize) -> Self {
        let rule = gauss_legendre_rule(points);
        let (a, b) = axis.interval;
        let half = 0.5 * (b - a);
        let nodes = rule.mapped_nodes(a, b);
        let weights = rule.weights.iter().map(|w| w * half).collect();
        let mut values = DMatrix::zeros(points, axis.modes());
        for (q, &x) in nodes.iter().enumerate() {
            for (k, v) in axis.basis(x, 0).into_iter().enumerate() {
                values[(q, k)] = v;
            }
        }
        Self {
            nodes,
            weights,
            values,
        }
    }
}

/// `(A_1 x A_2 x ...) v` for one or two factors with row-major tensor
/// indexing.
fn apply_tensor(factors: &[&DMatrix<f64>], v: &[f64]) -> Vec<f64> {
    match factors {
        [a] => (*a * DMatrix::from_column_slice(v.len(), 1, v))
            .as_slice()
            .to_vec(),
        [a, c] => {
            let (nx, ny) = (a.ncols(), c.ncols());
            // column-major storage of X^T (ny x nx) equals row-major X
            let xt = DMatrix::from_column_slice(ny, nx, v);
            let yt = *c * xt * a.transpose();
            yt.as_slice().to_vec()
        }
        _ => unreachable!("spaces have one or two directions"),
    }
}

/// Per-direction pieces of the generalized eigen-decomposition of `(D, B)`.
#[derive(Debug, Clone)]
struct AxisEigen {
    /// `V` with `V^T B V = I`, `S V = B V diag(mu)`.
    vectors: DMatrix<f64>,
    /// `V^T B`, the inverse of `V`.
    inverse: DMatrix<f64>,
    values: Vec<f64>,
    mass_inverse: DMatrix<f64>,
}

impl AxisEigen {
    fn new(axis: &Axis) -> Result<Self> {
        let chol = axis.mass.clone().cholesky().ok_or_else(|| {
            Error::Internal("spectral mass matrix is not positive definite".into())
        })?;
        let l = chol.l();
        let l_inv = l
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Internal("singular Cholesky factor".into()))?;
        let c = &l_inv * &axis.stiffness * l_inv.transpose();
        let c = 0.5 * (&c + c.transpose());
        let eig = c.symmetric_eigen();
        let vectors = l_inv.transpose() * &eig.eigenvectors;
        let inverse = vectors.transpose() * &axis.mass;
        Ok(Self {
            vectors,
            inverse,
            values: eig.eigenvalues.as_slice().to_vec(),
            mass_inverse: chol.inverse(),
        })
    }
}

/// `b B^{-1} D` in the factored eigenbasis.
struct TensorStiffness {
    eigen: Vec<AxisEigen>,
    eigenvalues: Vec<f64>,
}

impl TensorStiffness {
    fn new(space: &SpectralSpace, coefficient: f64) -> Result<Self> {
        let eigen = space
            .axes
            .iter()
            .map(AxisEigen::new)
            .collect::<Result<Vec<_>>>()?;
        let eigenvalues = match eigen.as_slice() {
            [x] => x.values.iter().map(|m| coefficient * m).collect(),
            [x, y] => x
                .values
                .iter()
                .flat_map(|mx| y.values.iter().map(move |my| coefficient * (mx + my)))
                .collect(),
            _ => unreachable!("spaces have one or two directions"),
        };
        Ok(Self { eigen, eigenvalues })
    }

    fn mass_inverse(&self, v: &[f64]) -> Vec<f64> {
        let f: Vec<&DMatrix<f64>> = self.eigen.iter().map(|e| &e.mass_inverse).collect();
        apply_tensor(&f, v)
    }
}

impl ModalStiffness for TensorStiffness {
    fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    fn to_modal(&self, x: &[f64], out: &mut [f64]) {
        let f: Vec<&DMatrix<f64>> = self.eigen.iter().map(|e| &e.inverse).collect();
        out.copy_from_slice(&apply_tensor(&f, x));
    }

    fn from_modal(&self, y: &[f64], out: &mut [f64]) {
        let f: Vec<&DMatrix<f64>> = self.eigen.iter().map(|e| &e.vectors).collect();
        out.copy_from_slice(&apply_tensor(&f, y));
    }
}

/// Source term `f(x, t, u)`.
pub type SourceFn = dyn Fn(&[f64], f64, f64) -> f64 + Send + Sync;
/// Initial field `u(x)`.
pub type FieldFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// Wave equation `u_tt - b Laplace(u) = f(x, t, u)` with constant `b`, zero
/// boundary values and initial data `u(., 0) = u0`, `u_t(., 0) = u1`.
#[derive(Clone)]
pub struct PdeDef {
    pub coefficient: f64,
    pub source: Arc<SourceFn>,
    pub u0: Arc<FieldFn>,
    pub u1: Arc<FieldFn>,
    /// Lipschitz constant of `f` in `u`.
    pub lipschitz: f64,
}

impl std::fmt::Debug for PdeDef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PdeDef")
            .field("coefficient", &self.coefficient)
            .field("lipschitz", &self.lipschitz)
            .finish_non_exhaustive()
    }
}

/// Grid sampling helper shared by the load vector and the norms.
#[derive(Debug, Clone)]
struct Grid {
    axes: Vec<AxisQuad>,
}

impl Grid {
    fn new(space: &SpectralSpace, quad: &QuadConfig) -> Self {
        Self {
            axes: space
                .axes
                .iter()
                .zip(&quad.points)
                .map(|(ax, &n)| AxisQuad::new(ax, n))
                .collect(),
        }
    }

    /// Values of `sum_i phi_i alpha_i` at the grid points.
    fn sample(&self, alpha: &[f64]) -> Vec<f64> {
        let f: Vec<&DMatrix<f64>> = self.axes.iter().map(|a| &a.values).collect();
        apply_tensor(&f, alpha)
    }

    /// `(g, phi_i)` from grid values of `g`.
    fn project(&self, values: &[f64]) -> Vec<f64> {
        let weighted: Vec<f64> = values
            .iter()
            .zip(self.weights())
            .map(|(v, w)| v * w)
            .collect();
        let t: Vec<DMatrix<f64>> = self.axes.iter().map(|a| a.values.transpose()).collect();
        let f: Vec<&DMatrix<f64>> = t.iter().collect();
        apply_tensor(&f, &weighted)
    }

    fn points(&self) -> Vec<Vec<f64>> {
        match self.axes.as_slice() {
            [x] => x.nodes.iter().map(|&p| vec![p]).collect(),
            [x, y] => x
                .nodes
                .iter()
                .flat_map(|&p| y.nodes.iter().map(move |&q| vec![p, q]))
                .collect(),
            _ => unreachable!("spaces have one or two directions"),
        }
    }

    fn weights(&self) -> Vec<f64> {
        match self.axes.as_slice() {
            [x] => x.weights.clone(),
            [x, y] => x
                .weights
                .iter()
                .flat_map(|&p| y.weights.iter().map(move |&q| p * q))
                .collect(),
            _ => unreachable!("spaces have one or two directions"),
        }
    }
}

/// The coefficient system `B alpha'' + b D alpha = F(t, alpha)`.
pub struct SemiDiscreteSystem {
    space: Arc<SpectralSpace>,
    quad: QuadConfig,
    mass: DMatrix<f64>,
    stiffness: DMatrix<f64>,
    coefficient: f64,
    alpha0: Vec<f64>,
    alpha1: Vec<f64>,
    grid: Arc<Grid>,
    source: Arc<SourceFn>,
    operator: Arc<TensorStiffness>,
}

impl std::fmt::Debug for SemiDiscreteSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SemiDiscreteSystem")
            .field("size", &self.space.size())
            .field("coefficient", &self.coefficient)
            .finish_non_exhaustive()
    }
}

impl SemiDiscreteSystem {
    pub fn space(&self) -> &Arc<SpectralSpace> {
        &self.space
    }

    pub fn quad(&self) -> &QuadConfig {
        &self.quad
    }

    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }

    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    pub fn alpha0(&self) -> &[f64] {
        &self.alpha0
    }

    pub fn alpha1(&self) -> &[f64] {
        &self.alpha1
    }

    /// Generalized eigenvalues of `(b D, B)` in tensor order.
    pub fn eigenvalues(&self) -> &[f64] {
        self.operator.eigenvalues()
    }

    /// Load vector `F(t, alpha)_j = (f(x, t, u_h), phi_j)`.
    pub fn load(&self, t: f64, alpha: &[f64]) -> Vec<f64> {
        load_vector(&self.grid, self.source.as_ref(), t, alpha)
    }

    /// `1/2 alpha'^T B alpha' + 1/2 b alpha^T D alpha`.
    pub fn energy(&self, alpha: &[f64], dalpha: &[f64]) -> f64 {
        let quad = |m: &DMatrix<f64>, v: &[f64]| {
            let v = nalgebra::DVector::from_column_slice(v);
            v.dot(&(m * &v))
        };
        0.5 * quad(&self.mass, dalpha) + 0.5 * self.coefficient * quad(&self.stiffness, alpha)
    }

    /// Semi-discrete energy at every mesh node of `solution`.
    pub fn energy_at_nodes(&self, solution: &CpgSolution) -> Result<Vec<f64>> {
        solution
            .mesh()
            .nodes()
            .iter()
            .map(|&t| Ok(self.energy(&solution.eval(t, 0)?, &solution.eval(t, 1)?)))
            .collect()
    }
}

fn load_vector(grid: &Grid, source: &SourceFn, t: f64, alpha: &[f64]) -> Vec<f64> {
    let u = grid.sample(alpha);
    let values: Vec<f64> = grid
        .points()
        .iter()
        .zip(&u)
        .map(|(x, &ux)| source(x, t, ux))
        .collect();
    grid.project(&values)
}

/// Semi-discretizes `pde` on `space`. The returned problem carries the linear
/// split and no exact solution.
pub fn semi_discretize(
    pde: &PdeDef,
    space: &SpectralSpace,
    quad: &QuadConfig,
) -> Result<(SemiDiscreteSystem, ProblemDef)> {
    quad.validate(space)?;
    if !(pde.coefficient > 0.0) || !pde.coefficient.is_finite() {
        return Err(Error::Validation(format!(
            "wave speed coefficient must be positive, got {}",
            pde.coefficient
        )));
    }
    let space = Arc::new(space.clone());
    let grid = Arc::new(Grid::new(&space, quad));
    let operator = Arc::new(TensorStiffness::new(&space, pde.coefficient)?);
    let points = grid.points();
    let project_field = |u: &FieldFn| {
        let values: Vec<f64> = points.iter().map(|x| u(x)).collect();
        operator.mass_inverse(&grid.project(&values))
    };
    let alpha0 = project_field(pde.u0.as_ref());
    let alpha1 = project_field(pde.u1.as_ref());

    let remainder: Arc<RhsFn> = {
        let grid = grid.clone();
        let op = operator.clone();
        let source = pde.source.clone();
        Arc::new(move |t, alpha, _dalpha, out| {
            let f = load_vector(&grid, source.as_ref(), t, alpha);
            out.copy_from_slice(&op.mass_inverse(&f));
            Ok(())
        })
    };
    let full: Arc<RhsFn> = {
        let op = operator.clone();
        let rem = remainder.clone();
        Arc::new(move |t, alpha, dalpha, out| {
            rem(t, alpha, dalpha, out)?;
            // -K alpha through the eigenbasis
            let n = alpha.len();
            let mut modal = vec![0.0; n];
            op.to_modal(alpha, &mut modal);
            for (m, l) in modal.iter_mut().zip(op.eigenvalues()) {
                *m *= -l;
            }
            let mut back = vec![0.0; n];
            op.from_modal(&modal, &mut back);
            for (o, b) in out.iter_mut().zip(&back) {
                *o += b;
            }
            Ok(())
        })
    };
    let problem = ProblemDef::from_arc(full, alpha0.clone(), alpha1.clone(), pde.lipschitz)?
        .with_split(LinearSplit {
            stiffness: operator.clone(),
            remainder,
        })?;
    let system = SemiDiscreteSystem {
        mass: space.mass_matrix(),
        stiffness: space.stiffness_matrix(),
        space,
        quad: quad.clone(),
        coefficient: pde.coefficient,
        alpha0,
        alpha1,
        grid,
        source: pde.source.clone(),
        operator,
    };
    Ok((system, problem))
}

type FieldDerivFn = dyn Fn(&[f64], f64, usize) -> f64 + Send + Sync;

/// Exact field `d^k u / dt^k (x, t)` with the highest time derivative
/// provided.
#[derive(Clone)]
pub struct ExactField {
    max_deriv: usize,
    eval: Arc<FieldDerivFn>,
}

impl ExactField {
    pub fn new<F>(max_deriv: usize, eval: F) -> Self
    where
        F: Fn(&[f64], f64, usize) -> f64 + Send + Sync + 'static,
    {
        Self {
            max_deriv,
            eval: Arc::new(eval),
        }
    }

    pub fn require(&self, order: usize) -> Result<()> {
        if order > self.max_deriv {
            return Err(Error::Capability(format!(
                "exact field provides time derivatives up to order {}, order {order} requested",
                self.max_deriv
            )));
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64], t: f64, deriv: usize) -> Result<f64> {
        self.require(deriv)?;
        Ok((self.eval)(x, t, deriv))
    }
}

impl std::fmt::Debug for ExactField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExactField")
            .field("max_deriv", &self.max_deriv)
            .finish_non_exhaustive()
    }
}

/// Fully discrete field `u(x, t) = sum_i phi_i(x) alpha_i(t)`.
#[derive(Debug, Clone)]
pub struct FieldSolution {
    space: Arc<SpectralSpace>,
    solution: CpgSolution,
}

impl FieldSolution {
    pub fn new(space: Arc<SpectralSpace>, solution: CpgSolution) -> Result<Self> {
        if solution.dim() != space.size() {
            return Err(Error::Validation(format!(
                "solution has {} components, space has {} basis functions",
                solution.dim(),
                space.size()
            )));
        }
        Ok(Self { space, solution })
    }

    pub fn space(&self) -> &Arc<SpectralSpace> {
        &self.space
    }

    pub fn solution(&self) -> &CpgSolution {
        &self.solution
    }
}

/// `d^t_deriv/dt^t_deriv u(x, t)`.
pub fn reconstruct(field: &FieldSolution, x: &[f64], t: f64, t_deriv: usize) -> Result<f64> {
    let basis = field.space.basis_values(x)?;
    let alpha = field.solution.eval(t, t_deriv)?;
    Ok(basis.iter().zip(&alpha).map(|(p, a)| p * a).sum())
}

/// Space-time error norms. Temporal norms are cumulative in the time
/// derivative, as for the ODE norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PdeNorm {
    L2L2,
    H1L2,
    H2L2,
    LinfL2,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PdeErrorReport {
    pub l2l2: f64,
    pub h1l2: f64,
    pub h2l2: f64,
    pub linfl2: f64,
    /// `max_n |e(t_n)|_{L2}` over `n = 1..N`.
    pub nodal_max_value: f64,
    /// `max_n |e_t(t_n)|_{L2}` over `n = 1..N`.
    pub nodal_max_deriv: f64,
}

/// Interior time samples per interval for `L_inf(L2)`.
const LINF_SAMPLES: usize = 10;
/// Temporal Gauss points beyond the local degree.
const TIME_QUAD_EXTRA: usize = 8;

struct SpatialNorm {
    grid: Grid,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl SpatialNorm {
    fn new(space: &SpectralSpace) -> Self {
        let grid = Grid::new(space, &QuadConfig::for_space(space));
        let points = grid.points();
        let weights = grid.weights();
        Self {
            grid,
            points,
            weights,
        }
    }

    /// `|d^deriv e / dt^deriv (., t)|_{L2}^2`.
    fn squared(
        &self,
        field: &FieldSolution,
        exact: &ExactField,
        t: f64,
        deriv: usize,
    ) -> Result<f64> {
        let alpha = field.solution.eval(t, deriv)?;
        let num = self.grid.sample(&alpha);
        let mut acc = 0.0;
        for ((x, w), u) in self.points.iter().zip(&self.weights).zip(&num) {
            let e = exact.eval(x, t, deriv)? - u;
            acc += w * e * e;
        }
        Ok(acc)
    }
}

/// Error norm of `kind` between `field` and `exact`.
pub fn pde_norm_error(field: &FieldSolution, exact: &ExactField, kind: PdeNorm) -> Result<f64> {
    let report = pde_error_report_for(field, exact, Some(kind))?;
    Ok(match kind {
        PdeNorm::L2L2 => report.l2l2,
        PdeNorm::H1L2 => report.h1l2,
        PdeNorm::H2L2 => report.h2l2,
        PdeNorm::LinfL2 => report.linfl2,
    })
}

/// All space-time norms plus nodal errors.
pub fn pde_error_report(field: &FieldSolution, exact: &ExactField) -> Result<PdeErrorReport> {
    pde_error_report_for(field, exact, None)
}

fn pde_error_report_for(
    field: &FieldSolution,
    exact: &ExactField,
    only: Option<PdeNorm>,
) -> Result<PdeErrorReport> {
    let max_order = match only {
        Some(PdeNorm::L2L2) | Some(PdeNorm::LinfL2) => 0,
        Some(PdeNorm::H1L2) => 1,
        Some(PdeNorm::H2L2) | None => 2,
    };
    exact.require(max_order)?;
    let norm = SpatialNorm::new(&field.space);
    let mut report = PdeErrorReport::default();
    let want_integrals = !matches!(only, Some(PdeNorm::LinfL2));
    let want_sup = matches!(only, Some(PdeNorm::LinfL2) | None);
    let mut sums = [0.0; 3];
    for local in field.solution.locals() {
        let (a, b) = local.interval();
        if want_integrals {
            let rule = gauss_legendre_rule(local.degree() + TIME_QUAD_EXTRA);
            let half = 0.5 * (b - a);
            for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
                let t = a + half * (x + 1.0);
                for (d, s) in sums.iter_mut().enumerate().take(max_order + 1) {
                    *s += half * w * norm.squared(field, exact, t, d)?;
                }
            }
        }
        if want_sup {
            for j in 0..=LINF_SAMPLES + 1 {
                let t = if j == LINF_SAMPLES + 1 {
                    b
                } else {
                    a + (b - a) * j as f64 / (LINF_SAMPLES + 1) as f64
                };
                let e = norm.squared(field, exact, t, 0)?.sqrt();
                report.linfl2 = report.linfl2.max(e);
            }
        }
    }
    report.l2l2 = sums[0].sqrt();
    report.h1l2 = (sums[0] + sums[1]).sqrt();
    report.h2l2 = (sums[0] + sums[1] + sums[2]).sqrt();
    if only.is_none() {
        for &t in &field.solution.mesh().nodes()[1..] {
            report.nodal_max_value = report
                .nodal_max_value
                .max(norm.squared(field, exact, t, 0)?.sqrt());
            report.nodal_max_deriv = report
                .nodal_max_deriv
                .max(norm.squared(field, exact, t, 1)?.sqrt());
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn quad_matrix(space: &SpectralSpace, grad: bool) -> DMatrix<f64> {
        // direct tensor Gauss quadrature of (phi_i, phi_j) or (grad phi_i, grad phi_j)
        let n = space.size();
        let rules: Vec<_> = space
            .axes()
            .iter()
            .map(|ax| {
                let (a, b) = ax.interval();
                let r = gauss_legendre_rule(ax.degree() + 3);
                let half = 0.5 * (b - a);
                (
                    r.mapped_nodes(a, b),
                    r.weights.iter().map(|w| w * half).collect::<Vec<_>>(),
                )
            })
            .collect();
        let mut m = DMatrix::zeros(n, n);
        let mut add = |vals: Vec<Vec<f64>>, w: f64| {
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] += w * vals.iter().map(|v| v[i] * v[j]).sum::<f64>();
                }
            }
        };
        match space.axes() {
            [ax] => {
                for (x, w) in rules[0].0.iter().zip(&rules[0].1) {
                    add(vec![ax.basis(*x, grad as usize)], *w);
                }
            }
            [ax, ay] => {
                for (x, wx) in rules[0].0.iter().zip(&rules[0].1) {
                    for (y, wy) in rules[1].0.iter().zip(&rules[1].1) {
                        let (bx, by) = (ax.basis(*x, 0), ay.basis(*y, 0));
                        let tensor = |u: &[f64], v: &[f64]| -> Vec<f64> {
                            u.iter()
                                .flat_map(|p| v.iter().map(move |q| p * q))
                                .collect()
                        };
                        let vals = if grad {
                            let (dx, dy) = (ax.basis(*x, 1), ay.basis(*y, 1));
                            vec![tensor(&dx, &by), tensor(&bx, &dy)]
                        } else {
                            vec![tensor(&bx, &by)]
                        };
                        add(vals, wx * wy);
                    }
                }
            }
            _ => unreachable!(),
        }
        m
    }

    #[test]
    fn one_dimensional_blocks() {
        let s = build_space(&[(-1.0, 1.0)], &[3]).unwrap();
        let st = s.stiffness_matrix();
        assert_eq!(st[(0, 0)], 6.0);
        assert_eq!(st[(1, 1)], 10.0);
        assert_eq!(st[(0, 1)], 0.0);
        assert_abs_diff_eq!(s.mass_matrix()[(0, 0)], 2.4, epsilon = 1e-15);
        for ax in s.axes() {
            for v in ax.basis(-1.0, 0).into_iter().chain(ax.basis(1.0, 0)) {
                assert_abs_diff_eq!(v, 0.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn tensor_assembly_matches_quadrature() {
        for degrees in [[2usize, 2], [3, 4], [5, 5], [4, 2]] {
            let s = build_space(&[(0.0, 1.0), (-1.0, 0.5)], &degrees).unwrap();
            let b = s.mass_matrix();
            let d = s.stiffness_matrix();
            assert!((&b - b.transpose()).amax() == 0.0);
            assert!((&b - quad_matrix(&s, false)).amax() < 1e-11);
            assert!((&d - quad_matrix(&s, true)).amax() < 1e-11);
        }
        let s = build_space(&[(2.0, 3.5)], &[6]).unwrap();
        assert!((s.mass_matrix() - quad_matrix(&s, false)).amax() < 1e-11);
        assert!((s.stiffness_matrix() - quad_matrix(&s, true)).amax() < 1e-11);
    }

    #[test]
    fn invalid_spaces() {
        assert!(build_space(&[(1.0, 1.0)], &[3]).is_err());
        assert!(matches!(
            build_space(&[(0.0, 1.0)], &[1]),
            Err(Error::InvalidDegree { .. })
        ));
        assert!(build_space(&[(0.0, 1.0)], &[3, 3]).is_err());
        let s = build_space(&[(0.0, 1.0)], &[6]).unwrap();
        let pde = PdeDef {
            coefficient: 1.0,
            source: Arc::new(|_, _, _| 0.0),
            u0: Arc::new(|_| 0.0),
            u1: Arc::new(|_| 0.0),
            lipschitz: 0.0,
        };
        let coarse = QuadConfig { points: vec![6] };
        assert!(matches!(
            semi_discretize(&pde, &s, &coarse),
            Err(Error::Validation(_))
        ));
        assert!(semi_discretize(&pde, &s, &QuadConfig { points: vec![7] }).is_ok());
    }

    #[test]
    fn small_eigenproblem() {
        // two modes on (-1, 1): D = diag(6, 10), B = diag(12/5, 20/21)
        let s = build_space(&[(-1.0, 1.0)], &[3]).unwrap();
        let op = TensorStiffness::new(&s, 1.0).unwrap();
        let mut eig = op.eigenvalues().to_vec();
        eig.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(eig[0], 2.5, epsilon = 1e-13);
        assert_abs_diff_eq!(eig[1], 10.0 / (2.0 / 3.0 + 2.0 / 7.0), epsilon = 1e-12);
        let x = [0.3, -1.2];
        let mut y = [0.0; 2];
        let mut z = [0.0; 2];
        op.to_modal(&x, &mut y);
        op.from_modal(&y, &mut z);
        assert_abs_diff_eq!(z[0], x[0], epsilon = 1e-14);
        assert_abs_diff_eq!(z[1], x[1], epsilon = 1e-14);
    }

    #[test]
    fn modal_maps_diagonalize_stiffness_2d() {
        let s = build_space(&[(0.0, 1.0), (-1.0, 1.0)], &[5, 4]).unwrap();
        let op = TensorStiffness::new(&s, 0.7).unwrap();
        let b = s.mass_matrix();
        let d = s.stiffness_matrix() * 0.7;
        let n = s.size();
        let v: Vec<f64> = (0..n).map(|i| ((i * 7 + 3) % 5) as f64 - 2.0).collect();
        // K v = B^{-1} D v against the modal form
        let kv_direct = b
            .clone()
            .lu()
            .solve(&(&d * DMatrix::from_column_slice(n, 1, &v)))
            .unwrap();
        let mut modal = vec![0.0; n];
        op.to_modal(&v, &mut modal);
        for (m, l) in modal.iter_mut().zip(op.eigenvalues()) {
            *m *= l;
        }
        let mut kv = vec![0.0; n];
        op.from_modal(&modal, &mut kv);
        for (a, b) in kv.iter().zip(kv_direct.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn polynomial_initial_data_reproduced() {
        let s = build_space(&[(0.0, 1.0), (0.0, 1.0)], &[4, 3]).unwrap();
        let pde = PdeDef {
            coefficient: 1.0,
            source: Arc::new(|_, _, _| 0.0),
            u0: Arc::new(|x| x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1])),
            u1: Arc::new(|_| 0.0),
            lipschitz: 0.0,
        };
        let (sys, _) = semi_discretize(&pde, &s, &QuadConfig::for_space(&s)).unwrap();
        for &(x, y) in &[(0.3, 0.4), (0.9, 0.1), (0.5, 0.5)] {
            let v = s.evaluate(sys.alpha0(), &[x, y]).unwrap();
            assert_abs_diff_eq!(v, x * (1.0 - x) * y * (1.0 - y), epsilon = 1e-15);
        }
        assert_eq!(s.evaluate(sys.alpha0(), &[0.0, 0.3]).unwrap(), 0.0);
        assert!(s.evaluate(sys.alpha0(), &[1.5, 0.3]).is_err());
    }
}
