//! Built-in experiments.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use hpcpg::cpg::{ExactSolution, ProblemDef};
use hpcpg::wavepde::{build_space, ExactField, PdeDef, QuadConfig, SpectralSpace};

use crate::config::{ConfigError, Params};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExampleId {
    Ex1,
    TwoBody,
    LinearWave,
    SineGordon,
    Custom,
}

impl ExampleId {
    pub const ALL: [ExampleId; 5] = [
        ExampleId::Ex1,
        ExampleId::TwoBody,
        ExampleId::LinearWave,
        ExampleId::SineGordon,
        ExampleId::Custom,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExampleId::Ex1 => "ex1",
            ExampleId::TwoBody => "two_body",
            ExampleId::LinearWave => "linear_wave",
            ExampleId::SineGordon => "sine_gordon",
            ExampleId::Custom => "custom",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ExampleId::Ex1 => "u'' = sin u - 2 cos u' + g(t) on (0, 1), exact solution sin t",
            ExampleId::TwoBody => "planar Kepler orbit with eccentricity epsilon (default 0.2) on (0, 10)",
            ExampleId::LinearWave => {
                "u_tt - Laplace(u) = f on the unit square, exact solution x(1-x)y(1-y)cos t, T = 1"
            }
            ExampleId::SineGordon => {
                "u_tt - Laplace(u) + sin u = f on [-1,1]^2, exact solution sin(pi x)sin(pi y)cos(2 pi t), T = 2"
            }
            ExampleId::Custom => "harmonic oscillator u'' = -omega^2 u, exact solution sin(omega t)",
        }
    }

    pub fn default_horizon(self) -> f64 {
        match self {
            ExampleId::Ex1 | ExampleId::LinearWave | ExampleId::Custom => 1.0,
            ExampleId::TwoBody => 10.0,
            ExampleId::SineGordon => 2.0,
        }
    }
}

impl FromStr for ExampleId {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ExampleId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| {
                ConfigError::Invalid(format!(
                    "unknown example '{s}' (expected one of {})",
                    ExampleId::ALL.map(|id| id.as_str()).join(", ")
                ))
            })
    }
}

impl fmt::Display for ExampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A ready-to-run problem.
pub enum Case {
    Ode {
        problem: ProblemDef,
        exact: Option<ExactSolution>,
    },
    Pde {
        pde: PdeDef,
        space: SpectralSpace,
        quad: QuadConfig,
        exact: ExactField,
    },
}

impl Case {
    pub fn lipschitz(&self) -> f64 {
        match self {
            Case::Ode { problem, .. } => problem.lipschitz(),
            Case::Pde { pde, .. } => pde.lipschitz,
        }
    }

    /// Note on the spatial discretization, carried into the JSON report.
    pub fn spatial_note(&self) -> Option<String> {
        match self {
            Case::Ode { .. } => None,
            Case::Pde { space, quad, .. } => Some(format!(
                "tensor spectral Galerkin space with interior modes L_(k-1) - L_(k+1), degrees {:?}, {:?} Gauss points per direction",
                space.axes().iter().map(|a| a.degree()).collect::<Vec<_>>(),
                quad.points
            )),
        }
    }
}

fn sine_exact(omega: f64) -> ExactSolution {
    ExactSolution::new(2, move |t, d, out| {
        let s = (omega * t).sin();
        out[0] = match d {
            0 => s,
            1 => omega * (omega * t).cos(),
            _ => -omega * omega * s,
        }
    })
}

/// `u'' = sin u - 2 cos u' + g(t)` with `u = sin t`.
fn ex1() -> Result<Case, ConfigError> {
    // u = sin t: u'' = -sin t, so g = -sin t - sin(sin t) + 2 cos(cos t)
    let g = |t: f64| -t.sin() - t.sin().sin() + 2.0 * t.cos().cos();
    let problem = ProblemDef::new(
        move |t, u: &[f64], v: &[f64], out: &mut [f64]| {
            out[0] = u[0].sin() - 2.0 * v[0].cos() + g(t);
            Ok(())
        },
        vec![0.0],
        vec![1.0],
        // |d f/d u| <= 1, |d f/d u'| <= 2
        2.0,
    )
    .map_err(invalid)?;
    let exact = sine_exact(1.0);
    Ok(Case::Ode {
        problem: problem.with_exact(exact.clone()),
        exact: Some(exact),
    })
}

/// Two-body problem `q'' = -q / |q|^3` started at pericentre.
fn two_body(epsilon: f64) -> Result<Case, ConfigError> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(ConfigError::Invalid(format!(
            "epsilon must lie in [0, 1), got {epsilon}"
        )));
    }
    let problem = ProblemDef::new(
        |_t, q: &[f64], _v: &[f64], out: &mut [f64]| {
            let r2 = q[0] * q[0] + q[1] * q[1];
            if r2 == 0.0 {
                return Err("collision at the origin".into());
            }
            let r3 = r2 * r2.sqrt();
            out[0] = -q[0] / r3;
            out[1] = -q[1] / r3;
            Ok(())
        },
        vec![1.0 - epsilon, 0.0],
        vec![0.0, ((1.0 + epsilon) / (1.0 - epsilon)).sqrt()],
        // |grad(q / |q|^3)| <= 2 / |q|^3 and |q| >= 1 - epsilon on the orbit
        2.0 / (1.0 - epsilon).powi(3),
    )
    .map_err(invalid)?;
    Ok(Case::Ode {
        problem,
        exact: None,
    })
}

fn custom(omega: f64) -> Result<Case, ConfigError> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(ConfigError::Invalid(format!(
            "omega must be positive, got {omega}"
        )));
    }
    let problem = ProblemDef::new(
        move |_t, u: &[f64], _v: &[f64], out: &mut [f64]| {
            out[0] = -omega * omega * u[0];
            Ok(())
        },
        vec![0.0],
        vec![omega],
        omega * omega,
    )
    .map_err(invalid)?;
    let exact = sine_exact(omega);
    Ok(Case::Ode {
        problem: problem.with_exact(exact.clone()),
        exact: Some(exact),
    })
}

fn bump(x: f64) -> f64 {
    x * (1.0 - x)
}

/// `u_tt - Laplace(u) = f` on the unit square with `u = b(x) b(y) cos t`,
/// `b(x) = x (1 - x)`.
fn linear_wave(params: &Params) -> Result<Case, ConfigError> {
    // b'' = -2, so u_tt = -u and -Laplace(u) = 2 (b(x) + b(y)) cos t;
    // f = -b(x) b(y) cos t + 2 (b(x) + b(y)) cos t does not depend on u
    let pde = PdeDef {
        coefficient: 1.0,
        source: Arc::new(|x, t, _u| {
            let (bx, by) = (bump(x[0]), bump(x[1]));
            (-bx * by + 2.0 * (bx + by)) * t.cos()
        }),
        u0: Arc::new(|x| bump(x[0]) * bump(x[1])),
        u1: Arc::new(|_| 0.0),
        lipschitz: 0.0,
    };
    let exact = ExactField::new(2, |x, t, d| {
        bump(x[0])
            * bump(x[1])
            * match d {
                0 => t.cos(),
                1 => -t.sin(),
                _ => -t.cos(),
            }
    });
    pde_case(pde, exact, &[(0.0, 1.0), (0.0, 1.0)], params, 3)
}

/// `u_tt - Laplace(u) + sin u = f` on `[-1, 1]^2` with
/// `u = sin(pi x) sin(pi y) cos(2 pi t)`.
fn sine_gordon(params: &Params) -> Result<Case, ConfigError> {
    let shape = |x: &[f64]| (PI * x[0]).sin() * (PI * x[1]).sin();
    let w = 2.0 * PI;
    // u_tt = -4 pi^2 u and -Laplace(u) = 2 pi^2 u, so
    // f = -2 pi^2 u + sin u; the semi-discrete source is f - sin(u_h)
    let pde = PdeDef {
        coefficient: 1.0,
        source: Arc::new(move |x, t, uh| {
            let u = shape(x) * (w * t).cos();
            -2.0 * PI * PI * u + u.sin() - uh.sin()
        }),
        u0: Arc::new(shape),
        u1: Arc::new(|_| 0.0),
        lipschitz: 1.0,
    };
    let exact = ExactField::new(2, move |x, t, d| {
        shape(x)
            * match d {
                0 => (w * t).cos(),
                1 => -w * (w * t).sin(),
                _ => -w * w * (w * t).cos(),
            }
    });
    pde_case(pde, exact, &[(-1.0, 1.0), (-1.0, 1.0)], params, 20)
}

fn pde_case(
    pde: PdeDef,
    exact: ExactField,
    domain: &[(f64, f64)],
    params: &Params,
    default_degree: usize,
) -> Result<Case, ConfigError> {
    let m = params.spatial_degree.unwrap_or(default_degree);
    let space = build_space(domain, &vec![m; domain.len()]).map_err(invalid)?;
    let quad = match params.spatial_quad {
        Some(n) => QuadConfig {
            points: vec![n; domain.len()],
        },
        None => QuadConfig::for_space(&space),
    };
    Ok(Case::Pde {
        pde,
        space,
        quad,
        exact,
    })
}

fn invalid(e: hpcpg::Error) -> ConfigError {
    ConfigError::Invalid(e.to_string())
}

/// Builds the problem for `id` with `params`.
pub fn build(id: ExampleId, params: &Params) -> Result<Case, ConfigError> {
    match id {
        ExampleId::Ex1 => ex1(),
        ExampleId::TwoBody => two_body(params.epsilon.unwrap_or(0.2)),
        ExampleId::LinearWave => linear_wave(params),
        ExampleId::SineGordon => sine_gordon(params),
        ExampleId::Custom => custom(params.omega.unwrap_or(1.0)),
    }
}

/// One line per built-in example: id, default horizon, recommended Lipschitz
/// estimate and description.
pub fn registry() -> Vec<(ExampleId, f64, f64, &'static str)> {
    ExampleId::ALL
        .into_iter()
        .map(|id| {
            let lipschitz = build(id, &Params::default())
                .map(|c| c.lipschitz())
                .unwrap_or(f64::NAN);
            (id, id.default_horizon(), lipschitz, id.description())
        })
        .collect()
}
