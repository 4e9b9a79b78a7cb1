#![allow(dead_code)]

use hpcpg::cpg::{ExactSolution, ProblemDef};

/// `u'' = sin u - 2 cos u' + g(t)` with exact solution `sin t`.
pub fn scalar_nonlinear() -> ProblemDef {
    let g = |t: f64| -t.sin() - t.sin().sin() + 2.0 * t.cos().cos();
    ProblemDef::new(
        move |t, u: &[f64], v: &[f64], out: &mut [f64]| {
            out[0] = u[0].sin() - 2.0 * v[0].cos() + g(t);
            Ok(())
        },
        vec![0.0],
        vec![1.0],
        2.0,
    )
    .unwrap()
    .with_exact(sine_exact())
}

pub fn sine_exact() -> ExactSolution {
    ExactSolution::new(2, |t, d, out| {
        out[0] = match d {
            0 => t.sin(),
            1 => t.cos(),
            _ => -t.sin(),
        }
    })
}

/// Planar Kepler problem with eccentricity `e`.
pub fn kepler(e: f64) -> ProblemDef {
    ProblemDef::new(
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
        vec![1.0 - e, 0.0],
        vec![0.0, ((1.0 + e) / (1.0 - e)).sqrt()],
        2.0 / (1.0 - e).powi(3),
    )
    .unwrap()
}

pub fn exact_opts() -> hpcpg::SolverOptions {
    hpcpg::SolverOptions {
        tol: 0.0,
        ..Default::default()
    }
}
