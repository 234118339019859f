//! Terminal-boundary clipping: the clipping fraction, the clipped model and
//! cost functions, and their analytic derivatives.
//!
//! When the final transition of a trajectory crosses a terminal boundary,
//! the agent is stopped exactly at the intersection of the transition
//! segment with the boundary's tangent plane. The fraction of the step that
//! was actually taken, `λ`, feeds the clipped model/cost functions and the
//! final-step Q-gradients. Everything here is pure and reentrant.

use crate::env::{ModelJacobians, Plane, State};
use crate::error::{Error, Result};
use crate::linalg::{add_scaled, dot, gamma_pow, norm, scaled, Jacobian};

/// Relative threshold below which `v·n` counts as parallel to the plane.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;

/// Floating-point slack allowed on `λ` outside [0, 1] before erroring.
pub const LAMBDA_SLACK: f64 = 1e-9;

/// Derivatives of the clipped model and cost functions at a boundary-crossing
/// transition, plus the raw transition vector `v = f(x, a) − x`.
#[derive(Debug, Clone)]
pub struct ClippedJacobians {
    pub dlam_dx: Vec<f64>,
    pub dlam_da: Vec<f64>,
    pub dfc_dx: Jacobian,
    pub dfc_da: Jacobian,
    pub duc_dx: Vec<f64>,
    pub duc_da: Vec<f64>,
    pub v: Vec<f64>,
}

/// The pair `(Q_x, Q_u)` that drives every weight update.
#[derive(Debug, Clone)]
pub struct QGradients {
    pub q_x: Vec<f64>,
    pub q_u: Vec<f64>,
}

fn check_degeneracy(v: &[f64], plane: &Plane) -> Result<f64> {
    let v_dot_n = dot(v, &plane.normal);
    let threshold = DEGENERACY_THRESHOLD * norm(&plane.normal) * norm(v).max(1.0);
    if v_dot_n.abs() < threshold {
        return Err(Error::DegeneratePlane { v_dot_n, threshold });
    }
    Ok(v_dot_n)
}

/// Fraction of the step from `x` to `f_next` at which the plane is reached:
/// `λ = ((ρ − x)·n) / ((f_next − x)·n)`.
///
/// Values a hair outside [0, 1] (within [`LAMBDA_SLACK`]) are clamped; larger
/// excursions mean the caller passed a non-crossing transition and are an
/// error, as is a transition parallel to the plane.
pub fn clipping_fraction(x: &State, f_next: &State, plane: &Plane) -> Result<f64> {
    let v: Vec<f64> = f_next
        .as_slice()
        .iter()
        .zip(x.as_slice())
        .map(|(fi, xi)| fi - xi)
        .collect();
    let v_dot_n = check_degeneracy(&v, plane)?;
    let lambda = -plane.offset(x.as_slice()) / v_dot_n;
    if lambda > 1.0 + LAMBDA_SLACK || lambda < -LAMBDA_SLACK {
        return Err(Error::LambdaOutOfRange { lambda });
    }
    Ok(lambda.clamp(0.0, 1.0))
}

/// Clipped model and cost values: `(x + λ(f_next − x), λ·cost)`.
///
/// The returned state lies on the plane to within 1e-9.
pub fn clipped_transition(
    x: &State,
    f_next: &State,
    cost: f64,
    plane: &Plane,
) -> Result<(State, f64)> {
    let lambda = clipping_fraction(x, f_next, plane)?;
    Ok((interpolate(x, f_next, lambda), lambda * cost))
}

/// `x + λ(f_next − x)`, exactly `f_next` when `λ = 1` so the no-crossing
/// reduction is bitwise.
pub(crate) fn interpolate(x: &State, f_next: &State, lambda: f64) -> State {
    if lambda == 1.0 {
        return f_next.clone();
    }
    State(
        x.as_slice()
            .iter()
            .zip(f_next.as_slice())
            .map(|(xi, fi)| xi + lambda * (fi - xi))
            .collect(),
    )
}

/// Analytic gradients of the clipping fraction,
/// `(∂λ/∂x, ∂λ/∂a)`:
///
/// ```text
/// ∂λ/∂x = −n/(v·n) − ((ρ−x)·n)/(v·n)² · (∂f/∂x − I)·n
/// ∂λ/∂a =          − ((ρ−x)·n)/(v·n)² · (∂f/∂a)·n
/// ```
pub fn clip_fraction_gradients(
    x: &State,
    jac: &ModelJacobians,
    plane: &Plane,
    v: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let v_dot_n = check_degeneracy(v, plane)?;
    let rho_minus_x_dot_n = -plane.offset(x.as_slice());
    let c = rho_minus_x_dot_n / (v_dot_n * v_dot_n);

    // (∂f/∂x − I)·n and (∂f/∂a)·n in the transposed layout are pullbacks of n.
    let mut dfdx_n = jac.df_dx.pullback(&plane.normal);
    for (i, ni) in plane.normal.iter().enumerate() {
        dfdx_n[i] -= ni;
    }
    let dfda_n = jac.df_da.pullback(&plane.normal);

    let dlam_dx: Vec<f64> = plane
        .normal
        .iter()
        .zip(&dfdx_n)
        .map(|(ni, mi)| -ni / v_dot_n - c * mi)
        .collect();
    let dlam_da: Vec<f64> = dfda_n.iter().map(|mi| -c * mi).collect();
    Ok((dlam_dx, dlam_da))
}

/// Derivatives of the clipped model and cost functions:
///
/// ```text
/// ∂f^C/∂x = I + (∂λ/∂x)vᵀ + λ(∂f/∂x − I)
/// ∂f^C/∂a =     (∂λ/∂a)vᵀ + λ(∂f/∂a)
/// ∂U^C/∂x = (∂λ/∂x)U + λ(∂U/∂x)
/// ∂U^C/∂a = (∂λ/∂a)U + λ(∂U/∂a)
/// ```
pub fn clipped_jacobians(
    x: &State,
    v: &[f64],
    cost: f64,
    jac: &ModelJacobians,
    plane: &Plane,
    lambda: f64,
) -> Result<ClippedJacobians> {
    let (dlam_dx, dlam_da) = clip_fraction_gradients(x, jac, plane, v)?;
    let n = x.dim();

    let eye = Jacobian::identity(n);
    let mut dfc_dx = eye.add_scaled(&jac.df_dx.add_scaled(&eye, -1.0), lambda);
    let outer_x = Jacobian::outer(&dlam_dx, v);
    dfc_dx = dfc_dx.add_scaled(&outer_x, 1.0);

    let dfc_da = Jacobian::outer(&dlam_da, v).add_scaled(&jac.df_da, lambda);

    let duc_dx = add_scaled(&scaled(&dlam_dx, cost), &jac.du_dx, lambda);
    let duc_da = add_scaled(&scaled(&dlam_da, cost), &jac.du_da, lambda);

    Ok(ClippedJacobians {
        dlam_dx,
        dlam_da,
        dfc_dx,
        dfc_da,
        duc_dx,
        duc_da,
        v: v.to_vec(),
    })
}

/// Final-step Q-gradients through the clipped functions:
///
/// ```text
/// Q_• = ∂U^C/∂• + γ^λ ( (∂f^C/∂•)·∂φ/∂x + (ln γ)(∂λ/∂•)·φ )
/// ```
///
/// `φ` and `∂φ/∂x` are evaluated at the clipped terminal state. With `γ = 1`
/// the `ln γ` term is skipped entirely so the reduction to the unclipped
/// formulas is exact.
pub fn clipped_q_gradients(
    cj: &ClippedJacobians,
    phi: f64,
    dphi_dx: &[f64],
    gamma: f64,
    lambda: f64,
) -> QGradients {
    let g = gamma_pow(gamma, lambda);
    let mut q_x = cj.dfc_dx.pullback(dphi_dx);
    let mut q_u = cj.dfc_da.pullback(dphi_dx);
    if gamma != 1.0 {
        let ln_g_phi = gamma.ln() * phi;
        for (qi, li) in q_x.iter_mut().zip(&cj.dlam_dx) {
            *qi += ln_g_phi * li;
        }
        for (qi, li) in q_u.iter_mut().zip(&cj.dlam_da) {
            *qi += ln_g_phi * li;
        }
    }
    for (qi, ui) in q_x.iter_mut().zip(&cj.duc_dx) {
        *qi = ui + g * *qi;
    }
    for (qi, ui) in q_u.iter_mut().zip(&cj.duc_da) {
        *qi = ui + g * *qi;
    }
    QGradients { q_x, q_u }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Plane;

    fn plane2(point: [f64; 2], normal: [f64; 2], name: &'static str) -> Plane {
        Plane::new(point.to_vec(), normal.to_vec(), name)
    }

    #[test]
    fn midpoint_crossing() {
        let p = plane2([0.0, 0.0], [1.0, 0.0], "x0");
        let lam = clipping_fraction(&State(vec![2.0, 0.0]), &State(vec![-2.0, 0.0]), &p).unwrap();
        assert_eq!(lam, 0.5);
    }

    #[test]
    fn landing_exactly_on_plane_gives_lambda_one() {
        let p = plane2([0.0, 0.0], [1.0, 0.0], "x0");
        let lam = clipping_fraction(&State(vec![2.0, 1.0]), &State(vec![0.0, 1.0]), &p).unwrap();
        assert_eq!(lam, 1.0);
    }

    #[test]
    fn lander_height_interpolation() {
        // Ground plane of the vertical lander: ρ = 0, n = (1,0,0).
        let p = Plane::new(vec![0.0; 3], vec![1.0, 0.0, 0.0], "ground");
        let lam = clipping_fraction(
            &State(vec![1.0, -2.0, 10.0]),
            &State(vec![-1.0, -2.0, 9.8]),
            &p,
        )
        .unwrap();
        assert_eq!(lam, 0.5);
    }

    #[test]
    fn parallel_transition_is_degenerate() {
        let p = plane2([0.0, 0.0], [1.0, 0.0], "x0");
        let err = clipping_fraction(&State(vec![2.0, 0.0]), &State(vec![2.0, 5.0]), &p);
        assert!(matches!(err, Err(Error::DegeneratePlane { .. })));
    }

    #[test]
    fn non_crossing_transition_rejected() {
        let p = plane2([0.0, 0.0], [1.0, 0.0], "x0");
        let err = clipping_fraction(&State(vec![2.0, 0.0]), &State(vec![8.0, 0.0]), &p);
        assert!(matches!(err, Err(Error::LambdaOutOfRange { .. })));
    }

    #[test]
    fn clipped_transition_midpoint() {
        let p = plane2([0.0, 0.0], [1.0, 0.0], "x0");
        let (s, c) =
            clipped_transition(&State(vec![2.0, 0.0]), &State(vec![-2.0, 0.0]), 1.0, &p).unwrap();
        assert_eq!(s.as_slice(), &[0.0, 0.0]);
        assert_eq!(c, 0.5);
    }

    #[test]
    fn clipped_transition_identity_at_lambda_one() {
        let p = plane2([0.0, 0.0], [1.0, 0.0], "x0");
        let (s, c) =
            clipped_transition(&State(vec![2.0, 3.0]), &State(vec![0.0, 3.0]), 0.7, &p).unwrap();
        assert_eq!(s.as_slice(), &[0.0, 3.0]);
        assert_eq!(c, 0.7);
    }

    #[test]
    fn clipped_transition_lander_example() {
        let p = Plane::new(vec![0.0; 3], vec![1.0, 0.0, 0.0], "ground");
        let (s, c) = clipped_transition(
            &State(vec![1.0, -2.0, 10.0]),
            &State(vec![-1.0, -2.0, 9.8]),
            0.8,
            &p,
        )
        .unwrap();
        assert_eq!(s.as_slice(), &[0.0, -2.0, 9.9]);
        assert!((c - 0.4).abs() < 1e-15);
    }

    /// 1-D environment f(x, a) = x + a against hand-evaluated gradients and
    /// central differences of the fraction itself.
    #[test]
    fn fraction_gradients_one_dimensional() {
        let plane = Plane::new(vec![0.0], vec![1.0], "origin");
        let x = State(vec![1.0]);
        let a = -2.0;
        let jac = ModelJacobians {
            df_dx: Jacobian::from_rows(&[&[1.0]]),
            df_da: Jacobian::from_rows(&[&[1.0]]),
            du_dx: vec![0.0],
            du_da: vec![0.0],
        };
        let v = vec![a];
        let (dlam_dx, dlam_da) = clip_fraction_gradients(&x, &jac, &plane, &v).unwrap();
        assert!((dlam_dx[0] - 0.5).abs() < 1e-15);
        assert!((dlam_da[0] - 0.25).abs() < 1e-15);

        // Central differences of λ(x, a) = (0 − x)/a.
        let eps = 1e-6;
        let lam = |x: f64, a: f64| -> f64 {
            clipping_fraction(&State(vec![x]), &State(vec![x + a]), &plane).unwrap()
        };
        let fd_x = (lam(1.0 + eps, a) - lam(1.0 - eps, a)) / (2.0 * eps);
        let fd_a = (lam(1.0, a + eps) - lam(1.0, a - eps)) / (2.0 * eps);
        assert!((fd_x - dlam_dx[0]).abs() < 1e-9);
        assert!((fd_a - dlam_da[0]).abs() < 1e-9);
    }

    #[test]
    fn action_independent_model_has_zero_action_gradient() {
        let plane = plane2([0.0, 0.0], [1.0, 0.0], "x0");
        let jac = ModelJacobians {
            df_dx: Jacobian::from_rows(&[&[0.5, 0.0], &[0.0, 1.0]]),
            df_da: Jacobian::zeros(1, 2),
            du_dx: vec![0.0, 0.0],
            du_da: vec![0.0],
        };
        let (_, dlam_da) =
            clip_fraction_gradients(&State(vec![2.0, 1.0]), &jac, &plane, &[-3.0, 0.2]).unwrap();
        assert_eq!(dlam_da, vec![0.0]);
    }

    /// λ = 1 with vanishing λ-gradients collapses every clipped Jacobian to
    /// its unclipped counterpart, entrywise exact.
    #[test]
    fn lambda_one_reduction_is_exact() {
        let jac = ModelJacobians {
            df_dx: Jacobian::from_rows(&[&[1.2, -0.3], &[0.05, 0.9]]),
            df_da: Jacobian::from_rows(&[&[0.4, -0.7]]),
            du_dx: vec![0.1, -0.2],
            du_da: vec![0.3],
        };
        let cj = ClippedJacobians {
            dlam_dx: vec![0.0, 0.0],
            dlam_da: vec![0.0],
            dfc_dx: {
                let eye = Jacobian::identity(2);
                eye.add_scaled(&jac.df_dx.add_scaled(&eye, -1.0), 1.0)
            },
            dfc_da: Jacobian::outer(&[0.0], &[0.0, 0.0]).add_scaled(&jac.df_da, 1.0),
            duc_dx: add_scaled(&[0.0, 0.0], &jac.du_dx, 1.0),
            duc_da: add_scaled(&[0.0], &jac.du_da, 1.0),
            v: vec![0.7, -0.1],
        };
        assert_eq!(cj.dfc_dx.entries(), jac.df_dx.entries());
        assert_eq!(cj.dfc_da.entries(), jac.df_da.entries());
        assert_eq!(cj.duc_dx, jac.du_dx);
        assert_eq!(cj.duc_da, jac.du_da);

        // And Eq-for-eq, the clipped Q-gradients reduce to the unclipped
        // ones when γ = 1 and the φ-gradient plays the role of p.
        let dphi = vec![0.25, -0.5];
        let q = clipped_q_gradients(&cj, 3.0, &dphi, 1.0, 1.0);
        let expect_qx = add_scaled(&jac.du_dx, &jac.df_dx.pullback(&dphi), 1.0);
        let expect_qu = add_scaled(&jac.du_da, &jac.df_da.pullback(&dphi), 1.0);
        assert_eq!(q.q_x, expect_qx);
        assert_eq!(q.q_u, expect_qu);
    }

    #[test]
    fn q_gradients_gamma_one_drops_log_term() {
        let cj = ClippedJacobians {
            dlam_dx: vec![10.0, 10.0],
            dlam_da: vec![10.0],
            dfc_dx: Jacobian::identity(2),
            dfc_da: Jacobian::zeros(1, 2),
            duc_dx: vec![0.0, 0.0],
            duc_da: vec![0.0],
            v: vec![1.0, 0.0],
        };
        // With γ = 1 the (ln γ)(∂λ/∂•)φ term must vanish exactly no matter
        // how large the λ-gradients are.
        let q = clipped_q_gradients(&cj, 1e6, &[1.0, 2.0], 1.0, 0.5);
        assert_eq!(q.q_x, vec![1.0, 2.0]);
        assert_eq!(q.q_u, vec![0.0]);
    }

    #[test]
    fn q_gradients_zero_terminal_cost() {
        let cj = ClippedJacobians {
            dlam_dx: vec![0.3, -0.1],
            dlam_da: vec![0.2],
            dfc_dx: Jacobian::identity(2),
            dfc_da: Jacobian::from_rows(&[&[0.5, 0.5]]),
            duc_dx: vec![0.0, 0.0],
            duc_da: vec![0.7],
            v: vec![1.0, 0.0],
        };
        // φ = 0 with zero gradient: only the clipped cost derivative remains.
        let q = clipped_q_gradients(&cj, 0.0, &[0.0, 0.0], 0.97, 0.4);
        assert_eq!(q.q_u, vec![0.7]);
        assert_eq!(q.q_x, vec![0.0, 0.0]);
    }

    /// The clipped model maps every perturbation onto the plane: the
    /// pushforward of any direction has no normal component.
    #[test]
    fn clipped_jacobian_output_tangent_to_plane() {
        let plane = plane2([0.0, 0.0], [1.0, 0.0], "x0");
        let jac = ModelJacobians {
            df_dx: Jacobian::from_rows(&[&[1.0, 0.3], &[0.6, 1.1]]),
            df_da: Jacobian::from_rows(&[&[0.9, -0.2]]),
            du_dx: vec![0.0, 0.0],
            du_da: vec![1.0],
        };
        let x = State(vec![2.0, 1.0]);
        let v = vec![-3.0, 0.5];
        let lambda = 2.0 / 3.0;
        let cj = clipped_jacobians(&x, &v, 0.8, &jac, &plane, lambda).unwrap();
        for dir in [[1.0, 0.0], [0.0, 1.0], [0.3, -0.8]] {
            let moved = cj.dfc_dx.pushforward(&dir);
            assert!(dot(&moved, &plane.normal).abs() < 1e-12);
        }
    }
}
