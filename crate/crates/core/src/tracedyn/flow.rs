use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{CoreError, Result};

use super::poly::{trace_derivative, Factor, MatrixDegree, TracePolynomial, VarKind, VarRef};

/// Integration scheme picked by [`hamilton_flow`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowScheme {
    /// Second-order symplectic kick-drift-kick; used for separable H.
    Leapfrog,
    /// Classical fourth-order Runge-Kutta; fallback for general H.
    Rk4,
}

/// A Hamiltonian is separable when every term mixes no q with p: kicks then
/// depend only on q, drifts only on p.
pub fn is_separable(h: &TracePolynomial) -> bool {
    h.terms.iter().all(|t| {
        let mut has_q = false;
        let mut has_p = false;
        for f in &t.factors {
            if let Factor::Var(v) = f {
                match v.kind {
                    VarKind::Q => has_q = true,
                    VarKind::P => has_p = true,
                }
            }
        }
        !(has_q && has_p)
    })
}

/// Evolves the matrix degrees of freedom under
/// dq_r/dt = dH/dp_r, dp_r/dt = -dH/dq_r.
///
/// Separable Hamiltonians integrate by leapfrog, general ones by RK4; the
/// scheme used is returned alongside the evolved state.
pub fn hamilton_flow(
    dofs: &[MatrixDegree],
    h: &TracePolynomial,
    dt: f64,
    n_steps: usize,
) -> Result<(Vec<MatrixDegree>, FlowScheme)> {
    if dofs.is_empty() {
        return Err(CoreError::InvalidArgument("no degrees of freedom".into()));
    }
    if let Some(max) = h.max_dof() {
        if max >= dofs.len() {
            return Err(CoreError::UnboundVariable(format!(
                "H references dof {max}, binding has {}",
                dofs.len()
            )));
        }
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(CoreError::InvalidArgument(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let mut state = dofs.to_vec();
    let scheme = if is_separable(h) {
        for step in 0..n_steps {
            leapfrog_step(&mut state, h, dt)?;
            check_finite(&state, step)?;
        }
        FlowScheme::Leapfrog
    } else {
        for step in 0..n_steps {
            rk4_step(&mut state, h, dt)?;
            check_finite(&state, step)?;
        }
        FlowScheme::Rk4
    };
    Ok((state, scheme))
}

fn check_finite(state: &[MatrixDegree], step: usize) -> Result<()> {
    for d in state {
        if d.q
            .iter()
            .chain(d.p.iter())
            .any(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(CoreError::NonFinite {
                context: format!("hamilton flow, dof {}", d.label),
                step,
            });
        }
    }
    Ok(())
}

fn kick(state: &mut [MatrixDegree], h: &TracePolynomial, dt: f64) -> Result<()> {
    let grads: Vec<DMatrix<Complex64>> = (0..state.len())
        .map(|r| trace_derivative(h, VarRef::q(r), state))
        .collect::<Result<_>>()?;
    for (d, g) in state.iter_mut().zip(grads) {
        d.p -= g * Complex64::new(dt, 0.0);
    }
    Ok(())
}

fn drift(state: &mut [MatrixDegree], h: &TracePolynomial, dt: f64) -> Result<()> {
    let grads: Vec<DMatrix<Complex64>> = (0..state.len())
        .map(|r| trace_derivative(h, VarRef::p(r), state))
        .collect::<Result<_>>()?;
    for (d, g) in state.iter_mut().zip(grads) {
        d.q += g * Complex64::new(dt, 0.0);
    }
    Ok(())
}

fn leapfrog_step(state: &mut [MatrixDegree], h: &TracePolynomial, dt: f64) -> Result<()> {
    kick(state, h, 0.5 * dt)?;
    drift(state, h, dt)?;
    kick(state, h, 0.5 * dt)
}

fn rk4_step(state: &mut [MatrixDegree], h: &TracePolynomial, dt: f64) -> Result<()> {
    type Deriv = Vec<(DMatrix<Complex64>, DMatrix<Complex64>)>;
    let rhs = |s: &[MatrixDegree]| -> Result<Deriv> {
        (0..s.len())
            .map(|r| {
                let dq = trace_derivative(h, VarRef::p(r), s)?;
                let dp = -trace_derivative(h, VarRef::q(r), s)?;
                Ok((dq, dp))
            })
            .collect()
    };
    let advance = |s: &[MatrixDegree], k: &Deriv, f: f64| -> Vec<MatrixDegree> {
        s.iter()
            .zip(k)
            .map(|(d, (dq, dp))| MatrixDegree {
                label: d.label.clone(),
                q: &d.q + dq * Complex64::new(f, 0.0),
                p: &d.p + dp * Complex64::new(f, 0.0),
            })
            .collect()
    };
    let k1 = rhs(state)?;
    let k2 = rhs(&advance(state, &k1, 0.5 * dt))?;
    let k3 = rhs(&advance(state, &k2, 0.5 * dt))?;
    let k4 = rhs(&advance(state, &k3, dt))?;
    for (r, d) in state.iter_mut().enumerate() {
        let c = Complex64::new(dt / 6.0, 0.0);
        let two = Complex64::new(2.0, 0.0);
        d.q += (&k1[r].0 + &k2[r].0 * two + &k3[r].0 * two + &k4[r].0) * c;
        d.p += (&k1[r].1 + &k2[r].1 * two + &k3[r].1 * two + &k4[r].1) * c;
    }
    Ok(())
}

/// Bosonic conserved charge C = sum_r [q_r, p_r].
pub fn adler_millard(dofs: &[MatrixDegree]) -> DMatrix<Complex64> {
    let dim = dofs[0].dim();
    let mut c = DMatrix::<Complex64>::zeros(dim, dim);
    for d in dofs {
        c += &d.q * &d.p - &d.p * &d.q;
    }
    c
}
