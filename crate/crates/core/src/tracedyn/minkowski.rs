use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{CoreError, Result};
use crate::rng::CounterRng;

/// Noncommuting coordinate displacements (dt, dx, dy, dz) as N x N
/// Hermitian matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFourVector {
    pub t: DMatrix<Complex64>,
    pub x: DMatrix<Complex64>,
    pub y: DMatrix<Complex64>,
    pub z: DMatrix<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl MatrixFourVector {
    pub fn new(
        t: DMatrix<Complex64>,
        x: DMatrix<Complex64>,
        y: DMatrix<Complex64>,
        z: DMatrix<Complex64>,
    ) -> Result<Self> {
        let n = t.nrows();
        for m in [&t, &x, &y, &z] {
            if m.nrows() != n || m.ncols() != n {
                return Err(CoreError::InvalidArgument(
                    "four-vector components must share one square dimension".into(),
                ));
            }
        }
        Ok(Self { t, x, y, z })
    }

    pub fn dim(&self) -> usize {
        self.t.nrows()
    }

    pub fn hermiticity_error(&self) -> f64 {
        [&self.t, &self.x, &self.y, &self.z]
            .iter()
            .map(|m| (*m - m.adjoint()).norm())
            .fold(0.0, f64::max)
    }

    pub fn component(&self, axis: Axis) -> &DMatrix<Complex64> {
        match axis {
            Axis::X => &self.x,
            Axis::Y => &self.y,
            Axis::Z => &self.z,
        }
    }

    /// Frobenius scale of all four components, for relative tolerances.
    pub fn scale(&self) -> f64 {
        [&self.t, &self.x, &self.y, &self.z]
            .iter()
            .map(|m| m.norm_squared())
            .sum::<f64>()
            .sqrt()
    }
}

/// Trace proper time ds^2 = Tr[dt^2 - dx^2 - dy^2 - dz^2]; real for
/// Hermitian components (errors NonHermitian beyond 1e-10 asymmetry).
pub fn trace_line_element(dv: &MatrixFourVector) -> Result<f64> {
    let asym = dv.hermiticity_error();
    if asym > 1e-10 {
        return Err(CoreError::NonHermitian(asym));
    }
    let sq_trace = |m: &DMatrix<Complex64>| (m * m).trace();
    let total = sq_trace(&dv.t) - sq_trace(&dv.x) - sq_trace(&dv.y) - sq_trace(&dv.z);
    Ok(total.re)
}

/// Boost along one axis: dt' = cosh(eta) dt - sinh(eta) da,
/// da' = -sinh(eta) dt + cosh(eta) da; the other components are unchanged.
/// The line element is invariant even for noncommuting components because
/// the symmetric cross terms cancel.
pub fn lorentz_boost(dv: &MatrixFourVector, rapidity: f64, axis: Axis) -> MatrixFourVector {
    let ch = Complex64::new(rapidity.cosh(), 0.0);
    let sh = Complex64::new(rapidity.sinh(), 0.0);
    let a = dv.component(axis);
    let t_new = &dv.t * ch - a * sh;
    let a_new = -(&dv.t * sh) + a * ch;
    let mut out = dv.clone();
    out.t = t_new;
    match axis {
        Axis::X => out.x = a_new,
        Axis::Y => out.y = a_new,
        Axis::Z => out.z = a_new,
    }
    out
}

/// Random Hermitian matrix with entries of unit scale; used by the boost
/// invariance checks and the CLI reports.
pub fn random_hermitian(n: usize, rng: &mut CounterRng) -> DMatrix<Complex64> {
    let a = DMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    });
    (&a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Random Hermitian four-vector of dimension n.
pub fn random_four_vector(n: usize, rng: &mut CounterRng) -> MatrixFourVector {
    MatrixFourVector {
        t: random_hermitian(n, rng),
        x: random_hermitian(n, rng),
        y: random_hermitian(n, rng),
        z: random_hermitian(n, rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_time_displacement() {
        let n = 5;
        let dt = 0.3;
        let dv = MatrixFourVector::new(
            DMatrix::identity(n, n) * Complex64::new(dt, 0.0),
            DMatrix::zeros(n, n),
            DMatrix::zeros(n, n),
            DMatrix::zeros(n, n),
        )
        .unwrap();
        let ds2 = trace_line_element(&dv).unwrap();
        assert!((ds2 - n as f64 * dt * dt).abs() < 1e-14);
    }

    #[test]
    fn null_displacement_vanishes() {
        let mut rng = CounterRng::new(3);
        let h = random_hermitian(4, &mut rng);
        let dv = MatrixFourVector::new(h.clone(), h, DMatrix::zeros(4, 4), DMatrix::zeros(4, 4))
            .unwrap();
        assert!(trace_line_element(&dv).unwrap().abs() < 1e-12);
    }

    #[test]
    fn matches_direct_evaluation() {
        let mut rng = CounterRng::new(7);
        let dv = random_four_vector(4, &mut rng);
        let ds2 = trace_line_element(&dv).unwrap();
        let direct = (&dv.t * &dv.t).trace().re
            - (&dv.x * &dv.x).trace().re
            - (&dv.y * &dv.y).trace().re
            - (&dv.z * &dv.z).trace().re;
        assert!((ds2 - direct).abs() < 1e-12);
    }

    #[test]
    fn non_hermitian_rejected() {
        let mut m = DMatrix::<Complex64>::zeros(3, 3);
        m[(0, 1)] = Complex64::new(1.0, 0.0);
        let dv = MatrixFourVector::new(
            m,
            DMatrix::zeros(3, 3),
            DMatrix::zeros(3, 3),
            DMatrix::zeros(3, 3),
        )
        .unwrap();
        assert!(matches!(
            trace_line_element(&dv),
            Err(CoreError::NonHermitian(_))
        ));
    }

    #[test]
    fn zero_rapidity_is_identity() {
        let mut rng = CounterRng::new(11);
        let dv = random_four_vector(3, &mut rng);
        let out = lorentz_boost(&dv, 0.0, Axis::X);
        assert_eq!(out, dv);
    }

    #[test]
    fn boost_preserves_line_element_for_noncommuting_components() {
        let mut rng = CounterRng::new(13);
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            let dv = random_four_vector(4, &mut rng);
            // components genuinely noncommuting
            let comm = (&dv.t * dv.component(axis) - dv.component(axis) * &dv.t).norm();
            assert!(comm > 1e-3);
            let ds2 = trace_line_element(&dv).unwrap();
            let boosted = lorentz_boost(&dv, 0.5, axis);
            let ds2_b = trace_line_element(&boosted).unwrap();
            assert!(
                (ds2 - ds2_b).abs() < 1e-12 * dv.scale().max(1.0),
                "axis {axis:?}: {ds2} vs {ds2_b}"
            );
        }
    }

    #[test]
    fn boost_inverse_composes_to_identity() {
        let mut rng = CounterRng::new(17);
        let dv = random_four_vector(4, &mut rng);
        let back = lorentz_boost(&lorentz_boost(&dv, 0.8, Axis::Y), -0.8, Axis::Y);
        assert!((&back.t - &dv.t).norm() < 1e-12);
        assert!((&back.y - &dv.y).norm() < 1e-12);
        assert!((&back.x - &dv.x).norm() < 1e-14);
    }
}
