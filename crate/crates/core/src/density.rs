use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::grid::Grid1D;
use crate::sde::TrajectoryRecord;
use crate::wavefunction::Wavefunction;

/// Position-basis density matrix rho(x_a, x_b) with trace normalization
/// sum_a rho(a, a) dx = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    grid: Grid1D,
    elements: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn new(grid: Grid1D, elements: DMatrix<Complex64>) -> Result<Self> {
        if elements.nrows() != grid.n_sites() || elements.ncols() != grid.n_sites() {
            return Err(CoreError::GridMismatch(format!(
                "{}x{} matrix on a {}-site grid",
                elements.nrows(),
                elements.ncols(),
                grid.n_sites()
            )));
        }
        let rho = Self { grid, elements };
        let herm = rho.hermiticity_error();
        if herm > 1e-12 {
            return Err(CoreError::InvalidArgument(format!(
                "density matrix not Hermitian (max asymmetry {herm:.3e})"
            )));
        }
        let tr = rho.trace();
        if (tr - 1.0).abs() > 1e-10 {
            return Err(CoreError::InvalidArgument(format!(
                "density matrix trace {tr} differs from 1"
            )));
        }
        Ok(rho)
    }

    /// |psi><psi| for a normalized state.
    pub fn from_pure(psi: &Wavefunction) -> Self {
        let n = psi.grid().n_sites();
        let amps = psi.amps();
        let elements = DMatrix::from_fn(n, n, |a, b| amps[a] * amps[b].conj());
        Self {
            grid: psi.grid().clone(),
            elements,
        }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn elements(&self) -> &DMatrix<Complex64> {
        &self.elements
    }

    pub(crate) fn elements_mut(&mut self) -> &mut DMatrix<Complex64> {
        &mut self.elements
    }

    pub fn trace(&self) -> f64 {
        (0..self.grid.n_sites())
            .map(|i| self.elements[(i, i)].re)
            .sum::<f64>()
            * self.grid.dx()
    }

    /// Tr rho^2, equals 1 for a pure state.
    pub fn purity(&self) -> f64 {
        let dx2 = self.grid.dx() * self.grid.dx();
        let n = self.grid.n_sites();
        let mut sum = 0.0;
        for a in 0..n {
            for b in 0..n {
                sum += (self.elements[(a, b)] * self.elements[(b, a)]).re;
            }
        }
        sum * dx2
    }

    pub fn hermiticity_error(&self) -> f64 {
        let n = self.grid.n_sites();
        let mut max = 0.0f64;
        for a in 0..n {
            for b in a..n {
                let d = (self.elements[(a, b)] - self.elements[(b, a)].conj()).norm();
                max = max.max(d);
            }
        }
        max
    }

    /// Smallest eigenvalue in probability normalization (eigenvalues of
    /// elements * dx).
    ///
    /// Found by bisecting the largest shift t with (rho - t I) positive
    /// definite; Cholesky has no convergence failure mode, unlike the
    /// iterative symmetric eigensolver, which can return NaN on large
    /// matrices.
    pub fn min_eigenvalue(&self) -> f64 {
        let scaled = self.elements.clone() * Complex64::new(self.grid.dx(), 0.0);
        let n = scaled.nrows();
        let radius = (0..n)
            .map(|i| (0..n).map(|j| scaled[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max);
        if radius == 0.0 {
            return 0.0;
        }
        let (mut lo, mut hi) = (-radius, radius);
        for _ in 0..48 {
            let mid = 0.5 * (lo + hi);
            let mut shifted = scaled.clone();
            for i in 0..n {
                shifted[(i, i)] -= Complex64::new(mid, 0.0);
            }
            if nalgebra::Cholesky::new(shifted).is_some() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Trace distance (1/2) ||rho - sigma||_1 dx, computed from singular
    /// values (equal to |eigenvalues| for the Hermitian difference).
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        self.grid.check_same(&other.grid, "trace distance")?;
        let diff = (&self.elements - &other.elements) * Complex64::new(self.grid.dx(), 0.0);
        Ok(0.5 * diff.singular_values().iter().sum::<f64>())
    }

    /// Aggregate off-diagonal magnitude between two site ranges:
    /// sum_{a in left, b in right} |rho(a, b)| dx^2.
    pub fn cross_coherence(&self, left: (usize, usize), right: (usize, usize)) -> f64 {
        let dx2 = self.grid.dx() * self.grid.dx();
        let mut sum = 0.0;
        for a in left.0..left.1 {
            for b in right.0..right.1 {
                sum += self.elements[(a, b)].norm();
            }
        }
        sum * dx2
    }
}

/// Mean of |psi><psi| over an ensemble at one snapshot index; the reduction
/// runs in trajectory order.
pub fn ensemble_average(records: &[TrajectoryRecord], time_index: usize) -> Result<DensityMatrix> {
    if records.len() < 2 {
        return Err(CoreError::InsufficientData(format!(
            "ensemble average needs >= 2 trajectories, got {}",
            records.len()
        )));
    }
    let first = &records[0];
    if first.snapshots.is_empty() {
        return Err(CoreError::ScheduleMismatch(
            "records carry no wavefunction snapshots".into(),
        ));
    }
    for (i, r) in records.iter().enumerate() {
        if r.times != first.times || r.snapshots.len() != first.snapshots.len() {
            return Err(CoreError::ScheduleMismatch(format!(
                "trajectory {i} has a different snapshot schedule"
            )));
        }
    }
    if time_index >= first.snapshots.len() {
        return Err(CoreError::InvalidArgument(format!(
            "time index {time_index} out of range ({} snapshots)",
            first.snapshots.len()
        )));
    }

    let grid = first.snapshots[0].grid().clone();
    let n = grid.n_sites();
    let mut acc = DMatrix::<Complex64>::zeros(n, n);
    for r in records {
        let psi = &r.snapshots[time_index];
        psi.grid().check_same(&grid, "ensemble average")?;
        let amps = psi.amps();
        for b in 0..n {
            let cb = amps[b].conj();
            for a in 0..n {
                acc[(a, b)] += amps[a] * cb;
            }
        }
    }
    let scale = Complex64::new(1.0 / records.len() as f64, 0.0);
    DensityMatrix::new(grid, acc * scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sde::Observable;

    fn pure_record(psi: &Wavefunction) -> TrajectoryRecord {
        TrajectoryRecord {
            times: vec![0.0],
            observables: vec![Observable::Norm],
            series: vec![vec![1.0]],
            snapshots: vec![psi.clone()],
            final_state: psi.clone(),
            seed: 0,
            stream: 0,
        }
    }

    #[test]
    fn pure_state_has_unit_purity() {
        let g = Grid1D::centered(32, 0.5).unwrap();
        let psi = Wavefunction::gaussian(&g, 0.0, 1.5, 0.0).unwrap();
        let rho = DensityMatrix::from_pure(&psi);
        assert!((rho.trace() - 1.0).abs() < 1e-12);
        assert!((rho.purity() - 1.0).abs() < 1e-10);
        assert!(rho.hermiticity_error() < 1e-14);
    }

    #[test]
    fn identical_trajectories_average_to_pure_state() {
        let g = Grid1D::centered(16, 0.5).unwrap();
        let psi = Wavefunction::gaussian(&g, 0.0, 1.5, 0.0).unwrap();
        let records = vec![pure_record(&psi), pure_record(&psi)];
        let rho = ensemble_average(&records, 0).unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn orthogonal_pair_averages_to_half_mixture() {
        let g = Grid1D::centered(16, 0.5).unwrap();
        let a = Wavefunction::site_eigenstate(&g, 3).unwrap();
        let b = Wavefunction::site_eigenstate(&g, 11).unwrap();
        let rho = ensemble_average(&[pure_record(&a), pure_record(&b)], 0).unwrap();
        // diagonal entries carry probability 1/2 each
        let p3 = rho.elements()[(3, 3)].re * g.dx();
        let p11 = rho.elements()[(11, 11)].re * g.dx();
        assert!((p3 - 0.5).abs() < 1e-12);
        assert!((p11 - 0.5).abs() < 1e-12);
        assert!((rho.purity() - 0.5).abs() < 1e-10);
        assert!(rho.min_eigenvalue() > -1e-12);
    }

    #[test]
    fn schedule_mismatch_detected() {
        let g = Grid1D::centered(16, 0.5).unwrap();
        let psi = Wavefunction::gaussian(&g, 0.0, 1.5, 0.0).unwrap();
        let mut r2 = pure_record(&psi);
        r2.times = vec![1.0];
        assert!(matches!(
            ensemble_average(&[pure_record(&psi), r2], 0),
            Err(CoreError::ScheduleMismatch(_))
        ));
    }

    #[test]
    fn too_few_trajectories_rejected() {
        let g = Grid1D::centered(16, 0.5).unwrap();
        let psi = Wavefunction::gaussian(&g, 0.0, 1.5, 0.0).unwrap();
        assert!(matches!(
            ensemble_average(&[pure_record(&psi)], 0),
            Err(CoreError::InsufficientData(_))
        ));
    }
}
