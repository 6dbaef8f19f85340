//! Output formats: CSV with `#`-prefixed metadata headers, a compact binary
//! density snapshot, and JSON for matrix-valued systems.
//!
//! All floating-point text output uses 17 significant digits so runs are
//! reproducible byte for byte from the same configuration.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read as _, Write};
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::density::DensityMatrix;
use crate::error::{CoreError, Result};
use crate::exclusion::ExclusionGrid;
use crate::grid::Grid1D;
use crate::sde::TrajectoryRecord;
use crate::tracedyn::{MatrixDegree, MatrixFourVector};
use crate::wavefunction::Wavefunction;

/// Round-trip-exact float formatting shared by every text writer.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_metadata(w: &mut impl Write, metadata: &[(String, String)]) -> Result<()> {
    for (key, value) in metadata {
        writeln!(w, "# {key} = {value}")?;
    }
    Ok(())
}

/// Observable series of one trajectory: a `time` column plus one column per
/// recorded observable.
pub fn write_trajectory_csv(
    path: &Path,
    record: &TrajectoryRecord,
    metadata: &[(String, String)],
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_metadata(&mut w, metadata)?;
    let columns: Vec<String> = record.observables.iter().map(|o| o.column_name()).collect();
    writeln!(w, "time,{}", columns.join(","))?;
    for (i, t) in record.times.iter().enumerate() {
        write!(w, "{}", fmt_f64(*t))?;
        for series in &record.series {
            write!(w, ",{}", fmt_f64(series[i]))?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Final-state amplitudes and density on the lattice.
pub fn write_wavefunction_csv(
    path: &Path,
    psi: &Wavefunction,
    metadata: &[(String, String)],
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_metadata(&mut w, metadata)?;
    writeln!(w, "x,re,im,density")?;
    let density = psi.density();
    for (i, x) in psi.grid().positions().enumerate() {
        let a = psi.amps()[i];
        writeln!(
            w,
            "{},{},{},{}",
            fmt_f64(x),
            fmt_f64(a.re),
            fmt_f64(a.im),
            fmt_f64(density[i])
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Full density matrix, one row per element.
pub fn write_density_csv(
    path: &Path,
    rho: &DensityMatrix,
    metadata: &[(String, String)],
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_metadata(&mut w, metadata)?;
    writeln!(w, "a,b,re,im")?;
    let n = rho.grid().n_sites();
    for a in 0..n {
        for b in 0..n {
            let v = rho.elements()[(a, b)];
            writeln!(w, "{a},{b},{},{}", fmt_f64(v.re), fmt_f64(v.im))?;
        }
    }
    w.flush()?;
    Ok(())
}

const DENSITY_MAGIC: &[u8; 8] = b"RHOSNAP\x01";

/// Binary density snapshot: magic, n_sites, dx, x_min, then row-major
/// interleaved (re, im) pairs, all little-endian.
pub fn write_density_snapshot(path: &Path, rho: &DensityMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(DENSITY_MAGIC)?;
    let grid = rho.grid();
    w.write_all(&(grid.n_sites() as u64).to_le_bytes())?;
    w.write_all(&grid.dx().to_le_bytes())?;
    w.write_all(&grid.x_min().to_le_bytes())?;
    for a in 0..grid.n_sites() {
        for b in 0..grid.n_sites() {
            let v = rho.elements()[(a, b)];
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_density_snapshot(path: &Path) -> Result<DensityMatrix> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != DENSITY_MAGIC {
        return Err(CoreError::MalformedFile(format!(
            "{}: bad magic",
            path.display()
        )));
    }
    let mut u = [0u8; 8];
    r.read_exact(&mut u)?;
    let n = u64::from_le_bytes(u) as usize;
    r.read_exact(&mut u)?;
    let dx = f64::from_le_bytes(u);
    r.read_exact(&mut u)?;
    let x_min = f64::from_le_bytes(u);
    let grid = Grid1D::new(n, dx, x_min)?;
    let mut elements = DMatrix::<Complex64>::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            r.read_exact(&mut u)?;
            let re = f64::from_le_bytes(u);
            r.read_exact(&mut u)?;
            let im = f64::from_le_bytes(u);
            elements[(a, b)] = Complex64::new(re, im);
        }
    }
    DensityMatrix::new(grid, elements)
}

/// Exclusion scan, one row per (lambda, r_C) cell.
pub fn write_exclusion_csv(
    path: &Path,
    grid: &ExclusionGrid,
    metadata: &[(String, String)],
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_metadata(&mut w, metadata)?;
    writeln!(w, "lambda,r_c,excluded,binding_record")?;
    for (i, lambda) in grid.lambda_axis.iter().enumerate() {
        for (j, r_c) in grid.r_c_axis.iter().enumerate() {
            let (excluded, binding) = grid.cell(i, j);
            writeln!(
                w,
                "{},{},{},{}",
                fmt_f64(*lambda),
                fmt_f64(*r_c),
                u8::from(excluded),
                binding
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Complex matrix as nested arrays of [re, im] pairs, row by row.
pub fn matrix_to_json(m: &DMatrix<Complex64>) -> Value {
    let rows: Vec<Value> = (0..m.nrows())
        .map(|i| {
            let row: Vec<Value> = (0..m.ncols())
                .map(|j| json!([m[(i, j)].re, m[(i, j)].im]))
                .collect();
            Value::Array(row)
        })
        .collect();
    Value::Array(rows)
}

pub fn matrix_from_json(value: &Value) -> Result<DMatrix<Complex64>> {
    let rows = value
        .as_array()
        .ok_or_else(|| CoreError::MalformedFile("matrix must be an array of rows".into()))?;
    let n_rows = rows.len();
    let mut entries = Vec::new();
    let mut n_cols = None;
    for row in rows {
        let row = row
            .as_array()
            .ok_or_else(|| CoreError::MalformedFile("matrix row must be an array".into()))?;
        match n_cols {
            None => n_cols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(CoreError::MalformedFile("ragged matrix rows".into()))
            }
            _ => {}
        }
        for entry in row {
            let pair = entry
                .as_array()
                .filter(|p| p.len() == 2)
                .ok_or_else(|| CoreError::MalformedFile("entry must be a [re, im] pair".into()))?;
            let re = pair[0]
                .as_f64()
                .ok_or_else(|| CoreError::MalformedFile("non-numeric matrix entry".into()))?;
            let im = pair[1]
                .as_f64()
                .ok_or_else(|| CoreError::MalformedFile("non-numeric matrix entry".into()))?;
            entries.push(Complex64::new(re, im));
        }
    }
    let n_cols = n_cols.unwrap_or(0);
    if n_rows == 0 || n_cols == 0 {
        return Err(CoreError::MalformedFile("empty matrix".into()));
    }
    Ok(DMatrix::from_row_iterator(n_rows, n_cols, entries))
}

pub fn four_vector_to_json(dv: &MatrixFourVector) -> Value {
    json!({
        "t": matrix_to_json(&dv.t),
        "x": matrix_to_json(&dv.x),
        "y": matrix_to_json(&dv.y),
        "z": matrix_to_json(&dv.z),
    })
}

pub fn four_vector_from_json(value: &Value) -> Result<MatrixFourVector> {
    let field = |name: &str| -> Result<DMatrix<Complex64>> {
        matrix_from_json(
            value
                .get(name)
                .ok_or_else(|| CoreError::MalformedFile(format!("missing component {name}")))?,
        )
    };
    MatrixFourVector::new(field("t")?, field("x")?, field("y")?, field("z")?)
}

pub fn dofs_to_json(dofs: &[MatrixDegree]) -> Value {
    let items: Vec<Value> = dofs
        .iter()
        .map(|d| {
            json!({
                "label": d.label,
                "q": matrix_to_json(&d.q),
                "p": matrix_to_json(&d.p),
            })
        })
        .collect();
    Value::Array(items)
}

pub fn dofs_from_json(value: &Value) -> Result<Vec<MatrixDegree>> {
    let items = value
        .as_array()
        .ok_or_else(|| CoreError::MalformedFile("degrees of freedom must be an array".into()))?;
    items
        .iter()
        .map(|item| {
            let label = item
                .get("label")
                .and_then(Value::as_str)
                .ok_or_else(|| CoreError::MalformedFile("missing dof label".into()))?;
            let q = matrix_from_json(
                item.get("q")
                    .ok_or_else(|| CoreError::MalformedFile("missing q matrix".into()))?,
            )?;
            let p = matrix_from_json(
                item.get("p")
                    .ok_or_else(|| CoreError::MalformedFile("missing p matrix".into()))?,
            )?;
            MatrixDegree::new(label, q, p)
        })
        .collect()
}

pub fn save_json(path: &Path, value: &Value) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn load_json(path: &Path) -> Result<Value> {
    let file = File::open(path)?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

/// Read back the `# key = value` header of a CSV written by this module.
pub fn read_csv_metadata(path: &Path) -> Result<Vec<(String, String)>> {
    let file = File::open(path)?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line?;
        let Some(rest) = line.strip_prefix('#') else {
            break;
        };
        if let Some((key, value)) = rest.split_once('=') {
            out.push((key.trim().to_string(), value.trim().to_string()));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;
    use crate::tracedyn::random_hermitian;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("csl-io-tests");
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn density_snapshot_round_trip() {
        let grid = Grid1D::centered(16, 0.25).unwrap();
        let psi = Wavefunction::gaussian(&grid, 0.3, 0.7, 0.0).unwrap();
        let rho = DensityMatrix::from_pure(&psi);
        let path = tmp("rho.bin");
        write_density_snapshot(&path, &rho).unwrap();
        let back = read_density_snapshot(&path).unwrap();
        assert_eq!(back.grid(), rho.grid());
        assert!((back.elements() - rho.elements()).norm() == 0.0);
    }

    #[test]
    fn matrix_json_round_trip() {
        let mut rng = CounterRng::new(5);
        let m = random_hermitian(4, &mut rng);
        let back = matrix_from_json(&matrix_to_json(&m)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn malformed_matrix_rejected() {
        let ragged = json!([[[1.0, 0.0]], [[1.0, 0.0], [2.0, 0.0]]]);
        assert!(matches!(
            matrix_from_json(&ragged),
            Err(CoreError::MalformedFile(_))
        ));
        assert!(matrix_from_json(&json!([])).is_err());
        assert!(matrix_from_json(&json!([[1.0]])).is_err());
    }

    #[test]
    fn metadata_header_round_trip() {
        let grid = Grid1D::centered(8, 0.5).unwrap();
        let psi = Wavefunction::gaussian(&grid, 0.0, 1.0, 0.0).unwrap();
        let path = tmp("psi.csv");
        let meta = vec![
            ("seed".to_string(), "42".to_string()),
            ("dx".to_string(), fmt_f64(0.5)),
        ];
        write_wavefunction_csv(&path, &psi, &meta).unwrap();
        assert_eq!(read_csv_metadata(&path).unwrap(), meta);
    }
}
