use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{CoreError, Result};

/// Configuration or momentum variable of one degree of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Q,
    P,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarRef {
    pub dof: usize,
    pub kind: VarKind,
}

impl VarRef {
    pub fn q(dof: usize) -> Self {
        Self {
            dof,
            kind: VarKind::Q,
        }
    }

    pub fn p(dof: usize) -> Self {
        Self {
            dof,
            kind: VarKind::P,
        }
    }
}

impl std::fmt::Display for VarRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.kind {
            VarKind::Q => write!(f, "q{}", self.dof),
            VarKind::P => write!(f, "p{}", self.dof),
        }
    }
}

/// One factor in an ordered matrix product.
#[derive(Debug, Clone, PartialEq)]
pub enum Factor {
    Var(VarRef),
    Const(DMatrix<Complex64>),
}

/// coeff * factor_0 factor_1 ... factor_k (matrix product before tracing).
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coeff: Complex64,
    pub factors: Vec<Factor>,
}

/// Bosonic canonical pair of N x N complex matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixDegree {
    pub label: String,
    pub q: DMatrix<Complex64>,
    pub p: DMatrix<Complex64>,
}

impl MatrixDegree {
    pub fn new(
        label: impl Into<String>,
        q: DMatrix<Complex64>,
        p: DMatrix<Complex64>,
    ) -> Result<Self> {
        if q.nrows() != q.ncols() || q.shape() != p.shape() || q.nrows() < 2 {
            return Err(CoreError::InvalidArgument(
                "q and p must be square matrices of equal dimension >= 2".into(),
            ));
        }
        if q.iter()
            .chain(p.iter())
            .any(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(CoreError::InvalidArgument(
                "degree-of-freedom matrices must be finite".into(),
            ));
        }
        Ok(Self {
            label: label.into(),
            q,
            p,
        })
    }

    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn var(&self, kind: VarKind) -> &DMatrix<Complex64> {
        match kind {
            VarKind::Q => &self.q,
            VarKind::P => &self.p,
        }
    }
}

/// Sum of traced matrix products in the variables {q_r, p_r}.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TracePolynomial {
    pub terms: Vec<Term>,
}

impl TracePolynomial {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn term(mut self, coeff: Complex64, factors: Vec<Factor>) -> Self {
        self.terms.push(Term { coeff, factors });
        self
    }

    pub fn real_term(self, coeff: f64, factors: Vec<Factor>) -> Self {
        self.term(Complex64::new(coeff, 0.0), factors)
    }

    /// sum_r Tr(p_r^2) / 2.
    pub fn kinetic(n_dofs: usize) -> Self {
        let mut poly = Self::new();
        for r in 0..n_dofs {
            poly = poly.real_term(
                0.5,
                vec![Factor::Var(VarRef::p(r)), Factor::Var(VarRef::p(r))],
            );
        }
        poly
    }

    /// sum_r coeff * Tr(q_r^degree).
    pub fn monomial_potential(n_dofs: usize, degree: usize, coeff: f64) -> Self {
        let mut poly = Self::new();
        for r in 0..n_dofs {
            poly = poly.real_term(coeff, vec![Factor::Var(VarRef::q(r)); degree]);
        }
        poly
    }

    /// Kinetic term plus sum_r Tr(q_r^2) / 2.
    pub fn harmonic(n_dofs: usize) -> Self {
        let mut poly = Self::kinetic(n_dofs);
        poly.terms
            .extend(Self::monomial_potential(n_dofs, 2, 0.5).terms);
        poly
    }

    /// Kinetic term plus sum_r Tr(q_r^4) / 4.
    pub fn quartic(n_dofs: usize) -> Self {
        let mut poly = Self::kinetic(n_dofs);
        poly.terms
            .extend(Self::monomial_potential(n_dofs, 4, 0.25).terms);
        poly
    }

    /// Largest dof index referenced, if any.
    pub fn max_dof(&self) -> Option<usize> {
        self.terms
            .iter()
            .flat_map(|t| &t.factors)
            .filter_map(|f| match f {
                Factor::Var(v) => Some(v.dof),
                Factor::Const(_) => None,
            })
            .max()
    }
}

fn resolve<'a>(factor: &'a Factor, binding: &'a [MatrixDegree]) -> Result<&'a DMatrix<Complex64>> {
    match factor {
        Factor::Const(m) => Ok(m),
        Factor::Var(v) => binding
            .get(v.dof)
            .map(|d| d.var(v.kind))
            .ok_or_else(|| CoreError::UnboundVariable(v.to_string())),
    }
}

fn product(factors: &[&DMatrix<Complex64>], dim: usize) -> DMatrix<Complex64> {
    let mut acc = DMatrix::<Complex64>::identity(dim, dim);
    for f in factors {
        acc *= *f;
    }
    acc
}

/// Evaluates the traced polynomial at a binding.
pub fn trace_eval(poly: &TracePolynomial, binding: &[MatrixDegree]) -> Result<Complex64> {
    if binding.is_empty() {
        return Err(CoreError::InvalidArgument("empty binding".into()));
    }
    let dim = binding[0].dim();
    let mut total = Complex64::default();
    for term in &poly.terms {
        let mats: Vec<&DMatrix<Complex64>> = term
            .factors
            .iter()
            .map(|f| resolve(f, binding))
            .collect::<Result<_>>()?;
        total += term.coeff * product(&mats, dim).trace();
    }
    Ok(total)
}

/// Matrix derivative d(Tr P)/d(var) under the cyclic collection rule:
/// for each occurrence of `var` in a term, the contribution is the product
/// of the factors after it followed by the factors before it.
pub fn trace_derivative(
    poly: &TracePolynomial,
    var: VarRef,
    binding: &[MatrixDegree],
) -> Result<DMatrix<Complex64>> {
    if binding.is_empty() {
        return Err(CoreError::InvalidArgument("empty binding".into()));
    }
    if binding.get(var.dof).is_none() {
        return Err(CoreError::UnboundVariable(var.to_string()));
    }
    let dim = binding[0].dim();
    let mut out = DMatrix::<Complex64>::zeros(dim, dim);
    for term in &poly.terms {
        let mats: Vec<&DMatrix<Complex64>> = term
            .factors
            .iter()
            .map(|f| resolve(f, binding))
            .collect::<Result<_>>()?;
        for (i, factor) in term.factors.iter().enumerate() {
            if matches!(factor, Factor::Var(v) if *v == var) {
                let mut rotated: Vec<&DMatrix<Complex64>> = Vec::with_capacity(mats.len() - 1);
                rotated.extend_from_slice(&mats[i + 1..]);
                rotated.extend_from_slice(&mats[..i]);
                out += product(&rotated, dim) * term.coeff;
            }
        }
    }
    Ok(out)
}
