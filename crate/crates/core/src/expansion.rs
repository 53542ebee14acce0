//! Polynomial dictionary expansions.
//!
//! Every finite parameterization in the toolkit (dynamics right-hand sides,
//! goal integrands, coupling forms, desire maps) is a linear combination of
//! monomials over two argument vectors: a primary vector `x` (usually the
//! state) and a secondary vector `y` (a control, a derivative, or a pure
//! input depending on the context).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One monomial `x^a * y^b`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BasisTerm {
    #[serde(rename = "state")]
    pub state_exponents: Vec<u32>,
    #[serde(rename = "control")]
    pub control_exponents: Vec<u32>,
}

impl BasisTerm {
    pub fn new(state_exponents: Vec<u32>, control_exponents: Vec<u32>) -> Self {
        Self {
            state_exponents,
            control_exponents,
        }
    }

    pub fn constant(x_dim: usize, y_dim: usize) -> Self {
        Self::new(vec![0; x_dim], vec![0; y_dim])
    }

    /// Linear term in `x[i]`.
    pub fn state(i: usize, x_dim: usize, y_dim: usize) -> Self {
        let mut t = Self::constant(x_dim, y_dim);
        t.state_exponents[i] = 1;
        t
    }

    /// Linear term in `y[j]`.
    pub fn control(j: usize, x_dim: usize, y_dim: usize) -> Self {
        let mut t = Self::constant(x_dim, y_dim);
        t.control_exponents[j] = 1;
        t
    }

    pub fn degree(&self) -> u32 {
        self.state_exponents.iter().sum::<u32>() + self.control_exponents.iter().sum::<u32>()
    }

    pub fn x_dim(&self) -> usize {
        self.state_exponents.len()
    }

    pub fn y_dim(&self) -> usize {
        self.control_exponents.len()
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut v = 1.0;
        for (&e, &xi) in self.state_exponents.iter().zip(x) {
            v *= xi.powi(e as i32);
        }
        for (&e, &yi) in self.control_exponents.iter().zip(y) {
            v *= yi.powi(e as i32);
        }
        v
    }

    /// Same monomial with extra (zero) secondary exponents appended.
    pub fn padded(&self, y_dim: usize) -> Self {
        let mut t = self.clone();
        t.control_exponents.resize(y_dim.max(self.y_dim()), 0);
        t
    }
}

impl fmt::Display for BasisTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        let mut push = |name: &str, i: usize, e: u32| match e {
            0 => {}
            1 => parts.push(format!("{name}{}", i + 1)),
            _ => parts.push(format!("{name}{}^{e}", i + 1)),
        };
        for (i, &e) in self.state_exponents.iter().enumerate() {
            push("x", i, e);
        }
        for (i, &e) in self.control_exponents.iter().enumerate() {
            push("y", i, e);
        }
        if parts.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", parts.join("*"))
        }
    }
}

/// All monomials over `x_dim + y_dim` variables with total degree `<= max_degree`,
/// in graded order (constant first, then degree 1, ...), lexicographic within a degree
/// with the first variable most significant.
pub fn monomial_dictionary(x_dim: usize, y_dim: usize, max_degree: u32) -> Vec<BasisTerm> {
    let n = x_dim + y_dim;
    let mut out = Vec::new();
    for deg in 0..=max_degree {
        let mut exps = vec![0u32; n];
        compositions(n, deg, 0, &mut exps, &mut out, x_dim);
    }
    out
}

fn compositions(
    n: usize,
    remaining: u32,
    pos: usize,
    exps: &mut Vec<u32>,
    out: &mut Vec<BasisTerm>,
    x_dim: usize,
) {
    if pos + 1 >= n {
        if n > 0 {
            exps[n - 1] = remaining;
        } else if remaining > 0 {
            return;
        }
        out.push(BasisTerm::new(
            exps[..x_dim].to_vec(),
            exps[x_dim..].to_vec(),
        ));
        return;
    }
    for e in (0..=remaining).rev() {
        exps[pos] = e;
        compositions(n, remaining - e, pos + 1, exps, out, x_dim);
    }
    exps[pos] = 0;
}

/// Multi-output polynomial map `(x, y) -> R^out`.
///
/// `coefficients[r][c]` multiplies `terms[c]` in output `r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Expansion {
    pub x_dim: usize,
    pub y_dim: usize,
    pub terms: Vec<BasisTerm>,
    pub coefficients: Vec<Vec<f64>>,
}

impl Expansion {
    pub fn zeros(x_dim: usize, y_dim: usize, out_dim: usize) -> Self {
        Self {
            x_dim,
            y_dim,
            terms: Vec::new(),
            coefficients: vec![Vec::new(); out_dim],
        }
    }

    pub fn with_terms(x_dim: usize, y_dim: usize, out_dim: usize, terms: Vec<BasisTerm>) -> Self {
        let p = terms.len();
        Self {
            x_dim,
            y_dim,
            terms,
            coefficients: vec![vec![0.0; p]; out_dim],
        }
    }

    pub fn out_dim(&self) -> usize {
        self.coefficients.len()
    }

    pub fn validate(&self) -> Result<()> {
        for t in &self.terms {
            if t.x_dim() != self.x_dim || t.y_dim() != self.y_dim {
                return Err(Error::dims(format!(
                    "term {t} has arity ({}, {}), expansion expects ({}, {})",
                    t.x_dim(),
                    t.y_dim(),
                    self.x_dim,
                    self.y_dim
                )));
            }
        }
        for row in &self.coefficients {
            if row.len() != self.terms.len() {
                return Err(Error::dims(format!(
                    "coefficient row has {} entries for {} terms",
                    row.len(),
                    self.terms.len()
                )));
            }
        }
        Ok(())
    }

    /// Adds `value` to the coefficient of `term` in output `row`, appending the term if new.
    pub fn add(&mut self, row: usize, term: BasisTerm, value: f64) -> &mut Self {
        let col = match self.terms.iter().position(|t| *t == term) {
            Some(c) => c,
            None => {
                self.terms.push(term);
                for r in &mut self.coefficients {
                    r.push(0.0);
                }
                self.terms.len() - 1
            }
        };
        self.coefficients[row][col] += value;
        self
    }

    pub fn features(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        self.terms.iter().map(|t| t.eval(x, y)).collect()
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let f = self.features(x, y);
        self.coefficients
            .iter()
            .map(|row| row.iter().zip(&f).map(|(c, v)| c * v).sum())
            .collect()
    }

    pub fn check_args(&self, x: &[f64], y: &[f64]) -> Result<()> {
        if x.len() != self.x_dim || y.len() != self.y_dim {
            return Err(Error::dims(format!(
                "expansion takes ({}, {}) arguments, got ({}, {})",
                self.x_dim,
                self.y_dim,
                x.len(),
                y.len()
            )));
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.iter().flatten().all(|&c| c == 0.0)
    }

    /// Widens the secondary argument to `y_dim` (new inputs enter with exponent 0).
    pub fn padded(&self, y_dim: usize) -> Result<Self> {
        if y_dim < self.y_dim {
            return Err(Error::dims(format!(
                "cannot shrink secondary arity from {} to {y_dim}",
                self.y_dim
            )));
        }
        Ok(Self {
            x_dim: self.x_dim,
            y_dim,
            terms: self.terms.iter().map(|t| t.padded(y_dim)).collect(),
            coefficients: self.coefficients.clone(),
        })
    }

    /// Sum of two expansions of equal arity, merging identical terms.
    pub fn sum(&self, other: &Expansion) -> Result<Self> {
        if self.x_dim != other.x_dim || self.y_dim != other.y_dim || self.out_dim() != other.out_dim()
        {
            return Err(Error::dims("expansions differ in arity or output dimension"));
        }
        let mut out = self.clone();
        for (c, term) in other.terms.iter().enumerate() {
            for r in 0..other.out_dim() {
                let v = other.coefficients[r][c];
                if v != 0.0 {
                    out.add(r, term.clone(), v);
                }
            }
        }
        Ok(out)
    }

    /// Identity map `y -> y` (requires `out_dim == y_dim`).
    pub fn identity_in_y(x_dim: usize, y_dim: usize) -> Self {
        let mut e = Self::zeros(x_dim, y_dim, y_dim);
        for j in 0..y_dim {
            e.add(j, BasisTerm::control(j, x_dim, y_dim), 1.0);
        }
        e
    }

    /// Constant map with the given output values.
    pub fn constant(x_dim: usize, y_dim: usize, values: &[f64]) -> Self {
        let mut e = Self::zeros(x_dim, y_dim, values.len());
        for (r, &v) in values.iter().enumerate() {
            e.add(r, BasisTerm::constant(x_dim, y_dim), v);
        }
        e
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dictionary_counts_match_binomials() {
        // C(n + deg, deg)
        assert_eq!(monomial_dictionary(1, 0, 3).len(), 4);
        assert_eq!(monomial_dictionary(1, 1, 2).len(), 6);
        assert_eq!(monomial_dictionary(2, 1, 3).len(), 20);
        assert_eq!(monomial_dictionary(0, 0, 3).len(), 1);
        let d = monomial_dictionary(1, 1, 1);
        assert_eq!(d[0], BasisTerm::constant(1, 1));
        assert_eq!(d[1], BasisTerm::state(0, 1, 1));
        assert_eq!(d[2], BasisTerm::control(0, 1, 1));
    }

    #[test]
    fn display_names_terms() {
        let t = BasisTerm::new(vec![2, 0], vec![1]);
        assert_eq!(t.to_string(), "x1^2*y1");
        assert_eq!(BasisTerm::constant(2, 1).to_string(), "1");
    }

    #[test]
    fn sum_merges_terms() {
        let a = Expansion::identity_in_y(1, 1);
        let b = Expansion::constant(1, 1, &[2.0]);
        let s = a.sum(&b).unwrap().sum(&a).unwrap();
        assert_eq!(s.eval(&[0.3], &[1.5]), vec![5.0]);
        assert_eq!(s.terms.len(), 2);
    }

    #[test]
    fn padding_keeps_values() {
        let a = Expansion::identity_in_y(1, 1);
        let p = a.padded(3).unwrap();
        assert_eq!(p.eval(&[0.0], &[2.0, 7.0, 9.0]), vec![2.0]);
        assert!(a.padded(0).is_err());
    }
}
