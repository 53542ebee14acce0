//! Truncated bosonic Fock space over desire modes, with slow-time evolution.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::Trajectory;
use crate::epsilon::EpsilonRepresentation;
use crate::error::{Error, Result};
use crate::filtration::{apply_on_window, FiltrationSpec, SignalSet, SignalSource};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const HERMITIAN_TOL: f64 = 1e-12;

/// Ordered filtrations spanning the classical space; one quantum mode each.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterBasis {
    pub filtrations: Vec<FiltrationSpec>,
}

impl FilterBasis {
    pub fn new(filtrations: Vec<FiltrationSpec>) -> Result<Self> {
        let b = Self { filtrations };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if self.filtrations.is_empty() {
            return Err(Error::invalid("a filter basis needs at least one mode"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for f in &self.filtrations {
            f.validate()?;
            let key = serde_json::to_string(f).map_err(|e| Error::invalid(e.to_string()))?;
            if !seen.insert(key) {
                return Err(Error::invalid("filter basis contains a repeated filtration"));
            }
        }
        Ok(())
    }

    pub fn modes(&self) -> usize {
        self.filtrations.len()
    }
}

/// Occupation tuples `(n_1, ..., n_m)` with `0 <= n_a <= cutoff`, ordered
/// lexicographically with the first mode most significant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FockSpace {
    pub modes: usize,
    pub cutoff: u32,
}

impl FockSpace {
    pub fn new(modes: usize, cutoff: u32) -> Result<Self> {
        if modes == 0 {
            return Err(Error::invalid("a Fock space needs at least one mode"));
        }
        let base = cutoff as usize + 1;
        let dim = (0..modes).try_fold(1usize, |acc, _| acc.checked_mul(base));
        match dim {
            Some(d) if d <= 1 << 24 => Ok(Self { modes, cutoff }),
            _ => Err(Error::invalid(format!(
                "{base}^{modes} basis states is too many"
            ))),
        }
    }

    pub fn dim(&self) -> usize {
        (self.cutoff as usize + 1).pow(self.modes as u32)
    }

    fn stride(&self, mode: usize) -> usize {
        (self.cutoff as usize + 1).pow((self.modes - 1 - mode) as u32)
    }

    pub fn occupations(&self, index: usize) -> Vec<u32> {
        let base = self.cutoff as usize + 1;
        (0..self.modes)
            .map(|a| ((index / self.stride(a)) % base) as u32)
            .collect()
    }

    pub fn index(&self, occupations: &[u32]) -> Result<usize> {
        if occupations.len() != self.modes || occupations.iter().any(|&n| n > self.cutoff) {
            return Err(Error::dims(format!(
                "occupations {occupations:?} outside the space ({} modes, cutoff {})",
                self.modes, self.cutoff
            )));
        }
        Ok(occupations
            .iter()
            .enumerate()
            .map(|(a, &n)| n as usize * self.stride(a))
            .sum())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantumState {
    pub coefficients: Vec<Complex64>,
}

impl QuantumState {
    pub fn new(coefficients: Vec<Complex64>) -> Result<Self> {
        if coefficients.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::invalid("state coefficients must be finite"));
        }
        Ok(Self { coefficients })
    }

    pub fn basis(space: &FockSpace, occupations: &[u32]) -> Result<Self> {
        let mut c = vec![ZERO; space.dim()];
        c[space.index(occupations)?] = Complex64::new(1.0, 0.0);
        Ok(Self { coefficients: c })
    }

    pub fn dim(&self) -> usize {
        self.coefficients.len()
    }

    pub fn norm(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<psi|O|psi>`.
    pub fn expectation(&self, op: &QuantumOperator) -> Result<Complex64> {
        let o = op.apply(&self.coefficients)?;
        Ok(self.coefficients.iter().zip(&o).map(|(a, b)| a.conj() * b).sum())
    }
}

/// Sparse complex matrix in compressed-row form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantumOperator {
    pub dim: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<Complex64>,
    pub hermitian: bool,
}

impl QuantumOperator {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            row_ptr: vec![0; dim + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
            hermitian: true,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_triplets(dim, (0..dim).map(|i| (i, i, Complex64::new(1.0, 0.0))))
    }

    /// Sums duplicate entries and drops exact zeros.
    pub fn from_triplets(dim: usize, entries: impl IntoIterator<Item = (usize, usize, Complex64)>) -> Self {
        let mut rows: Vec<BTreeMap<usize, Complex64>> = vec![BTreeMap::new(); dim];
        for (r, c, v) in entries {
            *rows[r].entry(c).or_insert(ZERO) += v;
        }
        Self::from_rows(dim, rows)
    }

    fn from_rows(dim: usize, rows: Vec<BTreeMap<usize, Complex64>>) -> Self {
        let mut op = Self::zeros(dim);
        for (r, row) in rows.into_iter().enumerate() {
            for (c, v) in row {
                if v != ZERO {
                    op.col_idx.push(c);
                    op.values.push(v);
                }
            }
            op.row_ptr[r + 1] = op.col_idx.len();
        }
        op.hermitian = false;
        op
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.row(r).find(|&(j, _)| j == c).map_or(ZERO, |(_, v)| v)
    }

    pub fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.dim {
            return Err(Error::dims(format!(
                "operator of dimension {} applied to a vector of length {}",
                self.dim,
                x.len()
            )));
        }
        Ok((0..self.dim)
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect())
    }

    pub fn adjoint(&self) -> Self {
        let mut op = Self::from_triplets(
            self.dim,
            (0..self.dim).flat_map(|r| self.row(r).map(move |(c, v)| (c, r, v.conj()))),
        );
        op.hermitian = self.hermitian;
        op
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::dims("operator dimensions differ"));
        }
        let rows = (0..self.dim)
            .map(|r| {
                let mut acc = BTreeMap::new();
                for (k, a) in self.row(r) {
                    for (c, b) in other.row(k) {
                        *acc.entry(c).or_insert(ZERO) += a * b;
                    }
                }
                acc
            })
            .collect();
        Ok(Self::from_rows(self.dim, rows))
    }

    /// `self + scale * other`.
    pub fn add_scaled(&self, other: &Self, scale: Complex64) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::dims("operator dimensions differ"));
        }
        let entries = (0..self.dim).flat_map(|r| {
            self.row(r)
                .map(move |(c, v)| (r, c, v))
                .chain(other.row(r).map(move |(c, v)| (r, c, scale * v)))
        });
        Ok(Self::from_triplets(self.dim, entries))
    }

    /// Largest entry of `|O - O^†|`.
    pub fn hermitian_deviation(&self) -> f64 {
        let adj = self.adjoint();
        (0..self.dim)
            .flat_map(|r| {
                let adj = &adj;
                self.row(r)
                    .map(move |(c, v)| (v - adj.get(r, c)).norm())
                    .chain(adj.row(r).map(move |(c, v)| (v - self.get(r, c)).norm()))
            })
            .fold(0.0, f64::max)
    }

    /// Sets the hermitian flag after checking it.
    pub fn mark_hermitian(mut self) -> Result<Self> {
        let dev = self.hermitian_deviation();
        if dev > HERMITIAN_TOL {
            return Err(Error::NonHermitianSpec(format!(
                "operator deviates from its adjoint by {dev:e}"
            )));
        }
        self.hermitian = true;
        Ok(self)
    }

    /// Row-sum norm, an upper bound on the spectral norm of a hermitian operator.
    pub fn row_sum_norm(&self) -> f64 {
        (0..self.dim)
            .map(|r| self.row(r).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Annihilation and creation operators per mode, truncated at the cutoff.
pub fn ladder_operators(space: &FockSpace) -> (Vec<QuantumOperator>, Vec<QuantumOperator>) {
    let dim = space.dim();
    let mut annihilation = Vec::with_capacity(space.modes);
    let mut creation = Vec::with_capacity(space.modes);
    for a in 0..space.modes {
        let stride = space.stride(a);
        let entries = (0..dim).filter_map(|i| {
            let n = space.occupations(i)[a];
            (n < space.cutoff)
                .then(|| (i + stride, i, Complex64::new(((n + 1) as f64).sqrt(), 0.0)))
        });
        let mut up = QuantumOperator::from_triplets(dim, entries);
        up.hermitian = false;
        annihilation.push(up.adjoint());
        creation.push(up);
    }
    (annihilation, creation)
}

/// `H = Σ ω_ab a†_a a_b + Σ g_abc (a†_a a_b a_c + h.c.)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    pub omega: Vec<Vec<Complex64>>,
    /// `vertex[a][b][c]`; empty for a purely quadratic Hamiltonian.
    #[serde(default)]
    pub vertex: Vec<Vec<Vec<f64>>>,
}

impl HamiltonianSpec {
    pub fn quadratic(omega: Vec<Vec<Complex64>>) -> Self {
        Self { omega, vertex: Vec::new() }
    }

    pub fn modes(&self) -> usize {
        self.omega.len()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.omega.len();
        if self.omega.iter().any(|r| r.len() != m) {
            return Err(Error::dims("ω must be square"));
        }
        if !self.vertex.is_empty()
            && (self.vertex.len() != m
                || self
                    .vertex
                    .iter()
                    .any(|p| p.len() != m || p.iter().any(|q| q.len() != m)))
        {
            return Err(Error::dims("vertex coefficients must be m×m×m"));
        }
        for a in 0..m {
            for b in 0..m {
                let d = (self.omega[a][b] - self.omega[b][a].conj()).norm();
                if d > HERMITIAN_TOL {
                    return Err(Error::NonHermitianSpec(format!(
                        "ω[{a}][{b}] = {} but conj(ω[{b}][{a}]) = {}",
                        self.omega[a][b],
                        self.omega[b][a].conj()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.omega.iter().flatten().all(|c| *c == ZERO)
            && self.vertex.iter().flatten().flatten().all(|&g| g == 0.0)
    }
}

pub fn build_hamiltonian(spec: &HamiltonianSpec, space: &FockSpace) -> Result<QuantumOperator> {
    spec.validate()?;
    if spec.modes() != space.modes {
        return Err(Error::dims(format!(
            "spec has {} modes, space has {}",
            spec.modes(),
            space.modes
        )));
    }
    let (ann, cre) = ladder_operators(space);
    let m = space.modes;
    let mut h = QuantumOperator::zeros(space.dim());
    for a in 0..m {
        for b in 0..m {
            let w = spec.omega[a][b];
            if w != ZERO {
                h = h.add_scaled(&cre[a].matmul(&ann[b])?, w)?;
            }
        }
    }
    if !spec.vertex.is_empty() {
        let mut cubic = QuantumOperator::zeros(space.dim());
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    let g = spec.vertex[a][b][c];
                    if g != 0.0 {
                        let t = cre[a].matmul(&ann[b])?.matmul(&ann[c])?;
                        cubic = cubic.add_scaled(&t, Complex64::new(g, 0.0))?;
                    }
                }
            }
        }
        h = h
            .add_scaled(&cubic, Complex64::new(1.0, 0.0))?
            .add_scaled(&cubic.adjoint(), Complex64::new(1.0, 0.0))?;
    }
    h.mark_hermitian()
}

/// Largest step `|H| τ` in one Taylor block.
const TAYLOR_BLOCK: f64 = 0.5;
const TAYLOR_TOL: f64 = 1e-18;

/// `exp(-i H τ) |psi>` by a Taylor series on sub-steps of bounded `|H| τ`.
pub fn evolve_slow(state: &QuantumState, h: &QuantumOperator, duration: f64) -> Result<QuantumState> {
    if state.dim() != h.dim {
        return Err(Error::dims(format!(
            "state of dimension {} and operator of dimension {}",
            state.dim(),
            h.dim
        )));
    }
    if !duration.is_finite() {
        return Err(Error::invalid("duration must be finite"));
    }
    if !h.hermitian {
        return Err(Error::NonHermitianSpec("evolution needs a hermitian operator".into()));
    }
    if duration == 0.0 {
        return Ok(state.clone());
    }
    let norm = h.row_sum_norm();
    let steps = ((norm * duration.abs() / TAYLOR_BLOCK).ceil() as usize).max(1);
    let tau = duration / steps as f64;
    let factor = Complex64::new(0.0, -tau);
    let mut psi = state.coefficients.clone();
    let scale = state.norm().max(f64::MIN_POSITIVE);
    for _ in 0..steps {
        let mut term = psi.clone();
        let mut sum = psi.clone();
        for k in 1..200 {
            let next = h.apply(&term)?;
            let f = factor / k as f64;
            term = next.into_iter().map(|v| v * f).collect();
            for (s, t) in sum.iter_mut().zip(&term) {
                *s += t;
            }
            let tn = term.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            if tn <= TAYLOR_TOL * scale {
                break;
            }
        }
        psi = sum;
    }
    QuantumState::new(psi)
}

/// Quadratic spec `ω_ab = f_a f_b` from the basis filtrations on the trailing
/// quick-time window; no vertex part.
pub fn quick_time_coefficients(
    basis: &FilterBasis,
    eps: &EpsilonRepresentation,
    traj: &Trajectory,
    window: usize,
) -> Result<HamiltonianSpec> {
    basis.validate()?;
    if window == 0 || window > traj.len() {
        return Err(Error::InsufficientData(format!(
            "quick-time window of {window} nodes on a record of {}",
            traj.len()
        )));
    }
    if eps.epsilon.grid != traj.grid {
        return Err(Error::dims("ε must share the trajectory grid"));
    }
    let signals =
        SignalSet::from_trajectory(traj).with_signal(SignalSource::Epsilon, &eps.epsilon)?;
    let f = basis
        .filtrations
        .iter()
        .enumerate()
        .map(|(a, spec)| {
            let out = apply_on_window(spec, &signals, window)?;
            match out.as_slice() {
                [v] => Ok(*v),
                _ => Err(Error::dims(format!(
                    "basis filtration {a} has {} outputs; modes need scalar filtrations",
                    out.len()
                ))),
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    let omega = f
        .iter()
        .map(|&fa| f.iter().map(|&fb| Complex64::new(fa * fb, 0.0)).collect())
        .collect();
    Ok(HamiltonianSpec::quadratic(omega))
}
