use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::kernel::AttenuatedKernel;
use crate::error::{Error, Result};
use crate::linalg::{default_tolerance, pivoted_cholesky};

/// Total per-component tap power `Σ σ_l²` after normalization (unit mean
/// energy of the complex tap vector).
pub const NORMALIZED_TRACE: f64 = 0.5;

const TRACE_TOLERANCE: f64 = 1e-13;

/// Relative diagonal jitter tried once before a matrix is declared non-PSD.
pub const JITTER: f64 = 1e-12;

/// Tap covariance `Γ = (γ_ik)`, `γ_ik = ρ_ik σ_i σ_k`, of the real (and
/// imaginary) part of the `L`-tap channel vector.
///
/// Every constructor returns a symmetric, positive semidefinite matrix with
/// trace `1/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl CovarianceMatrix {
    /// Validates a row-major `dim × dim` matrix and rescales it to trace 1/2.
    pub fn from_entries(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidMatrix("dimension must be at least 1".into()));
        }
        if entries.len() != dim * dim {
            return Err(Error::InvalidMatrix(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                entries.len()
            )));
        }
        if let Some(pos) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix(format!(
                "non-finite entry at ({}, {})",
                pos / dim,
                pos % dim
            )));
        }
        let mut entries = entries;
        let scale = (0..dim)
            .map(|i| entries[i * dim + i].abs())
            .fold(0.0, f64::max);
        for i in 0..dim {
            if entries[i * dim + i] < 0.0 {
                return Err(Error::InvalidMatrix(format!(
                    "negative diagonal entry at index {i}"
                )));
            }
            for k in 0..i {
                let (x, y) = (entries[i * dim + k], entries[k * dim + i]);
                if (x - y).abs() > 1e-12 * scale {
                    return Err(Error::InvalidMatrix(format!("not symmetric at ({i}, {k})")));
                }
                if x != y {
                    let mean = 0.5 * (x + y);
                    entries[i * dim + k] = mean;
                    entries[k * dim + i] = mean;
                }
            }
        }

        let mut matrix = Self { dim, entries };
        if matrix.trace() <= 0.0 {
            return Err(Error::InvalidMatrix("zero total power".into()));
        }
        matrix.normalize();
        matrix.ensure_psd()?;
        Ok(matrix)
    }

    fn normalize(&mut self) {
        let trace = self.trace();
        if (trace - NORMALIZED_TRACE).abs() > TRACE_TOLERANCE {
            let scale = NORMALIZED_TRACE / trace;
            self.entries.iter_mut().for_each(|v| *v *= scale);
        }
    }

    fn ensure_psd(&mut self) -> Result<()> {
        let tol = default_tolerance(&self.entries, self.dim);
        match pivoted_cholesky(&self.entries, self.dim, tol) {
            Ok(_) => Ok(()),
            Err(Error::NotPositiveSemidefinite { .. }) => {
                let delta = JITTER * self.trace();
                let mut jittered = self.entries.clone();
                for i in 0..self.dim {
                    jittered[i * self.dim + i] += delta;
                }
                let tol = default_tolerance(&jittered, self.dim);
                pivoted_cholesky(&jittered, self.dim, tol)?;
                self.entries = jittered;
                self.normalize();
                Ok(())
            }
            Err(e) => Err(e),
        }
    }

    /// Number of taps `L`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.entries[i * self.dim + k]
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Per-component tap powers `σ_l²`; the power delay profile is twice this.
    pub fn tap_powers(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    /// Correlation coefficient `ρ_ik`; zero when either tap carries no power.
    pub fn correlation(&self, i: usize, k: usize) -> f64 {
        let norm = (self.get(i, i) * self.get(k, k)).sqrt();
        if norm == 0.0 {
            0.0
        } else {
            self.get(i, k) / norm
        }
    }

    /// `d_m = Σ_i γ_{i,i+m}` for `m = 0..L`.
    pub fn diagonal_sums(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|m| (0..self.dim - m).map(|i| self.get(i, i + m)).sum())
            .collect()
    }

    /// Writes the plain-text matrix format: the dimension on the first line,
    /// then one row per line with space-separated values. Values use the
    /// shortest representation that parses back to the identical `f64`.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", self.dim)?;
        for i in 0..self.dim {
            let row = &self.entries[i * self.dim..(i + 1) * self.dim];
            let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let dim = loop {
            match lines.next() {
                Some((n, line)) => {
                    let line = line?;
                    let trimmed = line.trim();
                    if trimmed.is_empty() {
                        continue;
                    }
                    break trimmed.parse::<usize>().map_err(|e| Error::Parse {
                        line: n + 1,
                        message: format!("expected dimension, got `{trimmed}` ({e})"),
                    })?;
                }
                None => {
                    return Err(Error::Parse {
                        line: 1,
                        message: "empty matrix file".into(),
                    })
                }
            }
        };

        let mut entries = Vec::with_capacity(dim * dim);
        let mut rows = 0;
        for (n, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            if rows == dim {
                return Err(Error::Parse {
                    line: n + 1,
                    message: format!("more than {dim} rows"),
                });
            }
            let before = entries.len();
            for token in line.split_whitespace() {
                let v = token.parse::<f64>().map_err(|e| Error::Parse {
                    line: n + 1,
                    message: format!("bad value `{token}` ({e})"),
                })?;
                entries.push(v);
            }
            if entries.len() - before != dim {
                return Err(Error::Parse {
                    line: n + 1,
                    message: format!("expected {dim} values, got {}", entries.len() - before),
                });
            }
            rows += 1;
        }
        if rows != dim {
            return Err(Error::Parse {
                line: rows + 2,
                message: format!("expected {dim} rows, got {rows}"),
            });
        }
        Self::from_entries(dim, entries)
    }

    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        self.write_to(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

/// Samples `Cov(i/W, k/W)` for `i, k = 0..L`, `L = ⌊W·T_d⌋ + 1`, and
/// normalizes the result to unit mean energy.
pub fn discretize_kernel(
    kernel: &AttenuatedKernel,
    bandwidth: f64,
    delay_spread: f64,
) -> Result<CovarianceMatrix> {
    super::kernel::positive("W", bandwidth)?;
    super::kernel::positive("T_d", delay_spread)?;
    let taps = (bandwidth * delay_spread).floor() as usize + 1;
    let delays: Vec<f64> = (0..taps).map(|l| l as f64 / bandwidth).collect();
    let mut entries = vec![0.0; taps * taps];
    for i in 0..taps {
        for k in 0..=i {
            let v = kernel.cov(delays[i], delays[k]);
            entries[i * taps + k] = v;
            entries[k * taps + i] = v;
        }
    }
    CovarianceMatrix::from_entries(taps, entries)
}

/// Diagonal (uncorrelated-scattering) covariance with the given power
/// profile, normalized to unit mean energy.
pub fn uncorrelated_matrix(powers: &[f64]) -> Result<CovarianceMatrix> {
    if powers.is_empty() {
        return Err(Error::InvalidMatrix("empty power profile".into()));
    }
    if powers.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
        return Err(Error::InvalidMatrix(
            "powers must be finite and nonnegative".into(),
        ));
    }
    if powers.iter().all(|p| *p == 0.0) {
        return Err(Error::InvalidMatrix("all-zero power profile".into()));
    }
    let dim = powers.len();
    let mut entries = vec![0.0; dim * dim];
    for (i, p) in powers.iter().enumerate() {
        entries[i * dim + i] = *p;
    }
    CovarianceMatrix::from_entries(dim, entries)
}

#[cfg(test)]
mod tests {
    use super::super::{
        geometry_from_fractions, ou_kernel, ExponentialDecay, OuParams, Uncorrelated,
    };
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn example_two() -> CovarianceMatrix {
        let g = geometry_from_fractions(0.5, 0.5, 0.998, 0.8).unwrap();
        let k = ou_kernel(g.ou_params()).unwrap();
        discretize_kernel(&k, g.bandwidth, g.delay_spread).unwrap()
    }

    #[test]
    fn example_two_neighbour_correlation() {
        let m = example_two();
        assert_eq!(m.dim(), 7);
        assert_relative_eq!(m.trace(), 0.5, epsilon = 1e-12);
        let g = geometry_from_fractions(0.5, 0.5, 0.998, 0.8).unwrap();
        let rho = (-0.5 / g.bandwidth).exp();
        assert_relative_eq!(rho, 0.6003, epsilon = 1e-4);
        for i in 0..6 {
            assert_relative_eq!(m.correlation(i, i + 1), rho, max_relative = 1e-13);
        }
    }

    #[test]
    fn example_one_is_psd() {
        let g = geometry_from_fractions(0.5, 0.5, 0.998, 0.998).unwrap();
        let k = ou_kernel(g.ou_params()).unwrap();
        let m = discretize_kernel(&k, g.bandwidth, g.delay_spread).unwrap();
        assert_eq!(m.dim(), 630);
        assert_relative_eq!(m.trace(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn uncorrelated_kernel_gives_diagonal() {
        let k = AttenuatedKernel::new(
            Arc::new(Uncorrelated),
            Arc::new(ExponentialDecay::new(0.5, 1.0).unwrap()),
        );
        let m = discretize_kernel(&k, 2.0, 3.0).unwrap();
        assert_eq!(m.dim(), 7);
        for i in 0..7 {
            for j in 0..7 {
                if i != j {
                    assert_eq!(m.get(i, j), 0.0);
                }
            }
        }
        assert_relative_eq!(m.trace(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn uncorrelated_profiles() {
        let m = uncorrelated_matrix(&[1.0]).unwrap();
        assert_eq!(m.entries(), &[0.5]);
        let m = uncorrelated_matrix(&[1.0; 4]).unwrap();
        assert_eq!(m.tap_powers(), vec![0.125; 4]);
        assert!(uncorrelated_matrix(&[0.0, 0.0]).is_err());
        assert!(uncorrelated_matrix(&[1.0, -0.1]).is_err());
        assert!(uncorrelated_matrix(&[]).is_err());
    }

    #[test]
    fn geometric_profile_matches_ou_diagonal() {
        let g = geometry_from_fractions(0.5, 0.5, 0.998, 0.8).unwrap();
        let r = (-2.0 * g.b / g.bandwidth).exp();
        let powers: Vec<f64> = (0..g.taps).map(|l| r.powi(l as i32)).collect();
        let diag = uncorrelated_matrix(&powers).unwrap();
        let full = example_two();
        for (x, y) in diag.tap_powers().iter().zip(full.tap_powers()) {
            assert_relative_eq!(*x, y, max_relative = 1e-13);
        }
    }

    #[test]
    fn rejects_non_psd_and_malformed() {
        assert!(matches!(
            CovarianceMatrix::from_entries(2, vec![1.0, 2.0, 2.0, 1.0]),
            Err(Error::NotPositiveSemidefinite { .. })
        ));
        assert!(CovarianceMatrix::from_entries(2, vec![1.0, 0.5, 0.4, 1.0]).is_err());
        assert!(CovarianceMatrix::from_entries(2, vec![1.0, 0.0, 0.0]).is_err());
        assert!(CovarianceMatrix::from_entries(1, vec![f64::NAN]).is_err());
        assert!(CovarianceMatrix::from_entries(2, vec![0.0; 4]).is_err());
    }

    #[test]
    fn rank_deficient_is_accepted() {
        // perfectly correlated pair
        let m = CovarianceMatrix::from_entries(2, vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_relative_eq!(m.correlation(0, 1), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn round_off_negativity_is_absorbed_by_jitter() {
        // rank-one matrix pushed slightly indefinite
        let v = [0.3, 0.4, 0.5];
        let mut e: Vec<f64> = (0..9).map(|i| v[i / 3] * v[i % 3]).collect();
        e[8] -= 1e-14;
        let m = CovarianceMatrix::from_entries(3, e).unwrap();
        assert_relative_eq!(m.trace(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn text_format_degenerate() {
        let m = uncorrelated_matrix(&[3.0]).unwrap();
        let mut buf = Vec::new();
        m.write_to(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "1\n0.5\n");
    }

    #[test]
    fn text_format_round_trip_is_exact() {
        let m = example_two();
        let mut buf = Vec::new();
        m.write_to(&mut buf).unwrap();
        let back = CovarianceMatrix::read_from(buf.as_slice()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn text_format_errors_carry_line_numbers() {
        let bad = "2\n0.25 0\n0 x\n";
        match CovarianceMatrix::read_from(bad.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(CovarianceMatrix::read_from("2\n0.25 0\n".as_bytes()).is_err());
        assert!(CovarianceMatrix::read_from("".as_bytes()).is_err());
        assert!(CovarianceMatrix::read_from("1\n0.5 0.1\n".as_bytes()).is_err());
    }

    #[test]
    fn diagonal_sums_match_definition() {
        let m = example_two();
        let d = m.diagonal_sums();
        assert_relative_eq!(d[0], m.trace(), max_relative = 1e-15);
        let manual: f64 = (0..5).map(|i| m.get(i, i + 2)).sum();
        assert_relative_eq!(d[2], manual, max_relative = 1e-15);
    }

    proptest! {
        #[test]
        fn every_constructor_normalizes(
            a in 0.05f64..5.0, b in 0.05f64..2.0, w in 0.2f64..6.0, td in 0.1f64..8.0,
            powers in proptest::collection::vec(0.0f64..10.0, 1..40),
        ) {
            let k = ou_kernel(OuParams { a, b, c: 1.0 }).unwrap();
            let m = discretize_kernel(&k, w, td).unwrap();
            prop_assert!((m.trace() - 0.5).abs() <= 1e-12);
            for i in 0..m.dim() {
                for j in 0..m.dim() {
                    prop_assert!(m.correlation(i, j).abs() <= 1.0 + 1e-10);
                    prop_assert_eq!(m.get(i, j), m.get(j, i));
                }
            }
            if powers.iter().any(|p| *p > 0.0) {
                let u = uncorrelated_matrix(&powers).unwrap();
                prop_assert!((u.trace() - 0.5).abs() <= 1e-12);
            }
        }
    }
}
