//! Entropy and mutual-information formulas for multi-stream bit transport,
//! plus exact brute-force oracles on small alphabets.
//!
//! Two mutual-information routes are provided for the uncoded case: the
//! per-bit sum `Σ H(φ) − H(ψ)` used by the allocation analysis, and the exact
//! binary-symmetric-channel value `H(φ*ψ) − H(ψ)`. They agree when the source
//! bits are uniform (`φ = 0.5`); [`mi_uncoded_lemma2`] deliberately keeps the
//! per-bit form even where the two differ, and the test suite documents the
//! gap instead of hiding it.
//!
//! All entropies are in bits (base-2 logarithms), with `0·log 0 = 0`.

use thiserror::Error;

/// Largest alphabet size accepted by the exact joint-pmf oracles.
pub const MAX_ALPHABET: usize = 16;

#[derive(Debug, Error, PartialEq)]
pub enum InfoError {
    #[error("probability {0} is outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("bit error rate {0} is outside [0, 0.5]")]
    BerOutOfRange(f64),
    #[error("block error rate {0} is outside [0, 1]")]
    BlerOutOfRange(f64),
    #[error("entropy {0} is negative")]
    NegativeEntropy(f64),
    #[error("expected {expected} per-bit error rates, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("alphabet size {0} exceeds the brute-force cap of {MAX_ALPHABET}")]
    AlphabetTooLarge(usize),
    #[error("joint pmf entries sum to {0}, not 1")]
    NotNormalized(f64),
    #[error("joint pmf entry {0} is negative")]
    NegativeProbability(f64),
    #[error("matrix row {row} sums to {sum}, not 1")]
    NotStochastic { row: usize, sum: f64 },
    #[error("empty distribution")]
    Empty,
}

fn check_prob(p: f64) -> Result<(), InfoError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(InfoError::ProbabilityOutOfRange(p));
    }
    Ok(())
}

fn check_ber(psi: f64) -> Result<(), InfoError> {
    if !(0.0..=0.5).contains(&psi) {
        return Err(InfoError::BerOutOfRange(psi));
    }
    Ok(())
}

/// `x log2 x` with the continuity convention at zero.
fn xlog2(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.log2()
    }
}

/// Binary entropy `H(p) = −p log2 p − (1−p) log2 (1−p)` in bits.
pub fn binary_entropy(p: f64) -> Result<f64, InfoError> {
    check_prob(p)?;
    Ok(-xlog2(p) - xlog2(1.0 - p))
}

/// A stream of independent Bernoulli bits; bit `j` is 1 with probability
/// `phi[j]`.
#[derive(Debug, Clone)]
pub struct BernoulliStream {
    phi: Vec<f64>,
}

impl BernoulliStream {
    pub fn new(phi: Vec<f64>) -> Result<Self, InfoError> {
        if phi.is_empty() {
            return Err(InfoError::Empty);
        }
        for &p in &phi {
            check_prob(p)?;
        }
        Ok(Self { phi })
    }

    /// Uniform bits, the usual model for compressed semantic payloads.
    pub fn uniform(len: usize) -> Self {
        Self::new(vec![0.5; len]).expect("0.5 is a valid probability")
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    /// Probability of one concrete bit pattern under the independence model:
    /// the product of per-bit marginals.
    pub fn pattern_probability(&self, bits: &[bool]) -> Result<f64, InfoError> {
        if bits.len() != self.phi.len() {
            return Err(InfoError::LengthMismatch {
                expected: self.phi.len(),
                got: bits.len(),
            });
        }
        Ok(self
            .phi
            .iter()
            .zip(bits)
            .map(|(&p, &b)| if b { p } else { 1.0 - p })
            .product())
    }

    /// Entropy of the whole sequence: the sum of per-bit entropies.
    pub fn sequence_entropy(&self) -> f64 {
        self.phi
            .iter()
            .map(|&p| binary_entropy(p).expect("validated at construction"))
            .sum()
    }
}

/// Per-bit mutual information summed over the stream: `Σ_j H(φ_j) − H(ψ_j)`.
///
/// This is the uncoded formula used by the perception analysis. It may be
/// negative when a source bit is biased (`φ_j ≠ 0.5`); see [`mi_bsc_exact`]
/// for the exact channel value.
pub fn mi_uncoded_lemma2(stream: &BernoulliStream, ber: &[f64]) -> Result<f64, InfoError> {
    if ber.len() != stream.len() {
        return Err(InfoError::LengthMismatch {
            expected: stream.len(),
            got: ber.len(),
        });
    }
    let mut total = 0.0;
    for (&phi, &psi) in stream.phi().iter().zip(ber) {
        check_ber(psi)?;
        total += binary_entropy(phi)? - binary_entropy(psi)?;
    }
    Ok(total)
}

/// Exact single-bit mutual information over a binary symmetric channel with
/// crossover `psi` and input bias `phi`: `H(φ(1−ψ) + (1−φ)ψ) − H(ψ)`.
pub fn mi_bsc_exact(phi: f64, psi: f64) -> Result<f64, InfoError> {
    check_prob(phi)?;
    check_ber(psi)?;
    let out = phi * (1.0 - psi) + (1.0 - phi) * psi;
    Ok(binary_entropy(out)? - binary_entropy(psi)?)
}

/// Coded-case mutual information `(1 − Ψ)·H(Φ)`: a block either arrives
/// intact or is discarded with probability `bler`.
pub fn mi_coded_lemma2(seq_prob_entropy: f64, bler: f64) -> Result<f64, InfoError> {
    if seq_prob_entropy < 0.0 {
        return Err(InfoError::NegativeEntropy(seq_prob_entropy));
    }
    if !(0.0..=1.0).contains(&bler) {
        return Err(InfoError::BlerOutOfRange(bler));
    }
    Ok((1.0 - bler) * seq_prob_entropy)
}

/// A joint pmf over a pair of finite alphabets, stored row-major
/// (`probs[x * cols + y]`).
#[derive(Debug, Clone)]
pub struct JointPmf {
    rows: usize,
    cols: usize,
    probs: Vec<f64>,
}

impl JointPmf {
    pub fn new(rows: usize, cols: usize, probs: Vec<f64>) -> Result<Self, InfoError> {
        if rows == 0 || cols == 0 {
            return Err(InfoError::Empty);
        }
        if rows > MAX_ALPHABET {
            return Err(InfoError::AlphabetTooLarge(rows));
        }
        if cols > MAX_ALPHABET {
            return Err(InfoError::AlphabetTooLarge(cols));
        }
        if probs.len() != rows * cols {
            return Err(InfoError::LengthMismatch {
                expected: rows * cols,
                got: probs.len(),
            });
        }
        let mut sum = 0.0;
        for &p in &probs {
            if p < 0.0 {
                return Err(InfoError::NegativeProbability(p));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > 1e-12 {
            return Err(InfoError::NotNormalized(sum));
        }
        Ok(Self { rows, cols, probs })
    }

    /// Joint pmf of a binary symmetric channel with input bias `phi` and
    /// crossover `psi`.
    pub fn bsc(phi: f64, psi: f64) -> Result<Self, InfoError> {
        check_prob(phi)?;
        check_prob(psi)?;
        Self::new(
            2,
            2,
            vec![
                (1.0 - phi) * (1.0 - psi),
                (1.0 - phi) * psi,
                phi * psi,
                phi * (1.0 - psi),
            ],
        )
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    fn prob(&self, x: usize, y: usize) -> f64 {
        self.probs[x * self.cols + y]
    }

    fn row_marginal(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|x| (0..self.cols).map(|y| self.prob(x, y)).sum())
            .collect()
    }

    fn col_marginal(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|y| (0..self.rows).map(|x| self.prob(x, y)).sum())
            .collect()
    }
}

/// Exact mutual information `I(X;Y)` of a joint pmf by double sum.
pub fn mi_joint(pmf: &JointPmf) -> f64 {
    let px = pmf.row_marginal();
    let py = pmf.col_marginal();
    let mut total = 0.0;
    for x in 0..pmf.rows {
        for y in 0..pmf.cols {
            let pxy = pmf.prob(x, y);
            if pxy > 0.0 {
                total += pxy * (pxy / (px[x] * py[y])).log2();
            }
        }
    }
    // Rounding can leave a tiny negative residue for product distributions.
    total.max(0.0)
}

/// Result of a data-processing-inequality check on an `X → Y → Z` chain.
#[derive(Debug, Clone, Copy)]
pub struct DpiReport {
    pub i_xy: f64,
    pub i_xz: f64,
    pub holds: bool,
}

fn check_stochastic(matrix: &[Vec<f64>], out_dim: usize) -> Result<(), InfoError> {
    for (row, r) in matrix.iter().enumerate() {
        if r.len() != out_dim {
            return Err(InfoError::LengthMismatch {
                expected: out_dim,
                got: r.len(),
            });
        }
        let mut sum = 0.0;
        for &p in r {
            if p < 0.0 {
                return Err(InfoError::NegativeProbability(p));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(InfoError::NotStochastic { row, sum });
        }
    }
    Ok(())
}

/// Computes `I(X;Y)` and `I(X;Z)` exactly for the Markov chain `X → Y → Z`
/// given the source pmf and the two conditional (row-stochastic) matrices,
/// and reports whether `I(X;Z) ≤ I(X;Y)` within `1e-10` slack.
pub fn dpi_check(
    source: &[f64],
    xy: &[Vec<f64>],
    yz: &[Vec<f64>],
) -> Result<DpiReport, InfoError> {
    let nx = source.len();
    if nx == 0 {
        return Err(InfoError::Empty);
    }
    if nx > 8 || xy.is_empty() {
        return Err(InfoError::AlphabetTooLarge(nx.max(xy.len())));
    }
    if xy.len() != nx {
        return Err(InfoError::LengthMismatch {
            expected: nx,
            got: xy.len(),
        });
    }
    let ny = xy[0].len();
    let nz = yz.first().map(|r| r.len()).unwrap_or(0);
    if ny > 8 || nz > 8 || nz == 0 {
        return Err(InfoError::AlphabetTooLarge(ny.max(nz)));
    }
    if yz.len() != ny {
        return Err(InfoError::LengthMismatch {
            expected: ny,
            got: yz.len(),
        });
    }
    let sum: f64 = source.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(InfoError::NotNormalized(sum));
    }
    for &p in source {
        if p < 0.0 {
            return Err(InfoError::NegativeProbability(p));
        }
    }
    check_stochastic(xy, ny)?;
    check_stochastic(yz, nz)?;

    let mut joint_xy = vec![0.0; nx * ny];
    for x in 0..nx {
        for y in 0..ny {
            joint_xy[x * ny + y] = source[x] * xy[x][y];
        }
    }
    let mut joint_xz = vec![0.0; nx * nz];
    for x in 0..nx {
        for z in 0..nz {
            let mut p = 0.0;
            for (y, row) in yz.iter().enumerate() {
                p += source[x] * xy[x][y] * row[z];
            }
            joint_xz[x * nz + z] = p;
        }
    }
    // Normalization of the constructed joints is exact up to rounding; bypass
    // the 1e-12 gate by renormalizing explicitly.
    renormalize(&mut joint_xy);
    renormalize(&mut joint_xz);
    let i_xy = mi_joint(&JointPmf::new(nx, ny, joint_xy)?);
    let i_xz = mi_joint(&JointPmf::new(nx, nz, joint_xz)?);
    Ok(DpiReport {
        i_xy,
        i_xz,
        holds: i_xz <= i_xy + 1e-10,
    })
}

fn renormalize(probs: &mut [f64]) {
    let sum: f64 = probs.iter().sum();
    if sum > 0.0 {
        for p in probs.iter_mut() {
            *p /= sum;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Frozen with a 30-digit scalar oracle (mpmath):
    //   H(0.25)    = 0.811278124459132863909695792039
    //   1 - H(0.11) = 0.50008404183547200435950040587
    const H_QUARTER: f64 = 0.811278124459132863909695792039;
    const MI_BSC_011: f64 = 0.50008404183547200435950040587;

    #[test]
    fn binary_entropy_examples() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.25).unwrap() - H_QUARTER).abs() < 1e-15);
    }

    #[test]
    fn binary_entropy_symmetric() {
        for i in 0..=100 {
            let p = i as f64 / 100.0;
            let a = binary_entropy(p).unwrap();
            let b = binary_entropy(1.0 - p).unwrap();
            assert!((a - b).abs() < 1e-15, "H({p}) != H({})", 1.0 - p);
        }
    }

    #[test]
    fn binary_entropy_concave_on_grid() {
        let h: Vec<f64> = (0..=100)
            .map(|i| binary_entropy(i as f64 / 100.0).unwrap())
            .collect();
        for w in h.windows(3) {
            let second_diff = w[2] - 2.0 * w[1] + w[0];
            assert!(second_diff <= 1e-9, "second difference {second_diff} > 0");
        }
    }

    #[test]
    fn binary_entropy_rejects_out_of_range() {
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.1).is_err());
    }

    #[test]
    fn mi_uncoded_examples() {
        let one = BernoulliStream::uniform(1);
        assert_eq!(mi_uncoded_lemma2(&one, &[0.0]).unwrap(), 1.0);
        let two = BernoulliStream::uniform(2);
        assert_eq!(mi_uncoded_lemma2(&two, &[0.5, 0.5]).unwrap(), 0.0);
        let got = mi_uncoded_lemma2(&one, &[0.11]).unwrap();
        assert!((got - MI_BSC_011).abs() < 1e-15);
    }

    #[test]
    fn mi_uncoded_rejects_ber_above_half() {
        let s = BernoulliStream::uniform(1);
        assert!(matches!(
            mi_uncoded_lemma2(&s, &[0.6]),
            Err(InfoError::BerOutOfRange(_))
        ));
    }

    #[test]
    fn mi_uncoded_matches_bsc_at_uniform_input() {
        let stream = BernoulliStream::uniform(7);
        for &psi in &[0.0, 0.01, 0.1, 0.3, 0.5] {
            let lemma = mi_uncoded_lemma2(&stream, &vec![psi; 7]).unwrap();
            let exact = 7.0 * mi_bsc_exact(0.5, psi).unwrap();
            assert!((lemma - exact).abs() < 1e-12);
        }
    }

    /// The printed per-bit formula diverges from the exact BSC value off the
    /// uniform point; keep the gap visible rather than correcting it.
    #[test]
    fn mi_uncoded_diverges_from_exact_bsc_for_biased_source() {
        let stream = BernoulliStream::new(vec![0.9]).unwrap();
        let lemma = mi_uncoded_lemma2(&stream, &[0.2]).unwrap();
        let exact = mi_bsc_exact(0.9, 0.2).unwrap();
        assert!(lemma < 0.0, "per-bit form goes negative: {lemma}");
        assert!(exact >= 0.0);
        assert!((lemma - exact).abs() > 0.1);
    }

    #[test]
    fn mi_uncoded_monotone_decreasing_in_ber() {
        let stream = BernoulliStream::uniform(1);
        let mut prev = f64::INFINITY;
        for i in 0..=50 {
            let psi = i as f64 * 0.01;
            let mi = mi_uncoded_lemma2(&stream, &[psi]).unwrap();
            assert!(mi <= prev + 1e-15);
            prev = mi;
        }
    }

    #[test]
    fn mi_bsc_examples() {
        assert!((mi_bsc_exact(0.5, 0.11).unwrap() - MI_BSC_011).abs() < 1e-15);
        assert!(mi_bsc_exact(1.0, 0.2).unwrap().abs() < 1e-15);
        assert_eq!(mi_bsc_exact(0.5, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn mi_coded_examples() {
        assert_eq!(mi_coded_lemma2(3.2, 0.0).unwrap(), 3.2);
        assert_eq!(mi_coded_lemma2(3.2, 1.0).unwrap(), 0.0);
        assert_eq!(mi_coded_lemma2(1.0, 0.25).unwrap(), 0.75);
        assert!(mi_coded_lemma2(-1.0, 0.5).is_err());
    }

    #[test]
    fn mi_joint_examples() {
        let independent = JointPmf::new(2, 2, vec![0.25; 4]).unwrap();
        assert_eq!(mi_joint(&independent), 0.0);
        let coupled = JointPmf::new(2, 2, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert_eq!(mi_joint(&coupled), 1.0);
        let bsc = JointPmf::bsc(0.5, 0.11).unwrap();
        assert!((mi_joint(&bsc) - mi_bsc_exact(0.5, 0.11).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn joint_pmf_validation() {
        assert!(matches!(
            JointPmf::new(2, 2, vec![0.5, 0.5, 0.5, 0.5]),
            Err(InfoError::NotNormalized(_))
        ));
        assert!(matches!(
            JointPmf::new(17, 1, vec![1.0 / 17.0; 17]),
            Err(InfoError::AlphabetTooLarge(17))
        ));
        assert!(matches!(
            JointPmf::new(2, 2, vec![-0.5, 0.5, 0.5, 0.5]),
            Err(InfoError::NegativeProbability(_))
        ));
    }

    #[test]
    fn dpi_identity_chain() {
        let id = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let report = dpi_check(&[0.3, 0.7], &id, &id).unwrap();
        assert!(report.holds);
        assert!((report.i_xz - report.i_xy).abs() < 1e-12);
    }

    #[test]
    fn dpi_randomizing_second_stage() {
        let id = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let noise = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
        let report = dpi_check(&[0.3, 0.7], &id, &noise).unwrap();
        assert!(report.holds);
        assert!(report.i_xz.abs() < 1e-12);
        assert!(report.i_xy > 0.0);
    }

    #[test]
    fn dpi_rejects_non_stochastic() {
        let bad = vec![vec![0.7, 0.7], vec![0.5, 0.5]];
        let id = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!(matches!(
            dpi_check(&[0.5, 0.5], &bad, &id),
            Err(InfoError::NotStochastic { row: 0, .. })
        ));
    }

    #[test]
    fn pattern_probability_matches_product_formula() {
        let s = BernoulliStream::new(vec![0.2, 0.9, 0.5]).unwrap();
        let p = s.pattern_probability(&[true, false, true]).unwrap();
        assert!((p - 0.2 * 0.1 * 0.5).abs() < 1e-15);
    }
}
