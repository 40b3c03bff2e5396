//! Exact statevector simulation of p-layer QAOA on an Ising model.
//!
//! Qubit `k` is bit `k` of the basis index and `|0>` carries spin `+1`. One
//! layer applies the cost unitary `exp(-i gamma H)` followed by the mixer
//! `exp(-i beta sum X)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ising::{IsingModel, SpinAssignment};
use crate::optim::nelder_mead;

/// Largest qubit count the simulator accepts.
pub const SIMULATOR_CAP: usize = 20;

/// Number of states kept in [`QaoaResult::distribution_summary`].
pub const SUMMARY_TOP_K: usize = 8;

const PAR_THRESHOLD: usize = 1 << 14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QaoaError {
    #[error("{0} qubits exceeds the simulator cap of {SIMULATOR_CAP}")]
    TooManyQubits(usize),
    #[error("state has {state} amplitudes but the diagonal has {diag}")]
    DimensionMismatch { state: usize, diag: usize },
    #[error("invalid QAOA configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decode {
    /// Lowest-energy state among the sampled shots.
    BestOfShots,
    /// Most probable basis state, ties to the lowest index.
    ArgmaxProb,
}

impl std::str::FromStr for Decode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "best-of-shots" | "best" => Ok(Self::BestOfShots),
            "argmax-prob" | "argmax" => Ok(Self::ArgmaxProb),
            other => Err(format!("unknown decode policy '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QaoaConfig {
    pub p: usize,
    /// Objective evaluations per optimizer restart.
    pub iterations: usize,
    /// Zero evaluates the ansatz at `gamma = beta = 0` only.
    pub restarts: usize,
    pub shots: usize,
    pub seed: u64,
    pub decode: Decode,
}

impl Default for QaoaConfig {
    fn default() -> Self {
        Self {
            p: 1,
            iterations: 20,
            restarts: 5,
            shots: 1024,
            seed: 0,
            decode: Decode::BestOfShots,
        }
    }
}

impl QaoaConfig {
    pub fn validate(&self) -> Result<(), QaoaError> {
        if self.p == 0 {
            return Err(QaoaError::InvalidConfig("p must be at least 1".into()));
        }
        if self.shots == 0 {
            return Err(QaoaError::InvalidConfig("shots must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

/// Layer angles, stored reduced to `gamma in [0, pi)` and `beta in [0, 2 pi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaoaParams {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
}

impl QaoaParams {
    pub fn new(gamma: Vec<f64>, beta: Vec<f64>) -> Self {
        assert_eq!(gamma.len(), beta.len(), "one gamma and one beta per layer");
        Self {
            gamma: gamma.into_iter().map(|g| g.rem_euclid(PI)).collect(),
            beta: beta.into_iter().map(|b| b.rem_euclid(2.0 * PI)).collect(),
        }
    }

    pub fn zeros(p: usize) -> Self {
        Self {
            gamma: vec![0.0; p],
            beta: vec![0.0; p],
        }
    }

    pub fn p(&self) -> usize {
        self.gamma.len()
    }

    fn from_flat(x: &[f64]) -> Self {
        let p = x.len() / 2;
        Self::new(x[..p].to_vec(), x[p..].to_vec())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    pub amplitudes: Vec<Complex64>,
}

impl Statevector {
    /// `|+>^d`.
    pub fn uniform(d: usize) -> Self {
        let dim = 1usize << d;
        let a = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
        Self {
            amplitudes: vec![a; dim],
        }
    }

    pub fn basis(d: usize, index: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << d];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn num_qubits(&self) -> usize {
        self.amplitudes.len().trailing_zeros() as usize
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// Energy of every basis state.
pub fn hamiltonian_diagonal(model: &IsingModel) -> Result<Vec<f64>, QaoaError> {
    let d = model.n();
    if d > SIMULATOR_CAP {
        return Err(QaoaError::TooManyQubits(d));
    }
    let linear: Vec<(usize, f64)> = model.linear_terms().collect();
    let quad: Vec<((usize, usize), f64)> = model.quadratic_terms().collect();
    let offset = model.offset;
    let entry = |b: usize| -> f64 {
        let s = |k: usize| if (b >> k) & 1 == 1 { -1.0 } else { 1.0 };
        let q: f64 = quad.iter().map(|&((i, j), w)| w * s(i) * s(j)).sum();
        let l: f64 = linear.iter().map(|&(i, w)| w * s(i)).sum();
        q + l + offset
    };
    let dim = 1usize << d;
    Ok(if dim >= PAR_THRESHOLD {
        (0..dim).into_par_iter().map(entry).collect()
    } else {
        (0..dim).map(entry).collect()
    })
}

fn check_dims(state: &Statevector, diag: &[f64]) -> Result<(), QaoaError> {
    if state.amplitudes.len() != diag.len() {
        return Err(QaoaError::DimensionMismatch {
            state: state.amplitudes.len(),
            diag: diag.len(),
        });
    }
    Ok(())
}

/// `amp[b] *= exp(-i gamma diag[b])`.
pub fn apply_phase(state: &mut Statevector, gamma: f64, diag: &[f64]) -> Result<(), QaoaError> {
    check_dims(state, diag)?;
    let rot = |(a, &h): (&mut Complex64, &f64)| *a *= Complex64::from_polar(1.0, -gamma * h);
    if diag.len() >= PAR_THRESHOLD {
        state.amplitudes.par_iter_mut().zip(diag.par_iter()).for_each(rot);
    } else {
        state.amplitudes.iter_mut().zip(diag.iter()).for_each(rot);
    }
    Ok(())
}

/// Applies `exp(-i beta X)` to every qubit.
pub fn apply_mixer(state: &mut Statevector, beta: f64) {
    let c = Complex64::new(beta.cos(), 0.0);
    let s = Complex64::new(0.0, -beta.sin());
    let d = state.num_qubits();
    for k in 0..d {
        let half = 1usize << k;
        let butterfly = |chunk: &mut [Complex64]| {
            let (lo, hi) = chunk.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = c * x + s * y;
                *b = s * x + c * y;
            }
        };
        if state.amplitudes.len() >= PAR_THRESHOLD {
            state.amplitudes.par_chunks_mut(2 * half).for_each(butterfly);
        } else {
            state.amplitudes.chunks_mut(2 * half).for_each(butterfly);
        }
    }
}

/// `sum_b |amp[b]|^2 diag[b]`, summed sequentially.
pub fn expectation(state: &Statevector, diag: &[f64]) -> Result<f64, QaoaError> {
    check_dims(state, diag)?;
    Ok(state
        .amplitudes
        .iter()
        .zip(diag)
        .map(|(a, h)| a.norm_sqr() * h)
        .sum())
}

/// `U_B(beta_p) U_C(gamma_p) ... U_B(beta_1) U_C(gamma_1) |+>^d`.
pub fn ansatz_state(diag: &[f64], params: &QaoaParams) -> Statevector {
    let d = diag.len().trailing_zeros() as usize;
    let mut state = Statevector::uniform(d);
    for (&g, &b) in params.gamma.iter().zip(&params.beta) {
        apply_phase(&mut state, g, diag).expect("diagonal matches the state");
        apply_mixer(&mut state, b);
    }
    state
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaoaResult {
    pub params: QaoaParams,
    pub expectation: f64,
    pub best_bitstring: SpinAssignment,
    pub best_energy: f64,
    /// Most probable states, probabilities descending.
    pub distribution_summary: Vec<(SpinAssignment, f64)>,
}

/// Decodes a state according to `config.decode`, drawing shots from `rng`.
pub fn sample_decode<R: Rng>(
    state: &Statevector,
    diag: &[f64],
    config: &QaoaConfig,
    rng: &mut R,
) -> Result<(SpinAssignment, f64), QaoaError> {
    check_dims(state, diag)?;
    let d = state.num_qubits();
    let probs = state.probabilities();
    let index = match config.decode {
        Decode::ArgmaxProb => {
            let mut best = 0;
            for (b, &p) in probs.iter().enumerate() {
                if p > probs[best] {
                    best = b;
                }
            }
            best
        }
        Decode::BestOfShots => {
            let mut cdf = Vec::with_capacity(probs.len());
            let mut acc = 0.0;
            for &p in &probs {
                acc += p;
                cdf.push(acc);
            }
            let total = acc;
            let mut best: Option<usize> = None;
            for _ in 0..config.shots.max(1) {
                let u = rng.gen::<f64>() * total;
                let mut b = cdf.partition_point(|&c| c <= u).min(probs.len() - 1);
                // Never report a state with zero probability.
                while probs[b] == 0.0 && b > 0 {
                    b -= 1;
                }
                best = match best {
                    Some(cur) if diag[cur] < diag[b] || (diag[cur] == diag[b] && cur <= b) => Some(cur),
                    _ => Some(b),
                };
            }
            best.expect("at least one shot")
        }
    };
    Ok((SpinAssignment::from_basis_index(index, d), diag[index]))
}

fn top_k(state: &Statevector, k: usize) -> Vec<(SpinAssignment, f64)> {
    let d = state.num_qubits();
    let mut probs: Vec<(usize, f64)> = state.probabilities().into_iter().enumerate().collect();
    probs.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    probs
        .into_iter()
        .take(k)
        .map(|(b, p)| (SpinAssignment::from_basis_index(b, d), p))
        .collect()
}

/// Optimizes the ansatz angles with seeded Nelder-Mead restarts and decodes
/// the final state.
pub fn optimize(model: &IsingModel, config: &QaoaConfig) -> Result<QaoaResult, QaoaError> {
    config.validate()?;
    let diag = hamiltonian_diagonal(model)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let objective = |x: &[f64]| {
        let params = QaoaParams::from_flat(x);
        expectation(&ansatz_state(&diag, &params), &diag).expect("dimensions agree")
    };
    let mut best = (QaoaParams::zeros(config.p), objective(&vec![0.0; 2 * config.p]));
    for _ in 0..config.restarts {
        let mut x0: Vec<f64> = (0..config.p).map(|_| rng.gen_range(0.0..PI)).collect();
        for _ in 0..config.p {
            x0.push(rng.gen_range(0.0..2.0 * PI));
        }
        let run = nelder_mead(&objective, &x0, 0.3, config.iterations.max(1), 1e-12);
        if run.value < best.1 {
            best = (QaoaParams::from_flat(&run.x), run.value);
        }
    }
    let (params, exp_value) = best;
    let state = ansatz_state(&diag, &params);
    let (z, _) = sample_decode(&state, &diag, config, &mut rng)?;
    let energy = model.energy_of(z.values());
    Ok(QaoaResult {
        params,
        expectation: exp_value,
        best_bitstring: z,
        best_energy: energy,
        distribution_summary: top_k(&state, SUMMARY_TOP_K),
    })
}
