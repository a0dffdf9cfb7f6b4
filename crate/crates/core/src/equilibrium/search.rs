//! Compass search on the unit box and start-point generation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Options for one projected compass search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompassOptions {
    pub initial_step: f64,
    pub min_step: f64,
    pub shrink: f64,
    /// Maximum number of polling sweeps.
    pub max_iters: usize,
    /// Stop as soon as the objective is at or below this value.
    pub target: f64,
}

impl Default for CompassOptions {
    fn default() -> Self {
        Self {
            initial_step: 0.25,
            min_step: 1e-6,
            shrink: 0.5,
            max_iters: 20_000,
            target: f64::NEG_INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompassOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub final_step: f64,
    /// Best value after every sweep.
    pub trace: Vec<f64>,
}

/// Opportunistic pattern search on `[0, 1]^n`.
///
/// Each sweep polls `x +/- step e_i` in index order and moves to the first
/// strict improvement. The step shrinks after a sweep without improvement.
/// Trial points are clamped to the box.
pub fn compass_search<E, F>(
    mut objective: F,
    x0: &[f64],
    opts: &CompassOptions,
) -> Result<CompassOutcome, E>
where
    F: FnMut(&[f64]) -> Result<f64, E>,
{
    let mut x = x0.to_vec();
    let mut value = objective(&x)?;
    let mut evaluations = 1;
    let mut iterations = 0;
    let mut step = opts.initial_step;
    let mut trace = Vec::new();
    let mut trial = x.clone();

    while step >= opts.min_step && iterations < opts.max_iters && value > opts.target {
        let mut improved = false;
        for i in 0..x.len() {
            for dir in [1.0, -1.0] {
                let moved = (x[i] + dir * step).clamp(0.0, 1.0);
                if moved == x[i] {
                    continue;
                }
                trial.copy_from_slice(&x);
                trial[i] = moved;
                let v = objective(&trial)?;
                evaluations += 1;
                if v < value {
                    x.copy_from_slice(&trial);
                    value = v;
                    improved = true;
                    break;
                }
            }
        }
        iterations += 1;
        trace.push(value);
        if !improved {
            step *= opts.shrink;
        }
    }

    Ok(CompassOutcome {
        x,
        value,
        iterations,
        evaluations,
        final_step: step,
        trace,
    })
}

/// Start points: all zeros, all ones, the centre, then a Halton sequence
/// shifted by a seeded random offset.
pub fn start_points(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut points = vec![vec![0.0; dim], vec![1.0; dim], vec![0.5; dim]];
    points.truncate(count);
    if count > points.len() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
        let primes = first_primes(dim);
        for index in 1..=(count - points.len()) {
            points.push(
                primes
                    .iter()
                    .zip(&shift)
                    .map(|(&p, &s)| (radical_inverse(index as u64, p) + s).fract())
                    .collect(),
            );
        }
    }
    points
}

fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut out = 0.0;
    while index > 0 {
        out += (index % base) as f64 * scale;
        index /= base;
        scale *= inv;
    }
    out
}

fn first_primes(count: usize) -> Vec<u64> {
    let mut primes: Vec<u64> = Vec::with_capacity(count);
    let mut candidate = 2u64;
    while primes.len() < count {
        if primes
            .iter()
            .take_while(|&&p| p * p <= candidate)
            .all(|&p| !candidate.is_multiple_of(p))
        {
            primes.push(candidate);
        }
        candidate += 1;
    }
    primes
}

/// Index of the smallest value; ties go to the lowest index.
pub fn argmin_by_value(outcomes: &[CompassOutcome]) -> Option<usize> {
    outcomes
        .iter()
        .enumerate()
        .fold(None, |best: Option<usize>, (i, o)| match best {
            Some(b) if outcomes[b].value <= o.value => Some(b),
            _ => Some(i),
        })
}
