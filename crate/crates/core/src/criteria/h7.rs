//! The limsup criterion and the weight search.

use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::model::ModelSpec;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WeightError {
    #[error("no admissible weights: spectral radius {radius} >= 1")]
    Infeasible { radius: f64 },
    #[error("non-positive decay rate for neuron {neuron}: inf a_lo (beta + A) = {value}")]
    NoDecay { neuron: usize, value: f64 },
    #[error("weight vector must have {expected} positive entries")]
    BadWeights { expected: usize },
}

/// Bracketed balance of the criterion for each neuron at time `t`.
pub fn h7_value(spec: &ModelSpec, d: &[f64], t: f64) -> Vec<f64> {
    assert_eq!(d.len(), spec.n, "weight vector length");
    let a_hi: Vec<f64> = spec.neurons.iter().map(|n| n.amplification.a_hi).collect();
    let mut out: Vec<f64> = spec
        .neurons
        .iter()
        .map(|n| {
            let decay = n.self_signal.beta.eval_unchecked(&[t]) + n.amplification.big_a.eval_unchecked(&[t]);
            -n.amplification.a_lo * decay
        })
        .collect();
    for c in &spec.c_terms {
        let zeta = spec.neurons[c.i].outer.zeta;
        let w = zeta * c.c.eval_unchecked(&[t]).abs();
        out[c.i] += w * (a_hi[c.j] * (d[c.j] / d[c.i]) * c.gamma1 + a_hi[c.l] * (d[c.l] / d[c.i]) * c.gamma2);
    }
    for e in &spec.d_terms {
        let sigma = spec.neurons[e.i].outer.sigma;
        let w = sigma * e.d.eval_unchecked(&[t]).abs();
        out[e.i] += w
            * (a_hi[e.j] * (d[e.j] / d[e.i]) * e.xi * e.mu1 + a_hi[e.l] * (d[e.l] / d[e.i]) * e.xi_tilde * e.mu2);
    }
    out
}

pub fn uniform_grid(t_min: f64, t_max: f64, step: f64) -> Vec<f64> {
    let count = ((t_max - t_min) / step).round() as usize;
    (0..=count)
        .map(|k| if k == count { t_max } else { t_min + k as f64 * step })
        .collect()
}

/// Index of the first grid point in the final `tail_fraction` of the grid.
fn tail_start(grid: &[f64], tail_fraction: f64) -> usize {
    assert!(tail_fraction > 0.0 && tail_fraction <= 1.0, "tail fraction must lie in (0, 1]");
    let t0 = grid[0];
    let t1 = *grid.last().expect("non-empty grid");
    let cut = t1 - tail_fraction * (t1 - t0);
    grid.partition_point(|&t| t < cut - 1e-12 * (1.0 + cut.abs())).min(grid.len() - 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionCurve {
    pub grid: Vec<f64>,
    /// values[k][i] at grid[k].
    pub values: Vec<Vec<f64>>,
    pub limsup: Vec<f64>,
    pub d: Vec<f64>,
    pub tail_fraction: f64,
}

impl CriterionCurve {
    /// Negative criterion for every neuron.
    pub fn verdict(&self) -> bool {
        self.limsup.iter().all(|v| *v < 0.0)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.d.len()).map(|i| format!("value_{i}")));
        w.write_record(&header)?;
        for (t, row) in self.grid.iter().zip(&self.values) {
            let mut rec = vec![t.to_string()];
            rec.extend(row.iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file)).map_err(std::io::Error::other)
    }
}

/// Tail max of the criterion on the grid [0, t_max].
pub fn h7_limsup(spec: &ModelSpec, d: &[f64], t_max: f64, grid_step: f64, tail_fraction: f64) -> CriterionCurve {
    let grid = uniform_grid(0.0, t_max, grid_step);
    let values: Vec<Vec<f64>> = grid.iter().map(|t| h7_value(spec, d, *t)).collect();
    let start = tail_start(&grid, tail_fraction);
    let limsup = (0..spec.n)
        .map(|i| values[start..].iter().map(|v| v[i]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    CriterionCurve {
        grid,
        values,
        limsup,
        d: d.to_vec(),
        tail_fraction,
    }
}

/// Tail-aggregated decay rates and coupling matrix of the criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingBounds {
    pub beta_lower: Vec<f64>,
    /// k[i][j] multiplies d_j / d_i.
    pub k: Vec<Vec<f64>>,
}

pub fn coupling_bounds(spec: &ModelSpec, t_max: f64, grid_step: f64, tail_fraction: f64) -> CouplingBounds {
    let n = spec.n;
    let grid = uniform_grid(0.0, t_max, grid_step);
    let start = tail_start(&grid, tail_fraction);
    let a_hi: Vec<f64> = spec.neurons.iter().map(|x| x.amplification.a_hi).collect();
    let mut beta_lower = vec![f64::INFINITY; n];
    let mut k = vec![vec![0.0; n]; n];
    let mut row = vec![vec![0.0; n]; n];
    for &t in &grid[start..] {
        for (i, neuron) in spec.neurons.iter().enumerate() {
            let decay = neuron.amplification.a_lo
                * (neuron.self_signal.beta.eval_unchecked(&[t]) + neuron.amplification.big_a.eval_unchecked(&[t]));
            beta_lower[i] = beta_lower[i].min(decay);
        }
        row.iter_mut().for_each(|r| r.iter_mut().for_each(|v| *v = 0.0));
        for c in &spec.c_terms {
            let w = spec.neurons[c.i].outer.zeta * c.c.eval_unchecked(&[t]).abs();
            row[c.i][c.j] += w * a_hi[c.j] * c.gamma1;
            row[c.i][c.l] += w * a_hi[c.l] * c.gamma2;
        }
        for e in &spec.d_terms {
            let w = spec.neurons[e.i].outer.sigma * e.d.eval_unchecked(&[t]).abs();
            row[e.i][e.j] += w * a_hi[e.j] * e.xi * e.mu1;
            row[e.i][e.l] += w * a_hi[e.l] * e.xi_tilde * e.mu2;
        }
        for i in 0..n {
            for j in 0..n {
                k[i][j] = f64::max(k[i][j], row[i][j]);
            }
        }
    }
    CouplingBounds { beta_lower, k }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    /// Normalized so that the largest entry is 1.
    pub d: Vec<f64>,
    /// Upper bound on the spectral radius of diag(beta_lower)^-1 K.
    pub radius: f64,
}

pub const WEIGHT_MARGIN: f64 = 1e-6;
const RADIUS_LIMIT: f64 = 1.0 - 1e-9;

/// Perron vector of diag(beta_lower)^-1 K, if the scaled matrix is a contraction.
pub fn perron_feasibility(beta_lower: &[f64], k: &[Vec<f64>]) -> Result<Weights, WeightError> {
    let n = beta_lower.len();
    for (i, b) in beta_lower.iter().enumerate() {
        if !(*b > 0.0) {
            return Err(WeightError::NoDecay { neuron: i + 1, value: *b });
        }
    }
    let scale = k.iter().flatten().fold(1.0f64, |m, v| m.max(*v));
    // a small positive shift makes the matrix irreducible
    let delta = 1e-14 * scale;
    let m: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| k[i][j] / beta_lower[i] + delta).collect())
        .collect();
    let apply = |v: &[f64]| -> Vec<f64> { (0..n).map(|i| (0..n).map(|j| m[i][j] * v[j]).sum()).collect() };
    let mut v = vec![1.0; n];
    let mut upper = f64::INFINITY;
    for _ in 0..100_000 {
        let mv = apply(&v);
        let ratios: Vec<f64> = mv.iter().zip(&v).map(|(a, b)| a / b).collect();
        upper = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lower = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        if upper - lower <= 1e-13 * upper.max(1e-300) {
            break;
        }
        // iterate with I + M, which has the same Perron vector and no periodicity
        let next: Vec<f64> = v.iter().zip(&mv).map(|(a, b)| a + b).collect();
        let top = next.iter().copied().fold(0.0, f64::max);
        v = next.into_iter().map(|x| x / top).collect();
    }
    if !(upper < RADIUS_LIMIT) {
        return Err(WeightError::Infeasible { radius: upper });
    }
    let top = v.iter().copied().fold(0.0, f64::max);
    let d: Vec<f64> = v.iter().map(|x| x / top).collect();
    for i in 0..n {
        let coupled: f64 = (0..n).map(|j| k[i][j] * d[j]).sum();
        if beta_lower[i] * d[i] - coupled < WEIGHT_MARGIN * d[i] {
            return Err(WeightError::Infeasible { radius: upper });
        }
    }
    Ok(Weights { d, radius: upper })
}

/// Searches weights d > 0 making the tail criterion negative on the grid.
pub fn find_weights(
    spec: &ModelSpec,
    t_max: f64,
    grid_step: f64,
    tail_fraction: f64,
) -> Result<Weights, WeightError> {
    let bounds = coupling_bounds(spec, t_max, grid_step, tail_fraction);
    perron_feasibility(&bounds.beta_lower, &bounds.k)
}
