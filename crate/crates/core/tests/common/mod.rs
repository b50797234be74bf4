//! Brute-force quadrature sampling, independent of the covariance-matrix code.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Noise estimate in SNL units with its standard error.
#[derive(Debug, Clone, Copy)]
pub struct Sampled {
    pub quantum: f64,
    pub quantum_se: f64,
    pub classical: f64,
    pub classical_se: f64,
}

fn vac(rng: &mut ChaCha8Rng) -> f64 {
    let g: f64 = rng.sample(StandardNormal);
    g * std::f64::consts::FRAC_1_SQRT_2
}

fn lossy(rng: &mut ChaCha8Rng, q: f64, t: f64) -> f64 {
    t.sqrt() * q + (1.0 - t).sqrt() * vac(rng)
}

fn variance(xs: &[f64]) -> f64 {
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Samples `samples` twin-beam pairs per cell: two vacua mixed by the
/// two-mode squeeze (pump phase π), probe loss `t_probe`, conjugate loss
/// `t_conj·T`. The joint quadrature is `x_p + x_c` (probe phase 0, conjugate
/// phase π), referenced to two vacua; the classical reading is `x_c` alone.
pub fn sample_noise(
    r: f64,
    t_probe: f64,
    t_conj: f64,
    lock_noise: f64,
    cells: &[(f64, f64)],
    samples: usize,
    seed: u64,
) -> Sampled {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (ch, sh) = (r.cosh(), r.sinh());
    let mut out = Sampled {
        quantum: lock_noise,
        quantum_se: 0.0,
        classical: 0.0,
        classical_se: 0.0,
    };
    let mut q_var = 0.0;
    let mut c_var = 0.0;
    for &(weight, transmission) in cells {
        let mut joint = Vec::with_capacity(samples);
        let mut conj = Vec::with_capacity(samples);
        for _ in 0..samples {
            let (x1, x2) = (vac(&mut rng), vac(&mut rng));
            let xp = ch * x1 - sh * x2;
            let xc = ch * x2 - sh * x1;
            let xp = lossy(&mut rng, xp, t_probe);
            let xc = lossy(&mut rng, xc, t_conj * transmission);
            joint.push(xp + xc);
            conj.push(xc);
        }
        let m = samples as f64;
        let vj = variance(&joint);
        let vc = variance(&conj) / 0.5;
        out.quantum += weight * vj;
        out.classical += weight * vc;
        let rel = (2.0 / (m - 1.0)).sqrt();
        q_var += (weight * vj * rel).powi(2);
        c_var += (weight * vc * rel).powi(2);
    }
    out.quantum_se = q_var.sqrt();
    out.classical_se = c_var.sqrt();
    out
}

/// Lossless binary-cell closed forms: `(quantum, classical)`.
pub fn closed_form_binary(r: f64, overlap: f64) -> (f64, f64) {
    let q = overlap * (-2.0 * r).exp() + (1.0 - overlap) * r.cosh().powi(2);
    let c = 1.0 + overlap * ((2.0 * r).cosh() - 1.0);
    (q, c)
}

/// Root of `20·r·log10(e) = db`.
pub fn lossless_r(db: f64) -> f64 {
    db / (20.0 * std::f64::consts::E.log10())
}
