//! Multinomial No-U-Turn sampler with a diagonal metric.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::LogDensity;
use crate::math::log_add_exp;

/// Energy error above which a trajectory is declared divergent.
pub const MAX_DELTA_H: f64 = 1000.0;

#[derive(Debug, Clone)]
pub(crate) struct Point {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub grad: Vec<f64>,
    pub logp: f64,
}

impl Point {
    pub fn new<T: LogDensity + ?Sized>(target: &T, q: Vec<f64>) -> Self {
        let mut grad = vec![0.0; q.len()];
        let logp = target.logp_and_grad(&q, &mut grad);
        let p = vec![0.0; q.len()];
        Self { q, p, grad, logp }
    }
}

/// Statistics of one NUTS transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionStats {
    pub accept_stat: f64,
    pub tree_depth: usize,
    pub n_leapfrog: usize,
    pub divergent: bool,
    pub energy: f64,
}

pub(crate) struct Nuts<'a, T: LogDensity + ?Sized> {
    pub target: &'a T,
    pub inv_metric: Vec<f64>,
    pub step_size: f64,
    pub max_depth: usize,
    pub rng: ChaCha8Rng,
}

struct TreeAcc {
    n_leapfrog: usize,
    sum_metro_prob: f64,
    divergent: bool,
}

fn compute_criterion(p_sharp_minus: &[f64], p_sharp_plus: &[f64], rho: &[f64]) -> bool {
    let a: f64 = p_sharp_plus.iter().zip(rho).map(|(x, r)| x * r).sum();
    let b: f64 = p_sharp_minus.iter().zip(rho).map(|(x, r)| x * r).sum();
    a > 0.0 && b > 0.0
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

impl<'a, T: LogDensity + ?Sized> Nuts<'a, T> {
    pub fn hamiltonian(&self, z: &Point) -> f64 {
        let kinetic: f64 = z
            .p
            .iter()
            .zip(&self.inv_metric)
            .map(|(p, m)| p * p * m)
            .sum::<f64>()
            * 0.5;
        let h = -z.logp + kinetic;
        if h.is_nan() {
            f64::INFINITY
        } else {
            h
        }
    }

    fn p_sharp(&self, p: &[f64]) -> Vec<f64> {
        p.iter().zip(&self.inv_metric).map(|(p, m)| p * m).collect()
    }

    pub fn sample_momentum(&mut self, z: &mut Point) {
        for (p, m) in z.p.iter_mut().zip(&self.inv_metric) {
            let n: f64 = self.rng.sample(StandardNormal);
            *p = n / m.sqrt();
        }
    }

    pub fn leapfrog(&self, z: &mut Point, eps: f64) {
        for (p, g) in z.p.iter_mut().zip(&z.grad) {
            *p += 0.5 * eps * g;
        }
        for ((q, p), m) in z.q.iter_mut().zip(&z.p).zip(&self.inv_metric) {
            *q += eps * m * p;
        }
        z.logp = self.target.logp_and_grad(&z.q, &mut z.grad);
        if !z.logp.is_finite() {
            return;
        }
        for (p, g) in z.p.iter_mut().zip(&z.grad) {
            *p += 0.5 * eps * g;
        }
    }

    /// Heuristic initial step size: doubles or halves until the one-step
    /// acceptance probability crosses 0.8.
    pub fn init_step_size(&mut self, z: &Point) {
        if z.q.is_empty() {
            return;
        }
        let one_step = |s: &mut Self| {
            let mut trial = z.clone();
            s.sample_momentum(&mut trial);
            let h0 = s.hamiltonian(&trial);
            s.leapfrog(&mut trial, s.step_size);
            let h = if trial.logp.is_finite() { s.hamiltonian(&trial) } else { f64::INFINITY };
            h0 - h
        };
        let delta_h = one_step(self);
        let direction = if delta_h > (0.8f64).ln() { 1.0 } else { -1.0 };
        for _ in 0..100 {
            let delta_h = one_step(self);
            if direction == 1.0 && !(delta_h > (0.8f64).ln()) {
                break;
            }
            if direction == -1.0 && !(delta_h < (0.8f64).ln()) {
                break;
            }
            self.step_size = if direction == 1.0 {
                2.0 * self.step_size
            } else {
                0.5 * self.step_size
            };
            if self.step_size > 1e7 || self.step_size < 1e-12 {
                break;
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn build_tree(
        &mut self,
        depth: usize,
        z: &mut Point,
        z_propose: &mut Point,
        p_sharp_beg: &mut Vec<f64>,
        p_sharp_end: &mut Vec<f64>,
        rho: &mut Vec<f64>,
        p_beg: &mut Vec<f64>,
        p_end: &mut Vec<f64>,
        h0: f64,
        sign: f64,
        log_sum_weight: &mut f64,
        acc: &mut TreeAcc,
    ) -> bool {
        if depth == 0 {
            self.leapfrog(z, sign * self.step_size);
            acc.n_leapfrog += 1;
            let h = if z.logp.is_finite() {
                self.hamiltonian(z)
            } else {
                f64::INFINITY
            };
            if h - h0 > MAX_DELTA_H {
                acc.divergent = true;
            }
            *log_sum_weight = log_add_exp(*log_sum_weight, h0 - h);
            acc.sum_metro_prob += if h0 - h > 0.0 { 1.0 } else { (h0 - h).exp() };
            *z_propose = z.clone();
            *p_sharp_beg = self.p_sharp(&z.p);
            *p_sharp_end = p_sharp_beg.clone();
            for (r, p) in rho.iter_mut().zip(&z.p) {
                *r += p;
            }
            *p_beg = z.p.clone();
            *p_end = p_beg.clone();
            return !acc.divergent;
        }

        let dim = z.q.len();
        // left subtree
        let mut p_sharp_init_end = vec![0.0; dim];
        let mut p_init_end = vec![0.0; dim];
        let mut rho_init = vec![0.0; dim];
        let mut lsw_init = f64::NEG_INFINITY;
        let valid_init = self.build_tree(
            depth - 1,
            z,
            z_propose,
            p_sharp_beg,
            &mut p_sharp_init_end,
            &mut rho_init,
            p_beg,
            &mut p_init_end,
            h0,
            sign,
            &mut lsw_init,
            acc,
        );
        if !valid_init {
            return false;
        }

        // right subtree
        let mut z_propose_final = z.clone();
        let mut p_sharp_final_beg = vec![0.0; dim];
        let mut p_final_beg = vec![0.0; dim];
        let mut rho_final = vec![0.0; dim];
        let mut lsw_final = f64::NEG_INFINITY;
        let valid_final = self.build_tree(
            depth - 1,
            z,
            &mut z_propose_final,
            &mut p_sharp_final_beg,
            p_sharp_end,
            &mut rho_final,
            &mut p_final_beg,
            p_end,
            h0,
            sign,
            &mut lsw_final,
            acc,
        );
        if !valid_final {
            return false;
        }

        let lsw_subtree = log_add_exp(lsw_init, lsw_final);
        *log_sum_weight = log_add_exp(*log_sum_weight, lsw_subtree);
        let accept_prob = (lsw_final - lsw_subtree).exp();
        if self.rng.random::<f64>() < accept_prob {
            *z_propose = z_propose_final;
        }

        let rho_subtree = add(&rho_init, &rho_final);
        for (r, s) in rho.iter_mut().zip(&rho_subtree) {
            *r += s;
        }

        let mut persist = compute_criterion(p_sharp_beg, p_sharp_end, &rho_subtree);
        let rho_ext = add(&rho_init, &p_final_beg);
        persist &= compute_criterion(p_sharp_beg, &p_sharp_final_beg, &rho_ext);
        let rho_ext = add(&rho_final, &p_init_end);
        persist &= compute_criterion(&p_sharp_init_end, p_sharp_end, &rho_ext);
        persist
    }

    /// One NUTS transition from `z`; returns the next state.
    pub fn transition(&mut self, z: &Point) -> (Point, TransitionStats) {
        let mut z0 = z.clone();
        self.sample_momentum(&mut z0);
        let h0 = self.hamiltonian(&z0);

        let mut z_fwd = z0.clone();
        let mut z_bck = z0.clone();
        let mut z_sample = z0.clone();
        let mut z_propose = z0.clone();

        let mut p_fwd_fwd = z0.p.clone();
        let mut p_sharp_fwd_fwd = self.p_sharp(&z0.p);
        let mut p_fwd_bck = z0.p.clone();
        let mut p_sharp_fwd_bck = p_sharp_fwd_fwd.clone();
        let mut p_bck_fwd = z0.p.clone();
        let mut p_sharp_bck_fwd = p_sharp_fwd_fwd.clone();
        let mut p_bck_bck = z0.p.clone();
        let mut p_sharp_bck_bck = p_sharp_fwd_fwd.clone();

        let mut rho = z0.p.clone();
        let mut log_sum_weight = 0.0;
        let mut depth = 0;
        let mut acc = TreeAcc {
            n_leapfrog: 0,
            sum_metro_prob: 0.0,
            divergent: false,
        };
        let dim = z0.q.len();

        while depth < self.max_depth {
            let mut rho_fwd = vec![0.0; dim];
            let mut rho_bck = vec![0.0; dim];
            let mut lsw_subtree = f64::NEG_INFINITY;
            let valid = if self.rng.random::<f64>() > 0.5 {
                rho_bck.clone_from(&rho);
                p_bck_fwd.clone_from(&p_fwd_fwd);
                p_sharp_bck_fwd.clone_from(&p_sharp_fwd_fwd);
                let mut zi = z_fwd.clone();
                let v = self.build_tree(
                    depth,
                    &mut zi,
                    &mut z_propose,
                    &mut p_sharp_fwd_bck,
                    &mut p_sharp_fwd_fwd,
                    &mut rho_fwd,
                    &mut p_fwd_bck,
                    &mut p_fwd_fwd,
                    h0,
                    1.0,
                    &mut lsw_subtree,
                    &mut acc,
                );
                z_fwd = zi;
                v
            } else {
                rho_fwd.clone_from(&rho);
                p_fwd_bck.clone_from(&p_bck_bck);
                p_sharp_fwd_bck.clone_from(&p_sharp_bck_bck);
                let mut zi = z_bck.clone();
                let v = self.build_tree(
                    depth,
                    &mut zi,
                    &mut z_propose,
                    &mut p_sharp_bck_fwd,
                    &mut p_sharp_bck_bck,
                    &mut rho_bck,
                    &mut p_bck_fwd,
                    &mut p_bck_bck,
                    h0,
                    -1.0,
                    &mut lsw_subtree,
                    &mut acc,
                );
                z_bck = zi;
                v
            };
            if !valid {
                break;
            }
            depth += 1;

            // the uniform is only drawn when the subtree is lighter
            if lsw_subtree > log_sum_weight || self.rng.random::<f64>() < (lsw_subtree - log_sum_weight).exp() {
                z_sample = z_propose.clone();
            }
            log_sum_weight = log_add_exp(log_sum_weight, lsw_subtree);

            rho = add(&rho_bck, &rho_fwd);
            let mut persist = compute_criterion(&p_sharp_bck_bck, &p_sharp_fwd_fwd, &rho);
            let rho_ext = add(&rho_bck, &p_fwd_bck);
            persist &= compute_criterion(&p_sharp_bck_bck, &p_sharp_fwd_bck, &rho_ext);
            let rho_ext = add(&rho_fwd, &p_bck_fwd);
            persist &= compute_criterion(&p_sharp_bck_fwd, &p_sharp_fwd_fwd, &rho_ext);
            if !persist {
                break;
            }
        }

        let accept_stat = if acc.n_leapfrog > 0 {
            acc.sum_metro_prob / acc.n_leapfrog as f64
        } else {
            0.0
        };
        let energy = self.hamiltonian(&z_sample);
        (
            z_sample,
            TransitionStats {
                accept_stat,
                tree_depth: depth,
                n_leapfrog: acc.n_leapfrog,
                divergent: acc.divergent,
                energy,
            },
        )
    }
}

/// Hamiltonian along a fixed-step leapfrog trajectory of `n_steps` steps,
/// starting at `(q, p)` under the given inverse metric. Index 0 is the
/// starting energy.
pub fn leapfrog_energies<T: LogDensity + ?Sized>(
    target: &T,
    q: &[f64],
    p: &[f64],
    inv_metric: &[f64],
    step_size: f64,
    n_steps: usize,
) -> Vec<f64> {
    use rand::SeedableRng;
    let nuts = Nuts {
        target,
        inv_metric: inv_metric.to_vec(),
        step_size,
        max_depth: 0,
        rng: ChaCha8Rng::seed_from_u64(0),
    };
    let mut z = Point::new(target, q.to_vec());
    z.p = p.to_vec();
    let mut out = Vec::with_capacity(n_steps + 1);
    out.push(nuts.hamiltonian(&z));
    for _ in 0..n_steps {
        nuts.leapfrog(&mut z, step_size);
        out.push(nuts.hamiltonian(&z));
    }
    out
}
