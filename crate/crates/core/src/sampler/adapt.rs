//! Warm-up adaptation: dual-averaging step size and windowed estimation
//! of a diagonal inverse metric.

/// Nesterov dual averaging of `log(step_size)` toward a target acceptance
/// statistic.
#[derive(Debug, Clone)]
pub struct DualAveraging {
    mu: f64,
    target: f64,
    gamma: f64,
    t0: f64,
    kappa: f64,
    counter: f64,
    s_bar: f64,
    x_bar: f64,
}

impl DualAveraging {
    pub fn new(target: f64) -> Self {
        Self {
            mu: (10.0f64).ln(),
            target,
            gamma: 0.05,
            t0: 10.0,
            kappa: 0.75,
            counter: 0.0,
            s_bar: 0.0,
            x_bar: 0.0,
        }
    }

    pub fn restart(&mut self, step_size: f64) {
        self.mu = (10.0 * step_size).ln();
        self.counter = 0.0;
        self.s_bar = 0.0;
        self.x_bar = 0.0;
    }

    /// Feeds one acceptance statistic and returns the next step size.
    pub fn update(&mut self, accept_stat: f64) -> f64 {
        self.counter += 1.0;
        let a = accept_stat.min(1.0);
        let eta = 1.0 / (self.counter + self.t0);
        self.s_bar = (1.0 - eta) * self.s_bar + eta * (self.target - a);
        let x = self.mu - self.s_bar * self.counter.sqrt() / self.gamma;
        let x_eta = self.counter.powf(-self.kappa);
        self.x_bar = (1.0 - x_eta) * self.x_bar + x_eta * x;
        x.exp()
    }

    /// Final step size after warm-up.
    pub fn final_step_size(&self) -> f64 {
        self.x_bar.exp()
    }
}

/// Welford accumulator for per-coordinate variance.
#[derive(Debug, Clone)]
struct Welford {
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Welford {
    fn new(dim: usize) -> Self {
        Self {
            n: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    fn add(&mut self, x: &[f64]) {
        self.n += 1;
        for i in 0..x.len() {
            let d = x[i] - self.mean[i];
            self.mean[i] += d / self.n as f64;
            self.m2[i] += d * (x[i] - self.mean[i]);
        }
    }

    fn variance(&self) -> Vec<f64> {
        let denom = (self.n.max(2) - 1) as f64;
        self.m2.iter().map(|m| m / denom).collect()
    }

    fn restart(&mut self) {
        self.n = 0;
        self.mean.iter_mut().for_each(|v| *v = 0.0);
        self.m2.iter_mut().for_each(|v| *v = 0.0);
    }
}

/// Staged warm-up schedule: an initial fast buffer, a series of doubling
/// slow windows that estimate the metric, and a terminal fast buffer.
#[derive(Debug, Clone)]
pub struct WindowedAdaptation {
    n_warmup: usize,
    init_buffer: usize,
    term_buffer: usize,
    window_size: usize,
    next_window_end: usize,
    counter: usize,
    enabled: bool,
    estimator: Welford,
}

pub const INIT_BUFFER: usize = 75;
pub const TERM_BUFFER: usize = 50;
pub const BASE_WINDOW: usize = 25;

impl WindowedAdaptation {
    pub fn new(dim: usize, n_warmup: usize) -> Self {
        let (mut init_buffer, mut term_buffer, mut window) = (INIT_BUFFER, TERM_BUFFER, BASE_WINDOW);
        let enabled = n_warmup >= 20;
        if enabled && init_buffer + window + term_buffer > n_warmup {
            init_buffer = (0.15 * n_warmup as f64) as usize;
            term_buffer = (0.1 * n_warmup as f64) as usize;
            window = n_warmup - (init_buffer + term_buffer);
        }
        Self {
            n_warmup,
            init_buffer,
            term_buffer,
            window_size: window,
            next_window_end: init_buffer + window - 1,
            counter: 0,
            enabled,
            estimator: Welford::new(dim),
        }
    }

    fn in_window(&self) -> bool {
        self.counter >= self.init_buffer
            && self.counter < self.n_warmup - self.term_buffer
            && self.counter != self.n_warmup
    }

    fn end_of_window(&self) -> bool {
        self.counter == self.next_window_end && self.counter != self.n_warmup
    }

    fn compute_next_window(&mut self) {
        let last = self.n_warmup - self.term_buffer - 1;
        if self.next_window_end == last {
            return;
        }
        self.window_size *= 2;
        self.next_window_end = self.counter + self.window_size;
        if self.next_window_end != last {
            let next_boundary = self.next_window_end + 2 * self.window_size;
            if next_boundary >= self.n_warmup - self.term_buffer {
                self.next_window_end = last;
            }
        }
    }

    /// Records a warm-up draw. Returns a new inverse metric at the end of
    /// each slow window, regularized toward `1e-3`.
    pub fn learn(&mut self, q: &[f64]) -> Option<Vec<f64>> {
        if !self.enabled {
            return None;
        }
        if self.in_window() {
            self.estimator.add(q);
        }
        if self.end_of_window() {
            self.compute_next_window();
            let n = self.estimator.n as f64;
            let var = self
                .estimator
                .variance()
                .into_iter()
                .map(|v| (n / (n + 5.0)) * v + 1e-3 * (5.0 / (n + 5.0)))
                .collect();
            self.estimator.restart();
            self.counter += 1;
            return Some(var);
        }
        self.counter += 1;
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_ends_for_default_warmup() {
        let mut w = WindowedAdaptation::new(1, 1500);
        let mut ends = Vec::new();
        for i in 0..1500 {
            if w.learn(&[i as f64]).is_some() {
                ends.push(i);
            }
        }
        // 75 + 25, 50, 100, 200, 500 (last window stretched), then a 50 buffer
        assert_eq!(ends, vec![99, 149, 249, 449, 1449]);
    }

    #[test]
    fn short_warmup_uses_proportional_buffers() {
        let mut w = WindowedAdaptation::new(1, 100);
        let mut ends = Vec::new();
        for i in 0..100 {
            if w.learn(&[i as f64]).is_some() {
                ends.push(i);
            }
        }
        assert_eq!(ends, vec![89]);
    }

    #[test]
    fn tiny_warmup_never_updates_metric() {
        let mut w = WindowedAdaptation::new(1, 5);
        assert!((0..5).all(|i| w.learn(&[i as f64]).is_none()));
    }

    #[test]
    fn dual_averaging_moves_toward_target() {
        let mut da = DualAveraging::new(0.8);
        da.restart(1.0);
        // acceptance always too low: step size must shrink
        let mut eps = 1.0;
        for _ in 0..50 {
            eps = da.update(0.2);
        }
        assert!(eps < 1.0);
        assert!(da.final_step_size() < 1.0);
    }
}
