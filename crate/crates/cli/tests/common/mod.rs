//! Dense fixed-step oracle for best-response dynamics of three-strategy games.
//!
//! Written without the library's event solver: each regime is integrated with
//! classical RK4, switch times are located by bisection on the step fraction,
//! and sliding along an indifference set uses the Filippov convex combination
//! that keeps the two tied payoffs equal.

pub type V = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    Pure(usize),
    Slide(usize, usize),
    Stopped,
}

pub struct Oracle {
    rows: [V; 3],
    scale: f64,
}

fn unit(i: usize) -> V {
    let mut e = [0.0; 3];
    e[i] = 1.0;
    e
}

fn axpy(x: &V, k: &V, s: f64) -> V {
    [x[0] + s * k[0], x[1] + s * k[1], x[2] + s * k[2]]
}

impl Oracle {
    pub fn new(rows: [V; 3]) -> Self {
        let scale = rows.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        Oracle { rows, scale }
    }

    fn payoff(&self, i: usize, x: &V) -> f64 {
        let r = &self.rows[i];
        r[0] * x[0] + r[1] * x[1] + r[2] * x[2]
    }

    /// Rate of `pi_i - pi_j` when moving toward `target`.
    fn gap_rate(&self, i: usize, j: usize, x: &V, target: &V) -> f64 {
        let d = [target[0] - x[0], target[1] - x[1], target[2] - x[2]];
        self.payoff(i, &d) - self.payoff(j, &d)
    }

    fn field(&self, mode: Mode, x: &V) -> V {
        let target = match mode {
            Mode::Stopped => return [0.0; 3],
            Mode::Pure(b) => unit(b),
            Mode::Slide(b, c) => {
                let (eb, ec) = (unit(b), unit(c));
                // Weight on e_b that leaves pi_b - pi_c stationary.
                let rb = self.gap_rate(b, c, x, &eb);
                let rc = self.gap_rate(b, c, x, &ec);
                let lam = (rc / (rc - rb)).clamp(0.0, 1.0);
                axpy(&axpy(&[0.0; 3], &eb, lam), &ec, 1.0 - lam)
            }
        };
        [target[0] - x[0], target[1] - x[1], target[2] - x[2]]
    }

    fn rk4(&self, mode: Mode, x: &V, h: f64) -> V {
        let k1 = self.field(mode, x);
        let k2 = self.field(mode, &axpy(x, &k1, h / 2.0));
        let k3 = self.field(mode, &axpy(x, &k2, h / 2.0));
        let k4 = self.field(mode, &axpy(x, &k3, h));
        let mut out = *x;
        for i in 0..3 {
            out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out
    }

    /// Positive once the mode's consistency conditions fail at `x`.
    fn violation(&self, mode: Mode, x: &V) -> f64 {
        match mode {
            Mode::Stopped => f64::NEG_INFINITY,
            Mode::Pure(b) => (0..3)
                .filter(|&k| k != b)
                .map(|k| self.payoff(k, x) - self.payoff(b, x))
                .fold(f64::NEG_INFINITY, f64::max),
            Mode::Slide(b, c) => {
                let k = 3 - b - c;
                let third = self.payoff(k, x) - self.payoff(b, x).max(self.payoff(c, x));
                // Sliding needs e_b to push the gap down and e_c to push it up.
                let rb = self.gap_rate(b, c, x, &unit(b));
                let rc = self.gap_rate(b, c, x, &unit(c));
                third.max(rb).max(-rc)
            }
        }
    }

    fn best_set(&self, x: &V) -> Vec<usize> {
        let p = [self.payoff(0, x), self.payoff(1, x), self.payoff(2, x)];
        let m = p[0].max(p[1]).max(p[2]);
        (0..3).filter(|&k| p[k] >= m - 1e-9 * self.scale).collect()
    }

    /// Regime to follow from `x`, given the one just left.
    pub fn decide(&self, x: &V, prev: Option<Mode>) -> Mode {
        let t = self.best_set(x);
        match t.len() {
            1 => Mode::Pure(t[0]),
            2 => {
                let (i, j) = (t[0], t[1]);
                let ri = self.gap_rate(i, j, x, &unit(i));
                let rj = self.gap_rate(i, j, x, &unit(j));
                // Under e_i the gap pi_i - pi_j must grow, under e_j shrink.
                match (ri > 0.0, rj < 0.0) {
                    (true, false) => Mode::Pure(i),
                    (false, true) => Mode::Pure(j),
                    (true, true) => Mode::Pure(i),
                    (false, false) if prev == Some(Mode::Slide(i, j)) => {
                        // At the end of a slide one push has just vanished.
                        if ri.abs() < rj.abs() {
                            Mode::Pure(i)
                        } else {
                            Mode::Pure(j)
                        }
                    }
                    (false, false) => Mode::Slide(i, j),
                }
            }
            _ => Mode::Stopped,
        }
    }

    /// Advances `x` by exactly `h`, resolving regime switches inside the step.
    /// Returns the modes entered along the way.
    pub fn step(&self, mode: &mut Mode, x: &mut V, h: f64) -> Vec<Mode> {
        let mut entered = Vec::new();
        let mut left = h;
        for _ in 0..16 {
            if left <= 0.0 || *mode == Mode::Stopped {
                return entered;
            }
            let trial = self.rk4(*mode, x, left);
            if self.violation(*mode, &trial) <= 0.0 {
                *x = trial;
                return entered;
            }
            let (mut lo, mut hi) = (0.0, left);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if self.violation(*mode, &self.rk4(*mode, x, mid)) <= 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            *x = self.rk4(*mode, x, hi);
            left -= hi;
            *mode = self.decide(x, Some(*mode));
            entered.push(*mode);
        }
        entered
    }

    /// Calls `visit(t, x)` at `t = k h` for every `k` divisible by `every`.
    /// Returns every mode the orbit passes through, in order.
    pub fn run(&self, x0: &V, h: f64, steps: usize, every: usize, mut visit: impl FnMut(f64, &V)) -> Vec<Mode> {
        let mut x = *x0;
        let mut mode = self.decide(&x, None);
        let mut modes = vec![mode];
        visit(0.0, &x);
        for k in 1..=steps {
            modes.extend(self.step(&mut mode, &mut x, h));
            if k % every == 0 {
                visit(k as f64 * h, &x);
            }
        }
        modes
    }
}
