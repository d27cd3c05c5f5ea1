use crate::error::{Error, Result};

/// Uniform discretization of `[t0, t_end]` into `n_steps` steps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    t0: f64,
    t_end: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t_end: f64, n_steps: usize) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::Grid("n_steps must be positive".into()));
        }
        if !(t0.is_finite() && t_end.is_finite()) || t0 < 0.0 {
            return Err(Error::Grid(format!("bad interval [{t0}, {t_end}]")));
        }
        if t_end <= t0 {
            return Err(Error::Grid(format!("t_end {t_end} must exceed t0 {t0}")));
        }
        Ok(Self { t0, t_end, n_steps })
    }

    /// `[0, horizon]` with `n_steps` steps.
    pub fn horizon(horizon: f64, n_steps: usize) -> Result<Self> {
        Self::new(0.0, horizon, n_steps)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        (self.t_end - self.t0) / self.n_steps as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        if k == self.n_steps {
            self.t_end
        } else {
            self.t0 + k as f64 * self.dt()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|k| self.node(k)).collect()
    }
}

/// Contiguous sequence of uniform blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    segments: Vec<TimeGrid>,
}

impl Schedule {
    pub fn new(segments: Vec<TimeGrid>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::Grid("schedule needs at least one block".into()));
        }
        for pair in segments.windows(2) {
            if pair[0].t_end != pair[1].t0 {
                return Err(Error::Grid(format!(
                    "blocks not contiguous at {} / {}",
                    pair[0].t_end, pair[1].t0
                )));
            }
        }
        Ok(Self { segments })
    }

    pub fn uniform(grid: TimeGrid) -> Self {
        Self {
            segments: vec![grid],
        }
    }

    /// Blocks ending at each of `ends` (strictly increasing, first block
    /// starts at 0), each split into `steps_per_block` uniform steps.
    pub fn through(ends: &[f64], steps_per_block: usize) -> Result<Self> {
        let mut start = 0.0;
        let mut segments = Vec::with_capacity(ends.len());
        for &end in ends {
            segments.push(TimeGrid::new(start, end, steps_per_block)?);
            start = end;
        }
        Self::new(segments)
    }

    /// `[0, first_end]` followed by blocks growing by `ratio` until `horizon`
    /// is covered. The last block ends exactly at `horizon`.
    pub fn geometric(
        first_end: f64,
        ratio: f64,
        horizon: f64,
        steps_per_block: usize,
    ) -> Result<Self> {
        if !(ratio > 1.0) || !(first_end > 0.0) || horizon < first_end {
            return Err(Error::Grid(format!(
                "geometric schedule needs ratio > 1 and 0 < first_end <= horizon \
                 (got ratio {ratio}, first_end {first_end}, horizon {horizon})"
            )));
        }
        let mut ends = vec![first_end];
        let mut end = first_end;
        while end < horizon * (1.0 - 1e-12) {
            end = (end * ratio).min(horizon);
            if horizon - end < 1e-9 * horizon {
                end = horizon;
            }
            ends.push(end);
        }
        Self::through(&ends, steps_per_block)
    }

    pub fn segments(&self) -> &[TimeGrid] {
        &self.segments
    }

    pub fn t_end(&self) -> f64 {
        self.segments[self.segments.len() - 1].t_end
    }

    pub fn n_steps(&self) -> usize {
        self.segments.iter().map(TimeGrid::n_steps).sum()
    }

    /// Step sizes, one per step.
    pub fn steps(&self) -> impl Iterator<Item = f64> + '_ {
        self.segments
            .iter()
            .flat_map(|g| std::iter::repeat_n(g.dt(), g.n_steps))
    }

    pub fn nodes(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_steps() + 1);
        out.push(self.segments[0].t0);
        for g in &self.segments {
            out.extend((1..=g.n_steps).map(|k| g.node(k)));
        }
        out
    }

    /// Node index of time `t` if `t` is (to relative precision) a node.
    pub fn node_index(&self, t: f64) -> Option<usize> {
        let mut offset = 0;
        for g in &self.segments {
            let tol = 1e-9 * t.abs().max(g.dt());
            if t >= g.t0 - tol && t <= g.t_end + tol {
                let k = ((t - g.t0) / g.dt()).round();
                if (g.t0 + k * g.dt() - t).abs() <= tol.max(1e-9 * g.dt()) {
                    return Some(offset + k as usize);
                }
            }
            offset += g.n_steps;
        }
        None
    }
}

impl From<TimeGrid> for Schedule {
    fn from(grid: TimeGrid) -> Self {
        Self::uniform(grid)
    }
}
