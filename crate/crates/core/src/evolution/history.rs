use crate::foliation::RadialGrid;

use super::{EvolutionError, EvolutionState, Field, Mode};

/// Stored Cartesian time levels of one run.
#[derive(Debug, Clone)]
pub struct CartesianHistory {
    grid: RadialGrid,
    stride: usize,
    pushed: usize,
    times: Vec<f64>,
    levels: Vec<Vec<Field>>,
}

impl CartesianHistory {
    pub fn new(grid: RadialGrid) -> Self {
        CartesianHistory::with_stride(grid, 1)
    }

    /// Keeps every `stride`-th pushed level.
    pub fn with_stride(grid: RadialGrid, stride: usize) -> Self {
        CartesianHistory {
            grid,
            stride: stride.max(1),
            pushed: 0,
            times: Vec::new(),
            levels: Vec::new(),
        }
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push(&mut self, state: &EvolutionState) -> Result<(), EvolutionError> {
        if state.mode != Mode::Cartesian || state.grid != self.grid {
            return Err(EvolutionError::Incompatible("history takes Cartesian levels on its own grid".into()));
        }
        if let Some(&last) = self.times.last() {
            if state.time <= last {
                return Err(EvolutionError::Incompatible(format!(
                    "levels must increase in time ({} after {last})",
                    state.time
                )));
            }
        }
        let keep = self.pushed % self.stride == 0;
        self.pushed += 1;
        if keep {
            self.times.push(state.time);
            self.levels.push(state.fields().into_iter().cloned().collect());
        }
        Ok(())
    }
}

/// Cubic Lagrange weights for `t` on four abscissae.
fn lagrange(ts: &[f64], t: f64) -> [f64; 4] {
    let mut w = [1.0; 4];
    for j in 0..4 {
        for m in 0..4 {
            if m != j {
                w[j] *= (t - ts[m]) / (ts[j] - ts[m]);
            }
        }
    }
    w
}

/// State on `H_s` over `grid` (a prefix of the history grid), obtained by
/// cubic interpolation in `t` at every node. Both the value and the time
/// derivative channels are interpolated.
pub fn interpolate_to_slice(
    history: &CartesianHistory,
    s: f64,
    grid: RadialGrid,
) -> Result<EvolutionState, EvolutionError> {
    let same_spacing = (grid.dr() - history.grid.dr()).abs() <= 1e-12 * history.grid.dr();
    if !same_spacing || grid.len() > history.grid.len() {
        return Err(EvolutionError::Incompatible(
            "slice grid must be a prefix of the history grid".into(),
        ));
    }
    let (lo, hi) = match (history.times.first(), history.times.last()) {
        (Some(&lo), Some(&hi)) if history.len() >= 4 => (lo, hi),
        _ => {
            return Err(EvolutionError::NotBracketed {
                t: s,
                lo: f64::NAN,
                hi: f64::NAN,
            })
        }
    };
    let with_rho = history.levels[0].len() == 3;
    let mut out = EvolutionState::zeros(Mode::Hyperboloidal, s, grid, with_rho);
    let times = &history.times;
    for i in 0..grid.len() {
        let t = s.hypot(grid.r(i));
        if !(t >= lo && t <= hi) {
            return Err(EvolutionError::NotBracketed { t, lo, hi });
        }
        // stencil j0..j0+3 centred on the bracketing interval
        let k = times.partition_point(|&x| x <= t).clamp(1, times.len() - 1);
        let j0 = (k.saturating_sub(2)).min(times.len() - 4);
        let w = lagrange(&times[j0..j0 + 4], t);
        for (c, f) in out.fields_mut().into_iter().enumerate() {
            let (mut v, mut d) = (0.0, 0.0);
            for (m, wm) in w.iter().enumerate() {
                let level = &history.levels[j0 + m][c];
                v += wm * level.value[i];
                d += wm * level.dt[i];
            }
            f.value[i] = v;
            f.dt[i] = d;
        }
    }
    Ok(out)
}
