//! Hyperboloidal slices of the interior of the light cone, radial grids and
//! the discrete action of translations, boosts and tangential derivatives.
//!
//! Everything is radially symmetric: the boosts `L_a` reduce to the radial
//! boost `L = r∂_t + t∂_r`, and `∂̄ = ∂_r + (r/t)∂_t`.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FoliationError {
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
    #[error("point (t = {t}, r = {r}) lies outside the light cone")]
    OutsideCone { t: f64, r: f64 },
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("r_max = {r_max} exceeds the cone bound (s^2 - 1)/2 = {bound} at s = {s}")]
    ConeViolation { r_max: f64, bound: f64, s: f64 },
    #[error("frame field {0:?} needs the time-derivative channel")]
    MissingTimeDerivative(FrameField),
    #[error("grid function has {got} nodes, chart has {expected}")]
    LengthMismatch { got: usize, expected: usize },
}

/// `t = sqrt(s² + r²)` on the slice `H_s`.
pub fn lift(s: f64, r: f64) -> Result<f64, FoliationError> {
    if !s.is_finite() || !r.is_finite() {
        return Err(FoliationError::NonFinite("lift"));
    }
    if s <= 0.0 || r < 0.0 {
        return Err(FoliationError::Invalid(format!("lift needs s > 0, r >= 0 (s = {s}, r = {r})")));
    }
    Ok(s.hypot(r))
}

/// `s = sqrt(t² − r²)` for a point strictly inside the cone.
pub fn project(t: f64, r: f64) -> Result<f64, FoliationError> {
    if !t.is_finite() || !r.is_finite() {
        return Err(FoliationError::NonFinite("project"));
    }
    if r < 0.0 {
        return Err(FoliationError::Invalid(format!("negative radius {r}")));
    }
    if t <= r {
        return Err(FoliationError::OutsideCone { t, r });
    }
    Ok(((t - r) * (t + r)).sqrt())
}

/// Uniform radial grid `r_i = i·dr`, `i = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialGrid {
    dr: f64,
    n: usize,
}

impl RadialGrid {
    pub fn new(dr: f64, n: usize) -> Result<Self, FoliationError> {
        if !dr.is_finite() || dr <= 0.0 {
            return Err(FoliationError::Invalid(format!("grid spacing must be positive, got {dr}")));
        }
        if n < 6 {
            return Err(FoliationError::Invalid(format!("need at least 6 nodes, got {n}")));
        }
        Ok(RadialGrid { dr, n })
    }

    /// Grid covering `[0, r_max]` with spacing as close to `dr` as the
    /// interval allows (never coarser).
    pub fn covering(dr: f64, r_max: f64) -> Result<Self, FoliationError> {
        if !r_max.is_finite() || r_max <= 0.0 {
            return Err(FoliationError::Invalid(format!("r_max must be positive, got {r_max}")));
        }
        if !dr.is_finite() || dr <= 0.0 {
            return Err(FoliationError::Invalid(format!("grid spacing must be positive, got {dr}")));
        }
        let cells = (r_max / dr - 1e-9).ceil().max(5.0) as usize;
        RadialGrid::new(r_max / cells as f64, cells + 1)
    }

    pub fn dr(&self) -> f64 {
        self.dr
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn r(&self, i: usize) -> f64 {
        i as f64 * self.dr
    }

    pub fn r_max(&self) -> f64 {
        self.r(self.n - 1)
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.r(i)).collect()
    }

    /// Volume `∫ 4πr² dr` of the cell around node `i` divided by `4π`.
    pub fn cell_volume(&self, i: usize) -> f64 {
        let h = self.dr;
        let lo = if i == 0 { 0.0 } else { self.r(i) - 0.5 * h };
        let hi = if i + 1 == self.n { self.r(i) } else { self.r(i) + 0.5 * h };
        (hi.powi(3) - lo.powi(3)) / 3.0
    }

    /// Area factor `r²` at the face between nodes `i` and `i + 1`.
    pub fn face_area(&self, i: usize) -> f64 {
        let rf = self.r(i) + 0.5 * self.dr;
        rf * rf
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SliceKind {
    /// Constant Minkowski time `t`.
    Flat { t: f64 },
    /// Hyperboloid `t² − r² = s²`.
    Hyperboloid { s: f64 },
}

/// A slice together with its radial grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceChart {
    kind: SliceKind,
    grid: RadialGrid,
}

impl SliceChart {
    /// Hyperboloidal chart; with `confined` the grid must satisfy
    /// `r_max ≤ (s² − 1)/2`, keeping every node inside `{r < t − 1}`.
    pub fn hyperboloidal(s: f64, grid: RadialGrid, confined: bool) -> Result<Self, FoliationError> {
        if !s.is_finite() {
            return Err(FoliationError::NonFinite("s"));
        }
        if s <= 0.0 {
            return Err(FoliationError::Invalid(format!("hyperboloidal time must be positive, got {s}")));
        }
        if confined {
            let bound = (s * s - 1.0) / 2.0;
            if grid.r_max() > bound {
                return Err(FoliationError::ConeViolation {
                    r_max: grid.r_max(),
                    bound,
                    s,
                });
            }
        }
        Ok(SliceChart {
            kind: SliceKind::Hyperboloid { s },
            grid,
        })
    }

    pub fn flat(t: f64, grid: RadialGrid) -> Result<Self, FoliationError> {
        if !t.is_finite() {
            return Err(FoliationError::NonFinite("t"));
        }
        Ok(SliceChart {
            kind: SliceKind::Flat { t },
            grid,
        })
    }

    pub fn kind(&self) -> SliceKind {
        self.kind
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    /// Slice time coordinate: `t` for flat slices, `s` for hyperboloids.
    pub fn time(&self) -> f64 {
        match self.kind {
            SliceKind::Flat { t } => t,
            SliceKind::Hyperboloid { s } => s,
        }
    }

    pub fn s(&self) -> Option<f64> {
        match self.kind {
            SliceKind::Hyperboloid { s } => Some(s),
            SliceKind::Flat { .. } => None,
        }
    }

    /// Minkowski time of node `i`.
    pub fn t_at(&self, i: usize) -> f64 {
        match self.kind {
            SliceKind::Flat { t } => t,
            SliceKind::Hyperboloid { s } => s.hypot(self.grid.r(i)),
        }
    }

    pub fn t_nodes(&self) -> Vec<f64> {
        (0..self.grid.len()).map(|i| self.t_at(i)).collect()
    }

    fn check_len(&self, u: &[f64]) -> Result<(), FoliationError> {
        if u.len() != self.grid.len() {
            return Err(FoliationError::LengthMismatch {
                got: u.len(),
                expected: self.grid.len(),
            });
        }
        Ok(())
    }
}

/// Radial reductions of the commuting vector fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameField {
    /// `∂_t`.
    TimeTranslation,
    /// `∂_r` (the radial part of `∂_a`).
    RadialTranslation,
    /// `L = r∂_t + t∂_r`.
    Boost,
    /// `∂̄ = ∂_r + (r/t)∂_t`.
    Tangential,
}

/// First derivative along the grid: centered in the interior, zero at the
/// origin (even parity) and one-sided second order at the outer node.
pub fn d_r(u: &[f64], dr: f64) -> Vec<f64> {
    let n = u.len();
    let mut out = vec![0.0; n];
    let inv = 0.5 / dr;
    for i in 1..n - 1 {
        out[i] = (u[i + 1] - u[i - 1]) * inv;
    }
    out[n - 1] = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) * inv;
    out
}

/// Second derivative: centered, even-parity ghost at the origin and a
/// one-sided four-point stencil at the outer node.
pub fn d_rr(u: &[f64], dr: f64) -> Vec<f64> {
    let n = u.len();
    let mut out = vec![0.0; n];
    let inv = 1.0 / (dr * dr);
    out[0] = 2.0 * (u[1] - u[0]) * inv;
    for i in 1..n - 1 {
        out[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv;
    }
    out[n - 1] = (2.0 * u[n - 1] - 5.0 * u[n - 2] + 4.0 * u[n - 3] - u[n - 4]) * inv;
    out
}

/// Flux-form radial Laplacian `r⁻²∂_r(r²∂_r u)` on the cell volumes of the
/// grid. At the origin this is `6(u_1 − u_0)/dr²`. The outer node uses the
/// pointwise form `u_rr + (2/r)u_r` with one-sided stencils.
pub fn laplacian(u: &[f64], grid: &RadialGrid, out: &mut [f64]) {
    let n = grid.len();
    let h = grid.dr();
    for i in 0..n - 1 {
        let right = grid.face_area(i) * (u[i + 1] - u[i]);
        let left = if i == 0 {
            0.0
        } else {
            grid.face_area(i - 1) * (u[i] - u[i - 1])
        };
        out[i] = (right - left) / (h * grid.cell_volume_interior(i));
    }
    let inv = 1.0 / (h * h);
    let urr = (2.0 * u[n - 1] - 5.0 * u[n - 2] + 4.0 * u[n - 3] - u[n - 4]) * inv;
    let ur = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) * (0.5 / h);
    out[n - 1] = urr + 2.0 * ur / grid.r(n - 1);
}

/// Reflection symmetry of a radial function through the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

fn ghosted(u: &[f64], parity: Parity) -> impl Fn(isize) -> f64 + '_ {
    move |i: isize| {
        let v = u[i.unsigned_abs()];
        if i < 0 && parity == Parity::Odd {
            -v
        } else {
            v
        }
    }
}

/// Fourth-order first derivative; parity ghosts at the origin and
/// one-sided stencils at the last two nodes. Needs at least six nodes.
pub fn d_r4(u: &[f64], dr: f64, parity: Parity) -> Vec<f64> {
    let n = u.len();
    let at = ghosted(u, parity);
    let inv = 1.0 / (12.0 * dr);
    let mut out = vec![0.0; n];
    for (i, o) in out.iter_mut().enumerate().take(n - 2) {
        let k = i as isize;
        *o = (at(k - 2) - 8.0 * at(k - 1) + 8.0 * at(k + 1) - at(k + 2)) * inv;
    }
    let i = n - 2;
    out[i] = (-u[i - 3] + 6.0 * u[i - 2] - 18.0 * u[i - 1] + 10.0 * u[i] + 3.0 * u[i + 1]) * inv;
    let i = n - 1;
    out[i] = (3.0 * u[i - 4] - 16.0 * u[i - 3] + 36.0 * u[i - 2] - 48.0 * u[i - 1] + 25.0 * u[i]) * inv;
    out
}

/// Fourth-order second derivative with the same edge treatment.
pub fn d_rr4(u: &[f64], dr: f64, parity: Parity) -> Vec<f64> {
    let n = u.len();
    let at = ghosted(u, parity);
    let inv = 1.0 / (12.0 * dr * dr);
    let mut out = vec![0.0; n];
    for (i, o) in out.iter_mut().enumerate().take(n - 2) {
        let k = i as isize;
        *o = (-at(k - 2) + 16.0 * at(k - 1) - 30.0 * at(k) + 16.0 * at(k + 1) - at(k + 2)) * inv;
    }
    let i = n - 2;
    out[i] = (u[i - 4] - 6.0 * u[i - 3] + 14.0 * u[i - 2] - 4.0 * u[i - 1] - 15.0 * u[i] + 10.0 * u[i + 1]) * inv;
    let i = n - 1;
    out[i] = (-10.0 * u[i - 5] + 61.0 * u[i - 4] - 156.0 * u[i - 3] + 214.0 * u[i - 2] - 154.0 * u[i - 1]
        + 45.0 * u[i])
        * inv;
    out
}

/// Fourth-order `u_rr + (2/r)u_r` for an even function (`3u_rr` at the origin).
pub fn laplacian4(u: &[f64], dr: f64) -> Vec<f64> {
    let d1 = d_r4(u, dr, Parity::Even);
    let d2 = d_rr4(u, dr, Parity::Even);
    (0..u.len())
        .map(|i| {
            if i == 0 {
                3.0 * d2[0]
            } else {
                d2[i] + 2.0 * d1[i] / (i as f64 * dr)
            }
        })
        .collect()
}

impl RadialGrid {
    /// Cell volume with the outer node treated like an interior one.
    pub fn cell_volume_interior(&self, i: usize) -> f64 {
        let h = self.dr;
        let lo = if i == 0 { 0.0 } else { self.r(i) - 0.5 * h };
        let hi = self.r(i) + 0.5 * h;
        (hi.powi(3) - lo.powi(3)) / 3.0
    }
}

/// Applies a frame field to a grid function on the slice. `dt` is the
/// Minkowski time derivative `∂_t u` at the nodes.
pub fn apply_frame(
    field: FrameField,
    u: &[f64],
    dt: Option<&[f64]>,
    chart: &SliceChart,
) -> Result<Vec<f64>, FoliationError> {
    chart.check_len(u)?;
    if let Some(p) = dt {
        chart.check_len(p)?;
    }
    let grid = chart.grid();
    let need_dt = || dt.ok_or(FoliationError::MissingTimeDerivative(field));
    let dx = d_r(u, grid.dr());
    let n = grid.len();
    match (field, chart.kind()) {
        (FrameField::TimeTranslation, _) => Ok(need_dt()?.to_vec()),
        (FrameField::RadialTranslation, SliceKind::Flat { .. }) => Ok(dx),
        (FrameField::RadialTranslation, SliceKind::Hyperboloid { .. }) => {
            let p = need_dt()?;
            Ok((0..n)
                .map(|i| dx[i] - grid.r(i) / chart.t_at(i) * p[i])
                .collect())
        }
        (FrameField::Boost, SliceKind::Flat { t }) => {
            let p = need_dt()?;
            Ok((0..n).map(|i| grid.r(i) * p[i] + t * dx[i]).collect())
        }
        // the boost is tangent to H_s: L u = t · d/dr (u restricted to H_s)
        (FrameField::Boost, SliceKind::Hyperboloid { .. }) => {
            Ok((0..n).map(|i| chart.t_at(i) * dx[i]).collect())
        }
        (FrameField::Tangential, SliceKind::Flat { t }) => {
            let p = need_dt()?;
            Ok((0..n).map(|i| dx[i] + grid.r(i) / t * p[i]).collect())
        }
        (FrameField::Tangential, SliceKind::Hyperboloid { .. }) => Ok(dx),
    }
}

/// Value, gradient and Hessian of a scalar field at a point `(t, x, y, z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub grad: [f64; 4],
    pub hess: [[f64; 4]; 4],
}

/// Source of derivatives for [`commutator_check`].
pub enum Sample<'a> {
    /// Closed-form jets.
    Exact(&'a dyn Fn([f64; 4]) -> Jet2),
    /// Centered differences of a scalar function at spacing `h`, nested for
    /// second derivatives of composed fields.
    FiniteDifference { f: &'a dyn Fn([f64; 4]) -> f64, h: f64 },
}

/// Maximum deviation over `points` of the identities
/// `[∂_t, L_a] = ∂_a`, `[∂_b, L_a] = δ_ab ∂_t` and
/// `[L_a, L_b] = x^a∂_b − x^b∂_a`, for spatial axes `a, b ∈ {1, 2, 3}`.
pub fn commutator_check(a: usize, b: usize, sample: &Sample<'_>, points: &[[f64; 4]]) -> f64 {
    assert!((1..=3).contains(&a) && (1..=3).contains(&b), "spatial axes are 1, 2, 3");
    let delta = if a == b { 1.0 } else { 0.0 };
    let mut worst: f64 = 0.0;
    match sample {
        Sample::Exact(jet) => {
            for &p in points {
                let j = jet(p);
                let (t, g, h) = (p[0], j.grad, j.hess);
                // ∂_t(L_a u) − L_a(∂_t u) − ∂_a u
                let c1 = (p[a] * h[0][0] + g[a] + t * h[0][a]) - (p[a] * h[0][0] + t * h[a][0]) - g[a];
                // ∂_b(L_a u) − L_a(∂_b u) − δ_ab ∂_t u
                let c2 = (delta * g[0] + p[a] * h[b][0] + t * h[b][a])
                    - (p[a] * h[0][b] + t * h[a][b])
                    - delta * g[0];
                // L_a(L_b u) − L_b(L_a u) − (x^a ∂_b u − x^b ∂_a u)
                let lab = p[a] * (p[b] * h[0][0] + g[b] + t * h[0][b])
                    + t * (delta * g[0] + p[b] * h[a][0] + t * h[a][b]);
                let lba = p[b] * (p[a] * h[0][0] + g[a] + t * h[0][a])
                    + t * (delta * g[0] + p[a] * h[b][0] + t * h[b][a]);
                let c3 = lab - lba - (p[a] * g[b] - p[b] * g[a]);
                worst = worst.max(c1.abs()).max(c2.abs()).max(c3.abs());
            }
        }
        Sample::FiniteDifference { f, h } => {
            let h = *h;
            let d = |g: &dyn Fn([f64; 4]) -> f64, mu: usize, p: [f64; 4]| {
                let mut pp = p;
                let mut pm = p;
                pp[mu] += h;
                pm[mu] -= h;
                (g(pp) - g(pm)) / (2.0 * h)
            };
            let boost = |g: &dyn Fn([f64; 4]) -> f64, ax: usize, p: [f64; 4]| {
                p[ax] * d(g, 0, p) + p[0] * d(g, ax, p)
            };
            let u: &dyn Fn([f64; 4]) -> f64 = *f;
            let la = |p: [f64; 4]| boost(u, a, p);
            let lb = |p: [f64; 4]| boost(u, b, p);
            let ut = |p: [f64; 4]| d(u, 0, p);
            let ub = |p: [f64; 4]| d(u, b, p);
            for &p in points {
                let c1 = d(&la, 0, p) - boost(&ut, a, p) - d(u, a, p);
                let c2 = d(&la, b, p) - boost(&ub, a, p) - delta * d(u, 0, p);
                let c3 = boost(&lb, a, p) - boost(&la, b, p) - (p[a] * d(u, b, p) - p[b] * d(u, a, p));
                worst = worst.max(c1.abs()).max(c2.abs()).max(c3.abs());
            }
        }
    }
    worst
}
