//! Charge sources: antisymmetric rectangle and circle pairs plus arbitrary
//! gridded densities, with their partial Fourier transforms.
//!
//! Every source is charge-neutral (the total integral of the density
//! vanishes); the built-in shapes achieve this with a `+Q` lobe above the
//! centerline `y = y0` and a `-Q` lobe below it, and gridded sources are
//! repaired or rejected on construction. Neutrality makes the transform
//! along `y` vanish linearly at `k = 0`, which both keeps the potential
//! decaying at infinity and makes the dissipation integrand integrable at
//! the origin.
//!
//! Transform conventions, for `kappa >= 0` and a support `[d0, d1]` in `x`:
//!
//! - `rho_hat(k, x)`: partial transform `int rho(x, y) e^{-i k y} dy`.
//! - `transform_i_shifted(kappa)`: `int rho_hat(kappa, s) e^{-kappa (s - d0)} ds`,
//!   an O(1) quantity; the unshifted `transform_i` carries the extra
//!   `e^{-kappa d0}` on a scaled value.
//! - `transform_j_shifted(kappa)`: the mirror integral weighted by
//!   `e^{-kappa (d1 - s)}`.
//! - `green_halves(kappa, x)`: the two one-sided integrals
//!   `int rho_hat e^{-kappa |x - s|} ds` split at `s = x`, valid for any `x`.
//!
//! All closed forms hold for either sign of `k` and satisfy
//! `rho_hat(-k, x) = conj(rho_hat(k, x))` because the densities are real.

use crate::error::{Error, Result};
use crate::math::{logspace, one_minus_exp_neg, sinc};
use crate::par::ExecMode;
use crate::quad::{integrate, QuadOptions};
use crate::scaled::ScaledComplex;
use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, PI};

/// Gridded sources whose net charge exceeds this fraction of their total
/// absolute charge are rejected; smaller imbalances are repaired by
/// subtracting the mean over the charged cells.
pub const NEUTRALITY_TOLERANCE: f64 = 1e-9;

/// Safety factor applied to the numerically located transform suprema for
/// circle and grid sources (the rectangle has closed-form suprema). The
/// suprema feed order-of-magnitude envelope constants, so a 5% slack for
/// off-grid peaks is immaterial there.
const SUP_SCAN_MARGIN: f64 = 1.05;

/// Bounding box of a source's support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Support {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

/// Source-derived constants used by the envelope and bound computations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceBounds {
    /// Squared L2 norm of the density.
    pub norm_sq: f64,
    /// Supremum over `kappa >= 0` of `|transform_i_shifted|`.
    pub sup_i: f64,
    /// Supremum over `kappa >= 0` of `|transform_j_shifted|`.
    pub sup_j: f64,
    /// First moment `C0 = lim_{kappa -> 0} transform_i_shifted / kappa`.
    pub moment: Complex64,
    /// Support width `d1 - d0`.
    pub width: f64,
    /// Supremum over `x` of `int |rho(x, y)| dy`, bounding `|rho_hat|`.
    pub line_mass_sup: f64,
}

/// A compactly supported charge density to the right of the slab.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Rectangle(Rectangle),
    Circle(Circle),
    Grid(Grid),
}

/// Uniform `+Q` on `[x0-d, x0+d] x [y0, y0+h]` and `-Q` on
/// `[x0-d, x0+d] x [y0-h, y0]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rectangle {
    pub charge: f64,
    pub center_x: f64,
    pub center_y: f64,
    /// Half of the support width in `x`.
    pub half_width: f64,
    /// Height of each charge lobe (the full support spans `2 h` in `y`).
    pub lobe_height: f64,
}

/// Disk of radius `R` about `(x0, y0)` carrying `+Q` above the centerline
/// and `-Q` below it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub charge: f64,
    pub center_x: f64,
    pub center_y: f64,
    pub radius: f64,
}

/// Piecewise-constant density on a uniform cell grid, row-major with the
/// x-index outermost: `values[i * ny + j]` fills
/// `[x_min + i dx, x_min + (i+1) dx] x [y_min + j dy, y_min + (j+1) dy]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub x_min: f64,
    pub y_min: f64,
    pub dx: f64,
    pub dy: f64,
    pub nx: usize,
    pub ny: usize,
    values: Vec<f64>,
}

/// `(1 - e^{-t}) / t` for `t >= 0`, the average of the decay over a cell.
fn decay_average(t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    if t < 1e-8 {
        1.0 - 0.5 * t
    } else {
        one_minus_exp_neg(t) / t
    }
}

/// Transform along `y` of a `+q`/`-q` lobe pair of height `w` each, split at
/// `y0`: `-i q k w^2 sinc^2(k w / 2) e^{-i k y0}`.
fn lobe_pair_hat(q: f64, k: f64, w: f64, y0: f64) -> Complex64 {
    let s = sinc(0.5 * k * w);
    Complex64::new(0.0, -q * k * w * w * s * s) * Complex64::from_polar(1.0, -k * y0)
}

/// Quadrature settings for the circle's theta integrals: the integrands are
/// smooth and at most mildly peaked, so a tight tolerance stays cheap.
fn circle_quad_options() -> QuadOptions {
    QuadOptions {
        rel_tol: 1e-12,
        abs_tol: 1e-280,
        max_evals: 1 << 14,
        initial_panels: 8,
    }
}

impl Source {
    pub fn rectangle(
        charge: f64,
        center_x: f64,
        center_y: f64,
        half_width: f64,
        lobe_height: f64,
    ) -> Result<Self> {
        if !(charge.is_finite() && charge != 0.0) {
            return Err(Error::invalid("source charge must be finite and nonzero"));
        }
        if !(half_width.is_finite() && half_width > 0.0 && lobe_height.is_finite() && lobe_height > 0.0)
        {
            return Err(Error::invalid("rectangle dimensions must be positive"));
        }
        if !(center_x.is_finite() && center_y.is_finite()) {
            return Err(Error::invalid("rectangle center must be finite"));
        }
        Ok(Self::Rectangle(Rectangle {
            charge,
            center_x,
            center_y,
            half_width,
            lobe_height,
        }))
    }

    pub fn circle(charge: f64, center_x: f64, center_y: f64, radius: f64) -> Result<Self> {
        if !(charge.is_finite() && charge != 0.0) {
            return Err(Error::invalid("source charge must be finite and nonzero"));
        }
        if !(radius.is_finite() && radius > 0.0 && center_x.is_finite() && center_y.is_finite()) {
            return Err(Error::invalid("circle geometry must be finite with positive radius"));
        }
        Ok(Self::Circle(Circle {
            charge,
            center_x,
            center_y,
            radius,
        }))
    }

    /// Builds a gridded source, enforcing charge neutrality: a net charge
    /// within [`NEUTRALITY_TOLERANCE`] of zero (relative to the total
    /// absolute charge) is removed by subtracting the mean over the charged
    /// cells; anything larger is rejected.
    pub fn grid(
        x_min: f64,
        y_min: f64,
        dx: f64,
        dy: f64,
        nx: usize,
        ny: usize,
        mut values: Vec<f64>,
    ) -> Result<Self> {
        if !(dx.is_finite() && dx > 0.0 && dy.is_finite() && dy > 0.0) {
            return Err(Error::SourceData("grid spacings must be positive".into()));
        }
        if !(x_min.is_finite() && y_min.is_finite()) {
            return Err(Error::SourceData("grid origin must be finite".into()));
        }
        if nx == 0 || ny == 0 || values.len() != nx * ny {
            return Err(Error::SourceData(format!(
                "grid dimensions {nx} x {ny} do not match {} values",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::SourceData("grid values must be finite".into()));
        }
        let total: f64 = values.iter().sum();
        let total_abs: f64 = values.iter().map(|v| v.abs()).sum();
        if total_abs == 0.0 {
            return Err(Error::SourceData("grid source carries no charge".into()));
        }
        if total.abs() > NEUTRALITY_TOLERANCE * total_abs {
            return Err(Error::SourceData(format!(
                "grid source is not charge-neutral: net/total = {:e} exceeds {:e}",
                total.abs() / total_abs,
                NEUTRALITY_TOLERANCE
            )));
        }
        if total != 0.0 {
            let charged = values.iter().filter(|v| **v != 0.0).count();
            let correction = total / charged as f64;
            for v in values.iter_mut().filter(|v| **v != 0.0) {
                *v -= correction;
            }
        }
        Ok(Self::Grid(Grid {
            x_min,
            y_min,
            dx,
            dy,
            nx,
            ny,
            values,
        }))
    }

    pub fn support(&self) -> Support {
        match self {
            Self::Rectangle(r) => Support {
                x_min: r.center_x - r.half_width,
                x_max: r.center_x + r.half_width,
                y_min: r.center_y - r.lobe_height,
                y_max: r.center_y + r.lobe_height,
            },
            Self::Circle(c) => Support {
                x_min: c.center_x - c.radius,
                x_max: c.center_x + c.radius,
                y_min: c.center_y - c.radius,
                y_max: c.center_y + c.radius,
            },
            Self::Grid(g) => Support {
                x_min: g.x_min,
                x_max: g.x_min + g.nx as f64 * g.dx,
                y_min: g.y_min,
                y_max: g.y_min + g.ny as f64 * g.dy,
            },
        }
    }

    /// Left edge `d0` of the support.
    pub fn near_edge(&self) -> f64 {
        self.support().x_min
    }

    /// Right edge `d1` of the support.
    pub fn far_edge(&self) -> f64 {
        self.support().x_max
    }

    /// Pointwise density `rho(x, y)`.
    pub fn evaluate(&self, x: f64, y: f64) -> f64 {
        match self {
            Self::Rectangle(r) => {
                let dyc = y - r.center_y;
                if (x - r.center_x).abs() <= r.half_width && dyc.abs() <= r.lobe_height && dyc != 0.0
                {
                    r.charge * dyc.signum()
                } else {
                    0.0
                }
            }
            Self::Circle(c) => {
                let (rx, ry) = (x - c.center_x, y - c.center_y);
                if rx * rx + ry * ry <= c.radius * c.radius && ry != 0.0 {
                    c.charge * ry.signum()
                } else {
                    0.0
                }
            }
            Self::Grid(g) => {
                let fi = (x - g.x_min) / g.dx;
                let fj = (y - g.y_min) / g.dy;
                if fi < 0.0 || fj < 0.0 {
                    return 0.0;
                }
                let (i, j) = (fi as usize, fj as usize);
                if i >= g.nx || j >= g.ny {
                    0.0
                } else {
                    g.values[i * g.ny + j]
                }
            }
        }
    }

    /// Partial transform `int rho(x, y) e^{-i k y} dy`; zero outside the
    /// support in `x`. Valid for either sign of `k`.
    pub fn rho_hat(&self, k: f64, x: f64) -> Complex64 {
        match self {
            Self::Rectangle(r) => {
                if (x - r.center_x).abs() <= r.half_width {
                    lobe_pair_hat(r.charge, k, r.lobe_height, r.center_y)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            Self::Circle(c) => {
                let rx = x - c.center_x;
                let w_sq = c.radius * c.radius - rx * rx;
                if w_sq > 0.0 {
                    lobe_pair_hat(c.charge, k, w_sq.sqrt(), c.center_y)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            Self::Grid(g) => {
                let fi = (x - g.x_min) / g.dx;
                if fi < 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                let i = fi as usize;
                if i >= g.nx {
                    Complex64::new(0.0, 0.0)
                } else {
                    g.row_hat(i, k)
                }
            }
        }
    }

    /// `int rho_hat(kappa, s) e^{-kappa (s - d0)} ds` for `kappa >= 0`: the
    /// near-edge-shifted decaying transform, an O(|Q| area) quantity.
    pub fn transform_i_shifted(&self, kappa: f64) -> Complex64 {
        debug_assert!(kappa >= 0.0);
        match self {
            Self::Rectangle(r) => {
                // -i Q h^2 sinc^2(h kappa / 2) e^{-i kappa y0} (1 - e^{-2 d kappa});
                // the kappa from the y-transform cancels the 1/kappa of the
                // x-integral, so no division appears.
                let h = r.lobe_height;
                let s = sinc(0.5 * kappa * h);
                Complex64::new(0.0, -r.charge * h * h * s * s)
                    * Complex64::from_polar(1.0, -kappa * r.center_y)
                    * one_minus_exp_neg(2.0 * r.half_width * kappa)
            }
            Self::Circle(c) => c.decay_weighted(kappa, DecaySide::FromNearEdge),
            Self::Grid(g) => {
                let xf = |i: usize| (-(kappa * g.dx) * i as f64).exp();
                g.x_weighted_sum(kappa, xf)
            }
        }
    }

    /// The unshifted transform `I_kappa = e^{-kappa d0} transform_i_shifted`.
    pub fn transform_i(&self, kappa: f64) -> ScaledComplex {
        ScaledComplex::from_complex(self.transform_i_shifted(kappa))
            .exp_shift(-kappa * self.near_edge())
    }

    /// `int rho_hat(kappa, s) e^{-kappa (d1 - s)} ds`: the far-edge-shifted
    /// mirror of [`Self::transform_i_shifted`].
    pub fn transform_j_shifted(&self, kappa: f64) -> Complex64 {
        debug_assert!(kappa >= 0.0);
        match self {
            // The rectangle's x-profile is symmetric, so the mirror integral
            // coincides with the forward one.
            Self::Rectangle(_) => self.transform_i_shifted(kappa),
            Self::Circle(c) => c.decay_weighted(kappa, DecaySide::FromFarEdge),
            Self::Grid(g) => {
                let nx = g.nx;
                let xf = |i: usize| (-(kappa * g.dx) * (nx - 1 - i) as f64).exp();
                g.x_weighted_sum(kappa, xf)
            }
        }
    }

    /// One-sided decaying integrals against the density, split at `x`:
    /// `left = int_{s < x} rho_hat(kappa, s) e^{-kappa (x - s)} ds` and
    /// `right = int_{s > x} rho_hat(kappa, s) e^{-kappa (s - x)} ds`. Their
    /// sum is the free-space layer integral `int rho_hat e^{-kappa |x-s|} ds`.
    /// Valid for every real `x`.
    pub fn green_halves(&self, kappa: f64, x: f64) -> (ScaledComplex, ScaledComplex) {
        debug_assert!(kappa >= 0.0);
        let sup = self.support();
        if x <= sup.x_min {
            // Entire support is to the right: the right half is exactly the
            // near-edge transform pushed out to x.
            let right = ScaledComplex::from_complex(self.transform_i_shifted(kappa))
                .exp_shift(-kappa * (sup.x_min - x));
            return (ScaledComplex::ZERO, right);
        }
        if x >= sup.x_max {
            let left = ScaledComplex::from_complex(self.transform_j_shifted(kappa))
                .exp_shift(-kappa * (x - sup.x_max));
            return (left, ScaledComplex::ZERO);
        }
        let (l, r) = match self {
            Self::Rectangle(r) => {
                let hat = lobe_pair_hat(r.charge, kappa, r.lobe_height, r.center_y);
                let (tl, tr) = (kappa * (x - sup.x_min), kappa * (sup.x_max - x));
                (
                    hat * ((x - sup.x_min) * decay_average(tl)),
                    hat * ((sup.x_max - x) * decay_average(tr)),
                )
            }
            Self::Circle(c) => c.green_halves_inside(kappa, x),
            Self::Grid(g) => g.green_halves_inside(kappa, x),
        };
        (ScaledComplex::from_complex(l), ScaledComplex::from_complex(r))
    }

    /// First moment `C0` of the shifted transform:
    /// `transform_i_shifted(kappa) = C0 kappa + O(kappa^2)`.
    pub fn moment(&self) -> Complex64 {
        match self {
            Self::Rectangle(r) => Complex64::new(
                0.0,
                -2.0 * r.half_width * r.charge * r.lobe_height * r.lobe_height,
            ),
            Self::Circle(c) => Complex64::new(0.0, -c.charge * 4.0 / 3.0 * c.radius.powi(3)),
            Self::Grid(g) => {
                // From the kappa-expansion of the exact cell integrals, with
                // the total charge already repaired to (numerically) zero:
                // C0 = -sum_i N_i dx (c_i - d0) - i dx sum_i M_i, where N_i
                // and M_i are the row charge and row y-moment.
                let mut real = 0.0;
                let mut imag = 0.0;
                for i in 0..g.nx {
                    let (n_i, m_i) = g.row_charge_and_moment(i);
                    real -= n_i * g.dx * (i as f64 + 0.5) * g.dx;
                    imag -= g.dx * m_i;
                }
                Complex64::new(real, imag)
            }
        }
    }

    /// Norms and transform suprema for the envelope constants. The circle
    /// and grid suprema are located by a dense deterministic scan with a 5%
    /// margin; the rectangle's are closed-form.
    pub fn bound_constants(&self) -> SourceBounds {
        let sup = self.support();
        let width = sup.x_max - sup.x_min;
        let (norm_sq, line_mass_sup) = match self {
            Self::Rectangle(r) => (
                4.0 * r.half_width * r.lobe_height * r.charge * r.charge,
                2.0 * r.lobe_height * r.charge.abs(),
            ),
            Self::Circle(c) => (
                c.charge * c.charge * PI * c.radius * c.radius,
                2.0 * c.radius * c.charge.abs(),
            ),
            Self::Grid(g) => {
                let cell = g.dx * g.dy;
                let nsq = g.values.iter().map(|v| v * v).sum::<f64>() * cell;
                let lms = (0..g.nx)
                    .map(|i| (0..g.ny).map(|j| g.values[i * g.ny + j].abs()).sum::<f64>() * g.dy)
                    .fold(0.0f64, f64::max);
                (nsq, lms)
            }
        };
        let (sup_i, sup_j) = match self {
            Self::Rectangle(r) => {
                // |I~| <= |Q| h^2 sinc^2 (1 - e^{-..}) <= |Q| h^2, and the
                // mirror transform is identical.
                let cap = r.charge.abs() * r.lobe_height * r.lobe_height;
                (cap, cap)
            }
            _ => {
                // Peaks live at kappa ~ 1/(feature size); bracket them well
                // on both sides.
                let feature = match self {
                    Self::Circle(c) => c.radius,
                    Self::Grid(g) => g.dx.min(g.dy),
                    Self::Rectangle(_) => unreachable!(),
                };
                let scale = width.max(sup.y_max - sup.y_min);
                let grid_k = logspace(1e-6 / scale, 1e3 / feature, 2048);
                let mut si = 0.0f64;
                let mut sj = 0.0f64;
                for &k in &grid_k {
                    si = si.max(self.transform_i_shifted(k).norm());
                    sj = sj.max(self.transform_j_shifted(k).norm());
                }
                (si * SUP_SCAN_MARGIN, sj * SUP_SCAN_MARGIN)
            }
        };
        SourceBounds {
            norm_sq,
            sup_i,
            sup_j,
            moment: self.moment(),
            width,
            line_mass_sup,
        }
    }

    /// Period in `k` of the oscillatory envelope of the shifted transform,
    /// when the source has one (gridded sources do not).
    pub fn envelope_period(&self) -> Option<f64> {
        match self {
            Self::Rectangle(r) => Some(2.0 * PI / r.lobe_height),
            Self::Circle(c) => Some(4.0 * PI / c.radius),
            Self::Grid(_) => None,
        }
    }

    /// The j-th resonant wavenumber (`j >= 1`), where the shifted transform
    /// admits a guaranteed lower bound: rectangle `(2j - 1) pi / h`, circle
    /// `(2/R)(pi/2 + 2 pi j)`.
    pub fn resonant_k(&self, j: usize) -> Option<f64> {
        debug_assert!(j >= 1);
        match self {
            Self::Rectangle(r) => Some((2.0 * j as f64 - 1.0) * PI / r.lobe_height),
            Self::Circle(c) => Some((2.0 / c.radius) * (FRAC_PI_2 + 2.0 * PI * j as f64)),
            Self::Grid(_) => None,
        }
    }
}

/// Which edge the exponential decay in the circle's theta integral is
/// anchored at.
enum DecaySide {
    FromNearEdge,
    FromFarEdge,
}

impl Circle {
    /// `-i Q kappa e^{-i kappa y0} int R^3 cos^3 t sinc^2(kappa R cos t / 2)
    /// e^{-kappa R (1 +- sin t)} dt` over `t in [-pi/2, pi/2]`, the
    /// theta-substituted form of the decaying transforms (nonnegative real
    /// integrand).
    fn decay_weighted(&self, kappa: f64, side: DecaySide) -> Complex64 {
        let r = self.radius;
        let sign = match side {
            DecaySide::FromNearEdge => 1.0,
            DecaySide::FromFarEdge => -1.0,
        };
        let f = |t: f64| {
            let c = t.cos();
            let s = sinc(0.5 * kappa * r * c);
            r.powi(3) * c.powi(3) * s * s * (-kappa * r * (1.0 + sign * t.sin())).exp()
        };
        let out = integrate(f, -FRAC_PI_2, FRAC_PI_2, &circle_quad_options(), ExecMode::Sequential);
        Complex64::new(0.0, -self.charge * kappa)
            * Complex64::from_polar(1.0, -kappa * self.center_y)
            * out.value
    }

    /// One-sided integrals for `x` strictly inside the disk's x-extent.
    fn green_halves_inside(&self, kappa: f64, x: f64) -> (Complex64, Complex64) {
        let r = self.radius;
        let tx = ((x - self.center_x) / r).clamp(-1.0, 1.0).asin();
        let prefactor = Complex64::new(0.0, -self.charge * kappa)
            * Complex64::from_polar(1.0, -kappa * self.center_y);
        let body = |t: f64, dist: f64| {
            let c = t.cos();
            let s = sinc(0.5 * kappa * r * c);
            r.powi(3) * c.powi(3) * s * s * (-kappa * dist).exp()
        };
        let opts = circle_quad_options();
        let left = if tx > -FRAC_PI_2 {
            let f = |t: f64| body(t, (x - self.center_x) - r * t.sin());
            prefactor * integrate(f, -FRAC_PI_2, tx, &opts, ExecMode::Sequential).value
        } else {
            Complex64::new(0.0, 0.0)
        };
        let right = if tx < FRAC_PI_2 {
            let f = |t: f64| body(t, r * t.sin() - (x - self.center_x));
            prefactor * integrate(f, tx, FRAC_PI_2, &opts, ExecMode::Sequential).value
        } else {
            Complex64::new(0.0, 0.0)
        };
        (left, right)
    }
}

impl Grid {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Exact transform of row `i` along `y`:
    /// `dy sinc(k dy / 2) sum_j v_ij e^{-i k (y_j + dy/2)}`.
    fn row_hat(&self, i: usize, k: f64) -> Complex64 {
        let half_cell = sinc(0.5 * k * self.dy) * self.dy;
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..self.ny {
            let v = self.values[i * self.ny + j];
            if v != 0.0 {
                let yc = self.y_min + (j as f64 + 0.5) * self.dy;
                acc += v * Complex64::from_polar(1.0, -k * yc);
            }
        }
        acc * half_cell
    }

    /// Row charge `N_i = dy sum_j v_ij` and row y-moment
    /// `M_i = dy sum_j v_ij (y_j + dy/2)`.
    fn row_charge_and_moment(&self, i: usize) -> (f64, f64) {
        let mut n = 0.0;
        let mut m = 0.0;
        for j in 0..self.ny {
            let v = self.values[i * self.ny + j];
            n += v;
            m += v * (self.y_min + (j as f64 + 0.5) * self.dy);
        }
        (n * self.dy, m * self.dy)
    }

    /// `sum_i row_hat_i(kappa) * dx * decay_average(kappa dx) * xf(i)` with
    /// the caller-chosen positional decay factor `xf`.
    fn x_weighted_sum(&self, kappa: f64, xf: impl Fn(usize) -> f64) -> Complex64 {
        let cell = self.dx * decay_average(kappa * self.dx);
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.nx {
            let w = xf(i);
            if w > 0.0 {
                acc += self.row_hat(i, kappa) * (cell * w);
            }
        }
        acc
    }

    /// One-sided integrals for `x` strictly inside the grid's x-extent,
    /// splitting the cell containing `x` exactly.
    fn green_halves_inside(&self, kappa: f64, x: f64) -> (Complex64, Complex64) {
        let mut left = Complex64::new(0.0, 0.0);
        let mut right = Complex64::new(0.0, 0.0);
        for i in 0..self.nx {
            let lo = self.x_min + i as f64 * self.dx;
            let hi = lo + self.dx;
            let hat = self.row_hat(i, kappa);
            if hi <= x {
                // int_lo^hi e^{-kappa (x - s)} ds
                left += hat * ((-kappa * (x - hi)).exp() * self.dx * decay_average(kappa * self.dx));
            } else if lo >= x {
                right += hat * ((-kappa * (lo - x)).exp() * self.dx * decay_average(kappa * self.dx));
            } else {
                let (tl, tr) = (x - lo, hi - x);
                left += hat * (tl * decay_average(kappa * tl));
                right += hat * (tr * decay_average(kappa * tr));
            }
        }
        (left, right)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn rect() -> Source {
        Source::rectangle(1.5, 3.0, 0.5, 1.0, 0.5).unwrap()
    }

    fn circ() -> Source {
        Source::circle(2.0, 4.0, -1.0, 1.25).unwrap()
    }

    /// A grid reproducing `rect()` exactly: 8 x 10 cells of +-Q.
    fn rect_as_grid() -> Source {
        let (nx, ny) = (8, 10);
        let mut values = vec![0.0; nx * ny];
        for i in 0..nx {
            for j in 0..ny {
                values[i * ny + j] = if j < ny / 2 { -1.5 } else { 1.5 };
            }
        }
        Source::grid(2.0, 0.0, 2.0 / nx as f64, 1.0 / ny as f64, nx, ny, values).unwrap()
    }

    #[test]
    fn construction_validates_inputs() {
        assert!(Source::rectangle(0.0, 3.0, 0.0, 1.0, 0.5).is_err());
        assert!(Source::rectangle(1.0, 3.0, 0.0, -1.0, 0.5).is_err());
        assert!(Source::circle(1.0, 3.0, 0.0, 0.0).is_err());
        assert!(Source::grid(0.0, 0.0, 1.0, 1.0, 2, 2, vec![1.0; 3]).is_err());
        // Non-neutral grid is rejected...
        assert!(Source::grid(0.0, 0.0, 1.0, 1.0, 2, 2, vec![1.0, 1.0, 1.0, -1.0]).is_err());
        // ... while a tiny imbalance is repaired to (numerical) zero.
        let nudged = vec![1.0 + 1e-12, -1.0, 1.0, -1.0];
        let Source::Grid(g) = Source::grid(0.0, 0.0, 1.0, 1.0, 2, 2, nudged).unwrap() else {
            unreachable!()
        };
        let net: f64 = g.values().iter().sum();
        assert!(net.abs() < 1e-15);
    }

    #[test]
    fn density_and_transform_share_conventions() {
        for src in [rect(), circ(), rect_as_grid()] {
            let sup = src.support();
            // Antisymmetry / neutrality: rho_hat vanishes at k = 0.
            let mid_x = 0.5 * (sup.x_min + sup.x_max);
            assert_eq!(src.rho_hat(0.0, mid_x).norm(), 0.0);
            // Real densities: rho_hat(-k) = conj(rho_hat(k)).
            for &k in &[0.3, 2.0, 17.0] {
                let plus = src.rho_hat(k, mid_x);
                let minus = src.rho_hat(-k, mid_x);
                assert_relative_eq!((minus - plus.conj()).norm(), 0.0, epsilon = 1e-15);
            }
            // Outside the support the density and transform vanish.
            assert_eq!(src.evaluate(sup.x_max + 0.1, 0.0), 0.0);
            assert_eq!(src.rho_hat(1.0, sup.x_max + 0.1).norm(), 0.0);
        }
    }

    #[test]
    fn rho_hat_matches_direct_y_quadrature() {
        // Gauss-Legendre in y against the closed forms, per lobe.
        let (nodes, weights) = crate::math::gauss_legendre(32);
        for src in [rect(), circ()] {
            let sup = src.support();
            let x = 0.5 * (sup.x_min + sup.x_max) + 0.1;
            // Integrate over the actual charged extent at this x (the
            // circle's chord is narrower than its bounding box) so the GL
            // rule never straddles a density jump.
            let y_mid = 0.5 * (sup.y_min + sup.y_max);
            let half_extent = match &src {
                Source::Circle(c) => (c.radius.powi(2) - (x - c.center_x).powi(2)).sqrt(),
                _ => 0.5 * (sup.y_max - sup.y_min),
            };
            for &k in &[0.0, 0.7, 3.0, 11.0] {
                let mut acc = Complex64::new(0.0, 0.0);
                // Integrate each lobe separately (the density jumps at y0).
                for (lo, hi) in [(y_mid - half_extent, y_mid), (y_mid, y_mid + half_extent)] {
                    let (half, mid) = (0.5 * (hi - lo), 0.5 * (lo + hi));
                    for (t, w) in nodes.iter().zip(&weights) {
                        let y = mid + half * t;
                        acc += src.evaluate(x, y) * Complex64::from_polar(1.0, -k * y) * (w * half);
                    }
                }
                let closed = src.rho_hat(k, x);
                assert_abs_diff_eq!((acc - closed).norm(), 0.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn shifted_transform_limits_recover_the_moment() {
        for src in [rect(), circ(), rect_as_grid()] {
            let c0 = src.moment();
            let kappa = 1e-7;
            let slope = src.transform_i_shifted(kappa) / kappa;
            assert_relative_eq!((slope - c0).norm() / c0.norm(), 0.0, epsilon = 1e-5);
            // And the mirror transform has the same modulus slope.
            let j_slope = src.transform_j_shifted(kappa) / kappa;
            assert_relative_eq!(j_slope.norm(), c0.norm(), max_relative = 1e-5);
        }
    }

    #[test]
    fn closed_form_moments_match_between_shapes() {
        // The grid replica of the rectangle must agree to near machine
        // precision, both in the moment and across the transform.
        let (r, g) = (rect(), rect_as_grid());
        assert_relative_eq!((r.moment() - g.moment()).norm(), 0.0, epsilon = 1e-13);
        for &k in &[1e-4, 0.3, 1.7, 6.0, 25.0] {
            let a = r.transform_i_shifted(k);
            let b = g.transform_i_shifted(k);
            assert_relative_eq!((a - b).norm() / a.norm().max(1e-300), 0.0, epsilon = 1e-11);
            let aj = r.transform_j_shifted(k);
            let bj = g.transform_j_shifted(k);
            assert_relative_eq!((aj - bj).norm() / aj.norm().max(1e-300), 0.0, epsilon = 1e-11);
        }
    }

    #[test]
    fn green_halves_are_consistent_across_region_boundaries() {
        for src in [rect(), circ(), rect_as_grid()] {
            let sup = src.support();
            let kappa = 1.3;
            // Outside-left: right half equals the pushed near-edge transform.
            let x = sup.x_min - 0.7;
            let (l, r) = src.green_halves(kappa, x);
            assert!(l.is_zero());
            let expect = ScaledComplex::from_complex(src.transform_i_shifted(kappa))
                .exp_shift(-kappa * (sup.x_min - x));
            assert_relative_eq!(
                (r.to_complex() - expect.to_complex()).norm(),
                0.0,
                epsilon = 1e-14
            );
            // Continuity as x crosses into the support.
            let eps = 1e-9;
            for edge in [sup.x_min, sup.x_max] {
                let (la, ra) = src.green_halves(kappa, edge - eps);
                let (lb, rb) = src.green_halves(kappa, edge + eps);
                let scale = (la + ra).to_complex().norm().max(1e-30);
                assert!(
                    ((la + ra).to_complex() - (lb + rb).to_complex()).norm() / scale < 1e-5,
                    "discontinuous at edge {edge}"
                );
            }
            // Interior sum equals a brute-force two-sided integral at one x.
            let x_in = 0.5 * (sup.x_min + sup.x_max) + 0.05;
            let (li, ri) = src.green_halves(kappa, x_in);
            let (nodes, weights) = crate::math::gauss_legendre(64);
            let mut brute = Complex64::new(0.0, 0.0);
            for (lo, hi) in [(sup.x_min, x_in), (x_in, sup.x_max)] {
                let (half, mid) = (0.5 * (hi - lo), 0.5 * (lo + hi));
                for (t, w) in nodes.iter().zip(&weights) {
                    let s = mid + half * t;
                    brute += src.rho_hat(kappa, s) * ((-kappa * (x_in - s).abs()).exp() * w * half);
                }
            }
            let total = (li + ri).to_complex();
            assert_relative_eq!((total - brute).norm() / brute.norm(), 0.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn bound_constants_dominate_sampled_values() {
        for src in [rect(), circ(), rect_as_grid()] {
            let b = src.bound_constants();
            assert!(b.norm_sq > 0.0);
            for &k in &[1e-3, 0.2, 1.0, 4.0, 40.0, 400.0] {
                assert!(src.transform_i_shifted(k).norm() <= b.sup_i * (1.0 + 1e-12));
                assert!(src.transform_j_shifted(k).norm() <= b.sup_j * (1.0 + 1e-12));
                let sup = src.support();
                let x = 0.5 * (sup.x_min + sup.x_max);
                assert!(src.rho_hat(k, x).norm() <= b.line_mass_sup * (1.0 + 1e-12));
            }
        }
        // Closed forms for the built-in shapes.
        let rb = rect().bound_constants();
        assert_relative_eq!(rb.norm_sq, 4.0 * 1.0 * 0.5 * 1.5 * 1.5, max_relative = 1e-15);
        assert_relative_eq!(rb.sup_i, 1.5 * 0.25, max_relative = 1e-15);
        let cb = circ().bound_constants();
        assert_relative_eq!(cb.norm_sq, 4.0 * PI * 1.25 * 1.25, max_relative = 1e-12);
    }

    #[test]
    fn resonant_wavenumbers_hit_transform_ridges() {
        let r = rect();
        let h = 0.5; // lobe height of rect()
        for j in 1..6 {
            let k = r.resonant_k(j).unwrap();
            // sin^2(h k / 2) = 1 at the resonant points.
            assert_abs_diff_eq!((0.5 * h * k).sin().abs(), 1.0, epsilon = 1e-12);
        }
        assert_eq!(rect_as_grid().resonant_k(1), None);
        assert_relative_eq!(r.envelope_period().unwrap(), 2.0 * PI / 0.5, max_relative = 1e-15);
    }
}
