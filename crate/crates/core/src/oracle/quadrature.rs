//! Deterministic reference for short horizons.
//!
//! The last coordinate is integrated in closed form: given the others, the
//! constraints cut `z_T` to an interval whose normal mass is a CDF
//! difference. The remaining one or two coordinates go through adaptive
//! Gauss-Kronrod, split at every point where the active constraints change
//! so that each panel sees a smooth integrand.

use crate::error::{Error, Result};
use crate::kernel::{normal_mass, std_normal_pdf};
use crate::preprocess::PolytopeProblem;

pub const MAX_QUADRATURE_HORIZON: usize = 3;

/// Outer coordinates are integrated over `[-R, R]`; the mass left out is
/// about `2e-19` per coordinate.
const RANGE: f64 = 9.0;
const MAX_DEPTH: u32 = 40;

// Published to 33 digits; the extra digits round away.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
/// Gauss weights for the even-indexed Kronrod nodes 1, 3, 5, 7.
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One 15-point Kronrod panel; returns the estimate and `|K15 - G7|`.
fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

fn adaptive(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (est, err) = gk15(f, a, b);
    if err <= tol || depth >= MAX_DEPTH {
        return est;
    }
    let mid = 0.5 * (a + b);
    adaptive(f, a, mid, 0.5 * tol, depth + 1) + adaptive(f, mid, b, 0.5 * tol, depth + 1)
}

/// Adaptive Gauss-Kronrod (7/15) integral of `f` over `[a, b]`, splitting
/// first at the sorted `breaks` inside the interval. `tol` is an absolute
/// target shared across the panels in proportion to their width.
pub fn gauss_kronrod(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: f64,
) -> f64 {
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|&x| a < x && x < b).collect();
    pts.push(a);
    pts.push(b);
    pts.sort_unstable_by(f64::total_cmp);
    pts.dedup();
    let width = b - a;
    pts.windows(2)
        .map(|w| adaptive(&mut f, w[0], w[1], tol * (w[1] - w[0]) / width, 0))
        .sum()
}

/// `z_{T-1} = c0 + c1 z_{T-2}` along which the set of active bounds on `z_T`
/// can change.
#[derive(Debug, Clone, Copy)]
struct Switch {
    c0: f64,
    c1: f64,
}

/// Rows of `A` restricted to three columns: `(outer, middle, last)`, with
/// `outer` zero when `T < 3`.
struct Reduced {
    rows: Vec<[f64; 3]>,
    b: Vec<f64>,
}

impl Reduced {
    fn new(p: &PolytopeProblem) -> Self {
        let t = p.horizon();
        let a = p.matrix();
        let rows = (0..p.constraints())
            .map(|i| {
                let get = |j: isize| if j >= 0 { a[(i, j as usize)] } else { 0.0 };
                [get(t as isize - 3), get(t as isize - 2), a[(i, t - 1)]]
            })
            .collect();
        Self {
            rows,
            b: p.offsets().to_vec(),
        }
    }

    /// Mass of `z_T` given the two preceding coordinates.
    fn inner(&self, outer: f64, middle: f64) -> f64 {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for (r, &b) in self.rows.iter().zip(&self.b) {
            let slack = b - r[0] * outer - r[1] * middle;
            if r[2] > 0.0 {
                hi = hi.min(slack / r[2]);
            } else if r[2] < 0.0 {
                lo = lo.max(slack / r[2]);
            } else if slack < 0.0 {
                return 0.0;
            }
        }
        normal_mass(lo.max(-40.0), hi.min(40.0))
    }

    fn switches(&self) -> Vec<Switch> {
        let mut out = Vec::new();
        let n = self.rows.len();
        for i in 0..n {
            let (ri, bi) = (self.rows[i], self.b[i]);
            if ri[2] == 0.0 {
                if ri[1] != 0.0 {
                    out.push(Switch {
                        c0: bi / ri[1],
                        c1: -ri[0] / ri[1],
                    });
                }
                continue;
            }
            for j in i + 1..n {
                let (rj, bj) = (self.rows[j], self.b[j]);
                if rj[2] == 0.0 {
                    continue;
                }
                // (b_i - r_i0 u - r_i1 z) / r_i2 = (b_j - r_j0 u - r_j1 z) / r_j2
                let denom = ri[1] / ri[2] - rj[1] / rj[2];
                if denom == 0.0 {
                    continue;
                }
                out.push(Switch {
                    c0: (bi / ri[2] - bj / rj[2]) / denom,
                    c1: -(ri[0] / ri[2] - rj[0] / rj[2]) / denom,
                });
            }
        }
        out
    }
}

fn middle_breaks(switches: &[Switch], outer: f64) -> Vec<f64> {
    switches.iter().map(|s| s.c0 + s.c1 * outer).collect()
}

/// `P(A z <= b)` by nested quadrature, for horizons up to three.
pub fn quadrature_estimate(p: &PolytopeProblem, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::invalid(
            "tol",
            format!("must be positive, got {tol}"),
        ));
    }
    let horizon = p.horizon();
    if horizon > MAX_QUADRATURE_HORIZON {
        return Err(Error::invalid(
            "A",
            format!("quadrature handles at most {MAX_QUADRATURE_HORIZON} columns, got {horizon}"),
        ));
    }
    let red = Reduced::new(p);
    if horizon == 1 {
        return Ok(red.inner(0.0, 0.0));
    }
    let switches = red.switches();
    let middle = |outer: f64, tol: f64| {
        gauss_kronrod(
            |z| std_normal_pdf(z) * red.inner(outer, z),
            -RANGE,
            RANGE,
            &middle_breaks(&switches, outer),
            tol,
        )
    };
    if horizon == 2 {
        return Ok(middle(0.0, tol));
    }
    // The middle integral kinks where two switch lines cross.
    let mut outer_breaks = Vec::new();
    for (i, s) in switches.iter().enumerate() {
        for r in &switches[i + 1..] {
            if s.c1 != r.c1 {
                outer_breaks.push((r.c0 - s.c0) / (s.c1 - r.c1));
            }
        }
    }
    Ok(gauss_kronrod(
        |u| std_normal_pdf(u) * middle(u, 0.1 * tol),
        -RANGE,
        RANGE,
        &outer_breaks,
        tol,
    ))
}
