//! Geometry of a single decorated ideal tetrahedron.
//!
//! The six signed edge lengths enter only through the three opposite-pair
//! sums `a = e^{(l12+l34)/2}`, `b = e^{(l13+l24)/2}`, `c = e^{(l14+l23)/2}`.
//! When `(a, b, c)` satisfy the strict triangle inequalities the tetrahedron
//! is nondegenerate and the dihedral angle of a pair is the Euclidean angle
//! opposite the corresponding side. Otherwise one pair is "long": it gets the
//! angle `π` and the other two pairs get `0`, which extends the angles to a
//! continuous function on all of `ℝ⁶`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::Matrix6;

use crate::error::{Error, Result};

/// Largest supported `|(l_i + l_j) / 2|` for an opposite pair before
/// [`pair_sums`] reports overflow.
pub const MAX_PAIR_EXPONENT: f64 = 300.0;

/// Default absolute accuracy of [`lobachevsky_default`].
pub const LOBACHEVSKY_TOL: f64 = 1e-12;

/// The three pairs of opposite edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum OppositePair {
    /// Edges 12 and 34 (slots 0 and 3).
    P12_34,
    /// Edges 13 and 24 (slots 1 and 4).
    P13_24,
    /// Edges 14 and 23 (slots 2 and 5).
    P14_23,
}

impl OppositePair {
    pub const ALL: [OppositePair; 3] = [Self::P12_34, Self::P13_24, Self::P14_23];

    pub fn index(self) -> usize {
        match self {
            Self::P12_34 => 0,
            Self::P13_24 => 1,
            Self::P14_23 => 2,
        }
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }

    /// The two edge slots belonging to this pair.
    pub fn slots(self) -> [usize; 2] {
        let i = self.index();
        [i, i + 3]
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::P12_34 => "12.34",
            Self::P13_24 => "13.24",
            Self::P14_23 => "14.23",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum RegionClass {
    NonDegenerate,
    /// Equality in the triangle inequality for the given long pair.
    Boundary(OppositePair),
    /// Strict violation for the given long pair.
    Degenerate(OppositePair),
}

impl RegionClass {
    pub fn is_nondegenerate(self) -> bool {
        matches!(self, Self::NonDegenerate)
    }

    /// The pair receiving the angle `π`, if any.
    pub fn long_pair(self) -> Option<OppositePair> {
        match self {
            Self::NonDegenerate => None,
            Self::Boundary(p) | Self::Degenerate(p) => Some(p),
        }
    }
}

impl std::fmt::Display for RegionClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::NonDegenerate => write!(f, "nondegenerate"),
            Self::Boundary(p) => write!(f, "boundary({})", p.label()),
            Self::Degenerate(p) => write!(f, "degenerate({})", p.label()),
        }
    }
}

/// Six edge lengths in slot order `12, 13, 14, 34, 24, 23`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TetMetric(pub [f64; 6]);

impl TetMetric {
    pub fn new(l: [f64; 6]) -> Self {
        Self(l)
    }

    /// Half-sums `(l_i + l_{i+3}) / 2`, the logarithms of the pair sums.
    pub fn pair_exponents(&self) -> [f64; 3] {
        let l = &self.0;
        [0.5 * (l[0] + l[3]), 0.5 * (l[1] + l[4]), 0.5 * (l[2] + l[5])]
    }

    /// Change of decoration at ideal vertex `vertex` (0-based): every edge
    /// incident to that vertex gains `t`.
    pub fn shift_vertex(&self, vertex: usize, t: f64) -> Self {
        let mut l = self.0;
        for (slot, &(a, b)) in crate::triangulation::SLOT_VERTICES.iter().enumerate() {
            if a == vertex || b == vertex {
                l[slot] += t;
            }
        }
        Self(l)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OppositePairSums {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl OppositePairSums {
    pub fn as_array(&self) -> [f64; 3] {
        [self.a, self.b, self.c]
    }
}

/// Dihedral angles in slot order; opposite slots carry equal values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DihedralAngles(pub [f64; 6]);

impl DihedralAngles {
    fn from_pairs(p: [f64; 3]) -> Self {
        Self([p[0], p[1], p[2], p[0], p[1], p[2]])
    }

    pub fn pair(&self, p: OppositePair) -> f64 {
        self.0[p.index()]
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }
}

pub fn pair_sums(m: &TetMetric) -> Result<OppositePairSums> {
    let x = m.pair_exponents();
    if let Some(&bad) = x.iter().find(|v| !(v.abs() <= MAX_PAIR_EXPONENT)) {
        return Err(Error::PairSumOverflow(bad));
    }
    Ok(OppositePairSums {
        a: x[0].exp(),
        b: x[1].exp(),
        c: x[2].exp(),
    })
}

/// Pair sums usable for comparisons: exact exponentials when in range,
/// otherwise rescaled by the largest one so nothing overflows.
fn comparable_sums(m: &TetMetric) -> [f64; 3] {
    match pair_sums(m) {
        Ok(s) => s.as_array(),
        Err(_) => {
            let x = m.pair_exponents();
            let top = x[0].max(x[1]).max(x[2]);
            [(x[0] - top).exp(), (x[1] - top).exp(), (x[2] - top).exp()]
        }
    }
}

fn classify_sums(s: [f64; 3]) -> RegionClass {
    for p in OppositePair::ALL {
        let i = p.index();
        let rest = s[(i + 1) % 3] + s[(i + 2) % 3];
        if s[i] > rest {
            return RegionClass::Degenerate(p);
        }
        if s[i] == rest {
            return RegionClass::Boundary(p);
        }
    }
    RegionClass::NonDegenerate
}

/// Region of `ℝ⁶` containing `m`; comparisons are exact on the computed sums.
pub fn classify(m: &TetMetric) -> RegionClass {
    classify_sums(comparable_sums(m))
}

/// Interior angles opposite sides `(a, b, c)` of a Euclidean triangle.
///
/// Uses the half-angle form of the cosine law,
/// `tan(A/2) = sqrt((a-b+c)(a+b-c) / ((a+b+c)(-a+b+c)))`,
/// which stays accurate when the triangle is nearly flat.
fn triangle_angles(s: [f64; 3]) -> [f64; 3] {
    let scale = s[0].max(s[1]).max(s[2]);
    let [a, b, c] = [s[0] / scale, s[1] / scale, s[2] / scale];
    let perimeter = a + b + c;
    let half = |x: f64, y: f64, z: f64| {
        let num = ((x - y + z) * (x + y - z)).max(0.0);
        let den = (perimeter * (y + z - x)).max(0.0);
        2.0 * num.sqrt().atan2(den.sqrt())
    };
    [half(a, b, c), half(b, c, a), half(c, a, b)]
}

fn angles_for(class: RegionClass, sums: [f64; 3]) -> DihedralAngles {
    match class.long_pair() {
        None => DihedralAngles::from_pairs(triangle_angles(sums)),
        Some(p) => {
            let mut pairs = [0.0; 3];
            pairs[p.index()] = PI;
            DihedralAngles::from_pairs(pairs)
        }
    }
}

/// Dihedral angles, extended by `π`/`0` outside the nondegenerate region.
pub fn extended_angles(m: &TetMetric) -> DihedralAngles {
    let sums = comparable_sums(m);
    angles_for(classify_sums(sums), sums)
}

/// Classification and extended angles from one evaluation of the pair sums.
pub fn classify_and_angles(m: &TetMetric) -> (RegionClass, DihedralAngles) {
    let sums = comparable_sums(m);
    let class = classify_sums(sums);
    (class, angles_for(class, sums))
}

/// `∂α/∂l` for a nondegenerate tetrahedron: `½ [[M, M], [M, M]]` with `M`
/// the cotangent matrix of the three pair angles.
pub fn tet_jacobian(m: &TetMetric) -> Result<Matrix6<f64>> {
    let (class, angles) = classify_and_angles(m);
    if !class.is_nondegenerate() {
        return Err(Error::DegenerateTet { tet: 0 });
    }
    Ok(jacobian_from_angles(&angles))
}

pub(crate) fn jacobian_from_angles(angles: &DihedralAngles) -> Matrix6<f64> {
    let cot = |x: f64| x.cos() / x.sin();
    let [c0, c1, c2] = [cot(angles.0[0]), cot(angles.0[1]), cot(angles.0[2])];
    let m = [
        [c1 + c2, -c2, -c1],
        [-c2, c0 + c2, -c0],
        [-c1, -c0, c0 + c1],
    ];
    Matrix6::from_fn(|i, j| 0.5 * m[i % 3][j % 3])
}

fn zeta_even_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        // ζ(2k) for k = 1..=64; k = 1, 2 in closed form, the rest by direct
        // summation with an Euler-Maclaurin tail.
        let pi2 = PI * PI;
        let mut out = vec![pi2 / 6.0, pi2 * pi2 / 90.0];
        const N: usize = 1000;
        for k in 3..=64 {
            let s = 2 * k;
            let mut acc = 0.0;
            for n in (1..=N).rev() {
                acc += (n as f64).powi(-s);
            }
            let nf = N as f64;
            acc += nf.powi(1 - s) / (s as f64 - 1.0) - 0.5 * nf.powi(-s);
            out.push(acc);
        }
        out
    })
}

/// Lobachevsky function `Λ(x) = -∫₀ˣ ln|2 sin t| dt` to absolute accuracy `tol`.
///
/// `Λ` is odd and π-periodic, so `x` is first reduced to `θ ∈ [-π/2, π/2]`.
/// There `Λ(θ) = θ - θ ln(2|θ|) + Σ_{k≥1} ζ(2k) θ^{2k+1} / (k (2k+1) π^{2k})`,
/// whose terms shrink at least by a factor `1/4` per step, so the tail after
/// the last term taken is bounded by `4/3` of that term.
pub fn lobachevsky(x: f64, tol: f64) -> f64 {
    assert!(tol > 0.0, "tolerance must be positive");
    if !x.is_finite() {
        return f64::NAN;
    }
    let theta = x - PI * (x / PI).round();
    if theta == 0.0 {
        return 0.0;
    }
    let zeta = zeta_even_table();
    let ratio = (theta / PI) * (theta / PI);
    let mut power = theta;
    let mut sum = theta - theta * (2.0 * theta.abs()).ln();
    for (i, z) in zeta.iter().enumerate() {
        let k = (i + 1) as f64;
        power *= ratio;
        let term = z * power / (k * (2.0 * k + 1.0));
        sum += term;
        if term.abs() * 4.0 / 3.0 < tol {
            break;
        }
    }
    sum
}

pub fn lobachevsky_default(x: f64) -> f64 {
    lobachevsky(x, LOBACHEVSKY_TOL)
}

/// Series cutoff for volumes; tighter than the default so finite differences
/// of the energy do not see the truncation point move.
const VOLUME_TOL: f64 = 1e-17;

fn volume_from_angles(angles: &DihedralAngles) -> f64 {
    0.5 * angles.0.iter().map(|&a| lobachevsky(a, VOLUME_TOL)).sum::<f64>()
}

/// Hyperbolic volume `½ Σ Λ(α̃)`; zero on degenerate tetrahedra.
pub fn tet_volume(m: &TetMetric) -> f64 {
    volume_from_angles(&extended_angles(m))
}

/// Extended co-volume `2 vol + Σ α̃ l`, a C¹ convex function on `ℝ⁶` whose
/// gradient is the extended angle vector.
pub fn tet_covolume(m: &TetMetric) -> f64 {
    let angles = extended_angles(m);
    covolume_from_angles(m, &angles)
}

pub(crate) fn covolume_from_angles(m: &TetMetric, angles: &DihedralAngles) -> f64 {
    let length_term: f64 = angles.0.iter().zip(&m.0).map(|(a, l)| a * l).sum();
    2.0 * volume_from_angles(angles) + length_term
}

/// Volume and co-volume sharing one angle evaluation.
pub(crate) fn volume_and_covolume(m: &TetMetric, angles: &DihedralAngles) -> (f64, f64) {
    let vol = volume_from_angles(angles);
    let length_term: f64 = angles.0.iter().zip(&m.0).map(|(a, l)| a * l).sum();
    (vol, 2.0 * vol + length_term)
}
