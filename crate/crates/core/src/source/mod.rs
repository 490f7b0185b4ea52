//! Piecewise-defined source terms `f` for the kinetic equation `u' = f(u)`.
//!
//! A [`PiecewiseSource`] is an ordered list of half-open pieces `[lo, hi)`
//! that tile its coverage exactly, plus a [`Tail`] rule saying what happens
//! past the last listed breakpoint. Pieces are constant, affine, or one of
//! the registered [`AnalyticFn`]s. Evaluation at a breakpoint takes the value
//! of the piece on the right.

mod analytic;
pub mod example_d;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;
use crate::serde_ext;

pub use analytic::{AnalyticFn, ReciprocalTail};
pub use example_d::{build_example_d, build_example_d_with, ExampleDOptions};

/// Default absolute tolerance for reciprocal integrals over finite ranges.
pub const DEFAULT_QUAD_TOL: f64 = 1e-10;

/// Relative gap tolerated between the one-sided values at a breakpoint
/// before it is treated as a jump.
const JUMP_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PieceKind {
    Constant {
        value: f64,
    },
    /// The line through `(anchor, value)` with the given slope. Storing an
    /// anchor instead of the intercept keeps evaluation accurate when the
    /// intercept is many orders of magnitude larger than the values.
    Affine {
        slope: f64,
        anchor: f64,
        value: f64,
    },
    Analytic {
        name: AnalyticFn,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    #[serde(with = "serde_ext")]
    pub lo: f64,
    #[serde(with = "serde_ext")]
    pub hi: f64,
    #[serde(flatten)]
    pub kind: PieceKind,
}

impl Piece {
    pub fn constant(lo: f64, hi: f64, value: f64) -> Self {
        Piece {
            lo,
            hi,
            kind: PieceKind::Constant { value },
        }
    }

    /// `a·s + b` on `[lo, hi)`.
    pub fn affine(lo: f64, hi: f64, slope: f64, intercept: f64) -> Self {
        let anchor = if lo.is_finite() {
            lo
        } else if hi.is_finite() {
            hi
        } else {
            0.0
        };
        Piece::affine_anchored(lo, hi, slope, anchor, slope * anchor + intercept)
    }

    pub fn affine_anchored(lo: f64, hi: f64, slope: f64, anchor: f64, value: f64) -> Self {
        Piece {
            lo,
            hi,
            kind: PieceKind::Affine {
                slope,
                anchor,
                value,
            },
        }
    }

    pub fn analytic(lo: f64, hi: f64, name: AnalyticFn) -> Self {
        Piece {
            lo,
            hi,
            kind: PieceKind::Analytic { name },
        }
    }

    pub fn contains(&self, s: f64) -> bool {
        self.lo <= s && s < self.hi
    }

    /// Value of the piece's formula at `s` (no range check).
    pub fn value(&self, s: f64) -> f64 {
        match self.kind {
            PieceKind::Constant { value } => value,
            PieceKind::Affine {
                slope,
                anchor,
                value,
            } => value + slope * (s - anchor),
            PieceKind::Analytic { name } => name.value(s),
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        match self.kind {
            PieceKind::Constant { .. } => 0.0,
            PieceKind::Affine { slope, .. } => slope,
            PieceKind::Analytic { name } => name.derivative(s),
        }
    }

    /// Intercept `b` of an affine piece.
    pub fn intercept(&self) -> Option<f64> {
        match self.kind {
            PieceKind::Affine {
                slope,
                anchor,
                value,
            } => Some(value - slope * anchor),
            _ => None,
        }
    }

    pub fn max_slope_on(&self, a: f64, b: f64) -> f64 {
        match self.kind {
            PieceKind::Constant { .. } => 0.0,
            PieceKind::Affine { slope, .. } => slope.abs(),
            PieceKind::Analytic { name } => name.lipschitz_on(a, b),
        }
    }

    pub fn min_on(&self, a: f64, b: f64) -> f64 {
        match self.kind {
            PieceKind::Constant { value } => value,
            PieceKind::Affine { .. } => self.value(a).min(self.value(b)),
            PieceKind::Analytic { name } => name.min_on(a, b),
        }
    }

    /// `∫_a^b ds / f(s)` restricted to this piece, with an error estimate.
    /// The caller guarantees `f > 0` on `[a, b]`.
    pub(crate) fn reciprocal_integral(&self, a: f64, b: f64, tol: f64) -> Result<(f64, f64)> {
        match self.kind {
            PieceKind::Constant { value } => Ok(((b - a) / value, 0.0)),
            PieceKind::Affine { slope, .. } => {
                let va = self.value(a);
                if slope == 0.0 {
                    Ok(((b - a) / va, 0.0))
                } else {
                    Ok(((slope * (b - a) / va).ln_1p() / slope, 0.0))
                }
            }
            PieceKind::Analytic { name } => {
                let cuts = geometric_cuts(a, b);
                let per = tol / (cuts.len() - 1) as f64;
                let mut total = (0.0, 0.0);
                for w in cuts.windows(2) {
                    let r = quadrature::integrate(|s| 1.0 / name.value(s), w[0], w[1], per, 0.0)?;
                    total.0 += r.value;
                    total.1 += r.error;
                }
                Ok(total)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.lo < self.hi) {
            return Err(Error::InvalidPieces(format!(
                "empty interval [{}, {})",
                self.lo, self.hi
            )));
        }
        let ok = match self.kind {
            PieceKind::Constant { value } => value.is_finite(),
            PieceKind::Affine {
                slope,
                anchor,
                value,
            } => slope.is_finite() && anchor.is_finite() && value.is_finite(),
            PieceKind::Analytic { name } => self.lo >= name.domain_lo(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidPieces(format!("bad parameters on {self:?}")))
        }
    }
}

/// Split `[a, b]` at powers of four times `a` when it spans a wide range of
/// magnitudes, so each quadrature call sees a well-scaled integrand.
fn geometric_cuts(a: f64, b: f64) -> Vec<f64> {
    let mut cuts = vec![a];
    if a > 0.0 {
        let mut x = 4.0 * a;
        while x < b {
            cuts.push(x);
            x *= 4.0;
        }
    }
    cuts.push(b);
    cuts
}

/// What the source does past its last listed breakpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Tail {
    /// Past the last breakpoint the source is undefined.
    Truncate,
    /// The last piece's formula continues to `+inf`.
    RepeatLast,
    /// The collar/plateau construction continues from index `from_n`.
    ExampleD { from_n: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RawSource {
    pieces: Vec<Piece>,
    tail: Tail,
}

/// A source term `f` made of contiguous half-open pieces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSource", into = "RawSource")]
pub struct PiecewiseSource {
    /// Explicit pieces followed by the tail rule's pieces materialized in
    /// `f64`.
    all: Vec<Piece>,
    n_explicit: usize,
    tail: Tail,
}

impl TryFrom<RawSource> for PiecewiseSource {
    type Error = Error;
    fn try_from(raw: RawSource) -> Result<Self> {
        PiecewiseSource::new(raw.pieces, raw.tail)
    }
}

impl From<PiecewiseSource> for RawSource {
    fn from(src: PiecewiseSource) -> Self {
        RawSource {
            pieces: src.pieces().to_vec(),
            tail: src.tail,
        }
    }
}

fn check_tiling(pieces: &[Piece]) -> Result<()> {
    for p in pieces {
        p.validate()?;
    }
    for w in pieces.windows(2) {
        if w[0].hi != w[1].lo {
            return Err(Error::InvalidPieces(format!(
                "gap or overlap between {} and {}",
                w[0].hi, w[1].lo
            )));
        }
    }
    Ok(())
}

impl PiecewiseSource {
    pub fn new(pieces: Vec<Piece>, tail: Tail) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidPieces("no pieces".into()));
        }
        check_tiling(&pieces)?;
        let last = *pieces.last().expect("nonempty");
        let extension = match tail {
            Tail::Truncate => Vec::new(),
            Tail::RepeatLast if last.hi == f64::INFINITY => Vec::new(),
            Tail::RepeatLast => vec![Piece {
                lo: last.hi,
                hi: f64::INFINITY,
                kind: last.kind,
            }],
            Tail::ExampleD { from_n } => {
                if from_n == 0 {
                    return Err(Error::InvalidPieces("example-d tail starts at n >= 1".into()));
                }
                example_d::f64_pieces(from_n)
            }
        };
        let n_explicit = pieces.len();
        let mut all = pieces;
        all.extend(extension);
        check_tiling(&all)?;
        Ok(PiecewiseSource {
            all,
            n_explicit,
            tail,
        })
    }

    pub fn single(piece: Piece) -> Result<Self> {
        PiecewiseSource::new(vec![piece], Tail::Truncate)
    }

    /// `c` on the whole line.
    pub fn constant(c: f64) -> Self {
        PiecewiseSource::single(Piece::constant(f64::NEG_INFINITY, f64::INFINITY, c))
            .expect("valid constant source")
    }

    /// `a·s + b` on the whole line.
    pub fn affine(slope: f64, intercept: f64) -> Self {
        PiecewiseSource::single(Piece::affine(
            f64::NEG_INFINITY,
            f64::INFINITY,
            slope,
            intercept,
        ))
        .expect("valid affine source")
    }

    pub fn analytic(name: AnalyticFn, lo: f64) -> Self {
        PiecewiseSource::single(Piece::analytic(lo, f64::INFINITY, name))
            .expect("valid analytic source")
    }

    /// The listed pieces, without the tail rule's extension.
    pub fn pieces(&self) -> &[Piece] {
        &self.all[..self.n_explicit]
    }

    /// Listed pieces followed by the tail rule's `f64` pieces.
    pub fn covering_pieces(&self) -> &[Piece] {
        &self.all
    }

    pub fn tail(&self) -> Tail {
        self.tail
    }

    pub fn is_example_d(&self) -> bool {
        matches!(self.tail, Tail::ExampleD { .. })
    }

    pub fn coverage(&self) -> (f64, f64) {
        (self.all[0].lo, self.all[self.all.len() - 1].hi)
    }

    /// Index into [`covering_pieces`](Self::covering_pieces) of the piece
    /// containing `s`.
    pub fn locate(&self, s: f64) -> Result<usize> {
        let (lo, hi) = self.coverage();
        if !(s >= lo && s < hi) {
            return Err(Error::OutOfRange { value: s });
        }
        Ok(self.all.partition_point(|p| p.lo <= s) - 1)
    }

    pub fn eval(&self, s: f64) -> Result<f64> {
        let i = self.locate(s)?;
        Ok(self.all[i].value(s))
    }

    /// Supremum of difference quotients of `f` over `[lo, hi]`. Returns
    /// `+inf` when a jump lies in `(lo, hi]`.
    pub fn lipschitz_on(&self, lo: f64, hi: f64) -> Result<f64> {
        let (clo, chi) = self.coverage();
        if !(lo < hi) {
            return Err(Error::InvalidInterval { lo, hi });
        }
        if lo < clo || hi > chi {
            return Err(Error::OutOfRange {
                value: if lo < clo { lo } else { hi },
            });
        }
        let mut bound: f64 = 0.0;
        for (i, p) in self.all.iter().enumerate() {
            if p.lo >= hi || p.hi <= lo {
                continue;
            }
            bound = bound.max(p.max_slope_on(lo.max(p.lo), hi.min(p.hi)));
            if let Some(next) = self.all.get(i + 1) {
                let b = p.hi;
                if lo < b && b <= hi && self.jump_at(p, next) {
                    return Ok(f64::INFINITY);
                }
            }
        }
        Ok(bound)
    }

    fn jump_at(&self, left: &Piece, right: &Piece) -> bool {
        let b = left.hi;
        let (l, r) = (left.value(b), right.value(b));
        (l - r).abs() > JUMP_RTOL * l.abs().max(r.abs()).max(1.0)
    }

    /// Breakpoints where the one-sided values disagree.
    pub fn jumps(&self) -> Vec<f64> {
        self.all
            .windows(2)
            .filter(|w| self.jump_at(&w[0], &w[1]))
            .map(|w| w[0].hi)
            .collect()
    }

    /// `∫_a^b ds / f(s)` with absolute error at most `tol`. Constant and
    /// affine pieces contribute in closed form; analytic pieces go through
    /// adaptive quadrature.
    pub fn reciprocal_integral(&self, a: f64, b: f64, tol: f64) -> Result<f64> {
        self.reciprocal_integral_with_error(a, b, tol).map(|(v, _)| v)
    }

    pub fn reciprocal_integral_with_error(&self, a: f64, b: f64, tol: f64) -> Result<(f64, f64)> {
        if !(a < b) || !b.is_finite() {
            return Err(Error::InvalidInterval { lo: a, hi: b });
        }
        let first = self.locate(a)?;
        let (_, chi) = self.coverage();
        if b > chi {
            return Err(Error::OutOfRange { value: b });
        }
        let segments: Vec<(usize, f64, f64)> = self.all[first..]
            .iter()
            .enumerate()
            .take_while(|(_, p)| p.lo < b)
            .map(|(k, p)| (first + k, a.max(p.lo), b.min(p.hi)))
            .collect();
        let n_analytic = segments
            .iter()
            .filter(|(i, _, _)| matches!(self.all[*i].kind, PieceKind::Analytic { .. }))
            .count()
            .max(1);
        let mut total = (0.0, 0.0);
        for (i, sa, sb) in segments {
            let p = &self.all[i];
            let m = p.min_on(sa, sb);
            if !(m > 0.0) {
                return Err(Error::NonPositive { at: sa, value: m });
            }
            let (v, e) = p.reciprocal_integral(sa, sb, tol / n_analytic as f64)?;
            total.0 += v;
            total.1 += e;
        }
        Ok(total)
    }
}

/// `f(s) = s ln s` for `s ≥ 1` and `s − 1` below: a C¹ source with global
/// kinetic solutions whose flow is `z^(e^t)` above 1.
pub fn build_example_c() -> PiecewiseSource {
    PiecewiseSource::new(
        vec![
            Piece::affine_anchored(f64::NEG_INFINITY, 1.0, 1.0, 1.0, 0.0),
            Piece::analytic(1.0, f64::INFINITY, AnalyticFn::SLnS),
        ],
        Tail::Truncate,
    )
    .expect("example-c pieces tile")
}

/// Names accepted by [`registered`].
pub const REGISTERED: [&str; 9] = [
    "zero",
    "one",
    "identity",
    "s_minus_1",
    "s_squared",
    "s_ln_s",
    "exp",
    "example_c",
    "example_d",
];

/// Source terms addressable by name from configs and the CLI.
pub fn registered(name: &str) -> Result<PiecewiseSource> {
    Ok(match name {
        "zero" => PiecewiseSource::constant(0.0),
        "one" => PiecewiseSource::constant(1.0),
        "identity" => PiecewiseSource::affine(1.0, 0.0),
        "s_minus_1" => PiecewiseSource::affine(1.0, -1.0),
        "s_squared" => PiecewiseSource::analytic(AnalyticFn::SSquared, 0.0),
        "s_ln_s" => PiecewiseSource::analytic(AnalyticFn::SLnS, 1.0),
        "exp" => PiecewiseSource::analytic(AnalyticFn::Exp, f64::NEG_INFINITY),
        "example_c" => build_example_c(),
        "example_d" => build_example_d(8)?,
        other => return Err(Error::InvalidParameter(format!("unknown source `{other}`"))),
    })
}
