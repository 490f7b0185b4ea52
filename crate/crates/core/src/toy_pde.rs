//! The toy PDE `v_t = f(v)`: space is only a label, so `v(t, x)` is the
//! kinetic flow of `ψ(x)`. Initial data are block functions; the collar/
//! plateau data `ψ = φ_n` on `[φ_n^-8, φ_n^-4)` is carried by a generator
//! rule so that norms and certificates can speak about every block, not
//! only the ones that fit in `f64`.

use serde::{Deserialize, Serialize};

use crate::conditions::uniform_lipschitz_bound;
use crate::error::{Error, Result};
use crate::kinetics::{blowup_time, flow, invert_blowup_time, BlowupVerdict};
use crate::log2::{Log2Real, Phi};
use crate::serde_ext;
use crate::source::PiecewiseSource;

/// Largest block index of the collar/plateau data whose interval is
/// representable in `f64` (`φ_7^-8 = 2^-1024` is subnormal but exact).
pub const EXAMPLE_D_PSI_F64_MAX: u32 = 7;

/// Largest index examined by certificates and level-set searches.
const MAX_INDEX: u32 = 62;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub lo: f64,
    pub hi: f64,
    #[serde(with = "serde_ext")]
    pub value: f64,
}

impl Block {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorRule {
    /// Block `n` is `[φ_n^-8, φ_n^-4)` with value `φ_n`.
    ExampleD,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub name: GeneratorRule,
    /// Blocks `0..=n_max` are listed explicitly.
    pub n_max: u32,
    /// Values are `min(φ_n, cap)` after truncation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<f64>,
}

impl Generator {
    fn value_log2(&self, n: u32) -> Log2Real {
        let v = Phi::new(n).log2();
        match self.cap {
            Some(m) if Log2Real::from_f64(m) < v => Log2Real::from_f64(m),
            _ => v,
        }
    }

    /// `|block n| = φ_n^-4 − φ_n^-8`.
    fn width_log2(n: u32) -> Log2Real {
        Phi::new(n).pow(-4.0) - Phi::new(n).pow(-8.0)
    }

    /// Measure of the blocks `n ≥ k`, which telescopes to `φ_k^-4`.
    fn measure_from(k: u32) -> Log2Real {
        Phi::new(k).pow(-4.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RawBlockFunction {
    #[serde(rename = "L")]
    length: f64,
    blocks: Vec<Block>,
    #[serde(default)]
    background: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    generator: Option<Generator>,
}

/// Nonnegative piecewise-constant data on `(0, L]`: listed blocks, a
/// background value on the rest, and optionally a rule continuing the
/// listed blocks towards `x = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBlockFunction", into = "RawBlockFunction")]
pub struct BlockFunction {
    length: f64,
    blocks: Vec<Block>,
    background: f64,
    generator: Option<Generator>,
}

impl TryFrom<RawBlockFunction> for BlockFunction {
    type Error = Error;
    fn try_from(raw: RawBlockFunction) -> Result<Self> {
        let psi = BlockFunction::new(raw.length, raw.blocks, raw.background)?;
        match raw.generator {
            None => Ok(psi),
            Some(g) => {
                let mut d = BlockFunction::example_d(g.n_max)?;
                if let Some(m) = g.cap {
                    d = d.capped(m)?;
                }
                let d = BlockFunction {
                    length: raw.length,
                    background: raw.background,
                    ..d
                };
                if d.blocks != psi.blocks || raw.length < 1.0 / 16.0 {
                    return Err(Error::InvalidParameter(
                        "listed blocks disagree with the generator rule".into(),
                    ));
                }
                Ok(d)
            }
        }
    }
}

impl From<BlockFunction> for RawBlockFunction {
    fn from(b: BlockFunction) -> Self {
        RawBlockFunction {
            length: b.length,
            blocks: b.blocks,
            background: b.background,
            generator: b.generator,
        }
    }
}

impl BlockFunction {
    pub fn new(length: f64, blocks: Vec<Block>, background: f64) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidParameter(format!("domain length {length}")));
        }
        if !(background >= 0.0 && background.is_finite()) {
            return Err(Error::InvalidParameter(format!("background {background}")));
        }
        for b in &blocks {
            if !(b.lo >= 0.0 && b.lo < b.hi && b.hi <= length) {
                return Err(Error::InvalidInterval { lo: b.lo, hi: b.hi });
            }
            if !(b.value >= 0.0 && b.value.is_finite()) {
                return Err(Error::InvalidParameter(format!("block value {}", b.value)));
            }
        }
        let mut sorted = blocks.clone();
        sorted.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        if sorted.windows(2).any(|w| w[0].hi > w[1].lo) {
            return Err(Error::InvalidParameter("blocks overlap".into()));
        }
        Ok(BlockFunction {
            length,
            blocks,
            background,
            generator: None,
        })
    }

    /// `c` on all of `(0, L]`.
    pub fn constant(length: f64, c: f64) -> Result<Self> {
        BlockFunction::new(length, vec![Block { lo: 0.0, hi: length, value: c }], 0.0)
    }

    /// `ψ = φ_n` on `[φ_n^-8, φ_n^-4)` for every `n ≥ 0`, zero on
    /// `[1/16, 1]`; blocks `0..=n_max` are listed.
    pub fn example_d(n_max: u32) -> Result<Self> {
        if n_max > EXAMPLE_D_PSI_F64_MAX {
            return Err(Error::InvalidParameter(format!(
                "block {n_max} is not representable in f64 (max {EXAMPLE_D_PSI_F64_MAX})"
            )));
        }
        let blocks = (0..=n_max)
            .map(|n| {
                let e = Phi::new(n).log2_value() as i32;
                Block {
                    lo: 2f64.powi(-8 * e),
                    hi: 2f64.powi(-4 * e),
                    value: 2f64.powi(e),
                }
            })
            .collect();
        Ok(BlockFunction {
            length: 1.0,
            blocks,
            background: 0.0,
            generator: Some(Generator {
                name: GeneratorRule::ExampleD,
                n_max,
                cap: None,
            }),
        })
    }

    /// Blockwise `min(ψ, m)`.
    pub fn capped(&self, m: f64) -> Result<Self> {
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::InvalidParameter(format!("truncation level {m} must be finite and positive")));
        }
        Ok(BlockFunction {
            length: self.length,
            blocks: self
                .blocks
                .iter()
                .map(|b| Block {
                    value: b.value.min(m),
                    ..*b
                })
                .collect(),
            background: self.background.min(m),
            generator: self.generator.map(|g| Generator {
                cap: Some(g.cap.map_or(m, |c| c.min(m))),
                ..g
            }),
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn background(&self) -> f64 {
        self.background
    }

    pub fn generator(&self) -> Option<Generator> {
        self.generator
    }

    /// Measure of all blocks, including the generated ones.
    pub fn support_measure(&self) -> f64 {
        match self.generator {
            Some(_) => Generator::measure_from(0).to_f64(),
            None => self.blocks.iter().map(Block::width).sum(),
        }
    }

    /// Measure of the generated blocks that are not listed.
    pub fn unlisted_measure(&self) -> f64 {
        match self.generator {
            Some(g) => Generator::measure_from(g.n_max + 1).to_f64(),
            None => 0.0,
        }
    }

    /// Largest value, infinite for uncapped generated data.
    pub fn sup(&self) -> f64 {
        let listed = self.blocks.iter().map(|b| b.value).fold(self.background, f64::max);
        match self.generator {
            Some(Generator { cap: None, .. }) => f64::INFINITY,
            Some(Generator { cap: Some(m), .. }) => listed.max(m),
            None => listed,
        }
    }

    pub fn value_at(&self, x: f64) -> Result<f64> {
        if !(x > 0.0 && x <= self.length) {
            return Err(Error::OutOfRange { value: x });
        }
        if let Some(b) = self.blocks.iter().find(|b| b.lo <= x && x < b.hi) {
            return Ok(b.value);
        }
        if let Some(g) = self.generator {
            // below the listed blocks: find n with φ_n^-8 ≤ x < φ_n^-4
            if x < Generator::measure_from(g.n_max + 1).to_f64() {
                let n = (-x.log2() / 4.0).log2().ceil() as u32 - 1;
                return Ok(g.value_log2(n.max(g.n_max + 1)).to_f64());
            }
        }
        Ok(self.background)
    }

    /// `∫_a^b ψ`. Generated blocks below the listed ones are included
    /// while their intervals are representable in `f64`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let overlap = |lo: f64, hi: f64| (hi.min(b) - lo.max(a)).max(0.0);
        let mut total = 0.0;
        let mut covered = 0.0;
        for blk in &self.blocks {
            let w = overlap(blk.lo, blk.hi);
            total += blk.value * w;
            covered += w;
        }
        if let Some(g) = self.generator {
            for n in g.n_max + 1..=MAX_INDEX {
                let e = Phi::new(n).log2_value() as f64;
                let hi = (-4.0 * e).exp2();
                if hi == 0.0 {
                    break;
                }
                let w = overlap((-8.0 * e).exp2(), hi);
                if w > 0.0 {
                    total += g.value_log2(n).to_f64() * w;
                    covered += w;
                }
            }
        }
        total + self.background * (overlap(0.0, self.length) - covered)
    }

    /// Measure of `{ψ ≥ m}`.
    pub fn level_set_measure(&self, m: f64) -> f64 {
        let bg = self.length - self.support_measure();
        let mut total = if self.background >= m { bg } else { 0.0 };
        match self.generator {
            Some(g) => {
                let lm = Log2Real::from_f64(m);
                if let Some(k) = (0..=MAX_INDEX).find(|&n| g.value_log2(n) >= lm) {
                    total += Generator::measure_from(k).to_f64();
                }
            }
            None => {
                total += self.blocks.iter().filter(|b| b.value >= m).map(Block::width).sum::<f64>();
            }
        }
        total
    }
}

/// `Σ_i coef_i · φ_n^exp_i`, a term of a series indexed by `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiPoly {
    pub terms: Vec<PhiTerm>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiTerm {
    pub coef: Log2Real,
    pub exp: f64,
}

impl PhiPoly {
    pub fn new(terms: impl IntoIterator<Item = (Log2Real, f64)>) -> Self {
        let mut merged: Vec<PhiTerm> = Vec::new();
        for (coef, exp) in terms {
            match merged.iter_mut().find(|t| t.exp == exp) {
                Some(t) => t.coef = t.coef + coef,
                None => merged.push(PhiTerm { coef, exp }),
            }
        }
        merged.retain(|t| !t.coef.is_zero());
        merged.sort_by(|a, b| b.exp.total_cmp(&a.exp));
        PhiPoly { terms: merged }
    }

    pub fn eval(&self, n: u32) -> Log2Real {
        let phi = Phi::new(n);
        self.terms
            .iter()
            .fold(Log2Real::ZERO, |acc, t| acc + t.coef * phi.pow(t.exp))
    }

    fn leading(&self) -> Option<PhiTerm> {
        self.terms.first().copied()
    }

    /// `(n0, c)` with `term_n ≥ c` for every `n ≥ n0`, when the leading
    /// term is positive and does not decay. Dropping the positive lower
    /// terms, `term_n ≥ φ_n^e0 · (lead + Σ_neg coef φ_n^(e − e0))`; the
    /// bracket increases with `n`, so once it reaches `lead / 2` it stays
    /// there, and `φ_n^e0 ≥ 1`.
    pub fn divergence_certificate(&self) -> Option<(u32, f64)> {
        let lead = self.leading()?;
        if !lead.coef.is_positive() || lead.exp < 0.0 {
            return None;
        }
        let half = lead.coef.scale(0.5);
        (0..=MAX_INDEX)
            .find(|&n| self.scaled_lower_bound(n) >= half)
            .map(|n| (n, half.to_f64()))
    }

    fn scaled_lower_bound(&self, n: u32) -> Log2Real {
        let lead = self.terms[0];
        let phi = Phi::new(n);
        self.terms[1..]
            .iter()
            .filter(|t| !t.coef.is_positive())
            .fold(lead.coef, |acc, t| acc + t.coef * phi.pow(t.exp - lead.exp))
    }

    /// Upper bound on `Σ_{n ≥ from} term_n` when the leading exponent is
    /// negative: `term_n ≤ B φ_n^e0` with `B` the positive part at `from`,
    /// and `Σ_k x^(2^k) ≤ x / (1 − x)` for `x = φ_from^e0`.
    pub fn tail_bound(&self, from: u32) -> Option<f64> {
        let lead = self.leading()?;
        if lead.exp >= 0.0 {
            return None;
        }
        let phi = Phi::new(from);
        let b = self
            .terms
            .iter()
            .filter(|t| t.coef.is_positive())
            .fold(Log2Real::ZERO, |acc, t| acc + t.coef * phi.pow(t.exp - lead.exp));
        let x = phi.pow(lead.exp);
        Some((b * x / (Log2Real::ONE - x)).to_f64())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    /// The true value lies in `[sum, sum + error]`.
    Convergent { sum: f64, error: f64 },
    /// `term_n ≥ c` for every `n ≥ n0`.
    Divergent {
        n0: u32,
        #[serde(with = "serde_ext")]
        c: f64,
    },
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesVerdict {
    #[serde(flatten)]
    pub verdict: Verdict,
    pub p: f64,
    pub terms_computed: usize,
    #[serde(with = "serde_ext::vec")]
    pub partial_sums: Vec<f64>,
    /// Closed-form term (or term lower bound) for generated data.
    pub rule: Option<PhiPoly>,
}

impl SeriesVerdict {
    pub fn is_divergent(&self) -> bool {
        matches!(self.verdict, Verdict::Divergent { .. })
    }

    pub fn is_convergent(&self) -> bool {
        matches!(self.verdict, Verdict::Convergent { .. })
    }

    pub fn certificate(&self) -> Option<(u32, f64)> {
        match self.verdict {
            Verdict::Divergent { n0, c } => Some((n0, c)),
            _ => None,
        }
    }
}

fn example_d_rule(p: f64, value: Log2Real, value_exp: f64) -> PhiPoly {
    // value^p · (φ^-4 − φ^-8) with value = coef · φ^value_exp
    let v = value.powf(p);
    let e = value_exp * p;
    PhiPoly::new([(v, e - 4.0), (-v, e - 8.0)])
}

/// `∫ |ψ|^p`, summed block by block; generated data are summed in log2
/// domain and classified.
pub fn lp_norm_block(psi: &BlockFunction, p: f64, n_terms: usize) -> Result<SeriesVerdict> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("p = {p} must be at least 1")));
    }
    if n_terms == 0 {
        return Err(Error::InvalidParameter("n_terms must be positive".into()));
    }
    let offset = psi.background.powf(p) * (psi.length - psi.support_measure());
    let Some(g) = psi.generator else {
        let mut sum = offset;
        let partial_sums = psi
            .blocks
            .iter()
            .map(|b| {
                sum += b.value.powf(p) * b.width();
                sum
            })
            .collect();
        return Ok(SeriesVerdict {
            verdict: Verdict::Convergent { sum, error: 0.0 },
            p,
            terms_computed: psi.blocks.len(),
            partial_sums,
            rule: None,
        });
    };
    let uncapped = example_d_rule(p, Log2Real::ONE, 1.0);
    let cap_index = g.cap.map(|m| {
        let lm = Log2Real::from_f64(m);
        (0..=MAX_INDEX).find(|&n| Phi::new(n).log2() >= lm).unwrap_or(MAX_INDEX)
    });
    // past the cap every block carries the same value
    let n_computed = match cap_index {
        Some(k) => n_terms.max(k as usize),
        None => n_terms,
    }
    .min(MAX_INDEX as usize);
    let mut sum = Log2Real::from_f64(offset);
    let mut partial_sums = Vec::with_capacity(n_computed);
    for n in 0..n_computed as u32 {
        sum = sum + g.value_log2(n).powf(p) * Generator::width_log2(n);
        partial_sums.push(sum.to_f64());
    }
    let sum = sum.to_f64();
    let next = n_computed as u32;
    let (verdict, rule) = match g.cap {
        Some(m) => {
            let rule = example_d_rule(p, Log2Real::from_f64(m), 0.0);
            let error = rule.tail_bound(next).expect("capped terms decay");
            (Verdict::Convergent { sum, error }, rule)
        }
        None => match uncapped.divergence_certificate() {
            Some((n0, c)) => (Verdict::Divergent { n0, c }, uncapped),
            None => match uncapped.tail_bound(next) {
                Some(error) => (Verdict::Convergent { sum, error }, uncapped),
                None => (Verdict::Inconclusive, uncapped),
            },
        },
    };
    Ok(SeriesVerdict {
        verdict,
        p,
        terms_computed: n_computed,
        partial_sums,
        rule: Some(rule),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupMark {
    /// Listed block index; `None` for the background.
    pub block: Option<usize>,
    pub time: f64,
}

/// `ψ` moved pointwise by the kinetic flow. Blown-up blocks carry an
/// infinite value and a mark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolvedBlocks {
    pub t: f64,
    #[serde(rename = "L")]
    pub length: f64,
    pub blocks: Vec<Block>,
    #[serde(with = "serde_ext")]
    pub background: f64,
    pub marks: Vec<BlowupMark>,
    pub blown_up_measure: f64,
    /// Generated blocks below the listed ones, not evolved.
    pub unlisted_measure: f64,
}

impl EvolvedBlocks {
    /// `∫ |v|^p` over the listed blocks and background.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let support: f64 = self.blocks.iter().map(Block::width).sum::<f64>() + self.unlisted_measure;
        self.blocks
            .iter()
            .map(|b| b.value.abs().powf(p) * b.width())
            .sum::<f64>()
            + self.background.abs().powf(p) * (self.length - support)
    }
}

pub fn evolve_block(psi: &BlockFunction, f: &PiecewiseSource, t: f64) -> Result<EvolvedBlocks> {
    if !(t >= 0.0) {
        return Err(Error::NegativeTime(t));
    }
    let mut marks = Vec::new();
    let mut blown_up_measure = 0.0;
    let mut blocks = Vec::with_capacity(psi.blocks.len());
    for (i, b) in psi.blocks.iter().enumerate() {
        let out = flow(f, b.value, t)?;
        let value = match out.blowup_time() {
            Some(time) => {
                marks.push(BlowupMark { block: Some(i), time });
                blown_up_measure += b.width();
                f64::INFINITY
            }
            None => out.value().expect("alive"),
        };
        blocks.push(Block { value, ..*b });
    }
    let out = flow(f, psi.background, t)?;
    let background = match out.blowup_time() {
        Some(time) => {
            marks.push(BlowupMark { block: None, time });
            blown_up_measure += psi.length - psi.support_measure();
            f64::INFINITY
        }
        None => out.value().expect("alive"),
    };
    Ok(EvolvedBlocks {
        t,
        length: psi.length,
        blocks,
        background,
        marks,
        blown_up_measure,
        unlisted_measure: psi.unlisted_measure(),
    })
}

/// `K` with `|f(s)| ≤ K (1 + |s|)` for every `s`, when `f` is uniformly
/// Lipschitz: `K = max(L, |f(s0)| + L |s0|)`.
pub fn linear_growth_constant(f: &PiecewiseSource) -> Option<f64> {
    let l = uniform_lipschitz_bound(f)?;
    let (lo, hi) = f.coverage();
    if lo.is_finite() || hi.is_finite() {
        // the bound has to hold on the whole line
        return None;
    }
    let f0 = f.eval(0.0).ok()?;
    Some(l.max(f0.abs()))
}

/// `e^(Kt) ‖ψ‖_p + (e^(Kt) − 1) L^(1/p)`: pointwise Grönwall
/// `|v| ≤ e^(Kt)|ψ| + e^(Kt) − 1`, then Minkowski.
pub fn gronwall_norm_bound(psi: &BlockFunction, f: &PiecewiseSource, p: f64, t: f64) -> Result<Option<f64>> {
    let Some(k) = linear_growth_constant(f) else {
        return Ok(None);
    };
    let norm_p = match lp_norm_block(psi, p, 24)?.verdict {
        Verdict::Convergent { sum, error } => (sum + error).powf(1.0 / p),
        _ => return Ok(None),
    };
    let g = (k * t).exp();
    Ok(Some(g * norm_p + (g - 1.0) * psi.length.powf(1.0 / p)))
}

/// Lower envelope of the flow from `φ_n` under the collar/plateau source:
/// the speed is at least `(φ_n² − φ_n)/2` until the next collar, so
/// `v ≥ φ_n + τ (φ_n² − φ_n)/2` with `τ = min(t, 1/2)`.
fn example_d_envelope_rule(t: f64) -> PhiPoly {
    let a = 0.5 * t.min(0.5);
    let b = 1.0 - a;
    let terms = [(a * a, 4.0), (2.0 * a * b, 3.0), (b * b, 2.0)];
    PhiPoly::new(
        terms
            .iter()
            .flat_map(|&(c, e)| [(Log2Real::from_f64(c), e - 4.0), (Log2Real::from_f64(-c), e - 8.0)]),
    )
}

/// Whether `‖v(t)‖_2` is infinite for the toy PDE. For the collar/plateau
/// pair the verdict comes from the envelope series; otherwise from the
/// evolved listed blocks plus a Grönwall bound on the unlisted ones.
pub fn instantaneous_blowup_certificate(
    f: &PiecewiseSource,
    psi: &BlockFunction,
    t: f64,
    n_probe: usize,
) -> Result<SeriesVerdict> {
    if !(t >= 0.0) {
        return Err(Error::NegativeTime(t));
    }
    if t == 0.0 {
        return lp_norm_block(psi, 2.0, n_probe);
    }
    let evolved = evolve_block(psi, f, t)?;
    if let Some(mark) = evolved.marks.first() {
        // infinite values on a set of positive measure
        return Ok(SeriesVerdict {
            verdict: Verdict::Divergent {
                n0: mark.block.unwrap_or(0) as u32,
                c: f64::INFINITY,
            },
            p: 2.0,
            terms_computed: evolved.blocks.len(),
            partial_sums: vec![f64::INFINITY],
            rule: None,
        });
    }
    let listed = evolved.lp_norm(2.0);
    let Some(g) = psi.generator else {
        return Ok(SeriesVerdict {
            verdict: Verdict::Convergent { sum: listed, error: 0.0 },
            p: 2.0,
            terms_computed: evolved.blocks.len(),
            partial_sums: vec![listed],
            rule: None,
        });
    };
    if f.is_example_d() && g.cap.is_none() {
        let rule = example_d_envelope_rule(t);
        let mut sum = Log2Real::ZERO;
        let partial_sums = (0..n_probe.max(1) as u32)
            .map(|n| {
                sum = sum + rule.eval(n);
                sum.to_f64()
            })
            .collect();
        let verdict = match rule.divergence_certificate() {
            Some((n0, c)) => Verdict::Divergent { n0, c },
            None => Verdict::Inconclusive,
        };
        return Ok(SeriesVerdict {
            verdict,
            p: 2.0,
            terms_computed: n_probe.max(1),
            partial_sums,
            rule: Some(rule),
        });
    }
    // unlisted blocks: bounded by the flow of the cap, or by Grönwall
    let tail = evolved.unlisted_measure;
    let tail_bound = match g.cap {
        Some(m) => flow(f, m, t)?.value().map(|v| v * v * tail),
        None => match linear_growth_constant(f) {
            Some(k) => {
                let psi_tail = example_d_rule(2.0, Log2Real::ONE, 1.0)
                    .tail_bound(g.n_max + 1)
                    .expect("ψ is square integrable");
                let e = (k * t).exp();
                Some((e * psi_tail.sqrt() + (e - 1.0) * tail.sqrt()).powi(2))
            }
            None => None,
        },
    };
    let verdict = match tail_bound {
        Some(error) => Verdict::Convergent { sum: listed, error },
        None => Verdict::Inconclusive,
    };
    Ok(SeriesVerdict {
        verdict,
        p: 2.0,
        terms_computed: evolved.blocks.len(),
        partial_sums: vec![listed],
        rule: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnsetMeasure {
    pub t: f64,
    /// `M_t` with `T(M_t) = t`, when it exists.
    pub level: Option<f64>,
    /// Measure of `{x : T(ψ(x)) ≤ t}`.
    pub measure: f64,
    pub no_pointwise_blowup: bool,
}

/// Slack on `T(ψ(x)) ≤ t`, so that points blowing up exactly at `t` count.
const ONSET_TOL: f64 = 1e-9;

/// Measure of the set where the toy-PDE solution has blown up by time `t`.
pub fn blowup_onset_measure(f: &PiecewiseSource, psi: &BlockFunction, t: f64) -> Result<OnsetMeasure> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!("onset time {t} must be positive")));
    }
    let level = match invert_blowup_time(f, t, ONSET_TOL * 0.1) {
        Ok(m) => Some(m),
        Err(Error::NoFiniteBlowup { .. }) => {
            return Ok(OnsetMeasure {
                t,
                level: None,
                measure: 0.0,
                no_pointwise_blowup: true,
            })
        }
        Err(_) => None,
    };
    let blows_up = |v: f64| -> Result<bool> {
        if !(v > 0.0) || f.locate(v).is_err() {
            return Ok(false);
        }
        Ok(match blowup_time(f, v, ONSET_TOL * 0.1)?.verdict {
            BlowupVerdict::Finite { time, .. } => time <= t + ONSET_TOL,
            _ => false,
        })
    };
    let mut measure = 0.0;
    if blows_up(psi.background)? {
        measure += psi.length - psi.support_measure();
    }
    match psi.generator {
        None => {
            for b in &psi.blocks {
                if blows_up(b.value)? {
                    measure += b.width();
                }
            }
        }
        Some(g) => {
            // values increase with n, blow-up times decrease
            let mut k = None;
            for n in 0..=MAX_INDEX {
                let v = g.value_log2(n).to_f64();
                if !v.is_finite() {
                    break;
                }
                if blows_up(v)? {
                    k = Some(n);
                    break;
                }
                if g.cap.is_some_and(|m| v >= m) {
                    break;
                }
            }
            match k {
                Some(k) => measure += Generator::measure_from(k).to_f64(),
                None if g.cap.is_none() => {
                    return Err(Error::InvalidParameter(format!(
                        "onset time {t} is below the resolution of the generated blocks"
                    )))
                }
                None => {}
            }
        }
    }
    Ok(OnsetMeasure {
        t,
        level,
        measure,
        no_pointwise_blowup: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PowerlawNorm {
    Finite { value: f64 },
    BlowUp { time: f64 },
}

/// `∫_0^1 x^(−r p e^t) dx = 1 / (1 − r p e^t)` for `ψ = x^(−r)` under
/// `f(s) = s ln s`, which blows up at `t = ln(1/(r p))`.
pub fn powerlaw_norm_example_c(r: f64, p: f64, t: f64) -> Result<PowerlawNorm> {
    if !(p >= 1.0) || !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("need r > 0 and p >= 1, got r = {r}, p = {p}")));
    }
    if r * p >= 1.0 {
        return Err(Error::NotInLp { r, p });
    }
    if !(t >= 0.0) {
        return Err(Error::NegativeTime(t));
    }
    let t_star = -(r * p).ln();
    if t >= t_star - 1e-12 * t_star.max(1.0) {
        return Ok(PowerlawNorm::BlowUp { time: t_star });
    }
    Ok(PowerlawNorm::Finite {
        value: 1.0 / -(t - t_star).exp_m1(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::{build_example_c, build_example_d, registered};

    #[test]
    fn example_d_blocks_tile() {
        let psi = BlockFunction::example_d(7).unwrap();
        let b = psi.blocks();
        assert_eq!(b[0].hi, 1.0 / 16.0);
        for w in b.windows(2) {
            assert_eq!(w[1].hi, w[0].lo);
        }
        assert_eq!(b[7].lo, 2f64.powi(-1024));
        assert!(BlockFunction::example_d(8).is_err());
        assert_eq!(psi.value_at(0.05).unwrap(), 2.0);
        assert_eq!(psi.value_at(0.001).unwrap(), 4.0);
        assert_eq!(psi.value_at(0.5).unwrap(), 0.0);
        let short = BlockFunction::example_d(1).unwrap();
        assert_eq!(short.value_at(1e-6).unwrap(), 16.0);
    }

    #[test]
    fn l2_partial_sum() {
        let psi = BlockFunction::example_d(3).unwrap();
        let v = lp_norm_block(&psi, 2.0, 4).unwrap();
        // (1/4 − 1/64) + (1/16 − 1/4096) + (1/256 − 16^-6) + (256^-2 − 256^-6)
        let oracle = (0.25 - 1.0 / 64.0)
            + (1.0 / 16.0 - 1.0 / 4096.0)
            + (1.0 / 256.0 - 16f64.powi(-6))
            + (256f64.powi(-2) - 256f64.powi(-6));
        match v.verdict {
            Verdict::Convergent { sum, error } => {
                assert!((sum - oracle).abs() < 1e-15);
                assert!(error > 0.0 && error < 1e-9);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(v.terms_computed, 4);
    }

    #[test]
    fn l4_diverges() {
        let psi = BlockFunction::example_d(3).unwrap();
        let v = lp_norm_block(&psi, 4.0, 10).unwrap();
        assert_eq!(v.certificate(), Some((0, 0.5)));
        let rule = v.rule.unwrap();
        for n in 0..30 {
            let expect = Log2Real::ONE - Phi::new(n).pow(-4.0);
            assert!((rule.eval(n).to_f64() - expect.to_f64()).abs() < 1e-15);
        }
    }

    #[test]
    fn finite_blocks() {
        let psi = BlockFunction::constant(1.0, 3.0).unwrap();
        let v = lp_norm_block(&psi, 2.0, 1).unwrap();
        assert_eq!(v.verdict, Verdict::Convergent { sum: 9.0, error: 0.0 });
        assert!(lp_norm_block(&psi, 0.5, 1).is_err());
    }

    #[test]
    fn evolve_identity_and_riccati() {
        let psi = BlockFunction::example_d(4).unwrap();
        let f = build_example_d(8).unwrap();
        let same = evolve_block(&psi, &f, 0.0).unwrap();
        assert_eq!(same.blocks, psi.blocks());
        let sq = registered("s_squared").unwrap();
        let two = BlockFunction::constant(1.0, 2.0).unwrap();
        let v = evolve_block(&two, &sq, 0.25).unwrap();
        assert!((v.blocks[0].value - 4.0).abs() < 1e-8);
        let v = evolve_block(&two, &sq, 0.6).unwrap();
        assert_eq!(v.blown_up_measure, 1.0);
        assert!((v.marks[0].time - 0.5).abs() < 1e-9);
    }

    #[test]
    fn example_d_certificates() {
        let f = build_example_d(8).unwrap();
        let psi = BlockFunction::example_d(5).unwrap();
        for t in [0.01, 0.1, 0.5] {
            let v = instantaneous_blowup_certificate(&f, &psi, t, 21).unwrap();
            let (n0, c) = v.certificate().unwrap();
            assert!((c - t * t / 8.0).abs() < 1e-15, "t = {t}");
            let rule = v.rule.unwrap();
            for n in n0..=n0 + 20 {
                assert!(rule.eval(n).to_f64() >= c);
            }
        }
        let v = instantaneous_blowup_certificate(&f, &psi, 0.0, 8).unwrap();
        assert!(v.is_convergent());
    }

    #[test]
    fn lipschitz_source_stays_in_l2() {
        let id = registered("identity").unwrap();
        let psi = BlockFunction::example_d(5).unwrap();
        let v = instantaneous_blowup_certificate(&id, &psi, 1.0, 8).unwrap();
        let Verdict::Convergent { sum, error } = v.verdict else {
            panic!("{v:?}")
        };
        let bound = gronwall_norm_bound(&psi, &id, 2.0, 1.0).unwrap().unwrap();
        assert!((sum + error).sqrt() <= bound);
    }

    #[test]
    fn onset_measures() {
        let sq = registered("s_squared").unwrap();
        let psi = BlockFunction::example_d(7).unwrap();
        let m = blowup_onset_measure(&sq, &psi, 1.0 / 16.0).unwrap();
        assert!((m.level.unwrap() - 16.0).abs() < 1e-6);
        assert_eq!(m.measure, 2f64.powi(-16));
        let m = blowup_onset_measure(&sq, &psi, 0.5).unwrap();
        assert_eq!(m.measure, 1.0 / 16.0);
        let one = BlockFunction::constant(1.0, 1.0).unwrap();
        assert_eq!(blowup_onset_measure(&sq, &one, 0.5).unwrap().measure, 0.0);
        let m = blowup_onset_measure(&build_example_d(8).unwrap(), &psi, 0.1).unwrap();
        assert!(m.no_pointwise_blowup && m.measure == 0.0);
        let m = blowup_onset_measure(&build_example_c(), &psi, 0.1).unwrap();
        assert!(m.no_pointwise_blowup);
    }

    #[test]
    fn powerlaw() {
        assert_eq!(powerlaw_norm_example_c(0.25, 2.0, 0.0).unwrap(), PowerlawNorm::Finite { value: 2.0 });
        let v = powerlaw_norm_example_c(0.25, 2.0, 1.5f64.ln()).unwrap();
        let PowerlawNorm::Finite { value } = v else { panic!() };
        assert!((value - 4.0).abs() < 1e-12);
        assert!(matches!(
            powerlaw_norm_example_c(0.25, 2.0, 2f64.ln()).unwrap(),
            PowerlawNorm::BlowUp { time } if (time - 2f64.ln()).abs() < 1e-15
        ));
        assert_eq!(powerlaw_norm_example_c(0.5, 2.0, 0.0), Err(Error::NotInLp { r: 0.5, p: 2.0 }));
    }

    #[test]
    fn caps_and_level_sets() {
        let psi = BlockFunction::example_d(3).unwrap();
        let capped = psi.capped(5.0).unwrap();
        let vals: Vec<f64> = capped.blocks().iter().map(|b| b.value).collect();
        assert_eq!(vals, vec![2.0, 4.0, 5.0, 5.0]);
        assert!(psi.capped(f64::INFINITY).is_err());
        assert_eq!(psi.level_set_measure(16.0), 2f64.powi(-16));
        assert_eq!(capped.level_set_measure(5.0), 2f64.powi(-16));
        assert_eq!(capped.level_set_measure(6.0), 0.0);
        let v = lp_norm_block(&capped, 4.0, 4).unwrap();
        assert!(v.is_convergent());
    }

    #[test]
    fn json_round_trip() {
        let psi = BlockFunction::example_d(4).unwrap().capped(20.0).unwrap();
        let text = serde_json::to_string(&psi).unwrap();
        assert!(text.contains("\"L\""));
        let back: BlockFunction = serde_json::from_str(&text).unwrap();
        assert_eq!(back, psi);
        let v = lp_norm_block(&BlockFunction::example_d(2).unwrap(), 4.0, 3).unwrap();
        let back: SeriesVerdict = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
        assert_eq!(back, v);
    }
}
