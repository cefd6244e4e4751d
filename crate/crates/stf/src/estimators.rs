//! Single-frame filtered-value estimators over shared lane samples.
//!
//! All estimators take the shared samples in footprint order, so the
//! current lane's own sample is always `shared[0]`.

use crate::texture::{filter_support, get_filter_pmf, Channels, FilterKind, FilterSupport, Texture};
use crate::wave::LaneSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorVariant {
    OneTap,
    Is,
    Mis,
    PairwiseMis,
    Regression,
    Wis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EstimatorKind {
    pub variant: EstimatorVariant,
    pub clamp: bool,
    /// Only meaningful with the bilinear filter; ignored for bicubic.
    pub exact_filtering: bool,
}

impl EstimatorKind {
    pub fn new(variant: EstimatorVariant) -> Self {
        EstimatorKind {
            variant,
            clamp: false,
            exact_filtering: false,
        }
    }

    pub fn clamped(mut self) -> Self {
        self.clamp = true;
        self
    }

    pub fn with_exact_filtering(mut self) -> Self {
        self.exact_filtering = true;
        self
    }
}

/// The current lane's filter, lookup point, and sampling support.
#[derive(Debug, Clone)]
pub struct EstimatorContext {
    pub filter: FilterKind,
    pub lookup_point: (f64, f64),
    pub support: FilterSupport,
    pub texture_id: u32,
}

impl EstimatorContext {
    pub fn new(filter: FilterKind, lookup_point: (f64, f64), texture_id: u32) -> Self {
        EstimatorContext {
            filter,
            lookup_point,
            support: filter_support(filter, lookup_point),
            texture_id,
        }
    }

    /// Current lane's filter weight (= PMF) for a shared sample's texel.
    /// Zero on texture mismatch.
    pub fn f_c(&self, sample: &LaneSample) -> f64 {
        if sample.texture_id != self.texture_id {
            return 0.0;
        }
        get_filter_pmf(self.filter, self.lookup_point, sample.texel_coords)
    }
}

/// CDF inversion over the support entries in list order. Zero-weight
/// entries are never selected.
pub fn sample_texel(support: &FilterSupport, u: f64, tex: &Texture, texture_id: u32) -> LaneSample {
    debug_assert!((0.0..1.0).contains(&u));
    let mut cdf = 0.0;
    let mut chosen = None;
    for e in &support.entries {
        if e.weight <= 0.0 {
            continue;
        }
        cdf += e.weight;
        if u < cdf {
            chosen = Some(e);
            break;
        }
    }
    // u may exceed the accumulated weight by rounding; fall back to the
    // last nonzero entry.
    let entry = chosen.unwrap_or_else(|| {
        support
            .entries
            .iter()
            .rev()
            .find(|e| e.weight > 0.0)
            .expect("support has a nonzero weight")
    });
    LaneSample {
        texel_coords: entry.coords,
        value: tex.fetch_texel(entry.coords),
        pmf: entry.weight,
        texture_id,
    }
}

/// One-tap STF: the single unweighted texel value.
pub fn estimate_one_tap(sample: &LaneSample) -> Channels {
    sample.value
}

/// Standard importance sampling: (1/n) sum f_c(x_i) T_i / p_i. May leave
/// the texel hull arbitrarily far when PMFs mismatch.
pub fn estimate_is(shared: &[LaneSample], ctx: &EstimatorContext) -> Channels {
    let n = shared.len() as f64;
    let mut out = [0.0; 4];
    for s in shared {
        let w = ctx.f_c(s) / s.pmf;
        for c in 0..4 {
            out[c] += w * s.value[c];
        }
    }
    for c in 0..4 {
        out[c] /= n;
    }
    out
}

fn pmf_of_lane(ctx: &EstimatorContext, lane_lookup: (f64, f64), sample: &LaneSample) -> f64 {
    if sample.texture_id != ctx.texture_id {
        return 0.0;
    }
    get_filter_pmf(ctx.filter, lane_lookup, sample.texel_coords)
}

/// Balance-heuristic MIS over the n one-sample techniques:
/// sum_i f_c(x_i) T_i / sum_j p_j(x_i). `lane_lookups[i]` is sharing lane
/// i's lookup point, aligned with `shared`.
pub fn estimate_mis(
    shared: &[LaneSample],
    ctx: &EstimatorContext,
    lane_lookups: &[(f64, f64)],
) -> Channels {
    assert_eq!(shared.len(), lane_lookups.len());
    let mut out = [0.0; 4];
    for s in shared {
        let fc = ctx.f_c(s);
        if fc == 0.0 {
            continue;
        }
        let denom: f64 = lane_lookups
            .iter()
            .map(|&lp| pmf_of_lane(ctx, lp, s))
            .sum();
        if denom <= 0.0 {
            continue;
        }
        for c in 0..4 {
            out[c] += fc * s.value[c] / denom;
        }
    }
    out
}

/// Pairwise MIS with the current lane's technique as canonical
/// (shared[0]). Costs 2n PMF evaluations instead of the balance
/// heuristic's n^2. Weights are normalized so that identical PMFs
/// reproduce the balance heuristic exactly.
pub fn estimate_pmis(
    shared: &[LaneSample],
    ctx: &EstimatorContext,
    lane_lookups: &[(f64, f64)],
) -> Channels {
    assert_eq!(shared.len(), lane_lookups.len());
    let n = shared.len();
    if n == 1 {
        // Single technique: f_c(x)/p = one-tap when p = f_c.
        let s = &shared[0];
        let w = ctx.f_c(s) / s.pmf;
        let mut out = [0.0; 4];
        for c in 0..4 {
            out[c] = w * s.value[c];
        }
        return out;
    }
    let m = (n - 1) as f64;
    let canonical = &shared[0];
    let mut out = [0.0; 4];

    // Canonical sample: m_c(x_c) = (1/(n-1)) sum_i p_c(x_c) / (p_c(x_c) + (n-1) p_i(x_c)).
    let p_c_at_canon = ctx.f_c(canonical);
    if p_c_at_canon > 0.0 {
        let mut m_c = 0.0;
        for lp in &lane_lookups[1..] {
            let p_i = pmf_of_lane(ctx, *lp, canonical);
            m_c += p_c_at_canon / (p_c_at_canon + m * p_i);
        }
        m_c /= m;
        let w = m_c * p_c_at_canon / canonical.pmf;
        for c in 0..4 {
            out[c] += w * canonical.value[c];
        }
    }

    // Non-canonical sample i: m_i(x_i) = p_i(x_i) / (p_c(x_i) + (n-1) p_i(x_i)).
    for s in &shared[1..] {
        let fc = ctx.f_c(s);
        if fc == 0.0 {
            continue;
        }
        let m_i = s.pmf / (fc + m * s.pmf);
        let w = m_i * fc / s.pmf;
        for c in 0..4 {
            out[c] += w * s.value[c];
        }
    }
    out
}

/// Control-variate regression estimator. With w_i the current lane's
/// filter weight at each shared texel and w-bar their mean:
///   beta = sum (w_i - wbar) w_i T_i / sum (w_i - wbar)^2
///   est  = (1/n) sum [ w_i T_i / p_i - beta (w_i / p_i - 1) ]
/// A degenerate denominator (< 1e-12) forces beta = 0, the plain IS path.
pub fn estimate_regression(shared: &[LaneSample], ctx: &EstimatorContext) -> Channels {
    let n = shared.len() as f64;
    let weights: Vec<f64> = shared.iter().map(|s| ctx.f_c(s)).collect();
    let wbar = weights.iter().sum::<f64>() / n;
    let denom: f64 = weights.iter().map(|w| (w - wbar) * (w - wbar)).sum();
    let mut beta = [0.0; 4];
    if denom >= 1e-12 {
        for (s, &w) in shared.iter().zip(&weights) {
            for c in 0..4 {
                beta[c] += (w - wbar) * w * s.value[c];
            }
        }
        for b in &mut beta {
            *b /= denom;
        }
    }
    let mut out = [0.0; 4];
    for (s, &w) in shared.iter().zip(&weights) {
        let ratio = w / s.pmf;
        for c in 0..4 {
            out[c] += ratio * s.value[c] - beta[c] * (ratio - 1.0);
        }
    }
    for c in 0..4 {
        out[c] /= n;
    }
    out
}

/// Weighted (self-normalized) importance sampling: w_i = f_c(x_i)/p_i,
/// return sum w_i T_i / sum w_i. The own sample's weight is exactly 1, so
/// the result is always defined and is a convex combination of the shared
/// texels. With no foreign contribution this bit-equals one-tap STF.
pub fn estimate_wis(shared: &[LaneSample], ctx: &EstimatorContext) -> Channels {
    let mut num = [0.0; 4];
    let mut den = 0.0;
    for s in shared {
        let w = ctx.f_c(s) / s.pmf;
        if w == 0.0 {
            continue;
        }
        den += w;
        for c in 0..4 {
            num[c] += w * s.value[c];
        }
    }
    for c in 0..4 {
        num[c] /= den;
    }
    num
}

/// Componentwise min/max over shared texel values with f_c > 0; falls back
/// to the own sample when none qualify.
pub fn shared_value_hull(shared: &[LaneSample], ctx: &EstimatorContext) -> (Channels, Channels) {
    let mut lo = [f64::INFINITY; 4];
    let mut hi = [f64::NEG_INFINITY; 4];
    let mut any = false;
    for s in shared {
        if ctx.f_c(s) > 0.0 {
            any = true;
            for c in 0..4 {
                lo[c] = lo[c].min(s.value[c]);
                hi[c] = hi[c].max(s.value[c]);
            }
        }
    }
    if !any {
        return (shared[0].value, shared[0].value);
    }
    (lo, hi)
}

/// Clamp a filtered value to the hull of the shared texel values used.
pub fn apply_clamp(value: Channels, shared: &[LaneSample], ctx: &EstimatorContext) -> Channels {
    let (lo, hi) = shared_value_hull(shared, ctx);
    let mut out = value;
    for c in 0..4 {
        out[c] = out[c].clamp(lo[c], hi[c]);
    }
    out
}

/// If every nonzero-weight texel of the current lane's bilinear support is
/// present among the shared samples, return the exact filtered value.
pub fn try_exact_filter(shared: &[LaneSample], ctx: &EstimatorContext) -> Option<Channels> {
    if ctx.filter != FilterKind::Bilinear {
        return None;
    }
    let mut out = [0.0; 4];
    for e in &ctx.support.entries {
        if e.weight <= 0.0 {
            continue;
        }
        let found = shared
            .iter()
            .find(|s| s.texture_id == ctx.texture_id && s.texel_coords == e.coords)?;
        for c in 0..4 {
            out[c] += e.weight * found.value[c];
        }
    }
    Some(out)
}

/// Full estimator dispatch used by the renderer: exact filtering first
/// when enabled, then the selected variant, then optional clamping.
pub fn estimate(
    kind: &EstimatorKind,
    shared: &[LaneSample],
    ctx: &EstimatorContext,
    lane_lookups: &[(f64, f64)],
) -> Channels {
    if kind.exact_filtering && ctx.filter == FilterKind::Bilinear {
        if let Some(v) = try_exact_filter(shared, ctx) {
            return v;
        }
    }
    let v = match kind.variant {
        EstimatorVariant::OneTap => estimate_one_tap(&shared[0]),
        EstimatorVariant::Is => estimate_is(shared, ctx),
        EstimatorVariant::Mis => estimate_mis(shared, ctx, lane_lookups),
        EstimatorVariant::PairwiseMis => estimate_pmis(shared, ctx, lane_lookups),
        EstimatorVariant::Regression => estimate_regression(shared, ctx),
        EstimatorVariant::Wis => estimate_wis(shared, ctx),
    };
    if kind.clamp {
        apply_clamp(v, shared, ctx)
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::texture::{reference_filter, AddressMode};

    fn scalar(v: f64) -> Channels {
        [v, 0.0, 0.0, 0.0]
    }

    fn sample_at(coords: (i64, i64), value: f64, pmf: f64) -> LaneSample {
        LaneSample {
            texel_coords: coords,
            value: scalar(value),
            pmf,
            texture_id: 0,
        }
    }

    fn checker() -> Texture {
        Texture::new(
            4,
            4,
            1,
            vec![
                0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0,
            ],
            AddressMode::Clamp,
        )
        .unwrap()
    }

    #[test]
    fn sample_texel_cdf_inversion() {
        let s = filter_support(FilterKind::Bilinear, (0.5, 0.5));
        let tex = checker();
        let picked = sample_texel(&s, 0.6, &tex, 0);
        assert_eq!(picked.texel_coords, s.entries[2].coords);
        assert_eq!(picked.pmf, 0.25);
        let first = sample_texel(&s, 0.0, &tex, 0);
        assert_eq!(first.texel_coords, s.entries[0].coords);
    }

    #[test]
    fn sample_texel_skips_zero_weights_and_matches_frequencies() {
        let s = filter_support(FilterKind::Bilinear, (1.0, 2.0)); // one weight 1, rest 0
        let tex = checker();
        for k in 0..100 {
            let u = k as f64 / 100.0;
            let picked = sample_texel(&s, u, &tex, 0);
            assert_eq!(picked.texel_coords, (1, 2));
            assert_eq!(picked.pmf, 1.0);
        }
        // frequency test: u on a 10^4 grid reproduces the weights within 1%
        let s = filter_support(FilterKind::Bilinear, (1.3, 2.6));
        let mut counts = vec![0usize; s.entries.len()];
        let n = 10_000;
        for k in 0..n {
            let u = k as f64 / n as f64;
            let picked = sample_texel(&s, u, &tex, 0);
            let idx = s
                .entries
                .iter()
                .position(|e| e.coords == picked.texel_coords)
                .unwrap();
            counts[idx] += 1;
            assert!(picked.pmf > 0.0);
        }
        for (e, &count) in s.entries.iter().zip(&counts) {
            let freq = count as f64 / n as f64;
            assert!((freq - e.weight).abs() < 0.01, "{} vs {}", freq, e.weight);
        }
    }

    #[test]
    fn one_tap_expectation_equals_reference() {
        // Enumerate the support: sum pmf * value = reference filter output.
        let tex = checker();
        for kind in [FilterKind::Bilinear, FilterKind::BicubicBSpline] {
            let p = (1.37, 1.81);
            let s = filter_support(kind, p);
            let mut expect = 0.0;
            for e in &s.entries {
                expect += e.weight * tex.fetch_texel(e.coords)[0];
            }
            let reference = reference_filter(&tex, kind, p)[0];
            assert!((expect - reference).abs() < 1e-12);
        }
        let s = sample_at((0, 0), 3.0, 0.5);
        assert_eq!(estimate_one_tap(&s)[0], 3.0);
    }

    #[test]
    fn is_identical_lanes_returns_texel() {
        // All lanes share the lookup and sampled the same texel: each term
        // f_c/p_i = 1.
        let ctx = EstimatorContext::new(FilterKind::Bilinear, (2.25, 3.75), 0);
        let own = ctx.support.entries.iter().find(|e| e.weight > 0.3).unwrap();
        let shared = vec![sample_at(own.coords, 0.8, own.weight); 4];
        let v = estimate_is(&shared, &ctx);
        assert!((v[0] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn is_variance_spike_weight() {
        // f_c = 0.49, p_i = 0.025: that term alone carries weight ~19.6.
        let ctx = EstimatorContext::new(FilterKind::Bilinear, (0.3, 0.3), 0);
        // texel (0,0): f_c = 0.7*0.7 = 0.49
        let shared = vec![sample_at((0, 0), 1.0, 0.025)];
        let v = estimate_is(&shared, &ctx);
        assert!((v[0] - 19.6).abs() < 1e-9);
    }

    #[test]
    fn is_constant_texture_not_constant_output() {
        // Documented violation: constant texture, mismatched PMFs. Eq-9
        // style hand computation: n=2, f_c values 0.49 and 0.21, values 5.
        let ctx = EstimatorContext::new(FilterKind::Bilinear, (0.3, 0.3), 0);
        let shared = vec![sample_at((0, 0), 5.0, 0.2), sample_at((1, 0), 5.0, 0.9)];
        let fc0 = 0.7 * 0.7;
        let fc1 = 0.3 * 0.7;
        let oracle = 0.5 * (fc0 * 5.0 / 0.2 + fc1 * 5.0 / 0.9);
        let v = estimate_is(&shared, &ctx);
        assert!((v[0] - oracle).abs() < 1e-12);
        assert!((v[0] - 5.0).abs() > 1e-3);
    }

    #[test]
    fn mis_reduces_to_is_with_identical_pmfs() {
        let lookup = (2.25, 3.75);
        let ctx = EstimatorContext::new(FilterKind::Bilinear, lookup, 0);
        let entries: Vec<_> = ctx.support.entries.iter().filter(|e| e.weight > 0.0).collect();
        let shared: Vec<LaneSample> = entries
            .iter()
            .map(|e| sample_at(e.coords, e.coords.0 as f64 + 0.1, e.weight))
            .collect();
        let lookups = vec![lookup; shared.len()];
        let is = estimate_is(&shared, &ctx);
        let mis = estimate_mis(&shared, &ctx, &lookups);
        assert!((is[0] - mis[0]).abs() < 1e-12);
    }

    #[test]
    fn mis_two_lane_oracle_and_unbiasedness() {
        // Two lanes, 1D-like tent overlap. Enumerate all (x1, x2) outcomes
        // and check the balance-heuristic oracle per outcome plus
        // unbiasedness of the combined estimator.
        let tex = checker();
        let la = (1.3, 2.0);
        let lb = (1.7, 2.0);
        let ctx = EstimatorContext::new(FilterKind::Bilinear, la, 0);
        let sa = filter_support(FilterKind::Bilinear, la);
        let sb = filter_support(FilterKind::Bilinear, lb);
        let reference = reference_filter(&tex, FilterKind::Bilinear, la)[0];
        let mut expectation = 0.0;
        for ea in sa.entries.iter().filter(|e| e.weight > 0.0) {
            for eb in sb.entries.iter().filter(|e| e.weight > 0.0) {
                let shared = vec![
                    sample_at(ea.coords, tex.fetch_texel(ea.coords)[0], ea.weight),
                    sample_at(eb.coords, tex.fetch_texel(eb.coords)[0], eb.weight),
                ];
                let lookups = vec![la, lb];
                let v = estimate_mis(&shared, &ctx, &lookups)[0];
                // independent balance-heuristic oracle
                let mut oracle = 0.0;
                for s in &shared {
                    let fc = get_filter_pmf(FilterKind::Bilinear, la, s.texel_coords);
                    let p_sum = get_filter_pmf(FilterKind::Bilinear, la, s.texel_coords)
                        + get_filter_pmf(FilterKind::Bilinear, lb, s.texel_coords);
                    if p_sum > 0.0 {
                        let balance = s.pmf / p_sum;
                        oracle += balance * fc * s.value[0] / s.pmf;
                    }
                }
                assert!((v - oracle).abs() < 1e-12);
                expectation += ea.weight * eb.weight * v;
            }
        }
        // Lane B's support covers lane A's here, so MIS is unbiased.
        assert!(
            (expectation - reference).abs() < 1e-9,
            "{expectation} vs {reference}"
        );
    }

    #[test]
    fn pmis_single_lane_is_one_tap() {
        let ctx = EstimatorContext::new(FilterKind::Bilinear, (2.25, 3.75), 0);
        let own = ctx.support.entries.iter().find(|e| e.weight > 0.3).unwrap();
        let shared = vec![sample_at(own.coords, 0.42, own.weight)];
        let v = estimate_pmis(&shared, &ctx, &[(2.25, 3.75)]);
        assert!((v[0] - 0.42).abs() < 1e-12);
    }

    #[test]
    fn pmis_matches_mis_with_identical_pmfs() {
        // Algebraic check on a 3-lane case with one shared lookup point.
        let lookup = (5.4, 7.6);
        let ctx = EstimatorContext::new(FilterKind::Bilinear, lookup, 0);
        let entries: Vec<_> = ctx.support.entries.iter().filter(|e| e.weight > 0.0).collect();
        let shared: Vec<LaneSample> = entries
            .iter()
            .take(3)
            .map(|e| sample_at(e.coords, 1.0 + e.coords.0 as f64, e.weight))
            .collect();
        let lookups = vec![lookup; shared.len()];
        let mis = estimate_mis(&shared, &ctx, &lookups);
        let pmis = estimate_pmis(&shared, &ctx, &lookups);
        assert!((mis[0] - pmis[0]).abs() < 1e-9);
    }

    #[test]
    fn pmis_zero_overlap_keeps_canonical_only() {
        let ctx = EstimatorContext::new(FilterKind::Bilinear, (2.25, 3.75), 0);
        let own = ctx.support.entries.iter().find(|e| e.weight > 0.3).unwrap();
        let shared = vec![
            sample_at(own.coords, 0.9, own.weight),
            sample_at((40, 40), 123.0, 0.5), // far outside the filter
        ];
        let lookups = vec![(2.25, 3.75), (40.2, 40.2)];
        let v = estimate_pmis(&shared, &ctx, &lookups);
        assert!((v[0] - 0.9).abs() < 1e-12);
    }

    #[test]
    fn regression_equal_weights_falls_back_to_is() {
        let ctx = EstimatorContext::new(FilterKind::Bilinear, (0.5, 0.5), 0);
        let shared: Vec<LaneSample> = ctx
            .support
            .entries
            .iter()
            .map(|e| sample_at(e.coords, e.coords.0 as f64 + 2.0 * e.coords.1 as f64, e.weight))
            .collect();
        let is = estimate_is(&shared, &ctx);
        let reg = estimate_regression(&shared, &ctx);
        assert!((is[0] - reg[0]).abs() < 1e-12);
    }

    #[test]
    fn regression_constant_texture_is_exact() {
        // Varying weights, constant value: the control variate cancels.
        let ctx = EstimatorContext::new(FilterKind::Bilinear, (0.3, 0.7), 0);
        let shared: Vec<LaneSample> = ctx
            .support
            .entries
            .iter()
            .filter(|e| e.weight > 0.0)
            .map(|e| sample_at(e.coords, 7.0, e.weight * 0.9 + 0.01))
            .collect();
        let v = estimate_regression(&shared, &ctx);
        assert!((v[0] - 7.0).abs() < 1e-9, "{}", v[0]);
    }

    #[test]
    fn regression_three_lane_numeric_oracle() {
        // Direct scalar evaluation of the beta / control-variate formulas,
        // written out independently of the implementation.
        let ctx = EstimatorContext::new(FilterKind::Bilinear, (0.3, 0.3), 0);
        let shared = vec![
            sample_at((0, 0), 0.2, 0.49),
            sample_at((1, 0), 0.9, 0.21),
            sample_at((0, 1), 0.4, 0.21),
        ];
        let w: Vec<f64> = shared
            .iter()
            .map(|s| get_filter_pmf(FilterKind::Bilinear, (0.3, 0.3), s.texel_coords))
            .collect();
        let wbar = (w[0] + w[1] + w[2]) / 3.0;
        let denom: f64 = w.iter().map(|wi| (wi - wbar).powi(2)).sum();
        let beta: f64 = w
            .iter()
            .zip(&shared)
            .map(|(wi, s)| (wi - wbar) * wi * s.value[0])
            .sum::<f64>()
            / denom;
        let oracle: f64 = w
            .iter()
            .zip(&shared)
            .map(|(wi, s)| wi * s.value[0] / s.pmf - beta * (wi / s.pmf - 1.0))
            .sum::<f64>()
            / 3.0;
        let v = estimate_regression(&shared, &ctx);
        assert!((v[0] - oracle).abs() < 1e-12);
    }

    #[test]
    fn wis_no_foreign_contribution_bit_equals_one_tap() {
        let ctx = EstimatorContext::new(FilterKind::Bilinear, (2.25, 3.75), 0);
        let own_entry = ctx.support.entries.iter().find(|e| e.weight > 0.3).unwrap();
        let own = sample_at(own_entry.coords, 0.123456789, own_entry.weight);
        let foreign = sample_at((30, 30), 42.0, 0.4);
        let v = estimate_wis(&[own, foreign], &ctx);
        assert_eq!(v[0].to_bits(), own.value[0].to_bits());
    }

    #[test]
    fn wis_two_lane_hand_case() {
        // 1D tent setup from a hand evaluation of the reduced convex form:
        // lane A lookup 0.3 sampled texel 0 (p = 0.7); lane B lookup 0.7
        // sampled texel 1 (p = 0.7). A's estimate =
        // (T0 + (0.3/0.7) T1) / (1 + 0.3/0.7). The y axis sits on an
        // integer so it contributes weight 1.
        let ctx = EstimatorContext::new(FilterKind::Bilinear, (0.3, 2.0), 0);
        let t0 = 0.25;
        let t1 = 0.75;
        let shared = vec![sample_at((0, 2), t0, 0.7), sample_at((1, 2), t1, 0.7)];
        let v = estimate_wis(&shared, &ctx);
        let w1 = 0.3 / 0.7;
        let oracle = (t0 + w1 * t1) / (1.0 + w1);
        assert!((v[0] - oracle).abs() < 1e-12);
    }

    #[test]
    fn wis_convexity_and_constant_exactness() {
        let ctx = EstimatorContext::new(FilterKind::BicubicBSpline, (2.4, 3.3), 0);
        let shared: Vec<LaneSample> = ctx
            .support
            .entries
            .iter()
            .filter(|e| e.weight > 0.0)
            .enumerate()
            .map(|(i, e)| sample_at(e.coords, (i as f64 * 0.37).fract(), e.weight))
            .collect();
        let v = estimate_wis(&shared, &ctx)[0];
        let (lo, hi) = shared_value_hull(&shared, &ctx);
        assert!(v >= lo[0] && v <= hi[0]);

        let constant: Vec<LaneSample> = shared
            .iter()
            .map(|s| LaneSample {
                value: scalar(7.0),
                ..*s
            })
            .collect();
        let v = estimate_wis(&constant, &ctx)[0];
        assert!((v - 7.0).abs() < 1e-12);
    }

    #[test]
    fn wis_consistency_trend() {
        // With all lanes at one lookup drawing i.i.d. samples, MSE shrinks
        // from n=4 to n=64.
        let tex = checker();
        let lookup = (1.4, 1.6);
        let ctx = EstimatorContext::new(FilterKind::Bilinear, lookup, 0);
        let reference = reference_filter(&tex, FilterKind::Bilinear, lookup)[0];
        let support = filter_support(FilterKind::Bilinear, lookup);
        let mut state = 99u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut mse = [0.0f64; 2];
        let trials = 10_000;
        for _ in 0..trials {
            for (slot, n) in [(0usize, 4usize), (1, 64)] {
                let shared: Vec<LaneSample> =
                    (0..n).map(|_| sample_texel(&support, next(), &tex, 0)).collect();
                let v = estimate_wis(&shared, &ctx)[0];
                mse[slot] += (v - reference) * (v - reference);
            }
        }
        assert!(mse[1] < mse[0], "mse64 {} !< mse4 {}", mse[1], mse[0]);
    }

    #[test]
    fn clamp_behavior_and_idempotence() {
        let ctx = EstimatorContext::new(FilterKind::Bilinear, (0.5, 0.5), 0);
        let shared = vec![sample_at((0, 0), 1.0, 0.25), sample_at((1, 0), 3.0, 0.25)];
        let clamped = apply_clamp(scalar(25.0), &shared, &ctx);
        assert_eq!(clamped[0], 3.0);
        let inside = apply_clamp(scalar(2.0), &shared, &ctx);
        assert_eq!(inside[0], 2.0);
        let twice = apply_clamp(clamped, &shared, &ctx);
        assert_eq!(twice, clamped);
        // only the own sample qualifies
        let lonely = vec![sample_at((50, 50), 0.6, 0.5)];
        let v = apply_clamp(scalar(9.0), &lonely, &ctx);
        assert_eq!(v[0], 0.6);
    }

    #[test]
    fn exact_filter_detection() {
        let tex = checker();
        let lookup = (1.3, 1.6);
        let ctx = EstimatorContext::new(FilterKind::Bilinear, lookup, 0);
        let all: Vec<LaneSample> = ctx
            .support
            .entries
            .iter()
            .map(|e| sample_at(e.coords, tex.fetch_texel(e.coords)[0], e.weight.max(1e-3)))
            .collect();
        let v = try_exact_filter(&all, &ctx).unwrap();
        let reference = reference_filter(&tex, FilterKind::Bilinear, lookup)[0];
        assert!((v[0] - reference).abs() < 1e-6);

        let v = try_exact_filter(&all[..3], &ctx);
        assert!(v.is_none());

        // integer lookup: only the weight-1 texel is required
        let ctx = EstimatorContext::new(FilterKind::Bilinear, (1.0, 2.0), 0);
        let shared = vec![sample_at((1, 2), tex.fetch_texel((1, 2))[0], 1.0)];
        let v = try_exact_filter(&shared, &ctx).unwrap();
        let reference = reference_filter(&tex, FilterKind::Bilinear, (1.0, 2.0))[0];
        assert!((v[0] - reference).abs() < 1e-6);

        // never for bicubic
        let ctx = EstimatorContext::new(FilterKind::BicubicBSpline, lookup, 0);
        assert!(try_exact_filter(&all, &ctx).is_none());
    }

    #[test]
    fn estimator_agreement_identical_pmfs() {
        let lookup = (3.3, 4.8);
        let ctx = EstimatorContext::new(FilterKind::Bilinear, lookup, 0);
        let shared: Vec<LaneSample> = ctx
            .support
            .entries
            .iter()
            .filter(|e| e.weight > 0.0)
            .map(|e| sample_at(e.coords, 0.3 + e.coords.0 as f64 * 0.2, e.weight))
            .collect();
        let lookups = vec![lookup; shared.len()];
        let is = estimate_is(&shared, &ctx)[0];
        let mis = estimate_mis(&shared, &ctx, &lookups)[0];
        let pmis = estimate_pmis(&shared, &ctx, &lookups)[0];
        assert!((is - mis).abs() < 1e-9);
        assert!((is - pmis).abs() < 1e-9);
    }
}
