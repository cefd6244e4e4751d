//! Property tests for the invariants the estimators and footprints rely on.

use proptest::prelude::*;

use stf::estimators::{
    apply_clamp, estimate_wis, sample_texel, EstimatorContext,
};
use stf::texture::{
    filter_support, get_filter_pmf, AddressMode, FilterKind, Texture,
};
use stf::wave::{build_square_footprint, LaneSample, WaveConfig};

fn filters() -> impl Strategy<Value = FilterKind> {
    prop_oneof![Just(FilterKind::Bilinear), Just(FilterKind::BicubicBSpline)]
}

fn lookup() -> impl Strategy<Value = (f64, f64)> {
    ((-4.0..36.0f64), (-4.0..36.0f64))
}

proptest! {
    /// The PMF over the support is a probability distribution: nonnegative
    /// and summing to 1 everywhere (partition of unity).
    #[test]
    fn support_pmf_is_normalized(filter in filters(), point in lookup()) {
        let support = filter_support(filter, point);
        let mut total = 0.0;
        for e in &support.entries {
            let pmf = get_filter_pmf(filter, point, e.coords);
            prop_assert!(pmf >= 0.0);
            prop_assert!((pmf - e.weight).abs() == 0.0);
            total += pmf;
        }
        prop_assert!((total - 1.0).abs() < 1e-9);
    }

    /// Sampling always lands on a support texel, reports its true PMF, and
    /// that PMF is strictly positive.
    #[test]
    fn sample_texel_reports_true_pmf(
        filter in filters(),
        point in lookup(),
        u in 0.0..1.0f64,
        tex_seed in 0u64..1000,
    ) {
        let data: Vec<f32> = (0..12 * 12)
            .map(|i: i64| stf::noise::white_noise(tex_seed, (i % 12, i / 12), 0) as f32)
            .collect();
        let tex = Texture::new(12, 12, 1, data, AddressMode::Wrap).unwrap();
        let support = filter_support(filter, point);
        let s = sample_texel(&support, u, &tex, 0);
        prop_assert!(s.pmf > 0.0);
        prop_assert!((s.pmf - get_filter_pmf(filter, point, s.texel_coords)).abs() == 0.0);
        prop_assert!(support.entries.iter().any(|e| e.coords == s.texel_coords));
    }

    /// WIS is a convex combination: for any shared sample set with positive
    /// PMFs it stays inside the hull of the contributing texel values, and
    /// clamping is idempotent.
    #[test]
    fn wis_convexity_arbitrary_samples(
        point in lookup(),
        samples in prop::collection::vec(
            ((-6i64..42), (-6i64..42), 0.0..1.0f64, 1e-3..1.0f64),
            1..16,
        ),
    ) {
        let ctx = EstimatorContext::new(FilterKind::BicubicBSpline, point, 0);
        // shared[0] is the lane's own sample: a positive-weight support
        // texel drawn with its true pmf (the estimator's precondition)
        let own = ctx
            .support
            .entries
            .iter()
            .max_by(|a, b| a.weight.partial_cmp(&b.weight).unwrap())
            .unwrap();
        let mut shared = vec![LaneSample {
            texel_coords: own.coords,
            value: [0.5, 0.5, 0.0, 0.0],
            pmf: own.weight,
            texture_id: 0,
        }];
        shared.extend(samples.iter().map(|&(x, y, v, pmf)| LaneSample {
            texel_coords: (x, y),
            value: [v, 1.0 - v, 0.0, 0.0],
            pmf,
            texture_id: 0,
        }));
        let est = estimate_wis(&shared, &ctx);
        let contributing: Vec<&LaneSample> =
            shared.iter().filter(|s| ctx.f_c(s) > 0.0).collect();
        if !contributing.is_empty() {
            for c in 0..2 {
                let lo = contributing.iter().map(|s| s.value[c]).fold(f64::INFINITY, f64::min);
                let hi = contributing.iter().map(|s| s.value[c]).fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(est[c] >= lo - 1e-12 && est[c] <= hi + 1e-12);
            }
        }
        let once = apply_clamp(est, &shared, &ctx);
        let twice = apply_clamp(once, &shared, &ctx);
        prop_assert_eq!(once, twice);
    }

    /// Square footprints: own lane first, all entries in the wave, exactly
    /// size^2 distinct lanes, and the pixel window really is size x size.
    #[test]
    fn square_footprint_invariants(
        cols in 1usize..9,
        rows in 1usize..9,
        size in 1usize..5,
    ) {
        let cfg = WaveConfig::new(cols, rows);
        prop_assume!(size <= cols.min(rows));
        let table = build_square_footprint(&cfg, size).unwrap();
        table.validate().unwrap();
        for lane in 0..cfg.lanes() {
            let list = &table.table[lane];
            prop_assert_eq!(list[0], lane);
            prop_assert_eq!(list.len(), size * size);
            let xs: Vec<usize> = list.iter().map(|&j| cfg.lane_pos(j).0).collect();
            let ys: Vec<usize> = list.iter().map(|&j| cfg.lane_pos(j).1).collect();
            let w = xs.iter().max().unwrap() - xs.iter().min().unwrap() + 1;
            let h = ys.iter().max().unwrap() - ys.iter().min().unwrap() + 1;
            prop_assert_eq!((w, h), (size, size));
            let (px, py) = cfg.lane_pos(lane);
            // window contains the owner
            prop_assert!(xs.contains(&px) && ys.contains(&py));
        }
    }
}
