use gapdelay::channel::{observe, TwoPathChannel};
use gapdelay::crlb::crlb_at_snr;
use gapdelay::delay_response::{
    leakage, peak_report, predicted_minima, restricted_peak, single_path_at, single_path_complex, single_path_response,
    subband_decomposition, two_path_scan, DelayAxis, DEFAULT_PEAK_WINDOW,
};
use gapdelay::extrema::{local_extrema, maxima, median, minima, ExtremumKind, PROMINENCE_FLOOR};
use gapdelay::spectrum::{build_mask, lookup_scenario, Shaping, SpectralMask, WIFI_SUBCARRIER_SPACING_HZ as DF};
use num_complex::Complex64;
use proptest::prelude::*;

const SCENARIOS: [&str; 6] = ["A1", "A2", "A3", "B1", "B2", "B3"];
const PRESETS: [Shaping; 3] = [
    Shaping::Flat,
    Shaping::FlatTaper { edge_hz: 2e6 },
    Shaping::Toneplan11ax,
];

fn mask(id: &str, shaping: Shaping) -> SpectralMask {
    build_mask(&lookup_scenario(id).unwrap(), shaping, DF).unwrap()
}

fn channel(id: &str) -> TwoPathChannel {
    let tau2 = if id.starts_with('B') { 10e-9 } else { 15e-9 };
    TwoPathChannel::reference_point(5e-9, tau2).unwrap()
}

fn coarse_axis() -> DelayAxis {
    DelayAxis::new(0.0, 50e-9, 5e-12).unwrap()
}

#[test]
fn noise_free_scan_is_sum_of_shifted_copies() {
    for id in SCENARIOS {
        let m = mask(id, Shaping::default());
        let ch = channel(id);
        let axis = coarse_axis();
        let scan = two_path_scan(&m, &ch, &axis, None).unwrap();
        let taus = axis.values();
        let shift = |t0: f64| -> Vec<Complex64> {
            let t: Vec<f64> = taus.iter().map(|t| t - t0).collect();
            single_path_at(&m, &t).unwrap()
        };
        let (g1, g2) = (shift(ch.tau1), shift(ch.tau2));
        let peak = scan.values.iter().cloned().fold(0.0, f64::max);
        for i in 0..axis.len {
            let direct = (ch.alpha1 * g1[i].conj() + ch.alpha2 * g2[i].conj()).norm();
            assert!(
                (scan.values[i] - direct).abs() < 1e-10 * peak,
                "{id} at {} ns",
                taus[i] * 1e9
            );
        }
    }
}

#[test]
fn noise_free_scan_equals_matched_filter() {
    for id in ["A2", "B3"] {
        let m = mask(id, Shaping::default());
        let ch = channel(id);
        let axis = coarse_axis();
        let obs = observe(&ch.path_set(), &m, 0.0, 1).unwrap();
        let a = two_path_scan(&m, &ch, &axis, None).unwrap();
        let b = two_path_scan(&m, &ch, &axis, Some(&obs)).unwrap();
        let peak = a.values.iter().cloned().fold(0.0, f64::max);
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-10 * peak, "{id}");
        }
    }
}

#[test]
fn single_path_response_is_even_and_bounded() {
    let axis = DelayAxis::new(-25e-9, 25e-9, 5e-12).unwrap();
    for id in SCENARIOS {
        for shaping in PRESETS {
            let s = single_path_response(&mask(id, shaping), &axis).unwrap();
            let n = s.values.len();
            assert_eq!(n % 2, 1);
            for i in 0..n / 2 {
                assert!((s.values[i] - s.values[n - 1 - i]).abs() < 1e-12, "{id} {shaping}");
            }
            assert!((s.values[n / 2] - 1.0).abs() < 1e-12);
            assert!(s.values.iter().all(|&v| v <= 1.0 + 1e-9));
        }
    }
}

#[test]
fn leakage_is_unit_at_zero_and_bounded() {
    let d: Vec<f64> = (0..=5000).map(|i| i as f64 * 1e-11).collect();
    for id in SCENARIOS {
        let l = leakage(&mask(id, Shaping::default()), &d).unwrap();
        assert!((l.level[0] - 1.0).abs() < 1e-12);
        assert!(l.level.iter().all(|&v| (0.0..=1.0 + 1e-12).contains(&v)), "{id}");
    }
    assert!(leakage(&mask("A1", Shaping::Flat), &[-1e-9]).is_err());
}

#[test]
fn subband_gains_sum_to_one_at_zero() {
    let axis = DelayAxis::new(0.0, 1e-9, 1e-10).unwrap();
    for id in ["A2", "A3", "B1", "B2", "B3"] {
        for shaping in PRESETS {
            let r = subband_decomposition(&mask(id, shaping), &axis).unwrap();
            assert!((r.g1[0] + r.g2[0] - 1.0).norm() < 1e-12, "{id} {shaping}");
        }
    }
    assert!(subband_decomposition(&mask("A1", Shaping::Flat), &axis).is_err());
}

#[test]
fn recombination_reproduces_direct_response() {
    let axis = coarse_axis();
    for id in ["A2", "A3", "B1", "B2", "B3"] {
        for shaping in PRESETS {
            let m = mask(id, shaping);
            let g = single_path_complex(&m, &axis).unwrap();
            let g0 = m.power();
            let r = subband_decomposition(&m, &axis).unwrap().recombine();
            let worst = r.iter().zip(&g).map(|(a, b)| (a - b / g0).norm()).fold(0.0, f64::max);
            assert!(worst < 1e-10, "{id} {shaping}: {worst:e}");
        }
    }
}

#[test]
fn a2_minima_follow_prediction() {
    let m = mask("A2", Shaping::default());
    let axis = DelayAxis::new(0.0, 20e-9, 1e-12).unwrap();
    let s = single_path_response(&m, &axis).unwrap();
    let found: Vec<f64> = minima(&s.values, PROMINENCE_FLOOR)
        .iter()
        .map(|&i| axis.at(i))
        .collect();
    let p = predicted_minima(m.subband_centers().1.unwrap(), 80e6, 4).unwrap();
    for t in p.gap_minima.iter().filter(|&&t| t < 19e-9) {
        let near = found.iter().map(|f| (f - t).abs()).fold(f64::INFINITY, f64::min);
        assert!(
            near < 0.05 * t,
            "predicted {} ns, nearest off by {} ns",
            t * 1e9,
            near * 1e9
        );
    }
}

fn leakage_minimum_spacing(id: &str) -> f64 {
    let m = mask(id, Shaping::default());
    let d: Vec<f64> = (0..=10_000).map(|i| i as f64 * 5e-12).collect();
    let l = leakage(&m, &d).unwrap();
    let pos: Vec<f64> = minima(&l.level, PROMINENCE_FLOOR).iter().map(|&i| d[i]).collect();
    let spacing: Vec<f64> = pos.windows(2).map(|w| w[1] - w[0]).collect();
    median(&spacing).unwrap()
}

fn center_period(id: &str) -> f64 {
    1.0 / mask(id, Shaping::default()).subband_centers().1.unwrap()
}

#[test]
fn leakage_minima_repeat_at_center_spacing() {
    for id in ["A2", "A3", "B3"] {
        let got = leakage_minimum_spacing(id);
        let want = center_period(id);
        assert!(
            (got / want - 1.0).abs() < 0.10,
            "{id}: {} vs {} ns",
            got * 1e9,
            want * 1e9
        );
    }
}

/// Measured: B2 envelope nulls (k/160 MHz) interleave with the gap minima
/// and halve the median spacing; B1 has adjacent subbands.
#[test]
#[ignore = "B1 and B2 minima interleave with envelope nulls"]
fn leakage_minima_repeat_at_center_spacing_b1_b2() {
    for id in ["B1", "B2"] {
        let got = leakage_minimum_spacing(id);
        let want = center_period(id);
        assert!(
            (got / want - 1.0).abs() < 0.10,
            "{id}: {} vs {} ns",
            got * 1e9,
            want * 1e9
        );
    }
}

/// Measured: only two bound maxima in 1-20 ns, the first beside a leakage minimum.
#[test]
#[ignore = "A2 bound maxima do not sit on leakage maxima"]
fn bound_maxima_sit_on_leakage_maxima() {
    let m = mask("A2", Shaping::default());
    let d: Vec<f64> = (0..=1900).map(|i| (1.0 + 0.01 * i as f64) * 1e-9).collect();
    let bound: Vec<f64> = d
        .iter()
        .map(|&x| {
            let th = TwoPathChannel::reference_point(5e-9, 5e-9 + x).unwrap().params();
            crlb_at_snr(&th, &m, 20.0).unwrap().sqrt_crlb
        })
        .collect();
    let level = leakage(&m, &d).unwrap().level;
    let leak_max: Vec<f64> = maxima(&level, PROMINENCE_FLOOR).iter().map(|&i| d[i]).collect();
    let mut peaks: Vec<_> = local_extrema(&bound, PROMINENCE_FLOOR)
        .into_iter()
        .filter(|e| e.kind == ExtremumKind::Max)
        .collect();
    peaks.sort_by(|a, b| b.value.total_cmp(&a.value));
    assert!(peaks.len() >= 3, "{} bound maxima", peaks.len());
    for p in &peaks[..3] {
        let near = leak_max
            .iter()
            .map(|t| (t - d[p.index]).abs())
            .fold(f64::INFINITY, f64::min);
        assert!(near <= 0.5e-9, "bound maximum at {} ns", d[p.index] * 1e9);
    }
}

#[test]
fn b1_scan_resolves_both_paths() {
    let m = mask("B1", Shaping::default());
    let ch = channel("B1");
    let axis = coarse_axis();
    let scan = two_path_scan(&m, &ch, &axis, None).unwrap();
    let peak = scan.values.iter().cloned().fold(0.0, f64::max);
    let big: Vec<f64> = maxima(&scan.values, PROMINENCE_FLOOR)
        .into_iter()
        .filter(|&i| scan.values[i] > 0.5 * peak)
        .map(|i| axis.at(i))
        .collect();
    assert_eq!(big.len(), 2, "{big:?}");
    assert!((big[0] - 5e-9).abs() < 0.5e-9 && (big[1] - 10e-9).abs() < 0.5e-9);
}

#[test]
fn peak_offsets_small_with_known_signs() {
    let axis = DelayAxis::default_scan();
    let offsets = |id: &str| {
        let m = mask(id, Shaping::default());
        let ch = channel(id);
        let scan = two_path_scan(&m, &ch, &axis, None).unwrap();
        let r = peak_report(&scan, &ch, DEFAULT_PEAK_WINDOW).unwrap();
        assert!(!r.windows_overlap);
        for p in &r.peaks {
            assert!(p.refined);
            assert!((p.tau_hat - p.tau_true).abs() <= p.window);
        }
        (r.peaks[0].offset * 1e9, r.peaks[1].offset * 1e9)
    };
    let (a, b) = offsets("A1");
    assert!((a + 0.161).abs() < 0.15 && (b - 0.229).abs() < 0.15, "A1 {a} {b}");
    let (a, b) = offsets("B3");
    assert!(a > 0.0 && b < 0.0, "B3 {a} {b}");
}

#[test]
fn noisy_scan_is_seeded() {
    let m = mask("A2", Shaping::default());
    let ch = channel("A2");
    let axis = DelayAxis::new(0.0, 30e-9, 1e-11).unwrap();
    let obs = observe(&ch.path_set(), &m, 0.05, 7).unwrap();
    let a = two_path_scan(&m, &ch, &axis, Some(&obs)).unwrap();
    let b = two_path_scan(&m, &ch, &axis, Some(&observe(&ch.path_set(), &m, 0.05, 7).unwrap())).unwrap();
    assert_eq!(a.values, b.values);
    let r = restricted_peak(&a, 5e-9, 1e-9).unwrap();
    assert!(r.offset.abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn window_stays_inside(tau in 3.0f64..45.0, w in 0.05f64..2.0) {
        let m = mask("A3", Shaping::default());
        let ch = TwoPathChannel::reference_point(tau * 1e-9, (tau + 3.0) * 1e-9).unwrap();
        let axis = DelayAxis::new(0.0, 50e-9, 1e-11).unwrap();
        let scan = two_path_scan(&m, &ch, &axis, None).unwrap();
        let p = restricted_peak(&scan, tau * 1e-9, w * 1e-9).unwrap();
        prop_assert!((p.tau_hat - p.tau_true).abs() <= p.window + 1e-15);
    }

    #[test]
    fn two_path_scan_nonnegative(t1 in 0.0f64..20.0, dt in 0.0f64..20.0, re in -1.0f64..1.0, im in -1.0f64..1.0) {
        let m = mask("B2", Shaping::Flat);
        let ch = TwoPathChannel::new(t1 * 1e-9, (t1 + dt) * 1e-9, Complex64::new(1.0, 0.0), Complex64::new(re, im)).unwrap();
        let axis = DelayAxis::new(0.0, 50e-9, 1e-10).unwrap();
        let s = two_path_scan(&m, &ch, &axis, None).unwrap();
        prop_assert!(s.values.iter().all(|&v| v >= 0.0 && v.is_finite()));
        prop_assert!(s.values.windows(2).count() + 1 == axis.len);
    }
}
