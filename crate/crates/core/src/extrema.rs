//! Local extrema of sampled curves.

/// Default prominence floor, relative to the curve's largest magnitude.
pub const PROMINENCE_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtremumKind {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub index: usize,
    pub kind: ExtremumKind,
    pub value: f64,
}

/// Strict 3-point extrema. Adjacent min/max pairs whose values differ by
/// less than `prominence × max|v|` are dropped as ripple, smallest first.
pub fn local_extrema(values: &[f64], prominence: f64) -> Vec<Extremum> {
    let mut out: Vec<Extremum> = Vec::new();
    for i in 1..values.len().saturating_sub(1) {
        let (a, b, c) = (values[i - 1], values[i], values[i + 1]);
        let kind = if b > a && b > c {
            ExtremumKind::Max
        } else if b < a && b < c {
            ExtremumKind::Min
        } else {
            continue;
        };
        out.push(Extremum {
            index: i,
            kind,
            value: b,
        });
    }
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = prominence * scale;
    loop {
        let weakest = out
            .windows(2)
            .enumerate()
            .map(|(i, w)| (i, (w[1].value - w[0].value).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match weakest {
            Some((i, d)) if d < floor => {
                out.drain(i..i + 2);
            }
            _ => break,
        }
    }
    out
}

pub fn minima(values: &[f64], prominence: f64) -> Vec<usize> {
    local_extrema(values, prominence)
        .into_iter()
        .filter(|e| e.kind == ExtremumKind::Min)
        .map(|e| e.index)
        .collect()
}

pub fn maxima(values: &[f64], prominence: f64) -> Vec<usize> {
    local_extrema(values, prominence)
        .into_iter()
        .filter(|e| e.kind == ExtremumKind::Max)
        .map(|e| e.index)
        .collect()
}

/// Median of a non-empty slice.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sine_extrema() {
        let v: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.01).sin()).collect();
        let e = local_extrema(&v, PROMINENCE_FLOOR);
        let idx: Vec<usize> = e.iter().map(|e| e.index).collect();
        assert_eq!(idx, vec![157, 471, 785]);
        assert_eq!(e[0].kind, ExtremumKind::Max);
        assert_eq!(e[1].kind, ExtremumKind::Min);
    }

    #[test]
    fn ripple_is_suppressed() {
        let v = [0.0, 1.0, 2.0, 3.0, 2.9995, 3.0, 5.0, 4.0, 3.0, 2.0, 1.0];
        assert_eq!(maxima(&v, 0.0), vec![3, 6]);
        assert_eq!(minima(&v, 0.0), vec![4]);
        assert_eq!(maxima(&v, PROMINENCE_FLOOR), vec![6]);
        assert!(minima(&v, PROMINENCE_FLOOR).is_empty());
    }

    #[test]
    fn median_values() {
        assert_eq!(median(&[]), None);
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
    }
}
