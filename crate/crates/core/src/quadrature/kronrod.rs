//! Globally adaptive 21-point Gauss–Kronrod integration over a list of
//! initial segments, some of which may be semi-infinite tails mapped onto
//! a finite parameter interval.

use super::sum::NeumaierSum;
use super::Integral;
use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// How a segment's parameter `t` maps onto the integration variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SegmentMap {
    /// x = t
    Identity,
    /// x = base / t on t in (0, 1], i.e. the tail [base, inf).
    Inverse { base: f64 },
}

impl SegmentMap {
    #[inline]
    fn apply<F: Fn(f64) -> f64>(&self, f: &F, t: f64) -> f64 {
        match *self {
            SegmentMap::Identity => f(t),
            SegmentMap::Inverse { base } => {
                let x = base / t;
                let v = f(x);
                if v == 0.0 {
                    0.0
                } else {
                    v * base / (t * t)
                }
            }
        }
    }
}

/// Initial piece of an integration domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
    pub map: SegmentMap,
}

impl Segment {
    pub fn finite(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            map: SegmentMap::Identity,
        }
    }

    /// [base, inf) through x = base/t.
    pub fn tail(base: f64) -> Self {
        assert!(base > 0.0, "tail base must be positive");
        Self {
            lo: 0.0,
            hi: 1.0,
            map: SegmentMap::Inverse { base },
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Evaluated {
    seg: Segment,
    value: f64,
    error: f64,
    order: u64,
}

impl PartialEq for Evaluated {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Evaluated {}
impl PartialOrd for Evaluated {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Evaluated {
    // Largest error first; ties broken by creation order so the refinement
    // sequence never depends on anything but the inputs.
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.order.cmp(&self.order))
    }
}

/// One 21-point Gauss–Kronrod panel with the QUADPACK error heuristic.
#[allow(clippy::needless_range_loop)] // indices mirror the node tables
pub fn gauss_kronrod_21<F: Fn(f64) -> f64>(f: &F, seg: &Segment) -> (f64, f64) {
    let centr = 0.5 * (seg.lo + seg.hi);
    let hlgth = 0.5 * (seg.hi - seg.lo);
    let dhlgth = hlgth.abs();

    let fc = seg.map.apply(f, centr);
    let mut resg = 0.0;
    let mut resk = WGK[10] * fc;
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..5 {
        let jtw = 2 * j + 1;
        let absc = hlgth * XGK[jtw];
        let f1 = seg.map.apply(f, centr - absc);
        let f2 = seg.map.apply(f, centr + absc);
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        resg += WG[j] * (f1 + f2);
        resk += WGK[jtw] * (f1 + f2);
        resabs += WGK[jtw] * (f1.abs() + f2.abs());
    }
    for j in 0..5 {
        let jtwm1 = 2 * j;
        let absc = hlgth * XGK[jtwm1];
        let f1 = seg.map.apply(f, centr - absc);
        let f2 = seg.map.apply(f, centr + absc);
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        resk += WGK[jtwm1] * (f1 + f2);
        resabs += WGK[jtwm1] * (f1.abs() + f2.abs());
    }
    let reskh = resk * 0.5;
    let mut resasc = WGK[10] * (fc - reskh).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    let result = resk * hlgth;
    resabs *= dhlgth;
    resasc *= dhlgth;
    let mut abserr = ((resk - resg) * hlgth).abs();
    if resasc != 0.0 && abserr != 0.0 {
        abserr = resasc * (200.0 * abserr / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        abserr = abserr.max(50.0 * f64::EPSILON * resabs);
    }
    (result, abserr)
}

/// Global adaptive refinement: bisect the segment with the largest error
/// estimate until the summed estimate meets `max(abs_tol, rel_tol |I|)`.
pub fn integrate_segments<F: Fn(f64) -> f64>(
    f: &F,
    segments: &[Segment],
    abs_tol: f64,
    rel_tol: f64,
    max_subdivisions: usize,
) -> Result<Integral> {
    let mut order = 0u64;
    let mut heap = BinaryHeap::new();
    let mut frozen: Vec<Evaluated> = Vec::new();
    let mut evaluations = 0usize;
    for seg in segments.iter().filter(|s| s.hi > s.lo) {
        let (value, error) = gauss_kronrod_21(f, seg);
        evaluations += 21;
        heap.push(Evaluated {
            seg: *seg,
            value,
            error,
            order,
        });
        order += 1;
    }

    let total = |heap: &BinaryHeap<Evaluated>, frozen: &[Evaluated]| -> (f64, f64) {
        // Sum in creation order for bit-reproducibility.
        let mut all: Vec<&Evaluated> = heap.iter().chain(frozen.iter()).collect();
        all.sort_by_key(|e| e.order);
        let v: NeumaierSum = all.iter().map(|e| e.value).collect();
        let err: NeumaierSum = all.iter().map(|e| e.error).collect();
        (v.value(), err.value())
    };

    let mut subdivisions = 0usize;
    loop {
        let (value, error) = total(&heap, &frozen);
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::NonConvergence {
                value,
                error,
                subdivisions,
            });
        }
        if error <= abs_tol.max(rel_tol * value.abs()) {
            return Ok(Integral {
                value,
                error,
                evaluations,
            });
        }
        let Some(worst) = heap.pop() else {
            // Everything left is frozen at machine resolution.
            return Ok(Integral {
                value,
                error,
                evaluations,
            });
        };
        if subdivisions >= max_subdivisions {
            heap.push(worst);
            let (value, error) = total(&heap, &frozen);
            return Err(Error::NonConvergence {
                value,
                error,
                subdivisions,
            });
        }
        let s = worst.seg;
        let mid = 0.5 * (s.lo + s.hi);
        if mid <= s.lo || mid >= s.hi || (s.hi - s.lo) < 1e-14 * s.lo.abs().max(s.hi.abs()) {
            frozen.push(worst);
            continue;
        }
        subdivisions += 1;
        for (lo, hi) in [(s.lo, mid), (mid, s.hi)] {
            let seg = Segment { lo, hi, map: s.map };
            let (value, error) = gauss_kronrod_21(f, &seg);
            evaluations += 21;
            heap.push(Evaluated {
                seg,
                value,
                error,
                order,
            });
            order += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact_on_single_panel() {
        let (v, _) = gauss_kronrod_21(&|x: f64| x.powi(5) + 3.0 * x * x, &Segment::finite(0.0, 2.0));
        assert!((v - (64.0 / 6.0 + 8.0)).abs() < 1e-13);
    }

    #[test]
    fn exponential_tail() {
        let r = integrate_segments(
            &|x: f64| (-x).exp(),
            &[Segment::finite(0.0, 1.0), Segment::tail(1.0)],
            1e-13,
            1e-12,
            200,
        )
        .unwrap();
        assert!((r.value - 1.0).abs() < 1e-11, "{r:?}");
    }

    #[test]
    fn algebraic_tail() {
        // int_1^inf dx / x^2 = 1
        let r = integrate_segments(&|x: f64| 1.0 / (x * x), &[Segment::tail(1.0)], 1e-14, 1e-12, 50)
            .unwrap();
        assert!((r.value - 1.0).abs() < 1e-13);
    }

    #[test]
    fn budget_exhaustion_reports_best_estimate() {
        let e = integrate_segments(
            &|x: f64| (1.0 / x).sin() / x,
            &[Segment::finite(1e-6, 1.0)],
            1e-15,
            1e-15,
            3,
        )
        .unwrap_err();
        assert!(matches!(e, Error::NonConvergence { subdivisions: 3, .. }));
    }

    #[test]
    fn deterministic_bitwise() {
        let f = |x: f64| (x * 30.0).sin().powi(2) * (-x).exp();
        let segs = [Segment::finite(0.0, 3.0), Segment::tail(3.0)];
        let a = integrate_segments(&f, &segs, 1e-12, 1e-12, 500).unwrap();
        let b = integrate_segments(&f, &segs, 1e-12, 1e-12, 500).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.error.to_bits(), b.error.to_bits());
    }
}
