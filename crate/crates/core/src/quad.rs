//! Globally adaptive 15-point Gauss-Kronrod quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

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
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Value and absolute error estimate of a quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
}

impl std::ops::Add for Quadrature {
    type Output = Quadrature;
    fn add(self, o: Quadrature) -> Quadrature {
        Quadrature {
            value: self.value + o.value,
            error: self.error + o.error,
        }
    }
}

fn qk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Quadrature {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut resg = fc * WG[3];
    let mut resk = fc * WGK[7];
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..3 {
        let jtw = 2 * j + 1;
        let dx = half * XGK[jtw];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        resg += WG[j] * (f1 + f2);
        resk += WGK[jtw] * (f1 + f2);
    }
    for j in 0..4 {
        let jtwm1 = 2 * j;
        let dx = half * XGK[jtwm1];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        resk += WGK[jtwm1] * (f1 + f2);
    }
    // QUADPACK's error heuristic
    let reskh = 0.5 * resk;
    let mut resasc = WGK[7] * (fc - reskh).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    let resasc = resasc * half.abs();
    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    Quadrature {
        value: resk * half,
        error: err,
    }
}

struct Piece {
    a: f64,
    b: f64,
    q: Quadrature,
}

impl PartialEq for Piece {
    fn eq(&self, o: &Self) -> bool {
        self.q.error == o.q.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Piece {
    fn cmp(&self, o: &Self) -> Ordering {
        self.q.error.total_cmp(&o.q.error)
    }
}

const MAX_PIECES: usize = 4000;

/// Integrates `f` over `[a, b]` to absolute tolerance `tol` by bisecting the
/// subinterval with the largest error estimate.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> Result<Quadrature> {
    if a == b {
        return Ok(Quadrature { value: 0.0, error: 0.0 });
    }
    let first = qk15(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Piece { a, b, q: first });
    let mut total = first;
    while total.error > tol && total.error.is_finite() && heap.len() < MAX_PIECES {
        let worst = heap.pop().expect("heap is never empty");
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a.min(worst.b) || m >= worst.a.max(worst.b) {
            // cannot split further in floating point
            heap.push(worst);
            break;
        }
        let left = qk15(&mut f, worst.a, m);
        let right = qk15(&mut f, m, worst.b);
        total.value += left.value + right.value - worst.q.value;
        total.error += left.error + right.error - worst.q.error;
        heap.push(Piece { a: worst.a, b: m, q: left });
        heap.push(Piece { a: m, b: worst.b, q: right });
    }
    // re-sum to shed the drift of the running update
    let mut value = 0.0;
    let mut error = 0.0;
    for p in heap.iter() {
        value += p.q.value;
        error += p.q.error;
    }
    if !(error <= tol) || !value.is_finite() {
        return Err(Error::Quadrature { estimate: error, tolerance: tol });
    }
    Ok(Quadrature { value, error })
}

/// Integrates over consecutive `breaks`, splitting the tolerance evenly.
/// Zero-length pieces are skipped.
pub fn integrate_pieces<F: FnMut(f64) -> f64>(mut f: F, breaks: &[f64], tol: f64) -> Result<Quadrature> {
    let n = breaks.len().saturating_sub(1).max(1) as f64;
    let mut acc = Quadrature { value: 0.0, error: 0.0 };
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            acc = acc + integrate(&mut f, w[0], w[1], tol / n)?;
        }
    }
    Ok(acc)
}
