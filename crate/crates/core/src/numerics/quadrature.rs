#![allow(clippy::excessive_precision)]

use super::{NumericsError, Tolerance};

// 21-point Kronrod abscissae on [-1, 1]; odd entries are the 10-point Gauss nodes.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_904_746_365,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];

// Gauss weights for XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn eval<F: Fn(f64) -> f64>(f: &F, x: f64) -> Result<f64, NumericsError> {
    let y = f(x);
    if y.is_finite() {
        Ok(y)
    } else {
        Err(NumericsError::NonFiniteIntegrand { x })
    }
}

/// One Gauss-Kronrod 10/21 panel. The error estimate is the raw
/// Kronrod-Gauss difference, floored at the round-off level of the panel.
fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Panel, NumericsError> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let fc = eval(f, center)?;
    let mut kronrod = WGK[10] * fc;
    let mut gauss = 0.0;
    let mut abs_sum = WGK[10] * fc.abs();

    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = eval(f, center - dx)?;
        let f2 = eval(f, center + dx)?;
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }

    let value = kronrod * half;
    let round_off = 50.0 * f64::EPSILON * abs_sum * half.abs();
    let error = ((kronrod - gauss) * half).abs().max(round_off);
    Ok(Panel { a, b, value, error })
}

/// Adaptive Gauss-Kronrod quadrature of `f` over `[a, b]`.
///
/// The panel with the largest error estimate is bisected until the summed
/// estimate falls below `max(abs_tol, rel_tol * |Q|)`. Any non-finite
/// integrand value aborts the integration.
pub fn integrate_finite<F>(f: F, a: f64, b: f64, tol: &Tolerance) -> Result<f64, NumericsError>
where
    F: Fn(f64) -> f64,
{
    tol.validate()?;
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(NumericsError::InvalidInterval { a, b });
    }
    if a == b {
        return Ok(0.0);
    }

    let mut panels = vec![gk21(&f, a, b)?];
    loop {
        let value: f64 = panels.iter().map(|p| p.value).sum();
        let error: f64 = panels.iter().map(|p| p.error).sum();
        if error <= tol.allowance(value) {
            return Ok(value);
        }
        if panels.len() >= tol.max_subdivisions {
            return Err(NumericsError::NonConvergence {
                estimate: error,
                subdivisions: panels.len(),
            });
        }

        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, be), (i, p)| {
                if p.error > be {
                    (i, p.error)
                } else {
                    (bi, be)
                }
            });
        let Panel { a: pa, b: pb, .. } = panels[worst];
        let mid = 0.5 * (pa + pb);
        if mid <= pa || mid >= pb {
            return Err(NumericsError::NonConvergence {
                estimate: error,
                subdivisions: panels.len(),
            });
        }
        panels[worst] = gk21(&f, pa, mid)?;
        panels.push(gk21(&f, mid, pb)?);
    }
}

/// Improper integral over `[a, ∞)` for an integrand the caller certifies to
/// satisfy `|f(s)| <= bound_coeff * exp(-decay_rate * s)`.
///
/// The range is cut where the envelope tail drops to half of `abs_tol`, and
/// the finite part is integrated with [`integrate_finite`].
pub fn integrate_tail<F>(
    f: F,
    a: f64,
    decay_rate: f64,
    bound_coeff: f64,
    tol: &Tolerance,
) -> Result<f64, NumericsError>
where
    F: Fn(f64) -> f64,
{
    tol.validate()?;
    let envelope_ok = decay_rate.is_finite()
        && bound_coeff.is_finite()
        && decay_rate > 0.0
        && bound_coeff > 0.0;
    if !envelope_ok {
        return Err(NumericsError::InvalidEnvelope {
            decay_rate,
            bound_coeff,
        });
    }
    if !a.is_finite() {
        return Err(NumericsError::InvalidInterval { a, b: f64::INFINITY });
    }
    let tail_budget = (0.5 * tol.abs_tol).max(f64::MIN_POSITIVE);
    let horizon = truncation_horizon(decay_rate, bound_coeff, tail_budget);
    integrate_finite(f, a, horizon.max(a), tol)
}

/// Smallest `T` with `bound_coeff * exp(-decay_rate * T) / decay_rate <= budget`.
pub(crate) fn truncation_horizon(decay_rate: f64, bound_coeff: f64, budget: f64) -> f64 {
    (bound_coeff / (decay_rate * budget)).ln() / decay_rate
}
