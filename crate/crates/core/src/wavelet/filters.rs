//! Orthonormal low-pass filters.

use std::f64::consts::FRAC_1_SQRT_2;

pub(crate) const HAAR: [f64; 2] = [FRAC_1_SQRT_2, FRAC_1_SQRT_2];

/// Least-asymmetric Daubechies filter with 8 vanishing moments (length 16),
/// computed by spectral factorization at 50-digit precision.
pub(crate) const LEAST_ASYMMETRIC_8: [f64; 16] = [
    0.001_889_950_332_767_689_184_274,
    -0.000_302_920_514_724_133_081_263_9,
    -0.014_952_258_337_062_199_118_49,
    0.003_808_752_013_894_489_463_072,
    0.049_137_179_673_730_286_786_91,
    -0.027_219_029_917_103_486_321_96,
    -0.051_945_838_107_881_800_735_71,
    0.364_441_894_836_178_936_759_6,
    0.777_185_751_699_628_028_624_3,
    0.481_359_651_259_053_391_589_6,
    -0.061_273_359_067_811_077_843_05,
    -0.143_294_238_351_272_662_844_1,
    0.007_607_487_324_976_608_191_921,
    0.031_695_087_811_525_991_431_43,
    -0.000_542_132_331_800_010_689_347_8,
    -0.003_382_415_951_005_002_595_458,
];

/// High-pass quadrature mirror of `h`: `g[m] = (-1)^m h[L-1-m]`.
pub(crate) fn quadrature_mirror(h: &[f64]) -> Vec<f64> {
    let len = h.len();
    (0..len)
        .map(|m| {
            let v = h[len - 1 - m];
            if m % 2 == 0 {
                v
            } else {
                -v
            }
        })
        .collect()
}
