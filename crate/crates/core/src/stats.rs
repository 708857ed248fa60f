use crate::error::{Error, Result};
use crate::raster::DepthMap;

/// Median with the even-count convention of averaging the middle pair.
pub fn median(values: &mut [f64]) -> Option<f64> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    values.sort_unstable_by(|a, b| a.total_cmp(b));
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

/// Medians of `a` and `b` over pixels valid in both (and in `extra`, if
/// given).
pub(crate) fn joint_medians(a: &DepthMap, b: &DepthMap, extra: Option<&[bool]>) -> Result<(f64, f64)> {
    if a.dims() != b.dims() {
        return Err(Error::dim("depth maps differ in size"));
    }
    let mut va = Vec::new();
    let mut vb = Vec::new();
    for i in 0..a.len() {
        if extra.is_some_and(|m| !m[i]) {
            continue;
        }
        if let (Some(x), Some(y)) = (a.at(i), b.at(i)) {
            va.push(x as f64);
            vb.push(y as f64);
        }
    }
    match (median(&mut va), median(&mut vb)) {
        (Some(ma), Some(mb)) => Ok((ma, mb)),
        _ => Err(Error::domain("no jointly valid pixels")),
    }
}
