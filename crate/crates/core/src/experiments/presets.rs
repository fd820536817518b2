//! Named base points and the default bump cover.
//!
//! * `cusp` / `identity`: the identity coset. Its horocycle is closed with
//!   period 1 and `u(n) p = p` for every integer `n`.
//! * `generic1`: `h = [[phi, -1], [1, 0]]`, `phi` the golden ratio. The
//!   forward endpoint `phi` of the geodesic is badly approximable, so the
//!   geodesic stays in a compact set.
//! * `compact_geodesic`: `h = [[phi, -l/phi], [1, l]]` with `l = 1/sqrt 5`,
//!   whose endpoints `phi` and `-1/phi` are Galois conjugate: the geodesic is
//!   closed and no parabolic element fixes either endpoint.
//! * `hilbert_generic` (k = 2): independent factors `[[phi, -1], [1, 0]]`
//!   and `[[sqrt 3, -1], [1, 0]]`, unrelated to any cusp of `Q(sqrt 2)`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::group::Mat2;
use crate::lattice::{ChartCoord, Lattice, QuotientPoint};
use crate::observables::{BumpFunction, Observable};

pub const PRESETS: [&str; 5] = ["cusp", "identity", "generic1", "compact_geodesic", "hilbert_generic"];

fn golden() -> f64 {
    0.5 * (1.0 + 5f64.sqrt())
}

/// Inverse representative of a named preset.
pub fn preset_inverse_rep(name: &str) -> Result<Vec<Mat2>> {
    let phi = golden();
    match name {
        "cusp" | "identity" => Ok(vec![Mat2::IDENTITY]),
        "generic1" => Ok(vec![Mat2::new(phi, -1.0, 1.0, 0.0)]),
        "compact_geodesic" => {
            let l = 1.0 / 5f64.sqrt();
            Ok(vec![Mat2::new(phi, -l / phi, 1.0, l)])
        }
        "hilbert_generic" => Ok(vec![Mat2::new(phi, -1.0, 1.0, 0.0), Mat2::new(3f64.sqrt(), -1.0, 1.0, 0.0)]),
        other => Err(Error::Config(format!("unknown point preset `{other}` (known: {})", PRESETS.join(", ")))),
    }
}

/// Preset point on `lat`; the identity presets adapt to any `k`.
pub fn preset_point(lat: Arc<Lattice>, name: &str) -> Result<QuotientPoint> {
    if matches!(name, "cusp" | "identity") {
        return Ok(QuotientPoint::identity(lat));
    }
    let h = preset_inverse_rep(name)?;
    if h.len() != lat.k() {
        return Err(Error::Config(format!("preset `{name}` has k = {}, lattice has k = {}", h.len(), lat.k())));
    }
    QuotientPoint::from_inverse_rep(lat, h)
}

/// Ten bumps over `|x| <= 1/2`, `0.9 < y < 2.1`, all `theta`:
/// centres `x in {-1/4, 1/4}`, `y = 3/2`, `theta in {0, +-0.6, +-1.2}`,
/// half-widths `[0.3, 0.6, 0.45]` (extra factors copy the first).
pub fn ten_bump_cover(lat: &Arc<Lattice>) -> Result<Vec<Observable>> {
    let k = lat.k();
    let mut out = Vec::with_capacity(10);
    for x in [-0.25, 0.25] {
        for th in [-1.2, -0.6, 0.0, 0.6, 1.2] {
            let c = QuotientPoint::from_chart(lat.clone(), &vec![ChartCoord::new(x, 1.5, th); k])?;
            out.push(Observable::bump(BumpFunction::new(&c, vec![[0.3, 0.6, 0.45]; k], 1.0)?));
        }
    }
    Ok(out)
}
