//! Newton ascent on the trigonometric interpolant of a response map.

use std::f64::consts::PI;

use num_complex::Complex64;

fn signed_frequency(k: usize, len: usize) -> f64 {
    if k <= len / 2 {
        k as f64
    } else {
        k as f64 - len as f64
    }
}

/// Value, gradient and Hessian of the band-limited interpolant of the map
/// whose unnormalized 2-D DFT is `spectrum`, at fractional position `(u, v)`.
fn evaluate(spectrum: &[Complex64], rows: usize, cols: usize, u: f64, v: f64) -> (f64, [f64; 2], [f64; 3]) {
    let wr: Vec<f64> = (0..rows).map(|k| 2.0 * PI * signed_frequency(k, rows) / rows as f64).collect();
    let wc: Vec<f64> = (0..cols).map(|l| 2.0 * PI * signed_frequency(l, cols) / cols as f64).collect();
    let ec: Vec<Complex64> = wc.iter().map(|w| Complex64::from_polar(1.0, w * v)).collect();
    let (mut f, mut gu, mut gv, mut huu, mut huv, mut hvv) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for k in 0..rows {
        let row = &spectrum[k * cols..(k + 1) * cols];
        let (mut s0, mut s1, mut s2) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for l in 0..cols {
            let t = row[l] * ec[l];
            s0 += t;
            s1 += t * wc[l];
            s2 += t * (wc[l] * wc[l]);
        }
        let er = Complex64::from_polar(1.0, wr[k] * u);
        let i = Complex64::new(0.0, 1.0);
        f += (er * s0).re;
        gu += (er * s0 * i * wr[k]).re;
        gv += (er * s1 * i).re;
        huu -= (er * s0 * (wr[k] * wr[k])).re;
        huv -= (er * s1 * wr[k]).re;
        hvv -= (er * s2).re;
    }
    let n = (rows * cols) as f64;
    (f / n, [gu / n, gv / n], [huu / n, huv / n, hvv / n])
}

/// Refines an integer peak `(m, n)` (unshifted indices) to a fractional
/// position. Stops after `steps` Newton steps, when a step is shorter than
/// `tolerance`, or where the interpolant is not locally concave.
pub fn refine_peak(
    spectrum: &[Complex64],
    rows: usize,
    cols: usize,
    peak: (usize, usize),
    steps: usize,
    tolerance: f64,
) -> (f64, f64) {
    let (mut u, mut v) = (peak.0 as f64, peak.1 as f64);
    let (mut best, _, _) = evaluate(spectrum, rows, cols, u, v);
    for _ in 0..steps {
        let (_, g, h) = evaluate(spectrum, rows, cols, u, v);
        let det = h[0] * h[2] - h[1] * h[1];
        if !(h[0] < 0.0 && det > 0.0) {
            break;
        }
        let du = -(h[2] * g[0] - h[1] * g[1]) / det;
        let dv = -(h[0] * g[1] - h[1] * g[0]) / det;
        // Never wander more than a cell from the grid maximum.
        let (nu, nv) = (
            (u + du).clamp(peak.0 as f64 - 1.0, peak.0 as f64 + 1.0),
            (v + dv).clamp(peak.1 as f64 - 1.0, peak.1 as f64 + 1.0),
        );
        let (value, _, _) = evaluate(spectrum, rows, cols, nu, nv);
        if value < best {
            break;
        }
        best = value;
        let moved = (nu - u).hypot(nv - v);
        u = nu;
        v = nv;
        if moved < tolerance {
            break;
        }
    }
    (u, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::fft2_real;

    #[test]
    fn recovers_continuous_gaussian_peak() {
        let (rows, cols) = (50, 50);
        for &(pu, pv) in &[(3.3, -2.7), (0.45, 0.1), (-4.8, 6.25)] {
            let map: Vec<f64> = (0..rows * cols)
                .map(|i| {
                    let (m, n) = ((i / cols) as f64, (i % cols) as f64);
                    // Periodic distance to the peak.
                    let dm = (m - pu).rem_euclid(rows as f64);
                    let dn = (n - pv).rem_euclid(cols as f64);
                    let dm = dm.min(rows as f64 - dm);
                    let dn = dn.min(cols as f64 - dn);
                    (-(dm * dm + dn * dn) / (2.0 * 3.125f64.powi(2))).exp()
                })
                .collect();
            let spectrum = fft2_real(&map, rows, cols);
            let grid_peak = (0..rows * cols)
                .max_by(|&a, &b| map[a].total_cmp(&map[b]))
                .unwrap();
            let (u, v) = refine_peak(&spectrum, rows, cols, (grid_peak / cols, grid_peak % cols), 5, 1e-4);
            let wrap = |x: f64, len: f64| {
                let y = x.rem_euclid(len);
                if y > len / 2.0 { y - len } else { y }
            };
            assert!((wrap(u, 50.0) - pu).abs() < 0.05, "{u} vs {pu}");
            assert!((wrap(v, 50.0) - pv).abs() < 0.05, "{v} vs {pv}");
        }
    }

    #[test]
    fn exact_grid_peak_stays_put() {
        let map: Vec<f64> = (0..64)
            .map(|i| {
                let (m, n) = ((i / 8) as f64, (i % 8) as f64);
                let dm = m.min(8.0 - m);
                let dn = n.min(8.0 - n);
                (-(dm * dm + dn * dn) / 2.0).exp()
            })
            .collect();
        let (u, v) = refine_peak(&fft2_real(&map, 8, 8), 8, 8, (0, 0), 5, 1e-4);
        assert!(u.abs() < 1e-9 && v.abs() < 1e-9);
    }
}
