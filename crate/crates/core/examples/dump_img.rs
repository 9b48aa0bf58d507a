use dyncp::greens::*;
use dyncp::materials::SurfaceModel;
use dyncp::quadrature::QuadratureSpec;
use num_complex::Complex64;
use std::io::Write;

fn main() {
    let wp = 1.0 / 0.18;
    let gold = SurfaceModel::drude(wp, 3.892442e-3 * wp).unwrap();
    let d = DipoleSpec::isotropic(1.0).unwrap();
    let spec = QuadratureSpec { rel_tol: 1e-9, abs_tol: 0.0, max_subdivisions: 8192, transform: dyncp::quadrature::Transform::None };
    let z = 0.5;
    let gamma = 3.892442e-3 * wp;
    let mut grid: Vec<f64> = Vec::new();
    let band_end = 4.3;
    let step_band = gamma / 6.0;
    let mut w = step_band;
    while w < band_end { grid.push(w); w += step_band; }
    let step = 0.03;
    while w < 6200.0 { grid.push(w); w += step; }
    let f = std::fs::File::create("/tmp/img_gold.txt").unwrap();
    let mut out = std::io::BufWriter::new(f);
    for &w in &grid {
        let g = green_reflected(&gold, &d, z, Complex64::new(w, 0.0), &spec).unwrap();
        writeln!(out, "{:.16e} {:.16e}", w, g.value.im).unwrap();
    }
}
