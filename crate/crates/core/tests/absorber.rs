use branchflow::grid::{GridSpec, Rect};
use branchflow::potential::SampledPotential;
use branchflow::quantum::{gaussian_packet, make_absorber, propagate, AbsorberGeometry, QuantumConfig};
use num_complex::Complex64;
use std::f64::consts::PI;

/// A packet sent into the border frame: once it has had time to reach the
/// frame and come back, whatever is left in the interior is either
/// reflected (moving back, kx < 0) or leaked through the periodic seam
/// (still moving forward). Amplitudes relative to the initial unit norm.
#[test]
fn border_frame_calibration() {
    let g = GridSpec::spectral(256, 256, Rect::centered(128.0)).unwrap();
    let (w, s, dt, k) = (32.0, 0.2, 0.25, PI / 2.0);
    let mask = make_absorber(g, &[AbsorberGeometry::Border { width: w, strength: s }]).unwrap();
    let mut psi = gaussian_packet(g, [0.0, 0.0], 12.0, [k, 0.0]).unwrap();
    let steps = ((128.0 + 50.0) / k / dt) as usize;
    propagate(&mut psi, &SampledPotential::constant(g, 0.0), &QuantumConfig::new(dt, steps), Some(&mask), &mut [], &mut |_, _| {})
        .unwrap();
    for j in 0..g.ny {
        for i in 0..g.nx {
            if g.x(i).abs() > 128.0 - w || g.y(j).abs() > 128.0 - w {
                psi.amplitudes[g.index(i, j)] = Complex64::default();
            }
        }
    }
    let spectrum = psi.spectrum();
    let kx = g.kx();
    let (mut back, mut forward) = (0.0, 0.0);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let p = spectrum[j * g.nx + i].norm_sqr();
            if kx[i] < 0.0 { back += p } else { forward += p }
        }
    }
    let scale = psi.norm() / (back + forward);
    let (reflected, transmitted) = ((back * scale).sqrt(), (forward * scale).sqrt());
    assert!(reflected < 1e-2, "reflected amplitude {reflected:.2e}");
    assert!(transmitted < 1e-3, "transmitted amplitude {transmitted:.2e}");
}
