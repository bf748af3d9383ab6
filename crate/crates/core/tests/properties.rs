use proptest::prelude::*;
use superres_core::cfi::{direct_imaging_cfi, MeasurementKind};
use superres_core::crlb::precisions;
use superres_core::psf::{moments, overlaps};
use superres_core::qfi::qfim_closed_form;
use superres_core::{FisherMatrix, PsfModel, SourceParams};

fn gaussian() -> PsfModel {
    PsfModel::gaussian(1.0).unwrap()
}

fn qfim(psf: &PsfModel, p: SourceParams) -> FisherMatrix {
    qfim_closed_form(&overlaps(psf, p.s).unwrap(), &moments(psf).unwrap(), p).unwrap()
}

fn scale(f: &FisherMatrix) -> f64 {
    f.entries().iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()))
}

/// `J F J` with `J = diag(-1, 1, -1)`.
fn reflect(f: &FisherMatrix) -> [[f64; 3]; 3] {
    let sign = [-1.0, 1.0, -1.0];
    let mut out = *f.entries();
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] *= sign[i] * sign[j];
        }
    }
    out
}

fn assert_close(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3], tol: f64) -> Result<(), TestCaseError> {
    for i in 0..3 {
        for j in 0..3 {
            let t = tol * (1.0 + a[i][j].abs());
            prop_assert!(
                (a[i][j] - b[i][j]).abs() <= t,
                "({},{}): {} vs {}",
                i,
                j,
                a[i][j],
                b[i][j]
            );
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn qfim_is_symmetric_psd(s0 in -3.0..3.0f64, s in 1e-3..6.0f64, q in 0.01..0.99f64) {
        let f = qfim(&gaussian(), SourceParams::new(s0, s, q).unwrap());
        let e = f.entries();
        for i in 0..3 {
            for j in 0..3 {
                prop_assert_eq!(e[i][j], e[j][i]);
            }
        }
        prop_assert!(f.min_eigenvalue() >= -1e-9 * scale(&f));
    }

    #[test]
    fn brightness_swap_is_a_reflection(s in 0.01..5.0f64, q in 0.01..0.99f64) {
        let psf = gaussian();
        let a = SourceParams::new(0.0, s, q).unwrap();
        let b = SourceParams::new(0.0, s, 1.0 - q).unwrap();
        let (qa, qb) = (qfim(&psf, a), qfim(&psf, b));
        assert_close(qa.entries(), &reflect(&qb), 1e-12)?;
        let (fa, fb) = (direct_imaging_cfi(&psf, a).unwrap(), direct_imaging_cfi(&psf, b).unwrap());
        assert_close(fa.entries(), &reflect(&fb), 1e-7)?;
        for (x, y) in [(&qa, &qb), (&fa, &fb)] {
            let (hx, hy) = (precisions(x), precisions(y));
            for k in 0..3 {
                prop_assert!((hx.h[k] - hy.h[k]).abs() <= 1e-6 * (hx.h[k].abs() + 1e-12), "H[{}]: {} vs {}", k, hx.h[k], hy.h[k]);
            }
        }
    }

    #[test]
    fn direct_imaging_ignores_centroid(s0 in -3.0..3.0f64, s in 0.05..5.0f64, q in 0.05..0.95f64) {
        let psf = gaussian();
        let here = direct_imaging_cfi(&psf, SourceParams::new(s0, s, q).unwrap()).unwrap();
        let origin = direct_imaging_cfi(&psf, SourceParams::new(0.0, s, q).unwrap()).unwrap();
        assert_close(here.entries(), origin.entries(), 1e-8)?;
    }

    #[test]
    fn classical_never_exceeds_quantum(s0 in -2.0..2.0f64, s in 0.01..5.0f64, q in 0.02..0.98f64, n in 1usize..7) {
        let psf = gaussian();
        let p = SourceParams::new(s0, s, q).unwrap();
        let quantum = qfim(&psf, p);
        let tol = -1e-9 * scale(&quantum);
        let direct = direct_imaging_cfi(&psf, p).unwrap();
        prop_assert!(quantum.loewner_gap(&direct) >= tol);
        let modes = MeasurementKind::ModeBasis(n).cfi(&psf, p).unwrap();
        prop_assert!(quantum.loewner_gap(&modes) >= tol, "n={}: {}", n, quantum.loewner_gap(&modes));
        let bins = MeasurementKind::Bins { width: 0.5, half_range: 10.0 }.cfi(&psf, p).unwrap();
        prop_assert!(quantum.loewner_gap(&bins) >= tol);
    }
}
