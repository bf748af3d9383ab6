use superres_core::psf::{moments, overlaps, overlaps_by_quadrature};
use superres_core::qfi::{qfim_closed_form, qfim_grid_oracle, qfim_rank2, rho_eigensystem, GridSpec, SubspaceRep};
use superres_core::spline::UniformGrid;
use superres_core::{FisherMatrix, PsfModel, SourceParams};

const S_GRID: [f64; 6] = [0.05, 0.2, 0.5, 1.0, 2.0, 4.0];
const Q_GRID: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.95];

fn three(psf: &PsfModel, p: SourceParams) -> [FisherMatrix; 3] {
    let ov = overlaps(psf, p.s).unwrap();
    let mom = moments(psf).unwrap();
    let sub = SubspaceRep::new(&ov, &mom, p).unwrap();
    [
        qfim_closed_form(&ov, &mom, p).unwrap(),
        qfim_rank2(&sub, &rho_eigensystem(&ov, p.q).unwrap()).unwrap(),
        qfim_grid_oracle(psf, p, &GridSpec::default()).unwrap(),
    ]
}

#[test]
fn closed_form_rank2_and_grid_agree_on_standard_grid() {
    let psf = PsfModel::gaussian(1.0).unwrap();
    for &q in &Q_GRID {
        for &s in &S_GRID {
            let [c, r, g] = three(&psf, SourceParams::new(0.0, s, q).unwrap());
            assert!(c.max_abs_diff(&r) <= 1e-6, "rank2 s={s} q={q}: {}", c.max_abs_diff(&r));
            assert!(c.max_abs_diff(&g) <= 1e-6, "grid s={s} q={q}: {}", c.max_abs_diff(&g));
            for m in [&c, &r, &g] {
                assert!(m.min_eigenvalue() >= -1e-9, "not PSD at s={s} q={q}");
            }
        }
    }
}

#[test]
fn gaussian_entries_by_hand() {
    // Unit-width Gaussian: p² = 1/4, w = e^{-s²/8}, m = (s/4) w.
    let psf = PsfModel::gaussian(1.0).unwrap();
    for &(s, q) in &[(0.3, 0.2), (1.0, 0.5), (2.5, 0.9)] {
        let p = SourceParams::new(0.4, s, q).unwrap();
        let [c, ..] = three(&psf, p);
        let w = (-s * s / 8.0f64).exp();
        let m = s / 4.0 * w;
        let b2 = 4.0 * q * (1.0 - q);
        let e = c.entries();
        let want = [
            [4.0 * (0.25 - b2 * m * m), 4.0 * (q - 0.5) * 0.25, 4.0 * w * m],
            [4.0 * (q - 0.5) * 0.25, 0.25, 0.0],
            [4.0 * w * m, 0.0, 4.0 * (1.0 - w * w) / b2],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert!(
                    (e[i][j] - want[i][j]).abs() < 1e-12,
                    "({i},{j}) at s={s}: {} vs {}",
                    e[i][j],
                    want[i][j]
                );
            }
        }
    }
}

#[test]
fn sampled_gaussian_matches_analytic_qfim() {
    let grid = UniformGrid::new(-10.0, 0.01, 2001).unwrap();
    let samples = grid.points().map(|x| (-x * x / 4.0f64).exp()).collect();
    let (sampled, _) = PsfModel::from_samples(grid, samples, None).unwrap();
    let exact = PsfModel::gaussian(1.0).unwrap();
    for &s in &[0.2, 1.0, 3.0] {
        let p = SourceParams::new(0.0, s, 0.3).unwrap();
        let a = three(&exact, p)[0].clone();
        let b = three(&sampled, p);
        for m in &b {
            assert!(a.max_abs_diff(m) < 1e-5, "s={s}: {}", a.max_abs_diff(m));
        }
    }
}

#[test]
fn quadrature_overlaps_match_analytic_for_gaussian() {
    let psf = PsfModel::gaussian(1.3).unwrap();
    for &s in &[1e-3, 0.1, 1.0, 4.0] {
        let a = overlaps(&psf, s).unwrap();
        let q = overlaps_by_quadrature(&psf, s).unwrap();
        assert!((a.w - q.w).abs() < 1e-12);
        assert!((a.m - q.m).abs() < 1e-12);
        assert!((a.tau - q.tau).abs() < 1e-12);
    }
}
