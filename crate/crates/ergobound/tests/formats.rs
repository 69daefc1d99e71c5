use ergobound::formats::{
    read_grid, read_polynomial, read_sdpa, read_trajectory_csv, write_grid, write_polynomial, write_sdpa,
    write_trajectory_csv, CertificateFile,
};
use ergobound_core::certify::{region_grid, GridBox, GridShape, Residual};
use ergobound_core::dynamics::integrate;
use ergobound_core::sdp::{solve, SdpOptions};
use ergobound_core::sos::{
    assemble_sdp, build_bound_program, compute_bound, extract_certificate, validate_certificate, Prescaling,
    SosOptions, Tolerances,
};
use ergobound_core::{Monomial, PolySystem, Polynomial};
use proptest::prelude::*;

fn z4() -> Polynomial {
    Polynomial::var(3, 2).powi(4)
}

fn deg4_certificate() -> ergobound_core::sos::BoundCertificate {
    compute_bound(
        &PolySystem::lorenz_standard(),
        &z4(),
        &SosOptions::new(4, Prescaling::lorenz_default()),
        &SdpOptions::default(),
    )
    .unwrap()
}

#[test]
fn sdpa_round_trip_is_textually_stable() {
    let program = build_bound_program(&PolySystem::lorenz_standard(), &z4(), &SosOptions::new(4, Prescaling::lorenz_default())).unwrap();
    let sdp = assemble_sdp(&program);
    let text = write_sdpa(&sdp);
    let back = read_sdpa(&text).unwrap();
    assert_eq!(back.block_dims, sdp.block_dims);
    assert_eq!(back.num_free, sdp.num_free);
    assert_eq!(back.constraints.len(), sdp.constraints.len());
    assert_eq!(write_sdpa(&back), text);
}

#[test]
fn sdpa_reread_problem_solves_to_the_same_bound() {
    let program = build_bound_program(&PolySystem::lorenz_standard(), &z4(), &SosOptions::new(4, Prescaling::lorenz_default())).unwrap();
    let sdp = assemble_sdp(&program);
    let back = read_sdpa(&write_sdpa(&sdp)).unwrap();
    let a = solve(&sdp, &SdpOptions::default()).unwrap();
    let b = solve(&back, &SdpOptions::default()).unwrap();
    let ca = extract_certificate(&program, &a).unwrap();
    let cb = extract_certificate(&program, &b).unwrap();
    assert!((ca.bound - cb.bound).abs() <= 1e-7 * ca.bound, "{} vs {}", ca.bound, cb.bound);
}

#[test]
fn sdpa_rejects_malformed_input() {
    for bad in ["", "2\n1\n2\n1.0\n", "1\n1\n2\n1.0\n0 1 3 1 1.0\n", "1\n1\n2\n1.0\n0 1 1 1\n", "* free 2\n1\n1\n2\n1\n"] {
        assert!(read_sdpa(bad).is_err(), "{:?}", bad);
    }
}

#[test]
fn certificate_json_round_trip_validates() {
    let cert = deg4_certificate();
    let sys = PolySystem::lorenz_standard();
    let file = CertificateFile::new(&cert, &sys, &z4(), true);
    let text = file.to_json();
    let back = CertificateFile::from_json(&text).unwrap();
    assert_eq!(back, file);
    assert_eq!(back.to_json(), text);
    let (sys2, phi2, cert2) = back.decode().unwrap();
    assert_eq!(cert2.bound.to_bits(), cert.bound.to_bits());
    assert_eq!(cert2.gram, cert.gram);
    assert_eq!(cert2.v, cert.v);
    assert_eq!(phi2, z4());
    assert_eq!(sys2.parameter("sigma"), Some(10.0));
    assert!(validate_certificate(&cert2, &sys2, &phi2, Tolerances::default()).unwrap().valid);
}

#[test]
fn corrupted_or_truncated_certificates() {
    let cert = deg4_certificate();
    let sys = PolySystem::lorenz_standard();
    let text = CertificateFile::new(&cert, &sys, &z4(), true).to_json();
    assert!(CertificateFile::from_json(&text[..text.len() / 2]).is_err());
    assert!(CertificateFile::from_json(&text.replace("ergobound-certificate-1", "other")).is_err());

    let mut file = CertificateFile::from_json(&text).unwrap();
    let n = file.gram_size;
    file.gram[2 * n + 3] += 1.0;
    file.gram[3 * n + 2] += 1.0;
    let (s, p, c) = file.decode().unwrap();
    assert!(!validate_certificate(&c, &s, &p, Tolerances::default()).unwrap().valid);

    let mut short = CertificateFile::from_json(&text).unwrap();
    short.gram.pop();
    assert!(short.decode().is_err());
}

#[test]
fn grid_round_trip_keeps_nine_digits() {
    let cert = deg4_certificate();
    let sys = PolySystem::lorenz_standard();
    let residual = Residual::new(&cert, &z4(), &sys).unwrap();
    let shape = GridShape::new(GridBox::lorenz_default(), vec![9, 7, 11]).unwrap();
    let grid = region_grid(&residual, shape.clone(), 1e5).unwrap();
    let text = write_grid(&grid);
    let file = read_grid(&text).unwrap();
    assert_eq!(file.shape, shape);
    assert_eq!(file.certificate, grid.certificate);
    for (a, b) in file.values.iter().zip(&grid.values) {
        assert!((a - b).abs() <= 5e-9 * b.abs(), "{} {}", a, b);
    }
    let region = file.into_region().unwrap();
    assert_eq!(region.member_count(), grid.member_count());
    let body = |t: &str| t.split_once("values ").unwrap().1.to_string();
    assert_eq!(body(&write_grid(&region)), body(&text));
}

#[test]
fn grid_parallel_matches_sequential() {
    let cert = deg4_certificate();
    let sys = PolySystem::lorenz_standard();
    let residual = Residual::new(&cert, &z4(), &sys).unwrap();
    let shape = GridShape::new(GridBox::lorenz_default(), vec![31, 17, 23]).unwrap();
    let seq = region_grid(&residual, shape.clone(), 3000.0).unwrap();
    let par = ergobound::parallel::region_grid(&residual, &shape, 3000.0).unwrap();
    assert_eq!(seq, par);
    assert!(ergobound::parallel::region_grid(&residual, &shape, -1.0).is_err());
}

#[test]
fn grid_rejects_bad_files() {
    let cert = deg4_certificate();
    let sys = PolySystem::lorenz_standard();
    let residual = Residual::new(&cert, &z4(), &sys).unwrap();
    let shape = GridShape::new(GridBox::lorenz_default(), vec![3, 3, 3]).unwrap();
    let text = write_grid(&region_grid(&residual, shape, 1.0).unwrap());
    let truncated: String = text.lines().take(20).map(|l| format!("{}\n", l)).collect();
    assert!(read_grid(&truncated).is_err());
    assert!(read_grid(&text.replace("ergobound-grid 1", "ergobound-grid 2")).is_err());
    assert!(read_grid(&text.replace("resolution 3 3 3", "resolution 3 3")).is_err());
}

#[test]
fn trajectory_csv_round_trip_is_exact() {
    let sys = PolySystem::lorenz_standard();
    let traj = integrate(&sys, &[1.0, 1.0, 1.0], 0.5, 1e-10).unwrap();
    let text = write_trajectory_csv(&traj, sys.variables()).unwrap();
    let (header, rows) = read_trajectory_csv(&text).unwrap();
    assert_eq!(header, ["t", "x", "y", "z"]);
    assert_eq!(rows.len(), traj.len());
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r[0], traj.times()[i]);
        assert_eq!(&r[1..], traj.state(i));
    }
}

fn arb_poly() -> impl Strategy<Value = Polynomial> {
    proptest::collection::vec((0u32..5, 0u32..5, 0u32..5, -1e6f64..1e6), 0..12).prop_map(|terms| {
        let mut p = Polynomial::zero(3);
        for (a, b, c, v) in terms {
            p.add_term(Monomial::new(vec![a, b, c]), v);
        }
        p
    })
}

proptest! {
    #[test]
    fn polynomial_text_round_trip(p in arb_poly()) {
        let back = read_polynomial(&write_polynomial(&p)).unwrap();
        prop_assert_eq!(back, p);
    }
}
