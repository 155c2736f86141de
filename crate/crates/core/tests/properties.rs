use faer::{c64, Mat};
use proptest::prelude::*;
use sqzlaser::dressing::dress;
use sqzlaser::fock::{annihilation, expectation, number, qubit_ops, tensor, DensityMatrix, HilbertSpace, Operator};
use sqzlaser::gaussian::{GaussianDecomposition, GaussianState};
use sqzlaser::lindblad::{
    liouvillian_matrix, model_pumped_laser, model_single_qubit_laser, rhs_matrix, trace_distance, vectorize,
    LindbladTerm, MasterEquation,
};
use sqzlaser::meanfield::{
    gaussian_mf_solution, mf_ansatz, mf_evolve, mf_photon_number, mf_rhs, MFParams, MeanFieldState,
};
use sqzlaser::ode::OdeOptions;
use sqzlaser::wigner::{auto_grid, wigner_from_density, Basis};

fn complex_matrix(d: usize, re: &[f64], im: &[f64]) -> Mat<c64> {
    Mat::from_fn(d, d, |i, j| c64::new(re[i * d + j], im[i * d + j]))
}

fn random_state(space: HilbertSpace, re: &[f64], im: &[f64]) -> DensityMatrix {
    let d = space.dim();
    let g = complex_matrix(d, re, im);
    let m = &g * g.adjoint();
    let tr: f64 = (0..d).map(|i| m[(i, i)].re).sum();
    let m = Mat::from_fn(d, d, |i, j| m[(i, j)] / tr);
    DensityMatrix::new(space, m).unwrap()
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn entries(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn bogoliubov_relation(eta1 in 0.0f64..0.5, eta2 in 0.0f64..0.5) {
        if let Ok(d) = dress(eta1, eta2, 1.0) {
            prop_assert!(((d.u * d.u - d.v * d.v).abs() - 1.0).abs() <= 1e-12);
            if d.u.abs() > d.v.abs() {
                prop_assert!(d.u > 0.0 && d.v >= 0.0);
                prop_assert!((d.u - d.r.cosh()).abs() <= 1e-12 * d.u);
                prop_assert!((d.v - d.r.sinh()).abs() <= 1e-12 * d.u);
            }
        }
    }

    #[test]
    fn swapping_drive_amplitudes_swaps_u_and_v(eta1 in 0.0f64..0.5, eta2 in 0.0f64..0.5) {
        if let (Ok(a), Ok(b)) = (dress(eta1, eta2, 1.0), dress(eta2, eta1, 1.0)) {
            prop_assert!((a.u - b.v).abs() <= 1e-14 && (a.v - b.u).abs() <= 1e-14);
            prop_assert!((a.g_tilde - b.g_tilde).abs() <= 1e-14);
        }
    }

    #[test]
    fn mean_field_rhs_is_phase_equivariant(
        f in (-3.0f64..3.0, -3.0f64..3.0),
        s in (-0.3f64..0.3, -0.3f64..0.3),
        d in -1.0f64..1.0,
        theta in 0.0f64..6.3,
        c in 0.5f64..20.0,
        cp in 0.0f64..10.0,
    ) {
        let p = MFParams::from_cooperativity(c, 1.0, 0.1, cp).unwrap();
        let y = MeanFieldState { f: c64::new(f.0, f.1), s: c64::new(s.0, s.1), d };
        let ph = c64::from_polar(1.0, theta);
        let rotated = MeanFieldState { f: y.f * ph, s: y.s * ph, d };
        let a = mf_rhs(&rotated, &p);
        let b = mf_rhs(&y, &p);
        prop_assert!((a.f - b.f * ph).norm() <= 1e-12 * (1.0 + b.f.norm()));
        prop_assert!((a.s - b.s * ph).norm() <= 1e-12 * (1.0 + b.s.norm()));
        prop_assert!((a.d - b.d).abs() <= 1e-12 * (1.0 + b.d.abs()));
    }
}

proptest! {
    #![proptest_config(config(32))]

    #[test]
    fn mean_field_trajectories_respect_spin_bounds(
        f in (-1.0f64..1.0, -1.0f64..1.0),
        bloch in (0.0f64..1.0, 0.0f64..6.3, 0.0f64..std::f64::consts::PI),
        c in 0.5f64..10.0,
    ) {
        // a point inside the Bloch ball: |S| = sin(θ)ρ/2, D = cos(θ)ρ
        let (rad, az, pol) = bloch;
        let y0 = MeanFieldState {
            f: c64::new(f.0, f.1),
            s: c64::from_polar(0.5 * rad * pol.sin(), az),
            d: rad * pol.cos(),
        };
        let p = MFParams::from_cooperativity(c, 1.0, 0.1, 1.0).unwrap();
        let times: Vec<f64> = (0..=40).map(|k| k as f64).collect();
        for y in mf_evolve(&y0, &p, &times, &OdeOptions::default()).unwrap() {
            prop_assert!(y.d.abs() <= 1.0 + 1e-9);
            prop_assert!(y.s.norm() <= 0.5 + 1e-9);
        }
    }

    #[test]
    fn gaussian_compose_decompose_round_trip(
        alpha in (-2.0f64..2.0, -2.0f64..2.0),
        phi in -0.78f64..0.78,
        r in 0.05f64..1.2,
        n in 0.0f64..2.0,
    ) {
        let dec = GaussianDecomposition { alpha: c64::new(alpha.0, alpha.1), phi, r_tilde: r, n_tilde: n };
        let back = GaussianState::compose(&dec).unwrap().decompose();
        prop_assert!((back.alpha - dec.alpha).norm() <= 1e-10);
        prop_assert!((back.phi - phi).abs() <= 1e-9);
        prop_assert!((back.r_tilde - r).abs() <= 1e-10);
        prop_assert!((back.n_tilde - n).abs() <= 1e-10);
    }

    #[test]
    fn symplectic_maps_preserve_uncertainty_product(
        phi in -0.78f64..0.78,
        r in 0.0f64..1.0,
        n in 0.0f64..2.0,
        theta in 0.0f64..6.3,
        s in -1.0f64..1.0,
    ) {
        let gs = GaussianState::compose(&GaussianDecomposition { alpha: c64::new(0.3, -0.2), phi, r_tilde: r, n_tilde: n }).unwrap();
        let (c, si) = (theta.cos(), theta.sin());
        let m = [[c * s.exp(), -si * (-s).exp()], [si * s.exp(), c * (-s).exp()]];
        let out = gs.transform(m).unwrap();
        prop_assert!((out.det() - gs.det()).abs() <= 1e-10 * gs.det());
    }

    #[test]
    fn liouvillian_preserves_trace_and_matches_rhs(
        h in (entries(36), entries(36)),
        jump in (entries(36), entries(36)),
        rho in (entries(36), entries(36)),
        rate in 0.0f64..3.0,
    ) {
        let space = HilbertSpace::new(1, 3).unwrap();
        let hm = complex_matrix(6, &h.0, &h.1);
        let hm = Mat::from_fn(6, 6, |i, j| (hm[(i, j)] + hm[(j, i)].conj()) * 0.5);
        let hamiltonian = Operator::new_hermitian(space, hm).unwrap();
        let jump = Operator::new(space, complex_matrix(6, &jump.0, &jump.1)).unwrap();
        let me = MasterEquation::with_static(hamiltonian, vec![LindbladTerm::new(jump, rate).unwrap()]).unwrap();
        let l = liouvillian_matrix(&me).unwrap().to_dense().unwrap();
        for c in 0..36 {
            let leak: c64 = (0..6).map(|i| l[(i + 6 * i, c)]).sum();
            prop_assert!(leak.norm() <= 1e-10);
        }
        let state = random_state(space, &rho.0, &rho.1);
        let lhs = vectorize(&rhs_matrix(&me, state.matrix(), 0.0).unwrap());
        let v = vectorize(state.matrix());
        for (i, want) in lhs.iter().enumerate() {
            let got: c64 = (0..36).map(|j| l[(i, j)] * v[j]).sum();
            prop_assert!((got - want).norm() <= 1e-12);
        }
    }

    #[test]
    fn tensor_product_is_associative(
        a in (entries(4), entries(4)),
        b in (entries(4), entries(4)),
        c in (entries(9), entries(9)),
    ) {
        let q = HilbertSpace::qubits_only(1).unwrap();
        let f = HilbertSpace::field(3).unwrap();
        let a = Operator::new(q, complex_matrix(2, &a.0, &a.1)).unwrap();
        let b = Operator::new(q, complex_matrix(2, &b.0, &b.1)).unwrap();
        let c = Operator::new(f, complex_matrix(3, &c.0, &c.1)).unwrap();
        let left = tensor(&tensor(&a, &b).unwrap(), &c).unwrap();
        let right = tensor(&a, &tensor(&b, &c).unwrap()).unwrap();
        prop_assert_eq!(left.space(), right.space());
        for i in 0..12 {
            for j in 0..12 {
                prop_assert!((left.get(i, j) - right.get(i, j)).norm() <= 1e-15);
            }
        }
    }
}

proptest! {
    #![proptest_config(config(12))]

    #[test]
    fn gaussian_purity_matches_fock_purity(
        alpha in (-1.0f64..1.0, -1.0f64..1.0),
        phi in -0.78f64..0.78,
        r in 0.0f64..0.7,
        n in prop_oneof![Just(0.0f64), 0.0f64..1.0],
    ) {
        let gs = GaussianState::compose(&GaussianDecomposition { alpha: c64::new(alpha.0, alpha.1), phi, r_tilde: r, n_tilde: n }).unwrap();
        let rho = gs.to_fock(HilbertSpace::field(90).unwrap()).unwrap();
        prop_assert!((rho.purity() - 1.0 / gs.det().sqrt()).abs() <= 1e-6);
        if n == 0.0 {
            prop_assert!((rho.purity() - 1.0).abs() <= 1e-6);
        }
    }

    #[test]
    fn wigner_moments_reproduce_operator_moments(
        alpha in (-1.5f64..1.5, -1.5f64..1.5),
        phi in -0.78f64..0.78,
        r in 0.0f64..0.6,
        n in 0.0f64..0.6,
    ) {
        let gs = GaussianState::compose(&GaussianDecomposition { alpha: c64::new(alpha.0, alpha.1), phi, r_tilde: r, n_tilde: n }).unwrap();
        let rho = gs.to_fock(HilbertSpace::field(90).unwrap()).unwrap();
        let grid = auto_grid(&rho, 96).unwrap();
        let w = wigner_from_density(&rho, &grid, Basis::ModeA, 0.0).unwrap();
        prop_assert!((w.integral() - 1.0).abs() <= 1e-3);
        let (mean, cov) = w.moments();
        let a = expectation(&annihilation(rho.space()).unwrap(), &rho).unwrap();
        prop_assert!((mean[0] - 2.0 * a.re).abs() <= 1e-3);
        prop_assert!((mean[1] - 2.0 * a.im).abs() <= 1e-3);
        let want = gs.cov();
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!((cov[i][j] - want[i][j]).abs() <= 1e-3);
            }
        }
    }

    #[test]
    fn ansatz_moments_and_quadrature_convergence(
        f_mag in 0.0f64..2.0,
        cp in prop_oneof![Just(0.0f64), 0.01f64..20.0],
        r in 0.0f64..1.0,
    ) {
        let space = HilbertSpace::field(90).unwrap();
        let rho = mf_ansatz(f_mag, cp, r, space, 64).unwrap();
        let a = expectation(&annihilation(space).unwrap(), &rho).unwrap();
        prop_assert!(a.norm() <= 1e-12);
        let single = gaussian_mf_solution(c64::new(f_mag, 0.0), cp, r).unwrap();
        let n = expectation(&number(space).unwrap(), &rho).unwrap().re;
        prop_assert!((n - single.photon_number()).abs() <= 1e-8 * (1.0 + n));
        let finer = mf_ansatz(f_mag, cp, r, space, 128).unwrap();
        prop_assert!(trace_distance(&rho, &finer).unwrap() < 1e-8);
    }
}

#[test]
fn photon_number_is_continuous_with_a_kink_at_threshold() {
    let n = |c: f64| mf_photon_number(&MFParams::from_cooperativity(c, 1.0, 0.1, 2.0).unwrap());
    let h = 1e-6;
    assert_eq!(n(1.0 - h), 0.0);
    assert!(n(1.0 + h) < 1e-4);
    let left = (n(1.0) - n(1.0 - h)) / h;
    let right = (n(1.0 + h) - n(1.0)) / h;
    assert!(left.abs() < 1e-9);
    // γ/(2κ(1+C′)) at threshold
    assert!((right - 1.0 / (2.0 * 0.1 * 3.0)).abs() < 1e-4, "slope {right}");
}

fn superoperator_conjugation(space: HilbertSpace) -> Mat<c64> {
    // X = σx ⊗ 1; ρ ↦ X ρ X in column-major vectorization is X̄ ⊗ X = X ⊗ X
    let (s, _, _) = qubit_ops(space, 0).unwrap();
    let x = (&s + &s.adjoint()).into_matrix();
    let d = space.dim();
    Mat::from_fn(d * d, d * d, |r, c| x[(r % d, c % d)] * x[(r / d, c / d)])
}

#[test]
fn spin_flip_maps_single_qubit_laser_to_pumped_laser() {
    let space = HilbertSpace::new(1, 6).unwrap();
    let (g, gamma, kappa) = (0.7, 1.3, 0.4);
    let l1 = liouvillian_matrix(&model_single_qubit_laser(g, gamma, kappa, space).unwrap())
        .unwrap()
        .to_dense()
        .unwrap();
    let l2 = liouvillian_matrix(&model_pumped_laser(g, gamma, kappa, space).unwrap())
        .unwrap()
        .to_dense()
        .unwrap();
    let p = superoperator_conjugation(space);
    let conj = &(&p * &l1) * &p;
    let n = l1.nrows();
    for i in 0..n {
        for j in 0..n {
            assert!((conj[(i, j)] - l2[(i, j)]).norm() < 1e-12);
        }
    }
    let e1 = l1.eigenvalues().unwrap();
    let mut e2 = l2.eigenvalues().unwrap();
    assert_eq!(e1.len(), e2.len());
    for z in e1 {
        let k = (0..e2.len())
            .min_by(|&a, &b| (e2[a] - z).norm().total_cmp(&(e2[b] - z).norm()))
            .unwrap();
        assert!((e2[k] - z).norm() < 1e-8, "unmatched eigenvalue {z}");
        e2.swap_remove(k);
    }
}
