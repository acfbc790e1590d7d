use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hysfem::fem::{assemble_lumped_mass, assemble_mass, assemble_stiffness, error_norms, FeFunction, Mesh};

#[test]
fn step_matrix_on_free_nodes_is_positive_definite() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for dim in 1..=3 {
        let mesh = Mesh::uniform(dim, 4).unwrap();
        let a = assemble_mass(&mesh).add_scaled(&assemble_stiffness(&mesh), 0.05).unwrap();
        let free = mesh.free_nodes();
        for _ in 0..100 {
            let mut x = vec![0.0; mesh.num_vertices()];
            for &i in &free {
                x[i] = rng.gen_range(-1.0..1.0);
            }
            assert!(a.bilinear(&x, &x) > 0.0);
        }
        assert!(a.is_symmetric(1e-14));
    }
}

#[test]
fn mass_and_stiffness_invariants() {
    for dim in 1..=3 {
        let mesh = Mesh::uniform(dim, 3).unwrap();
        let m = assemble_mass(&mesh);
        let total: f64 = m.row_sums().iter().sum();
        assert!((total - 1.0).abs() < 1e-13, "dim {dim}: mass total {total}");
        let lumped = assemble_lumped_mass(&mesh);
        for (a, b) in lumped.iter().zip(m.row_sums()) {
            assert!((a - b).abs() < 1e-15);
        }
        for s in assemble_stiffness(&mesh).row_sums() {
            assert!(s.abs() < 1e-12, "dim {dim}: stiffness row sum {s}");
        }
    }
}

#[test]
fn prolongation_is_exact_for_integer_ratios() {
    // Nesting holds for any integer ratio, not only powers of two.
    let coarse = Mesh::uniform(3, 2).unwrap();
    let fine = Mesh::uniform(3, 6).unwrap();
    let vals: Vec<f64> = (0..coarse.num_vertices()).map(|i| ((i * 37) % 11) as f64).collect();
    let f = FeFunction::new(&coarse, &vals).unwrap();
    let up = f.prolong_to(&fine).unwrap();
    let g = FeFunction::new(&fine, &up).unwrap();
    assert_eq!(g.restrict_to(&coarse).unwrap(), vals);
    let norms = error_norms(&g, &f).unwrap();
    assert!(norms.l2 < 1e-13 && norms.h1 < 1e-12, "{norms:?}");
}

#[test]
fn l2_error_matches_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let coarse = Mesh::uniform(2, 3).unwrap();
    let fine = Mesh::uniform(2, 12).unwrap();
    let cv: Vec<f64> = (0..coarse.num_vertices()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let fv: Vec<f64> = (0..fine.num_vertices()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let (c, f) = (FeFunction::new(&coarse, &cv).unwrap(), FeFunction::new(&fine, &fv).unwrap());
    let exact = error_norms(&f, &c).unwrap().l2;
    let samples = 1_000_000;
    let mut sum = 0.0;
    for _ in 0..samples {
        let x = [rng.gen::<f64>(), rng.gen::<f64>()];
        let e = f.eval(&x) - c.eval(&x);
        sum += e * e;
    }
    let mc = (sum / samples as f64).sqrt();
    assert!((mc - exact).abs() <= 1e-3 * exact, "monte carlo {mc} vs exact {exact}");
}
