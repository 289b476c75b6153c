use anisobbm::fields::{psi, Field, Potential, Region};
use anisobbm::{ConvexBody, MomentMethod, MomentNormEvaluator};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bodies() -> Vec<ConvexBody> {
    vec![
        ConvexBody::ball(2, 1.3).unwrap(),
        ConvexBody::cube(2, 0.7).unwrap(),
        ConvexBody::ellipsoid_axes(&[2.0, 1.0]).unwrap(),
        ConvexBody::regular_polygon(6, 1.0).unwrap(),
        ConvexBody::lq_ball(2, 3.0).unwrap(),
        ConvexBody::ball(3, 1.0).unwrap(),
        ConvexBody::cube(3, 1.0).unwrap(),
        ConvexBody::ellipsoid_axes(&[1.0, 2.0, 0.5]).unwrap(),
    ]
}

fn vec3() -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(-5.0..5.0f64)
}

fn cut(v: &[f64; 3], dim: usize) -> &[f64] {
    &v[..dim]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn gauge_is_a_norm(x in vec3(), y in vec3(), lam in -4.0..4.0f64) {
        for k in bodies() {
            let d = k.dim();
            let (x, y) = (cut(&x, d), cut(&y, d));
            let gx = k.gauge(x).unwrap();
            let sx: Vec<f64> = x.iter().map(|v| lam * v).collect();
            prop_assert!((k.gauge(&sx).unwrap() - lam.abs() * gx).abs() <= 1e-12 * (1.0 + gx * lam.abs()));
            let s: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
            prop_assert!(k.gauge(&s).unwrap() <= gx + k.gauge(y).unwrap() + 1e-12);
            let (r_in, r_out) = k.bounding_radii();
            let e = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!(e / r_out <= gx + 1e-12 && gx <= e / r_in + 1e-12);
        }
    }

    #[test]
    fn moment_norm_is_a_norm(re in vec3(), im in vec3(), re2 in vec3(), lam in -3.0..3.0f64, pi in 0usize..3) {
        let p = [1.0, 2.0, 3.0][pi];
        for k in [ConvexBody::cube(2, 1.0).unwrap(), ConvexBody::ellipsoid_axes(&[2.0, 1.0]).unwrap()] {
            let ev = MomentNormEvaluator::new(k, p, MomentMethod::SphereQuadrature { nodes: 256 }).unwrap();
            let v: Vec<Complex64> = (0..2).map(|j| Complex64::new(re[j], im[j])).collect();
            let w: Vec<Complex64> = (0..2).map(|j| Complex64::new(re2[j], -im[j])).collect();
            let nv = ev.moment_norm(&v).unwrap().value;
            let lv: Vec<Complex64> = v.iter().map(|c| c * lam).collect();
            prop_assert!((ev.moment_norm(&lv).unwrap().value - lam.abs() * nv).abs() <= 1e-10 * (1.0 + nv));
            let s: Vec<Complex64> = v.iter().zip(&w).map(|(a, b)| a + b).collect();
            prop_assert!(ev.moment_norm(&s).unwrap().value <= nv + ev.moment_norm(&w).unwrap().value + 1e-10);
        }
    }
}

#[test]
fn membership_agrees_with_gauge() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for k in bodies() {
        let (_, r_out) = k.bounding_radii();
        for _ in 0..10_000 {
            let x: Vec<f64> = (0..k.dim()).map(|_| rng.random_range(-1.5 * r_out..1.5 * r_out)).collect();
            let g = k.gauge(&x).unwrap();
            if (g - 1.0).abs() > 1e-12 {
                assert_eq!(k.contains(&x).unwrap(), g <= 1.0, "{:?} at {x:?}", k.shape());
            }
        }
    }
}

#[test]
fn uniform_samples_have_ball_moments() {
    // E|x|^2 = N r^2 / (N + 2) for the uniform law on a ball of radius r.
    for dim in 1..=3 {
        let r = 1.7;
        let k = ConvexBody::ball(dim, r).unwrap();
        let pts = k.sample_uniform(40_000, 9).unwrap();
        let n = pts.len() as f64;
        let sq: Vec<f64> = pts.iter().map(|x| x.iter().map(|v| v * v).sum()).collect();
        let mean = sq.iter().sum::<f64>() / n;
        let var = sq.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let want = dim as f64 * r * r / (dim as f64 + 2.0);
        assert!((mean - want).abs() < 4.0 * (var / n).sqrt(), "N={dim}: {mean} vs {want}");
        for j in 0..dim {
            let m = pts.iter().map(|x| x[j]).sum::<f64>() / n;
            assert!(m.abs() < 4.0 * r / n.sqrt());
        }
        assert!(pts.iter().all(|x| k.contains(x).unwrap()));
    }
}

#[test]
fn sampling_is_deterministic_per_seed() {
    let k = ConvexBody::regular_polygon(6, 1.0).unwrap();
    assert_eq!(k.sample_uniform(100, 3).unwrap(), k.sample_uniform(100, 3).unwrap());
    assert_ne!(k.sample_uniform(100, 3).unwrap(), k.sample_uniform(100, 4).unwrap());
}

#[test]
fn gauge_phase_inequality() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let fields = [Field::gaussian(2), Field::modulated_gaussian(vec![1.0, -2.0]), Field::bump(2)];
    let pots = [
        Potential::rotational(1.5).unwrap(),
        Potential::constant(vec![0.3, -1.0]).unwrap(),
        Potential::linear(2, vec![0.0, 1.0, 2.0, -0.5]).unwrap(),
    ];
    for u in &fields {
        for a in &pots {
            for _ in 0..2000 {
                let x = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
                let y = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
                let lhs = (psi(u, a, &x, &y).unwrap() - psi(u, a, &x, &x).unwrap()).norm();
                let mid = [0.5 * (x[0] + y[0]), 0.5 * (x[1] + y[1])];
                let phase = a.dot_at(&[x[0] - y[0], x[1] - y[1]], &mid).abs();
                let ux = u.value(&x).unwrap();
                let rhs = (u.value(&y).unwrap() - ux).norm() + ux.norm() * phase;
                assert!(lhs <= rhs + 1e-12, "{lhs} > {rhs}");
            }
        }
    }
}

#[test]
fn gradients_match_central_differences_at_second_order() {
    let region = Region::aligned_box(&[-0.5, -0.5], &[0.5, 0.5]).unwrap();
    let fields = [
        Field::gaussian(2),
        Field::modulated_gaussian(vec![1.0, 0.5]),
        Field::bump(2),
        Field::gaussian(2).mollify(4).unwrap(),
        Field::indicator(region, 1.0).mollify(8).unwrap(),
    ];
    let x = [0.31, -0.27];
    for u in &fields {
        let g = u.gradient(&x).unwrap();
        let err = |h: f64| -> f64 {
            (0..2)
                .map(|j| {
                    let mut a = x;
                    let mut b = x;
                    a[j] += h;
                    b[j] -= h;
                    ((u.value(&a).unwrap() - u.value(&b).unwrap()) / (2.0 * h) - g[j]).norm()
                })
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(2e-3), err(1e-3));
        assert!(e2 < 1e-4, "{u:?}: {e2}");
        let ratio = e1 / e2;
        assert!((3.0..5.0).contains(&ratio) || e1 < 1e-9, "{u:?}: ratio {ratio} ({e1}, {e2})");
    }
}
