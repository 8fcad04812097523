use fano_core::dims::{self, FanoParams, MultiDegree};
use fano_core::exactla::{Field, Matrix, PrimeField, Rationals};
use fano_core::fano::{quadric_tangent_equations, tangent_system};
use fano_core::forms::{
    complete_rank_r, form_of, gram_of, monomials, random_rank_r_vanishing_quadric,
    random_vanishing_form, restrict_to_plane, vanishes_on, GramMatrix, PolySystem,
};
use fano_core::grass::{
    canonicalize, chart_plane, enumerate_planes, gaussian_binomial, intersection_dim, random_plane,
    ChartPoint, Plane,
};
use num_rational::BigRational;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn int_matrix(r: &mut ChaCha8Rng, rows: usize, cols: usize, bound: i64) -> Vec<Vec<i64>> {
    (0..rows)
        .map(|_| (0..cols).map(|_| r.gen_range(-bound..=bound)).collect())
        .collect()
}

/// Integer matrix of prescribed rank: a product of random factors.
fn low_rank(r: &mut ChaCha8Rng, rows: usize, cols: usize, rank: usize) -> Vec<Vec<i64>> {
    let a = int_matrix(r, rows, rank, 4);
    let b = int_matrix(r, rank, cols, 4);
    (0..rows)
        .map(|i| {
            (0..cols)
                .map(|j| (0..rank).map(|t| a[i][t] * b[t][j]).sum())
                .collect()
        })
        .collect()
}

fn invertible<F: Field>(f: &F, r: &mut ChaCha8Rng, dim: usize) -> Matrix<F> {
    loop {
        let m = Matrix::from_i64_rows(f, &int_matrix(r, dim, dim, 5));
        if m.inverse().is_some() {
            return m;
        }
    }
}

fn params(n: i64, k: i64, d: &[u32]) -> FanoParams {
    FanoParams::new(n, k, MultiDegree::new(d.to_vec()).unwrap()).unwrap()
}

fn multidegree() -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(2u32..=4, 1..=5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn strata_endpoints(n in 2i64..=12, kk in 0i64..12, d in multidegree()) {
        let k = kk % n;
        let p = params(n, k, &d);
        prop_assert_eq!(dims::delta_strat(&p, -1).unwrap(), dims::delta(&p).unwrap());
        prop_assert_eq!(dims::delta_strat(&p, k).unwrap(), 0);
    }

    #[test]
    fn differences_are_finite_differences_and_convex(n in 2i64..=12, kk in 0i64..12, d in multidegree()) {
        let k = kk % n;
        prop_assume!(d != [2]);
        let p = params(n, k, &d);
        for kp in -1..k {
            let step = dims::delta_strat(&p, kp + 1).unwrap() - dims::delta_strat(&p, kp).unwrap();
            prop_assert_eq!(dims::first_difference(&p, kp).unwrap(), step);
        }
        for kp in -1..k - 1 {
            let second = dims::delta_strat(&p, kp + 2).unwrap() - 2 * dims::delta_strat(&p, kp + 1).unwrap() + dims::delta_strat(&p, kp).unwrap();
            prop_assert_eq!(dims::second_difference(&p, kp).unwrap(), second);
            prop_assert!(second >= 0);
        }
    }

    #[test]
    fn incidence_identity(n in 2i64..=12, kk in 0i64..12, d in multidegree()) {
        let k = kk % n;
        let p = params(n, k, &d);
        for row in dims::stratification_table(&p).unwrap() {
            let kp = row.k_prime as i128;
            let (n, k) = (n as i128, k as i128);
            prop_assert_eq!((k + 1) * (n - k) - (kp + 1) * (n - 2 * k + kp), (k - kp) * (n - k + kp + 1));
            prop_assert_eq!(row.incidence_dim - row.vanishing_space_dim, row.expected_dim);
        }
    }

    #[test]
    fn identifiability_is_monotone(n in 2i64..=12, kk in 0i64..12, d in multidegree(), extra in 2u32..=4) {
        let k = kk % n;
        prop_assume!(d != [2]);
        let p = params(n, k, &d);
        prop_assert_eq!(dims::identifiable(&p).unwrap(), dims::delta(&p).unwrap() < 0);
        let mut longer = d.clone();
        longer.push(extra);
        if dims::identifiable(&p).unwrap() {
            prop_assert!(dims::identifiable(&params(n, k, &longer)).unwrap());
        }
    }

    #[test]
    fn rank_nullity(seed in any::<u64>(), rows in 1usize..7, cols in 1usize..7) {
        let mut r = rng(seed);
        let m = Matrix::from_i64_rows(&Rationals, &int_matrix(&mut r, rows, cols, 3));
        prop_assert_eq!(m.rank() + m.nullspace().rows(), cols);
        prop_assert!(m.mul(&m.nullspace().transpose()).is_zero());
    }

    #[test]
    fn canonical_form_ignores_row_mixing(seed in any::<u64>(), n in 1usize..6, kk in 0usize..6, q in prop::sample::select(vec![3u64, 5, 7, 11])) {
        let k = kk % n;
        let mut r = rng(seed);
        let f = PrimeField::new(q).unwrap();
        let l = random_plane(&f, n, k, q as i64, &mut r).unwrap();
        let mixed = invertible(&f, &mut r, k + 1).mul(l.basis());
        prop_assert_eq!(canonicalize(&mixed).unwrap(), l.clone());
        let lq = random_plane(&Rationals, n, k, 5, &mut r).unwrap();
        let mixed = invertible(&Rationals, &mut r, k + 1).mul(lq.basis());
        prop_assert_eq!(canonicalize(&mixed).unwrap(), lq);
    }

    #[test]
    fn intersection_dim_symmetric_and_bounded(seed in any::<u64>(), n in 1usize..6, k1 in 0usize..6, k2 in 0usize..6) {
        let (k1, k2) = (k1 % n, k2 % n);
        let mut r = rng(seed);
        let f = PrimeField::new(3).unwrap();
        let a = random_plane(&f, n, k1, 2, &mut r).unwrap();
        let b = random_plane(&f, n, k2, 2, &mut r).unwrap();
        let ab = intersection_dim(&a, &b).unwrap();
        prop_assert_eq!(ab, intersection_dim(&b, &a).unwrap());
        prop_assert!(ab <= k1.min(k2) as i64);
        prop_assert!(ab >= -1);
        if k1 == k2 {
            prop_assert_eq!(ab == k1 as i64, a == b);
        }
        prop_assert_eq!(intersection_dim(&a, &a).unwrap(), k1 as i64);
    }

    #[test]
    fn chart_rank_sets_intersection(seed in any::<u64>(), n in 2usize..7, kk in 0usize..6, rank in 0usize..4) {
        let k = kk % n;
        let mut r = rng(seed);
        let base = random_plane(&Rationals, n, k, 3, &mut r).unwrap();
        let rank = rank.min(k + 1).min(n - k);
        let x = Matrix::from_i64_rows(&Rationals, &low_rank(&mut r, k + 1, n - k, rank));
        let xr = x.rank();
        let plane = chart_plane(&ChartPoint { base: base.clone(), x: x.clone() }).unwrap();
        prop_assert_eq!(intersection_dim(&plane, &base).unwrap(), k as i64 - xr as i64);
        let zero = Matrix::zeros(&Rationals, k + 1, n - k);
        prop_assert_eq!(chart_plane(&ChartPoint { base: base.clone(), x: zero }).unwrap(), base);
    }

    #[test]
    fn vanishing_block_characterization(seed in any::<u64>(), n in 2usize..7, kk in 0usize..6, zero_block in any::<bool>()) {
        let k = kk % n;
        let mut r = rng(seed);
        let mut g = int_matrix(&mut r, n + 1, n + 1, 3);
        for i in 0..=n {
            for j in 0..i {
                g[i][j] = g[j][i];
            }
        }
        if zero_block {
            for row in g.iter_mut().take(k + 1) {
                row[..=k].fill(0);
            }
        }
        let block_zero = (0..=k).all(|i| (0..=k).all(|j| g[i][j] == 0));
        let q = GramMatrix::new(Matrix::from_i64_rows(&Rationals, &g)).unwrap();
        let plane = Plane::coordinate(&Rationals, n, k).unwrap();
        prop_assert_eq!(vanishes_on(&form_of(&q).unwrap(), &plane).unwrap(), block_zero);
    }

    #[test]
    fn vanishing_is_invariant_under_change_of_basis(seed in any::<u64>(), n in 2usize..6, kk in 0usize..5, d in 2u32..4, planted in any::<bool>()) {
        let k = kk % n;
        let mut r = rng(seed);
        let f = Rationals;
        let l = random_plane(&f, n, k, 3, &mut r).unwrap();
        let form = if planted {
            random_vanishing_form(&f, n, d, &l, 5, &mut r).unwrap()
        } else {
            random_vanishing_form(&f, n, d, &random_plane(&f, n, k, 3, &mut r).unwrap(), 5, &mut r).unwrap()
        };
        // (f o T)(x) = f(x T); the plane with basis B moves to B T^{-1}.
        let t = invertible(&f, &mut r, n + 1);
        let moved_form = form.substitute(&t).unwrap();
        let moved_plane = canonicalize(&l.basis().mul(&t.inverse().unwrap())).unwrap();
        let before = restrict_to_plane(&form, &l).unwrap().iter().all(|c| f.is_zero(c));
        let after = restrict_to_plane(&moved_form, &moved_plane).unwrap().iter().all(|c| f.is_zero(c));
        prop_assert_eq!(before, after);
        if planted {
            prop_assert!(before);
        }
    }

    #[test]
    fn tangent_system_shape(seed in any::<u64>(), n in 2usize..7, kk in 0usize..3, d in prop::collection::vec(2u32..=3, 1..4)) {
        let k = kk % n;
        let mut r = rng(seed);
        let f = PrimeField::new(1009).unwrap();
        let l = random_plane(&f, n, k, 50, &mut r).unwrap();
        let forms = d.iter().map(|&di| random_vanishing_form(&f, n, di, &l, 100, &mut r).unwrap()).collect();
        let ts = tangent_system(&PolySystem::new(forms).unwrap(), &l).unwrap();
        let rows: i128 = dims::multidegree_binom(&MultiDegree::new(d.clone()).unwrap(), k as i64).unwrap();
        prop_assert_eq!(ts.matrix.rows() as i128, rows);
        prop_assert_eq!(ts.matrix.cols(), (k + 1) * (n - k));
    }
}

#[test]
fn thresholds_are_dominated() {
    for n in 2..=64 {
        for k in 1..n {
            let th = dims::min_epoch_differences(n, k).unwrap();
            assert!(
                th.delta_based <= th.sharp_closed_form,
                "(n, k) = ({n}, {k})"
            );
        }
    }
}

#[test]
fn rref_corpus_is_idempotent_and_agrees_mod_p() {
    let fp = PrimeField::new(1009).unwrap();
    let (mut cases, mut agree) = (0, 0);
    for seed in 0..1000u64 {
        let mut r = rng(seed);
        let (rows, cols) = (r.gen_range(1..7), r.gen_range(1..7));
        let rank = r.gen_range(0..=rows.min(cols));
        let ints = if seed % 2 == 0 {
            low_rank(&mut r, rows, cols, rank)
        } else {
            int_matrix(&mut r, rows, cols, 1000)
        };
        let m = Matrix::from_i64_rows(&Rationals, &ints);
        let (e, pivots) = m.rref();
        let (e2, pivots2) = e.rref();
        assert_eq!((&e, &pivots), (&e2, &pivots2), "seed {seed}");
        assert_eq!(e.rank(), m.rank());
        assert_eq!(pivots.len(), m.rank());
        let mp = Matrix::from_i64_rows(&fp, &ints);
        let (ep, _) = mp.rref();
        assert_eq!(ep.rref().0, ep);
        cases += 1;
        match m.rank().cmp(&mp.rank()) {
            std::cmp::Ordering::Equal => agree += 1,
            std::cmp::Ordering::Greater => {}
            std::cmp::Ordering::Less => {
                panic!("rank over F_1009 exceeds rank over Q at seed {seed}")
            }
        }
    }
    assert!(agree * 100 >= cases * 99, "{agree}/{cases}");
}

#[test]
fn vanishing_forms_exclude_exactly_the_plane_monomials() {
    let mut r = rng(11);
    for draw in 0..500 {
        let n = r.gen_range(1..=8);
        let k = r.gen_range(0..=2usize.min(n - 1));
        let d = r.gen_range(1..=4u32);
        let coordinate = draw % 2 == 0;
        let f = PrimeField::new(1_000_003).unwrap();
        let l = if coordinate {
            Plane::coordinate(&f, n, k).unwrap()
        } else {
            random_plane(&f, n, k, 9, &mut r).unwrap()
        };
        let form = random_vanishing_form(&f, n, d, &l, 1000, &mut r).unwrap();
        assert!(
            restrict_to_plane(&form, &l)
                .unwrap()
                .iter()
                .all(|c| *c == 0),
            "draw {draw}"
        );
        if coordinate {
            let excluded = monomials(n + 1, d).len() - form.num_terms();
            let expected = if d >= 2 {
                dims::multidegree_binom(&MultiDegree::new(vec![d]).unwrap(), k as i64).unwrap()
            } else {
                (k + 1) as i128
            };
            assert_eq!(excluded as i128, expected, "draw {draw}");
        }
    }
}

/// Every `(r+1) x (r+1)` minor vanishes exactly.
fn random_minors_vanish(g: &Matrix<Rationals>, r: usize, rng: &mut ChaCha8Rng) -> bool {
    let dim = g.rows();
    (0..20).all(|_| {
        let mut rows: Vec<usize> = (0..dim).collect();
        let mut cols: Vec<usize> = (0..dim).collect();
        for v in [&mut rows, &mut cols] {
            for i in (1..v.len()).rev() {
                v.swap(i, rng.gen_range(0..=i));
            }
            v.truncate(r + 1);
            v.sort_unstable();
        }
        g.submatrix(&rows, &cols).det() == BigRational::from_integer(0.into())
    })
}

#[test]
fn rank_completion_is_exact() {
    let mut r = rng(12);
    let mut draws = 0;
    while draws < 500 {
        let n = r.gen_range(3..=7usize);
        let k = r.gen_range(0..=((n - 1) / 2).min(2));
        let lo = 2 * k + 2;
        if lo > n {
            continue;
        }
        let rank = r.gen_range(lo..=n);
        let l = if draws % 3 == 0 {
            Plane::coordinate(&Rationals, n, k).unwrap()
        } else {
            random_plane(&Rationals, n, k, 3, &mut r).unwrap()
        };
        let q = random_rank_r_vanishing_quadric(&Rationals, n, rank, &l, 9, &mut r).unwrap();
        assert!(q.matrix().is_symmetric());
        assert_eq!(q.rank(), rank);
        assert!(vanishes_on(&form_of(&q).unwrap(), &l).unwrap());
        assert!(random_minors_vanish(q.matrix(), rank, &mut r));
        draws += 1;
    }
    let partial = Matrix::from_i64_rows(&Rationals, &[vec![1, 2, 0], vec![2, 5, 1], vec![0, 1, 0]]);
    let g = complete_rank_r(&partial, 2).unwrap();
    assert_eq!(g.rank(), 2);
}

#[test]
fn general_and_direct_quadric_tangent_matrices_agree() {
    for seed in 0..200u64 {
        let mut r = rng(seed);
        let n = r.gen_range(2..=6usize);
        let k = r.gen_range(0..n.min(3));
        let s = r.gen_range(1..=3usize);
        let f = PrimeField::new(10_007).unwrap();
        let l = random_plane(&f, n, k, 50, &mut r).unwrap();
        let forms: Vec<_> = (0..s)
            .map(|_| random_vanishing_form(&f, n, 2, &l, 1000, &mut r).unwrap())
            .collect();
        let grams: Vec<_> = forms.iter().map(|q| gram_of(q).unwrap()).collect();
        let general = tangent_system(&PolySystem::new(forms).unwrap(), &l)
            .unwrap()
            .matrix;
        let direct = quadric_tangent_equations(&grams, &l).unwrap();
        assert_eq!(general.rank(), direct.rank(), "seed {seed}");
        assert_eq!(general.vstack(&direct).rank(), direct.rank(), "seed {seed}");
    }
}

#[test]
fn rank_constrained_instances_keep_full_tangent_rank() {
    for (n, k, s) in [(5usize, 1usize, 3usize), (3, 0, 4), (7, 1, 5)] {
        let r_min = 2 * k + 2;
        let mut full = 0;
        for seed in 0..20u64 {
            let mut r = rng(1000 + seed);
            let l = Plane::coordinate(&Rationals, n, k).unwrap();
            let grams: Vec<_> = (0..s)
                .map(|_| {
                    random_rank_r_vanishing_quadric(&Rationals, n, r_min, &l, 9, &mut r).unwrap()
                })
                .collect();
            let sys = PolySystem::from_grams(&grams).unwrap();
            if tangent_system(&sys, &l).unwrap().tangent_dim() == 0 {
                full += 1;
            }
        }
        assert_eq!(full, 20, "(n, k, s) = ({n}, {k}, {s})");
    }
}

#[test]
fn enumeration_counts_and_distinctness() {
    for q in [3u64, 5, 7, 11] {
        for n in 1..=4usize {
            for k in 0..=2usize.min(n - 1) {
                let planes = enumerate_planes(n, k, q, 10_000_000).unwrap();
                assert_eq!(
                    planes.len() as u128,
                    gaussian_binomial(n as u32 + 1, k as u32 + 1, q)
                );
                let mut keys: Vec<_> = planes.iter().map(|p| p.basis().to_rows()).collect();
                keys.sort();
                keys.dedup();
                assert_eq!(keys.len(), planes.len());
            }
        }
    }
}
