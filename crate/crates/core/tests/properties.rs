use std::sync::Arc;

use coclass_frame::frame::FrameGroup;
use coclass_frame::isom::{apply_move, verify_witness};
use coclass_frame::liering::jacobi_work_prec;
use coclass_frame::{CycElt, GammaCoeffs, IsoMove, LazardGroup, LieRingSpec, PrimeContext};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn spec(p: u64, i: u32, c: &[i64]) -> Arc<LieRingSpec> {
    let ctx = PrimeContext::new(p, jacobi_work_prec(p, i)).unwrap();
    LieRingSpec::full(&GammaCoeffs::from_ints(&ctx, i, c).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bracket_is_alternating_and_satisfies_jacobi(seed in any::<u64>()) {
        let s = spec(7, 9, &[1, 0]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, y, z) = (s.random(&mut rng), s.random(&mut rng), s.random(&mut rng));
        prop_assert!(x.bracket(&x).unwrap().is_zero());
        prop_assert_eq!(x.bracket(&y).unwrap(), y.bracket(&x).unwrap().neg());
        let j = x.bracket(&y.bracket(&z).unwrap()).unwrap()
            .add(&y.bracket(&z.bracket(&x).unwrap()).unwrap()).unwrap()
            .add(&z.bracket(&x.bracket(&y).unwrap()).unwrap()).unwrap();
        prop_assert!(j.is_zero());
    }

    #[test]
    fn lazard_group_laws(seed in any::<u64>()) {
        let s = spec(5, 7, &[2]);
        let g = LazardGroup::new(&s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, y, z) = (s.random(&mut rng), s.random(&mut rng), s.random(&mut rng));
        let l = g.bch_multiply(&g.bch_multiply(&x, &y).unwrap(), &z).unwrap();
        let r = g.bch_multiply(&x, &g.bch_multiply(&y, &z).unwrap()).unwrap();
        prop_assert_eq!(l, r);
        prop_assert_eq!(g.bch_multiply(&x, &g.inverse(&x)).unwrap(), g.identity());
        // commuting elements multiply additively
        prop_assert_eq!(g.bch_multiply(&x, &x.scale(3)).unwrap(), x.scale(4));
        prop_assert_eq!(g.group_commutator(&x, &y).unwrap(), g.group_commutator_closed(&x, &y).unwrap());
    }

    #[test]
    fn theta_acts_by_automorphisms(seed in any::<u64>()) {
        let s = spec(7, 8, &[1, 1]);
        let grp = FrameGroup::new(&s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = grp.random(&mut rng);
        let y = grp.random(&mut rng);
        let t = grp.theta_gen();
        let conj = |v| grp.s_multiply(&grp.s_multiply(&grp.s_inverse(&t), v).unwrap(), &t).unwrap();
        let xy = grp.s_multiply(&x, &y).unwrap();
        prop_assert_eq!(conj(&xy), grp.s_multiply(&conj(&x), &conj(&y)).unwrap());
        prop_assert_eq!(grp.s_power(&x, 7u64.pow(grp.order_exp())).unwrap(), grp.identity());
    }

    #[test]
    fn moves_give_isomorphisms(seed in any::<u64>(), k in 1i64..7) {
        let ctx = PrimeContext::new(7, jacobi_work_prec(7, 9)).unwrap();
        let g = GammaCoeffs::from_ints(&ctx, 9, &[1, 3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = CycElt::random_unit(&ctx, 5, &mut rng);
        let digits: Vec<i128> = u.digits().iter().map(|&d| d as i128).collect();
        let mv = IsoMove::new(CycElt::from_digits(&ctx, &digits, ctx.work_prec()).unwrap(), k).unwrap();
        let image = apply_move(&g, &mv, ctx.work_prec()).unwrap();
        let lam = coclass_frame::liering::jacobi_exponent(&g, 9).unwrap();
        prop_assert_eq!(coclass_frame::liering::jacobi_exponent(&image, 9).unwrap(), lam);
        prop_assert!(verify_witness(&g, &image, &mv, lam.bound()).unwrap());
        let back = apply_move(&image, &mv.inverse().unwrap(), ctx.work_prec()).unwrap();
        prop_assert!(verify_witness(&image, &back, &mv.inverse().unwrap(), lam.bound()).unwrap());
    }
}
