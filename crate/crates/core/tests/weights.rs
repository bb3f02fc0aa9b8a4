use std::cmp::Ordering;

use dashu::integer::{IBig, UBig};
use dashu::rational::RBig;
use proptest::prelude::*;
use qsmetric_core::cube::{zone_counts_closed, zone_counts_enumerated, CubeAddress};
use qsmetric_core::weight::{cube_weight, face_weight, weight_exponents, Face};
use qsmetric_core::Params;

/// `(M - 2n + 1)^a L^-b` straight from the definition.
fn value(p: &Params, a: u32, b: u32, l: &RBig) -> RBig {
    let s = RBig::from(p.boost());
    let mut v = RBig::ONE;
    for _ in 0..a {
        v *= s.clone();
    }
    for _ in 0..b {
        v /= l.clone();
    }
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn capped_weights_never_exceed_the_boost(
        (n, m) in (2usize..=3).prop_flat_map(|n| (Just(n), (2 * n as u32 + 2)..=16)),
        l_extra in 0u32..=30,
        raw in prop::collection::vec(prop::collection::vec(any::<u32>(), 3), 0..=12),
    ) {
        let l = m + l_extra;
        let p = Params::with_l(n, m, RBig::from(l), true).unwrap();
        let digits: Vec<Vec<u32>> = raw.iter().map(|d| d[..n].iter().map(|c| c % m).collect()).collect();
        let w = weight_exponents(&p, &digits).unwrap();
        let lr = RBig::from(l);
        prop_assert!(value(&p, w.a, w.b, &lr) <= RBig::from(p.boost()));
        // once frozen, later digits change nothing
        let mut prefix = Vec::new();
        let mut frozen_at = None;
        for (i, d) in digits.iter().enumerate() {
            prefix.push(d.clone());
            let wp = weight_exponents(&p, &prefix).unwrap();
            prop_assert!(wp.a as i64 - wp.b as i64 <= 1);
            if wp.frozen && frozen_at.is_none() {
                frozen_at = Some((i, wp));
            }
            if let Some((_, f)) = frozen_at {
                prop_assert_eq!((wp.a, wp.b, wp.frozen), (f.a, f.b, true));
            }
        }
    }

    #[test]
    fn neighbour_ratio_is_within_r(
        n in 2usize..=3,
        extra in 1u32..=10,
        l_num in 2u64..=60,
        l_den in 1u64..=3,
        k in 1u32..=4,
        raw in prop::collection::vec(any::<u64>(), 3),
        dir in prop::collection::vec(-1i64..=1, 3),
    ) {
        let m = 2 * n as u32 + extra;
        let l = RBig::from_parts(IBig::from(l_num), UBig::from(l_den));
        prop_assume!(l > RBig::ONE);
        let p = Params::with_l(n, m, l.clone(), false).unwrap();
        let side = (m as u64).pow(k);
        let a: Vec<u64> = raw[..n].iter().map(|r| r % side).collect();
        let b: Vec<u64> = a.iter().zip(&dir).map(|(&c, &d)| (c as i64 + d).clamp(0, side as i64 - 1) as u64).collect();
        let wa = cube_weight(&p, &CubeAddress { level: k, index: a });
        let wb = cube_weight(&p, &CubeAddress { level: k, index: b });
        let ratio = value(&p, wa.a, wa.b, &l) / value(&p, wb.a, wb.b, &l);
        let r = l * RBig::from(p.boost());
        prop_assert!(ratio <= r.clone() && ratio * r >= RBig::ONE);
    }

    #[test]
    fn face_weight_is_the_smallest_incident_weight(
        m in 6u32..=12,
        k in 1u32..=3,
        x in any::<u64>(),
        y in any::<u64>(),
        axis in 0usize..2,
    ) {
        let p = Params::with_l(2, m, RBig::from(m), false).unwrap();
        let side = (m as u64).pow(k);
        let mut origin = vec![x % side, y % side];
        origin[axis] %= side + 1;
        let spans: Vec<bool> = (0..2).map(|i| i != axis).collect();
        let face = Face { level: k, origin, spans };
        let w = face_weight(&p, &face).unwrap();
        for c in face.incident_cubes(&p).unwrap() {
            prop_assert_ne!(w.cmp_value(&cube_weight(&p, &c), &p), Ordering::Greater);
        }
    }
}

#[test]
fn zone_counts_match_closed_forms() {
    for n in 2..=3usize {
        for m in 8..=20u32 {
            let p = Params::with_l(n, m, RBig::from(8u8), false).unwrap();
            let (mf, nf) = (m as u64, n as u32);
            let closed = (
                mf.pow(nf) - (mf - 2).pow(nf),
                (mf - 2).pow(nf) - (mf - 2 * n as u64).pow(nf),
                (mf - 2 * n as u64).pow(nf),
            );
            assert_eq!(zone_counts_enumerated(&p), closed);
            assert_eq!(zone_counts_closed(&p), closed);
        }
    }
}
