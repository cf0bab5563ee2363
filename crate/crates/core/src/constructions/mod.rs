//! Explicit block constructions and the digit sequences assembled from them.

mod builders;
mod diagnostics;
mod families;
mod spec;

pub use builders::{build_c, build_p, c_len, p_len, p_stream, p_stream_with, repetition_count, PStream, RepetitionFn};
pub use diagnostics::{
    bff_good_diagnostics, block_lengths, mff_nice_diagnostics, BffEntry, BffSpec, GoodRow, GoodTable, MffEntry,
    MffSpec, NiceRow, NiceTable, Trend,
};
pub use families::{
    qde_default, qde_literal_copies, qde_literal_width, qde_spec, qnex_default, qnex_literal_copies,
    qnex_literal_width, qnex_spec, salat_counterexample, salat_row_end,
};
pub use spec::{Assembly, BlockGen, ConstructionSpec, Segment, SegmentIndex, SegmentSpec, SpecFile};

#[cfg(test)]
mod tests {
    use num_bigint::BigUint;
    use num_rational::BigRational;

    use super::*;
    use crate::blocks::Digit;
    use crate::error::Error;
    use crate::exact::{self, pow2};
    use crate::limits::Limits;

    fn seg(l: u64, digits: &[Digit], base: u64) -> SegmentSpec {
        SegmentSpec {
            l,
            block: BlockGen::Explicit { digits: digits.to_vec() },
            base,
        }
    }

    fn unzip(spec: &ConstructionSpec, n: u64) -> (Vec<u64>, Vec<Digit>) {
        spec.assemble(n).unwrap().unzip()
    }

    #[test]
    fn single_segment() {
        let spec = ConstructionSpec::new(vec![seg(2, &[0, 1], 3)], &Limits::default()).unwrap();
        assert_eq!(unzip(&spec, 4), (vec![3; 4], vec![0, 1, 0, 1]));
        assert!(matches!(spec.assemble(5), Err(Error::NeedsMoreSegments { .. })));
    }

    #[test]
    fn empty_segments_are_skipped() {
        let limits = Limits::default();
        let with = ConstructionSpec::new(
            vec![seg(0, &[1], 2), seg(3, &[0, 1, 2], 3), seg(0, &[5], 7), seg(2, &[4, 0], 5)],
            &limits,
        )
        .unwrap();
        let without = ConstructionSpec::new(vec![seg(3, &[0, 1, 2], 3), seg(2, &[4, 0], 5)], &limits).unwrap();
        assert_eq!(with.len(), 13);
        assert_eq!(unzip(&with, 13), unzip(&without, 13));
        for n in 1..=13 {
            assert_eq!(with.digit_at(n).unwrap(), without.digit_at(n).unwrap());
            assert_eq!(with.base_at(n).unwrap(), without.base_at(n).unwrap());
        }
        let mid: Vec<_> = with.range(8, 11).unwrap().collect();
        assert_eq!(mid, unzip(&with, 11).0.into_iter().zip(unzip(&with, 11).1).skip(7).collect::<Vec<_>>());
    }

    #[test]
    fn prefix_stable() {
        let spec = qde_default(&Limits::default()).unwrap();
        let long = unzip(&spec, 5000);
        for n in [1, 17, 64, 65, 999] {
            let short = unzip(&spec, n);
            assert_eq!(short.0[..], long.0[..n as usize]);
            assert_eq!(short.1[..], long.1[..n as usize]);
        }
    }

    #[test]
    fn index_conventions() {
        let spec = ConstructionSpec::new(vec![seg(2, &[0, 1], 2), seg(1, &[2, 2, 2], 3)], &Limits::default()).unwrap();
        let l1 = spec.prefix_len(1);
        assert_eq!(l1, 4);
        assert_eq!(spec.segment_index(l1).unwrap().idef, 0);
        assert_eq!(spec.segment_index(l1 + 1).unwrap().idef, 1);
        // n + 1 = L_1
        assert_eq!(spec.segment_index(l1 - 1).unwrap().t0, Some(1));
        assert_eq!(spec.segment_index(l1).unwrap().t0, Some(2));
        assert_eq!(spec.segment_index(7).unwrap().t0, None);
        assert!(spec.segment_index(0).is_err());
        assert!(spec.segment_index(8).is_err());
    }

    #[test]
    fn rejects_bad_segments() {
        let limits = Limits::default();
        match ConstructionSpec::new(vec![seg(1, &[0, 3], 3)], &limits) {
            Err(Error::InvalidSpec(msg)) => assert!(msg.contains("segments[0].block"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(ConstructionSpec::new(vec![seg(1, &[0], 1)], &limits).is_err());
        assert!(ConstructionSpec::new(vec![], &limits).is_err());
        assert!(ConstructionSpec::from_json(r#"{"segments":[{"l":1,"base":2}]}"#, &limits).is_err());
    }

    #[test]
    fn json_round_trip() {
        let json = r#"{"segments":[{"l":0,"block":{"gen":"explicit","digits":[0,1]},"base":2},
            {"l":3,"block":{"gen":"C","b":3,"w":2},"base":3},
            {"l":1,"block":{"gen":"P","b":2,"w":1},"base":4}]}"#;
        let limits = Limits::default();
        let spec = ConstructionSpec::from_json(json, &limits).unwrap();
        assert_eq!(spec.len(), 3 * 18 + 4);
        let back = serde_json::to_string(&spec.to_spec_file()).unwrap();
        assert_eq!(ConstructionSpec::from_json(&back, &limits).unwrap(), spec);
    }

    #[test]
    fn qnex_scaled() {
        let spec = qnex_default(&Limits::default()).unwrap();
        let total: u64 = (6..=10).map(|i| 1u64 << (4 * i + 1)).sum();
        assert_eq!(spec.len(), total);
        assert_eq!(spec.base_at(1).unwrap(), 64);
        for (i, first, last) in spec.runs() {
            let i = i as u64;
            assert_eq!(spec.base_at(first).unwrap(), 1 << i);
            for n in [first, first + 1, (first + last) / 2, last] {
                assert!(u64::from(spec.digit_at(n).unwrap()) <= i);
            }
        }
    }

    #[test]
    fn literal_parameters_rejected() {
        let limits = Limits::default();
        let err = qnex_spec(6..=7, qnex_literal_width, qnex_literal_copies, &limits).unwrap_err();
        assert!(matches!(err, Error::SizeLimit { .. }));
        assert!(err.to_string().contains("infeasible"));
        let err = qde_spec(2..=5, qde_literal_width, qde_literal_copies, &limits).unwrap_err();
        assert!(matches!(err, Error::SizeLimit { .. }));
        assert!(qnex_spec(5..=7, |_| 2, |_| BigUint::from(1u32), &limits).is_err());
    }

    #[test]
    fn qde_scaled() {
        let spec = qde_default(&Limits::default()).unwrap();
        let expected: Vec<u64> = (2..=12u64).map(|i| i.pow(3) * 2 * i * i).collect();
        let spans: Vec<u64> = spec.segments().iter().skip(1).map(|s| s.span()).collect();
        assert_eq!(spans, expected);
        assert_eq!(spec.segment(1).unwrap().span(), 0);
        assert_eq!(spec.segment(5).unwrap().base(), 5);
        assert_eq!(spec.prefix_len(12), 1_261_414);
        assert!(spec.lengths_nondecreasing());
    }

    #[test]
    fn salat_prefix() {
        let (q, e) = salat_counterexample(10);
        assert_eq!(q, [2, 3, 3, 4, 4, 4, 5, 5, 5, 5]);
        assert_eq!(e.as_slice(), [1, 1, 2, 1, 2, 3, 1, 2, 3, 4]);
        let (q, e) = salat_counterexample(2000);
        assert!(e.iter().all(|&d| d != 0));
        assert!(q.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(salat_row_end(200), 20100);
    }

    fn qnex_family(i_max: u64) -> BffSpec {
        let early = [9, 8, 7, 6, 5].map(|t| exact::ratio(t, 10));
        BffSpec::qnex(i_max, |i| pow2(4 * i * i), early)
    }

    fn qnex_literal_lengths(i_max: u64) -> Vec<BigUint> {
        (1..=i_max)
            .map(|i| if i <= 5 { BigUint::from(2u32) } else { pow2(i * i * i) * (i * i) })
            .collect()
    }

    #[test]
    fn good_ratios_unscaled() {
        let table = bff_good_diagnostics(&qnex_family(8), &qnex_literal_lengths(8), 1, 7..=7).unwrap();
        let row = &table.rows[0];
        assert_eq!(row.r3, Some(exact::ratio(1, 49 * (1 << 14))));
        let r1 = exact::ratio(128 * 42, 49) / exact::from_biguint(&pow2(343));
        assert_eq!(row.r1, Some(r1));
        assert!(table.note.is_none());
    }

    #[test]
    fn good_ratios_k0_and_degenerate() {
        let table = bff_good_diagnostics(&qnex_family(9), &qnex_literal_lengths(9), 0, 6..=9).unwrap();
        assert!(table.note.is_some());
        for row in &table.rows {
            let i = row.i;
            let gap = exact::ratio(1, i - 1) - exact::ratio(1, i);
            let len = pow2(i * i * i) * (i * i);
            let expected: BigRational = exact::int(1) / (gap * exact::from_biguint(&len));
            if i == 6 {
                // ε_5 = 1/2 precedes ε_6 = 1/6
                assert_eq!(row.r1, Some(exact::int(1) / (exact::ratio(1, 3) * exact::from_biguint(&len))));
            } else {
                assert_eq!(row.r1, Some(expected));
            }
        }
        assert_eq!(table.rows[3].r3, None);

        let flat = BffSpec::unvalidated(
            1,
            (0..3)
                .map(|_| BffEntry {
                    l: BigUint::from(4u32),
                    b: 2,
                    p: 2,
                    eps: exact::ratio(1, 3),
                    k: 1,
                    weighting: crate::weightings::Weighting::Uniform { base: 2 },
                })
                .collect(),
        );
        let lens = vec![BigUint::from(2u32); 3];
        let table = bff_good_diagnostics(&flat, &lens, 1, 1..=3).unwrap();
        assert!(table.rows.iter().all(|r| r.r1.is_none()));
        assert!(flat.validate(1, &Limits::default()).is_err());
    }

    #[test]
    fn bff_validation() {
        let limits = Limits::default();
        qnex_family(8).validate(2, &limits).unwrap();
        let mut fam = qnex_family(8);
        fam.entries[6].eps = exact::ratio(1, 2);
        assert!(fam.validate(2, &limits).is_err_and(|e| e.to_string().contains("strictly decrease")));
        let mut fam = qnex_family(8);
        fam.entries[7].weighting = crate::weightings::Weighting::Nu { b: 7 };
        assert!(fam.validate(2, &limits).is_err_and(|e| e.to_string().contains("uniform")));
        let mut fam = qnex_family(8);
        fam.entries[2].b = 1;
        assert!(fam.validate(1, &limits).is_err());
    }

    #[test]
    fn nice_ratios_unscaled() {
        let fam = MffSpec::qde(2, 7, qde_literal_copies).unwrap();
        let lens: Vec<BigUint> = (1..=7u64)
            .map(|i| if i == 1 { BigUint::from(2u32) } else { c_len(i, i * i) })
            .collect();
        let table = mff_nice_diagnostics(&fam, &lens, 2..=6).unwrap();
        let r3 = &table.rows[1];
        assert_eq!(r3.i, 3);
        assert_eq!(r3.n1, Some(exact::ratio(4096, 1_162_261_467u64)));
        assert_eq!(r3.n2, Some(exact::ratio(68_719_476_736u64, 3_486_784_401u64)));
        // l_1 = 0 makes n1 at i = 2 vanish rather than divide by zero
        assert_eq!(table.rows[0].n1, Some(exact::int(0)));

        let flat = MffSpec::unvalidated(
            1,
            (1..=3)
                .map(|i| MffEntry {
                    l: BigUint::from(if i == 2 { 0u32 } else { 5 }),
                    b: 3,
                    eps: exact::ratio(1, i + 1),
                })
                .collect(),
        );
        let lens = vec![BigUint::from(6u32); 3];
        let table = mff_nice_diagnostics(&flat, &lens, 1..=3).unwrap();
        assert_eq!(table.rows[0].n2, Some(exact::ratio(1, 5)));
        assert_eq!(table.rows[1].n2, None);
        assert_eq!(table.rows[2].n2, None);
    }
}
