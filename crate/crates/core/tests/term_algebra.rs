mod common;

use std::collections::BTreeSet;

use common::gen::{atom, naive_analyzed, sequence, synthesized_up_to, term, term_set};

use proptest::prelude::*;
use secknow::term::{
    analyzed, derives, equivalent_views, parse_term, parts, pattern_view, pattern_view_with, KeysetMode, Knowledge, Pattern, Term,
    TermSet, TokenMode, ViewConfig,
};

fn has_tokens(view: &[Pattern]) -> bool {
    view.iter().any(Pattern::has_tokens)
}

fn mentions_k(t: &Term) -> bool {
    let mut found = false;
    t.for_each_subterm(&mut |s| found |= *s == Term::shared_key("k"));
    found
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn derives_agrees_with_enumeration(h in term_set(5), m in term(2)) {
        let base = naive_analyzed(&h);
        let expected = synthesized_up_to(&base, m.size()).contains(&m);
        prop_assert_eq!(derives(&h, &m), expected);
        prop_assert_eq!(Knowledge::new(&h).derives(&m), expected);
    }

    #[test]
    fn closure_laws(h in term_set(5), extra in term_set(3)) {
        let a = analyzed(&h);
        prop_assert_eq!(&a, &naive_analyzed(&h));
        prop_assert!(a.is_subset(&parts(&h)));
        prop_assert!(h.is_subset(&a));
        prop_assert_eq!(&analyzed(&a), &a);
        prop_assert_eq!(&parts(&parts(&h)), &parts(&h));
        let bigger: TermSet = h.union(&extra).cloned().collect();
        prop_assert!(a.is_subset(&analyzed(&bigger)));
        prop_assert!(parts(&h).is_subset(&parts(&bigger)));
        for t in &a {
            prop_assert!(derives(&h, t));
        }
        let mut k = Knowledge::new(&h);
        k.extend(extra.iter().cloned());
        prop_assert_eq!(k.analyzed(), &analyzed(&bigger));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn equivalent_views_is_an_equivalence(x in sequence(), y in sequence(), z in sequence()) {
        prop_assert!(equivalent_views(&x, &x));
        prop_assert_eq!(equivalent_views(&x, &y), equivalent_views(&y, &x));
        if equivalent_views(&x, &y) && equivalent_views(&y, &z) {
            prop_assert!(equivalent_views(&x, &z));
        }
    }

    #[test]
    fn renaming_an_unreadable_body_is_invisible(x in sequence(), body in term(1)) {
        // `k` never leaks into the sequence, so both ciphertexts stay sealed.
        let x: Vec<Term> = x.into_iter().filter(|t| !mentions_k(t)).collect();
        let sealed = |b: Term| {
            let mut v = x.clone();
            v.push(Term::enc(b, Term::shared_key("k")));
            v
        };
        prop_assert!(equivalent_views(&sealed(body), &sealed(Term::text("other"))));
    }

    #[test]
    fn known_keys_leave_no_tokens(ms in sequence(), private in prop::collection::vec(atom(), 0..4)) {
        let knowledge: TermSet = ms.iter().chain(&private).cloned().collect();
        let mut keys = BTreeSet::new();
        for m in &ms {
            m.for_each_subterm(&mut |t| {
                if let Term::Enc(_, k) = t {
                    keys.insert(k.decryption_key());
                }
            });
        }
        let view = pattern_view_with(&ms, &private, ViewConfig { keyset: KeysetMode::Analyzed, tokens: TokenMode::Unique });
        if keys.iter().all(|k| derives(&knowledge, k)) {
            prop_assert!(!has_tokens(&view));
        }
        if private.is_empty() {
            prop_assert_eq!(view, pattern_view(&ms, KeysetMode::Analyzed));
        }
    }

    #[test]
    fn terms_round_trip_through_text(t in term(3)) {
        prop_assert_eq!(parse_term(&t.to_string()).unwrap(), t);
    }
}
