//! Built-in models: card dealing with public announcements, and three
//! cryptographers sharing coins to announce an anonymous payment.

use std::collections::BTreeSet;

use super::formula::{Atom, Formula};
use super::model::{KripkeModel, PointData};

/// A hand or announced set of three cards, sorted.
pub type Triple = [u8; 3];

/// An announcement: seven triples, order irrelevant.
pub type Family = BTreeSet<Triple>;

pub const CARDS: u8 = 7;

fn triple(mut t: Triple) -> Triple {
    t.sort_unstable();
    t
}

fn permutations(items: &[u8]) -> Vec<Vec<u8>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head);
            out.push(p);
        }
    }
    out
}

/// The announcement built from `hand` and one ordering `w, x, y, z` of the
/// four other cards.
pub fn seven_hands(hand: Triple, wxyz: [u8; 4]) -> Family {
    let [a1, a2, a3] = hand;
    let [w, x, y, z] = wxyz;
    [[a1, a2, a3], [a1, w, x], [a1, y, z], [a2, w, y], [a2, x, z], [a3, w, z], [a3, x, y]].into_iter().map(triple).collect()
}

/// Every distinct announcement the holder of `hand` may make, over all 24
/// orderings of the cards it does not hold.
pub fn announcements(hand: Triple) -> Vec<Family> {
    let hand = triple(hand);
    let others: Vec<u8> = (0..CARDS).filter(|c| !hand.contains(c)).collect();
    let mut out: Vec<Family> = Vec::new();
    for p in permutations(&others) {
        let f = seven_hands(hand, [p[0], p[1], p[2], p[3]]);
        if !out.contains(&f) {
            out.push(f);
        }
    }
    out
}

/// A deal of the seven cards: three to A, three to B, one to E.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Deal {
    pub a: Triple,
    pub b: Triple,
    pub e: u8,
}

fn triples(from: &[u8]) -> Vec<Triple> {
    let mut out = Vec::new();
    for i in 0..from.len() {
        for j in i + 1..from.len() {
            for k in j + 1..from.len() {
                out.push([from[i], from[j], from[k]]);
            }
        }
    }
    out
}

/// All 140 deals.
pub fn deals() -> Vec<Deal> {
    let all: Vec<u8> = (0..CARDS).collect();
    let mut out = Vec::new();
    for a in triples(&all) {
        let rest: Vec<u8> = all.iter().copied().filter(|c| !a.contains(c)).collect();
        for b in triples(&rest) {
            let e = *rest.iter().find(|c| !b.contains(c)).expect("one card left");
            out.push(Deal { a, b, e });
        }
    }
    out
}

/// The unique announced set disjoint from `hand`, if there is exactly one.
pub fn identify(family: &Family, hand: Triple) -> Option<Triple> {
    let mut fits = family.iter().filter(|t| t.iter().all(|c| !hand.contains(c)));
    let first = *fits.next()?;
    fits.next().is_none().then_some(first)
}

fn show(t: &Triple) -> String {
    format!("{}{}{}", t[0], t[1], t[2])
}

fn show_family(f: &Family) -> String {
    f.iter().map(show).collect::<Vec<_>>().join(",")
}

/// Runs: one per deal and announcement A may make for it, with points
/// before any message, after A's announcement and after B's reply (E's
/// card). Agents `A`, `B`, `E` observe their own hand and every public
/// message. Atoms: `in_hand(c,i)`, `announced(i)`.
pub fn russian_cards_model() -> KripkeModel {
    let mut builder = KripkeModel::builder(["A", "B", "E"]);
    for deal in deals() {
        for family in announcements(deal.a) {
            let hands = [show(&deal.a), show(&deal.b), deal.e.to_string()];
            let mut facts = BTreeSet::new();
            for (who, cards) in [("A", deal.a.to_vec()), ("B", deal.b.to_vec()), ("E", vec![deal.e])] {
                for c in cards {
                    facts.insert(Atom::new("in_hand", [c.to_string(), who.to_string()]));
                }
            }
            let public = ["".to_string(), format!("A:{}", show_family(&family)), format!("A:{} B:{}", show_family(&family), deal.e)];
            let mut run = Vec::new();
            for (t, said) in public.iter().enumerate() {
                let mut f = facts.clone();
                if t >= 1 {
                    f.insert(Atom::new::<&str>("announced", ["A"]));
                }
                if t >= 2 {
                    f.insert(Atom::new::<&str>("announced", ["B"]));
                }
                run.push(PointData {
                    observations: hands.iter().map(|h| format!("{h} | {said}")).collect(),
                    facts: f,
                    messages: Vec::new(),
                });
            }
            builder.run(run);
        }
    }
    builder.build()
}

/// `!K[E] c∈A` for A's cards and `!K[E] c∈B` for B's cards in `deal`.
pub fn eve_ignorance(deal: &Deal) -> Formula {
    let not_known = |c: &u8, who: &str| Formula::not(Formula::knows("E", Formula::atom("in_hand", [c.to_string(), who.to_string()])));
    Formula::all(deal.a.iter().map(|c| not_known(c, "A")).chain(deal.b.iter().map(|c| not_known(c, "B"))))
}

/// `K[i] c∈owner` for every card `c` of `cards`.
pub fn knows_hand(i: &str, cards: &Triple, owner: &str) -> Formula {
    Formula::all(cards.iter().map(|c| Formula::knows(i, Formula::atom("in_hand", [c.to_string(), owner.to_string()]))))
}

/// Cryptographers of the dining model.
pub const DINERS: [&str; 3] = ["1", "2", "3"];

/// Who paid in a dining run: nobody at the table, or one diner.
pub fn payer_options() -> [Option<usize>; 4] {
    [None, Some(0), Some(1), Some(2)]
}

/// One dining run as the values of its variables at the end.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dinner {
    pub payer: Option<usize>,
    /// Coin tossed by diner `i` and shared with the diner on its right.
    pub coins: [bool; 3],
}

impl Dinner {
    pub fn all() -> Vec<Dinner> {
        let mut out = Vec::new();
        for payer in payer_options() {
            for bits in 0..8u8 {
                out.push(Dinner { payer, coins: [bits & 1 != 0, bits & 2 != 0, bits & 4 != 0] });
            }
        }
        out
    }

    pub fn paid(&self, i: usize) -> bool {
        self.payer == Some(i)
    }

    /// Coin diner `i` receives from its left neighbour.
    pub fn coin_left(&self, i: usize) -> bool {
        self.coins[(i + 2) % 3]
    }

    /// What diner `i` announces: its two coins differ, negated if it paid.
    pub fn announcement(&self, i: usize) -> bool {
        self.coin_left(i) ^ self.coins[i] ^ self.paid(i)
    }
}

/// Runs: one per payer (nobody, 1, 2 or 3) and outcome of the three coins,
/// each with five points. Round one tosses the coins, round two sends each
/// coin to the right-hand neighbour, round three receives it and round four
/// announces. Diner `i` observes whether it paid, its two coins once it has
/// them and all announcements. Atoms: `paid(i)`, `df(i)` (the announced
/// bit, false before round four), `coin(i)`, `performed(i,pay)`.
pub fn dining_crypto_model() -> KripkeModel {
    let mut builder = KripkeModel::builder(DINERS);
    for d in Dinner::all() {
        let mut run = Vec::new();
        for t in 0..=4usize {
            let mut facts = BTreeSet::new();
            for (i, &name) in DINERS.iter().enumerate() {
                if d.paid(i) {
                    facts.insert(Atom::new::<&str>("paid", [name]));
                    facts.insert(Atom::new::<&str>("performed", [name, "pay"]));
                }
                if d.coins[i] {
                    facts.insert(Atom::new::<&str>("coin", [name]));
                }
                if t >= 4 && d.announcement(i) {
                    facts.insert(Atom::new::<&str>("df", [name]));
                }
            }
            let observations = (0..3)
                .map(|i| {
                    let bit = |b: bool| if b { '1' } else { '0' };
                    let right = if t >= 1 { bit(d.coins[i]) } else { '-' };
                    let left = if t >= 3 { bit(d.coin_left(i)) } else { '-' };
                    let said: String = if t >= 4 { (0..3).map(|j| bit(d.announcement(j))).collect() } else { "---".into() };
                    format!("paid={} right={right} left={left} df={said}", bit(d.paid(i)))
                })
                .collect();
            run.push(PointData { observations, facts, messages: Vec::new() });
        }
        builder.run(run);
    }
    builder.build()
}

/// After four rounds, a diner `i` that did not pay either knows nobody at
/// the table paid, or knows one of the other two did without knowing which.
pub fn dining_anonymity(i: usize) -> Formula {
    let me = DINERS[i];
    let paid = |j: usize| Formula::atom("paid", [DINERS[j]]);
    let others: Vec<usize> = (0..3).filter(|&j| j != i).collect();
    let nobody = Formula::knows(me, Formula::all((0..3).map(|j| Formula::not(paid(j)))));
    let someone = Formula::knows(me, Formula::any(others.iter().map(|&j| paid(j))));
    let unsure = Formula::all(others.iter().map(|&j| Formula::not(Formula::knows(me, paid(j)))));
    Formula::next(4, Formula::implies(Formula::not(paid(i)), Formula::or(nobody, Formula::and(someone, unsure))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn announcement_shape() {
        for hand in [[0, 1, 2], [2, 4, 6]] {
            for f in announcements(hand) {
                assert_eq!(f.len(), 7);
                assert!(f.contains(&hand));
                // Every card shows up in exactly three announced sets.
                for c in 0..CARDS {
                    assert_eq!(f.iter().filter(|t| t.contains(&c)).count(), 3, "card {c} in {f:?}");
                }
            }
        }
    }

    #[test]
    fn dining_coins_are_passed_right() {
        let d = Dinner { payer: None, coins: [true, false, false] };
        assert!(d.coin_left(1));
        assert!(!d.coin_left(0));
        assert!(!d.coin_left(2));
    }
}
