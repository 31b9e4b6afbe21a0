//! Additive cost-vector algebra for entanglement channels.
//!
//! A channel is summarized by two non-negative decibel figures: transmission
//! loss and dephasing. Both add in series, so chaining channels by
//! entanglement swapping is component-wise addition. The physical picture
//! (success probability `eta`, Bell-pair fidelity `F`) is an invertible map
//! away; purification combines channels in parallel and is only expressible
//! on that side.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Channel cost in decibels: (transmission loss, dephasing).
///
/// Finite components are non-negative; an unusable channel is the distinct
/// `BLOCKED` sentinel (never NaN).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CostVectorRepr", into = "CostVectorRepr")]
pub struct CostVector {
    loss_db: f64,
    deph_db: f64,
}

impl CostVector {
    pub const ZERO: Self = Self { loss_db: 0.0, deph_db: 0.0 };
    pub const BLOCKED: Self = Self {
        loss_db: f64::INFINITY,
        deph_db: f64::INFINITY,
    };

    pub fn new(loss_db: f64, deph_db: f64) -> Result<Self> {
        if loss_db.is_finite() && deph_db.is_finite() && loss_db >= 0.0 && deph_db >= 0.0 {
            Ok(Self { loss_db, deph_db })
        } else {
            Err(Error::InvalidCost { loss_db, deph_db })
        }
    }

    pub fn loss_db(&self) -> f64 {
        self.loss_db
    }

    pub fn deph_db(&self) -> f64 {
        self.deph_db
    }

    pub fn is_blocked(&self) -> bool {
        !(self.loss_db.is_finite() && self.deph_db.is_finite())
    }

    /// Total decibel magnitude, the default routing weight and prune metric.
    pub fn magnitude_db(&self) -> f64 {
        self.loss_db + self.deph_db
    }
}

impl std::ops::Add for CostVector {
    type Output = CostVector;

    // Component-wise; BLOCKED is (inf, inf) so it absorbs without producing NaN.
    fn add(self, rhs: CostVector) -> CostVector {
        CostVector {
            loss_db: self.loss_db + rhs.loss_db,
            deph_db: self.deph_db + rhs.deph_db,
        }
    }
}

impl std::ops::AddAssign for CostVector {
    fn add_assign(&mut self, rhs: CostVector) {
        *self = *self + rhs;
    }
}

/// JSON form: `{"loss_db": .., "deph_db": ..}` or the string `"blocked"`.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CostVectorRepr {
    Finite { loss_db: f64, deph_db: f64 },
    Tag(String),
}

impl From<CostVector> for CostVectorRepr {
    fn from(c: CostVector) -> Self {
        if c.is_blocked() {
            CostVectorRepr::Tag("blocked".into())
        } else {
            CostVectorRepr::Finite {
                loss_db: c.loss_db,
                deph_db: c.deph_db,
            }
        }
    }
}

impl TryFrom<CostVectorRepr> for CostVector {
    type Error = String;

    fn try_from(repr: CostVectorRepr) -> std::result::Result<Self, String> {
        match repr {
            CostVectorRepr::Finite { loss_db, deph_db } => {
                CostVector::new(loss_db, deph_db).map_err(|e| e.to_string())
            }
            CostVectorRepr::Tag(s) if s == "blocked" => Ok(CostVector::BLOCKED),
            CostVectorRepr::Tag(s) => Err(format!("unknown cost tag {s:?}")),
        }
    }
}

/// Physical channel figures: success probability `eta` and fidelity `F`.
///
/// `eta` lies in [0, 1] and `F` in [1/2, 1]; `eta = 0` (with `F = 1/2`) only
/// arises as the image of a blocked cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PhysicalRepr")]
pub struct PhysicalCost {
    eta: f64,
    fidelity: f64,
}

#[derive(Deserialize)]
struct PhysicalRepr {
    eta: f64,
    fidelity: f64,
}

impl TryFrom<PhysicalRepr> for PhysicalCost {
    type Error = String;

    fn try_from(repr: PhysicalRepr) -> std::result::Result<Self, String> {
        PhysicalCost::new(repr.eta, repr.fidelity).map_err(|e| e.to_string())
    }
}

impl PhysicalCost {
    pub const PERFECT: Self = Self {
        eta: 1.0,
        fidelity: 1.0,
    };

    pub fn new(eta: f64, fidelity: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&eta) && (0.5..=1.0).contains(&fidelity) {
            Ok(Self { eta, fidelity })
        } else {
            Err(Error::InvalidPhysical { eta, fidelity })
        }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn fidelity(&self) -> f64 {
        self.fidelity
    }
}

/// dB cost to physical figures: `eta = 10^(-loss/10)`, `F = (1 + 10^(-deph/10)) / 2`.
pub fn to_physical(cost: CostVector) -> PhysicalCost {
    if cost.is_blocked() {
        return PhysicalCost {
            eta: 0.0,
            fidelity: 0.5,
        };
    }
    let eta = 10f64.powf(-cost.loss_db / 10.0);
    let deph = 10f64.powf(-cost.deph_db / 10.0);
    PhysicalCost {
        eta,
        fidelity: (1.0 + deph) / 2.0,
    }
}

/// Inverse of [`to_physical`]; `F <= 1/2` or `eta = 0` map to `BLOCKED`.
pub fn from_physical(p: PhysicalCost) -> CostVector {
    if p.eta <= 0.0 || p.fidelity <= 0.5 {
        return CostVector::BLOCKED;
    }
    CostVector {
        loss_db: -10.0 * p.eta.log10(),
        deph_db: -10.0 * (2.0 * p.fidelity - 1.0).log10(),
    }
}

/// Fidelity after an entanglement swap: `f1 f2 + (1 - f1)(1 - f2)`.
///
/// Equivalently the dephasing parameter `2F - 1` multiplies, which is what
/// makes the dB dephasing cost additive. This polynomial is also the
/// probability that two independent dephasing records agree, hence its second
/// role as the purification heralding bracket.
pub fn swap_fidelity(f1: f64, f2: f64) -> f64 {
    f1 * f2 + (1.0 - f1) * (1.0 - f2)
}

/// Fidelity after purifying two pairs: `f1 f2 / (f1 f2 + (1 - f1)(1 - f2))`.
pub fn purify_fidelity(f1: f64, f2: f64) -> f64 {
    let kept = f1 * f2;
    kept / (kept + (1.0 - f1) * (1.0 - f2))
}

/// Series composition of two channels by entanglement swapping.
pub fn swap_compose(a: PhysicalCost, b: PhysicalCost) -> PhysicalCost {
    PhysicalCost {
        eta: a.eta * b.eta,
        fidelity: swap_fidelity(a.fidelity, b.fidelity),
    }
}

/// Parallel composition of two channels by purification.
///
/// Both pairs must arrive and the parity check must herald success, so the
/// efficiency picks up the agreement bracket.
pub fn purify(a: PhysicalCost, b: PhysicalCost) -> PhysicalCost {
    let agree = swap_fidelity(a.fidelity, b.fidelity);
    PhysicalCost {
        eta: a.eta * b.eta * agree,
        fidelity: purify_fidelity(a.fidelity, b.fidelity),
    }
}

/// Purifies `costs` down to a single pair.
///
/// Fidelity uses the closed form `prod(F) / (prod(F) + prod(1 - F))`;
/// efficiency is the left fold of [`purify`], which is order-independent
/// because the folded bracket telescopes to `prod(F) + prod(1 - F)`.
pub fn purify_n(costs: &[PhysicalCost]) -> Result<PhysicalCost> {
    let (first, rest) = costs.split_first().ok_or(Error::EmptyPurification)?;
    let mut kept = 1.0;
    let mut flipped = 1.0;
    for c in costs {
        kept *= c.fidelity;
        flipped *= 1.0 - c.fidelity;
    }
    let mut acc = *first;
    for c in rest {
        acc = purify(acc, *c);
    }
    Ok(PhysicalCost {
        eta: acc.eta,
        fidelity: kept / (kept + flipped),
    })
}

/// A pairwise purification schedule. Internal nodes are strictly binary by
/// construction.
#[derive(Debug, Clone)]
pub enum PurificationTree {
    Leaf(PhysicalCost),
    Node(Box<PurificationTree>, Box<PurificationTree>),
}

impl PurificationTree {
    pub fn leaf(cost: PhysicalCost) -> Self {
        PurificationTree::Leaf(cost)
    }

    pub fn node(left: PurificationTree, right: PurificationTree) -> Self {
        PurificationTree::Node(Box::new(left), Box::new(right))
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            PurificationTree::Leaf(_) => 1,
            PurificationTree::Node(l, r) => l.leaf_count() + r.leaf_count(),
        }
    }

    /// Post-order evaluation; every schedule over the same leaves agrees
    /// because the pairwise rule is commutative and associative.
    pub fn evaluate(&self) -> PhysicalCost {
        match self {
            PurificationTree::Leaf(c) => *c,
            PurificationTree::Node(l, r) => purify(l.evaluate(), r.evaluate()),
        }
    }
}

/// Evaluates a purification schedule.
pub fn purify_tree(tree: &PurificationTree) -> PhysicalCost {
    tree.evaluate()
}

/// Number of distinct pairwise purification schedules over `leaves` labeled
/// pairs: the double factorial (2n - 3)!!. `None` when `leaves` is zero or
/// the count overflows u128.
pub fn tree_count(leaves: usize) -> Option<u128> {
    if leaves == 0 {
        return None;
    }
    let mut count: u128 = 1;
    for k in 2..=leaves as u128 {
        count = count.checked_mul(2 * k - 3)?;
    }
    Some(count)
}

/// End-to-end cost of a line of `diameter` hops, each purified from
/// `branching` copies of `edge`, chained by swaps that succeed with
/// probability `swap_success`.
pub fn area_law(
    branching: usize,
    diameter: usize,
    edge: PhysicalCost,
    swap_success: f64,
) -> Result<PhysicalCost> {
    if branching == 0 || diameter == 0 || !(swap_success > 0.0 && swap_success <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "area law needs branching >= 1, diameter >= 1 and swap success in (0, 1], \
             got ({branching}, {diameter}, {swap_success})"
        )));
    }
    let per_hop = purify_n(&vec![edge; branching])?;
    let mut total = per_hop;
    for _ in 1..diameter {
        total = swap_compose(total, per_hop);
    }
    total.eta *= swap_success.powi(diameter as i32 - 1);
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(0x5eed)
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn conversion_at_one_db() {
        let p = to_physical(CostVector::new(1.0, 1.0).unwrap());
        assert!(close(p.eta(), 0.7943282347242815, 1e-15));
        assert!(close(p.fidelity(), 0.8971641173621407, 1e-15));
    }

    #[test]
    fn conversion_round_trip() {
        let mut rng = rng();
        for _ in 0..1000 {
            let c = CostVector::new(rng.random_range(0.0..30.0), rng.random_range(0.0..30.0)).unwrap();
            let back = from_physical(to_physical(c));
            assert!(close(back.loss_db(), c.loss_db(), 1e-12));
            assert!(close(back.deph_db(), c.deph_db(), 1e-12));
        }
    }

    #[test]
    fn zero_cost_is_perfect() {
        assert_eq!(to_physical(CostVector::ZERO), PhysicalCost::PERFECT);
    }

    #[test]
    fn blocked_round_trip() {
        let p = to_physical(CostVector::BLOCKED);
        assert_eq!(p.eta(), 0.0);
        assert_eq!(p.fidelity(), 0.5);
        assert!(from_physical(p).is_blocked());
        // F = 1/2 carries no entanglement regardless of eta.
        assert!(from_physical(PhysicalCost::new(0.9, 0.5).unwrap()).is_blocked());
    }

    #[test]
    fn cost_validation() {
        assert!(CostVector::new(f64::NAN, 0.0).is_err());
        assert!(CostVector::new(-1.0, 0.0).is_err());
        assert!(CostVector::new(0.0, f64::INFINITY).is_err());
        assert!(PhysicalCost::new(1.1, 0.9).is_err());
        assert!(PhysicalCost::new(0.5, 0.4).is_err());
        assert!(PhysicalCost::new(f64::NAN, 0.9).is_err());
    }

    #[test]
    fn blocked_absorbs_addition() {
        let c = CostVector::new(1.0, 2.0).unwrap();
        assert!((CostVector::BLOCKED + c).is_blocked());
        let sum = c + c;
        assert_eq!(sum.loss_db(), 2.0);
        assert_eq!(sum.deph_db(), 4.0);
    }

    #[test]
    fn cost_vector_json() {
        let c = CostVector::new(1.5, 0.25).unwrap();
        let js = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<CostVector>(&js).unwrap(), c);
        let b = serde_json::to_string(&CostVector::BLOCKED).unwrap();
        assert_eq!(b, "\"blocked\"");
        assert!(serde_json::from_str::<CostVector>(&b).unwrap().is_blocked());
        assert!(serde_json::from_str::<CostVector>("{\"loss_db\":-2,\"deph_db\":0}").is_err());
    }

    #[test]
    fn swap_example() {
        let p = PhysicalCost::new(0.9, 0.9).unwrap();
        let s = swap_compose(p, p);
        assert!(close(s.eta(), 0.81, 1e-15));
        assert!(close(s.fidelity(), 0.82, 1e-15));
    }

    #[test]
    fn swap_identities_exact() {
        let mut rng = rng();
        for _ in 0..1000 {
            let f: f64 = rng.random_range(0.5..1.0);
            assert_eq!(swap_fidelity(f, 1.0), f);
            assert_eq!(swap_fidelity(1.0, f), f);
            assert_eq!(swap_fidelity(f, 0.5), 0.5); // F = 1/2 is absorbing
        }
    }

    #[test]
    fn swap_is_additive_in_db() {
        let mut rng = rng();
        for _ in 0..1000 {
            let a = CostVector::new(rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)).unwrap();
            let b = CostVector::new(rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)).unwrap();
            let composed = from_physical(swap_compose(to_physical(a), to_physical(b)));
            assert!(close(composed.loss_db(), a.loss_db() + b.loss_db(), 1e-10));
            assert!(close(composed.deph_db(), a.deph_db() + b.deph_db(), 1e-10));
        }
    }

    #[test]
    fn purify_example() {
        let p = PhysicalCost::new(0.9, 0.8).unwrap();
        let out = purify(p, p);
        assert!(close(out.eta(), 0.5508, 1e-15));
        assert!(close(out.fidelity(), 0.9411764705882353, 1e-15));
    }

    #[test]
    fn purify_identities_exact() {
        let mut rng = rng();
        for _ in 0..1000 {
            let f: f64 = rng.random_range(0.5..1.0);
            assert_eq!(purify_fidelity(f, 0.5), f);
            assert_eq!(purify_fidelity(0.5, f), f);
            let g = 1.0 - f;
            assert_eq!(purify_fidelity(f, g), 0.5);
        }
    }

    #[test]
    fn purify_never_lowers_fidelity() {
        let mut rng = rng();
        for _ in 0..1000 {
            let f1: f64 = rng.random_range(0.5..1.0);
            let f2: f64 = rng.random_range(0.5..1.0);
            assert!(purify_fidelity(f1, f2) >= f1.max(f2) - 1e-15);
        }
    }

    #[test]
    fn purify_n_matches_closed_form() {
        let p = PhysicalCost::new(1.0, 0.8).unwrap();
        let out = purify_n(&[p, p, p]).unwrap();
        assert!(close(out.fidelity(), 0.9846153846153846, 1e-15));
        assert!(purify_n(&[]).is_err());
    }

    #[test]
    fn purify_n_single_is_identity() {
        let p = PhysicalCost::new(0.37, 0.77).unwrap();
        assert_eq!(purify_n(&[p]).unwrap(), p);
    }

    #[test]
    fn purify_n_two_matches_pairwise() {
        let a = PhysicalCost::new(0.8, 0.9).unwrap();
        let b = PhysicalCost::new(0.6, 0.7).unwrap();
        assert_eq!(purify_n(&[a, b]).unwrap(), purify(a, b));
    }

    #[test]
    fn purify_n_is_order_independent() {
        let mut rng = rng();
        for _ in 0..200 {
            let mut costs: Vec<PhysicalCost> = (0..5)
                .map(|_| {
                    PhysicalCost::new(rng.random_range(0.1..1.0), rng.random_range(0.5..1.0)).unwrap()
                })
                .collect();
            let base = purify_n(&costs).unwrap();
            costs.reverse();
            costs.swap(0, 2);
            let shuffled = purify_n(&costs).unwrap();
            assert!(close(base.eta(), shuffled.eta(), 1e-12));
            assert!(close(base.fidelity(), shuffled.fidelity(), 1e-12));
        }
    }

    /// All distinct pairing schedules over `leaves`, generated by inserting
    /// each next leaf on every edge (including above the root). The count of
    /// generated trees independently reproduces the double factorial.
    fn all_trees(leaves: &[PhysicalCost]) -> Vec<PurificationTree> {
        fn insert_everywhere(tree: &PurificationTree, leaf: PhysicalCost, out: &mut Vec<PurificationTree>) {
            // Replace the whole tree by (tree, leaf)...
            out.push(PurificationTree::node(tree.clone(), PurificationTree::leaf(leaf)));
            // ...or push the leaf into one of the subtrees.
            if let PurificationTree::Node(l, r) = tree {
                let mut ls = Vec::new();
                insert_everywhere(l, leaf, &mut ls);
                for nl in ls {
                    out.push(PurificationTree::node(nl, (**r).clone()));
                }
                let mut rs = Vec::new();
                insert_everywhere(r, leaf, &mut rs);
                for nr in rs {
                    out.push(PurificationTree::node((**l).clone(), nr));
                }
            }
        }

        let mut trees = vec![PurificationTree::leaf(leaves[0])];
        for &leaf in &leaves[1..] {
            let mut next = Vec::new();
            for t in &trees {
                insert_everywhere(t, leaf, &mut next);
            }
            trees = next;
        }
        trees
    }

    #[test]
    fn tree_count_matches_enumeration() {
        let mut rng = rng();
        for n in 1..=6 {
            let leaves: Vec<PhysicalCost> = (0..n)
                .map(|_| {
                    PhysicalCost::new(rng.random_range(0.1..1.0), rng.random_range(0.5..1.0)).unwrap()
                })
                .collect();
            let trees = all_trees(&leaves);
            assert_eq!(tree_count(n).unwrap(), trees.len() as u128);
        }
        assert_eq!(tree_count(1), Some(1));
        assert_eq!(tree_count(2), Some(1));
        assert_eq!(tree_count(4), Some(15));
        assert_eq!(tree_count(5), Some(105));
        assert_eq!(tree_count(6), Some(945));
        assert_eq!(tree_count(0), None);
    }

    #[test]
    fn every_schedule_agrees_with_purify_n() {
        let mut rng = rng();
        for n in 2..=6 {
            let leaves: Vec<PhysicalCost> = (0..n)
                .map(|_| {
                    PhysicalCost::new(rng.random_range(0.1..1.0), rng.random_range(0.5..1.0)).unwrap()
                })
                .collect();
            let reference = purify_n(&leaves).unwrap();
            for tree in all_trees(&leaves) {
                assert_eq!(tree.leaf_count(), n);
                let out = purify_tree(&tree);
                assert!(close(out.eta(), reference.eta(), 1e-12));
                assert!(close(out.fidelity(), reference.fidelity(), 1e-12));
            }
        }
    }

    #[test]
    fn pumping_order_example_two_schedules_agree() {
        // Balanced vs sequential pumping of four pairs.
        let leaves: Vec<PhysicalCost> = [0.95, 0.9, 0.85, 0.8]
            .iter()
            .map(|&f| PhysicalCost::new(0.7, f).unwrap())
            .collect();
        let balanced = PurificationTree::node(
            PurificationTree::node(PurificationTree::leaf(leaves[0]), PurificationTree::leaf(leaves[1])),
            PurificationTree::node(PurificationTree::leaf(leaves[2]), PurificationTree::leaf(leaves[3])),
        );
        let sequential = PurificationTree::node(
            PurificationTree::leaf(leaves[0]),
            PurificationTree::node(
                PurificationTree::leaf(leaves[1]),
                PurificationTree::node(PurificationTree::leaf(leaves[2]), PurificationTree::leaf(leaves[3])),
            ),
        );
        let a = purify_tree(&balanced);
        let b = purify_tree(&sequential);
        assert!(close(a.eta(), b.eta(), 1e-12));
        assert!(close(a.fidelity(), b.fidelity(), 1e-12));
    }

    #[test]
    fn area_law_line_of_ten_hops() {
        let edge = to_physical(CostVector::new(1.0, 1.0).unwrap());
        let out = area_law(1, 10, edge, 1.0).unwrap();
        assert!(close(out.eta(), 0.1, 1e-12));
        assert!(close(out.fidelity(), 0.55, 1e-12));
    }

    #[test]
    fn area_law_single_hop_two_copies() {
        let edge = to_physical(CostVector::new(1.0, 1.0).unwrap());
        let out = area_law(2, 1, edge, 1.0).unwrap();
        assert!(close(out.eta(), 0.5145322575168453, 1e-12));
        assert!(close(out.fidelity(), 0.9870318879967054, 1e-12));
        // Identical to purifying two parallel one-dB edges.
        assert_eq!(out, purify(edge, edge));
    }

    #[test]
    fn area_law_swap_success_scales_eta() {
        let edge = PhysicalCost::new(0.9, 0.95).unwrap();
        let ideal = area_law(1, 3, edge, 1.0).unwrap();
        let lossy = area_law(1, 3, edge, 0.5).unwrap();
        assert!(close(lossy.eta(), ideal.eta() * 0.25, 1e-15));
        assert_eq!(lossy.fidelity(), ideal.fidelity());
    }

    #[test]
    fn area_law_rejects_degenerate_parameters() {
        let edge = PhysicalCost::PERFECT;
        assert!(area_law(0, 1, edge, 1.0).is_err());
        assert!(area_law(1, 0, edge, 1.0).is_err());
        assert!(area_law(1, 1, edge, 0.0).is_err());
        assert!(area_law(1, 1, edge, 1.5).is_err());
    }
}
