use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::gates::{canonical_phase2, canonical_phase4, cx_pi, kron, rx, ry, rz, M2, M4};

/// Rotation on one qubit. X and Y are physical pulses, Z is a frame update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Gate1 {
    X(f64),
    Y(f64),
    Z(f64),
}

impl Gate1 {
    pub fn matrix(&self) -> M2 {
        match *self {
            Gate1::X(t) => rx(t),
            Gate1::Y(t) => ry(t),
            Gate1::Z(t) => rz(t),
        }
    }

    pub fn is_physical(&self) -> bool {
        !matches!(self, Gate1::Z(_))
    }
}

/// Gate of a two-qubit decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Op {
    A(Gate1),
    B(Gate1),
    /// The entangling gate CX_π with A as control.
    Cx,
}

/// Product of gates listed in time order.
pub fn compose1(gates: &[Gate1]) -> M2 {
    gates.iter().fold(M2::identity(), |u, g| g.matrix() * u)
}

pub fn compose2(ops: &[Op]) -> M4 {
    let id = M2::identity();
    ops.iter().fold(M4::identity(), |u, op| {
        let m = match op {
            Op::A(g) => kron(&g.matrix(), &id),
            Op::B(g) => kron(&id, &g.matrix()),
            Op::Cx => cx_pi(),
        };
        m * u
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clifford1 {
    /// Canonical-phase unitary.
    pub unitary: M2,
    /// Gates in time order.
    pub gates: Vec<Gate1>,
    pub physical_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliffordElement {
    /// Canonical-phase unitary.
    pub unitary: M4,
    /// Gates in time order.
    pub decomposition: Vec<Op>,
    pub physical_1q_count: usize,
    pub cx_count: usize,
}

pub(crate) type Key = [i64; 32];

/// Hash key of a unitary up to global phase.
pub(crate) fn key4(u: &M4) -> Key {
    let c = canonical_phase4(u);
    let mut k = [0i64; 32];
    for (i, z) in c.iter().enumerate() {
        k[2 * i] = (z.re * 1e6).round() as i64;
        k[2 * i + 1] = (z.im * 1e6).round() as i64;
    }
    k
}

fn key2(u: &M2) -> [i64; 8] {
    let c = canonical_phase2(u);
    let mut k = [0i64; 8];
    for (i, z) in c.iter().enumerate() {
        k[2 * i] = (z.re * 1e6).round() as i64;
        k[2 * i + 1] = (z.im * 1e6).round() as i64;
    }
    k
}

const H: f64 = FRAC_PI_2;

fn one_qubit_table() -> Vec<Clifford1> {
    use Gate1::*;
    let mut table: Vec<Vec<Gate1>> = vec![
        // Paulis
        vec![],
        vec![X(PI)],
        vec![Y(PI)],
        vec![Z(PI)],
        // 2π/3 rotations
        vec![X(H), Y(H)],
        vec![X(H), Y(-H)],
        vec![X(-H), Y(H)],
        vec![X(-H), Y(-H)],
        vec![Y(H), X(H)],
        vec![Y(H), X(-H)],
        vec![Y(-H), X(H)],
        vec![Y(-H), X(-H)],
        // π/2 rotations
        vec![X(H)],
        vec![X(-H)],
        vec![Y(H)],
        vec![Y(-H)],
        vec![Z(H)],
        vec![Z(-H)],
    ];
    // Hadamard-like: one pulse dressed by frame updates
    let mut seen: Vec<[i64; 8]> = table.iter().map(|g| key2(&compose1(g))).collect();
    let pulses = [X(PI), Y(PI), X(H), X(-H), Y(H), Y(-H)];
    let frames = [0.0, H, -H, PI];
    let group = closure1();
    for u in group {
        let k = key2(&u);
        if seen.contains(&k) {
            continue;
        }
        let found = frames.iter().flat_map(|&a| frames.iter().map(move |&b| (a, b))).find_map(|(before, after)| {
            pulses.iter().find_map(|&p| {
                let mut g = Vec::new();
                if before != 0.0 {
                    g.push(Z(before));
                }
                g.push(p);
                if after != 0.0 {
                    g.push(Z(after));
                }
                (key2(&compose1(&g)) == k).then_some(g)
            })
        });
        let g = found.expect("every single-qubit Clifford is one pulse up to frame updates");
        seen.push(k);
        table.push(g);
    }
    table
        .into_iter()
        .map(|gates| Clifford1 {
            unitary: canonical_phase2(&compose1(&gates)),
            physical_count: gates.iter().filter(|g| g.is_physical()).count(),
            gates,
        })
        .collect()
}

/// All 24 single-qubit Cliffords by closure of {X/2, Y/2}.
fn closure1() -> Vec<M2> {
    let gens = [rx(H), ry(H)];
    let mut out = vec![M2::identity()];
    let mut keys = vec![key2(&M2::identity())];
    let mut i = 0;
    while i < out.len() {
        for g in &gens {
            let u = g * out[i];
            let k = key2(&u);
            if !keys.contains(&k) {
                keys.push(k);
                out.push(u);
            }
        }
        i += 1;
    }
    out
}

/// The single-qubit Clifford group with its physical decomposition.
pub fn single_qubit_cliffords() -> &'static [Clifford1] {
    static T: OnceLock<Vec<Clifford1>> = OnceLock::new();
    T.get_or_init(one_qubit_table)
}

/// Index of a single-qubit unitary in the table.
pub fn find_single(u: &M2) -> Option<usize> {
    let k = key2(u);
    single_qubit_cliffords().iter().position(|c| key2(&c.unitary) == k)
}

/// Class sizes of the two-qubit group.
pub const CLASS_SIZES: [usize; 4] = [576, 5184, 5184, 576];
pub const TWO_QUBIT_ORDER: usize = 11520;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CliffordClass {
    SingleQubit,
    CnotLike,
    IswapLike,
    SwapLike,
}

/// Two-qubit Clifford group generated with CX_π, in four classes:
///
/// - single-qubit: C₁⊗C₁
/// - CNOT-like: C₁⊗C₁, CX, S₁ ⊗ S₁^{X/2}
/// - iSWAP-like: C₁⊗C₁, CX, X/2 ⊗ Z/2, CX, S₁^{X/2} ⊗ S₁^{−Y/2}
/// - SWAP-like: C₁⊗C₁, CX, X/2 ⊗ Z/2, CX, Y/2 ⊗ Z/2, CX
///
/// S₁ = {I, (X/2, Y/2), (−Y/2, −X/2)}; a superscript appends that pulse.
pub struct TwoQubitCliffords {
    lookup: HashMap<Key, u16>,
}

fn s1() -> [Vec<Gate1>; 3] {
    use Gate1::*;
    [vec![], vec![X(H), Y(H)], vec![Y(-H), X(-H)]]
}

fn with_tail(mut g: Vec<Gate1>, tail: &[Gate1]) -> Vec<Gate1> {
    g.extend_from_slice(tail);
    g
}

fn layer(ops: &mut Vec<Op>, a: &[Gate1], b: &[Gate1]) {
    ops.extend(a.iter().map(|&g| Op::A(g)));
    ops.extend(b.iter().map(|&g| Op::B(g)));
}

impl TwoQubitCliffords {
    pub fn len(&self) -> usize {
        TWO_QUBIT_ORDER
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn class_of(index: usize) -> CliffordClass {
        match index {
            i if i < 576 => CliffordClass::SingleQubit,
            i if i < 576 + 5184 => CliffordClass::CnotLike,
            i if i < 576 + 2 * 5184 => CliffordClass::IswapLike,
            _ => CliffordClass::SwapLike,
        }
    }

    /// Gate list of element `index` (0 ≤ index < 11520).
    pub fn decomposition(index: usize) -> Vec<Op> {
        use Gate1::*;
        assert!(index < TWO_QUBIT_ORDER, "Clifford index {index} out of range");
        let c1 = single_qubit_cliffords();
        let s = s1();
        let mut ops = Vec::new();
        let first = |ops: &mut Vec<Op>, c: usize| layer(ops, &c1[c / 24].gates, &c1[c % 24].gates);
        match index {
            i if i < 576 => first(&mut ops, i),
            i if i < 576 + 5184 => {
                let j = i - 576;
                first(&mut ops, j / 9);
                ops.push(Op::Cx);
                let (sa, sb) = ((j % 9) / 3, j % 3);
                layer(&mut ops, &s[sa], &with_tail(s[sb].clone(), &[X(H)]));
            }
            i if i < 576 + 2 * 5184 => {
                let j = i - 576 - 5184;
                first(&mut ops, j / 9);
                ops.push(Op::Cx);
                layer(&mut ops, &[X(H)], &[Z(H)]);
                ops.push(Op::Cx);
                let (sa, sb) = ((j % 9) / 3, j % 3);
                layer(&mut ops, &with_tail(s[sa].clone(), &[X(H)]), &with_tail(s[sb].clone(), &[Y(-H)]));
            }
            i => {
                let j = i - 576 - 2 * 5184;
                first(&mut ops, j);
                ops.push(Op::Cx);
                layer(&mut ops, &[X(H)], &[Z(H)]);
                ops.push(Op::Cx);
                layer(&mut ops, &[Y(H)], &[Z(H)]);
                ops.push(Op::Cx);
            }
        }
        ops
    }

    /// Element `index`, computed on demand.
    pub fn element(&self, index: usize) -> CliffordElement {
        Self::element_static(index)
    }

    fn element_static(index: usize) -> CliffordElement {
        let ops = Self::decomposition(index);
        CliffordElement {
            unitary: canonical_phase4(&compose2(&ops)),
            physical_1q_count: ops.iter().filter(|o| matches!(o, Op::A(g) | Op::B(g) if g.is_physical())).count(),
            cx_count: ops.iter().filter(|o| matches!(o, Op::Cx)).count(),
            decomposition: ops,
        }
    }

    pub fn unitary(&self, index: usize) -> M4 {
        compose2(&Self::decomposition(index))
    }

    /// Index of a Clifford unitary (any global phase).
    pub fn find(&self, u: &M4) -> Option<usize> {
        self.lookup.get(&key4(u)).map(|&i| i as usize)
    }

    /// Index of the inverse of `u`.
    pub fn inverse_of(&self, u: &M4) -> Option<usize> {
        self.find(&u.adjoint())
    }

    /// Distinct elements found when building the lookup (11520 if the layout is a group transversal).
    pub fn distinct(&self) -> usize {
        self.lookup.len()
    }
}

/// The two-qubit Clifford group, built once.
pub fn two_qubit_cliffords() -> &'static TwoQubitCliffords {
    static G: OnceLock<TwoQubitCliffords> = OnceLock::new();
    G.get_or_init(|| {
        let mut lookup = HashMap::with_capacity(TWO_QUBIT_ORDER);
        for i in 0..TWO_QUBIT_ORDER {
            lookup.entry(key4(&compose2(&TwoQubitCliffords::decomposition(i)))).or_insert(i as u16);
        }
        TwoQubitCliffords { lookup }
    })
}

/// (average physical single-qubit gates, average CX) per two-qubit Clifford.
pub fn two_qubit_gate_averages() -> (f64, f64) {
    let (mut p, mut c) = (0usize, 0usize);
    for i in 0..TWO_QUBIT_ORDER {
        let e = TwoQubitCliffords::element_static(i);
        p += e.physical_1q_count;
        c += e.cx_count;
    }
    (p as f64 / TWO_QUBIT_ORDER as f64, c as f64 / TWO_QUBIT_ORDER as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_qubit_group() {
        let t = single_qubit_cliffords();
        assert_eq!(t.len(), 24);
        let total: usize = t.iter().map(|c| c.physical_count).sum();
        assert_eq!(total, 28);
        for a in t {
            for b in t {
                assert!(find_single(&(a.unitary * b.unitary)).is_some());
            }
            assert!(find_single(&a.unitary.adjoint()).is_some());
        }
    }

    #[test]
    fn two_qubit_layout_is_transversal() {
        let g = two_qubit_cliffords();
        assert_eq!(g.distinct(), TWO_QUBIT_ORDER);
        let (p, c) = two_qubit_gate_averages();
        assert_eq!(c, 1.5);
        assert!((p - 6.633).abs() < 1e-3, "{p}");
    }

    #[test]
    fn s1_is_order_three_subgroup() {
        let s: Vec<M2> = s1().iter().map(|g| compose1(g)).collect();
        let keys: Vec<_> = s.iter().map(key2).collect();
        for a in &s {
            for b in &s {
                assert!(keys.contains(&key2(&(a * b))));
            }
        }
    }

    #[test]
    fn classes_by_cx_count() {
        for (i, n) in [(0, 0), (600, 1), (6000, 2), (11000, 3)] {
            assert_eq!(TwoQubitCliffords::decomposition(i).iter().filter(|o| **o == Op::Cx).count(), n);
        }
    }
}
