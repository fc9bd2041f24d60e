use necklace_core::batch::{build_neighborhood_tree, prune_active, solve_tree_flow};
use necklace_core::offline::offline_split;
use necklace_core::oracle::exact_min_node_max_flow;
use necklace_core::{
    approx_static, dense_offline_split, derive_cuts, is_peelable, verify_fair, AgentId,
    ApproxConfig, BatchOptions, Color, ColoredDigraph, DenseNecklace, DynamicNecklace, FlowNetwork,
    Mode, MoveBatch, Necklace, NeighborhoodGraph,
};
use proptest::prelude::*;

/// Two colors with both counts multiple of `k`.
fn divisible(k: usize, max_blocks: usize) -> impl Strategy<Value = Vec<Color>> {
    (0..=max_blocks, 0..=max_blocks)
        .prop_filter("nonempty", |(r, b)| r + b > 0)
        .prop_flat_map(move |(r, b)| {
            let mut colors = vec![Color::RED; r * k];
            colors.extend(vec![Color::BLUE; b * k]);
            Just(colors).prop_shuffle()
        })
}

fn necklace(max_m: usize) -> impl Strategy<Value = Necklace> {
    (2usize..=5).prop_flat_map(move |k| {
        divisible(k, max_m / (2 * k)).prop_map(move |colors| {
            let mut nk = Necklace::new(&colors, k, Mode::Exact).unwrap();
            offline_split(&mut nk).unwrap();
            nk
        })
    })
}

fn owner_changes(nk: &Necklace) -> usize {
    let owners = nk.owners();
    owners.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Everything the exact two-color families promise after an operation.
fn exact_invariants(nk: &Necklace) -> Result<(), TestCaseError> {
    let k = nk.k();
    prop_assert!(verify_fair(nk).is_fair());
    let cuts = derive_cuts(nk).unwrap();
    prop_assert_eq!(cuts.len(), owner_changes(nk));
    prop_assert!(cuts.len() <= 2 * (k - 1), "{} cuts", cuts.len());
    prop_assert!(is_peelable(nk).unwrap());
    let graph = NeighborhoodGraph::build(nk).unwrap();
    prop_assert!(graph.edge_count() <= cuts.len());
    for c in [Color::RED, Color::BLUE] {
        prop_assert!(ColoredDigraph::build(nk, c).unwrap().edge_count() <= 2 * cuts.len());
    }
    let chained: usize = nk.agents().map(|a| nk.chain(a).count()).sum();
    prop_assert_eq!(chained, nk.len());
    for a in nk.agents() {
        prop_assert!(nk.chain(a).all(|b| nk.owner(b) == Some(a)));
    }
    nk.check_derived()
        .map_err(|e| TestCaseError::fail(e.to_string()))?;
    Ok(())
}

#[derive(Clone, Debug)]
enum Op {
    Swap(usize),
    Path(usize, usize),
    ColorPath(usize, usize),
}

fn ops(len: usize) -> impl Strategy<Value = Vec<Op>> {
    let op = prop_oneof![
        any::<usize>().prop_map(Op::Swap),
        (any::<usize>(), any::<usize>()).prop_map(|(a, b)| Op::Path(a, b)),
        (any::<usize>(), any::<usize>()).prop_map(|(a, b)| Op::ColorPath(a, b)),
    ];
    prop::collection::vec(op, 1..len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn offline_split_is_fair_and_peelable(nk in necklace(60)) {
        exact_invariants(&nk)?;
    }

    #[test]
    fn dynamic_operations_keep_invariants(nk in necklace(48), ops in ops(40)) {
        let m = nk.len();
        let mut d = DynamicNecklace::from_split(nk);
        for op in ops {
            match op {
                Op::Swap(j) if m > 1 => {
                    d.swap(j % (m - 1)).unwrap();
                }
                Op::Swap(_) => {}
                Op::Path(a, b) => {
                    d.relocate_path(a % m, b % m).unwrap();
                }
                Op::ColorPath(a, b) => {
                    let s = d.relocate_colorpath(a % m, b % m).unwrap();
                    // a run of bad edges costs at least one unit of weight
                    if s.transfers > 0 || s.path_weight > 0 {
                        prop_assert!(s.reruns <= s.path_weight);
                    }
                }
            }
            exact_invariants(d.necklace())?;
        }
    }

    #[test]
    fn fence_cuts_grow_by_at_most_two_per_move(
        nk in necklace(48),
        moves in prop::collection::vec((any::<usize>(), any::<usize>()), 1..30),
    ) {
        let (m, k) = (nk.len(), nk.k());
        let mut d = DynamicNecklace::from_split(nk).with_budget(usize::MAX / 2);
        for (r, (a, b)) in moves.into_iter().enumerate() {
            d.relocate_fence(a % m, b % m).unwrap();
            prop_assert!(verify_fair(d.necklace()).is_fair());
            prop_assert!(d.necklace().cut_count() <= 2 * (k + r));
        }
    }

    #[test]
    fn batch_operations_keep_invariants(
        nk in necklace(48),
        picks in prop::collection::vec((any::<usize>(), any::<usize>()), 1..8),
        alpha in 1usize..=2,
        seed in any::<u64>(),
    ) {
        let k = nk.k();
        let mut d = DynamicNecklace::from_split(nk);
        // one relocation batch of a single color, replayed on a color copy
        let mut colors = d.necklace().colors();
        let c = colors[seed as usize % colors.len()];
        let mut moves = Vec::new();
        for (a, b) in picks {
            let of_c: Vec<usize> = (0..colors.len()).filter(|&i| colors[i] == c).collect();
            let from = of_c[a % of_c.len()];
            let to = b % colors.len();
            let moved = colors.remove(from);
            colors.insert(to, moved);
            moves.push((from, to));
        }
        d.batch_relocate(&MoveBatch::new(moves), BatchOptions::default()).unwrap();
        exact_invariants(d.necklace())?;

        let len = d.necklace().len();
        let pos: Vec<usize> = (0..alpha * k).map(|i| (seed as usize >> 3).wrapping_mul(i + 7) % (len + i + 1)).collect();
        d.insert_batch(c, &pos, BatchOptions { prune: seed % 2 == 0 }).unwrap();
        exact_invariants(d.necklace())?;

        // delete the same number of beads of that color, one position at a time
        let mut colors = d.necklace().colors();
        let mut del = Vec::new();
        for i in 0..alpha * k {
            let of_c: Vec<usize> = (0..colors.len()).filter(|&p| colors[p] == c).collect();
            let p = of_c[(seed as usize).wrapping_add(i * 13) % of_c.len()];
            colors.remove(p);
            del.push(p);
        }
        d.delete_batch(&del, BatchOptions::default()).unwrap();
        exact_invariants(d.necklace())?;
    }

    #[test]
    fn tree_flow_is_feasible_and_near_minimal(
        nk in necklace(40),
        raw in prop::collection::vec(-3i64..=3, 5),
    ) {
        let k = nk.k();
        let mut excess: Vec<i64> = (0..k).map(|i| raw[i % raw.len()]).collect();
        let total: i64 = excess.iter().sum();
        excess[0] -= total;
        prop_assume!(excess.iter().any(|&e| e != 0));
        let tree = build_neighborhood_tree(&nk).unwrap();
        prop_assert!(tree.is_spanning_tree());
        let net = FlowNetwork::on_tree(&tree, excess.clone()).unwrap();
        let solved = solve_tree_flow(&net, &tree).unwrap();
        prop_assert!(solved.flow.is_feasible(&net));
        for s in net.sources() {
            prop_assert_eq!(solved.flow.outflow(s) - solved.flow.inflow(s), net.source_capacity(s));
        }
        for t in net.sinks() {
            prop_assert_eq!(solved.flow.inflow(t) - solved.flow.outflow(t), net.sink_capacity(t));
        }
        let graph = NeighborhoodGraph::build(&nk).unwrap();
        let best = exact_min_node_max_flow(&FlowNetwork::on_graph(&graph, excess.clone()).unwrap()).unwrap();
        prop_assert!(solved.active.len() <= 2 * best);
        let pruned = prune_active(&graph, &tree, &net, &solved);
        prop_assert!(pruned.flow.is_feasible_in(&graph, &excess));
        prop_assert!(pruned.active.len() <= solved.active.len());
    }
}

fn dense_invariants(d: &DenseNecklace) -> Result<(), TestCaseError> {
    let nk = d.necklace();
    let (n, k) = (nk.n(), nk.k());
    d.validate()
        .map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(d.cut_count(), n * (k - 1));
    prop_assert_eq!(owner_changes(nk), derive_cuts(nk).unwrap().len());
    prop_assert!(verify_fair(nk).is_fair());
    // every boundary without a cut sits just left of a first-of-color bead
    let beads: Vec<_> = nk.iter().collect();
    let mut seen = vec![false; n];
    let mut uncut = 0;
    for (i, &b) in beads.iter().enumerate() {
        let c = nk.color(b).index();
        if i > 0 && !d.has_cut_left(b) {
            uncut += 1;
            prop_assert!(!seen[c], "uncut boundary before a repeated color");
        }
        seen[c] = true;
    }
    prop_assert_eq!(uncut, n - 1);
    let index = d.index();
    for a in nk.agents() {
        for c in 0..n {
            let c = Color(c as u16);
            let b = index.bead(a, c);
            prop_assert_eq!(nk.color(b), c);
            prop_assert_eq!(nk.owner(b), Some(a));
        }
    }
    for c in 0..n {
        let occ = index.occurrences(Color(c as u16));
        prop_assert!(occ.windows(2).all(|w| nk.precedes(w[0], w[1])));
    }
    Ok(())
}

fn dense_instance() -> impl Strategy<Value = DenseNecklace> {
    (2usize..=5, 2usize..=5).prop_flat_map(|(n, k)| {
        let colors: Vec<Color> = (0..n * k).map(|i| Color((i % n) as u16)).collect();
        Just(colors).prop_shuffle().prop_map(move |colors| {
            let nk = Necklace::with_colors(&colors, n, k, Mode::Exact).unwrap();
            dense_offline_split(&nk).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn dense_operations_keep_structure(
        mut d in dense_instance(),
        steps in prop::collection::vec((any::<bool>(), any::<usize>(), any::<usize>()), 1..40),
    ) {
        dense_invariants(&d)?;
        let (n, m) = (d.necklace().n(), d.necklace().len());
        for (jump, a, b) in steps {
            let stats = if jump { d.jump(a % m, b % m) } else { d.swap(a % (m - 1)) }.unwrap();
            prop_assert!(stats.exchanges <= stats.case.bound(n), "{:?}: {}", stats.case, stats.exchanges);
            dense_invariants(&d)?;
        }
    }

    #[test]
    fn approx_intervals_nest_and_reproduce(
        k in 2usize..=4,
        colors in prop::collection::vec(prop::bool::ANY, 40..400),
        c in prop::sample::select(vec![0.001, 0.01, 1.0]),
        seed in any::<u64>(),
    ) {
        let colors: Vec<Color> = colors.into_iter().map(|r| if r { Color::RED } else { Color::BLUE }).collect();
        prop_assume!(colors.contains(&Color::RED) && colors.contains(&Color::BLUE));
        let cfg = ApproxConfig::new(0.25).unwrap().with_sample_constant(c).with_seed(seed);
        let mut nk = Necklace::new(&colors, k, Mode::Approx).unwrap();
        let plan = approx_static(&mut nk, &cfg).unwrap();
        prop_assert!(derive_cuts(&nk).unwrap().len() <= 2 * (k - 1));
        // each agent's beads form one block once earlier agents are removed
        let owners: Vec<AgentId> = nk.assigned_owners().unwrap();
        for j in 0..k as u32 {
            let rest: Vec<AgentId> = owners.iter().copied().filter(|a| a.0 >= j).collect();
            let held: Vec<usize> = (0..rest.len()).filter(|&i| rest[i].0 == j).collect();
            if let (Some(first), Some(last)) = (held.first(), held.last()) {
                prop_assert_eq!(last - first + 1, held.len(), "agent {} is split", j);
            }
        }
        prop_assert_eq!(&owners, &plan.owners());
        let mut again = Necklace::new(&colors, k, Mode::Approx).unwrap();
        approx_static(&mut again, &cfg).unwrap();
        prop_assert_eq!(again.assigned_owners().unwrap(), owners);
    }
}
