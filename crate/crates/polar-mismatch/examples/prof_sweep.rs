use polar_mismatch::channel::{ChannelAtom, ChannelPair, SymmetricChannel};
use polar_mismatch::evolve::EvolutionLimits;
use polar_mismatch::exact::rat;
use polar_mismatch::robustness::{sweep_preservation, Variant};

fn main() {
    // Worst-case generator shape: two ratio classes plus a tie symbol.
    let total = 17 + 29 + 5 + 43 + 13;
    let v = SymmetricChannel::make_symmetric(
        vec![
            ChannelAtom { symbol: "a".into(), p0: rat(17, total), p1: rat(29, total) },
            ChannelAtom { symbol: "a'".into(), p0: rat(29, total), p1: rat(17, total) },
            ChannelAtom { symbol: "b".into(), p0: rat(5, total), p1: rat(43, total) },
            ChannelAtom { symbol: "b'".into(), p0: rat(43, total), p1: rat(5, total) },
            ChannelAtom { symbol: "t".into(), p0: rat(13, total), p1: rat(13, total) },
        ],
        &[("a".into(), "a'".into()), ("b".into(), "b'".into())],
    )
    .unwrap();
    // Favoring transfer: move some above-1 mass to below-1 symbols.
    let w = SymmetricChannel::make_symmetric(
        vec![
            ChannelAtom { symbol: "a".into(), p0: rat(17 + 20, total), p1: rat(29 - 10, total) },
            ChannelAtom { symbol: "a'".into(), p0: rat(29 - 10, total), p1: rat(17 + 20, total) },
            ChannelAtom { symbol: "b".into(), p0: rat(5 + 3, total), p1: rat(43 - 13, total) },
            ChannelAtom { symbol: "b'".into(), p0: rat(43 - 13, total), p1: rat(5 + 3, total) },
            ChannelAtom { symbol: "t".into(), p0: rat(13, total), p1: rat(13, total) },
        ],
        &[("a".into(), "a'".into()), ("b".into(), "b'".into())],
    )
    .unwrap();
    let pair = ChannelPair::pair(w, v).unwrap();
    let t_tree = std::time::Instant::now();
    let tree = polar_mismatch::robustness::evolve_pair_tree(&pair, 4, &EvolutionLimits::default()).unwrap();
    eprintln!("pair tree: {:?}; deepest supports: {:?}", t_tree.elapsed(),
        tree.nodes.iter().filter(|n| n.path.len() == 4).map(|n| (n.path.to_string(), n.w_law.support_len(), n.v_law.support_len())).collect::<Vec<_>>());
    let t_metrics = std::time::Instant::now();
    let mut acc = 0usize;
    for node in &tree.nodes {
        acc += polar_mismatch::metrics::tie_split(&node.w_law).p_eq.numer().bits() as usize;
        acc += polar_mismatch::metrics::tie_split(&node.v_law).p_eq.numer().bits() as usize;
    }
    eprintln!("tie splits over all nodes: {:?} (acc {acc})", t_metrics.elapsed());
    let t0 = std::time::Instant::now();
    let sweep = sweep_preservation(&pair, 4, Variant::Weak, &EvolutionLimits::default()).unwrap();
    eprintln!(
        "sweep: {} nodes in {:?}; max support {}",
        sweep.nodes.len(),
        t0.elapsed(),
        sweep
            .nodes
            .iter()
            .map(|n| n.n)
            .max()
            .unwrap_or(0)
    );
    let viol = sweep
        .nodes
        .iter()
        .filter(|n| !n.report.all_hold())
        .count();
    eprintln!("violations: {viol}");
}
