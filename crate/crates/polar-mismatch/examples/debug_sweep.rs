use num_traits::Signed;
use polar_mismatch::evolve::{transform, EvolutionLimits, TransformKind};
use polar_mismatch::exact::{rat, Rational};
use polar_mismatch::lr::LrValue;
use polar_mismatch::metrics::tie_split;
use polar_mismatch::spectrum::LrSpectrum;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rand_symmetric_spectrum(rng: &mut ChaCha8Rng, pairs: usize, tie: bool) -> LrSpectrum {
    loop {
        let n = 2 * pairs + usize::from(tie);
        let weights: Vec<i64> = (0..n).map(|_| rng.gen_range(1..50)).collect();
        let total: i64 = weights.iter().sum();
        let mut points: Vec<(LrValue, Rational)> = Vec::new();
        let mut idx = 0;
        for _ in 0..pairs {
            let a = rat(weights[idx], total);
            let b = rat(weights[idx + 1], total);
            idx += 2;
            let lr1 = LrValue::from_rational(&b / &a);
            let lr2 = LrValue::from_rational(&a / &b);
            points.push((lr1, a));
            points.push((lr2, b));
        }
        if tie {
            points.push((LrValue::one(), rat(weights[idx], total)));
        }
        if let Ok(s) = LrSpectrum::from_unmerged(points) {
            if s.is_reciprocal_balanced() {
                return s;
            }
        }
    }
}

fn conditioned_w_law(rng: &mut ChaCha8Rng, t: &LrSpectrum) -> LrSpectrum {
    let mut masses: Vec<(LrValue, Rational)> =
        t.points().iter().map(|(l, m)| (l.clone(), m.clone())).collect();
    let lt: Vec<usize> = (0..masses.len())
        .filter(|&i| masses[i].0.cmp_one() == std::cmp::Ordering::Less)
        .collect();
    let gt: Vec<usize> = (0..masses.len())
        .filter(|&i| masses[i].0.cmp_one() == std::cmp::Ordering::Greater)
        .collect();
    if lt.is_empty() || gt.is_empty() {
        return t.clone();
    }
    for &g in &gt {
        let f = rat(rng.gen_range(0..=10), 10);
        let moved = &masses[g].1 * &f;
        masses[g].1 -= &moved;
        let target = lt[rng.gen_range(0..lt.len())];
        masses[target].1 += moved;
    }
    LrSpectrum::from_unmerged(masses).unwrap()
}

fn conds(s: &LrSpectrum, t: &LrSpectrum) -> (bool, bool, bool) {
    let st = tie_split(s);
    let tt = tie_split(t);
    (
        !(&tt.p_lt - &tt.p_gt).is_negative(),
        !(tt.p_ge() - st.p_ge()).is_negative(),
        !(st.p_le() - tt.p_le()).is_negative(),
    )
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let limits = EvolutionLimits::default();
    let mut viol = [[0u64; 3]; 2]; // [kind][cond]
    let mut pairs_with_c_viol = 0u64;
    let trials = 30;
    let mut accepted = 0;
    for trial in 0..trials {
        let t0 = std::time::Instant::now();
        let pairs = 1 + (rng.gen::<bool>() as usize);
        let tie = rng.gen::<bool>();
        let t = rand_symmetric_spectrum(&mut rng, pairs, tie);
        let s = conditioned_w_law(&mut rng, &t);
        let root = conds(&s, &t);
        if !(root.0 && root.1 && root.2) {
            continue;
        }
        accepted += 1;
        let mut frontier = vec![(s, t)];
        let mut had_c = false;
        for _ in 0..4 {
            let mut next = Vec::new();
            for (s, t) in &frontier {
                let parent_ok = {
                    let c = conds(s, t);
                    c.0 && c.1 && c.2
                };
                for (ki, kind) in [TransformKind::Minus, TransformKind::Plus]
                    .into_iter()
                    .enumerate()
                {
                    let ns = transform(s, kind, &limits).unwrap();
                    let nt = transform(t, kind, &limits).unwrap();
                    if parent_ok {
                        let c = conds(&ns, &nt);
                        if !c.0 {
                            viol[ki][0] += 1;
                        }
                        if !c.1 {
                            viol[ki][1] += 1;
                            println!("B VIOLATION kind={kind:?} s={s:?} t={t:?}");
                        }
                        if !c.2 {
                            viol[ki][2] += 1;
                            had_c = true;
                        }
                    }
                    next.push((ns, nt));
                }
            }
            frontier = next;
        }
        if had_c {
            pairs_with_c_viol += 1;
        }
        println!("trial {trial}: {:?}", t0.elapsed());
    }
    println!("accepted roots: {accepted}/{trials}");
    println!("one-step violations [minus][A,B,C]: {:?}", viol[0]);
    println!("one-step violations [plus][A,B,C]: {:?}", viol[1]);
    println!("pairs with any C violation to depth 4: {pairs_with_c_viol}");
}
