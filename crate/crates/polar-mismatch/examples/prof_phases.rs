use num_bigint::BigUint;
use polar_mismatch::evolve::{synthesize, EvolutionLimits, TransformPath};
use polar_mismatch::exact::rat;
use polar_mismatch::lr::LrValue;
use polar_mismatch::spectrum::LrSpectrum;

fn main() {
    let limits = EvolutionLimits::default();
    let total = 17 + 29 + 5 + 43 + 13;
    let mk = |n: i64, d: i64| LrValue::from_rational(rat(n, d));
    let root = LrSpectrum::from_unmerged(vec![
        (mk(29, 17), rat(17, total)),
        (mk(17, 29), rat(29, total)),
        (mk(43, 5), rat(5, total)),
        (mk(5, 43), rat(43, total)),
        (mk(1, 1), rat(13, total)),
    ])
    .unwrap();
    let path: TransformPath = "+-+".parse().unwrap();
    let parent = synthesize(&root, &path, &limits).unwrap();
    eprintln!("parent support {}", parent.support_len());

    // Phase 1: enumeration into raw pairs (projective arithmetic).
    let t0 = std::time::Instant::now();
    let values: Vec<(BigUint, BigUint)> = parent
        .points()
        .iter()
        .map(|(v, _)| match v {
            LrValue::Zero => (BigUint::ZERO, BigUint::from(1u32)),
            LrValue::Infinity => (BigUint::from(1u32), BigUint::ZERO),
            LrValue::Finite(r) => (r.numer().magnitude().clone(), r.denom().magnitude().clone()),
        })
        .collect();
    let masses: Vec<&polar_mismatch::exact::Rational> =
        parent.points().iter().map(|(_, m)| m).collect();
    eprintln!("extract: {:?}", t0.elapsed());

    let t0 = std::time::Instant::now();
    let mut raw: Vec<(BigUint, BigUint)> = Vec::with_capacity(values.len() * (values.len() + 1) / 2);
    for i in 0..values.len() {
        for j in i..values.len() {
            let (na, da) = &values[i];
            let (nb, db) = &values[j];
            raw.push((na * db + nb * da, da * db + na * nb));
        }
    }
    eprintln!("enumerate values ({} pairs): {:?}", raw.len(), t0.elapsed());

    let t0 = std::time::Instant::now();
    let mut denom = BigUint::from(1u32);
    for m in &masses {
        denom = num_integer::lcm(denom.clone(), m.denom().magnitude().clone());
    }
    let scaled: Vec<BigUint> = masses
        .iter()
        .map(|m| m.numer().magnitude() * (&denom / m.denom().magnitude()))
        .collect();
    let mut weights: Vec<BigUint> = Vec::with_capacity(raw.len());
    for i in 0..scaled.len() {
        for j in i..scaled.len() {
            let mut w = &scaled[i] * &scaled[j];
            if i != j {
                w *= 2u32;
            }
            weights.push(w);
        }
    }
    eprintln!("weights: {:?}", t0.elapsed());

    let t0 = std::time::Instant::now();
    let mut order: Vec<u32> = (0..raw.len() as u32).collect();
    order.sort_unstable_by(|&x, &y| {
        let (na, da) = &raw[x as usize];
        let (nb, db) = &raw[y as usize];
        (na * db).cmp(&(nb * da))
    });
    eprintln!("sort: {:?}", t0.elapsed());

    let t0 = std::time::Instant::now();
    let mut merged = 0usize;
    let mut last: Option<&(BigUint, BigUint)> = None;
    for &ix in &order {
        let cur = &raw[ix as usize];
        let eq = match last {
            Some((ln, ld)) => ln * &cur.1 == &cur.0 * ld,
            None => false,
        };
        if !eq {
            merged += 1;
            last = Some(cur);
        }
    }
    eprintln!("merge pass: {merged} distinct in {:?}", t0.elapsed());
}
