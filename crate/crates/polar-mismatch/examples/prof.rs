use polar_mismatch::evolve::{transform, EvolutionLimits, TransformKind};
use polar_mismatch::exact::rat;
use polar_mismatch::lr::LrValue;
use polar_mismatch::spectrum::LrSpectrum;

fn main() {
    let limits = EvolutionLimits::default();
    let total = 17 + 29 + 5 + 43 + 13;
    let mk = |n: i64, d: i64| LrValue::from_rational(rat(n, d));
    let s = LrSpectrum::from_unmerged(vec![
        (mk(29, 17), rat(17, total)),
        (mk(17, 29), rat(29, total)),
        (mk(43, 5), rat(5, total)),
        (mk(5, 43), rat(43, total)),
        (mk(1, 1), rat(13, total)),
    ])
    .unwrap();
    let mut cur = s;
    for (d, kind) in [
        TransformKind::Plus,
        TransformKind::Minus,
        TransformKind::Minus,
        TransformKind::Minus,
    ]
    .into_iter()
    .enumerate()
    {
        let t0 = std::time::Instant::now();
        cur = transform(&cur, kind, &limits).unwrap();
        eprintln!(
            "depth {}: support {} in {:?}",
            d + 1,
            cur.support_len(),
            t0.elapsed()
        );
    }
}
