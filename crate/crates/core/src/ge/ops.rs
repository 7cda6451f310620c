//! Variation operators.

use alloc::vec::Vec;
use rand::Rng;

use super::Genotype;

/// Single-point crossover with independent cut points `ca` in `a` and `cb`
/// in `b`, each in `1..=len`: the children are `a[..ca] ++ b[cb..]` and
/// `b[..cb] ++ a[ca..]`.
pub fn crossover_at(a: &Genotype, b: &Genotype, ca: usize, cb: usize) -> (Genotype, Genotype) {
    assert!((1..=a.len()).contains(&ca) && (1..=b.len()).contains(&cb), "cut point out of range");
    let (a, b) = (a.codons(), b.codons());
    let mut c1 = Vec::with_capacity(ca + b.len() - cb);
    c1.extend_from_slice(&a[..ca]);
    c1.extend_from_slice(&b[cb..]);
    let mut c2 = Vec::with_capacity(cb + a.len() - ca);
    c2.extend_from_slice(&b[..cb]);
    c2.extend_from_slice(&a[ca..]);
    (Genotype(c1), Genotype(c2))
}

/// With probability `p`, [`crossover_at`] at uniform cut points; otherwise
/// copies of the parents.
pub fn crossover<R: Rng + ?Sized>(a: &Genotype, b: &Genotype, p: f64, rng: &mut R) -> (Genotype, Genotype) {
    if !rng.gen_bool(p) {
        return (a.clone(), b.clone());
    }
    let ca = rng.gen_range(1..=a.len());
    let cb = rng.gen_range(1..=b.len());
    crossover_at(a, b, ca, cb)
}

/// Replaces each codon by a uniform byte with probability `p`.
pub fn mutate<R: Rng + ?Sized>(g: &Genotype, p: f64, rng: &mut R) -> Genotype {
    let codons = g.codons().iter().map(|&c| if rng.gen_bool(p) { rng.gen() } else { c }).collect();
    Genotype(codons)
}
