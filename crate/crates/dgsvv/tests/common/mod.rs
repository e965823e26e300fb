#![allow(dead_code)]

use dgsvv::{Block3x5, GasModel, Primitive, State5};
use rand::{rngs::StdRng, Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn random_primitive(rng: &mut StdRng) -> Primitive {
    Primitive {
        rho: rng.gen_range(0.2..3.0),
        u: [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)],
        p: rng.gen_range(0.2..4.0),
    }
}

pub fn random_state(rng: &mut StdRng, gas: &GasModel) -> State5 {
    let p = random_primitive(rng);
    gas.conserved(p.rho, p.u, p.p)
}

pub fn random_block(rng: &mut StdRng) -> Block3x5 {
    let mut b = Block3x5::ZERO;
    for k in 0..15 {
        b.set(k, rng.gen_range(-1.0..1.0));
    }
    b
}
