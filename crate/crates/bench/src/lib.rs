//! Fixtures shared by the benchmarks in `benches/`.

use indicatrix::{Domain, DomainSpec, Modulus, Profile, ProfileSpec};

pub fn disk() -> Domain {
    DomainSpec::unit_disk().build().expect("unit disk")
}

pub fn square() -> Domain {
    DomainSpec::unit_square().build().expect("unit square")
}

pub fn koch(level: u32) -> Domain {
    DomainSpec::Koch { side: 1.0, level }.build().expect("koch prefractal")
}

/// `{0 < t < 1, 0 < y < 1 + 0.3 cos t}`.
pub fn cosine_special() -> Domain {
    let profile = ProfileSpec::Cosine { amplitude: 0.3, frequency: 1.0, offset: 1.0 };
    DomainSpec::Special { interval: [0.0, 1.0], profile }.build().expect("special domain")
}

pub fn cosine() -> Profile {
    Profile::cosine(1.0, 1.0, 0.0)
}

pub fn lipschitz() -> Modulus {
    Modulus::power(1.0).expect("power modulus")
}
