"""Quick checks of the Python bindings.

Build first:  maturin develop -m crates/python/Cargo.toml --release
"""

import superchain_py as sc


def main():
    spec = sc.ChainSpec()
    assert spec.dim() == 22

    levels = sc.closed_spectrum(spec)
    assert len(levels) == 22
    energies = [e for e, _ in levels]
    assert energies == sorted(energies)
    for _, amps in levels[:3]:
        assert abs(sum(abs(a) ** 2 for a in amps) - 1.0) < 1e-10

    pairs = sc.pairs(spec)
    assert pairs[0][0] == 1 and pairs[0][3] > 0.0

    roots = sc.symmetric_point_energies(spec)
    assert abs(roots[0][0] - pairs[0][1]) < 1e-9

    for g in (0.5, 3.0):
        widths = [-2.0 * z.imag for z in sc.open_spectrum(spec.with_gamma(g))]
        assert abs(sum(widths) - 2.0 * g) < 1e-9
        assert min(widths) > -1e-12

    branches = sc.sweep_gamma(spec, [0.5, 1.0, 1.5])
    assert len(branches) == 22 and all(len(b) == 3 for b in branches)

    open_spec = spec.with_gamma(2.5)
    pair = sc.open_spectrum(open_spec)
    t = [0.5 * k for k in range(400)]
    p = sc.survival(open_spec, t)
    assert abs(p[0] - 1.0) < 1e-9
    assert all(b <= a + 1e-12 for a, b in zip(p, p[1:]))
    tau = sc.decay_time(t, p)
    assert tau is not None and tau > 0.0

    tau_c, censored = sc.coherence_time(open_spec.with_alpha(0.01))
    assert not censored and 0.0 < tau_c <= 1.0 / 0.02 + 1e-9

    try:
        sc.ChainSpec(n=1)
    except ValueError:
        pass
    else:
        raise AssertionError("n = 1 should be rejected")

    print(f"ok: lifetime {tau:.3f}, coherence time {tau_c:.3f}, {len(pair)} resonances")


if __name__ == "__main__":
    main()
