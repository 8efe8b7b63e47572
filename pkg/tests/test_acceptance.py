"""Acceptance criteria, each checked at its stated tolerance.

Every test prints a single PASS/FAIL line straight to the terminal.
"""

import math

import numpy as np
import pytest

from conftest import GOLDEN_H, random_primitive, random_stochastic
from entropy_lab import (Bernoulli, Markov, Mixture, PeriodicOrbit, Potential, ProperWeight,
                         Roof, constrained_pressure, equilibrium_gap, full_shift, gibbs_certificate,
                         golden_mean, kac_return_masses, katok_estimate, lift_measure,
                         markov_entropy, rpf_equilibrium, simplified_formula_report,
                         smb_deviation, tail_entropy_bound, tightness_verdict, transfer_pressure)
from entropy_lab.cli import main
from entropy_lab.entropy import tail_entropy
from entropy_lab.experiments import _enumerated_return_mass, run
from entropy_lab.measures import integrate
from entropy_lab.shift_space import cylinder_count

from test_experiments_cli import CONFIGS, load


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {detail}")
        assert ok, detail
    return emit


def test_c01_katok_exact(report):
    est = katok_estimate(Bernoulli([0.5, 0.5]), 16, 0, 0.5, full_shift(2))
    err = abs(est.value - math.log(2))
    report(1, err <= 1e-12 and est.diagnostics["count"] == 2**16,
           f"Katok on uniform 2-shift, count={est.diagnostics['count']}, |err|={err:.1e}")


def test_c02_simplified_formula(report):
    g = golden_mean()
    rep = simplified_formula_report(rpf_equilibrium(Potential.constant(0.0), g), 14, 0.3,
                                    [0, 1, 2], g)
    vals = [e.value for e in rep.estimates]
    worst = max(abs(v - GOLDEN_H) for v in vals)
    report(2, rep.spread <= 0.05 and worst <= 0.05,
           f"golden Parry k-spread={rep.spread:.4f}, max |value-log phi|={worst:.4f}")


def test_c03_gibbs_sandwich(report):
    rng = np.random.default_rng(2024)
    worst, checked = 0.0, 0
    for m in (2, 3, 4):
        made = 0
        while made < 8:
            trans = random_primitive(rng, m)
            if cylinder_count(trans, None, 12) > 2_000_000:
                continue
            mu = Markov(random_stochastic(rng, trans.matrix()))
            cert = gibbs_certificate(mu, Potential.markov_log(mu.P), 0.0, 12, trans)
            predicted = 1.0 / mu.pi.min()
            worst = max(worst, abs(cert.G - predicted) / predicted)
            made += 1
            checked += 1
    report(3, worst <= 1e-10,
           f"{checked} Markov measures, G vs 1/min pi worst relative error {worst:.1e}")


def test_c04_variational_principle(report):
    rng = np.random.default_rng(4)
    worst_gap, worst_excess = 0.0, -math.inf
    for _ in range(20):
        trans = random_primitive(rng, 3)
        phi = Potential.symbolwise(rng.normal(size=3).tolist())
        worst_gap = max(worst_gap, abs(equilibrium_gap(rpf_equilibrium(phi, trans), phi, trans)))
        P = transfer_pressure(phi, trans)
        M = trans.matrix()
        for _ in range(100):
            mu = Markov(random_stochastic(rng, M))
            worst_excess = max(worst_excess, markov_entropy(mu) + integrate(mu, phi) - P)
    report(4, worst_gap <= 1e-8 and worst_excess <= 1e-10,
           f"max equilibrium gap {worst_gap:.1e}, max h+int phi-P over 2000 measures {worst_excess:.1e}")


def test_c05_constrained_pressure(report):
    ps = np.arange(0.0, 0.2 + 5e-6, 1e-5)
    ps = ps[(ps > 0) & (ps <= 0.2)]
    oracle = float((-(ps * np.log(ps) + (1 - ps) * np.log1p(-ps))).max())
    r = constrained_pressure(Potential.constant(0.0), Potential.symbolwise([0.0, 1.0]), 0.2,
                             full_shift(2))
    err = abs(r.value - oracle)
    report(5, err <= 1e-4, f"dual {r.value:.6f} vs grid oracle {oracle:.6f}, |err|={err:.1e}")


def test_c06_kac(report):
    g = golden_mean()
    mu = rpf_equilibrium(Potential.constant(0.0), g)
    res = kac_return_masses(mu, [0], 60)
    mismatch = max(abs(res.masses[n - 1] - _enumerated_return_mass(mu, {0}, n, g))
                   for n in range(1, 13))
    ok = 1 - 1e-8 <= res.weighted_sum <= 1 and mismatch <= 1e-12
    report(6, ok, f"sum n mu(A_n) = {res.weighted_sum:.13f}, enumeration mismatch {mismatch:.1e}")


def test_c07_tail_entropy_bound(report):
    rng = np.random.default_rng(7)
    bad = 0
    for i in range(50):
        K = 200
        kind = i % 3
        ks = np.arange(1, K + 1)
        if kind == 0:
            m = rng.uniform(0.05, 0.95) ** ks
        elif kind == 1:
            m = 1.0 / ks ** rng.uniform(2.05, 4.0)
        else:
            m = rng.random(K) * np.exp(-rng.uniform(0.05, 1.0) * ks)
        m = m / max(1.0, m.sum())
        M = int(rng.integers(1, 40))
        if tail_entropy(m, M) > tail_entropy_bound(m, M):
            bad += 1
    report(7, bad == 0, f"50 summable sequences, {bad} bound failures")


def test_c08_tightness(report):
    f = ProperWeight(lambda a: a, "symbol index")
    fixed = tightness_verdict([Bernoulli([0.5, 0.5])] * 10, f, 1.0)
    base = Bernoulli([0.5, 0.5])
    esc = [Mixture([base, PeriodicOrbit((n,))], [0.6, 0.4]) for n in range(1, 40)]
    escaping = tightness_verdict(esc, f, 10.0)
    report(8, fixed.status == "tight" and escaping.status == "bound_violated",
           f"fixed Bernoulli: {fixed.status}, escaping orbits: {escaping.status}")


def test_c09_smb(report):
    mu = rpf_equilibrium(Potential.constant(0.0), golden_mean())
    s = smb_deviation(mu, 2000, 1000, seed=0)
    err = abs(s.mean - 0.481212)
    report(9, err <= 0.01, f"SMB mean {s.mean:.6f} (seed 0), |err|={err:.1e}")


def test_c10_abramov(report):
    two = lift_measure(Bernoulli([0.5, 0.5]), Roof.constant(2.0)).flow_entropy
    parry = rpf_equilibrium(Potential.constant(0.0), golden_mean())
    unit = lift_measure(parry, Roof.constant(1.0)).flow_entropy
    err = abs(two - math.log(2) / 2)
    ok = err <= 1e-12 and abs(two - 0.346574) <= 1e-6 and unit == markov_entropy(parry)
    report(10, ok, f"tau=2 flow entropy {two:.12f}, unit roof exact: {unit == markov_entropy(parry)}")


def test_c11_escape_of_mass(report, tmp_path):
    details, ok = [], True
    drift = run(load("semicontinuity_drift"))
    for row in drift.rows:
        p = 0.5 + 1 / (row["index"] + 10)
        ok &= abs(row["entropy_closed_form"] + p * math.log(p) + (1 - p) * math.log(1 - p)) < 1e-12
    ok &= drift.verdict == "holds"
    orbit = run(load("semicontinuity_orbit"))
    ok &= all(abs(r["entropy_closed_form"] - 0.6 * math.log(2)) < 1e-12 for r in orbit.rows)
    ok &= orbit.verdict == "holds"
    block_cfg = load("semicontinuity_block")
    block = run(block_cfg)
    ok &= all(abs(r["entropy_closed_form"] - (0.6 * math.log(2) + 0.4 * math.log(4))) < 1e-12
              for r in block.rows)
    details.append(f"verdicts {drift.verdict}/{orbit.verdict}/{block.verdict}")

    threshold = math.log(4)
    for h in (0.0, 1.0, threshold - 1e-3, threshold, threshold + 1e-3, 2.0):
        cfg = dict(block_cfg, entropy_at_infinity=h)
        want = "holds" if h >= threshold else "violated"
        ok &= run(cfg).verdict == want
    details.append("block threshold at h_inf = log 4")

    for name in ("semicontinuity_drift", "semicontinuity_orbit", "semicontinuity_block"):
        outs = []
        for d in ("a", "b"):
            main(["run", str(CONFIGS / f"{name}.json"), "--out", str(tmp_path / d), "--seed", "1"])
            outs.append(sorted((f.name, f.read_bytes()) for f in (tmp_path / d).iterdir()))
        ok &= outs[0] == outs[1]
    details.append("byte-identical reruns")
    report(11, ok, ", ".join(details))
