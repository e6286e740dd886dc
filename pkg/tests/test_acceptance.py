"""One test per acceptance criterion.

Each test stores a ``ACCEPTANCE k: PASS|FAIL ...`` line that is printed in the
terminal summary (and to stdout) before asserting.
"""
import itertools
import json
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from mabaxxx import ScalarProducts, diagonal_onshell_check, verify_izergin_properties, verify_oracle
from mabaxxx.bethe import FORMS
from mabaxxx.rational import omega_inverse_check, verify_sum_identities
from mabaxxx.report import Report, Tally

import conftest
from conftest import make_params, solved


def conclude(k, ok, summary):
    line = f"ACCEPTANCE {k}: {'PASS' if ok else 'FAIL'} {summary}".rstrip()
    conftest.ACCEPTANCE_LINES[k] = line
    print(line)
    assert ok, line


def worst(report: Report):
    rec = max(report.records, key=lambda r: r.max_rel_err / max(r.tolerance, 1e-300))
    return f"worst {rec.name} rel={rec.max_rel_err:.2e} (tol {rec.tolerance:.0e})"


def failures(report: Report):
    return "; ".join(f"{r.name}: {r.detail}" for r in report.failures())


def test_criterion_01_izergin_suite():
    start = time.perf_counter()
    rep = verify_izergin_properties(seed=0, max_n=6, draws=50, threads=1)
    elapsed = time.perf_counter() - start
    ok = rep.passed and elapsed <= 30
    conclude(1, ok, f"{len(rep.records)} properties, n,m<=6 x 50 draws, {worst(rep)}, "
                    f"{elapsed:.1f}s single-threaded {failures(rep)}")


def test_criterion_02_oracle_consistency():
    rep = verify_oracle(make_params(3, seed=7), seed=0, tolerance=1e-10)
    conclude(2, rep.passed, f"N=3, {len(rep.records)} relation groups, {worst(rep)} {failures(rep)}")


def test_criterion_03_offshell_scalar_product():
    sp = ScalarProducts(make_params(3, seed=1))
    rng = np.random.default_rng(303)
    t_sum = Tally("partition-sum~oracle", "scalar-product", 1e-8)
    t_sym = Tally("symmetry", "scalar-product-symmetry", 1e-8)
    for m, n in itertools.product(range(4), repeat=2):
        for _ in range(20):
            v = rng.normal(size=m) + 1j * rng.normal(size=m)
            u = rng.normal(size=n) + 1j * rng.normal(size=n)
            t_sum.add(sp.partition_sum(v, u), sp.oracle.scalar_product(v, u))
            if m != n:
                t_sym.add(*sp.symmetry_pair(v, u))
    rep = Report("c3", [t_sum.record(), t_sym.record()])
    conclude(3, rep.passed, f"N=3, m,n<=3 x 20 draws, {worst(rep)} {failures(rep)}")


def test_criterion_04_bethe_solving():
    notes, ok = [], True
    t_eig = Tally("lambda~dense", "bethe-spectrum", 1e-8)
    t_form = Tally("forms", "bethe-forms", 1e-8)
    for n in (1, 2, 3):
        _, bs, sols, coverage = solved(n)
        notes.append(f"N={n}: {len(sols)}/{2 ** n}")
        if n <= 2 and coverage != 1.0:
            ok = False
        if not sols or not all(s.certified for s in sols):
            ok = False
        for s in sols:
            for z, lam in s.eigenvalue_samples:
                spec, _ = bs.oracle.spectrum(z)
                t_eig.add(lam, spec[np.argmin(np.abs(spec - lam))])
            for form in FORMS[:3]:
                r = np.max(np.abs(bs.residual(form, s.roots, normalized=True)))
                t_form.add_error(r, r)
            for fam in (bs.theta_h_polynomials(), bs.theta_g_polynomials()):
                r = np.max(np.abs(bs.residual("BE5", s.roots, fam, normalized=True)))
                t_form.add_error(r, r)
    rep = Report("c4", [t_eig.record(), t_form.record()])
    conclude(4, ok and rep.passed, f"certified {', '.join(notes)}, {worst(rep)} {failures(rep)}")


def test_criterion_05_determinant_formulas():
    rep = Report("c5")
    elapsed = {}
    for n in (2, 3):
        params, _, sols, _ = solved(n)
        sp = ScalarProducts(params)
        start = time.perf_counter()
        rep.extend(sp.triangle_check(sols, np.random.default_rng(500 + n), draws=10).records)
        rep.extend(sp.frozen_check(sols, tolerance=1e-4).records)
        elapsed[n] = time.perf_counter() - start
    ok = rep.passed and elapsed[3] <= 120
    conclude(5, ok, f"N=2,3 all solutions x 10 v, {worst(rep)}, N=3 triangle {elapsed[3]:.1f}s "
                    f"{failures(rep)}")


def test_criterion_06_orthogonality_and_norm():
    params, _, sols, _ = solved(2)
    sp = ScalarProducts(params)
    rep = sp.orthogonality_check(sols, tolerance=1e-7)
    t_lim = Tally("diagonal-vs-limit", "on-shell-norm-limit", 1e-4)
    rng = np.random.default_rng(606)
    for s in sols:
        t_lim.add(sp.gram_matrix([s])[0, 0], sp.norm_limit(s, rng=rng))
    rep.extend([t_lim.record()])
    ok = rep.passed and len(sols) >= 4
    conclude(6, ok, f"N=2 Gram {len(sols)}x{len(sols)}, {worst(rep)} {failures(rep)}")


def test_criterion_07_onshell_identities():
    rng = np.random.default_rng(707)
    zs = list(1.5 * (rng.normal(size=7) + 1j * rng.normal(size=7)))
    rep = Report("c7")
    count = 0
    for n in (2, 3):
        params, _, sols, _ = solved(n)
        sp = ScalarProducts(params)
        for s in sols:
            rep.extend(sp.onshell_izergin_report(s, zs, tolerance=1e-8, eig_tolerance=1e-7).records)
            count += 1
    theta = make_params(2, seed=3).theta_array
    rep.extend(diagonal_onshell_check(theta, 1.3 + 0.2j, 0.7 - 0.4j, 1, zs).records)
    conclude(7, rep.passed and count > 0,
             f"{count} solutions at N=2,3 and 7 z, diagonal M=1 N=2, {worst(rep)} {failures(rep)}")


def test_criterion_08_appendix_relations():
    rep = Report("c8")
    rng = np.random.default_rng(808)
    for n in (2, 3):
        params, _, sols, _ = solved(n)
        sp = ScalarProducts(params)
        u = rng.normal(size=n) + 1j * rng.normal(size=n)
        v = rng.normal(size=n) + 1j * rng.normal(size=n)
        for k in range(n):
            rep.extend(verify_sum_identities(u, v, k, theta=sp.theta, tolerance=1e-7).records)
        rep.extend(omega_inverse_check(sp.theta, 1.0, tolerance=1e-7).records)
        rep.extend(omega_inverse_check(sp.theta, -1.0, tolerance=1e-7).records)
        for s in sols:
            rep.extend(sp.appendix_checks(s, rng=rng, tolerance=1e-7).records)
    conclude(8, rep.passed, f"N=2,3, {len(rep.records)} record groups, {worst(rep)} {failures(rep)}")


def test_criterion_09_negative_control():
    params, _, _, _ = solved(2)
    rep = ScalarProducts(params).negative_control(np.random.default_rng(909), draws=10,
                                                  threshold=1e-3, required=9)
    conclude(9, rep.passed, f"{rep.data['hits']}/{rep.data['draws']} off-shell draws disagree "
                            f"by > 1e-3*scale")


SUITE = ["verify-izergin", "verify-oracle", "verify-appendices", "solve-bethe",
         "spectrum-check", "norm"]


def _run_suite(workdir):
    env = dict(os.environ, PYTHONHASHSEED="0")
    outputs = []
    roots = os.path.join(workdir, "u.json")
    for cmd in SUITE:
        argv = [sys.executable, "-m", "mabaxxx", cmd, "--seed", "0", "--threads", "1",
                "--no-timing"]
        if cmd == "norm":
            argv += ["--u", roots]
        proc = subprocess.run(argv, capture_output=True, env=env, check=False)
        outputs.append(proc.stdout)
        if cmd == "solve-bethe":
            sol = json.loads(proc.stdout)["data"]["solutions"][0]
            with open(roots, "w", encoding="utf-8") as fh:
                json.dump(sol, fh)
    return outputs


@pytest.mark.slow
def test_criterion_10_reproducibility(tmp_path):
    a_dir, b_dir = tmp_path / "a", tmp_path / "b"
    a_dir.mkdir()
    b_dir.mkdir()
    first = _run_suite(str(a_dir))
    second = _run_suite(str(b_dir))
    same = [x == y for x, y in zip(first, second)]
    nonempty = all(x.strip() for x in first)
    ok = all(same) and nonempty
    diff = [c for c, s in zip(SUITE, same) if not s]
    conclude(10, ok, f"{len(SUITE)} CLI commands run twice, "
                     f"{sum(same)}/{len(SUITE)} reports byte-identical {diff or ''}")
