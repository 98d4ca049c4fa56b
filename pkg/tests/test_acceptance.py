"""Acceptance criteria, one test each.

Every test prints a single ``criterion <n> PASS|FAIL: ...`` line (visible with
``pytest -v`` since capture is bypassed for it) and then asserts.
"""

import time

import numpy as np
import pytest

from timeops.bg_coherent import (
    auto_truncation,
    bg_state,
    bg_state_exponential,
    eigen_residual,
    overlap,
    resolution_of_identity,
)
from timeops.cli import main
from timeops.grid_rep import (
    POSITION_HALF_LINE,
    GridSpec,
    arrival_report,
    identity_22_refinement,
    omega_limit_report,
    position_spectrum_report,
    verify_similarity_21_26,
)
from timeops.operators import interior_size
from timeops.su11_fock import (
    SIMILARITY_TOLERANCE_N96,
    ModelParams,
    casimir,
    verify_algebra,
    verify_identity_17,
    verify_identity_18,
    verify_similarity_19,
)
from timeops.time_operator import (
    POSITIVE,
    PRINCIPAL,
    TimeOperatorConfig,
    assemble_T_quadrature,
    compare_assemblies,
    gauge_report,
)

K_VALUES = (0.8, 1.25, 3.0)


@pytest.fixture
def record(capsys):
    def _record(number: int, ok: bool, detail: str):
        with capsys.disabled():
            print(f"\ncriterion {number:2d} {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail

    return _record


def _labels():
    rng = np.random.default_rng(11)
    r = 3.0 * np.sqrt(rng.random(24))
    th = rng.uniform(-np.pi, np.pi, 24)
    return list(r * np.exp(1j * th)) + [3.0, -3.0, 3j, -3j, 0.0]


def test_criterion_01_algebra(record):
    t0 = time.perf_counter()
    worst = 0.0
    for k in K_VALUES:
        rep = verify_algebra(ModelParams.from_k(k), 64)
        for label in ("[K3,K+]-K+ interior", "[K3,K-]+K- interior", "[K-,K+]-2K3 interior"):
            worst = max(worst, rep.value(label))
    dt = time.perf_counter() - t0
    record(1, worst <= 1e-12 and dt < 1.0, f"su(1,1) interior residual {worst:.2e} <= 1e-12, {dt:.2f} s < 1 s")


def test_criterion_02_casimir(record):
    t0 = time.perf_counter()
    m = interior_size(64)
    worst = 0.0
    for g in (0.0, 0.5, 2.0, 8.0):
        c = casimir(ModelParams(g=g), 64).entries
        worst = max(worst, float(np.abs(c[:m, :m] - (4 * g - 3) / 16 * np.eye(m)).max()))
    dt = time.perf_counter() - t0
    record(2, worst <= 1e-12 and dt < 1.0, f"Casimir interior vs (4g-3)/16: {worst:.2e} <= 1e-12, {dt:.2f} s < 1 s")


def test_criterion_03_canonical_partner(record):
    t0 = time.perf_counter()
    worst = 0.0
    for k in K_VALUES:
        p = ModelParams.from_k(k)
        r17 = verify_identity_17(p, 64, 3)
        r18 = verify_identity_18(p, 64)
        worst = max([worst] + [r.value for r in r17.residual_table + r18.residual_table if r.tolerance is not None])
    dt = time.perf_counter() - t0
    record(3, worst <= 1e-12 and dt < 1.0, f"canonical-partner identities interior {worst:.2e} <= 1e-12, {dt:.2f} s < 1 s")


def test_criterion_04_coherent_states(record):
    t0 = time.perf_counter()
    eig = cons = ov = 0.0
    labels = _labels()
    for k in K_VALUES:
        p = ModelParams.from_k(k)
        for z in labels:
            st = bg_state(z, p)
            eig = max(eig, eigen_residual(st, p))
            cons = max(cons, float(np.abs(st.coeffs - bg_state_exponential(z, p, st.N).coeffs).max()))
        for z1, z2 in zip(labels[:-1], labels[1:]):
            n = max(auto_truncation(z1), auto_truncation(z2))
            direct = np.vdot(bg_state(z1, p, n).coeffs, bg_state(z2, p, n).coeffs)
            ov = max(ov, abs(overlap(z1, z2, p) - direct) / abs(direct))
    dt = time.perf_counter() - t0
    ok = eig <= 1e-10 and ov <= 1e-10 and cons <= 1e-12 and dt < 5.0
    record(4, ok, f"eigen {eig:.2e} <= 1e-10, overlap {ov:.2e} <= 1e-10, constructions {cons:.2e} <= 1e-12, {dt:.2f} s < 5 s")


def test_criterion_05_resolution_of_identity(record):
    t0 = time.perf_counter()
    dev = drift = 0.0
    for g in (0.5, 2.0, 8.0):
        rep = resolution_of_identity(ModelParams(g=g), 12)
        dev = max(dev, rep.value("max |block - I|"))
        drift = max(drift, rep.value("node-doubling drift"))
    dt = time.perf_counter() - t0
    ok = dev <= 1e-8 and drift <= 1e-9 and dt < 30.0
    record(5, ok, f"12x12 block vs I {dev:.2e} <= 1e-8, doubling drift {drift:.2e} <= 1e-9, {dt:.2f} s < 30 s")


def test_criterion_06_time_operator(record):
    t0 = time.perf_counter()
    rel = herm = diag = comm = 0.0
    for k in K_VALUES:
        for branch in (PRINCIPAL, POSITIVE):
            rep = compare_assemblies(TimeOperatorConfig(ModelParams.from_k(k), 16, branch))
            rel = max(rel, rep.value("quadrature vs closed form, relative, top 12x12"))
            comm = max(comm, rep.value("max |diag [H_CS, T]|"))
            if branch == PRINCIPAL:
                herm = max(herm, rep.value("hermiticity defect (quadrature)"))
                diag = max(diag, rep.value("max |diag T| (quadrature)"))
    dt = time.perf_counter() - t0
    ok = rel <= 1e-8 and herm <= 1e-12 and diag == 0.0 and comm == 0.0 and dt < 60.0
    record(
        6, ok,
        f"assemblies {rel:.2e} <= 1e-8, hermiticity {herm:.2e} <= 1e-12, diag T {diag:g} == 0, "
        f"diag [H_CS,T] {comm:g} == 0, {dt:.2f} s < 60 s",
    )


def test_criterion_07_gauge_freedom(record):
    worst = 0.0
    for k in K_VALUES:
        p = ModelParams.from_k(k)
        rep = gauge_report(assemble_T_quadrature(TimeOperatorConfig(p, 16)), p, max_degree=6)
        worst = max([worst] + [r.value for r in rep.residual_table])
    record(7, worst == 0.0, f"[H_CS, T + phi(H_CS)] - [H_CS, T] = {worst:g} for deg phi <= 6")


def test_criterion_08_exp_similarity(record):
    rep = verify_similarity_19(ModelParams(), sweep=(32, 64, 128))
    rows = dict(rep.convergence["block residual vs N"])
    ratios = (rows[32] / rows[64], rows[64] / rows[128])
    value = rep.value("block residual N=96")
    ok = rep.trends_passed and value <= SIMILARITY_TOLERANCE_N96
    record(
        8, ok,
        f"8x8 residual {rows[32]:.2e} -> {rows[64]:.2e} -> {rows[128]:.2e} (x{ratios[0]:.1e}, x{ratios[1]:.1e} >= 10); "
        f"N=96 value {value:.2e} <= frozen {SIMILARITY_TOLERANCE_N96:g}",
    )


def test_criterion_09_grid_spectrum(record):
    t0 = time.perf_counter()
    rep = position_spectrum_report(GridSpec(POSITION_HALF_LINE, 1024, 8.0), ModelParams(omega=1.0, g=2.0))
    dt = time.perf_counter() - t0
    levels = [rep.value(f"H_CS level {n} vs 2 omega (n+k) = {e}") for n, e in enumerate((2.5, 4.5, 6.5))]
    ok = max(levels) <= 1e-4 and dt < 30.0
    record(9, ok, f"levels 2.5/4.5/6.5 off by {max(levels):.2e} <= 1e-4 at M=1024, {dt:.2f} s < 30 s")


def test_criterion_10_kinetic_factorizations(record):
    rep = identity_22_refinement((512, 1024), 16.0)
    rows = rep.convergence["factorization residual"]
    ok = rep.passed and rep.trends_passed
    record(10, ok, f"K decompositions {rows[0][1]:.2e} (M=512) -> {rows[1][1]:.2e} (M=1024) <= 1e-6, >= x10")


def test_criterion_11_arrival(record):
    rep = arrival_report((512, 1024, 2048))
    rows = rep.convergence["|<[T_h,H_h]> - i|"]
    ok = rep.passed and rep.trends_passed
    text = " -> ".join(f"{v:.2e}" for _, v in rows)
    record(11, ok, f"|<[T_h,H_h]> - i| over M=512/1024/2048: {text}; final <= 5e-3, monotone")


def test_criterion_12_singular_similarity(record):
    rep = verify_similarity_21_26(ModelParams())
    rows = rep.convergence["intertwining residual"]
    ratio = rep.value("||T_CS - T_CS^H|| / ||T_CS||")
    ok = rep.passed and rep.trends_passed
    text = " -> ".join(f"{v:.2e}" for _, v in rows)
    record(12, ok, f"intertwining over M=256/512/1024: {text} strictly decreasing; non-Hermiticity {ratio:.2e} > 1e-3")


def test_criterion_13_omega_limit(record):
    rep = omega_limit_report()
    slope = rep.value("fitted exponent")
    record(13, rep.passed, f"||T_h(w) - (Q+Q^H)/2|| fitted exponent {slope:.3f} >= 1.8 over w = 0.2/0.1/0.05")


def _tree(root):
    return {p.relative_to(root): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_criterion_14_determinism(record, tmp_path):
    args = ["run", "--suite", "algebra,coherent,timeop", "--branch", "principal,positive"]
    codes = [
        main(args + ["--out", str(tmp_path / "a")]),
        main(args + ["--out", str(tmp_path / "b")]),
        main(args + ["--out", str(tmp_path / "c"), "--parallel"]),
    ]
    a, b, c = (_tree(tmp_path / d) for d in "abc")
    ok = codes == [0, 0, 0] and a == b == c and len(a) > 0
    record(14, ok, f"{len(a)} report files byte-identical across two serial runs and one --parallel run")
