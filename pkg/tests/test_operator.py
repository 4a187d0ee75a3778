import math

import numpy as np
import pytest

from opnet.functions import PiecewiseConstFn, SampledFn, lp_norm
from opnet.geometry import Domain, build_partition
from opnet.integral_op import DiscretizedOperator, apply, lq_norm
from opnet.kernels import (
    Kernel,
    builtin_kernel,
    certified_metrics,
    estimate_metrics,
    kernel_sup_norm,
    load_tabulated_kernel,
    matrix_norm,
    modulus_of_continuity,
    save_tabulated_kernel,
)


def unit_domain():
    return Domain(np.array([0.0]), np.array([1.0]))


def scalar_kernel(fn, name="custom"):
    return Kernel(1, 1, lambda xi, s: np.asarray(fn(xi, s))[..., None, None],
                  name, {})


# --------------------------------------------------------------------------
# application


def test_zero_kernel_maps_everything_to_zero():
    dom = unit_domain()
    part = build_partition(dom, 0.5)
    kern = builtin_kernel("constant", dom, value=0.0)
    op = DiscretizedOperator(kern, part)
    x = SampledFn(part, np.random.default_rng(0).standard_normal(
        (part.points.shape[0], 1)))
    assert np.all(op.apply(x).values == 0.0)


def test_constant_kernel_is_the_mean():
    dom = unit_domain()
    part = build_partition(dom, 0.5)
    kern = builtin_kernel("constant", dom, value=1.0)
    op = DiscretizedOperator(kern, part)
    x = SampledFn(part, np.full((part.points.shape[0], 1), 0.37))
    assert op.apply(x).values[:, 0] == pytest.approx(0.37, abs=1e-13)


def test_product_kernel_half_xi():
    dom = unit_domain()
    part = build_partition(dom, 0.25)
    kern = builtin_kernel("product", dom)
    y = apply(kern, SampledFn(part, np.ones((part.points.shape[0], 1))), part)
    assert y.values[:, 0] == pytest.approx(part.points[:, 0] / 2, abs=1e-12)


def test_apply_piecewise_matches_sampled():
    # cell-integral cache and direct quadrature are the same arithmetic
    dom = unit_domain()
    part = build_partition(dom, 0.25)
    kern = builtin_kernel("gaussian", dom, beta=2.0)
    op = DiscretizedOperator(kern, part)
    rng = np.random.default_rng(1)
    f = PiecewiseConstFn(part, rng.standard_normal((part.num_cells, 1)))
    via_cache = op.apply(f)
    via_nodes = op.apply(f.to_sampled())
    assert via_cache.values == pytest.approx(via_nodes.values, abs=1e-12)


def test_linearity():
    dom = unit_domain()
    part = build_partition(dom, 0.25)
    kern = builtin_kernel("gaussian", dom, beta=1.0)
    op = DiscretizedOperator(kern, part)
    rng = np.random.default_rng(2)
    for _ in range(5):
        a, b = rng.standard_normal(2)
        x1 = rng.standard_normal((part.points.shape[0], 1))
        x2 = rng.standard_normal((part.points.shape[0], 1))
        lhs = op.apply(SampledFn(part, a * x1 + b * x2)).values
        rhs = a * op.apply(SampledFn(part, x1)).values \
            + b * op.apply(SampledFn(part, x2)).values
        assert lhs == pytest.approx(rhs, abs=1e-10)


def test_holder_consistency():
    # ||F x||_q <= (integral of ||K||^q)^(1/q) * ||x||_p
    dom = unit_domain()
    part = build_partition(dom, 0.2)
    kern = builtin_kernel("gaussian", dom, beta=3.0)
    op = DiscretizedOperator(kern, part)
    p, q = 2.0, 2.0
    kvals = kern.evaluate(part.points[:, None, :], part.points[None, :, :])
    knorm = matrix_norm(kvals)
    k_lq = (np.einsum("a,b,ab->", part.weights, part.weights, knorm**q)) ** (1 / q)
    rng = np.random.default_rng(3)
    for _ in range(5):
        x = SampledFn(part, rng.standard_normal((part.points.shape[0], 1)))
        assert lq_norm(op.apply(x), q) <= k_lq * lp_norm(x, p) + 1e-10


def test_quadrature_convergence():
    dom = unit_domain()
    kern = builtin_kernel("gaussian", dom, beta=1.0)
    norms = []
    for nodes in (2, 3, 6):
        part = build_partition(dom, 0.25, nodes_per_axis=nodes)
        f = PiecewiseConstFn(part, np.ones((part.num_cells, 1)))
        norms.append(lq_norm(DiscretizedOperator(kern, part).apply(f), 2))
    # each node doubling gains several digits against the finest rule
    assert abs(norms[0] - norms[2]) < 1e-4
    assert abs(norms[1] - norms[2]) < 1e-7
    assert abs(norms[1] - norms[2]) < abs(norms[0] - norms[2])


def test_dimension_mismatch():
    dom = unit_domain()
    part = build_partition(dom, 0.5)
    kern = builtin_kernel("constant", dom, value=1.0)
    op = DiscretizedOperator(kern, part)
    with pytest.raises(ValueError):
        op.apply(SampledFn(part, np.ones((part.points.shape[0], 2))))


# --------------------------------------------------------------------------
# norms


def test_lp_norm_examples():
    dom = unit_domain()
    part = build_partition(dom, 0.5)
    zero = SampledFn(part, np.zeros((part.points.shape[0], 1)))
    assert lp_norm(zero, 2) == 0.0
    const = SampledFn(part, np.full((part.points.shape[0], 1), -0.4))
    for p in (1.5, 2, 3):
        assert lp_norm(const, p) == pytest.approx(0.4)
    halfstep = PiecewiseConstFn(part, np.array([[1.0], [0.0]]))
    assert lp_norm(halfstep, 2) == pytest.approx(math.sqrt(0.5))


def test_lp_norm_rejects_small_p():
    dom = unit_domain()
    part = build_partition(dom, 0.5)
    f = SampledFn(part, np.ones((part.points.shape[0], 1)))
    with pytest.raises(ValueError):
        lp_norm(f, 1.0)


# --------------------------------------------------------------------------
# kernel metrics


def test_sup_norm_examples():
    dom = unit_domain()
    assert kernel_sup_norm(builtin_kernel("constant", dom, value=0.0), dom) == 0.0
    assert kernel_sup_norm(builtin_kernel("constant", dom, value=1.0), dom) == 1.0
    # xi * s on [0,1]^2 attains its max 1 at the corner
    assert kernel_sup_norm(builtin_kernel("product", dom), dom) == pytest.approx(1.0)


def test_modulus_examples_and_monotonicity():
    dom = unit_domain()
    const = builtin_kernel("constant", dom, value=2.0)
    table = modulus_of_continuity(const, dom, [0.05, 0.1, 0.5], resolution=8)
    assert all(w == 0.0 for _, w in table)

    second_arg = scalar_kernel(lambda xi, s: s[..., 0])  # Lipschitz 1 in s
    table = modulus_of_continuity(second_arg, dom, [0.1, 0.25], resolution=21)
    assert dict(table)[0.1] == pytest.approx(0.1, abs=1e-12)
    assert dict(table)[0.25] == pytest.approx(0.25, abs=1e-12)

    gauss = builtin_kernel("gaussian", dom, beta=4.0)
    table = modulus_of_continuity(gauss, dom, [0.02, 0.05, 0.1, 0.3], resolution=15)
    values = [w for _, w in table]
    assert values == sorted(values)


def test_certified_metrics_upper_bound_estimated():
    dom = unit_domain()
    for name, kw in [("gaussian", {"beta": 2.0}), ("product", {})]:
        kern = builtin_kernel(name, dom, **kw)
        cert = certified_metrics(kern)
        est = estimate_metrics(kern, dom, [0.05, 0.1, 0.2], resolution=15)
        assert cert.sup_norm >= est.sup_norm - 1e-12
        for d, w in est.omega_table:
            assert cert.omega(d)[0] >= w - 1e-12


def test_omega_table_lookup_and_flag():
    from opnet.errors import RefineOmegaError
    from opnet.kernels import KernelMetrics

    metrics = KernelMetrics(sup_norm=1.0, provenance="estimated",
                            omega_table=((0.1, 0.02), (0.2, 0.05)))
    assert metrics.omega(0.05) == (0.02, False)  # conservative upward lookup
    assert metrics.omega(0.15) == (0.05, False)
    assert metrics.omega(0.5) == (0.05, True)  # off-table, flagged
    with pytest.raises(RefineOmegaError):
        metrics.omega(0.5, strict=True)


def test_block_diag_kernel():
    dom = unit_domain()
    kern = builtin_kernel(
        "block_diag", dom,
        components=[("gaussian", {"beta": 1.0}), ("constant", {"value": 0.5})],
    )
    assert (kern.m, kern.n) == (2, 2)
    val = kern.evaluate(np.array([[0.1]]), np.array([[0.1]]))
    assert val[0] == pytest.approx(np.diag([1.0, 0.5]))
    assert kern.analytic.sup_norm == 1.0


# --------------------------------------------------------------------------
# tabulated kernels


@pytest.mark.parametrize("binary", [False, True])
def test_tabulated_round_trip(tmp_path, binary):
    dom = unit_domain()
    kern = builtin_kernel("gaussian", dom, beta=1.0)
    path = tmp_path / ("k.bin" if binary else "k.txt")
    save_tabulated_kernel(path, kern, dom, [41], binary=binary)
    loaded, loaded_dom = load_tabulated_kernel(path)
    assert loaded_dom.dim == 1
    rng = np.random.default_rng(4)
    xi = rng.uniform(0, 1, (20, 1))
    s = rng.uniform(0, 1, (20, 1))
    got = loaded.evaluate(xi, s)[..., 0, 0]
    want = kern.evaluate(xi, s)[..., 0, 0]
    assert got == pytest.approx(want, abs=2e-3)  # multilinear on a 41-grid


def test_tabulated_rejects_garbage(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("not a kernel\n")
    with pytest.raises(ValueError):
        load_tabulated_kernel(path)
