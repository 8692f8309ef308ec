import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from flowguard.errors import ConfigError, DimensionError, NumericError
from flowguard.flow import (
    CouplingBlock,
    FlowModel,
    TrainConfig,
    build_flow,
    couple_forward,
    couple_inverse,
    load_flow,
    permutation_layer,
    restricted_scale,
    save_flow,
    train_flow,
)
from flowguard.numcore import Rng


def randomized(model, scale=0.3, seed=0):
    """Same architecture with every parameter jittered off its initialization."""
    rng = np.random.default_rng(seed)
    return model.with_params({k: v + scale * rng.normal(size=v.shape) for k, v in model.params.items()})


def fd_log_det(model, x, h=1e-6):
    d = x.size
    jac = np.empty((d, d))
    for j in range(d):
        e = np.zeros(d)
        e[j] = h
        up = model.forward(x[None] + e, check=False).z[0]
        dn = model.forward(x[None] - e, check=False).z[0]
        jac[:, j] = (up - dn) / (2 * h)
    return np.linalg.slogdet(jac)[1]


# -- scaling variants ----------------------------------------------------------------


def test_half_sigmoid_range():
    g, _ = restricted_scale(np.linspace(-50, 50, 2001), "half_sigmoid")
    assert np.all(g.data > 0.5) and np.all(g.data < 1.0)


def test_clip15_bounded():
    with np.errstate(divide="ignore"):
        g, _ = restricted_scale(np.linspace(-1e4, 1e4, 4001), "clip15")
    assert np.all(np.abs(g.data) <= 15.0)


def test_additive_block_zero_logdet():
    block = CouplingBlock(0, 4, 0, "additive", hidden_width=8)
    params = block.init_params(Rng(0))
    params = {k: v + 0.5 for k, v in params.items()}
    _, logdet = couple_forward(block, params, np.random.default_rng(0).normal(size=(5, 4)))
    assert np.array_equal(logdet, np.zeros(5))


def test_unknown_scaling_rejected():
    with pytest.raises(ConfigError, match="half_sigmoid"):
        build_flow(4, scaling="tanh")


# -- coupling -----------------------------------------------------------------------


def test_mask_is_partition_and_alternates():
    a, b = CouplingBlock(0, 5, 0), CouplingBlock(1, 5, 1)
    assert sorted(np.concatenate([a.a_idx, a.b_idx])) == list(range(5))
    assert np.array_equal(a.a_idx, b.b_idx) and np.array_equal(a.b_idx, b.a_idx)
    assert len(a.a_idx) == 3  # odd d: the a-part takes the extra coordinate


def test_zero_nets_half_sigmoid_scale_is_three_quarters():
    block = CouplingBlock(0, 4, 0, "half_sigmoid", hidden_width=8)
    params = block.init_params(Rng(1))
    x = np.random.default_rng(1).normal(size=(6, 4))
    h, logdet = couple_forward(block, params, x)
    assert np.allclose(h[:, block.b_idx], 0.75 * x[:, block.b_idx], rtol=0, atol=1e-15)
    assert np.array_equal(h[:, block.a_idx], x[:, block.a_idx])
    assert np.allclose(logdet, 2 * math.log(0.75), rtol=1e-15)
    back = couple_inverse(block, params, h)
    assert np.allclose(back[:, block.b_idx], h[:, block.b_idx] / 0.75, rtol=1e-15)


def test_additive_zero_t_is_identity():
    block = CouplingBlock(0, 4, 1, "additive", hidden_width=8)
    params = block.init_params(Rng(2))
    x = np.random.default_rng(2).normal(size=(3, 4))
    h, logdet = couple_forward(block, params, x)
    assert np.array_equal(h, x) and np.array_equal(logdet, np.zeros(3))
    assert np.array_equal(couple_inverse(block, params, h), x)


@pytest.mark.parametrize("variant", ["sigmoid", "half_sigmoid", "clip15", "additive"])
def test_coupling_round_trip(variant):
    block = CouplingBlock(0, 6, 0, variant, hidden_width=16)
    rng = np.random.default_rng(3)
    params = {k: v + 0.3 * rng.normal(size=v.shape) for k, v in block.init_params(Rng(3)).items()}
    x = rng.normal(size=(64, 6))
    h, _ = couple_forward(block, params, x)
    assert np.max(np.abs(couple_inverse(block, params, h) - x)) <= 1e-12
    h32, _ = couple_forward(block, params, x, "single")
    assert np.max(np.abs(couple_inverse(block, params, h32, "single") - x)) <= 1e-4


def test_non_finite_subnet_output_carries_block_index():
    model = build_flow(4, n_blocks=3, hidden_width=8, actnorm=False, mix_every=0)
    params = dict(model.params)
    params["layer1.s.b2"] = np.full_like(params["layer1.s.b2"], np.nan)
    with pytest.raises(NumericError) as info:
        model.with_params(params).forward(np.zeros((2, 4)))
    assert info.value.block == 1


# -- whole model --------------------------------------------------------------------


def test_zero_block_model_is_identity():
    model = build_flow(3, n_blocks=0, actnorm=False)
    x = np.random.default_rng(4).normal(size=(5, 3))
    code = model.forward(x)
    assert np.array_equal(code.z, x) and np.array_equal(code.log_det, np.zeros(5))
    assert np.array_equal(model.inverse(x), x)


def test_zero_block_log_density_values():
    assert build_flow(2, n_blocks=0, actnorm=False).log_density(np.zeros((1, 2)))[0] == pytest.approx(
        -math.log(2 * math.pi), abs=1e-12)
    assert build_flow(1, n_blocks=0, actnorm=False).log_density(np.zeros((1, 1)))[0] == pytest.approx(
        -0.5 * math.log(2 * math.pi), abs=1e-15)


def test_permutation_layer_leaves_density_unchanged():
    base = randomized(build_flow(4, n_blocks=2, hidden_width=8, mix_every=0, seed=5))
    perm = permutation_layer(len(base.layers), 4, [2, 0, 3, 1])
    params = dict(base.params)
    params.update(perm.init_params(Rng(0)))
    mixed = FlowModel(4, base.layers + [perm], params)
    x = np.random.default_rng(5).normal(size=(10, 4))
    assert np.allclose(mixed.log_density(x), base.log_density(x), rtol=0, atol=1e-12)
    assert np.allclose(mixed.inverse(mixed.forward(x).z), x, atol=1e-12)


def test_forward_deterministic_and_log_det_is_layer_sum():
    model = randomized(build_flow(6, n_blocks=4, hidden_width=16, seed=6))
    x = np.random.default_rng(6).normal(size=(32, 6))
    a, b = model.forward(x), model.forward(x)
    assert a.z.tobytes() == b.z.tobytes() and a.log_det.tobytes() == b.log_det.tobytes()
    assert np.allclose(a.log_det, np.sum(a.layer_log_dets, axis=0), rtol=0, atol=1e-12)


def test_invertibility_sixteen_blocks_random_parameters():
    model = randomized(build_flow(8, n_blocks=16, hidden_width=32, seed=7), scale=0.2, seed=7)
    x = np.random.default_rng(7).normal(size=(1024, 8))
    assert np.max(np.abs(x - model.inverse(model.forward(x).z))) <= 1e-9


def test_invertibility_fresh_eight_block_model():
    model = build_flow(8, seed=8)
    x = np.random.default_rng(8).normal(size=(1024, 8))
    assert np.max(np.abs(x - model.inverse(model.forward(x).z))) <= 1e-9


@pytest.mark.parametrize("d", [2, 4, 6])
def test_log_det_matches_finite_difference_jacobian(d):
    model = randomized(build_flow(d, n_blocks=4, hidden_width=16, seed=d), scale=0.3, seed=d)
    x = np.random.default_rng(d).normal(size=(8, d))
    analytic = model.forward(x).log_det
    for i in range(len(x)):
        ref = fd_log_det(model, x[i])
        assert abs(analytic[i] - ref) <= 1e-4 * max(abs(ref), 1.0)


def test_factor_out_invertible_with_correct_log_det():
    model = randomized(build_flow(6, n_blocks=4, hidden_width=16, factor_out_after=1, seed=9), seed=9)
    assert [layer.width for layer in model.layers][-1] == 3
    x = np.random.default_rng(9).normal(size=(16, 6))
    assert np.max(np.abs(model.inverse(model.forward(x).z) - x)) <= 1e-12
    assert abs(model.forward(x[:1]).log_det[0] - fd_log_det(model, x[0])) <= 1e-4


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        build_flow(4).forward(np.zeros((2, 3)))


def test_single_precision_error_exceeds_double(ring_flow, ring_test):
    x = ring_test.samples
    re64 = np.linalg.norm(x - ring_flow.inverse(ring_flow.forward(x).z), axis=1)
    z32 = ring_flow.forward(x.astype(np.float32), "single").z
    re32 = np.linalg.norm(x - ring_flow.inverse(z32, "single"), axis=1)
    assert np.mean(re32 >= re64) >= 0.99
    assert np.median(re32) > np.median(re64)


def test_density_integrates_to_one(gauss2d_flow):
    model, _ = gauss2d_flow
    grid = np.linspace(-6, 6, 241)
    xx, yy = np.meshgrid(grid, grid)
    pts = np.stack([xx.ravel(), yy.ravel()], axis=1)
    dens = np.exp(model.log_density(pts)).reshape(xx.shape)
    mass = trapezoid(trapezoid(dens, grid, axis=1), grid)
    assert abs(mass - 1.0) <= 0.02


def test_training_reaches_gaussian_entropy(gauss2d_flow, gauss2d):
    model, trace = gauss2d_flow
    nll = -np.mean(model.log_density(gauss2d))
    assert abs(nll - (1 + math.log(2 * math.pi))) <= 0.1
    assert trace[-1] < trace[0]


def test_training_zero_iterations_and_determinism(gauss2d):
    model = build_flow(2, n_blocks=2, hidden_width=8, seed=1, init_data=gauss2d)
    same, trace = train_flow(model, gauss2d, TrainConfig(iterations=0))
    assert trace == [] and all(np.array_equal(same.params[k], model.params[k]) for k in model.params)
    cfg = TrainConfig(iterations=20, seed=2)
    a, ta = train_flow(model, gauss2d, cfg)
    b, tb = train_flow(model, gauss2d, cfg)
    assert np.array(ta).tobytes() == np.array(tb).tobytes()
    assert all(a.params[k].tobytes() == b.params[k].tobytes() for k in a.params)


def test_training_rejects_wrong_width(gauss2d):
    with pytest.raises(DimensionError):
        train_flow(build_flow(3, n_blocks=1), gauss2d, TrainConfig(iterations=1))


def test_checkpoint_round_trip(tmp_path):
    model = randomized(build_flow(5, n_blocks=3, hidden_width=8, factor_out_after=1, seed=10))
    path = tmp_path / "flow.fgw"
    save_flow(model, path)
    loaded = load_flow(path)
    x = np.random.default_rng(10).normal(size=(7, 5))
    assert loaded.forward(x).z.tobytes() == model.forward(x).z.tobytes()
    assert loaded.arch() == model.arch()
    save_flow(loaded, tmp_path / "again.fgw")
    assert (tmp_path / "again.fgw").read_bytes() == path.read_bytes()
