import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from igr.device import DeviceParams, TraceSeries, build_device, run_trace, steady_state, with_length
from igr.reservoir import (DEFAULT_CHANNEL_LENGTHS, DegenerateColumnError, DriveSettings,
                           InputRangeError, InsufficientResolutionError, NodeSpec,
                           ReservoirStateMatrix, TraceLengthMismatchError, apply_normalizer,
                           assemble_states, drive_channels, encode_input, extract_virtual_nodes,
                           fit_normalizer, invert_input, node_label, virtual_node_indices)
from igr.tasks import gen_input


def fake_trace(values, samples_per_step, period=50e-3):
    values = np.asarray(values, dtype=float)
    n = values.size
    sp = period / samples_per_step
    z = np.zeros(n)
    return TraceSeries(times=np.arange(n) * sp, v_gate=z, i_drain=values, i_source=-values,
                       i_gate=z, x_component=values, y_component=z, gate_charge=z, edl_charge=z,
                       sample_period=sp, samples_per_step=samples_per_step)


# --- encoding ------------------------------------------------------------------

def test_encode_input_examples():
    assert np.all(encode_input([0, 0, 0], 50e-3, 0.75).voltage_at(np.linspace(0, 0.149, 50)) == 0)
    assert encode_input([0.5], 50e-3, 0.75).step_values[0] == 0.5
    assert encode_input([0.25], 50e-3, 0.75, volts_per_unit=2.0).step_values[0] == 0.5
    prog = encode_input([0.1, 0.4], 50e-3, 0.75, volts_per_unit=0.01)
    assert prog.baseline_voltage == 0.0
    np.testing.assert_allclose(prog.step_values, [0.001, 0.004])


@pytest.mark.parametrize("bad", [[0.6], [-0.1], [np.nan]])
def test_encode_input_range(bad):
    with pytest.raises(InputRangeError):
        encode_input(bad, 50e-3, 0.75)


def test_invert_input_examples():
    assert invert_input([0.0]).tolist() == [0.5]
    assert invert_input([0.25]).tolist() == [0.25]
    with pytest.raises(InputRangeError):
        invert_input([0.7])


@given(arrays(float, st.integers(1, 50), elements=st.floats(0, 0.5)))
def test_inversion_is_an_involution(u):
    np.testing.assert_allclose(invert_input(invert_input(u)), u, atol=1e-15)


# --- node layout ----------------------------------------------------------------

def test_node_spec_validation():
    with pytest.raises(ValueError):
        NodeSpec(0, 0)
    with pytest.raises(ValueError):
        NodeSpec(-1, 3)
    assert NodeSpec().node_count == 10
    assert NodeSpec().halved() == NodeSpec(3, 2)


def test_default_indices():
    trace = fake_trace(np.zeros(40), 40)
    prog = encode_input([0.1], 50e-3, 0.75)
    idx = virtual_node_indices(trace, prog, NodeSpec())
    # 30 on-phase samples (0..29), 10 off-phase samples (30..39)
    assert idx[0] == 1 and idx[5] == 31
    assert idx[4] == 29 and idx[9] == 39
    assert np.all(np.diff(idx) > 0)


def test_offset_longer_than_phase():
    trace = fake_trace(np.zeros(40), 40)
    prog = encode_input([0.1], 50e-3, 0.75)
    with pytest.raises(InsufficientResolutionError):
        virtual_node_indices(trace, prog, NodeSpec(first_sample_offset=20e-3))


def test_node_collision():
    trace = fake_trace(np.zeros(20), 20)
    prog = encode_input([0.1], 50e-3, 0.75)
    with pytest.raises(InsufficientResolutionError):
        virtual_node_indices(trace, prog, NodeSpec())


def test_constant_trace_gives_equal_nodes():
    prog = encode_input([0.1, 0.2, 0.3], 50e-3, 0.75)
    nodes = extract_virtual_nodes(fake_trace(np.full(120, 3.0), 40), prog)
    assert nodes.shape == (3, 10) and np.all(nodes == 3.0)


def test_nodes_read_the_right_samples():
    prog = encode_input([0.1, 0.2], 50e-3, 0.75)
    values = np.arange(80.0)
    nodes = extract_virtual_nodes(fake_trace(values, 40), prog)
    idx = virtual_node_indices(fake_trace(values, 40), prog, NodeSpec())
    np.testing.assert_array_equal(nodes[1], 40 + idx)


def test_trace_must_cover_program():
    prog = encode_input([0.1, 0.2], 50e-3, 0.75)
    with pytest.raises(TraceLengthMismatchError):
        extract_virtual_nodes(fake_trace(np.zeros(40), 40), prog)


@pytest.mark.xfail(strict=True, reason="the edge charging current is smaller than the conduction "
                   "change one sample after the edge, so node 1 is not the on-phase extremum")
def test_node_one_captures_the_spike():
    params = with_length(DeviceParams(), 700e-6)
    state = steady_state(build_device(params), 0.0, -0.5)
    prog = encode_input([0.5], 50e-3, 0.75)
    trace = run_trace(state, prog, -0.5, samples_per_step=40, timestep=2.5e-5)
    nodes = extract_virtual_nodes(trace, prog)[0, :5]
    dev = np.abs(nodes - trace.i_drain[0])
    assert np.argmax(dev) == 0


# --- assembly -------------------------------------------------------------------

def _traces(lengths, K=3, S=40, seed=0):
    rng = np.random.default_rng(seed)
    return {L: fake_trace(rng.normal(size=K * S), S) for L in lengths}


def test_eighty_columns_without_inversion():
    prog = encode_input([0.1, 0.2, 0.3], 50e-3, 0.75)
    m = assemble_states(_traces(DEFAULT_CHANNEL_LENGTHS), prog)
    assert m.shape == (3, 80)
    assert m.labels[0] == "ch20_on_v1" and m.labels[5] == "ch20_off_v6"
    assert m.labels[-1] == "ch1000_off_v10"


def test_eighty_columns_with_inversion():
    prog = encode_input([0.1, 0.2, 0.3], 50e-3, 0.75)
    m = assemble_states(_traces(DEFAULT_CHANNEL_LENGTHS), prog, NodeSpec(),
                        _traces(DEFAULT_CHANNEL_LENGTHS, seed=1), prog)
    assert m.shape == (3, 80)
    assert m.labels[:4] == ["ch20_on_v1", "ch20_on_v1_inv", "ch20_on_v2", "ch20_on_v2_inv"]
    assert m.labels[6] == "ch20_off_v4"


@given(st.integers(1, 8), st.integers(0, 5), st.integers(0, 5), st.booleans())
def test_node_count_algebra(channels, on, off, inversion):
    if on + off == 0:
        return
    spec = NodeSpec(on, off)
    lengths = DEFAULT_CHANNEL_LENGTHS[:channels]
    prog = encode_input([0.1, 0.2, 0.3], 50e-3, 0.75)
    inv = _traces(lengths, seed=2) if inversion else None
    m = assemble_states(_traces(lengths), prog, spec, inv, prog if inversion else None)
    per_source = spec.halved().node_count if inversion else spec.node_count
    assert m.shape[1] == channels * per_source * (2 if inversion else 1)
    assert len(m.labels) == m.shape[1] == len(set(m.labels))


def test_single_node_matrix_is_that_sequence():
    prog = encode_input([0.1, 0.2, 0.3], 50e-3, 0.75)
    traces = _traces([100e-6])
    m = assemble_states(traces, prog, NodeSpec(1, 0))
    np.testing.assert_array_equal(m.values[:, 0], traces[100e-6].i_drain.reshape(3, 40)[:, 1])


def test_mismatched_lengths_rejected():
    prog = encode_input([0.1, 0.2, 0.3], 50e-3, 0.75)
    traces = _traces([20e-6])
    traces[50e-6] = fake_trace(np.zeros(80), 40)
    with pytest.raises((TraceLengthMismatchError, ValueError)):
        assemble_states(traces, prog)


def test_state_matrix_csv(tmp_path):
    m = ReservoirStateMatrix(np.array([[1.0, 2.0], [3.0, 4.5]]), ["ch20_on_v1", "ch20_off_v2"])
    m.to_csv(tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_text().splitlines() == ["ch20_on_v1,ch20_off_v2", "1,2", "3,4.5"]


def test_node_label_format():
    assert node_label(70e-6, NodeSpec(), 6, True) == "ch70_off_v7_inv"


# --- normalisation ----------------------------------------------------------------

def test_normalizer_examples():
    X = np.array([[2.0, 1.0], [4.0, 3.0], [4.0, 5.0]])
    n = fit_normalizer(X, 2)
    out = apply_normalizer(n, X)
    np.testing.assert_array_equal(out[:2, 0], [0.0, 1.0])
    assert out[2, 0] == 1.0            # test value equal to train max
    assert out[2, 1] == 2.0            # test rows may leave [0, 1]
    with pytest.raises(DegenerateColumnError):
        fit_normalizer(np.ones((3, 2)), 3)
    with pytest.raises(ValueError):
        fit_normalizer(X, 0)


@given(arrays(float, (12, 3), elements=st.floats(-1e3, 1e3)))
def test_normalization_idempotent_on_training_rows(X):
    if np.any(np.ptp(X[:8], axis=0) < 1e-3):
        return
    Y = fit_normalizer(X, 8).apply(X)
    assert Y[:8].min() >= 0 and Y[:8].max() <= 1
    again = fit_normalizer(Y, 8)
    np.testing.assert_allclose(again.minimum, 0, atol=1e-12)
    np.testing.assert_allclose(again.maximum, 1, atol=1e-12)


# --- physical drive ------------------------------------------------------------------

@pytest.mark.parametrize("length", [20e-6, 200e-6, 1000e-6])
def test_echo_state_property(length):
    params = with_length(DeviceParams(), length)
    u = gen_input(500, seed=3)
    prog = encode_input(u, 50e-3, 0.75, volts_per_unit=0.01)
    starts = [build_device(params), steady_state(build_device(params), 0.3, -0.5)]
    rows = [extract_virtual_nodes(run_trace(s, prog, -0.5, samples_per_step=40, timestep=2.5e-4), prog)
            for s in starts]
    assert np.max(np.abs(rows[0][:5] - rows[1][:5]) / np.abs(rows[1][:5])) > 0.1
    assert np.max(np.abs(rows[0][50:] - rows[1][50:]) / np.abs(rows[1][50:])) < 0.01


def test_columns_are_distinct():
    u = gen_input(100, seed=5)
    prog = encode_input(u, 50e-3, 0.75, volts_per_unit=0.01)
    inv = encode_input(invert_input(u), 50e-3, 0.75, volts_per_unit=0.01)
    settings = DriveSettings(settle_steps=20)
    m = assemble_states(drive_channels(prog, settings=settings), prog, NodeSpec(),
                        drive_channels(inv, settings=settings), inv)
    assert m.shape == (100, 80)
    cols = m.values.T
    for i in range(80):
        for j in range(i + 1, 80):
            assert not np.array_equal(cols[i], cols[j]), (m.labels[i], m.labels[j])


def test_parallel_drive_matches_serial():
    prog = encode_input(gen_input(10, seed=1), 50e-3, 0.75, volts_per_unit=0.01)
    settings = DriveSettings(settle_steps=5, warmup_steps=0)
    lengths = (20e-6, 1000e-6)
    a = drive_channels(prog, lengths, settings=settings, jobs=1)
    b = drive_channels(prog, lengths, settings=settings, jobs=2)
    for L in lengths:
        np.testing.assert_array_equal(a[L].i_drain, b[L].i_drain)
