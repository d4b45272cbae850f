"""The planner's closed forms must agree with instantiated models exactly."""

import time

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asrlab.capacity import (
    OPTIMIZER_MEMORY,
    CapacityReport,
    catalogue,
    catalogue_entry,
    check_memory,
    conformer_layer_params,
    count_params,
)
from asrlab.model import DecoderConfig, EncoderConfig, ModelConfig, build_model


def _enc(**kw):
    base = dict(
        num_layers=5,
        model_dim=16,
        attention_heads=4,
        conv_kernel=3,
        ffn_expansion=2,
        conditioning="bias_concat",
        num_languages=3,
    )
    base.update(kw)
    return EncoderConfig(**base)


def _dec(**kw):
    base = dict(
        kind="transformer",
        num_layers=2,
        model_dim=16,
        hidden_dim=32,
        attention_heads=4,
    )
    base.update(kw)
    return DecoderConfig(**base)


def _cfg(encoder, decoder, vocab=37):
    return ModelConfig(encoder=encoder, decoder=decoder, vocab_size=vocab)


# one config per conditioning mode, both decoder kinds, both routing modes
SMALL_CONFIGS = {
    "bias-transformer": _cfg(_enc(), _dec()),
    "peradapter-las": _cfg(
        _enc(conditioning="per_language_adapter"),
        _dec(kind="las_lstm", hidden_dim=24),
    ),
    "shared-transformer": _cfg(_enc(num_layers=7, conditioning="shared_adapter"), _dec()),
    "plain-las": _cfg(
        _enc(conditioning="none", num_languages=1),
        _dec(kind="las_lstm", num_layers=3, hidden_dim=24),
    ),
    "bias-las-routed": _cfg(
        _enc(),
        _dec(kind="las_lstm", hidden_dim=24, routing="per_family", families={0: 0, 1: 1, 2: 0}),
    ),
    "peradapter-transformer-routed": _cfg(
        _enc(num_layers=6, conditioning="per_language_adapter"),
        _dec(routing="per_family", families={0: 0, 1: 0, 2: 1}),
    ),
}


@pytest.mark.parametrize("name", sorted(SMALL_CONFIGS))
def test_count_matches_built_model_exactly(name):
    config = SMALL_CONFIGS[name]
    model = build_model(config, seed=0)
    assert count_params(config).total == model.num_params()


def _component_sizes(model):
    sizes = {
        "input_projection": 0,
        "encoder_blocks": 0,
        "adapters": 0,
        "decoders": 0,
        "embeddings": 0,
        "output_projection": 0,
    }
    for name, p in model.named_parameters():
        n = p.data.size
        if name.startswith("encoder.input_proj"):
            sizes["input_projection"] += n
        elif name.startswith("encoder.adapters."):
            sizes["adapters"] += n
        elif name.startswith("encoder."):
            sizes["encoder_blocks"] += n
        elif name.endswith(".embed"):
            sizes["embeddings"] += n
        elif ".out_proj." in name:
            sizes["output_projection"] += n
        else:
            sizes["decoders"] += n
    return sizes


@pytest.mark.parametrize("name", sorted(SMALL_CONFIGS))
def test_component_split_matches_built_model(name):
    config = SMALL_CONFIGS[name]
    report = count_params(config)
    assert report.to_dict() == {**_component_sizes(build_model(config, seed=0)),
                                "total": report.total}


def test_total_is_component_sum():
    r = CapacityReport(1, 2, 3, 4, 5, 6)
    assert r.total == 21
    assert r.to_dict()["total"] == 21


def test_depth_linearity():
    # each layer past the stacking block adds one narrow-layer's worth
    d, k, e = 16, 3, 2
    totals = [
        count_params(_cfg(_enc(num_layers=n), _dec())).total for n in (5, 6, 9)
    ]
    per_layer = conformer_layer_params(d, k, e)
    assert totals[1] - totals[0] == per_layer
    assert totals[2] - totals[1] == 3 * per_layer


@settings(max_examples=30, deadline=None)
@given(
    layers=st.integers(min_value=5, max_value=9),
    width_units=st.integers(min_value=2, max_value=6),
    vocab=st.integers(min_value=8, max_value=200),
    grow=st.sampled_from(["layers", "width", "vocab", "dec_layers"]),
)
def test_totals_grow_monotonically(layers, width_units, vocab, grow):
    def total(l, w, v, dl):
        return count_params(
            _cfg(_enc(num_layers=l, model_dim=4 * w), _dec(num_layers=dl), vocab=v)
        ).total

    base = total(layers, width_units, vocab, 2)
    bumped = {
        "layers": (layers + 1, width_units, vocab, 2),
        "width": (layers, width_units + 1, vocab, 2),
        "vocab": (layers, width_units, vocab + 1, 2),
        "dec_layers": (layers, width_units, vocab, 3),
    }[grow]
    assert total(*bumped) > base


def test_too_shallow_config_rejected():
    with pytest.raises(ValueError, match="5 layers"):
        count_params(_cfg(_enc(num_layers=4), _dec()))


# --- catalogue ---------------------------------------------------------


def test_catalogue_names_unique_and_lookup():
    entries = catalogue()
    names = [e.name for e in entries]
    assert len(names) == len(set(names))
    assert catalogue_entry("b0").stated_params == 370e6
    with pytest.raises(KeyError):
        catalogue_entry("b9")


def test_catalogue_sizes_within_tolerance():
    for entry in catalogue():
        if entry.config is None or entry.stated_params is None:
            continue
        total = count_params(entry.config).total
        rel = abs(total - entry.stated_params) / entry.stated_params
        assert rel <= entry.tolerance, f"{entry.name}: {total:,} vs {entry.stated_params:,.0f}"


def test_flagship_sizes():
    mono = count_params(catalogue_entry("monolingual").config).total
    b0 = count_params(catalogue_entry("b0").config).total
    e3 = count_params(catalogue_entry("e3").config).total
    assert abs(mono - 140e6) / 140e6 < 0.15
    assert abs(b0 - 370e6) / 370e6 < 0.15
    assert abs(e3 - 1e9) / 1e9 < 0.15


def test_billion_scale_sweep_clusters():
    totals = [
        count_params(catalogue_entry(f"e{i}").config).total for i in range(1, 9)
    ]
    assert all(0.85e9 < t < 1.15e9 for t in totals)


def test_ten_billion_shape():
    entry = catalogue_entry("10b")
    report = count_params(entry.config)
    # encoder dominates by design: decoder stays at the 370M baseline's size
    assert report.encoder_blocks > 30 * (
        report.decoders + report.embeddings + report.output_projection
    )
    assert report.total > 8e9


def test_catalogue_is_fast():
    start = time.perf_counter()
    for entry in catalogue():
        if entry.config is not None:
            count_params(entry.config)
    assert time.perf_counter() - start < 1.0


def test_extended_vocab_entry_grows_embeddings():
    base = count_params(catalogue_entry("e3").config)
    grown = count_params(catalogue_entry("e3-32lang").config)
    assert grown.embeddings > base.embeddings
    assert grown.input_projection > base.input_projection  # wider one-hot
    assert grown.encoder_blocks == base.encoder_blocks


# --- memory ------------------------------------------------------------


def test_memory_replication_factors():
    r = count_params(catalogue_entry("b0").config)
    plain = check_memory(r, optimizer_kind="none")
    ada = check_memory(r, optimizer_kind="adafactor")
    adam = check_memory(r, optimizer_kind="adam")
    assert ada.per_partition_bytes == pytest.approx(2 * plain.per_partition_bytes)
    assert adam.per_partition_bytes == pytest.approx(3 * plain.per_partition_bytes)
    assert OPTIMIZER_MEMORY["adam"] == 3.0


def test_memory_partitions_and_verdict():
    r = count_params(catalogue_entry("10b").config)
    one = check_memory(r, bytes_per_param=4, partitions=1, per_partition_limit=16 * 1024**3)
    assert not one.feasible and one.margin_bytes < 0
    sharded = check_memory(r, bytes_per_param=4, partitions=8, per_partition_limit=16 * 1024**3)
    assert sharded.feasible
    assert sharded.per_partition_bytes == pytest.approx(one.per_partition_bytes / 8)


def test_memory_rejects_bad_arguments():
    r = count_params(catalogue_entry("b0").config)
    with pytest.raises(ValueError, match="partitions"):
        check_memory(r, partitions=0)
    with pytest.raises(ValueError, match="optimizer"):
        check_memory(r, optimizer_kind="sgd")
