import numpy as np
import pytest

from cloudcolor import SynthSpec, generate_pair
from cloudcolor.errors import InvalidSpec


class TestGeneratePair:
    def test_identity_distortion_full_overlap_copies_colors(self):
        spec = SynthSpec(points=800, overlap=1.0, bias=0.0, gain=1.0, noise=0.0, seed=4)
        source, target, truth = generate_pair(spec)
        parents = truth["parent_index"]
        assert np.all(parents >= 0)
        assert np.array_equal(target.colors, source.colors[parents])

    def test_same_seed_reproduces_exactly(self):
        spec = SynthSpec(points=600, overlap=0.6, bias=12.0, gain=1.05, noise=3.0, seed=99)
        s1, t1, tr1 = generate_pair(spec)
        s2, t2, tr2 = generate_pair(spec)
        assert s1.equal_to(s2)
        assert t1.equal_to(t2)
        assert np.array_equal(tr1["parent_index"], tr2["parent_index"])

    def test_different_seed_differs(self):
        a = generate_pair(SynthSpec(points=400, seed=1))[0]
        b = generate_pair(SynthSpec(points=400, seed=2))[0]
        assert not a.equal_to(b)

    def test_bias_moves_overlap_mean_by_bias(self):
        spec = SynthSpec(points=4000, overlap=1.0, bias=20.0, gain=1.0, noise=0.0, seed=8)
        source, target, truth = generate_pair(spec)
        parents = truth["parent_index"]
        diff = (target.colors.astype(np.float64)
                - source.colors[parents].astype(np.float64))
        assert np.allclose(diff.mean(axis=0), 20.0, atol=1e-9)  # no clamping by design

    def test_counts_and_partition_of_target(self):
        spec = SynthSpec(points=1000, overlap=0.3, seed=5)
        source, target, truth = generate_pair(spec)
        assert len(source) == 1000
        assert len(target) == 1000
        assert truth["overlap_count"] == 300
        assert truth["extension_count"] == 700
        assert int(np.sum(truth["parent_index"] >= 0)) == 300

    def test_invalid_specs_rejected(self):
        with pytest.raises(InvalidSpec):
            generate_pair(SynthSpec(points=0))
        with pytest.raises(InvalidSpec):
            generate_pair(SynthSpec(overlap=1.5))
        with pytest.raises(InvalidSpec):
            generate_pair(SynthSpec(gain=0.0))
        with pytest.raises(InvalidSpec):
            generate_pair(SynthSpec(noise=-1.0))

    def test_extension_lies_beyond_source_footprint(self):
        spec = SynthSpec(points=1500, overlap=0.5, seed=21)
        source, target, truth = generate_pair(spec)
        ext = truth["parent_index"] < 0
        side = spec.spacing * np.sqrt(spec.points)
        assert np.all(target.positions[ext, 0] > source.positions[:, 0].max() - 1e-9)
