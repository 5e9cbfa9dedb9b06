import json

import numpy as np
import pytest

from walkrank.dataset import (
    Dataset,
    DatasetError,
    dataset_to_dict,
    gen_synthetic,
    load_dataset,
    save_dataset,
)
from walkrank.graphs import validate_feasibility
from walkrank.stationary import exact_stationary, series_stationary
from walkrank.graphs import transition_model


MINIMAL = {
    "m1": 1,
    "m2": 1,
    "alpha": 0.15,
    "queries": [
        {
            "id": "q0",
            "nodes": [{"features": [1.0]}],
            "seed": [0],
            "edges": [],
            "judgments": [],
            "split": "train",
        }
    ],
}


def write_json(tmp_path, payload, name="ds.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return path


class TestLoadDataset:
    def test_minimal_valid(self, tmp_path):
        ds = load_dataset(write_json(tmp_path, MINIMAL))
        assert len(ds.queries) == 1
        assert ds.queries[0].p == 1

    def test_not_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{nope")
        with pytest.raises(DatasetError, match="not valid JSON"):
            load_dataset(path)

    def test_negative_feature_names_node(self, tmp_path):
        payload = json.loads(json.dumps(MINIMAL))
        payload["queries"][0]["nodes"] = [{"features": [1.0]}, {"features": [-2.0]}]
        payload["queries"][0]["seed"] = [0]
        with pytest.raises(DatasetError, match="node 1"):
            load_dataset(write_json(tmp_path, payload))

    def test_duplicate_seed_reported(self, tmp_path):
        payload = json.loads(json.dumps(MINIMAL))
        payload["queries"][0]["nodes"] = [{"features": [1.0]}, {"features": [1.0]}]
        payload["queries"][0]["seed"] = [1, 1]
        with pytest.raises(DatasetError, match="duplicate seed"):
            load_dataset(write_json(tmp_path, payload))

    def test_wrong_feature_length(self, tmp_path):
        payload = json.loads(json.dumps(MINIMAL))
        payload["queries"][0]["nodes"] = [{"features": [1.0, 2.0]}]
        with pytest.raises(DatasetError, match="length 1"):
            load_dataset(write_json(tmp_path, payload))

    def test_bad_margin(self, tmp_path):
        payload = json.loads(json.dumps(MINIMAL))
        payload["queries"][0]["nodes"] = [{"features": [1.0]}, {"features": [1.0]}]
        payload["queries"][0]["judgments"] = [{"more": 0, "less": 1, "margin": 1.0}]
        with pytest.raises(DatasetError, match="margin"):
            load_dataset(write_json(tmp_path, payload))

    def test_duplicate_query_ids(self, tmp_path):
        payload = json.loads(json.dumps(MINIMAL))
        payload["queries"] = payload["queries"] * 2
        with pytest.raises(DatasetError, match="duplicate query ids"):
            load_dataset(write_json(tmp_path, payload))

    def test_alpha_range(self, tmp_path):
        payload = json.loads(json.dumps(MINIMAL))
        payload["alpha"] = 1.0
        with pytest.raises(DatasetError, match="alpha"):
            load_dataset(write_json(tmp_path, payload))


class TestRoundTrip:
    def test_semantic_identity(self, tmp_path):
        ds = gen_synthetic(num_queries=4, p=20, s=3, m1=2, m2=3, judgment_count=5, seed=99)
        path = tmp_path / "ds.json"
        save_dataset(ds, path)
        back = load_dataset(path)
        assert dataset_to_dict(back) == dataset_to_dict(ds)

    def test_bytes_deterministic(self, tmp_path):
        a = gen_synthetic(num_queries=3, p=10, s=2, m1=2, m2=2, judgment_count=3, seed=7)
        b = gen_synthetic(num_queries=3, p=10, s=2, m1=2, m2=2, judgment_count=3, seed=7)
        pa, pb = tmp_path / "a.json", tmp_path / "b.json"
        save_dataset(a, pa)
        save_dataset(b, pb)
        assert pa.read_bytes() == pb.read_bytes()

    def test_different_seeds_differ(self, tmp_path):
        a = gen_synthetic(num_queries=3, p=10, s=2, m1=2, m2=2, judgment_count=3, seed=7)
        b = gen_synthetic(num_queries=3, p=10, s=2, m1=2, m2=2, judgment_count=3, seed=8)
        assert dataset_to_dict(a) != dataset_to_dict(b)


class TestGenSynthetic:
    def test_feasible_for_default_ball(self):
        ds = gen_synthetic(num_queries=4, p=20, s=3, m1=2, m2=3, judgment_count=5, seed=1)
        assert validate_feasibility(ds.queries, ds.default_ball()).ok

    def test_all_dangling_when_s_zero(self):
        ds = gen_synthetic(num_queries=2, p=6, s=0, m1=2, m2=2, judgment_count=2, seed=3)
        phi = np.ones(ds.m)
        for g in ds.queries:
            assert g.n_edges == 0
            tm = transition_model(g, phi, ds.alpha)
            for N in (0, 3, 9):
                np.testing.assert_allclose(series_stationary(tm, N), tm.pi0, atol=1e-15)
            np.testing.assert_allclose(exact_stationary(tm), tm.pi0, atol=1e-12)

    def test_split_assignment(self):
        ds = gen_synthetic(num_queries=20, p=5, s=2, m1=1, m2=1, judgment_count=2, seed=5)
        assert len(ds.subset("train").queries) == 10
        assert len(ds.subset("test").queries) == 10

    def test_too_many_judgments_rejected(self):
        with pytest.raises(ValueError, match="exceeds"):
            gen_synthetic(num_queries=1, p=3, s=1, m1=1, m2=1, judgment_count=50, seed=0)

    def test_cycle_structure_outdegree_one(self):
        ds = gen_synthetic(
            num_queries=2, p=12, s=1, m1=2, m2=2, judgment_count=3, seed=4, structure="cycle"
        )
        for g in ds.queries:
            assert g.n_edges == 12
            assert g.dangling.size == 0
            out_deg = np.diff(g.out_indptr)
            assert np.all(out_deg == 1)


class TestDataset:
    def test_r_is_max_rows(self):
        ds = gen_synthetic(num_queries=3, p=8, s=2, m1=1, m2=1, judgment_count=4, seed=2)
        assert ds.r == max(g.r for g in ds.queries) == 4

    def test_subset_missing_split(self):
        ds = gen_synthetic(num_queries=1, p=4, s=1, m1=1, m2=1, judgment_count=1, seed=2)
        with pytest.raises(DatasetError, match="no queries"):
            ds.subset("test")

    def test_mismatched_dims_rejected(self):
        ds = gen_synthetic(num_queries=2, p=4, s=1, m1=1, m2=1, judgment_count=1, seed=2)
        with pytest.raises(DatasetError, match="feature dims"):
            Dataset(m1=2, m2=1, alpha=0.15, queries=ds.queries)
