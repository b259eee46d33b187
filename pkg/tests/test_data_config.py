"""Tests for CSV ingestion, standardization, synthetic data and run configuration."""

import json

import numpy as np
import pytest

from rankgrad.config import RunConfig, load_config
from rankgrad.data import (
    CATEGORICAL,
    CONTINUOUS,
    Dataset,
    SynthSpec,
    column_stats,
    encode,
    ingest_csv,
    read_csv_text,
    standardize,
    synth_generate,
    write_csv,
)
from rankgrad.errors import ConfigError, DataError
from rankgrad.safe_eval import fold_designs


def dataset_of(**cols):
    return Dataset({k: np.asarray(v, dtype=float) for k, v in cols.items()},
                   {k: CONTINUOUS for k in cols})


# --------------------------------------------------------------------------
# Ingestion
# --------------------------------------------------------------------------


class TestIngest:
    def test_three_rows(self, tmp_path):
        f = tmp_path / "d.csv"
        f.write_text("a,b,c\n1,2,x\n3,4,y\n5,6,x\n")
        d = ingest_csv(f)
        assert d.n_rows == 3 and d.names == ["a", "b", "c"]
        assert d.kinds == {"a": CONTINUOUS, "b": CONTINUOUS, "c": CATEGORICAL}
        assert d["a"].tolist() == [1.0, 3.0, 5.0]

    def test_missing_cell_names_row_and_column(self):
        with pytest.raises(DataError, match=r"line 3 \(data row 2\), column 'b'"):
            read_csv_text("a,b\n1,2\n3,\n5,6\n")

    @pytest.mark.parametrize("token", ["NA", "nan", "null", " "])
    def test_missing_tokens(self, token):
        with pytest.raises(DataError, match="missing"):
            read_csv_text(f"a,b\n1,2\n3,{token}\n")

    def test_levels_in_first_appearance_order(self):
        text = "s\n" + "\n".join(["E", "B", "E", "D", "A", "C", "B"]) + "\n"
        d = read_csv_text(text)
        assert d.levels["s"] == ["E", "B", "D", "A", "C"]

    def test_schema_forces_categorical(self):
        d = read_csv_text("code,y\n3,1\n1,2\n3,3\n", {"code": CATEGORICAL})
        assert d.kinds["code"] == CATEGORICAL and d.levels["code"] == ["3", "1"]

    def test_schema_errors(self):
        with pytest.raises(DataError, match="declared continuous"):
            read_csv_text("a\nx\n", {"a": CONTINUOUS})
        with pytest.raises(DataError, match="missing from the header"):
            read_csv_text("a\n1\n", {"b": CONTINUOUS})

    def test_ragged_and_empty(self):
        with pytest.raises(DataError, match="expected 2 cells"):
            read_csv_text("a,b\n1\n")
        with pytest.raises(DataError, match="empty"):
            read_csv_text("")

    def test_unreadable_file(self, tmp_path):
        with pytest.raises(DataError, match="cannot read"):
            ingest_csv(tmp_path / "nope.csv")

    def test_csv_round_trip(self):
        d = synth_generate(SynthSpec(n=20, sector_levels=3), seed=1)
        back = read_csv_text(write_csv(d), {"Sector": CATEGORICAL})
        for name in d.names:
            assert np.array_equal(back[name], d[name])


# --------------------------------------------------------------------------
# Standardization and encoding
# --------------------------------------------------------------------------


class TestStandardize:
    def test_sample_sd_example(self):
        d = standardize(dataset_of(x=[1.0, 2.0, 3.0]))
        np.testing.assert_allclose(d["x"], [-1.0, 0.0, 1.0], atol=1e-15)
        assert column_stats(dataset_of(x=[1.0, 2.0, 3.0]))["x"] == (2.0, 1.0)

    def test_idempotent(self):
        d = standardize(dataset_of(x=np.random.default_rng(0).normal(3, 2, 50)))
        np.testing.assert_allclose(standardize(d)["x"], d["x"], atol=1e-14)

    def test_zero_variance(self):
        with pytest.raises(DataError, match="zero variance"):
            standardize(dataset_of(x=[2.0, 2.0, 2.0]))

    def test_external_stats_and_categoricals_untouched(self):
        d = read_csv_text("x,s\n1,a\n2,b\n")
        out = standardize(d, {"x": (1.0, 2.0)})
        assert out["x"].tolist() == [0.0, 0.5] and out["s"].tolist() == ["a", "b"]

    def test_training_stats_ignore_test_rows(self):
        d = synth_generate(SynthSpec(n=60, n_features=3), seed=2)
        clean = list(fold_designs(d, ["x1", "x2", "x3"], "ols", 5, seed=4))
        for fd in clean:
            poisoned = d.replace(**{f"x{j}": np.where(np.isin(np.arange(60), fd.test_rows), 1e12, d[f"x{j}"])
                                    for j in (1, 2, 3)})
            again = next(g for g in fold_designs(poisoned, ["x1", "x2", "x3"], "ols", 5, seed=4)
                         if g.fold == fd.fold)
            assert np.array_equal(again.X_train, fd.X_train)

    def test_encode_groups(self):
        d = read_csv_text("x,s\n1,a\n2,b\n3,c\n4,a\n")
        X, groups = encode(d, ["s", "x"], drop_first=True)
        assert X.shape == (4, 3) and groups == [[0, 1], [2]]
        assert X[:, 0].tolist() == [0, 1, 0, 0]
        X, groups = encode(d, ["s", "x"], drop_first=False)
        assert X.shape == (4, 4) and groups == [[0, 1, 2], [3]]

    def test_matrix_rejects_categorical(self):
        with pytest.raises(DataError, match="not continuous"):
            read_csv_text("s\na\nb\n").matrix(["s"])


# --------------------------------------------------------------------------
# Synthetic data
# --------------------------------------------------------------------------


class TestSynth:
    def test_same_seed_identical_bytes(self):
        spec = SynthSpec(n=50, n_targets=2, sector_levels=4, noise_sd=0.3)
        assert write_csv(synth_generate(spec, 9)) == write_csv(synth_generate(spec, 9))
        assert write_csv(synth_generate(spec, 9)) != write_csv(synth_generate(spec, 10))

    def test_targets_in_unit_interval(self):
        d = synth_generate(SynthSpec(n=100, link="exp", n_targets=3), 0)
        for t in ("y1", "y2", "y3"):
            assert np.all((d[t] > 0) & (d[t] < 1))

    def test_feature_correlation(self):
        d = synth_generate(SynthSpec(n=20000, n_features=3, correlation=0.3), 0)
        c = np.corrcoef(d.matrix(["x1", "x2", "x3"]), rowvar=False)
        assert np.all(np.abs(c[np.triu_indices(3, 1)] - 0.3) < 0.03)

    def test_irrelevant_feature_is_independent_of_target(self):
        d = synth_generate(SynthSpec(n=20000, n_features=2, correlation=0.0, irrelevant=(1,)), 0)
        assert abs(np.corrcoef(d["x2"], d["y1"])[0, 1]) < 0.03

    @pytest.mark.parametrize("kw", [dict(link="cubic"), dict(n=2), dict(correlation=1.0),
                                    dict(link="noise"), dict(irrelevant=(7,)), dict(sector_levels=1)])
    def test_invalid_specs(self, kw):
        with pytest.raises(DataError):
            synth_generate(SynthSpec(**kw))


# --------------------------------------------------------------------------
# RunConfig
# --------------------------------------------------------------------------


class TestRunConfig:
    def test_defaults(self):
        c = RunConfig(targets=["y"])
        c.validate()
        assert (c.p, c.folds, c.seed, c.perturb_scale, c.shapley_m) == (1.0, 5, 0, 0.5, 50)
        assert c.models == ["ols", "mlp"] and c.scheme == "zca-cor"

    @pytest.mark.parametrize("kw", [dict(targets=[]), dict(folds=1), dict(p=0.0), dict(shapley_m=0),
                                    dict(perturb_scale=0.0), dict(scheme="pca"), dict(whiten_on="test"),
                                    dict(models=["svm"])])
    def test_invalid(self, kw):
        with pytest.raises(ConfigError):
            RunConfig(**{"targets": ["y"], **kw}).validate()

    def test_column_checks(self):
        with pytest.raises(ConfigError, match="not in the dataset"):
            RunConfig(targets=["z"]).validate(["x", "y"])
        with pytest.raises(ConfigError, match="both target and feature"):
            RunConfig(targets=["y"], features=["y"]).validate(["x", "y"])

    def test_feature_list_default(self):
        assert RunConfig(targets=["y"]).feature_list(["x", "y", "w"]) == ["x", "w"]

    def test_updated_ignores_none(self):
        c = RunConfig(targets=["y"], seed=3).updated(seed=None, folds=4)
        assert c.seed == 3 and c.folds == 4

    def test_load_round_trip(self, tmp_path):
        c = RunConfig(targets=["a", "b"], multivariate=True, p=2.0)
        f = tmp_path / "c.json"
        f.write_text(json.dumps(c.to_dict()))
        assert load_config(f) == c

    def test_load_errors(self, tmp_path):
        f = tmp_path / "c.json"
        f.write_text('{"targets": ["y"], "colour": 1}')
        with pytest.raises(ConfigError, match="unknown configuration keys"):
            load_config(f)
        f.write_text("[1, 2]")
        with pytest.raises(ConfigError, match="JSON object"):
            load_config(f)
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "missing.json")
