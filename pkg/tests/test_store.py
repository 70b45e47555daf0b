import numpy as np
import pytest

from profilegan import store, synthetic
from profilegan.data import DataError


@pytest.fixture()
def small_store_inputs():
    spec = synthetic.default_spec(years=(2018,), seed=2)
    return synthetic.make_profiles(spec)


def test_save_load_roundtrip(tmp_path, small_store_inputs):
    profiles, metas = small_store_inputs
    store.save_store(profiles, metas, tmp_path / "store")
    loaded, loaded_metas = store.load_store(tmp_path / "store")
    assert {p.site_id for p in loaded} == {p.site_id for p in profiles}
    assert loaded_metas.keys() == metas.keys()
    by_key = {(p.site_id, p.year): p for p in loaded}
    for p in profiles:
        # store CSVs round power to 3 decimals
        np.testing.assert_allclose(by_key[(p.site_id, p.year)].values, p.values, atol=5e-4)
    for site, meta in metas.items():
        assert loaded_metas[site].installed_capacity_mw == meta.installed_capacity_mw
        assert loaded_metas[site].generation_type == meta.generation_type


def test_existing_store_refused_without_force(tmp_path, small_store_inputs):
    profiles, metas = small_store_inputs
    store.save_store(profiles, metas, tmp_path / "store")
    with pytest.raises(DataError, match="--force"):
        store.save_store(profiles, metas, tmp_path / "store")
    store.save_store(profiles, metas, tmp_path / "store", force=True)


def test_missing_manifest_rejected(tmp_path):
    with pytest.raises(DataError, match="manifest"):
        store.load_store(tmp_path)


def test_corrupt_manifest_rejected(tmp_path, small_store_inputs):
    profiles, metas = small_store_inputs
    store.save_store(profiles, metas, tmp_path / "store")
    (tmp_path / "store" / store.MANIFEST_NAME).write_text("{broken")
    with pytest.raises(DataError, match="corrupt"):
        store.load_store(tmp_path / "store")
