"""Exporter tests, including the cross-package round-trip into mmwtex.

The exporter writes files; the recognition toolkit reads them.  The only
import of mmwtex here is as the consuming-side validator.
"""

import numpy as np
import pytest

pytest.importorskip("torch")
pytest.importorskip("mmwfeat_export")

from mmwfeat_export.cli import main
from mmwfeat_export.export import ExportError, ExportJob, resolve_layer, run_export
from mmwfeat_export.formats import read_pgm, write_mmwfeat


def write_pgm_bytes(path, img):
    height, width = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        fh.write(np.asarray(img, dtype=np.uint8).tobytes())


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    """Tiny manifest: 4 distinct torso scans + 1 exact duplicate of the first."""
    root = tmp_path_factory.mktemp("data")
    (root / "torso").mkdir()
    rng = np.random.default_rng(7)
    rows = []
    first = None
    for i in range(4):
        img = rng.integers(0, 256, size=(170, 120), dtype=np.uint8)
        if i == 0:
            first = img
        sample_id = f"s{i:03d}_frontal0"
        rel = f"torso/{sample_id}.pgm"
        write_pgm_bytes(root / rel, img)
        rows.append((sample_id, f"s{i:03d}", rel))
    write_pgm_bytes(root / "torso/s000_frontal1.pgm", first)  # duplicate image
    rows.append(("s000_frontal1", "s000", "torso/s000_frontal1.pgm"))

    manifest = root / "manifest.csv"
    lines = ["sample_id,subject_id,part,pose,occluded,path"]
    lines += [f"{sid},{subj},torso,frontal,0,{rel}" for sid, subj, rel in rows]
    manifest.write_text("\n".join(lines) + "\n")
    return manifest


@pytest.fixture(scope="module")
def exported(dataset, tmp_path_factory):
    out = tmp_path_factory.mktemp("out") / "alexnet_fc7.feat"
    job = ExportJob(manifest=str(dataset), model_id="alexnet", out_path=str(out))
    count = run_export(job)
    assert count == 5
    return out


class TestExport:
    def test_header_dim_is_layer_width(self, exported):
        header = exported.read_text().splitlines()[0].split()
        assert header == ["MMWFEAT", "1", "4096", "5"]

    def test_identical_images_identical_vectors(self, exported):
        lines = exported.read_text().strip().splitlines()[1:]
        by_sample = {line.split()[1]: line.split()[3:] for line in lines}
        assert by_sample["s000_frontal0"] == by_sample["s000_frontal1"]
        assert by_sample["s000_frontal0"] != by_sample["s001_frontal0"]

    def test_round_trips_through_primary_reader(self, exported):
        mmwtex_featio = pytest.importorskip("mmwtex.featio")
        records = mmwtex_featio.load_features(exported)
        assert len(records) == 5
        for rec, vec in records:
            assert vec.dim == 4096
            assert np.all(np.isfinite(vec.values))
        assert records[0][0].subject_id == "s000"
        assert records[0][0].part.value == "torso"

    def test_output_order_follows_manifest(self, exported):
        lines = exported.read_text().strip().splitlines()[1:]
        sample_ids = [line.split()[1] for line in lines]
        assert sample_ids == [
            "s000_frontal0", "s001_frontal0", "s002_frontal0",
            "s003_frontal0", "s000_frontal1",
        ]

    def test_deterministic_across_runs(self, dataset, exported, tmp_path):
        again = tmp_path / "again.feat"
        run_export(ExportJob(manifest=str(dataset), model_id="alexnet",
                             out_path=str(again)))
        assert again.read_bytes() == exported.read_bytes()

    def test_batching_keeps_manifest_order(self, dataset, exported, tmp_path):
        # CPU conv kernels reduce in batch-size-dependent order, so values
        # may differ in the last ulps; record order and near-equality hold.
        small = tmp_path / "b2.feat"
        run_export(ExportJob(manifest=str(dataset), model_id="alexnet",
                             out_path=str(small), batch_size=2))
        ref_lines = exported.read_text().strip().splitlines()
        got_lines = small.read_text().strip().splitlines()
        assert [l.split()[:3] for l in got_lines] == [l.split()[:3] for l in ref_lines]
        for ref, got in zip(ref_lines[1:], got_lines[1:]):
            ref_values = np.array([float(v) for v in ref.split()[3:]])
            got_values = np.array([float(v) for v in got.split()[3:]])
            np.testing.assert_allclose(got_values, ref_values, rtol=1e-4, atol=1e-5)


class TestErrors:
    def test_unknown_model_rejected(self, dataset):
        with pytest.raises(ValueError, match="unknown model"):
            ExportJob(manifest=str(dataset), model_id="resnet999", out_path="x.feat")

    def test_unknown_layer_rejected(self, dataset, tmp_path):
        job = ExportJob(manifest=str(dataset), model_id="alexnet",
                        layer="classifier.99", out_path=str(tmp_path / "x.feat"))
        with pytest.raises(ValueError, match="no layer"):
            run_export(job)

    def test_missing_image_reports_item(self, dataset, tmp_path):
        manifest = tmp_path / "manifest.csv"
        base = dataset.read_text().strip().splitlines()
        base.append("missing0,s999,torso,frontal,0,torso/nope.pgm")
        manifest.write_text("\n".join(base) + "\n")
        # copy images next to the new manifest so the valid rows resolve
        (tmp_path / "torso").mkdir()
        for pgm in (dataset.parent / "torso").iterdir():
            (tmp_path / "torso" / pgm.name).write_bytes(pgm.read_bytes())
        out = tmp_path / "x.feat"
        job = ExportJob(manifest=str(manifest), model_id="alexnet", out_path=str(out))
        with pytest.raises(ExportError) as info:
            run_export(job)
        assert any("missing0" in failure for failure in info.value.failures)
        assert not out.exists()


class TestLayers:
    def test_alias_resolution(self):
        assert resolve_layer("alexnet", "fc7") == "classifier.4"
        assert resolve_layer("alexnet", "fc6") == "classifier.1"
        assert resolve_layer("vgg16", "fc7") == "classifier.3"
        assert resolve_layer("vgg16", "features.0") == "features.0"

    def test_vgg16_fc7_width(self, dataset, tmp_path):
        out = tmp_path / "vgg.feat"
        single = tmp_path / "one.csv"
        lines = dataset.read_text().strip().splitlines()
        single.write_text("\n".join(lines[:2]) + "\n")
        (tmp_path / "torso").mkdir()
        for pgm in (dataset.parent / "torso").iterdir():
            (tmp_path / "torso" / pgm.name).write_bytes(pgm.read_bytes())
        run_export(ExportJob(manifest=str(single), model_id="vgg16", out_path=str(out)))
        assert out.read_text().splitlines()[0] == "MMWFEAT 1 4096 1"


class TestCli:
    def test_export_command(self, dataset, tmp_path, capsys):
        out = tmp_path / "cli.feat"
        code = main(["export", "--manifest", str(dataset), "--model", "alexnet",
                     "--layer", "fc7", "--out", str(out)])
        assert code == 0
        assert "5 records" in capsys.readouterr().out
        assert out.exists()

    def test_missing_args_usage_error(self, capsys):
        assert main(["export", "--model", "alexnet"]) == 1
        assert "usage error" in capsys.readouterr().err

    def test_bad_model_data_error(self, dataset, tmp_path, capsys):
        code = main(["export", "--manifest", str(dataset), "--model", "nope",
                     "--out", str(tmp_path / "x.feat")])
        assert code == 2
        assert "error" in capsys.readouterr().err


class TestFormats:
    def test_pgm_reader(self, tmp_path):
        img = np.arange(6, dtype=np.uint8).reshape(2, 3)
        path = tmp_path / "t.pgm"
        write_pgm_bytes(path, img)
        np.testing.assert_array_equal(read_pgm(path), img)

    def test_mixed_dims_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="mixed"):
            write_mmwfeat(tmp_path / "x.feat",
                          [("a", "b", "torso", np.ones(3)),
                           ("c", "d", "torso", np.ones(4))])
