import hashlib
import json
from pathlib import Path

import pytest
import torch

from maskedit.cli import main
from maskedit.data import load_manifest
from maskedit.datamodel import COMPONENTS, load_image, toy_schema
from maskedit.networks import (
    GeneratorNets,
    MultiScaleDiscriminator,
    ParserNet,
    save_gan_checkpoint,
    save_parser_checkpoint,
)
from maskedit.pipeline import EditRequest

from conftest import small_netspec, small_parserspec

COMMANDS = [
    "prep", "pretrain-parser", "train", "generate", "edit", "swap",
    "eval-fid", "eval-mask-acc", "eval-augment", "make-toy-data", "serve",
]


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """Toy corpus + untrained checkpoints; enough to drive every command."""
    root = tmp_path_factory.mktemp("cliwork")
    assert main(["make-toy-data", "--n", "10", "--seed", "3",
                 "--out", str(root / "corpus")]) == 0
    torch.manual_seed(0)
    spec = small_netspec()
    gen = GeneratorNets(spec)
    disc = MultiScaleDiscriminator(spec)
    save_gan_checkpoint(root / "model.ckpt", spec, "toy-v1", gen, disc, step=0)
    pspec = small_parserspec()
    save_parser_checkpoint(root / "parser.ckpt", pspec, "toy-v1", ParserNet(pspec))
    return root


def corpus_digest(root: Path) -> str:
    h = hashlib.sha256()
    for p in sorted(Path(root).rglob("*")):
        if p.is_file():
            h.update(p.name.encode())
            h.update(p.read_bytes())
    return h.hexdigest()


# ---------------------------------------------------------------------------
# global CLI contracts


@pytest.mark.parametrize("command", COMMANDS)
def test_help_exists_for_every_command(command, capsys):
    assert main([command, "--help"]) == 0
    assert "Usage" in capsys.readouterr().out


def test_unknown_flag_fails_fast(workdir):
    assert main(["make-toy-data", "--n", "1", "--out", str(workdir / "x"),
                 "--bogus-flag", "1"]) == 1


def test_unknown_command_usage_error():
    assert main(["frobnicate"]) == 1


# ---------------------------------------------------------------------------
# make-toy-data


def test_toy_data_deterministic(tmp_path):
    assert main(["make-toy-data", "--n", "4", "--seed", "7", "--out", str(tmp_path / "a")]) == 0
    assert main(["make-toy-data", "--n", "4", "--seed", "7", "--out", str(tmp_path / "b")]) == 0
    assert corpus_digest(tmp_path / "a") == corpus_digest(tmp_path / "b")


def test_toy_data_zero_faces(tmp_path):
    assert main(["make-toy-data", "--n", "0", "--out", str(tmp_path / "z")]) == 0
    ds = load_manifest(tmp_path / "z" / "manifest.jsonl")
    assert len(ds) == 0


def test_toy_data_masks_validate(workdir):
    ds = load_manifest(workdir / "corpus" / "manifest.jsonl")
    schema = toy_schema()
    for s in ds.samples:
        schema.validate_mask(s.mask)


def test_toy_data_negative_n(tmp_path):
    assert main(["make-toy-data", "--n", "-3", "--out", str(tmp_path / "n")]) == 1


# ---------------------------------------------------------------------------
# prep


def test_prep_writes_aligned_manifest(workdir, tmp_path):
    rc = main(["prep", "--manifest", str(workdir / "corpus" / "manifest.jsonl"),
               "--out", str(tmp_path / "aligned"), "--resolution", "64"])
    assert rc == 0
    ds = load_manifest(tmp_path / "aligned" / "manifest.jsonl")
    assert len(ds) == 10 and ds.resolution == 64


# ---------------------------------------------------------------------------
# generate / edit / swap


def sample_paths(workdir, idx):
    return (workdir / "corpus" / f"face_{idx:04d}.png",
            workdir / "corpus" / f"face_{idx:04d}_mask.png")


def test_generate_writes_output(workdir, tmp_path):
    src_img, src_mask = sample_paths(workdir, 0)
    tgt_img, tgt_mask = sample_paths(workdir, 1)
    out = tmp_path / "gen.png"
    rc = main(["generate", "--checkpoint", str(workdir / "model.ckpt"),
               "--source-image", str(src_img), "--source-mask", str(src_mask),
               "--target-image", str(tgt_img), "--target-mask", str(tgt_mask),
               "--out", str(out)])
    assert rc == 0 and out.is_file()
    img = load_image(out)
    assert img.shape == (64, 64, 3)


def test_generate_missing_checkpoint(workdir, tmp_path):
    src_img, src_mask = sample_paths(workdir, 0)
    out = tmp_path / "never.png"
    rc = main(["generate", "--checkpoint", str(workdir / "nope.ckpt"),
               "--source-image", str(src_img), "--source-mask", str(src_mask),
               "--target-image", str(src_img), "--target-mask", str(src_mask),
               "--out", str(out)])
    assert rc == 1  # click path validation: usage error
    assert not out.exists()


def test_generate_corrupt_checkpoint(workdir, tmp_path):
    bad = tmp_path / "bad.ckpt"
    bad.write_bytes(b"junk")
    src_img, src_mask = sample_paths(workdir, 0)
    out = tmp_path / "never.png"
    rc = main(["generate", "--checkpoint", str(bad),
               "--source-image", str(src_img), "--source-mask", str(src_mask),
               "--target-image", str(src_img), "--target-mask", str(src_mask),
               "--out", str(out)])
    assert rc == 2
    assert not out.exists()


def test_generate_resizes_oversized_inputs(workdir, tmp_path):
    # a 96x96 pair is resized down to the model's working resolution
    from maskedit.datamodel import save_image, save_mask, toy_schema
    from maskedit.toyfaces import make_toy_face
    import numpy as np

    face = make_toy_face(np.random.default_rng(17), 96)
    big_img = tmp_path / "big.png"
    big_mask = tmp_path / "big_mask.png"
    save_image(face.image, big_img)
    save_mask(face.mask, big_mask, toy_schema())
    out = tmp_path / "resized.png"
    rc = main(["generate", "--checkpoint", str(workdir / "model.ckpt"),
               "--source-image", str(big_img), "--source-mask", str(big_mask),
               "--target-image", str(big_img), "--target-mask", str(big_mask),
               "--out", str(out)])
    assert rc == 0
    assert load_image(out).shape == (64, 64, 3)


def test_generate_distinct_targets_distinct_outputs(workdir, tmp_path):
    src_img, src_mask = sample_paths(workdir, 2)
    outs = []
    for idx in (3, 4):
        tgt_img, tgt_mask = sample_paths(workdir, idx)
        out = tmp_path / f"gen{idx}.png"
        assert main(["generate", "--checkpoint", str(workdir / "model.ckpt"),
                     "--source-image", str(src_img), "--source-mask", str(src_mask),
                     "--target-image", str(tgt_img), "--target-mask", str(tgt_mask),
                     "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] != outs[1]


def edit_request_doc(workdir, src="face_0000", tgt="face_0001"):
    req = EditRequest(
        target_mask=tgt,
        components={c: src for c in COMPONENTS},
        background=tgt,
    )
    p = workdir / "request.json"
    p.write_text(req.to_json())
    return p


def test_edit_identity_matches_generate_bit_exact(workdir, tmp_path):
    src_img, src_mask = sample_paths(workdir, 0)
    tgt_img, tgt_mask = sample_paths(workdir, 1)
    gen_out = tmp_path / "gen.png"
    assert main(["generate", "--checkpoint", str(workdir / "model.ckpt"),
                 "--source-image", str(src_img), "--source-mask", str(src_mask),
                 "--target-image", str(tgt_img), "--target-mask", str(tgt_mask),
                 "--out", str(gen_out)]) == 0
    req = edit_request_doc(workdir)
    edit_out = tmp_path / "edit.png"
    assert main(["edit", "--checkpoint", str(workdir / "model.ckpt"),
                 "--request", str(req),
                 "--manifest", str(workdir / "corpus" / "manifest.jsonl"),
                 "--out", str(edit_out)]) == 0
    assert gen_out.read_bytes() == edit_out.read_bytes()


def test_edit_malformed_request(workdir, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    rc = main(["edit", "--checkpoint", str(workdir / "model.ckpt"),
               "--request", str(bad),
               "--manifest", str(workdir / "corpus" / "manifest.jsonl"),
               "--out", str(tmp_path / "x.png")])
    assert rc == 2


def test_edit_unknown_sample_ref(workdir, tmp_path):
    req = EditRequest(
        target_mask="face_0001",
        components={c: "ghost" for c in COMPONENTS},
        background="face_0001",
    )
    p = tmp_path / "req.json"
    p.write_text(req.to_json())
    rc = main(["edit", "--checkpoint", str(workdir / "model.ckpt"),
               "--request", str(p),
               "--manifest", str(workdir / "corpus" / "manifest.jsonl"),
               "--out", str(tmp_path / "x.png")])
    assert rc == 2


def test_swap_writes_output(workdir, tmp_path):
    out = tmp_path / "swap.png"
    rc = main(["swap", "--checkpoint", str(workdir / "model.ckpt"),
               "--manifest", str(workdir / "corpus" / "manifest.jsonl"),
               "--source-id", "face_0002", "--target-id", "face_0003",
               "--out", str(out)])
    assert rc == 0 and out.is_file()


# ---------------------------------------------------------------------------
# evaluation commands


def test_eval_fid_pixel_extractor(workdir, capsys):
    manifest = str(workdir / "corpus" / "manifest.jsonl")
    rc = main(["eval-fid", "--manifest-a", manifest, "--manifest-b", manifest])
    assert rc == 0
    out = capsys.readouterr().out
    assert "metric=fid" in out and "extractor=pixel-stats-8x8" in out
    value = float(out.strip().rsplit("value=", 1)[1])
    assert abs(value) <= 1e-6


def test_eval_mask_acc_runs(workdir, capsys):
    rc = main(["eval-mask-acc", "--checkpoint", str(workdir / "model.ckpt"),
               "--parser-checkpoint", str(workdir / "parser.ckpt"),
               "--manifest", str(workdir / "corpus" / "manifest.jsonl"),
               "--pairs", "2"])
    assert rc == 0
    assert "metric=mask_accuracy" in capsys.readouterr().out


# ---------------------------------------------------------------------------
# training commands (tiny smoke)


@pytest.mark.slow
def test_pretrain_and_train_smoke(workdir, tmp_path, capsys):
    manifest = str(workdir / "corpus" / "manifest.jsonl")
    parser_out = tmp_path / "parser.ckpt"
    rc = main(["pretrain-parser", "--manifest", manifest, "--out", str(parser_out),
               "--steps", "8"])
    assert rc == 0 and parser_out.is_file()
    run_dir = tmp_path / "run"
    rc = main(["train", "--manifest", manifest,
               "--parser-checkpoint", str(parser_out),
               "--out", str(run_dir), "--steps", "2"])
    assert rc == 0
    assert (run_dir / "final.ckpt").is_file()
    assert (run_dir / "metrics.jsonl").is_file()
    assert (run_dir / "config.json").is_file()
