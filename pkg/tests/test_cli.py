import json
from pathlib import Path

import numpy as np
import pytest

from negood.cli import main
from negood.containers import MatrixContainer, MatrixKind, save_matrix
from negood.mining import load_selection

from oracles import grouped_oracle

DATA = Path(__file__).parent / "data"


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestMineCommand:
    def mine_args(self, out, extra=()):
        return [
            "mine",
            "--id-emb", str(DATA / "mine_id.negl"),
            "--cand-emb", str(DATA / "mine_cand.negl"),
            "--cand-labels", str(DATA / "mine_cand.txt"),
            "--eta", "0.05",
            "--m", "10",
            "--out", str(out),
            *extra,
        ]

    def test_matches_committed_oracle_fixture(self, tmp_path, capsys):
        out = tmp_path / "sel.json"
        code, _, _ = run(capsys, *self.mine_args(out))
        assert code == 0
        sel, doc = load_selection(out)
        expected = json.loads((DATA / "mine_expected.json").read_text())
        assert list(sel.indices) == expected["indices"]
        assert list(sel.labels) == expected["labels"]
        np.testing.assert_allclose(sel.distances, expected["distances"], atol=1e-6)
        assert doc["eta"] == expected["eta"] and doc["m"] == expected["m"]
        assert set(doc["provenance"]) == {"id_emb", "cand_emb", "cand_labels"}

    def test_rerun_is_byte_identical(self, tmp_path, capsys):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert run(capsys, *self.mine_args(a))[0] == 0
        assert run(capsys, *self.mine_args(b, extra=["--threads", "8"]))[0] == 0
        assert a.read_bytes() == b.read_bytes()

    def test_m_too_large_exits_2(self, tmp_path, capsys):
        out = tmp_path / "sel.json"
        args = self.mine_args(out)
        args[args.index("--m") + 1] = "100"
        code, _, err = run(capsys, *args)
        assert code == 2
        assert "error-code: m-too-large" in err

    def test_missing_input_exits_3(self, tmp_path, capsys):
        args = self.mine_args(tmp_path / "sel.json")
        args[args.index("--id-emb") + 1] = str(tmp_path / "absent.negl")
        code, _, err = run(capsys, *args)
        assert code == 3
        assert "error-code: io-failure" in err


@pytest.fixture()
def sims_file(tmp_path):
    rng = np.random.default_rng(11)
    data = rng.uniform(0.0, 0.35, size=(20, 4 + 9)).astype(np.float32)
    path = tmp_path / "sims.negl"
    save_matrix(MatrixContainer(MatrixKind.SIMILARITIES, data), path)
    return path, data


class TestScoreCommand:
    def test_matches_oracle_reference_csv(self, tmp_path, sims_file, capsys):
        path, data = sims_file
        out = tmp_path / "scores.csv"
        code, _, _ = run(
            capsys, "score", "--sims", str(path), "--k", "4",
            "--n-groups", "3", "--out", str(out),
        )
        assert code == 0
        reference = tmp_path / "reference.csv"
        lines = ["sample_index,score\n"]
        for i in range(20):
            want = grouped_oracle(
                "sum-softmax", data[i, :4].astype(np.float64),
                data[i, 4:].astype(np.float64), 3, tau=0.01,
            )
            lines.append(f"{i},{format(want, '.17g')}\n")
        reference.write_text("".join(lines))
        got = [float(ln.split(",")[1]) for ln in out.read_text().splitlines()[1:]]
        want = [float(ln.split(",")[1]) for ln in reference.read_text().splitlines()[1:]]
        np.testing.assert_allclose(got, want, rtol=1e-12)

    def test_single_group_equals_ungrouped(self, tmp_path, sims_file, capsys):
        path, data = sims_file
        out = tmp_path / "scores.csv"
        run(capsys, "score", "--sims", str(path), "--k", "4",
            "--n-groups", "1", "--out", str(out))
        got = [float(ln.split(",")[1]) for ln in out.read_text().splitlines()[1:]]
        want = [
            grouped_oracle("sum-softmax", data[i, :4].astype(np.float64),
                           data[i, 4:].astype(np.float64), 1, tau=0.01)
            for i in range(20)
        ]
        np.testing.assert_allclose(got, want, rtol=1e-12)

    def test_thread_count_does_not_change_bytes(self, tmp_path, sims_file, capsys):
        path, _ = sims_file
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run(capsys, "score", "--sims", str(path), "--k", "4", "--n-groups", "3",
            "--threads", "1", "--out", str(a))
        run(capsys, "score", "--sims", str(path), "--k", "4", "--n-groups", "3",
            "--threads", "8", "--out", str(b))
        assert a.read_bytes() == b.read_bytes()

    def test_column_mismatch_exits_2(self, tmp_path, sims_file, capsys):
        path, _ = sims_file
        code, _, err = run(
            capsys, "score", "--sims", str(path), "--k", "99",
            "--out", str(tmp_path / "never.csv"),
        )
        assert code == 2
        assert "error-code:" in err

    def test_embeddings_route_matches_sims_route(self, tmp_path, capsys):
        from negood.containers import cosine_matrix
        from negood.synth import random_unit_embeddings

        img = random_unit_embeddings(6, 16, seed=31)
        id_emb = random_unit_embeddings(3, 16, seed=32)
        neg_emb = random_unit_embeddings(8, 16, seed=33)
        for name, cont in [("img", img), ("id", id_emb), ("neg", neg_emb)]:
            save_matrix(cont, tmp_path / f"{name}.negl")
        stacked = np.hstack(
            [cosine_matrix(img, id_emb).data, cosine_matrix(img, neg_emb).data]
        )
        save_matrix(
            MatrixContainer(MatrixKind.SIMILARITIES, stacked), tmp_path / "sims.negl"
        )
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run(capsys, "score", "--images", str(tmp_path / "img.negl"),
            "--id-emb", str(tmp_path / "id.negl"), "--neg-emb", str(tmp_path / "neg.negl"),
            "--n-groups", "2", "--out", str(a))
        run(capsys, "score", "--sims", str(tmp_path / "sims.negl"), "--k", "3",
            "--n-groups", "2", "--out", str(b))
        assert a.read_bytes() == b.read_bytes()


class TestEvalCommand:
    def write_scores(self, path, values):
        lines = ["sample_index,score\n"] + [
            f"{i},{v}\n" for i, v in enumerate(values)
        ]
        Path(path).write_text("".join(lines))

    def test_perfect_separation(self, tmp_path, capsys):
        self.write_scores(tmp_path / "id.csv", [0.9, 0.8, 0.7])
        self.write_scores(tmp_path / "ood.csv", [0.2, 0.1])
        code, out, _ = run(
            capsys, "eval", "--id-scores", str(tmp_path / "id.csv"),
            "--ood-scores", str(tmp_path / "ood.csv"),
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["auroc_pct"] == "100.00"
        assert doc["fpr95_pct"] == "0.00"

    def test_five_sixths_fixture(self, tmp_path, capsys):
        self.write_scores(tmp_path / "id.csv", [0.9, 0.8, 0.4])
        self.write_scores(tmp_path / "ood.csv", [0.7, 0.3])
        code, out, _ = run(
            capsys, "eval", "--id-scores", str(tmp_path / "id.csv"),
            "--ood-scores", str(tmp_path / "ood.csv"),
        )
        assert code == 0
        assert json.loads(out)["auroc_pct"] == "83.33"

    def test_bad_lambda_exits_2(self, tmp_path, capsys):
        self.write_scores(tmp_path / "id.csv", [0.9])
        self.write_scores(tmp_path / "ood.csv", [0.1])
        code, _, err = run(
            capsys, "eval", "--id-scores", str(tmp_path / "id.csv"),
            "--ood-scores", str(tmp_path / "ood.csv"), "--tpr", "1.5",
        )
        assert code == 2
        assert "error-code: bad-lambda" in err

    def test_mask_mode_matches_split_mode(self, tmp_path, capsys):
        self.write_scores(tmp_path / "all.csv", [0.9, 0.1, 0.8, 0.2])
        (tmp_path / "mask.txt").write_text("1\n0\n1\n0\n")
        code, out_mask, _ = run(
            capsys, "eval", "--scores", str(tmp_path / "all.csv"),
            "--mask", str(tmp_path / "mask.txt"),
        )
        assert code == 0
        self.write_scores(tmp_path / "id.csv", [0.9, 0.8])
        self.write_scores(tmp_path / "ood.csv", [0.1, 0.2])
        _, out_split, _ = run(
            capsys, "eval", "--id-scores", str(tmp_path / "id.csv"),
            "--ood-scores", str(tmp_path / "ood.csv"),
        )
        assert json.loads(out_mask) == json.loads(out_split)


class TestTheoryCommand:
    def test_equal_rates_column_equals_lambda(self, capsys):
        code, out, _ = run(
            capsys, "theory", "--m", "10,100,1000", "--p1", "0.2", "--p2", "0.2",
            "--tpr", "0.8", "--mc-samples", "0",
        )
        assert code == 0
        rows = out.strip().splitlines()
        assert rows[0].startswith("m,p1,p2,lambda,fpr_closed")
        for row in rows[1:]:
            assert float(row.split(",")[4]) == pytest.approx(0.8, abs=1e-9)

    def test_table_deterministic(self, tmp_path, capsys):
        args = ["theory", "--m", "50,200", "--p1", "0.05", "--p2", "0.15",
                "--mc-samples", "5000", "--seed", "3"]
        _, out1, _ = run(capsys, *args)
        _, out2, _ = run(capsys, *args)
        assert out1 == out2


class TestSynthAndSweep:
    def test_synth_deterministic(self, tmp_path, capsys):
        spec = dict(k=3, m=20, n_id=40, n_ood=40, p1=0.1, p2=0.3, seed=9)
        (tmp_path / "spec.json").write_text(json.dumps(spec))
        for sub in ("one", "two"):
            code, _, _ = run(
                capsys, "synth", "--spec", str(tmp_path / "spec.json"),
                "--out-dir", str(tmp_path / sub),
            )
            assert code == 0
        for name in ("similarities.negl", "id_mask.txt", "labels.txt", "manifest.json"):
            assert (tmp_path / "one" / name).read_bytes() == (
                tmp_path / "two" / name
            ).read_bytes()

    def test_sweep_fpr_strictly_decreasing_in_m(self, tmp_path, capsys):
        out = tmp_path / "sweep.csv"
        code, _, _ = run(
            capsys, "sweep", "--variants", "binarized-count",
            "--m-grid", "100,500,2000", "--ng-grid", "1",
            "--k", "100", "--n-id", "2000", "--n-ood", "2000",
            "--mu-pos", "0.27", "--mu-neg", "0.22", "--sigma", "0.03",
            "--out", str(out),
        )
        assert code == 0
        rows = out.read_text().strip().splitlines()[1:]
        fprs = [float(r.split(",")[15]) for r in rows]
        assert fprs[0] > fprs[1] > fprs[2]

    def test_sweep_rerun_byte_identical(self, tmp_path, capsys):
        argv = ["sweep", "--variants", "sum-softmax", "--m-grid", "50,100",
                "--ng-grid", "2", "--k", "5", "--n-id", "200", "--n-ood", "200",
                "--out", ""]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        argv[-1] = str(a)
        run(capsys, *argv)
        argv[-1] = str(b)
        run(capsys, *argv)
        assert a.read_bytes() == b.read_bytes()


class TestReportCommand:
    def test_renders_figures_deterministically(self, tmp_path, capsys):
        sweep = tmp_path / "sweep.csv"
        run(capsys, "sweep", "--variants", "sum-softmax,binarized-count",
            "--m-grid", "50,100", "--ng-grid", "1", "--k", "5",
            "--n-id", "100", "--n-ood", "100", "--out", str(sweep))
        theory_csv = tmp_path / "theory.csv"
        run(capsys, "theory", "--m", "50,100", "--p1", "0.05", "--p2", "0.15",
            "--mc-samples", "1000", "--out", str(theory_csv))
        for sub in ("r1", "r2"):
            code, _, _ = run(
                capsys, "report", "--sweep", str(sweep), "--theory", str(theory_csv),
                "--out-dir", str(tmp_path / sub),
            )
            assert code == 0
        names = ["sweep_fpr.png", "sweep_auroc.png", "report_summary.csv", "theory_fpr.png"]
        for name in names:
            a = (tmp_path / "r1" / name).read_bytes()
            b = (tmp_path / "r2" / name).read_bytes()
            assert a == b and len(a) > 0

    def test_requires_an_input(self, tmp_path, capsys):
        code, _, err = run(capsys, "report", "--out-dir", str(tmp_path))
        assert code == 2
        assert "error-code:" in err


class TestTopLevel:
    def test_version_mentions_container_format(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        out = capsys.readouterr().out
        assert "negood" in out and "container-format 1" in out

    @pytest.mark.parametrize(
        "command,flag,default",
        [
            ("mine", "--eta", "0.05"),
            ("mine", "--m", "10000"),
            ("score", "--tau", "0.01"),
            ("score", "--n-groups", "100"),
            ("score", "--beta", "0.25"),
            ("eval", "--tpr", "0.95"),
        ],
    )
    def test_help_lists_reference_defaults(self, command, flag, default, capsys):
        with pytest.raises(SystemExit):
            main([command, "--help"])
        out = capsys.readouterr().out
        block = out[out.rindex(flag):]
        assert f"(default: {default})" in block[:250]

    def test_config_file_precedence(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"m": "3", "eta": 0.5}))
        out = tmp_path / "sel.json"
        code, _, _ = run(
            capsys, "mine", "--config", str(cfg),
            "--id-emb", str(DATA / "mine_id.negl"),
            "--cand-emb", str(DATA / "mine_cand.negl"),
            "--cand-labels", str(DATA / "mine_cand.txt"),
            "--out", str(out),
        )
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["m"] == 3 and doc["eta"] == 0.5
        code, _, _ = run(
            capsys, "mine", "--config", str(cfg), "--m", "4",
            "--id-emb", str(DATA / "mine_id.negl"),
            "--cand-emb", str(DATA / "mine_cand.negl"),
            "--cand-labels", str(DATA / "mine_cand.txt"),
            "--out", str(out),
        )
        assert code == 0
        assert json.loads(out.read_text())["m"] == 4
