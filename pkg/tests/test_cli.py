import json

from groceryrec.cli import main
from groceryrec.evaluation import SurveyResponse, append_responses
from groceryrec.survey import load_bundle


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


class TestPipeline:
    def test_full_flow(self, tmp_path, capsys):
        data_dir = str(tmp_path / "data")
        raw = tmp_path / "raw.csv"

        code, out = run(capsys, "--data-dir", data_dir, "synth",
                        "--out", str(raw), "--varieties", "4",
                        "--per-variety", "15", "--seed", "11")
        assert code == 0 and "60 products" in out

        code, out = run(capsys, "--data-dir", data_dir, "ingest",
                        "--input", str(raw), "--schema", "ds2")
        assert code == 0

        code, out = run(capsys, "--data-dir", data_dir, "clean")
        assert code == 0 and "cleaned" in out

        code, out = run(capsys, "--data-dir", data_dir, "train",
                        "--dim", "8", "--epochs", "2", "--min-count", "1",
                        "--seed", "1")
        assert code == 0 and "trained" in out

        code, out = run(capsys, "--data-dir", data_dir, "recommend",
                        "--ean", "10000001", "--family", "rscf",
                        "--approach", "pro_com")
        assert code == 0
        payload = json.loads(out)
        assert payload["source"] == "10000001"
        assert len(payload["candidates"]) == 3

        code, out = run(capsys, "--data-dir", data_dir, "survey", "build",
                        "--family", "rscf", "--seed", "5")
        assert code == 0
        survey_id = out.strip()
        bundle_path = tmp_path / "data" / "surveys" / f"{survey_id}.json"
        assert bundle_path.exists()

        bundle = load_bundle(bundle_path)
        responses_dir = tmp_path / "data" / "responses"
        responses_dir.mkdir(parents=True, exist_ok=True)
        append_responses(
            responses_dir / f"{survey_id}.ndjson",
            [SurveyResponse("u1", q.id, 1, "2026-01-01T00:00:00+00:00")
             for q in bundle.questions],
        )
        code, out = run(capsys, "--data-dir", data_dir, "eval",
                        "--survey-id", survey_id)
        assert code == 0
        report = json.loads(out)
        assert report["mse"]["pro_com"]["group1"] == 0.0

    def test_unknown_ean_reports_error(self, tmp_path, capsys):
        data_dir = str(tmp_path / "d")
        raw = tmp_path / "raw.csv"
        run(capsys, "--data-dir", data_dir, "synth", "--out", str(raw),
            "--varieties", "2", "--per-variety", "5", "--seed", "1")
        run(capsys, "--data-dir", data_dir, "ingest", "--input", str(raw),
            "--schema", "ds2")
        run(capsys, "--data-dir", data_dir, "clean")
        code = main(["--data-dir", data_dir, "recommend", "--ean", "nope"])
        assert code == 1
        assert "error" in capsys.readouterr().err
