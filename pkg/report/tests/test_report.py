import json

import numpy as np
import pytest

from macrostab_report.cli import main
from macrostab_report.figures import fit_exponent, render
from macrostab_report.schemas import FigureKind, FigureSpec, SchemaError, read_table

SCALING_HEADER = ("V,k,max_fluct,op_cx_re,op_cx_im,"
                  "op_cy_re,op_cy_im,op_cz_re,op_cz_im")


def scaling_csv(tmp_path, points=((4, 16.0), (6, 36.0), (8, 64.0))):
    lines = [SCALING_HEADER]
    for v, peak in points:
        lines.append(f"{v},0,{peak / 2},0,0,0,0,1,0")
        lines.append(f"{v},3.14159,{peak},0,0,0,0,1,0")
    path = tmp_path / "scaling.csv"
    path.write_text("\n".join(lines) + "\n")
    return str(path)


def purity_csv(tmp_path, gamma=0.1):
    times = np.linspace(0.05, 1.0, 20)
    lines = ["t,purity,stderr"]
    for t in times:
        lines.append(f"{t},{np.exp(-2 * gamma * t)},0.001")
    path = tmp_path / "purity.csv"
    path.write_text("\n".join(lines) + "\n")
    return str(path)


def cluster_csv(tmp_path):
    path = tmp_path / "cluster_summary.csv"
    rows = ["epsilon,V,omega"]
    rows += [f"0.1,{v},{v - 1}" for v in (4, 6, 8)]
    rows += [f"0.25,{v},0" for v in (4, 6, 8)]
    path.write_text("\n".join(rows) + "\n")
    return str(path)


def lm_csv(tmp_path, n=4, value=0.5):
    path = tmp_path / "lm.csv"
    rows = ["x,y,deviation"]
    rows += [f"{x},{y},{value}" for x in range(n) for y in range(n) if x != y]
    path.write_text("\n".join(rows) + "\n")
    return str(path)


def cascade_csv(tmp_path, counts=(1, 1, 2, 1, 3, 1)):
    path = tmp_path / "cascade.csv"
    rows = ["run,seed,count,converged,final_max_fluct"]
    rows += [f"{i},{100 + i},{c},1,{2.0}" for i, c in enumerate(counts)]
    path.write_text("\n".join(rows) + "\n")
    return str(path)


class TestSchemas:
    def test_wrong_header_names_offending_column(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("t,fidelity,stderr\n0.1,0.9,0.01\n")
        with pytest.raises(SchemaError, match="'fidelity'"):
            read_table(str(path), ["t", "purity", "stderr"])

    def test_empty_table_rejected(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("t,purity,stderr\n")
        with pytest.raises(SchemaError, match="no rows"):
            read_table(str(path), ["t", "purity", "stderr"])

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "blank.csv"
        path.write_text("")
        with pytest.raises(SchemaError, match="empty file"):
            read_table(str(path), ["t", "purity", "stderr"])

    def test_extra_column_rejected(self, tmp_path):
        path = tmp_path / "extra.csv"
        path.write_text("t,purity,stderr,bonus\n0.1,0.9,0.01,5\n")
        with pytest.raises(SchemaError, match="'bonus'"):
            read_table(str(path), ["t", "purity", "stderr"])

    def test_spec_input_arity(self, tmp_path):
        with pytest.raises(SchemaError, match="at most"):
            FigureSpec(FigureKind.SCALING, ("a.csv", "b.csv"), "o.png")
        with pytest.raises(SchemaError, match="at least one"):
            FigureSpec(FigureKind.SCALING, (), "o.png")


class TestRenderers:
    def test_scaling_annotation_matches_fit(self, tmp_path):
        csv_path = scaling_csv(tmp_path)
        out = tmp_path / "scaling.png"
        notes = render(FigureSpec(FigureKind.SCALING, (csv_path,), str(out)))
        assert out.exists()
        assert notes["exponent"] == "p = 2.00"
        # the displayed exponent is the same least squares fit a reader
        # would compute from the CSV peaks
        expected = fit_exponent([4, 6, 8], [16.0, 36.0, 64.0])
        assert notes["exponent"] == f"p = {expected:.2f}"

    def test_purity_annotation_matches_slope(self, tmp_path):
        csv_path = purity_csv(tmp_path, gamma=0.1)
        out = tmp_path / "purity.png"
        notes = render(FigureSpec(FigureKind.PURITY, (csv_path,), str(out)))
        assert notes["fit"] == "fit = 0.100"

    def test_purity_formula_overlay(self, tmp_path):
        csv_path = purity_csv(tmp_path, gamma=0.16)
        summary = tmp_path / "gamma_summary.csv"
        summary.write_text("gamma_formula,gamma_measured,gamma_stderr,t_lo,t_hi\n"
                           "0.16,0.155,0.002,0.05,0.8\n")
        out = tmp_path / "purity2.png"
        notes = render(FigureSpec(FigureKind.PURITY, (csv_path, str(summary)), str(out)))
        assert notes["formula"] == "formula = 0.160"

    def test_cluster_renders(self, tmp_path):
        out = tmp_path / "cluster.png"
        notes = render(FigureSpec(FigureKind.CLUSTER, (cluster_csv(tmp_path),), str(out)))
        assert out.exists()
        assert notes["epsilons"] == "0.1,0.25"

    def test_lm_heatmap_constant_field(self, tmp_path):
        out = tmp_path / "lm.png"
        notes = render(FigureSpec(FigureKind.LM_HEATMAP, (lm_csv(tmp_path),), str(out)))
        assert notes["max"] == "max = 0.500"

    def test_cascade_histogram_median(self, tmp_path):
        out = tmp_path / "cascade.png"
        notes = render(FigureSpec(FigureKind.CASCADE_HIST, (cascade_csv(tmp_path),),
                                  str(out)))
        assert notes["median"] == "median = 1"

    def test_rendering_is_deterministic(self, tmp_path):
        csv_path = scaling_csv(tmp_path)
        out1 = tmp_path / "a.png"
        out2 = tmp_path / "b.png"
        render(FigureSpec(FigureKind.SCALING, (csv_path,), str(out1)))
        render(FigureSpec(FigureKind.SCALING, (csv_path,), str(out2)))
        assert out1.read_bytes() == out2.read_bytes()

    def test_provenance_footer_changes_output(self, tmp_path):
        csv_path = scaling_csv(tmp_path)
        plain = tmp_path / "plain.png"
        render(FigureSpec(FigureKind.SCALING, (csv_path,), str(plain)))
        (tmp_path / "manifest.json").write_text(json.dumps({"master_seed": 7}))
        stamped = tmp_path / "stamped.png"
        render(FigureSpec(FigureKind.SCALING, (csv_path,), str(stamped)))
        assert plain.read_bytes() != stamped.read_bytes()


class TestCli:
    def test_happy_path(self, tmp_path, capsys):
        csv_path = scaling_csv(tmp_path)
        out = tmp_path / "fig.png"
        code = main(["--kind", "SCALING", "--in", csv_path, "--out", str(out)])
        assert code == 0
        assert "p = 2.00" in capsys.readouterr().out
        assert out.exists()

    def test_schema_mismatch_exits_two(self, tmp_path, capsys):
        code = main(["--kind", "PURITY", "--in", scaling_csv(tmp_path),
                     "--out", str(tmp_path / "fig.png")])
        assert code == 2
        assert "error:" in capsys.readouterr().err

    def test_missing_file_exits_two(self, tmp_path):
        code = main(["--kind", "PURITY", "--in", str(tmp_path / "nope.csv"),
                     "--out", str(tmp_path / "fig.png")])
        assert code == 2
