from bounds import BoundId, BoundReport
from config_manager import ECHO_FILE_NAME, ExperimentConfig
from output_manager import REPORTS_FILE_NAME, SUMMARY_FILE_NAME, OutputManager, failed_reports


def test_write_csv_formats_numbers(tmp_path):
    output = OutputManager(str(tmp_path / "run"))
    target = output.write_csv("values.csv", ["t", "value", "flag"], [[1.0, 0.5, True], [10, float("nan"), False]])
    assert open(target).read() == "t,value,flag\n1.0,0.5,true\n10,nan,false\n"


def test_reports_header_written_once(tmp_path):
    output = OutputManager(str(tmp_path))
    ok = BoundReport.make(BoundId.THM1_I, {"N": 4, "t": 1.0}, 0.3, 0.5)
    bad = BoundReport.make(BoundId.THM1_II, {"N": 4, "t": 1.0}, 0.6, 0.5)
    output.append_reports([ok])
    output.append_reports([bad])
    lines = open(output.path(REPORTS_FILE_NAME)).read().splitlines()
    assert lines[0] == "bound_id,inputs,lhs,rhs,margin,satisfied,note"
    assert len(lines) == 3
    assert lines[1].startswith("thm1_i,N=4;t=1.0,0.3,0.5,")
    assert failed_reports([ok, bad]) == [bad]
    output.reset(REPORTS_FILE_NAME)
    output.append_reports([ok])
    assert len(open(output.path(REPORTS_FILE_NAME)).read().splitlines()) == 2


def test_summary_and_echo(tmp_path):
    output = OutputManager(str(tmp_path))
    output.write_summary({"kappa_hat": 0.25, "n_samples": 10, "family": "homogeneous_tree"})
    assert open(output.path(SUMMARY_FILE_NAME)).read() == (
        "kappa_hat = 0.25\nn_samples = 10\nfamily = homogeneous_tree\n"
    )
    output.write_config_echo(ExperimentConfig(command="ids"))
    echo = open(output.path(ECHO_FILE_NAME)).read()
    assert echo.startswith("command = ids\n")
