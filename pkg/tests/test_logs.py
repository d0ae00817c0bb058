import numpy as np
import pytest

from spinner.logs import (METRIC_FIELDS, format_log, log_header, metrics_row, read_log, read_metrics,
                          report_table, write_log, write_metrics)
from spinner.metrics import mean_tracking_error
from spinner.sim import LOG_COLUMNS, RunLog, Scenario, SensorNoise, run


@pytest.fixture(scope="module")
def short_log():
    return run(Scenario("short", 0.5, sensor_noise=SensorNoise(0.01, 0.01, 0.0, 0.01), seed=3))


def test_header_names_units():
    head = log_header().split(",")
    assert len(head) == len(LOG_COLUMNS)
    assert head[0] == "t[s]" and "u1[N]" in head and "tau_hat_z[N*m]" in head


def test_round_trip_is_lossless(short_log, tmp_path):
    path = write_log(short_log, tmp_path / "short_log.csv")
    back = read_log(path)
    assert back.data.tobytes() == short_log.data.tobytes()
    assert format_log(back) == path.read_text()


def test_hand_made_values_round_trip(tmp_path):
    data = np.zeros((3, len(LOG_COLUMNS)))
    data[:, 0] = [0.0, 0.005, 0.01]
    data[1, 5] = 0.1 + 0.2
    data[2, 7] = np.nextafter(1.0, 2.0)
    data[2, 8] = -5e-324
    log = RunLog(data)
    assert read_log(write_log(log, tmp_path / "x.csv")).data.tobytes() == data.tobytes()


def test_read_log_rejects_foreign_header(tmp_path):
    (tmp_path / "bad.csv").write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_log(tmp_path / "bad.csv")
    with pytest.raises(FileNotFoundError):
        read_log(tmp_path / "none.csv")


def test_metrics_file_and_report(short_log, tmp_path):
    row = metrics_row(short_log)
    assert tuple(row) == METRIC_FIELDS
    p1 = write_metrics([row], tmp_path / "a_metrics.csv")
    p2 = write_metrics([dict(row, seed="4"), dict(row, seed="5")], tmp_path / "b_metrics.csv")
    assert read_metrics(p1)[0] == row
    table = report_table([p1, p2], digits=12)
    lines = table.splitlines()
    assert lines[-1].startswith("mean")
    assert len([ln for ln in lines if ln.startswith("short")]) == 3
    # e_t in the table equals a recomputation from the raw log
    recomputed = mean_tracking_error(read_log(write_log(short_log, tmp_path / "short_log.csv")))
    assert float(lines[2].split()[2]) == pytest.approx(recomputed, abs=1e-9)


def test_report_errors(tmp_path):
    with pytest.raises(ValueError):
        report_table([])
    with pytest.raises(FileNotFoundError, match="missing_metrics.csv"):
        report_table([tmp_path / "missing_metrics.csv"])
