"""Plot run logs written by the ``spinner`` CLI (needs the ``plot`` extra).

    spinner lemniscate -o out && python3 scripts/plot_figures.py out/lemniscate_log.csv -o figs
"""
import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from spinner.logs import read_log  # noqa: E402


def plot_log(path: Path, out: Path) -> Path:
    log = read_log(path)
    fig, ax = plt.subplots(1, 3, figsize=(14, 4))
    ax[0].plot(log.p_ref[:, 0], log.p_ref[:, 1], "k--", lw=1, label="reference")
    ax[0].plot(log.position[:, 0], log.position[:, 1], lw=1, label="flown")
    ax[0].set(xlabel="x [m]", ylabel="y [m]", aspect="equal")
    ax[0].legend()
    ax[1].plot(log.t, log.position_error)
    ax[1].set(xlabel="t [s]", ylabel="position error [m]")
    ax[2].plot(log.t, log.column("wz"))
    ax[2].set(xlabel="t [s]", ylabel="yaw rate [rad/s]")
    for a in ax:
        a.grid(alpha=0.3)
    fig.suptitle(path.stem)
    fig.tight_layout()
    target = out / f"{path.stem}.png"
    fig.savefig(target, dpi=120)
    plt.close(fig)
    return target


def main(argv=None):
    parser = argparse.ArgumentParser(description="Plot spinner run logs")
    parser.add_argument("logs", nargs="+", type=Path)
    parser.add_argument("-o", "--out", type=Path, default=Path("figs"))
    args = parser.parse_args(argv)
    args.out.mkdir(parents=True, exist_ok=True)
    for path in args.logs:
        print(plot_log(path, args.out))


if __name__ == "__main__":
    main()
