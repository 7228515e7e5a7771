"""Exchange and sideband frequencies across detuning and separation, against the closed forms.

Writes ``dipole_sweeps.csv`` with one row per sweep point.
"""
import argparse
from pathlib import Path

from crossstitch.runner import write_table
from crossstitch.validation import Session, check_dispersive_exchange, check_flat_rabi


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="runs/dipole")
    args = parser.parse_args()
    session = Session()
    checks = check_dispersive_exchange(session) + check_flat_rabi(session)
    for c in checks:
        print(c.line())
    columns = [[c.name for c in checks], [c.simulated for c in checks], [c.oracle for c in checks],
               [c.simulated / c.oracle - 1 for c in checks]]
    path = write_table(Path(args.out) / "dipole_sweeps.csv", ["point", "simulated", "closed_form", "relative_deviation"],
                       columns, "# simulated exchange / sideband frequency vs closed form\n")
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
