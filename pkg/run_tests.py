#!/usr/bin/env python3
"""
Run the test suite.

    ./run_tests.py          # fast tests only
    ./run_tests.py --all    # include the slow full-resolution checks

Extra arguments are passed through to pytest.
"""

import subprocess
import sys


def main() -> int:
    args = sys.argv[1:]
    if "--all" in args:
        args.remove("--all")
    else:
        args = ["-m", "not slow", *args]

    print("Running modwigner tests...")
    print("=" * 50)
    try:
        result = subprocess.run([sys.executable, "-m", "pytest", "tests/", *args])
    except OSError as exc:
        print(f"\nCould not start pytest: {exc}")
        return 1

    if result.returncode == 0:
        print("\nAll tests passed")
    else:
        print(f"\nSome tests failed (exit code {result.returncode})")
    return result.returncode


if __name__ == "__main__":
    sys.exit(main())
