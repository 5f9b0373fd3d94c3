#!/usr/bin/env python3
"""
Test Runner for the rANS codec
Runs every test_* function in tests/ and reports a summary
"""
import importlib
import sys
import os
import time
import traceback

# Fix console encoding for Windows
if sys.platform == "win32":
    import io
    sys.stdout = io.TextIOWrapper(sys.stdout.buffer, encoding='utf-8', errors='replace')
    sys.stderr = io.TextIOWrapper(sys.stderr.buffer, encoding='utf-8', errors='replace')

# Make the project root importable
root_path = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, root_path)

TEST_MODULES = [
    "tests.test_ans_core",
    "tests.test_models",
    "tests.test_stream_codec",
    "tests.test_container",
    "tests.test_config",
    "tests.test_selftest",
    "tests.test_cli",
]


def is_slow(test):
    return any(mark.name == "slow" for mark in getattr(test, "pytestmark", []))


def run_module(module_name, include_slow=False):
    """Run every test_* function of one module, returns (passed, failed)"""
    print(f"\nTesting {module_name}...")
    module = importlib.import_module(module_name)
    passed = 0
    failed = 0
    for name in sorted(dir(module)):
        test = getattr(module, name)
        if not name.startswith("test_") or not callable(test):
            continue
        if is_slow(test) and not include_slow:
            print(f"  - {name} (slow, skipped; pass --slow)")
            continue
        start = time.perf_counter()
        try:
            test()
            passed += 1
            print(f"  ✓ {name} ({time.perf_counter() - start:.2f}s)")
        except Exception as e:
            failed += 1
            print(f"  ✗ {name}: {e!r}")
            traceback.print_exc()
    return passed, failed


def run_all_tests():
    """Run all tests"""
    print("=" * 50)
    print("rANS Codec Test Runner")
    print("=" * 50)

    include_slow = "--slow" in sys.argv[1:]
    selected = [
        name if name.startswith("tests.") else f"tests.{name}"
        for name in sys.argv[1:] if name != "--slow"
    ] or TEST_MODULES
    passed = 0
    failed = 0

    for module_name in selected:
        module_passed, module_failed = run_module(module_name, include_slow)
        passed += module_passed
        failed += module_failed

    print("\n" + "=" * 50)
    print(f"Tests Passed: {passed}/{passed + failed}")
    print("=" * 50)

    if failed == 0:
        print("\n✓ All tests passed!")
    else:
        print(f"\n✗ {failed} test(s) failed. Please check the errors above.")
    return failed


if __name__ == "__main__":
    sys.exit(1 if run_all_tests() else 0)
