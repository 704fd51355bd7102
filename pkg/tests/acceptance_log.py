"""Collects one result line per acceptance criterion for the terminal summary."""
LINES = []


def report(num, ok, text):
    line = f"{'PASS' if ok else 'FAIL'} [{num}] {text}"
    LINES.append(line)
    print(line)
    return ok
