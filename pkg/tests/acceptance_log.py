"""One result line per acceptance criterion, collected across the session."""

RESULTS: list[str] = []


def record(name: str, status: str, detail: str) -> str:
    line = f"{status:<4} {name}: {detail}"
    RESULTS.append(line)
    print(line)
    return line
