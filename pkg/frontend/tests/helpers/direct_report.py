"""Compute a layout's metric report directly from its stored graph, bypassing
the service's report cache. Prints canonical JSON for byte comparison."""

import argparse
import json
from pathlib import Path

from wallforge.metrics import evaluate_layout
from wallforge.project import Project


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--root", required=True)
    parser.add_argument("--project", required=True)
    parser.add_argument("--layout", required=True)
    args = parser.parse_args()

    project = Project.load(Path(args.root), args.project)
    graph = project.layout(args.layout)
    plan = project.plan()
    scores = project.manifest["scores"].get(args.layout, {})
    mean = round(sum(scores.values()) / len(scores), 2) if scores else None
    report = evaluate_layout(graph, plan.story_meta, plan_extent=plan.extent(),
                             s_layout=mean)
    print(report.to_json())


if __name__ == "__main__":
    main()
