"""Runs the stages listed in pipeline.json in order.

Each stage runs in its own directory. The standard output of stage k is
written to a file whose path is passed to stage k+1 in PF_INPUT_FILE.
"""

import json
import os
import subprocess
import sys


def main():
    here = os.path.dirname(os.path.abspath(__file__))
    with open(os.path.join(here, "pipeline.json")) as handle:
        pipeline = json.load(handle)
    input_file = os.environ.get("PF_INPUT_FILE")
    for index, stage in enumerate(pipeline["stages"]):
        env = dict(os.environ)
        if input_file is not None:
            env["PF_INPUT_FILE"] = input_file
        else:
            env.pop("PF_INPUT_FILE", None)
        result = subprocess.run(
            stage["entry"],
            cwd=os.path.join(here, stage["dir"]),
            env=env,
            stdout=subprocess.PIPE,
        )
        output = os.path.join(here, f".stage-{index}.out")
        with open(output, "wb") as handle:
            handle.write(result.stdout)
        if result.returncode != 0:
            sys.stdout.buffer.write(result.stdout)
            print(f"stage {index} ({stage['bundle']}) failed with exit code {result.returncode}", file=sys.stderr)
            return result.returncode
        input_file = output
    sys.stdout.buffer.write(result.stdout)
    return 0


if __name__ == "__main__":
    sys.exit(main())
