#!/usr/bin/env python3
# Copyright 2026 The hatkit Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
# ==============================================================================

"""Prepends the Apache-2.0 header to source files that lack it."""

import argparse
import pathlib

YEAR = 2026
OWNER = "The hatkit Authors"

BODY = f"""Copyright {YEAR} {OWNER}. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License."""

RULE = "=" * 78

C_STYLE = {".h", ".cc"}
HASH_STYLE = {".py", ".txt", ".cmake"}
SOURCE_DIRS = ("include", "src", "tests", "tools")


def c_header():
    return "/* " + BODY + "\n" + RULE + "*/\n\n"


def hash_header():
    lines = [("# " + line).rstrip() for line in BODY.splitlines()]
    return "\n".join(lines) + "\n# " + RULE + "\n\n"


def header_for(path):
    if path.suffix in C_STYLE:
        return c_header()
    if path.suffix in HASH_STYLE or path.name == "CMakeLists.txt":
        return hash_header()
    return None


def candidates(root):
    yield from root.glob("CMakeLists.txt")
    for d in SOURCE_DIRS:
        for path in sorted((root / d).rglob("*")):
            if path.is_file():
                yield path


def apply(path, header):
    text = path.read_text()
    if "Licensed under the Apache License" in text[:1024]:
        return False
    shebang = ""
    if text.startswith("#!"):
        shebang, _, text = text.partition("\n")
        shebang += "\n"
    path.write_text(shebang + header + text)
    return True


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("root", nargs="?", default=pathlib.Path(__file__).resolve().parent.parent,
                        type=pathlib.Path)
    args = parser.parse_args()
    changed = 0
    for path in candidates(args.root):
        header = header_for(path)
        if header and apply(path, header):
            changed += 1
    print(f"added headers to {changed} files")


if __name__ == "__main__":
    main()
