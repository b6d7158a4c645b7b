# -*- coding: Utf-8 -*

import os
import sys

def program_directory() -> str:
    return os.path.abspath(os.path.dirname(sys.argv[0]))

def resolve_input_file(filepath: str) -> str:
    """Return filepath if it exists from the working directory, else the same relative path under the program directory."""
    if os.path.isfile(filepath) or os.path.isabs(filepath):
        return filepath
    candidate = os.path.join(program_directory(), filepath)
    if os.path.isfile(candidate):
        return candidate
    return filepath

def ensure_parent_directory(filepath: str) -> str:
    directory = os.path.dirname(os.path.abspath(filepath))
    if not os.path.isdir(directory):
        os.makedirs(directory)
    return filepath
