# -*- coding:Utf-8 -*

import os
import sys
import platform
import argparse
from zipfile import ZipFile, ZIP_DEFLATED
from cx_Freeze import setup, Executable

ROOT = os.path.dirname(os.path.abspath(__file__))
BUILD_FOLDER = os.path.join(ROOT, "build")

APPLICATION = "ehcrn_bench"
PACKAGES = ["ehcrn", APPLICATION, "numpy", "scipy", "pandas", "psutil"]
SHIPPED_FOLDERS = ["configs"]
EXECUTABLE = "ehcrn" + (".exe" if sys.platform.startswith("win") else "")

def read_version() -> str:
    namespace = dict()
    with open(os.path.join(ROOT, APPLICATION, "version.py")) as file:
        exec(file.read(), namespace)
    return namespace["__version__"]

def archive_name(version: str) -> str:
    return f"EHCRN-{version}-{platform.system()}.zip"

def build_zip(version: str) -> str:
    output = os.path.join(BUILD_FOLDER, archive_name(version))
    print(f"Packing {os.path.basename(output)}...")
    runtime = [EXECUTABLE, "lib", *SHIPPED_FOLDERS]
    if sys.platform.startswith("win"):
        runtime.extend(name for name in os.listdir(BUILD_FOLDER) if name.endswith(".dll"))
    with ZipFile(output, "w", compression=ZIP_DEFLATED) as archive:
        for name in runtime:
            path = os.path.join(BUILD_FOLDER, name)
            if os.path.isfile(path):
                archive.write(path, name)
                continue
            for folder, _, files in os.walk(path):
                for file in files:
                    filepath = os.path.join(folder, file)
                    archive.write(filepath, os.path.relpath(filepath, BUILD_FOLDER))
    return output

def confirm(summary: dict[str, object]) -> bool:
    print("-----------------------------------{ cx_Freeze }-----------------------------------")
    width = max(len(key) for key in summary)
    for key, value in summary.items():
        print(f"{key.ljust(width)} : {value}")
    while True:
        answer = input("Build ? (y/n) : ").lower()
        if answer in ("y", "n"):
            return answer == "y"

def freeze(version: str) -> None:
    build_options = {
        "build_exe": BUILD_FOLDER,
        "packages": PACKAGES,
        "excludes": ["tkinter", "pytest", "tests"],
        "include_files": SHIPPED_FOLDERS,
        "include_msvcr": sys.platform.startswith("win"),
        "silent": True,
    }
    sys.argv = [sys.argv[0], "build_exe"]
    setup(
        name="EHCRN",
        version=version,
        description="Energy cooperation solvers and experiments for energy harvesting cognitive radio networks",
        options={"build_exe": build_options},
        executables=[Executable(os.path.join(ROOT, "run.py"), base=None, target_name=EXECUTABLE)],
    )

def main() -> int:
    parser = argparse.ArgumentParser(prog="setup.py", description="Freeze the ehcrn command line into an executable")
    parser.add_argument("--zip", help="Pack the build into a zip file once it is done", action="store_true")
    parser.add_argument("--zip-no-build", help="Pack the existing build without rebuilding", action="store_true")
    parser.add_argument("--version", help="Use a custom version instead of the application one")
    parser.add_argument("-y", "--yes", help="Do not ask for confirmation", action="store_true")
    args = parser.parse_args()
    version = args.version or read_version()

    if args.zip_no_build:
        print(build_zip(version))
        return 0
    summary = {"Executable": EXECUTABLE, "Version": version, "Packages": ", ".join(PACKAGES), "Shipped": ", ".join(SHIPPED_FOLDERS)}
    if not args.yes and not confirm(summary):
        return 0
    try:
        freeze(version)
    except Exception as e:
        print(f"{e.__class__.__name__}: {e}")
        return 1
    print("Build done")
    if args.zip:
        print(build_zip(version))
    return 0

if __name__ == "__main__":
    sys.exit(main())
