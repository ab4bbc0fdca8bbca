#!/usr/bin/env python

#
# KSymplectic project.
#

from setuptools import setup, find_packages
from pathlib import Path
import semver
import configparser
import os
import traceback

#
# Bumps the patch level of the [version] section in setup.cfg and writes it back,
# so every packaging run produces a new version. The section holds two values:
#
# [version]
# pypi_test_version=1.0.0
# pypi_version=1.0.0
#
# KSYM_DEPLOY_PYPI=1 in the environment bumps the PyPi version; otherwise the
# test version is bumped.
#
def bump_and_return_version():
    initial_value = "1.0.0"
    bump_type = None
    result = None
    try:
        config = configparser.ConfigParser()
        config.read('setup.cfg')
        if not config.has_section("version"):
            config.add_section("version")
            config['version']['pypi_test_version'] = initial_value
            config['version']['pypi_version'] = initial_value
            bump_type = "initial"
            result = initial_value
        else:
            version_section = config["version"]
            key = "pypi_version" if os.environ.get("KSYM_DEPLOY_PYPI", "0") == "1" \
                else "pypi_test_version"
            bump_type = "PyPi" if key == "pypi_version" else "PyPi Test"
            version = semver.VersionInfo.parse(version_section.get(key, initial_value))
            version = version.bump_patch()
            version_section[key] = str(version)
            result = str(version)

        with open('setup.cfg', 'w') as config_file:
            config.write(config_file)

        print(f"Bumping {bump_type} version to {result}")
        return result

    except Exception as e:
        print(f"ERROR processing setup.cfg file: {str(e)}")
        print(traceback.format_exc())
        exit(1)


with open(Path('requirements.txt')) as f:
    required = [line for line in f.read().splitlines() if line and not line.startswith("#")]

this_directory = Path(__file__).parent
long_description = (this_directory / "README.md").read_text()

setup(name='ksymplectic',
      version=bump_and_return_version(),
      description='Canonical connections of k-symplectic manifolds, with a verification CLI',
      long_description=long_description,
      long_description_content_type='text/markdown',
      license='Apache 2.0',
      packages=find_packages(),
      package_data={'ksymplectic': ['demo/specs/*.json']},
      install_requires=required,
      python_requires=">=3.8",
      keywords=["k-symplectic", "connection", "differential-geometry", "cli"],
      classifiers=[
          "Environment :: Console",
          "Intended Audience :: Science/Research",
          "License :: OSI Approved :: Apache Software License",
          "Topic :: Scientific/Engineering :: Mathematics",
          "Topic :: Utilities"
      ],
      entry_points={
          'console_scripts': [
              'ksym=ksymplectic.ksym:ksymcli'
          ],
      },
      )
