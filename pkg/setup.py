from __future__ import print_function
from setuptools import setup, find_packages
import sys
import re
import ast


if sys.version_info < (3, 7):
    error = "ERROR: einsteinflow requires Python 3.7 or later"
    print(error, file=sys.stderr)
    sys.exit(1)

with open('README.md') as f:
    long_description = f.read()

_version_re = re.compile(r'__version__\s+=\s+(.*)')

with open('einsteinflow/__init__.py', 'rb') as f:
    version = str(ast.literal_eval(_version_re.search(
        f.read().decode('utf-8')).group(1)))


setup(
    name="einsteinflow",
    version=version,
    description="Rescaled vacuum Einstein flow in Gaussian normal gauge",
    long_description=long_description,
    long_description_content_type="text/markdown",
    install_requires=[
        "numpy>=1.17",
        "scipy>=1.4",
        "sympy>=1.5",
        "matplotlib>=3.1",
        "pyyaml>=5.1",
    ],
    packages=find_packages(exclude=['tests']),
    entry_points={
        'console_scripts': [
            'einsteinflow=einsteinflow.cli:main',
        ],
    },
)
