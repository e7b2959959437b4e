#!/usr/bin/env python
##
## Name:     setup.py
## Purpose:  Install the RIS optical link simulator.
##
## Standard usage:  pip install .
##
import re
from os.path import dirname, join as pjoin

from setuptools import setup


def lib_version():
    with open(pjoin(dirname(__file__), 'risowc', 'scenario.py')) as fp:
        return re.search(r'^__version__ = "([^"]+)"', fp.read(),
                         re.M).group(1)


setup(name = 'risowc',
      version = lib_version(),
      description = 'Simulator for RIS-assisted optical wireless links',
      long_description = """
This library models a free-space optical link steered by a
reconfigurable intelligent surface: per-pixel diffraction averaged over
pointing jitter, turbulence fading, pilot-aided least-squares channel
estimation, quantized and compressed feedback, and gradient-based phase
adaptation with a finite-resolution phase codebook.  A command line tool
runs single operations and seeded Monte Carlo sweeps from a YAML
scenario file.""",
      classifiers = ['Development Status :: 4 - Beta',
                     'Intended Audience :: Science/Research',
                     'Operating System :: OS Independent',
                     'Programming Language :: Python :: 3',
                     'Topic :: Scientific/Engineering :: Physics'],
      packages = ['risowc'],
      package_data = { 'risowc': ['default.yaml'] },
      python_requires = '>=3.8',
      install_requires = ['numpy>=1.20', 'scipy>=1.6', 'PyYAML>=5.1'],
      extras_require = { 'test': ['pytest', 'hypothesis'] },
      entry_points = {
          'console_scripts': ['risowc = risowc.cli:run'],
      })

# Here there be dragons
