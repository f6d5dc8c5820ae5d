#!/usr/bin/env python
# Setup file for bridgeblock
# Copyright (C) 2024 The bridgeblock developers

from setuptools import setup


bridgeblock_version = (0, 1, 0)
bridgeblock_version_string = ".".join(map(str, bridgeblock_version))


if __name__ == "__main__":
    setup(name='bridgeblock',
          description='Blocked Gibbs samplers for diffusion bridges',
          keywords='diffusion bridge gibbs sampler mcmc blocking',
          version=bridgeblock_version_string,
          license='LGPLv2.1 or later',
          author='The bridgeblock developers',
          long_description="""
          Exact and approximate rejection samplers for diffusion bridges,
          blocked Gibbs sampling of long bridges through fixed anchor
          points, closed-form convergence rates for Gaussian models and
          the diagnostics used to compare blocking choices.
          """,
          packages=['bridgeblock', 'bridgeblock.tests'],
          package_data={'bridgeblock': ['experiments/*.toml']},
          scripts=['bin/bridgeblock'],
          python_requires='>=3.8',
          install_requires=[
              'numpy>=1.17',
              'scipy>=1.6',
              'numba>=0.50',
              'tomli>=1.1; python_version < "3.11"',
              ],
          test_suite='bridgeblock.tests.test_suite',
          )
