import os
import sys

try:
    from setuptools import setup
except ImportError:
    from distutils.core import setup

# Don't import the dogss package here, since numpy and friends may not be installed yet
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "dogss"))
from version import VERSION

long_description = """
dogss selects features with a spike-and-slab prior on groups and on the features inside them,
fitted by expectation propagation. It also reconstructs hub-dominated networks by neighborhood selection.
"""

install_requires = [
    "numpy>=1.20",
    "scipy>=1.6",
    "pandas>=1.2",
    "networkx>=2.5",
    "scikit-learn>=0.24",
    "monotonic>=1.5",
    "backoff>=1.10.0,<2.0.0",
]

extras_require = {
    "dev": [
        "black",
        "isort",
        "pre-commit",
    ],
    "test": ["mock>=2.0.0", "pylint", "flake8", "coverage", "pytest"],
}

setup(
    name="dogss",
    version=VERSION,
    test_suite="dogss.test.all",
    packages=["dogss", "dogss.test"],
    license="MIT License",
    install_requires=install_requires,
    extras_require=extras_require,
    python_requires=">=3.7",
    entry_points={"console_scripts": ["dogss=dogss.cli:main"]},
    description="Sparse-group spike-and-slab feature selection by expectation propagation.",
    long_description=long_description,
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Programming Language :: Python",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.7",
        "Programming Language :: Python :: 3.8",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
)
