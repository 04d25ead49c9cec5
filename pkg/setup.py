import os.path

from setuptools import find_packages, setup


def read(fname):
    path = os.path.join(os.path.dirname(__file__), fname)
    with open(path, "r") as rfile:
        return rfile.read()


metadata = {}
exec(read("lookahead/__about__.py"), metadata)


setup(
    name="lookahead",
    version=metadata["__version__"],
    description=metadata["__description__"],
    license=metadata["__license__"],
    long_description=read("README.rst") + "\n\n" + read("HISTORY.rst"),
    long_description_content_type="text/plain",
    author=metadata["__author__"],
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: Apache Software License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    install_requires=["numpy>=1.20", "scipy>=1.6", "pandas>=1.2"],
    keywords=["mdp", "lookahead", "competitive ratio", "linear programming"],
    python_requires=">=3.8",
    packages=find_packages(exclude=("tests", "docs")),
    entry_points={"console_scripts": ["lookahead=lookahead.cli:main"]},
)
