"""Setup script for the helmholtz library module"""

from os import path

from setuptools import setup  # type: ignore

# read the contents of your README file
this_directory = path.abspath(path.dirname(__file__))
with open(path.join(this_directory, "README.md"), "rb") as f:
    long_description = f.read().decode("utf-8")

setup(
    name="helmholtz-condense",
    version="0.1.0",
    zip_safe=True,
    description="Statically condensed 3D Helmholtz spectral elements",
    long_description=long_description,
    long_description_content_type="text/markdown",
    license="ISC",
    keywords="spectral elements, static condensation, helmholtz",
    packages=["helmholtz"],
    python_requires=">=3.8, <4",
    package_data={"helmholtz": ["py.typed"]},
    install_requires=[
        "numpy",
        "pydantic>=2",
        "scipy",
    ],
    extras_require={
        "dev": [
            "mypy",
            "pytest",
            "types-setuptools",
        ]
    },
    entry_points={
        "console_scripts": [
            "helmholtz=helmholtz.cli:main",
        ]
    },
    classifiers=[
        "Development Status :: 4 - Beta",
        "Topic :: Scientific/Engineering :: Mathematics",
        "License :: OSI Approved :: ISC License (ISCL)",
    ],
)
