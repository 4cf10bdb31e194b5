from setuptools import find_packages, setup

setup(
    name="sepair",
    version="0.1.0",
    description="Separated pairs of subspaces and Hilbert C*-submodules",
    long_description=open("README.md").read(),
    long_description_content_type="text/markdown",
    author="yudhisteer",
    author_email="yudhisteer@gmail.com",
    packages=find_packages(exclude=["examples", "examples.*"]),
    python_requires=">=3.10",
    install_requires=[
        "click>=8.1.8",
        "colorlog>=6.9.0",
        "numpy>=1.26.0",
        "pydantic>=2.11.0",
        "python-decouple>=3.8",
        "scipy>=1.11.0",
    ],
    entry_points={"console_scripts": ["sepair=sepair.cli.commands:cli"]},
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.12",
    ],
)
