"""Setup file for the complex_nets package."""

from setuptools import setup, find_packages

setup(
    name="complex-nets",
    version="0.1.0",
    packages=find_packages(where="complex_nets", exclude=["tests"]),
    package_dir={"": "complex_nets"},
    install_requires=[
        "python-dotenv>=1.0.0",
        "pydantic>=2.5.2",
        "tqdm>=4.66.1",
        "colorama>=0.4.6",
        "numpy>=1.24.0",
        "pandas>=2.0.0",
        "scikit-learn>=1.3.0",
        "scipy>=1.10.0",
        "matplotlib>=3.7.0",
        "seaborn>=0.12.0",
    ],
    extras_require={
        "dev": ["pytest>=7.4.0", "hypothesis>=6.90.0", "black>=23.12.1", "flake8>=4.0.1"],
    },
    python_requires=">=3.9",
)
