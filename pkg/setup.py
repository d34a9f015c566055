from setuptools import setup, find_packages

setup(
    name="calibron",
    version="0.1.0",
    description="Calibron - Prévisions ε-calibrées par approchabilité de Blackwell",
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    install_requires=[
        "numpy>=1.26.3",
        "scipy>=1.11.0",
        "pandas>=2.1.0",
        "matplotlib>=3.8.0",
        "prometheus-client>=0.20.0",
        "python-dotenv>=1.0.0",
        "pyyaml>=6.0.0",
    ],
    extras_require={
        "dev": [
            "pytest>=7.4.3",
            "pytest-cov>=4.1.0",
            "black>=23.11.0",
            "isort>=5.12.0",
            "mypy>=1.6.1",
            "flake8>=6.1.0",
        ]
    },
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
    ],
    python_requires='>=3.10',
    entry_points={
        "console_scripts": [
            "calibron=calibron.__main__:main"
        ]
    },
    package_data={
        "calibron": ["*.yaml"]
    },
    include_package_data=True
)
