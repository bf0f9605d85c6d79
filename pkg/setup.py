from setuptools import setup, find_packages

setup(
    name="vanet-driver-adaptation",
    version="0.1.0",
    description="Driver-adaptive channel access for vehicular safety messaging",
    packages=find_packages(exclude=["tests", "tests.*"]),
    py_modules=["main"],
    python_requires=">=3.10",
    install_requires=[
        "numpy",
        "pandas",
        "pydantic>=2",
        "python-dotenv",
        "colorama",
        "tqdm",
    ],
    entry_points={
        "console_scripts": [
            "vanet-adapt=main:cli",
        ],
    },
)
