from setuptools import setup, find_packages

setup(
    name="osclab",
    version="0.1.0",
    packages=find_packages(exclude=['examples', 'examples.*']),
    install_requires=[
        'numpy>=1.23.0',
        'scipy>=1.9.0',
        'pandas>=1.5.0',
        'tqdm>=4.65.0',
        'pytest>=7.3.0'
    ],
    entry_points={
        'console_scripts': [
            'osclab=osclab.cli:main',
        ],
    },
    python_requires='>=3.8',
)
