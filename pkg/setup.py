import setuptools
import sys

if sys.version_info.major < 3:
    print("ERROR: melnikovlab requires Python 3")
    sys.exit(1)

with open("melnikovlab/VERSION") as f:
    version = f.read().strip()

setuptools.setup(
    name='melnikovlab',
    version=version,
    license='MIT',
    packages=['melnikovlab'],
    package_data={'melnikovlab': ['VERSION']},
    install_requires=['docopt', 'numpy', 'scipy', 'sympy'],
    extras_require={
        'plot': ['matplotlib'],
    },
    entry_points={
        'console_scripts': [
            'melnikovlab=melnikovlab.main:main',
        ]
    },
)
