from os import getenv
from setuptools import setup
from setuptools import find_packages


setup(
    name='intake-ctrl',
    version=getenv("VERSION", "0.0.0+local"),
    description=('Simulating and controlling the two-chamber intake pressure '
                 'system of an altitude test stand.'),
    packages=find_packages(exclude=['tests']),
    install_requires=['numpy', 'scipy', 'pandas', 'tqdm'],
    extras_require={'test': ['pytest']},
    entry_points={
        'console_scripts': ['intake-ctrl=intake_ctrl.cli:main'],
    },
)
