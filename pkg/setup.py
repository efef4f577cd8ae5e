"""A setuptools based setup module.

See:
https://packaging.python.org/en/latest/distributing.html
https://github.com/pypa/sampleproject
"""

# Always prefer setuptools over distutils
from setuptools import setup, find_packages
# To use a consistent encoding
from codecs import open
from os import path

here = path.abspath(path.dirname(__file__))

# Get the long description from the README file
with open(path.join(here, 'README.rst'), encoding='utf-8') as f:
    long_description = f.read()

with open(path.join(here, 'requirements.txt')) as f:
    requirements = [line.strip() for line in f.read().splitlines() if line.strip()]

setup(
    name='cttts-selection',
    version='1.0',
    description='Top-two Thompson sampling for contextual top-m ranking and selection',
    long_description=long_description,
    author='cttts developers',
    keywords='ranking selection thompson sampling budget allocation',
    packages=find_packages(exclude=['examples', 'examples.*']),
    python_requires='>=3.8',
    install_requires=requirements,
    include_package_data=True,
    package_data={
       'cttts': ['testData.json'],
    },
    entry_points={
        'console_scripts': ['cttts = cttts.cli:main']
    }
)
