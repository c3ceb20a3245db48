"""
Created on Sep 2, 2026

@author: jrm
"""
from setuptools import setup, find_packages

setup(
    name='brep2shape',
    version='0.1.0',
    author='CodeLV',
    author_email='frmdstryr@gmail.com',
    url='https://github.com/codelv/brep2shape',
    description='B-rep decomposition and shape pre-training toolkit',
    license="MIT",
    long_description=open('README.md').read(),
    long_description_content_type="text/markdown",
    python_requires='>=3.9',
    install_requires=['atom >= 0.9.0', 'lxml>=3.4.0', 'numpy>=1.22', 'torch>=1.12'],
    extras_require={
        'test': ['pytest', 'pytest-benchmark'],
    },
    entry_points={
        'console_scripts': ['brep2shape = brep2shape.cli:main'],
    },
    packages=find_packages(exclude=['tests', 'examples*']),
)
