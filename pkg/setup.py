from setuptools import setup

with open("README.md", 'r') as f:
    long_description = f.read()

version_dict = {}
with open("obstruction_forge/_version.py") as f:
    exec(f.read(), version_dict)

name = 'obstruction_forge'
version = version_dict['__version__']
release = version

extras_require = {
  'docs': ['sphinx >= 1.4'],
}

packages = ['obstruction_forge', 'obstruction_forge.certify']

tests = [p + '.tests' for p in packages]

setup(
    name=name,
    version=version,
    description='Check combinatorial models of branched covers with rotation '
                'domains for Thurston-type obstructions',
    license="Apache",
    python_requires='>=3.8',
    install_requires=[
        'numpy>=1.16.0',
        'xarray>=v0.13.0',
        'dask[array]>=1.0.0',
        'natsort>=5.5.0',
        'networkx>=2.3',
        'pydot>=1.4.1',
    ],
    extras_require=extras_require,
    tests_require=['pytest >= 3.3.0', 'hypothesis >= 4.0'],
    long_description=long_description,
    long_description_content_type="text/markdown",
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "Intended Audience :: Education",
        "License :: OSI Approved :: Apache License",
        "Natural Language :: English",
        "Operating System :: POSIX :: Linux",
        "Programming Language :: Python :: 3.8",
        "Topic :: Scientific/Engineering :: Mathematics"
    ],
    packages=packages + tests,
    package_data={'obstruction_forge': ['data/*.model']},
    entry_points={
        'console_scripts': [
            'obstruction-forge=obstruction_forge.cli:main',
        ],
    },
    command_options={
        'build_sphinx': {
            'project': ('setup.py', name),
            'version': ('setup.py', version),
            'release': ('setup.py', release),
            'source_dir': ('setup.py', 'docs'),
        }
    },
)
