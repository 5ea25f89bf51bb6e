from itertools import chain

# Always prefer setuptools over distutils
from setuptools import setup, find_packages
# To use a consistent encoding
from codecs import open
from os import path

here = path.abspath(path.dirname(__file__))

# Get the long description from the relevant file
with open(path.join(here, 'README.rst'), encoding='utf-8') as f:
    long_description = f.read()

EXTRA_REQUIRES = {
    'test': ['tox>=2.3.1', 'pytest>=2.9.2'],
    'svg': ['lxml>=3.6.1'],
    'torus3': ['scikit-image>=0.19'],
    'parallel': ['joblib>=1.0'],
}

ALL_REQUIRE = list(chain(*EXTRA_REQUIRES.values()))

EXTRA_REQUIRES["all"] = ALL_REQUIRE

setup(
    name='tightcert',

    # Versions should comply with PEP440.
    version='0.1.0',

    description='Tightness certificates for S1-invariant contact structures '
                'built from surface eigenfunctions',
    long_description=long_description,

    license='New BSD',

    # See https://pypi.python.org/pypi?%3Aaction=list_classifiers
    classifiers=[
        'Development Status :: 3 - Alpha',

        'Intended Audience :: Science/Research',
        'Topic :: Scientific/Engineering :: Mathematics',

        'License :: OSI Approved :: BSD License',

        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: 3.11',
        'Programming Language :: Python :: 3.12',
    ],

    keywords='contact topology tight Beltrami Laplacian eigenfunctions '
             'nodal domains mesh',

    packages=find_packages(".", include=("tightcert", "tightcert.*")),

    python_requires='>=3.9',

    # List run-time dependencies here.  These will be installed by pip when
    # your project is installed.
    install_requires=['numpy>=1.22', 'scipy>=1.8'],

    # $ pip install -e .[all]
    extras_require=EXTRA_REQUIRES,

    package_data={},

    data_files=[],

    entry_points={
        'console_scripts': ['tightcert = tightcert.cli:main'],
    },
)
