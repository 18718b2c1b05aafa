from setuptools import setup, find_packages

__version__ = '1.0.0'

setup(
    name="symfloq",
    version=__version__,
    packages=find_packages(exclude=['tests']),
    package_data={'symfloq': ['resources/*.json']},
    include_package_data=True,
    description="Symmetry-reduced kicked-Ising Floquet simulator for entanglement dynamics of coherent states",
    long_description=open('README.md').read(),
    long_description_content_type='text/markdown',
    url='',
    author='nasim',
    entry_points={
        'console_scripts': ['symfloq = symfloq.cli:cli']
    },
    install_requires=[
        'numpy>=2.0',
        'scipy',
        'pandas',
        'click',
        'orjson',
        'tqdm',
        'pytest',
    ],
    tests_require=['pytest'],
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Programming Language :: Python',
        'Programming Language :: Python :: 3.13',
        'License :: OSI Approved :: MIT License',
        'Intended Audience :: Developers',
        'Intended Audience :: Science/Research',
        'Topic :: Scientific/Engineering',
        'Topic :: Scientific/Engineering :: Physics'
    ],
    platforms=['any'],
    python_requires='>=3.10, <4.0',
)
