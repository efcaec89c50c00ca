from setuptools import setup, find_packages

version = '2026.10.1'

setup(
    name='gkplab',
    version=version,
    description='Finite-energy GKP qubit graph states: Steane error '
                'correction, fusion and a quadrature-grid oracle',
    classifiers=[
        'Development Status :: 4 - Beta',
        'Programming Language :: Python',
        'Programming Language :: Python :: 3',
        'Topic :: Scientific/Engineering :: Physics',
    ],
    keywords='GKP bosonic codes graph states Steane fusion homodyne',
    author='Paul Rentschler',
    author_email='paulrentschler@gmail.com',
    url='https://github.com/paulrentschler/gkplab',
    license='MIT License',
    packages=find_packages(exclude=['ez_setup']),
    package_data={'gkplab': ['scripts/*.json']},
    include_package_data=True,
    zip_safe=False,
    install_requires=[
        'networkx',
        'numpy',
        'scipy',
        'sympy',
    ],
    extras_require={
        'test': ['hypothesis'],
    },
    entry_points={
        'console_scripts': ['gkplab = gkplab.__main__:main'],
    },
)
