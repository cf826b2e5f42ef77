from setuptools import setup, find_packages

setup(
    # Needed to silence warnings (and to be a worthwhile package)
    name='ecdg',
    # Needed to actually package something
    packages=find_packages(where="src"),
    package_dir={"": "src"},
    # Needed for dependencies
    install_requires=[
        'numpy',
        'sympy',
        'pandas'
    ],
    entry_points={
        'console_scripts': [
            'ecdg=ecdg.cli:main'
        ]
    },
    version='0.1',
    description='Energy-conserving discontinuous Galerkin methods for linear symmetric hyperbolic '
                'systems, with Lax-Wendroff time stepping and a convergence/energy experiment harness.',
)
