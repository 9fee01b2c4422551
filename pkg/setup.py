from setuptools import find_packages, setup

setup(
    name='cavity_swap',
    packages=find_packages(include=['cavity_swap', 'cavity_swap.*']),
    version='0.1.0',
    description='Simultaneous quantum-state swap and EPR-pair generation between two sets of cavities '
                'coupled through one qubit',
    install_requires=['numpy', 'scipy', 'pandas', 'loguru'],
    setup_requires=['pytest-runner'],
    tests_require=['pytest==8.2.2'],
    test_suite='cavity_swap.tests',
    entry_points={'console_scripts': ['cavity-swap=cavity_swap.cli:main']},
)
