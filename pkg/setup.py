# Optional environment variables supported by setup.py:
#   PROJECT_NAME
#     distribution name, defaults to sessionlen.

import os
import shutil
from distutils.command.clean import clean
from distutils.dir_util import remove_tree

from setuptools import find_packages, setup

classifiers = [
    'Development Status :: 3 - Alpha',
    'Topic :: Scientific/Engineering :: Information Analysis',
    'Topic :: Scientific/Engineering :: Mathematics',
    'Intended Audience :: Science/Research',
    'Intended Audience :: Developers',
    'License :: OSI Approved :: MIT License',
    'Programming Language :: Python :: 3.8',
    'Programming Language :: Python :: 3.9',
    'Programming Language :: Python :: 3.10',
    'Programming Language :: Python :: 3.11',
]

project_name = os.getenv('PROJECT_NAME', 'sessionlen')
SL_VERSION_MAJOR = 0
SL_VERSION_MINOR = 1
SL_VERSION_PATCH = 0
version = f'{SL_VERSION_MAJOR}.{SL_VERSION_MINOR}.{SL_VERSION_PATCH}'

packages = find_packages('python')

# Our python package root dir is python/
package_dir = 'python'

root_dir = os.path.abspath(os.path.dirname(__file__))


class Clean(clean):
    def run(self):
        super().run()
        generated_folders = ('build', 'dist', 'python/sessionlen.egg-info')
        for d in generated_folders:
            path = os.path.join(root_dir, d)
            if os.path.exists(path):
                remove_tree(path, dry_run=self.dry_run)
        for cache in ('.pytest_cache', ):
            shutil.rmtree(os.path.join(root_dir, cache), ignore_errors=True)


setup(name=project_name,
      packages=packages,
      package_dir={"": package_dir},
      version=version,
      description='Session length prediction with hierarchical shrinkage',
      long_description_content_type='text/markdown',
      python_requires=">=3.8",
      install_requires=[
          'numpy',
          'scipy',
          'pandas>=2.0',
          'colorama',
      ],
      keywords=['empirical bayes', 'shrinkage', 'session length'],
      license='MIT',
      include_package_data=True,
      entry_points={
          'console_scripts': [
              'sessionlen=sessionlen.main:main',
          ],
      },
      classifiers=classifiers,
      cmdclass=dict(clean=Clean))
