import setuptools

def readme():
  with open('README.md', encoding='utf8') as fp:
    return fp.read()

def requirements():
  with open('requirements.txt') as fp:
    return fp.readlines()

setuptools.setup(
  name = 'pinsulate',
  version = '1.0.0.dev0',
  author = 'Niklas Rosenstein',
  author_email = 'rosensteinniklas@gmail.com',
  description = 'Optimal insulation layers: a p-Laplace free boundary solver',
  long_description = readme(),
  long_description_content_type = 'text/markdown',
  install_requires = requirements(),
  extras_require = {'test': ['pynose']},
  python_requires = '>=3.8',
  packages = setuptools.find_packages(exclude=['tests']),
  entry_points = {
    'console_scripts': [
      'pinsulate = pinsulate.main:_entry_point'
    ]
  }
)
