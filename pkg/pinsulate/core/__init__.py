# Import all modules in this package.
import pkgutil
for mod in pkgutil.iter_modules(__path__):
  __import__(__name__ + '.' + mod.name)
