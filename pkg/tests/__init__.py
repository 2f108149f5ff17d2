# To make relative imports work
