# Keeps this directory on sys.path so the shared `helpers` module imports
# from any test file.
