# Constants package for efficiency app.
