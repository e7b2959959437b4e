##
## Name:     __main__.py
## Purpose:  Run the command-line driver as "python -m risowc".
##
from .cli import run

run()
