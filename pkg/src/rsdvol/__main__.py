from rsdvol.cli import run

run()
