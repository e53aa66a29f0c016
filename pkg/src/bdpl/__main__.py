from bdpl.cli import run

run()
