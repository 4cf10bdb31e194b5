from sepair.cli.commands import cli


def main():
    cli(prog_name="sepair")


if __name__ == "__main__":
    main()
