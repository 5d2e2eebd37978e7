from evflex.cli.main import main

main()
