from pkmsizing.cli import main

main()
