from polarity_lab.cli import main

# test with: python -m polarity_lab
if __name__ == "__main__":
    main()
