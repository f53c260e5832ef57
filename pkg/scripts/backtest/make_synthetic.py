import argparse
from datetime import date

from kernelcast.dataset.synthetic import write_synthetic_csv
from kernelcast.utils.logging import setup_logging


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument(
        "--out",
        help="Output CSV path",
        default="data/synthetic.csv",
    )
    parser.add_argument(
        "--start",
        type=date.fromisoformat,
        help="First day",
        default=date(2022, 12, 1),
    )
    parser.add_argument(
        "--days",
        type=int,
        help="Number of days",
        default=120,
    )
    parser.add_argument(
        "--seed",
        type=int,
        help="Random seed",
        default=0,
    )
    args = parser.parse_args()

    setup_logging()
    write_synthetic_csv(args.out, args.start, args.days, args.seed)


if __name__ == "__main__":
    main()
