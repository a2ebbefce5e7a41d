"""
Main entry point for weakpath.
Runs experiment configs and provides the CLI interface.
"""

import argparse
import logging
import sys
from typing import List, Optional

from weakpath import __version__
from weakpath.config import ExperimentConfig, load_config
from weakpath.exceptions import ConfigError, WeakPathError
from weakpath.fixtures import write_fixtures
from weakpath.runner import ExperimentRunner, default_output_path, write_output

EXIT_OK = 0
EXIT_PHYSICS_ERROR = 1
EXIT_CONFIG_ERROR = 2


def start_api_server():
    """Start the FastAPI server."""
    try:
        import uvicorn

        print("=" * 80)
        print("Starting weakpath API Server")
        print("=" * 80)
        print("\nAPI will be available at:")
        print("  - http://localhost:8000")
        print("  - API docs: http://localhost:8000/docs")
        print("  - Health check: http://localhost:8000/health")
        print("\nPress CTRL+C to stop the server\n")

        uvicorn.run(
            "weakpath.api:app",
            host="0.0.0.0",
            port=8000,
            reload=True
        )
    except ImportError:
        print("Error: FastAPI and uvicorn are required to run the API server.")
        print("Install them with: pip install fastapi uvicorn")


def apply_overrides(config: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    """Fold --out, --format, --seed and --threads into the resolved config."""
    output = config.output
    if args.out:
        output = output.model_copy(update={"path": args.out})
    if args.format:
        output = output.model_copy(update={"format": args.format})
    update = {"output": output}
    if args.seed is not None:
        update["seed"] = args.seed
    if args.threads is not None:
        update["threads"] = args.threads
    return config.model_copy(update=update)


def run_experiment(config: ExperimentConfig, show_summary: bool = True) -> None:
    """
    Run one experiment and write its output.

    Args:
        config: Resolved experiment config
        show_summary: Whether to print the summary block
    """
    print(f"\nRunning scenario {config.scenario} (weakpath {__version__})...")

    runner = ExperimentRunner(config, threads=config.threads)
    result, table = runner.run()

    if show_summary:
        print("\n" + "=" * 80)
        print("Summary:")
        print("=" * 80)
        for key, value in result.get("summary", {}).items():
            print(f"{key.replace('_', ' ').title()}: {value}")

    if table is not None and not table.empty:
        print(f"\nFirst rows of the {len(table)}-row table:")
        print(table.head(10).to_string(index=False))

    path = write_output(config, result, table, default_output_path(config))
    print(f"\nFull results saved to: {path}")


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point."""
    parser = argparse.ArgumentParser(
        description="weakpath - weak values, pointer dynamics and path-integral propagator inference",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Regenerate the committed fixtures
  python main.py --write-fixtures

  # Reproduce the anomalous weak value
  python main.py --config fixtures/weak-value.json

  # Propagator scan as CSV with four workers
  python main.py --config fixtures/infer-propagator.json --format csv --threads 4
        """
    )

    parser.add_argument("--config", type=str, help="Path to an experiment config (JSON)")
    parser.add_argument("--out", type=str, help="Output path (default: <scenario>_result.<format>)")
    parser.add_argument("--format", choices=["json", "csv"], help="Output format")
    parser.add_argument("--threads", type=int, help="Worker threads for scans (default: CPU count)")
    parser.add_argument("--seed", type=int, help="Seed for Monte-Carlo scenarios")
    parser.add_argument("--verbose", action="store_true", help="Log at DEBUG level")
    parser.add_argument(
        "--write-fixtures",
        nargs="?",
        const="fixtures",
        metavar="DIR",
        help="Write the reference fixture configs to DIR (default: fixtures)"
    )
    parser.add_argument("--api", action="store_true", help="Start the FastAPI server on port 8000")

    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    if args.api:
        start_api_server()
        return EXIT_OK

    if args.write_fixtures:
        for path in write_fixtures(args.write_fixtures):
            print(f"Fixture written: {path}")
        return EXIT_OK

    if not args.config:
        parser.print_help()
        print("\nError: --config is required (unless using --write-fixtures or --api)")
        return EXIT_CONFIG_ERROR

    if args.threads is not None and args.threads < 1:
        print("Error: --threads must be at least 1")
        return EXIT_CONFIG_ERROR

    try:
        config = apply_overrides(load_config(args.config), args)
        run_experiment(config)
    except ConfigError as exc:
        print(f"Config error: {exc}")
        return EXIT_CONFIG_ERROR
    except WeakPathError as exc:
        print(f"Error ({type(exc).__name__}): {exc}")
        return EXIT_PHYSICS_ERROR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
