"""Command-line entry point: generate, fragment, bench, series.

Exit codes: 0 on success, 1 on usage errors, 2 on data errors (integrity
violations, unsound layouts, result mismatches).
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .ab import affinity_to_csv, pum_to_csv
from .bench import (
    fragment_to_directory,
    fragmenter_for,
    gain_series,
    gain_series_csv,
    run_benchmark,
)
from .errors import XwfragError
from .fragments import (
    SCHEMA_FILENAME,
    build_fragmentation_schema,
    materialize_fragments,
    validate_fragmentation,
)
from .generate import (
    XWEB_DIM_SIZES,
    generate_preset,
    generate_workload,
    generate_xweb_full,
    load_presets,
)
from .workload import parse_workload, render_workload
from .xmlio import parse_warehouse, serialize_warehouse

_PRESET_CHOICES = ("config1", "config2", "config3", "xweb")


@click.group()
def cli():
    """Workload-driven fragmentation for XML star-schema warehouses."""


def _load_preset(name: str, presets_file):
    presets = load_presets(presets_file)
    if name not in presets and name != "xweb":
        raise click.UsageError(
            f"preset {name!r} not defined (known: {', '.join(sorted(presets))}, xweb)"
        )
    return presets.get(name)


@cli.command()
@click.option("--preset", type=click.Choice(_PRESET_CHOICES), default="config1", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(path_type=Path), required=True,
              help="Directory for the warehouse documents and workload.xq.")
@click.option("--presets-file", type=click.Path(exists=True, path_type=Path), default=None,
              help="Alternative presets.toml.")
def generate(preset, seed, out, presets_file):
    """Generate a warehouse and its workload for a named preset."""
    entry = _load_preset(preset, presets_file)
    if preset == "xweb":
        warehouse = generate_xweb_full(seed)
        # full-size warehouse; pair it with a config2-shaped workload
        reference = _load_preset("config2", presets_file)
        workload = generate_workload(
            warehouse, reference.n_queries, reference.n_joins, reference.n_predicates, seed
        )
    else:
        warehouse, workload = generate_preset(entry, seed)
    serialize_warehouse(warehouse, out)
    (out / "workload.xq").write_text(render_workload(workload), encoding="utf-8")
    n_facts = len(warehouse.facts[0].facts)
    click.echo(
        f"wrote {n_facts} facts, {len(warehouse.dimensions)} dimensions and "
        f"{len(workload.queries)} queries to {out}",
        err=True,
    )


@cli.command()
@click.option("--method", type=click.Choice(["pc", "ab"]), required=True)
@click.option("--warehouse", "warehouse_dir", type=click.Path(exists=True, path_type=Path),
              required=True)
@click.option("--workload", "workload_file", type=click.Path(exists=True, path_type=Path),
              required=True)
@click.option("--out", type=click.Path(path_type=Path), required=True)
@click.option("--dump-matrices", is_flag=True,
              help="Also write per-dimension usage/affinity matrices as CSV (ab only).")
def fragment(method, warehouse_dir, workload_file, out, dump_matrices):
    """Fragment a warehouse and materialize one collection per fragment."""
    warehouse = parse_warehouse(warehouse_dir)
    workload = parse_workload(workload_file.read_text(encoding="utf-8"), warehouse.meta)

    fragmenter = fragmenter_for(method)
    fragmenter.fit(warehouse, workload)
    if not fragmenter.candidate_dimensions_:
        raise XwfragError("no candidate dimensions: the workload has no selection predicates")
    fragments = fragmenter.transform(warehouse)
    schema = build_fragmentation_schema(fragments, method)
    violations = validate_fragmentation(warehouse, fragmenter.dimension_fragments_, fragments)
    if violations:
        raise XwfragError(
            "unsound layout: " + "; ".join(str(v) for v in violations[:5])
        )
    materialize_fragments(warehouse, fragments, schema, out)
    if dump_matrices and method == "ab":
        for dim_id, pum in fragmenter.usage_matrices_.items():
            (out / f"pum_{dim_id}.csv").write_text(pum_to_csv(pum), encoding="utf-8")
        for dim_id, aff in fragmenter.affinity_matrices_.items():
            (out / f"affinity_{dim_id}.csv").write_text(affinity_to_csv(aff), encoding="utf-8")
    click.echo(
        f"{len(fragments)} fragment(s) over dimensions "
        f"{', '.join(fragmenter.candidate_dimensions_)} written to {out}",
        err=True,
    )


@cli.command()
@click.option("--mono", type=click.Path(exists=True, path_type=Path), required=True,
              help="Monolithic warehouse directory.")
@click.option("--frags", type=click.Path(exists=True, path_type=Path), required=True,
              help="Fragment collections directory (with fragmentation_schema.xml).")
@click.option("--workload", "workload_file", type=click.Path(exists=True, path_type=Path),
              required=True)
@click.option("--repeats", type=int, default=3, show_default=True)
def bench(mono, frags, workload_file, repeats):
    """Compare monolithic vs fragmented execution; CSV on stdout."""
    if repeats < 3:
        raise click.UsageError("--repeats must be at least 3")
    warehouse = parse_warehouse(mono)
    workload = parse_workload(workload_file.read_text(encoding="utf-8"), warehouse.meta)
    report = run_benchmark(mono, frags, workload, repeats=repeats)
    click.echo(report.to_csv(), nl=False)
    click.echo(report.summary(), err=True)


@cli.command()
@click.option("--method", type=click.Choice(["pc", "ab", "both"]), default="both",
              show_default=True)
@click.option("--preset", type=click.Choice(["config1", "config2", "config3"]),
              default="config2", show_default=True, help="Workload shape for the series.")
@click.option("--sizes", default="1000,2000,3000,4000,5000", show_default=True,
              help="Comma-separated fact counts.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--repeats", type=int, default=3, show_default=True)
@click.option("--out", type=click.Path(path_type=Path), default=None,
              help="CSV output file (default: stdout).")
@click.option("--presets-file", type=click.Path(exists=True, path_type=Path), default=None)
def series(method, preset, sizes, seed, repeats, out, presets_file):
    """Gain vs warehouse size: one benchmark per fact count and method."""
    try:
        size_list = [int(s) for s in sizes.split(",") if s.strip()]
    except ValueError:
        raise click.UsageError(f"--sizes must be comma-separated integers, got {sizes!r}")
    if not size_list:
        raise click.UsageError("--sizes is empty")
    if repeats < 3:
        raise click.UsageError("--repeats must be at least 3")
    entry = _load_preset(preset, presets_file)
    reference, workload = generate_preset(entry, seed)
    methods = ["pc", "ab"] if method == "both" else [method]
    rows_by_method = {
        m: gain_series(size_list, m, workload, entry.dim_sizes, seed=seed, repeats=repeats)
        for m in methods
    }
    text = gain_series_csv(rows_by_method)
    if out is None:
        click.echo(text, nl=False)
    else:
        out.write_text(text, encoding="utf-8")
        click.echo(f"wrote {out}", err=True)


def main(argv=None) -> int:
    """Console entry point mapping errors to exit codes."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        exc.show()
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except XwfragError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except OSError as exc:
        click.echo(f"i/o error: {exc}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
