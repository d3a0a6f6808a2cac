"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data/parse error. All warnings go
to standard error as `WARN <stage>: <message>`.
"""

import sys

import click

from . import __version__
from . import ipa as ipa_mod
from .cluster import ClusterParams, assign_cognates
from .corpus import (load_language_map, load_synset_dump, load_wordlist,
                     write_wordlist)
from .errors import CogforgeError, DataError
from .g2p import compile_ruleset, load_g2p_dir, transcribe_detail
from .harness import (ABLATION_VARIANTS, ablate, load_config, load_pairs_tsv,
                      reveng_report, run_pipeline, write_ablation_tsv,
                      write_error_report_tsv)
from .ipa import load_sound_classes, to_sound_classes
from .matrix import (dataset_stats, drop_constant_columns, encode_binary,
                     sparsity_grid, write_columns_meta, write_nexus,
                     write_phylip, write_sparsity_svg, write_sparsity_tsv,
                     write_stats_tsv)
from .selection import (SelectionParams, availability_counts,
                        availability_histogram, filter_concept_synsets,
                        load_concept_list, materialize_wordlist,
                        select_by_concept_list, select_top_k,
                        write_histogram_tsv)
from .trees import gq_distance, load_newick


def warn(stage, message):
    click.echo(f"WARN {stage}: {message}", err=True)


@click.group()
@click.version_option(version=__version__, prog_name="cogforge")
def cli():
    """Wordlist construction and phylogenetic evaluation toolkit."""


@cli.command()
@click.option("--dump", type=click.Path(), help="Synset dump (JSON lines).")
@click.option("--wordlist", type=click.Path(), help="Wordlist TSV.")
@click.option("--language-map", type=click.Path(),
              help="iso,glottocode,priority CSV.")
def ingest(dump, wordlist, language_map):
    """Validate inputs and print what they contain."""
    if not (dump or wordlist or language_map):
        raise click.UsageError("nothing to ingest")
    if dump:
        store = load_synset_dump(dump)
        concepts = sum(1 for s in store if s.kind == "concept")
        click.echo(f"synsets\t{len(store)}")
        click.echo(f"concept_synsets\t{concepts}")
        click.echo(f"sense_languages\t{len(store.languages)}")
    if wordlist:
        wl = load_wordlist(wordlist)
        click.echo(f"rows\t{len(wl)}")
        click.echo(f"doculects\t{len(wl.doculects)}")
        click.echo(f"concepts\t{len(wl.concepts)}")
    if language_map:
        mapping = load_language_map(language_map)
        click.echo(f"mapped_iso_codes\t{len(mapping)}")


@cli.command()
@click.option("--dump", type=click.Path(), required=True)
@click.option("--language-map", "language_map", type=click.Path(),
              required=True)
@click.option("--languages", required=True,
              help="Glottocodes under study (comma or space separated).")
@click.option("--mode", type=click.Choice(["topk", "conceptlist"]),
              default="topk", show_default=True)
@click.option("--k", type=int, default=5000, show_default=True)
@click.option("--use-g2p", is_flag=True)
@click.option("--g2p-dir", type=click.Path())
@click.option("--concept-list", type=click.Path())
@click.option("--out", type=click.Path(), required=True,
              help="Selected synsets TSV.")
@click.option("--histogram", type=click.Path(),
              help="Availability histogram TSV.")
@click.option("--out-wordlist", type=click.Path(),
              help="Materialize the selection into this wordlist TSV.")
def select(dump, language_map, languages, mode, k, use_g2p, g2p_dir,
           concept_list, out, histogram, out_wordlist):
    """Pick synsets by availability or from a concept list."""
    if mode == "conceptlist" and not concept_list:
        raise click.UsageError("--mode conceptlist needs --concept-list")
    if mode == "topk" and concept_list:
        raise click.UsageError("--concept-list implies --mode conceptlist")
    store = filter_concept_synsets(load_synset_dump(dump))
    lang_map = load_language_map(language_map)
    lemmas = load_concept_list(concept_list) if concept_list else None
    params = SelectionParams(languages=languages.replace(",", " ").split(),
                             use_g2p=use_g2p, k=k, concept_list=lemmas)
    rulesets = load_g2p_dir(g2p_dir) if g2p_dir else {}
    g2p_supported = set(rulesets) if use_g2p else set()
    counts = availability_counts(store, params, g2p_supported, lang_map)
    if histogram:
        write_histogram_tsv(availability_histogram(counts, use_g2p=use_g2p),
                            histogram)
    if mode == "topk":
        selected = select_top_k(counts, params)
        by_id = {c.synset_id: c for c in counts}
        with open(out, "w", encoding="utf-8") as handle:
            handle.write("synset_id\tn_ipa\tn_ipa_or_g2p\n")
            for sid in selected:
                c = by_id[sid]
                handle.write(f"{sid}\t{c.n_ipa}\t{c.n_ipa_or_g2p}\n")
    else:
        result = select_by_concept_list(store, lemmas, params, counts,
                                        lang_map)
        for lemma in result.unresolved:
            warn("select", f"unresolved concept {lemma!r}")
        selected = list(result.chosen)
        with open(out, "w", encoding="utf-8") as handle:
            handle.write("concept\tsynset_id\n")
            for lemma, sid in selected:
                handle.write(f"{lemma}\t{sid}\n")
    if out_wordlist:
        wordlist, report = materialize_wordlist(
            store, selected, params, rulesets, lang_map,
            g2p_supported=g2p_supported or None)
        for reason in sorted(report.dropped):
            warn("select", f"{report.dropped[reason]} rows dropped ({reason})")
        write_wordlist(wordlist, out_wordlist)


def _transcribe_impl(map_path, pre, post, in_path, out, unknown):
    ruleset = compile_ruleset(map_path, pre_path=pre, post_path=post)
    flagged = 0
    with open(in_path, encoding="utf-8") as src, \
            open(out, "w", encoding="utf-8") as dst:
        for line in src:
            word = line.strip()
            if not word:
                continue
            result = transcribe_detail(ruleset, word, unknown=unknown)
            if result.unmapped:
                flagged += 1
            dst.write(result.ipa + "\n")
    if flagged:
        warn("transcribe", f"{flagged} words with unmapped characters")


_transcribe_options = [
    click.option("--map", "map_path", type=click.Path(), required=True,
                 help="orth,phon CSV."),
    click.option("--pre", type=click.Path(), help="Pre-rewrite rules."),
    click.option("--post", type=click.Path(), help="Post-rewrite rules."),
    click.option("--in", "in_path", type=click.Path(), required=True,
                 help="One word per line."),
    click.option("--out", type=click.Path(), required=True),
    click.option("--unknown", type=click.Choice(["strict", "pass", "drop"]),
                 default="pass", show_default=True),
]


def _with_options(options):
    def wrap(func):
        for option in reversed(options):
            func = option(func)
        return func
    return wrap


@cli.command()
@_with_options(_transcribe_options)
def transcribe(map_path, pre, post, in_path, out, unknown):
    """Transcribe orthographic words to IPA with a rule table."""
    _transcribe_impl(map_path, pre, post, in_path, out, unknown)


@cli.command(name="g2p", hidden=True)
@_with_options(_transcribe_options)
def g2p_alias(map_path, pre, post, in_path, out, unknown):
    """Alias of `transcribe`."""
    _transcribe_impl(map_path, pre, post, in_path, out, unknown)


@cli.command(name="tokenize")
@click.option("--in", "in_path", type=click.Path(), required=True,
              help="One IPA string per line.")
@click.option("--out", type=click.Path(), help="Default: stdout.")
@click.option("--classes", type=click.Path(),
              help="symbol,class CSV; adds a sound-class column.")
@click.option("--strict", is_flag=True)
@click.option("--merge-diphthongs", is_flag=True)
def tokenize_cmd(in_path, out, classes, strict, merge_diphthongs):
    """Tokenize IPA strings (tab-separated tokens and optional classes)."""
    table = load_sound_classes(classes) if classes else None
    lines = []
    with open(in_path, encoding="utf-8") as src:
        for line in src:
            text = line.strip()
            if not text:
                continue
            tokens = ipa_mod.tokenize(text, strict=strict,
                                      merge_diphthongs=merge_diphthongs)
            fields = [" ".join(tokens)]
            if table is not None:
                fields.append(" ".join(to_sound_classes(tokens, table,
                                                        strict=False)))
            lines.append("\t".join(fields))
    payload = "\n".join(lines) + ("\n" if lines else "")
    if out:
        with open(out, "w", encoding="utf-8") as dst:
            dst.write(payload)
    else:
        click.echo(payload, nl=False)


@cli.command()
@click.option("--in", "in_path", type=click.Path(), required=True)
@click.option("--out", type=click.Path(), required=True)
@click.option("--method", type=click.Choice(["sca", "lexstat"]),
              default="sca", show_default=True)
@click.option("--threshold", type=float, default=None,
              help="Defaults: 0.45 sca, 0.60 lexstat.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--runs", type=int, default=1000, show_default=True,
              help="LexStat permutation count.")
def cluster(in_path, out, method, threshold, seed, runs):
    """Assign cognate ids to a wordlist."""
    wordlist = load_wordlist(in_path)
    params = ClusterParams(method=method, threshold=threshold, seed=seed)
    write_wordlist(assign_cognates(wordlist, params, runs=runs), out)


@cli.command()
@click.option("--in", "in_path", type=click.Path(), required=True,
              help="Wordlist TSV with cogids.")
@click.option("--phylip", type=click.Path())
@click.option("--nexus", type=click.Path())
@click.option("--columns", type=click.Path())
@click.option("--drop-constant", is_flag=True)
def encode(in_path, phylip, nexus, columns, drop_constant):
    """Encode cognate classes as a binary character matrix."""
    if not (phylip or nexus or columns):
        raise click.UsageError("need at least one of --phylip/--nexus/--columns")
    matrix = encode_binary(load_wordlist(in_path))
    if drop_constant:
        matrix, removed = drop_constant_columns(matrix)
        if removed:
            warn("encode", f"dropped {len(removed)} constant columns")
    if phylip:
        write_phylip(matrix, phylip)
    if nexus:
        write_nexus(matrix, nexus)
    if columns:
        write_columns_meta(matrix, columns)


@cli.command()
@click.option("--in", "in_path", type=click.Path(), required=True)
@click.option("--out", type=click.Path(), help="Default: stdout.")
def stats(in_path, out):
    """Dataset statistics (language/synset counts, coverage, AMC)."""
    result = dataset_stats(load_wordlist(in_path))
    if out:
        write_stats_tsv(result, out)
    else:
        click.echo("n_languages\tn_synsets\tlangs_per_synset\t"
                   "synsets_per_lang\tamc")
        click.echo("%d\t%d\t%.4f\t%.4f\t%.4f" % result.as_row())


@cli.command()
@click.option("--in", "in_path", type=click.Path(), required=True)
@click.option("--svg", type=click.Path())
@click.option("--tsv", type=click.Path())
def sparsity(in_path, svg, tsv):
    """Language-by-concept presence grid."""
    if not (svg or tsv):
        raise click.UsageError("need at least one of --svg/--tsv")
    grid, _, _ = sparsity_grid(load_wordlist(in_path))
    if svg:
        write_sparsity_svg(grid, svg)
    if tsv:
        write_sparsity_tsv(grid, tsv)


@cli.command()
@click.option("--inferred", type=click.Path(), required=True)
@click.option("--gold", type=click.Path(), required=True)
@click.option("--star-policy", type=click.Choice(["exclude", "contradict"]),
              default="exclude", show_default=True)
def gqd(inferred, gold, star_policy):
    """Generalized quartet distance between two Newick trees."""
    value = gq_distance(load_newick(inferred), load_newick(gold),
                        star_policy=star_policy)
    click.echo("%.6f" % value)


@cli.command()
@click.option("--pairs", type=click.Path(), required=True,
              help="TSV: glottocode, reference, candidate.")
@click.option("--out", type=click.Path(), required=True)
@click.option("--classes", type=click.Path(),
              help="Sound-class CSV (default: bundled).")
def reveng(pairs, out, classes):
    """Exact and sound-class error rates per language."""
    table = load_sound_classes(classes) if classes else None
    report = reveng_report(load_pairs_tsv(pairs), table=table)
    for code in report.flagged():
        warn("reveng", f"e2 > e1 for {code}")
    write_error_report_tsv(report, out)


@cli.command(name="ablate")
@click.option("--wordlist", "wordlist_path", type=click.Path(), required=True,
              help="Wordlist TSV with reference IPA and tokens.")
@click.option("--gold", type=click.Path(), required=True)
@click.option("--g2p-dir", type=click.Path(), required=True)
@click.option("--method", type=click.Choice(["sca", "lexstat"]),
              default="sca", show_default=True)
@click.option("--threshold", type=float, default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--runs", type=int, default=1000, show_default=True)
@click.option("--trees-dir", type=click.Path(),
              help="Directory with externally inferred <variant>.nwk trees.")
@click.option("--out", type=click.Path(), required=True)
def ablate_cmd(wordlist_path, gold, g2p_dir, method, threshold, seed, runs,
               trees_dir, out):
    """Score original / auto-token / auto-both variants against a gold tree."""
    from pathlib import Path

    external = {}
    if trees_dir:
        for variant in ABLATION_VARIANTS:
            candidate = Path(trees_dir) / f"{variant}.nwk"
            if candidate.exists():
                external[variant] = load_newick(candidate)
    results = ablate(load_wordlist(wordlist_path),
                     load_g2p_dir(g2p_dir),
                     load_newick(gold),
                     ClusterParams(method=method, threshold=threshold,
                                   seed=seed),
                     runs=runs,
                     external_trees=external,
                     warn=lambda msg: warn("ablate", msg))
    write_ablation_tsv(results, out)
    for variant in ABLATION_VARIANTS:
        click.echo("%s\t%.4f" % (variant, results[variant]))


@cli.command(name="run")
@click.option("--config", "config_path", type=click.Path(), required=True,
              help="INI pipeline configuration.")
@click.option("--seed", type=int, default=None, help="Override config seed.")
def run_cmd(config_path, seed):
    """Run the full pipeline into the configured artifact directory."""
    config = load_config(config_path)
    if seed is not None:
        config.seed = seed
    out = run_pipeline(config, warn=lambda msg: warn("run", msg))
    click.echo(str(out))


def main(argv=None):
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.exceptions.Abort:
        return 1
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except CogforgeError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
